#pragma once

#include "lgqfi/tolerances.hpp"
#include "lgqfi/linalg.hpp"
#include "lgqfi/models.hpp"
#include "lgqfi/kernels.hpp"
#include "lgqfi/spectral.hpp"
#include "lgqfi/bounds.hpp"
#include "lgqfi/response.hpp"
#include "lgqfi/report.hpp"
#include "lgqfi/random.hpp"
#include "lgqfi/measurement.hpp"
#include "lgqfi/config.hpp"
#include "lgqfi/scenarios.hpp"
