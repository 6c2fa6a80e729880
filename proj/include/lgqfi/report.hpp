#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lgqfi/bounds.hpp"
#include "lgqfi/response.hpp"
#include "lgqfi/spectral.hpp"

namespace lgqfi {

/// Thrown when a computed bound contradicts the theorem it implements. This
/// always indicates an implementation defect, never a physics outcome.
class BoundViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct LowerBound {
  double raw = 0;
  double value = 0;  // max(raw, 0)
  bool uninformative = true;
  double slack = 0;  // F_Q - raw

  static LowerBound make(double raw, double fq) { return {raw, std::max(raw, 0.0), !(raw > 0), fq - raw}; }
};

struct BoundOptions {
  bool pure = true;
  bool thermal = true;
  bool thermal_weak = true;
  bool two_time = true;
  bool fsum = true;
  std::vector<int> kp;             // p values >= 3
  std::optional<int> collective_n; // Q = Q~ * 2 / N, enables the depth witness
};

struct BoundReport {
  double tau = 0;
  double beta = kInfiniteBeta;
  double tau_th = kInfiniteBeta;
  double fq = 0;
  double K = 0;
  double q2 = 0;
  double c_tau = 0;
  double c_2tau = 0;
  std::optional<LowerBound> lower_pure;
  std::optional<LowerBound> lower_thermal;
  std::optional<LowerBound> lower_thermal_weak;
  std::optional<LowerBound> lower_thermal_time;  // only when tau >= tau_th
  std::optional<LowerBound> lower_two_time;
  std::map<int, LowerBound> lower_kp;
  std::optional<double> fsum_upper;
  std::optional<double> fsum_slack;  // fsum_upper - F_Q
  std::optional<double> fq_tilde;
  std::optional<int> depth_witness;

  double best_lower() const {
    double best = 0.0;
    for (const auto* b : {&lower_pure, &lower_thermal, &lower_thermal_weak, &lower_two_time})
      if (*b) best = std::max(best, (*b)->value);
    for (const auto& [p, b] : lower_kp) best = std::max(best, b.value);
    return best;
  }
};

/// Evaluates every enabled bound at one tau and checks the bound chain
/// lower <= F_Q <= fsum_upper, throwing BoundViolation otherwise.
inline BoundReport make_bound_report(const SpectralData& sd, double tau, const BoundOptions& opt = {},
                                     const Tolerances& tol = default_tolerances()) {
  if (!(tau > 0)) throw std::invalid_argument("bound report: tau must be > 0");
  BoundReport r;
  const auto& state = sd.state();
  r.tau = tau;
  r.beta = state.is_thermal() ? state.beta : kInfiniteBeta;
  r.tau_th = thermal_time(r.beta);
  r.fq = qfi(sd, tol);
  r.q2 = expect_q2(sd);
  r.c_tau = correlator(sd, tau);
  r.c_2tau = correlator(sd, 2 * tau);
  r.K = 2 * r.c_tau - r.c_2tau;

  if (opt.pure && std::isinf(r.beta)) r.lower_pure = LowerBound::make(bound_pure(r.K, r.q2), r.fq);
  if (opt.thermal) r.lower_thermal = LowerBound::make(bound_thermal(r.K, r.q2, tau, r.beta), r.fq);
  if (opt.thermal_weak) r.lower_thermal_weak = LowerBound::make(bound_thermal_weak(r.K, tau, r.beta), r.fq);
  if (opt.thermal && std::isfinite(r.beta) && tau >= r.tau_th)
    r.lower_thermal_time = LowerBound::make(bound_thermal_time(r.K, r.q2, tau / r.tau_th), r.fq);
  if (opt.two_time) r.lower_two_time = LowerBound::make(bound_two_time(r.q2, r.c_tau, tau, r.beta), r.fq);
  for (int p : opt.kp) r.lower_kp[p] = LowerBound::make(bound_Kp(lgi_Kp(sd, p, tau), r.q2, p, tau, r.beta), r.fq);
  if (opt.fsum && state.is_thermal()) {
    r.fsum_upper = fsum_upper(build_spectrum(sd, tol));
    r.fsum_slack = *r.fsum_upper - r.fq;
  }
  if (opt.collective_n) {
    const int n = *opt.collective_n;
    r.fq_tilde = 0.25 * n * n * r.fq;
    r.depth_witness = depth_witness(*r.fq_tilde, n);
  }

  const double slack = tol.report_slack;
  auto check = [&](const std::optional<LowerBound>& b, const char* name) {
    if (b && b->raw > r.fq + slack)
      throw BoundViolation(std::string("bound chain violated: ") + name + " lower bound " + std::to_string(b->raw) +
                           " exceeds F_Q " + std::to_string(r.fq) + " at tau " + std::to_string(tau));
  };
  check(r.lower_pure, "pure");
  check(r.lower_thermal, "thermal");
  check(r.lower_thermal_weak, "thermal_weak");
  check(r.lower_thermal_time, "thermal_time");
  check(r.lower_two_time, "two_time");
  for (const auto& [p, b] : r.lower_kp) check(b, ("K_" + std::to_string(p)).c_str());
  if (r.fsum_upper && *r.fsum_upper < r.fq - slack)
    throw BoundViolation("bound chain violated: f-sum upper bound " + std::to_string(*r.fsum_upper) +
                         " below F_Q " + std::to_string(r.fq));
  return r;
}

struct BestBound {
  double value = 0;
  double tau = 0;
  std::vector<BoundReport> reports;
};

/// Scans a tau grid and keeps the first tau maximizing the best lower bound.
inline BestBound best_bound(const SpectralData& sd, const std::vector<double>& tau_grid, const BoundOptions& opt = {}) {
  if (tau_grid.empty()) throw std::invalid_argument("best_bound: empty tau grid");
  BestBound out;
  out.reports.reserve(tau_grid.size());
  bool first = true;
  for (double tau : tau_grid) {
    out.reports.push_back(make_bound_report(sd, tau, opt));
    const double v = out.reports.back().best_lower();
    if (first || v > out.value) {
      out.value = v;
      out.tau = tau;
      first = false;
    }
  }
  return out;
}

inline nlohmann::json to_json(const LowerBound& b) {
  return {{"value", b.value}, {"raw", b.raw}, {"uninformative", b.uninformative}, {"slack", b.slack}};
}

inline nlohmann::json to_json(const BoundReport& r) {
  using nlohmann::json;
  auto opt = [](const std::optional<LowerBound>& b) { return b ? to_json(*b) : json(nullptr); };
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json kp = json::object();
  for (const auto& [p, b] : r.lower_kp) kp[std::to_string(p)] = to_json(b);
  return {
      {"tau", r.tau},
      {"beta", num(r.beta)},
      {"tau_th", num(r.tau_th)},
      {"F_Q", r.fq},
      {"K", r.K},
      {"Q2", r.q2},
      {"C_tau", r.c_tau},
      {"C_2tau", r.c_2tau},
      {"lower_pure", opt(r.lower_pure)},
      {"lower_thermal", opt(r.lower_thermal)},
      {"lower_thermal_weak", opt(r.lower_thermal_weak)},
      {"lower_thermal_time", opt(r.lower_thermal_time)},
      {"lower_two_time", opt(r.lower_two_time)},
      {"lower_Kp", kp},
      {"fsum_upper", r.fsum_upper ? num(*r.fsum_upper) : json(nullptr)},
      {"fsum_slack", r.fsum_slack ? num(*r.fsum_slack) : json(nullptr)},
      {"F_Q_tilde", r.fq_tilde ? json(*r.fq_tilde) : json(nullptr)},
      {"depth_witness", r.depth_witness ? json(*r.depth_witness) : json(nullptr)},
  };
}

}  // namespace lgqfi
