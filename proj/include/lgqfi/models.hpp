#pragma once

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lgqfi/linalg.hpp"

namespace lgqfi {

// Spin ordering: site 1 is the most significant qubit of the basis index, and
// basis state 0 is |up up ... up> with sigma_z = +1 on every site.

namespace pauli {
inline Matrix id() { return Matrix::Identity(2, 2); }
inline Matrix x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
inline Matrix y() {
  Matrix m(2, 2);
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return m;
}
inline Matrix z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}
}  // namespace pauli

/// Single-site operator on site `site` (1-based) of an N-spin chain.
inline Matrix site_operator(int n_sites, int site, const Matrix& local) {
  Matrix out = Matrix::Identity(1, 1);
  for (int a = 1; a <= n_sites; ++a) out = kron(out, a == site ? local : pauli::id());
  return out;
}

struct ModelPair {
  Operator hamiltonian;
  Operator observable;
};

enum class Boundary { open, periodic };

inline ModelPair build_qubit(double epsilon, double theta) {
  if (!(epsilon > 0)) throw std::invalid_argument("qubit: epsilon must be > 0");
  if (!(theta >= 0 && theta <= std::numbers::pi)) throw std::invalid_argument("qubit: theta must lie in [0, pi]");
  // Azimuth is fixed to zero: n = (sin theta, 0, cos theta).
  return {Operator(0.5 * epsilon * pauli::z()),
          Operator(std::sin(theta) * pauli::x() + std::cos(theta) * pauli::z())};
}

struct TfimParams {
  int n_sites = 8;
  double coupling = 1.0;  // J
  double field = 0.5;     // h
  Boundary boundary = Boundary::open;
  int site = 0;  // 0 selects ceil(N/2)
};

inline int tfim_site(const TfimParams& p) { return p.site == 0 ? (p.n_sites + 1) / 2 : p.site; }

/// H = -J sum sigma^z_a sigma^z_{a+1} - h sum sigma^x_a, Q = sigma^z_site.
inline ModelPair build_tfim(const TfimParams& p) {
  if (p.n_sites < 2 || p.n_sites > 12) throw std::invalid_argument("tfim: N must lie in [2, 12]");
  if (!(p.coupling > 0)) throw std::invalid_argument("tfim: J must be > 0");
  if (p.field == 0 || !std::isfinite(p.field)) throw std::invalid_argument("tfim: h must be nonzero");
  const int site = tfim_site(p);
  if (site < 1 || site > p.n_sites) throw std::invalid_argument("tfim: site index out of range");

  const int n = p.n_sites;
  const Eigen::Index dim = Eigen::Index{1} << n;
  Matrix h = Matrix::Zero(dim, dim);
  const int bonds = p.boundary == Boundary::open ? n - 1 : n;
  // Diagonal Ising part and single-flip field part, written directly in the
  // computational basis.
  for (Eigen::Index s = 0; s < dim; ++s) {
    auto spin = [&](int a) { return ((s >> (n - a)) & 1) ? -1.0 : 1.0; };
    double diag = 0.0;
    for (int b = 1; b <= bonds; ++b) diag -= p.coupling * spin(b) * spin(b % n + 1);
    h(s, s) = diag;
    for (int a = 1; a <= n; ++a) h(s ^ (Eigen::Index{1} << (n - a)), s) -= p.field;
  }
  return {Operator(h), Operator(site_operator(n, site, pauli::z()))};
}

/// Ordered-phase magnetization of the infinite chain, zero for |h| >= J.
inline double tfim_reference_magnetization(double coupling, double field) {
  const double r = field * field / (coupling * coupling);
  return r < 1 ? std::pow(1 - r, 0.125) : 0.0;
}

/// Q = (1/N) sum_a sigma^z_a, diagonal in the computational basis.
inline Operator build_collective(int n_sites) {
  if (n_sites < 1 || n_sites > 12) throw std::invalid_argument("collective: N must lie in [1, 12]");
  const Eigen::Index dim = Eigen::Index{1} << n_sites;
  Matrix q = Matrix::Zero(dim, dim);
  for (Eigen::Index s = 0; s < dim; ++s) {
    int up = 0;
    for (int a = 0; a < n_sites; ++a) up += ((s >> a) & 1) ? 0 : 1;
    q(s, s) = (2.0 * up - n_sites) / n_sites;
  }
  return Operator(q);
}

/// Q~ = N Q / 2 = J_z.
inline Operator build_collective_rescaled(int n_sites) { return build_collective(n_sites) * (0.5 * n_sites); }

struct GhzParams {
  int n_sites = 4;
  double coupling = 1.0;  // J
  double omega = 1.0;     // Omega
};

/// H = -J sum_{a<N} sigma^z_a sigma^z_{a+1} + (Omega/2) prod_a sigma^x_a with the
/// collective Q.
inline ModelPair build_ghz(const GhzParams& p) {
  if (p.n_sites < 2 || p.n_sites > 12) throw std::invalid_argument("ghz: N must lie in [2, 12]");
  if (!(p.coupling > 0) || !(p.omega > 0)) throw std::invalid_argument("ghz: J and Omega must be > 0");
  const int n = p.n_sites;
  const Eigen::Index dim = Eigen::Index{1} << n;
  Matrix h = Matrix::Zero(dim, dim);
  for (Eigen::Index s = 0; s < dim; ++s) {
    auto spin = [&](int a) { return ((s >> (n - a)) & 1) ? -1.0 : 1.0; };
    double diag = 0.0;
    for (int a = 1; a < n; ++a) diag -= p.coupling * spin(a) * spin(a + 1);
    h(s, s) = diag;
    h((dim - 1) ^ s, s) += 0.5 * p.omega;  // prod sigma^x flips every spin
  }
  return {Operator(h), build_collective(n)};
}

/// 2x2 reduction in the basis {|GHZ+>, |GHZ->}: H = -J(N-1) + (Omega/2) tau_z, Q = tau_x.
inline ModelPair build_ghz_effective(const GhzParams& p) {
  if (p.n_sites < 2) throw std::invalid_argument("ghz_effective: N must be >= 2");
  if (!(p.coupling > 0) || !(p.omega > 0)) throw std::invalid_argument("ghz_effective: J and Omega must be > 0");
  Matrix h = -p.coupling * (p.n_sites - 1) * pauli::id() + 0.5 * p.omega * pauli::z();
  return {Operator(h), Operator(pauli::x())};
}

/// (|up...up> + sign |down...down>) / sqrt 2.
inline Vector ghz_state(int n_sites, int sign = +1) {
  const Eigen::Index dim = Eigen::Index{1} << n_sites;
  Vector v = Vector::Zero(dim);
  v(0) = 1.0 / std::numbers::sqrt2;
  v(dim - 1) = sign / std::numbers::sqrt2;
  return v;
}

struct GhzSubspaceCheck {
  double leakage;         // norm of H|GHZ+-> outside the GHZ subspace
  double effective_error; // max |<GHZ_i|H|GHZ_j> - H_eff(i,j)|
};

inline GhzSubspaceCheck validate_ghz_subspace(const GhzParams& p) {
  const auto full = build_ghz(p);
  const auto eff = build_ghz_effective(p);
  Matrix basis(Eigen::Index{1} << p.n_sites, 2);
  basis.col(0) = ghz_state(p.n_sites, +1);
  basis.col(1) = ghz_state(p.n_sites, -1);
  const Matrix hb = full.hamiltonian.matrix() * basis;
  const Matrix restricted = basis.adjoint() * hb;
  const Matrix outside = hb - basis * restricted;
  return {outside.norm(), max_abs(restricted - eff.hamiltonian.matrix())};
}

/// Index of the eigenvector with the largest overlap with `target`.
inline Eigen::Index find_eigen_index(const Eigensystem& eig, const Vector& target) {
  Eigen::Index best = 0;
  double overlap = -1.0;
  for (Eigen::Index n = 0; n < eig.dim(); ++n) {
    const double o = std::abs(eig.basis.col(n).dot(target));
    if (o > overlap) {
      overlap = o;
      best = n;
    }
  }
  return best;
}

struct CustomModel {
  ModelPair model;
  double observable_norm;
  std::vector<std::string> warnings;
};

namespace detail {
inline Matrix read_matrix(const nlohmann::json& j, const char* key, Eigen::Index dim) {
  if (!j.contains(key)) throw std::invalid_argument(std::string("custom model: missing field '") + key + "'");
  const auto& arr = j.at(key);
  if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != dim * dim) {
    throw std::invalid_argument(std::string("custom model: field '") + key + "' must hold dim*dim = " +
                                std::to_string(dim * dim) + " [re, im] pairs");
  }
  Matrix m(dim, dim);
  for (Eigen::Index k = 0; k < dim * dim; ++k) {
    const auto& e = arr[static_cast<std::size_t>(k)];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
      throw std::invalid_argument(std::string("custom model: entry ") + std::to_string(k) + " of '" + key +
                                  "' is not a [re, im] pair");
    }
    m(k / dim, k % dim) = cplx(e[0].get<double>(), e[1].get<double>());
  }
  return m;
}
}  // namespace detail

/// Parses the custom model format: {"dim": d, "H": [[re, im], ...], "Q": [...]},
/// both matrices row-major with d*d entries.
inline CustomModel parse_custom(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.at("dim").is_number_integer())
    throw std::invalid_argument("custom model: missing integer field 'dim'");
  const auto dim = j.at("dim").get<Eigen::Index>();
  if (dim < 1) throw std::invalid_argument("custom model: dim must be >= 1");
  Matrix h = detail::read_matrix(j, "H", dim);
  Matrix q = detail::read_matrix(j, "Q", dim);
  CustomModel out{{Operator(h), Operator(q)}, 0.0, {}};
  out.observable_norm = operator_norm(out.model.observable);
  const auto& tol = default_tolerances();
  if (out.observable_norm > 1 + tol.norm_warn) {
    throw std::invalid_argument("custom model: observable norm " + std::to_string(out.observable_norm) +
                                " exceeds 1");
  }
  if (out.observable_norm > 1) out.warnings.push_back("observable norm exceeds 1 within tolerance");
  return out;
}

inline CustomModel load_custom(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("custom model: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("custom model: parse error in '" + path + "': " + e.what());
  }
  return parse_custom(j);
}

}  // namespace lgqfi
