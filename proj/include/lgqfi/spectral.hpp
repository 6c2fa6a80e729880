#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "lgqfi/kernels.hpp"
#include "lgqfi/linalg.hpp"

namespace lgqfi {

inline constexpr double kInfiniteBeta = std::numeric_limits<double>::infinity();

struct StationaryState {
  enum class Kind { thermal, pure };

  Kind kind = Kind::thermal;
  double beta = kInfiniteBeta;  // thermal only; infinity is the ground manifold
  Eigen::Index index = 0;       // pure only
  RealVector weights;           // p_n, aligned with the ascending energies

  bool is_thermal() const { return kind == Kind::thermal; }
};

/// Gibbs weights with the minimum energy subtracted before exponentiation.
/// beta = infinity gives the uniform mixture over the ground manifold.
inline StationaryState make_thermal_state(const Eigensystem& eig, double beta,
                                          const Tolerances& tol = default_tolerances()) {
  if (!(beta > 0)) throw std::invalid_argument("thermal state: beta must be > 0, got " + std::to_string(beta));
  StationaryState s;
  s.kind = StationaryState::Kind::thermal;
  s.beta = beta;
  const Eigen::Index n = eig.dim();
  s.weights = RealVector::Zero(n);
  const double e0 = eig.energies(0);
  if (std::isinf(beta)) {
    const double scale = std::max(1.0, eig.energies.cwiseAbs().maxCoeff());
    for (Eigen::Index k = 0; k < n; ++k)
      if (eig.energies(k) - e0 <= tol.ground_degeneracy * scale) s.weights(k) = 1.0;
  } else {
    for (Eigen::Index k = 0; k < n; ++k) s.weights(k) = std::exp(-beta * (eig.energies(k) - e0));
  }
  s.weights /= s.weights.sum();
  return s;
}

inline StationaryState make_pure_state(const Eigensystem& eig, Eigen::Index index) {
  if (index < 0 || index >= eig.dim())
    throw std::invalid_argument("pure state: eigen index " + std::to_string(index) + " out of range [0, " +
                                std::to_string(eig.dim()) + ")");
  StationaryState s;
  s.kind = StationaryState::Kind::pure;
  s.index = index;
  s.weights = RealVector::Zero(eig.dim());
  s.weights(index) = 1.0;
  return s;
}

/// Density matrix sum_n p_n |n><n| in the original basis.
inline Matrix density_matrix(const Eigensystem& eig, const StationaryState& s) {
  return eig.basis * s.weights.cast<cplx>().asDiagonal() * eig.basis.adjoint();
}

/// One (n, m) term of the spectral sums.
struct Transition {
  Eigen::Index n, m;
  double q2;     // |Q_nm|^2
  double omega;  // E_n - E_m
  double pn, pm;
};

/// Weights, matrix elements and Bohr frequencies of one (H, Q, state)
/// instance. Terms with (p_n + p_m) |Q_nm|^2 == 0 contribute to no sum and
/// are dropped from the transition list.
class SpectralData {
 public:
  SpectralData(const Eigensystem& eig, const Operator& q, StationaryState state)
      : energies_(eig.energies), elements_(to_eigenbasis(q, eig)), state_(std::move(state)) {
    if (state_.weights.size() != eig.dim()) throw std::invalid_argument("SpectralData: state dimension mismatch");
    const Eigen::Index d = eig.dim();
    for (Eigen::Index n = 0; n < d; ++n) {
      for (Eigen::Index m = 0; m < d; ++m) {
        const double q2 = std::norm(elements_(n, m));
        const double pn = state_.weights(n);
        const double pm = state_.weights(m);
        if (q2 == 0.0 || pn + pm == 0.0) continue;
        transitions_.push_back({n, m, q2, energies_(n) - energies_(m), pn, pm});
      }
    }
  }

  const RealVector& energies() const { return energies_; }
  const Matrix& elements() const { return elements_; }
  const StationaryState& state() const { return state_; }
  const RealVector& weights() const { return state_.weights; }
  const std::vector<Transition>& transitions() const { return transitions_; }
  Eigen::Index dim() const { return energies_.size(); }
  double omega(Eigen::Index n, Eigen::Index m) const { return energies_(n) - energies_(m); }

 private:
  RealVector energies_;
  Matrix elements_;
  StationaryState state_;
  std::vector<Transition> transitions_;
};

/// <Q^2> = sum_n p_n sum_m |Q_nm|^2 (row contraction).
inline double expect_q2(const SpectralData& sd) {
  double acc = 0.0;
  for (Eigen::Index n = 0; n < sd.dim(); ++n) acc += sd.weights()(n) * sd.elements().row(n).squaredNorm();
  return acc;
}

/// <Q^2> = sum_m sum_n p_n |Q_nm|^2 (column contraction), for cross-checks.
inline double expect_q2_by_columns(const SpectralData& sd) {
  double acc = 0.0;
  for (Eigen::Index m = 0; m < sd.dim(); ++m)
    for (Eigen::Index n = 0; n < sd.dim(); ++n) acc += sd.weights()(n) * std::norm(sd.elements()(n, m));
  return acc;
}

inline double expect_q(const SpectralData& sd) {
  double acc = 0.0;
  for (Eigen::Index n = 0; n < sd.dim(); ++n) acc += sd.weights()(n) * sd.elements()(n, n).real();
  return acc;
}

/// C(tau) = 1/2 <{Q(tau), Q}> = sum 1/2 (p_n + p_m) |Q_nm|^2 cos(omega_nm tau).
inline double correlator(const SpectralData& sd, double tau) {
  double acc = 0.0;
  for (const auto& t : sd.transitions()) acc += 0.5 * (t.pn + t.pm) * t.q2 * std::cos(t.omega * tau);
  return acc;
}

/// K_p(tau) = (p - 1) C(tau) - C((p - 1) tau).
inline double lgi_Kp(const SpectralData& sd, int p, double tau) {
  if (p < 3) throw std::invalid_argument("lgi_Kp: p must be >= 3, got " + std::to_string(p));
  return (p - 1) * correlator(sd, tau) - correlator(sd, (p - 1) * tau);
}

/// K(tau) = 2 C(tau) - C(2 tau).
inline double lgi_K(const SpectralData& sd, double tau) { return lgi_Kp(sd, 3, tau); }

/// K(tau) - <Q^2> as the sum of kappa_nm = 1/2 (p_n + p_m) |Q_nm|^2 h(omega_nm tau).
inline double lgi_excess_spectral(const SpectralData& sd, double tau) {
  double acc = 0.0;
  for (const auto& t : sd.transitions()) acc += 0.5 * (t.pn + t.pm) * t.q2 * h_kernel(t.omega * tau);
  return acc;
}

inline double qfi_term(const Transition& t) { return 2.0 * (t.pn - t.pm) * (t.pn - t.pm) / (t.pn + t.pm) * t.q2; }

/// F_Q = sum f_nm, f_nm = 2 (p_n - p_m)^2 / (p_n + p_m) |Q_nm|^2.
inline double qfi(const SpectralData& sd, const Tolerances& tol = default_tolerances()) {
  double acc = 0.0;
  for (const auto& t : sd.transitions())
    if (t.pn + t.pm > tol.qfi_skip) acc += qfi_term(t);
  return acc;
}

/// Pure-state QFI 4 (<Q^2> - <Q>^2).
inline double qfi_pure(const Vector& psi, const Operator& q, const Tolerances& tol = default_tolerances()) {
  if (psi.size() != q.dim()) throw std::invalid_argument("qfi_pure: dimension mismatch");
  const double norm = psi.norm();
  if (std::abs(norm - 1.0) > tol.normalization)
    throw std::invalid_argument("qfi_pure: state is not normalized (norm " + std::to_string(norm) + ")");
  const Vector qpsi = q.matrix() * psi;
  const double q1 = psi.dot(qpsi).real();
  const double q2 = qpsi.squaredNorm();
  return 4.0 * (q2 - q1 * q1);
}

}  // namespace lgqfi
