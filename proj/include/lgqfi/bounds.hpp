#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "lgqfi/kernels.hpp"

namespace lgqfi {

// Lower bounds on F_Q from LGI-type combinations. beta may be +infinity, in
// which case y = 2 tau / beta = 0 and the gamma functions take their
// zero-temperature limits.

namespace detail {
inline double gamma_value(const KernelFamily& k, double tau, double beta) {
  if (!(tau > 0)) throw std::invalid_argument("bound: tau must be > 0");
  if (!(beta > 0)) throw std::invalid_argument("bound: beta must be > 0");
  const double y = 2.0 * tau / beta;
  if (y == 0.0) return gamma_zero_temperature(k);
  switch (k.kind) {
    case KernelFamily::Kind::lgi: return gamma_lgi(y).value;
    case KernelFamily::Kind::lgi_p: return gamma_p(k.p, y).value;
    case KernelFamily::Kind::two_time: return gamma_tilde(y).value;
  }
  return 0.0;
}
}  // namespace detail

inline double thermal_time(double beta) { return std::sqrt(2.0 / 7.0) * beta; }

/// 8 [K - <Q^2>], valid for stationary pure states.
inline double bound_pure(double K, double q2) { return 8.0 * (K - q2); }

/// [K - <Q^2>] / gamma_lgi(2 tau / beta).
inline double bound_thermal(double K, double q2, double tau, double beta) {
  return (K - q2) / detail::gamma_value(KernelFamily::lgi(), tau, beta);
}

/// [K - 1] / gamma_lgi(2 tau / beta); weaker, needs only |Q| <= 1.
inline double bound_thermal_weak(double K, double tau, double beta) { return bound_thermal(K, 1.0, tau, beta); }

/// 7 [K(z tau_th) - <Q^2>] / (2 z^2) where K is measured at tau = z tau_th.
inline double bound_thermal_time(double K_at_z, double q2, double z) {
  if (!(z >= 1)) throw std::invalid_argument("bound_thermal_time: z must be >= 1");
  return 7.0 * (K_at_z - q2) / (2.0 * z * z);
}

/// [<Q^2> - C(tau)] / gamma~(2 tau / beta); needs only two measurement times.
inline double bound_two_time(double q2, double C_tau, double tau, double beta) {
  if (tau == 0.0) return 0.0;
  return (q2 - C_tau) / detail::gamma_value(KernelFamily::two_time(), tau, beta);
}

/// [K_p - (p - 2) <Q^2>] / gamma_p(2 tau / beta).
inline double bound_Kp(double Kp, double q2, int p, double tau, double beta) {
  if (p < 3) throw std::invalid_argument("bound_Kp: p must be >= 3");
  if (p == 3) return bound_thermal(Kp, q2, tau, beta);
  return (Kp - (p - 2) * q2) / detail::gamma_value(KernelFamily::lgi_p(p), tau, beta);
}

/// Largest QFI of a k-producible state of N qubits for Q~ = J_z:
/// s k^2 + r^2 with s = floor(N / k), r = N - s k.
inline double producibility_bound(int n_sites, int k) {
  const int s = n_sites / k;
  const int r = n_sites - s * k;
  return static_cast<double>(s) * k * k + static_cast<double>(r) * r;
}

/// Entanglement depth certified by F_Q[Q~]: k + 1 for the largest k whose
/// producibility bound is exceeded, or nothing if even k = 1 is not.
inline std::optional<int> depth_witness(double fq_tilde, int n_sites, double slack = 1e-9) {
  if (n_sites < 1) throw std::invalid_argument("depth_witness: N must be >= 1");
  std::optional<int> depth;
  for (int k = 1; k < n_sites; ++k)
    if (fq_tilde > producibility_bound(n_sites, k) + slack) depth = k + 1;
  return depth;
}

}  // namespace lgqfi
