#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "lgqfi/kernels.hpp"
#include "lgqfi/linalg.hpp"
#include "lgqfi/spectral.hpp"

namespace lgqfi {

/// One positive-frequency line of the discrete response spectrum.
///   w_S     : S_QQ weight at +delta (absorption, lower level populated)
///   w_S_neg : S_QQ weight at -delta (emission, upper level populated)
///   w_chi   : chi''_QQ weight at +delta, -pi (p_lower - p_upper) |Q|^2
struct SpectralLine {
  double delta;
  double w_S;
  double w_S_neg;
  double w_chi;
};

struct TransitionSpectrum {
  std::vector<SpectralLine> lines;  // ascending delta, all > line_merge
  double zero_w_S = 0;              // S_QQ weight at omega = 0 (diagonal and degenerate pairs)
  double beta = kInfiniteBeta;
  bool thermal = false;
  double gap = 0;  // smallest delta with nonzero weight, 0 if none

  double max_delta() const { return lines.empty() ? 0.0 : lines.back().delta; }
};

inline TransitionSpectrum build_spectrum(const SpectralData& sd, const Tolerances& tol = default_tolerances()) {
  TransitionSpectrum ts;
  ts.thermal = sd.state().is_thermal();
  ts.beta = ts.thermal ? sd.state().beta : kInfiniteBeta;

  std::vector<SpectralLine> raw;
  const Eigen::Index d = sd.dim();
  for (Eigen::Index n = 0; n < d; ++n) {
    for (Eigen::Index m = n; m < d; ++m) {
      const double q2 = std::norm(sd.elements()(n, m));
      const double pn = sd.weights()(n);
      const double pm = sd.weights()(m);
      const double delta = sd.energies()(m) - sd.energies()(n);  // >= 0, energies ascending
      if (delta <= tol.line_merge) {
        ts.zero_w_S += (n == m ? pn : pn + pm) * q2;
        continue;
      }
      if (q2 == 0.0) continue;
      raw.push_back({delta, pn * q2, pm * q2, -std::numbers::pi * (pn - pm) * q2});
    }
  }
  std::sort(raw.begin(), raw.end(), [](const SpectralLine& a, const SpectralLine& b) { return a.delta < b.delta; });
  for (const auto& l : raw) {
    if (!ts.lines.empty() && l.delta - ts.lines.back().delta <= tol.line_merge) {
      auto& back = ts.lines.back();
      back.w_S += l.w_S;
      back.w_S_neg += l.w_S_neg;
      back.w_chi += l.w_chi;
    } else {
      ts.lines.push_back(l);
    }
  }
  for (const auto& l : ts.lines) {
    if (l.w_S > 0 || l.w_S_neg > 0 || l.w_chi != 0) {
      ts.gap = l.delta;
      break;
    }
  }
  return ts;
}

namespace detail {
inline void require_thermal(const TransitionSpectrum& ts, const char* what) {
  if (!ts.thermal) throw std::invalid_argument(std::string(what) + ": requires a thermal spectrum");
}
}  // namespace detail

/// F_Q = -(4/pi) sum tanh(beta delta / 2) w_chi.
inline double qfi_response(const TransitionSpectrum& ts) {
  detail::require_thermal(ts, "qfi_response");
  double acc = 0.0;
  for (const auto& l : ts.lines) acc += std::tanh(0.5 * ts.beta * l.delta) * l.w_chi;
  return -4.0 / std::numbers::pi * acc;
}

/// f-sum upper bound -(2 beta / pi) sum delta w_chi; infinite at beta = inf.
inline double fsum_upper(const TransitionSpectrum& ts) {
  detail::require_thermal(ts, "fsum_upper");
  double acc = 0.0;
  for (const auto& l : ts.lines) acc += l.delta * l.w_chi;
  if (std::isinf(ts.beta)) return acc == 0.0 ? 0.0 : kInfiniteBeta;
  return -2.0 * ts.beta / std::numbers::pi * acc;
}

/// chi'(omega) from the discrete chi'' by Kramers-Kronig:
/// (1/pi) sum w_chi 2 delta / (delta^2 - omega^2).
inline double chi_real(const TransitionSpectrum& ts, double omega) {
  double acc = 0.0;
  for (const auto& l : ts.lines) acc += l.w_chi * 2.0 * l.delta / (l.delta * l.delta - omega * omega);
  return acc / std::numbers::pi;
}

/// beta lim omega^2 chi'(omega), the high-frequency tail. By Kramers-Kronig
/// this is the same discrete sum as fsum_upper.
inline double high_frequency_tail(const TransitionSpectrum& ts) { return fsum_upper(ts); }

/// M_n = -(1/pi) sum delta^n w_chi.
inline double spectral_moment(const TransitionSpectrum& ts, int n) {
  if (n < 2) throw std::invalid_argument("spectral_moment: n must be >= 2");
  double acc = 0.0;
  for (const auto& l : ts.lines) acc += std::pow(l.delta, n) * l.w_chi;
  return -acc / std::numbers::pi;
}

namespace detail {
inline void require_pure(const SpectralData& sd, const char* what) {
  if (sd.state().kind != StationaryState::Kind::pure)
    throw std::invalid_argument(std::string(what) + ": requires a pure eigenstate");
}
}  // namespace detail

/// sum_m |<s|Q|m>|^2 (E_m - E_s)^2 for the pure state |s>.
inline double m2_spectral(const SpectralData& sd) {
  detail::require_pure(sd, "m2_spectral");
  const Eigen::Index s = sd.state().index;
  double acc = 0.0;
  for (Eigen::Index m = 0; m < sd.dim(); ++m) {
    const double w = sd.energies()(m) - sd.energies()(s);
    acc += std::norm(sd.elements()(s, m)) * w * w;
  }
  return acc;
}

/// <psi|[H,Q]^dagger [H,Q]|psi>.
inline double m2_commutator(const Operator& h, const Operator& q, const Vector& psi) {
  const Matrix comm = h.matrix() * q.matrix() - q.matrix() * h.matrix();
  return (comm * psi).squaredNorm();
}

/// M_n of the ground state through the chi'' lines.
inline double mn_moment(const SpectralData& sd, int n) {
  detail::require_pure(sd, "mn_moment");
  return spectral_moment(build_spectrum(sd), n);
}

inline double m2_moment(const SpectralData& sd) { return mn_moment(sd, 2); }

struct GappedMomentCheck {
  double mn = 0;
  double m2 = 0;
  double gap = 0;
  double lgi_bound = 0;  // gap^(n-2) [K - <Q^2>] / tau^2
  bool applicable = false;
  bool holds = false;  // M_n >= gap^(n-2) M_2 >= lgi_bound
};

inline GappedMomentCheck check_gapped_moment(const SpectralData& sd, int n, double K_excess, double tau,
                                             double slack = 1e-9) {
  detail::require_pure(sd, "check_gapped_moment");
  const auto ts = build_spectrum(sd);
  GappedMomentCheck c;
  c.mn = spectral_moment(ts, n);
  c.m2 = spectral_moment(ts, 2);
  c.gap = ts.gap;
  c.applicable = ts.gap > default_tolerances().line_merge;
  if (!c.applicable) return c;
  const double g = std::pow(c.gap, n - 2);
  c.lgi_bound = g * K_excess / (tau * tau);
  const double scale = std::max(1.0, std::abs(c.mn));
  c.holds = c.mn >= g * c.m2 - slack * scale && g * c.m2 >= c.lgi_bound - slack * scale;
  return c;
}

inline double holevo_kernel(double beta, double delta) {
  if (delta == 0.0) return 1.0;
  if (std::isinf(beta)) return 0.0;
  const double x = beta * delta;
  return x / std::expm1(x);
}

/// H_QQ = sum_{delta >= 0} w_S beta delta / (e^{beta delta} - 1), with the
/// zero-frequency weight included at kernel value 1 unless disabled.
inline double holevo(const TransitionSpectrum& ts, bool include_zero_frequency = true) {
  detail::require_thermal(ts, "holevo");
  double acc = include_zero_frequency ? ts.zero_w_S : 0.0;
  for (const auto& l : ts.lines) acc += l.w_S * holevo_kernel(ts.beta, l.delta);
  return acc;
}

/// Pair-ratio function whose maximum over (0, Omega*] is Gamma_H:
/// (1 + e^{-beta w}) max(h(w tau), 0) (e^{beta w} - 1) / (beta w).
inline double gamma_H_ratio(double beta, double tau, double w) {
  const double h = std::max(h_kernel(w * tau), 0.0);
  if (h == 0.0) return 0.0;
  const double x = beta * w;
  return (1.0 + std::exp(-x)) * h * std::expm1(x) / x;
}

/// Gamma_H(beta, tau, Omega*) = max over (0, Omega*] of gamma_H_ratio.
inline double gamma_H(double beta, double tau, double omega_star) {
  if (!(omega_star > 0)) throw std::invalid_argument("gamma_H: Omega* must be > 0");
  if (!(beta > 0) || std::isinf(beta)) throw std::invalid_argument("gamma_H: beta must be finite and > 0");
  if (!(tau > 0)) throw std::invalid_argument("gamma_H: tau must be > 0");
  const double periods = omega_star * tau / (2 * std::numbers::pi);
  const int probes = static_cast<int>(std::clamp(periods * 2048.0, 8192.0, 2.0e6));
  const double dw = omega_star / probes;
  const auto f = [&](double w) { return gamma_H_ratio(beta, tau, w); };
  double best_val = 0.0;
  int best = probes;
  for (int i = 1; i <= probes; ++i) {
    const double v = f(i * dw);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  if (best_val == 0.0) return 0.0;
  const double w = golden_section_max(f, (best - 1) * dw, std::min(omega_star, (best + 1) * dw));
  return std::max(best_val, f(w));
}

struct HolevoBound {
  double holevo = 0;
  double gamma_h = 0;
  double lower = 0;  // (K - <Q^2>) / Gamma_H
  bool applicable = false;
};

/// H_QQ >= (K - <Q^2>) / Gamma_H, applicable when every line lies below Omega*.
inline HolevoBound holevo_bound(const TransitionSpectrum& ts, double K_excess, double tau, double omega_star) {
  HolevoBound b;
  b.holevo = holevo(ts);
  b.applicable = ts.max_delta() <= omega_star * (1 + 1e-12);
  if (!b.applicable) return b;
  b.gamma_h = gamma_H(ts.beta, tau, omega_star);
  if (b.gamma_h > 0) {
    b.lower = K_excess / b.gamma_h;
  } else {
    // h <= 0 on the whole support, so K - <Q^2> <= 0.
    b.lower = K_excess > 0 ? kInfiniteBeta : 0.0;
  }
  return b;
}

inline void write_spectrum_csv(std::ostream& os, const TransitionSpectrum& ts) {
  os << "delta,w_S,w_chi\n";
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", 0.0, ts.zero_w_S, 0.0);
  os << buf;
  for (const auto& l : ts.lines) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", l.delta, l.w_S, l.w_chi);
    os << buf;
  }
}

}  // namespace lgqfi
