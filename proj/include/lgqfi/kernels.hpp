#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace lgqfi {

// Kernels are evaluated in product form to avoid cancellation at small x:
//   h(x)   = 2cos x - cos 2x - 1            = 4 cos x sin^2(x/2)
//   h_p(x) = (p-1)cos x - cos((p-1)x) - (p-2) = 2 sin^2((p-1)x/2) - 2(p-1) sin^2(x/2)
//   1 - cos x                               = 2 sin^2(x/2)

inline double h_kernel(double x) {
  const double s = std::sin(0.5 * x);
  return 4.0 * std::cos(x) * s * s;
}

inline double hp_kernel(int p, double x) {
  if (p < 3) throw std::invalid_argument("hp_kernel: p must be >= 3");
  const double s1 = std::sin(0.5 * x);
  const double sp = std::sin(0.5 * (p - 1) * x);
  return 2.0 * sp * sp - 2.0 * (p - 1) * s1 * s1;
}

inline double one_minus_cos(double x) {
  const double s = std::sin(0.5 * x);
  return 2.0 * s * s;
}

/// Which LGI-type kernel a gamma function maximizes against.
struct KernelFamily {
  enum class Kind { lgi, lgi_p, two_time } kind = Kind::lgi;
  int p = 3;

  static KernelFamily lgi() { return {}; }
  static KernelFamily lgi_p(int p) { return {Kind::lgi_p, p}; }
  static KernelFamily two_time() { return {Kind::two_time, 3}; }

  double operator()(double x) const {
    switch (kind) {
      case Kind::lgi: return h_kernel(x);
      case Kind::lgi_p: return hp_kernel(p, x);
      case Kind::two_time: return one_minus_cos(x);
    }
    return 0.0;
  }
  // Taylor coefficients: kernel(x) = a x^2 + b x^4 + O(x^6).
  double a2() const {
    switch (kind) {
      case Kind::lgi: return 1.0;
      case Kind::lgi_p: return 0.5 * (p - 1) * (p - 2);
      case Kind::two_time: return 0.5;
    }
    return 0.0;
  }
  double a4() const {
    switch (kind) {
      case Kind::lgi: return -7.0 / 12.0;
      case Kind::lgi_p: {
        const double q = p - 1;
        return (q - q * q * q * q) / 24.0;
      }
      case Kind::two_time: return -1.0 / 24.0;
    }
    return 0.0;
  }
  // Upper bound of the kernel over the real line.
  double sup() const {
    switch (kind) {
      case Kind::lgi: return 0.5;
      case Kind::lgi_p: return 2.0;
      case Kind::two_time: return 2.0;
    }
    return 0.0;
  }
};

/// 1/4 coth^2(x/y) * kernel(x). Near x = 0 the product 0 * inf is replaced by
/// the series 1/4 [a2 y^2 + (2/3 a2 + a4 y^2) x^2].
inline double R_kernel(const KernelFamily& k, double x, double y) {
  if (!(y > 0)) throw std::invalid_argument("R_kernel: y must be > 0");
  x = std::abs(x);
  if (x < 1e-4 * y) return 0.25 * (k.a2() * y * y + (2.0 / 3.0 * k.a2() + k.a4() * y * y) * x * x);
  const double t = std::tanh(x / y);
  return 0.25 * k(x) / (t * t);
}

inline double R_kernel(double x, double y) { return R_kernel(KernelFamily::lgi(), x, y); }

/// Golden-section maximization of a unimodal function on [a, b].
template <class F>
double golden_section_max(F&& f, double a, double b, double xtol = 1e-12, int max_iter = 200) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < max_iter && (b - a) > xtol * std::max(1.0, std::abs(a) + std::abs(b)); ++i) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return fc > fd ? c : d;
}

struct KernelResult {
  enum class Method { closed_form, numeric };

  double y = 0;
  double value = 0;
  double argmax = 0;
  Method method = Method::numeric;
  double search_max = 0;  // right end of the probed x interval
  double tail_bound = 0;  // 1/4 sup(kernel) coth^2(search_max / y)
};

inline const char* to_string(KernelResult::Method m) {
  return m == KernelResult::Method::closed_form ? "closed" : "numeric";
}

inline double critical_y() { return std::sqrt(8.0 / 7.0); }

/// Grid scan of R(., y) on (0, x_max] followed by golden-section refinement
/// around the best probe; the x -> 0 endpoint enters through its series value.
inline KernelResult maximize_kernel(const KernelFamily& k, double y, double x_max, int probes) {
  if (!(y > 0) || !std::isfinite(y)) throw std::invalid_argument("gamma: y must be finite and > 0");
  KernelResult r;
  r.y = y;
  r.search_max = x_max;
  r.value = 0.25 * k.a2() * y * y;
  r.argmax = 0.0;
  const double dx = x_max / probes;
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int i = 1; i <= probes; ++i) {
    const double v = R_kernel(k, i * dx, y);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  const double lo = (best - 1) * dx;
  const double hi = std::min(x_max, (best + 1) * dx);
  const auto f = [&](double x) { return R_kernel(k, x, y); };
  const double xr = golden_section_max(f, lo, hi);
  double refined = f(xr);
  double arg = xr;
  if (best_val > refined) {
    refined = best_val;
    arg = best * dx;
  }
  if (refined > r.value) {
    r.value = refined;
    r.argmax = arg;
  }
  const double t = std::tanh(x_max / y);
  r.tail_bound = 0.25 * k.sup() / (t * t);
  return r;
}

/// Always-numeric evaluation of gamma on (0, pi/2], used to cross-check the
/// closed form above y_c.
inline KernelResult gamma_lgi_numeric(double y) {
  return maximize_kernel(KernelFamily::lgi(), y, std::numbers::pi / 2, 4096);
}

/// gamma_lgi(y) = max_x R(x, y); equals y^2/4 for y >= sqrt(8/7).
inline KernelResult gamma_lgi(double y) {
  if (!(y > 0) || !std::isfinite(y)) throw std::invalid_argument("gamma: y must be finite and > 0");
  if (y >= critical_y()) {
    KernelResult r;
    r.y = y;
    r.value = 0.25 * y * y;
    r.argmax = 0.0;
    r.method = KernelResult::Method::closed_form;
    r.search_max = std::numbers::pi / 2;
    return r;
  }
  return gamma_lgi_numeric(y);
}

// The kernels below are 2 pi periodic and coth^2 decreases in |x|, so every
// x beyond 2 pi is dominated by its translate into the searched window.
inline double wide_search_max(double y) { return std::max(4 * std::numbers::pi, 8 * y); }

inline KernelResult gamma_p(int p, double y) {
  if (p < 3) throw std::invalid_argument("gamma_p: p must be >= 3");
  if (p == 3) return gamma_lgi(y);
  return maximize_kernel(KernelFamily::lgi_p(p), y, wide_search_max(y), 100000);
}

inline KernelResult gamma_tilde(double y) {
  return maximize_kernel(KernelFamily::two_time(), y, wide_search_max(y), 100000);
}

/// max_x h_p(x) over one period, i.e. 4 * lim_{y->0} gamma_p(y).
inline double hp_max(int p) {
  const KernelFamily k = KernelFamily::lgi_p(p);
  const int probes = 20000 * (p - 1);
  const double dx = 2 * std::numbers::pi / probes;
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= probes; ++i) {
    const double v = k(i * dx);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  const double xr = golden_section_max([&](double x) { return k(x); }, std::max(0.0, (best - 1) * dx), (best + 1) * dx);
  return std::max(best_val, k(xr));
}

/// Zero-temperature limits y -> 0 of the gamma family.
inline double gamma_zero_temperature(const KernelFamily& k) {
  switch (k.kind) {
    case KernelFamily::Kind::lgi: return 0.125;
    case KernelFamily::Kind::lgi_p: return k.p == 3 ? 0.125 : 0.25 * hp_max(k.p);
    case KernelFamily::Kind::two_time: return 0.5;
  }
  return 0.0;
}

}  // namespace lgqfi
