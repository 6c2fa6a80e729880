#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "lgqfi/kernels.hpp"

using namespace lgqfi;
using Catch::Approx;
using std::numbers::pi;

namespace {

// Direct textbook forms, used as oracles for the product forms. Evaluated in
// long double since the cosine differences cancel badly near x = 0.
double h_naive(double x) {
  const long double t = x;
  return static_cast<double>(2 * std::cos(t) - std::cos(2 * t) - 1);
}
double hp_naive(int p, double x) {
  const long double t = x;
  return static_cast<double>((p - 1) * std::cos(t) - std::cos((p - 1) * t) - (p - 2));
}
double one_minus_cos_naive(double x) { return static_cast<double>(1 - std::cos(static_cast<long double>(x))); }
double coth2(double u) {
  const long double c = std::cosh(static_cast<long double>(u)) / std::sinh(static_cast<long double>(u));
  return static_cast<double>(c * c);
}

// Brute-force maximum of the naive R over a uniform grid.
template <class K>
double brute_max(K kernel, double y, double x_max, int n) {
  double best = -1e300;
  for (int i = 1; i <= n; ++i) {
    const double x = x_max * i / n;
    best = std::max(best, 0.25 * coth2(x / y) * kernel(x));
  }
  return best;
}

}  // namespace

TEST_CASE("h kernel values", "[kernels]") {
  CHECK(h_kernel(0.0) == 0.0);
  CHECK(h_kernel(pi / 3) == Approx(0.5).epsilon(1e-15));
  CHECK(h_kernel(pi) == Approx(-4.0).epsilon(1e-15));
  for (double x = -10; x <= 10; x += 0.013) {
    REQUIRE(h_kernel(x) == Approx(h_naive(x)).margin(1e-14));
    REQUIRE(h_kernel(x) <= 0.5 + 1e-15);
  }
}

TEST_CASE("h_p kernel matches its definition and reduces to h at p = 3", "[kernels]") {
  for (int p : {3, 4, 5, 8}) {
    for (double x = -7; x <= 7; x += 0.031) REQUIRE(hp_kernel(p, x) == Approx(hp_naive(p, x)).margin(1e-12));
  }
  for (double x = -7; x <= 7; x += 0.031) REQUIRE(hp_kernel(3, x) == Approx(h_kernel(x)).margin(1e-14));
  CHECK_THROWS_AS(hp_kernel(2, 0.1), std::invalid_argument);
}

TEST_CASE("h_p maximum approaches 2 with 1/p corrections", "[kernels]") {
  double prev_gap = 1e9;
  for (int p : {4, 8, 16, 32, 64}) {
    const double m = hp_max(p);
    // Brute-force check of the reported maximum on a fine grid.
    double brute = -1e9;
    for (int i = 0; i <= 400000; ++i) brute = std::max(brute, hp_naive(p, 2 * pi * i / 400000.0));
    REQUIRE(m >= brute - 1e-12);
    REQUIRE(m <= 2.0 + 1e-12);
    const double gap = 2.0 - m;
    INFO("p = " << p << " h_p max = " << m);
    REQUIRE(gap * p < 20.0);  // O(1/p)
    REQUIRE(gap < prev_gap);
    prev_gap = gap;
  }
}

TEST_CASE("R kernel", "[kernels]") {
  SECTION("x -> 0 limit is y^2 / 4") { CHECK(R_kernel(0.0, 2.0) == Approx(1.0).epsilon(1e-15)); }
  SECTION("negative where h is negative") {
    for (double y : {0.1, 1.0, 5.0}) CHECK(R_kernel(pi, y) < 0);
  }
  SECTION("y -> 0 at x = pi/3 gives 1/8") { CHECK(R_kernel(pi / 3, 1e-3) == Approx(0.125).epsilon(1e-12)); }
  SECTION("even in x") {
    for (double x : {0.1, 0.7, 2.3}) CHECK(R_kernel(-x, 0.8) == R_kernel(x, 0.8));
  }
  SECTION("series branch joins the direct branch continuously") {
    for (double y : {1e-3, 0.5, 1.0, 3.0}) {
      const double edge = 1e-4 * y;
      CHECK(R_kernel(edge * (1 - 1e-9), y) == Approx(R_kernel(edge * (1 + 1e-9), y)).epsilon(1e-9));
      // direct naive form at a moderate x
      const double x = 0.3 * y + 0.1;
      CHECK(R_kernel(x, y) == Approx(0.25 * coth2(x / y) * h_naive(x)).epsilon(1e-12));
    }
  }
  SECTION("y must be positive") { CHECK_THROWS_AS(R_kernel(0.1, 0.0), std::invalid_argument); }
}

TEST_CASE("gamma: closed form and limits", "[kernels]") {
  CHECK(gamma_lgi(2.0).value == 1.0);
  CHECK(gamma_lgi(2.0).method == KernelResult::Method::closed_form);
  CHECK(gamma_lgi(3.0).value == 2.25);
  CHECK(gamma_lgi(1e-6).value == Approx(0.125).margin(1e-4));
  const double yc = critical_y();
  CHECK(gamma_lgi(yc).value == Approx(2.0 / 7.0).epsilon(1e-15));
  CHECK(std::abs(gamma_lgi_numeric(yc).value - 2.0 / 7.0) <= 1e-7);
  CHECK_THROWS_AS(gamma_lgi(0.0), std::invalid_argument);
  CHECK_THROWS_AS(gamma_lgi(-1.0), std::invalid_argument);
}

TEST_CASE("gamma numeric branch agrees with the closed form around y_c", "[kernels]") {
  const double yc = critical_y();
  for (int i = 0; i < 50; ++i) {
    const double y = yc * (0.8 + 0.4 * i / 49.0);
    const auto g = gamma_lgi(y);
    const auto n = gamma_lgi_numeric(y);
    INFO("y = " << y);
    REQUIRE(std::abs(g.value - n.value) <= 1e-7);
    if (y >= yc) REQUIRE(g.method == KernelResult::Method::closed_form);
  }
}

TEST_CASE("gamma matches a brute-force grid maximum", "[kernels][oracle]") {
  for (double y : {0.01, 0.1, 0.4, 0.8, 1.0, 1.05, 1.2, 2.0}) {
    const double ref = std::max(0.25 * y * y, brute_max(h_naive, y, pi / 2, 200000));
    INFO("y = " << y);
    REQUIRE(gamma_lgi(y).value == Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("gamma family certification: no probe exceeds the reported maximum", "[kernels][property]") {
  const auto certify = [](const KernelFamily& k, const KernelResult& r) {
    const int probes = 100000;
    for (int i = 1; i <= probes; ++i) {
      const double x = r.search_max * i / probes;
      if (R_kernel(k, x, r.y) > r.value + 1e-9) return false;
    }
    return r.value > 0;
  };
  for (double y : {1e-4, 0.05, 0.3, 0.9, 1.5, 4.0, 12.0}) {
    INFO("y = " << y);
    REQUIRE(certify(KernelFamily::lgi(), gamma_lgi_numeric(y)));
    REQUIRE(certify(KernelFamily::two_time(), gamma_tilde(y)));
    for (int p : {4, 5, 7}) REQUIRE(certify(KernelFamily::lgi_p(p), gamma_p(p, y)));
  }
}

TEST_CASE("gamma_p and gamma_tilde", "[kernels]") {
  SECTION("gamma_3 is gamma") {
    for (double y : {0.2, 1.0, 3.0}) CHECK(gamma_p(3, y).value == gamma_lgi(y).value);
  }
  SECTION("zero-temperature limits") {
    CHECK(gamma_tilde(1e-6).value == Approx(0.5).margin(1e-4));
    CHECK(gamma_zero_temperature(KernelFamily::two_time()) == 0.5);
    CHECK(gamma_p(5, 1e-6).value == Approx(0.25 * hp_max(5)).margin(1e-4));
  }
  SECTION("brute-force oracle") {
    for (double y : {0.3, 1.0, 2.5}) {
      const double x_max = std::max(4 * pi, 8 * y);
      const double ref_tilde =
          std::max(y * y / 8, brute_max(one_minus_cos_naive, y, x_max, 400000));
      CHECK(gamma_tilde(y).value == Approx(ref_tilde).epsilon(1e-8));
      const double ref4 =
          std::max(0.25 * 3 * y * y, brute_max([](double x) { return hp_naive(4, x); }, y, x_max, 400000));
      CHECK(gamma_p(4, y).value == Approx(ref4).epsilon(1e-8));
    }
  }
  SECTION("large-p growth ~ p^2 y^2 / 8") {
    const double y = 1.0;
    for (int p : {16, 32, 64}) {
      const double ratio = gamma_p(p, y).value / (p * p * y * y / 8.0);
      INFO("p = " << p << " ratio " << ratio);
      CHECK(ratio == Approx(1.0).margin(6.0 / p));
    }
  }
  SECTION("invalid arguments") {
    CHECK_THROWS_AS(gamma_p(2, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(gamma_tilde(0.0), std::invalid_argument);
  }
}

TEST_CASE("golden_section_max finds the interior maximum", "[kernels]") {
  const double x = golden_section_max([](double t) { return -(t - 0.3) * (t - 0.3); }, 0.0, 1.0);
  CHECK(x == Approx(0.3).margin(1e-8));
}
