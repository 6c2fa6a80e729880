#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "lgqfi/models.hpp"
#include "lgqfi/spectral.hpp"
#include "oracle.hpp"
#include "test_helpers.hpp"

using namespace lgqfi;
using Catch::Approx;
using std::numbers::pi;

namespace {

struct Instance {
  Operator h, q;
  Eigensystem eig;
};

Instance random_instance(Eigen::Index dim, std::mt19937_64& rng) {
  Operator h(testing::random_hermitian(dim, rng));
  Operator q(testing::random_observable(dim, rng));
  auto eig = hermitian_eig(h);
  return {h, q, eig};
}

}  // namespace

TEST_CASE("thermal and pure states", "[spectral]") {
  const auto eig = hermitian_eig(build_qubit(1.0, pi / 2).hamiltonian);
  SECTION("beta = inf puts all weight on -eps/2") {
    const auto s = make_thermal_state(eig, kInfiniteBeta);
    CHECK(s.weights(0) == 1.0);
    CHECK(s.weights(1) == 0.0);
  }
  SECTION("beta -> 0 is uniform") {
    const auto s = make_thermal_state(eig, 1e-12);
    CHECK(s.weights(0) == Approx(0.5).margin(1e-9));
    CHECK(s.weights(1) == Approx(0.5).margin(1e-9));
  }
  SECTION("beta = 2 two-level Gibbs weights") {
    const auto s = make_thermal_state(eig, 2.0);
    const double z = std::exp(1.0) + std::exp(-1.0);
    CHECK(s.weights(0) == Approx(std::exp(1.0) / z).epsilon(1e-14));
    CHECK(s.weights(1) == Approx(std::exp(-1.0) / z).epsilon(1e-14));
  }
  SECTION("huge beta does not overflow") {
    const auto s = make_thermal_state(eig, 1e6);
    CHECK(s.weights(0) == 1.0);
    CHECK(std::isfinite(s.weights(1)));
  }
  SECTION("beta = inf with a degenerate ground manifold") {
    const auto e = hermitian_eig(build_tfim({.n_sites = 3, .coupling = 1.0, .field = 1e-300}).hamiltonian);
    const auto s = make_thermal_state(e, kInfiniteBeta);
    CHECK(s.weights(0) == 0.5);
    CHECK(s.weights(1) == 0.5);
    CHECK(s.weights.sum() == 1.0);
  }
  SECTION("invalid input") {
    CHECK_THROWS_AS(make_thermal_state(eig, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_thermal_state(eig, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_pure_state(eig, 2), std::invalid_argument);
    CHECK_THROWS_AS(make_pure_state(eig, -1), std::invalid_argument);
  }
}

TEST_CASE("SpectralData invariants", "[spectral][property]") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const auto in = random_instance(2 + trial % 7, rng);
    const SpectralData sd(in.eig, in.q, make_thermal_state(in.eig, 0.5 + trial * 0.2));
    const Matrix& q = sd.elements();
    CHECK(max_abs(q - q.adjoint()) <= 1e-10);
    for (Eigen::Index n = 0; n < sd.dim(); ++n)
      for (Eigen::Index m = 0; m < sd.dim(); ++m) REQUIRE(sd.omega(n, m) == -sd.omega(m, n));
    CHECK(expect_q2(sd) == Approx(expect_q2_by_columns(sd)).margin(1e-10));
    CHECK(sd.weights().sum() == Approx(1.0).margin(1e-12));
    CHECK(sd.weights().minCoeff() >= 0.0);
  }
}

TEST_CASE("correlator against the matrix-exponential oracle", "[spectral][oracle]") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const auto in = random_instance(4, rng);
    const double beta = 0.3 + trial * 0.4;
    const auto state = make_thermal_state(in.eig, beta);
    const SpectralData sd(in.eig, in.q, state);
    const Matrix rho = oracle::gibbs(in.h.matrix(), beta);
    CHECK(max_abs(rho - density_matrix(in.eig, state)) <= 1e-10);
    for (double tau : {0.0, 0.17, 1.3, 4.0}) {
      const double ref = oracle::symmetrized_correlator(in.h.matrix(), in.q.matrix(), rho, 0.0, tau);
      CHECK(correlator(sd, tau) == Approx(ref).margin(1e-9));
      CHECK(correlator(sd, -tau) == Approx(correlator(sd, tau)).margin(1e-14));
      CHECK(std::abs(correlator(sd, tau)) <= expect_q2(sd) + 1e-10);
    }
    CHECK(correlator(sd, 0.0) == Approx(expect_q2(sd)).margin(1e-12));
  }
}

TEST_CASE("stationarity: the oracle correlator depends only on t2 - t1", "[spectral][oracle]") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 3; ++trial) {
    const auto in = random_instance(5, rng);
    const Matrix rho = oracle::gibbs(in.h.matrix(), 1.1);
    const double ref = oracle::symmetrized_correlator(in.h.matrix(), in.q.matrix(), rho, 0.0, 0.8);
    for (double t1 : {0.4, 1.7, 6.2})
      CHECK(oracle::symmetrized_correlator(in.h.matrix(), in.q.matrix(), rho, t1, t1 + 0.8) ==
            Approx(ref).margin(1e-10));
  }
}

TEST_CASE("LGI combinations", "[spectral]") {
  std::mt19937_64 rng(47);
  const auto in = random_instance(6, rng);
  const SpectralData sd(in.eig, in.q, make_thermal_state(in.eig, 0.9));
  const double q2 = expect_q2(sd);
  CHECK(lgi_K(sd, 0.0) == Approx(q2).margin(1e-12));
  for (int p : {3, 4, 7}) CHECK(lgi_Kp(sd, p, 0.0) == Approx((p - 2) * q2).margin(1e-12));
  for (double tau : {0.05, 0.6, 2.2}) {
    CHECK(lgi_Kp(sd, 3, tau) == lgi_K(sd, tau));
    CHECK(lgi_K(sd, tau) - q2 == Approx(lgi_excess_spectral(sd, tau)).margin(1e-12));
    // connected form
    const double c0 = correlator(sd, 0.0);
    const double connected = 2 * (correlator(sd, tau) - c0) - (correlator(sd, 2 * tau) - c0);
    CHECK(lgi_K(sd, tau) - q2 == Approx(connected).margin(1e-12));
  }
  CHECK_THROWS_AS(lgi_Kp(sd, 2, 0.1), std::invalid_argument);
}

TEST_CASE("thermal qubit closed forms", "[spectral]") {
  for (double eps : {0.5, 1.0, 3.0}) {
    for (double theta : {0.3, pi / 2, 2.5}) {
      for (double beta : {0.2, 1.0, 7.0}) {
        const auto m = build_qubit(eps, theta);
        const auto eig = hermitian_eig(m.hamiltonian);
        const SpectralData sd(eig, m.observable, make_thermal_state(eig, beta));
        const double s2 = std::sin(theta) * std::sin(theta);
        const double t = std::tanh(0.5 * beta * eps);
        CHECK(qfi(sd) == Approx(4 * s2 * t * t).margin(1e-13));
        for (double tau : {0.1, 0.9, 2.0}) {
          CHECK(lgi_K(sd, tau) == Approx(1 + s2 * h_kernel(eps * tau)).margin(1e-13));
          for (int p : {4, 6})
            CHECK(lgi_Kp(sd, p, tau) == Approx((p - 2) + s2 * hp_kernel(p, eps * tau)).margin(1e-12));
        }
      }
    }
  }
}

TEST_CASE("QFI properties", "[spectral]") {
  std::mt19937_64 rng(53);
  SECTION("maximally mixed state gives 0") {
    const auto in = random_instance(5, rng);
    const SpectralData sd(in.eig, in.q, make_thermal_state(in.eig, 1e-300));
    CHECK(qfi(sd) <= 1e-15);
  }
  SECTION("GHZ effective gives 4") {
    const auto eff = build_ghz_effective({.n_sites = 3});
    const auto eig = hermitian_eig(eff.hamiltonian);
    CHECK(qfi(SpectralData(eig, eff.observable, make_pure_state(eig, 1))) == Approx(4.0).epsilon(1e-14));
  }
  SECTION("0 <= F_Q <= 4 <Q^2>") {
    for (int trial = 0; trial < 30; ++trial) {
      const auto in = random_instance(2 + trial % 6, rng);
      const SpectralData sd(in.eig, in.q, make_thermal_state(in.eig, 0.1 + trial * 0.3));
      CHECK(qfi(sd) >= 0.0);
      CHECK(qfi(sd) <= 4 * expect_q2(sd) + 1e-9);
    }
  }
  SECTION("qfi on one-hot weights equals the pure-state variance") {
    for (int trial = 0; trial < 20; ++trial) {
      const auto in = random_instance(2 + trial % 7, rng);
      const Eigen::Index s = trial % in.eig.dim();
      const SpectralData sd(in.eig, in.q, make_pure_state(in.eig, s));
      CHECK(qfi(sd) == Approx(qfi_pure(in.eig.basis.col(s), in.q)).margin(1e-10));
    }
  }
  SECTION("qfi_pure examples") {
    Vector up(2);
    up << 1, 0;
    CHECK(qfi_pure(up, Operator(pauli::x())) == Approx(4.0));
    CHECK(qfi_pure(up, Operator(pauli::z())) == 0.0);
    CHECK_THROWS_AS(qfi_pure(2.0 * up, Operator(pauli::x())), std::invalid_argument);
  }
  SECTION("continuity in beta") {
    const auto in = random_instance(4, rng);
    for (double beta : {0.37, 1.91, 4.4}) {
      const double a = qfi(SpectralData(in.eig, in.q, make_thermal_state(in.eig, beta)));
      const double b = qfi(SpectralData(in.eig, in.q, make_thermal_state(in.eig, beta + 1e-8)));
      CHECK(std::abs(a - b) <= 1e-6);
    }
  }
}

TEST_CASE("TFIM ground state QFI is 4", "[spectral]") {
  const auto m = build_tfim({.n_sites = 8, .coupling = 1.0, .field = 0.5});
  const auto eig = hermitian_eig(m.hamiltonian);
  const SpectralData sd(eig, m.observable, make_pure_state(eig, 0));
  CHECK(std::abs(expect_q(sd)) <= 1e-9);
  CHECK(qfi(sd) == Approx(4.0).margin(1e-9));
  CHECK(qfi_pure(eig.basis.col(0), m.observable) == Approx(4.0).margin(1e-9));
}

TEST_CASE("termwise bound kappa_nm <= gamma f_nm", "[spectral][property]") {
  std::mt19937_64 rng(59);
  std::uniform_real_distribution<double> ub(0.1, 10.0), ut(0.01, 5.0);
  for (int trial = 0; trial < 60; ++trial) {
    const auto in = random_instance(2 + trial % 5, rng);
    const double beta = ub(rng);
    const double tau = ut(rng);
    const SpectralData sd(in.eig, in.q, make_thermal_state(in.eig, beta));
    const double g = gamma_lgi(2 * tau / beta).value;
    for (const auto& t : sd.transitions()) {
      const double kappa = 0.5 * (t.pn + t.pm) * t.q2 * h_kernel(t.omega * tau);
      REQUIRE(kappa <= g * qfi_term(t) + 1e-12);
      // the exact per-term relation behind the bound
      if (t.omega != 0.0 && t.pn + t.pm > 1e-14)
        REQUIRE(kappa == Approx(R_kernel(t.omega * tau, 2 * tau / beta) * qfi_term(t)).margin(1e-12));
    }
  }
}
