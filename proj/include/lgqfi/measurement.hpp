#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "lgqfi/linalg.hpp"
#include "lgqfi/random.hpp"

namespace lgqfi {

/// Q split into eigenprojectors over clusters of numerically equal eigenvalues.
struct Spectrum1 {
  std::vector<double> values;      // ascending cluster eigenvalues
  std::vector<Matrix> projectors;  // one per cluster
  Eigensystem eig;                 // eigensystem of Q itself
  std::vector<int> cluster_of;     // cluster index per eigenvector
};

inline Spectrum1 cluster_eigenvalues(const Operator& q, const Tolerances& tol = default_tolerances()) {
  Spectrum1 s;
  s.eig = hermitian_eig(q, tol);
  const Eigen::Index d = s.eig.dim();
  s.cluster_of.assign(static_cast<std::size_t>(d), 0);
  Eigen::Index start = 0;
  for (Eigen::Index k = 0; k < d; ++k) {
    if (k > 0 && s.eig.energies(k) - s.eig.energies(k - 1) > tol.eigenvalue_cluster) start = k;
    if (k == start) {
      s.values.push_back(s.eig.energies(k));
      s.projectors.push_back(Matrix::Zero(d, d));
    }
    const auto c = s.values.size() - 1;
    s.projectors[c] += s.eig.basis.col(k) * s.eig.basis.col(k).adjoint();
    s.cluster_of[static_cast<std::size_t>(k)] = static_cast<int>(c);
  }
  // Cluster value: mean of members, so that +-1 stays +-1 under noise.
  for (std::size_t c = 0; c < s.values.size(); ++c) {
    double sum = 0;
    int count = 0;
    for (Eigen::Index k = 0; k < d; ++k)
      if (s.cluster_of[static_cast<std::size_t>(k)] == static_cast<int>(c)) {
        sum += s.eig.energies(k);
        ++count;
      }
    s.values[c] = sum / count;
  }
  return s;
}

/// Validates a density matrix: Hermitian, unit trace, no eigenvalue below -1e-10.
inline void validate_density_matrix(const Matrix& rho, const Tolerances& tol = default_tolerances()) {
  const Operator op(rho);
  const double tr = rho.trace().real();
  if (std::abs(tr - 1.0) > tol.normalization)
    throw std::invalid_argument("density matrix: trace " + std::to_string(tr) + " != 1");
  const auto eig = hermitian_eig(op, tol);
  if (eig.energies(0) < -tol.normalization)
    throw std::invalid_argument("density matrix: negative eigenvalue " + std::to_string(eig.energies(0)));
}

struct JointDistribution {
  std::vector<double> values;              // outcome values q_k
  std::vector<std::vector<double>> probs;  // probs[k][l] = p(q_k at t1, q_l at t2)

  double correlator() const {
    double acc = 0;
    for (std::size_t k = 0; k < values.size(); ++k)
      for (std::size_t l = 0; l < values.size(); ++l) acc += values[k] * values[l] * probs[k][l];
    return acc;
  }
  double total() const {
    double acc = 0;
    for (const auto& row : probs)
      for (double p : row) acc += p;
    return acc;
  }
};

/// Exact joint distribution of two sequential projective measurements of Q at
/// t1 <= t2, starting from rho0 at t = 0.
inline JointDistribution projective_joint(const Operator& h, const Operator& q, const Matrix& rho0, double t1, double t2,
                                          const Tolerances& tol = default_tolerances()) {
  if (!(t2 >= t1) || !(t1 >= 0)) throw std::invalid_argument("projective_joint: need 0 <= t1 <= t2");
  if (rho0.rows() != h.dim() || q.dim() != h.dim())
    throw std::invalid_argument("projective_joint: dimension mismatch");
  validate_density_matrix(rho0, tol);
  const auto heig = hermitian_eig(h, tol);
  const auto qs = cluster_eigenvalues(q, tol);
  const Matrix u1 = evolution(heig, t1);
  const Matrix u12 = evolution(heig, t2 - t1);
  const Matrix rho1 = u1 * rho0 * u1.adjoint();

  JointDistribution j;
  j.values = qs.values;
  const std::size_t nc = qs.values.size();
  j.probs.assign(nc, std::vector<double>(nc, 0.0));
  for (std::size_t k = 0; k < nc; ++k) {
    const Matrix& pk = qs.projectors[k];
    const Matrix collapsed = u12 * (pk * rho1 * pk) * u12.adjoint();
    for (std::size_t l = 0; l < nc; ++l) j.probs[k][l] = (qs.projectors[l] * collapsed).trace().real();
  }
  return j;
}

/// 1/2 Tr[rho0 {Q(t1), Q(t2)}] by dense evolution.
inline double symmetrized_correlator(const Operator& h, const Operator& q, const Matrix& rho0, double t1, double t2) {
  const auto heig = hermitian_eig(h);
  const Matrix u1 = evolution(heig, t1);
  const Matrix u2 = evolution(heig, t2);
  const Matrix q1 = u1.adjoint() * q.matrix() * u1;
  const Matrix q2 = u2.adjoint() * q.matrix() * u2;
  return 0.5 * (rho0 * (q1 * q2 + q2 * q1)).trace().real();
}

struct ProtocolEstimate {
  double t1 = 0, t2 = 0;
  double value = 0;
  double std_error = 0;
  std::uint64_t shots = 0;  // 0 for exact evaluations
  double exact_ref = 0;     // symmetrized correlator of the same instance
  std::uint64_t seed = 0;
  // Monte Carlo only: |value - exact joint mean| <= 5 stderr. The joint mean equals
  // exact_ref for dichotomic Q and differs from it by back-action otherwise.
  bool within_gate = true;
};

/// Samples the sequential projective protocol. Shot i uses Philox stream
/// (seed, i), so results do not depend on the thread count.
inline ProtocolEstimate projective_mc(const Operator& h, const Operator& q, const Matrix& rho0, double t1, double t2,
                                      std::uint64_t shots, std::uint64_t seed, unsigned threads = 1) {
  if (shots < 1) throw std::invalid_argument("projective_mc: shots must be >= 1");
  const auto joint = projective_joint(h, q, rho0, t1, t2);
  const std::size_t nc = joint.values.size();
  std::vector<double> marginal(nc, 0.0);
  for (std::size_t k = 0; k < nc; ++k)
    for (double p : joint.probs[k]) marginal[k] += std::max(p, 0.0);

  auto pick = [](const std::vector<double>& w, double u) {
    double total = 0;
    for (double x : w) total += std::max(x, 0.0);
    double acc = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      acc += std::max(w[i], 0.0);
      if (u * total < acc) return i;
    }
    return w.size() - 1;
  };

  std::vector<double> samples(shots);
  auto work = [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t i = begin; i < end; ++i) {
      const auto u = uniforms(seed, 0, i);
      const std::size_t k = pick(marginal, u.u0);
      const std::size_t l = pick(joint.probs[k], u.u1);
      samples[i] = joint.values[k] * joint.values[l];
    }
  };
  threads = std::max(1u, threads);
  if (threads == 1 || shots < 1000) {
    work(0, shots);
  } else {
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (shots + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::uint64_t b = std::min<std::uint64_t>(shots, t * chunk);
      const std::uint64_t e = std::min<std::uint64_t>(shots, b + chunk);
      pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }

  double mean = 0;
  for (double s : samples) mean += s;
  mean /= static_cast<double>(shots);
  double var = 0;
  for (double s : samples) var += (s - mean) * (s - mean);

  ProtocolEstimate e;
  e.t1 = t1;
  e.t2 = t2;
  e.value = mean;
  e.std_error = shots > 1 ? std::sqrt(var / static_cast<double>(shots - 1) / static_cast<double>(shots)) : 0.0;
  e.shots = shots;
  e.seed = seed;
  e.exact_ref = symmetrized_correlator(h, q, rho0, t1, t2);
  e.within_gate = std::abs(e.value - joint.correlator()) <= 5 * e.std_error;
  return e;
}

struct MeterConfig {
  double lambda = 1.0;   // coupling strength
  double delta_x = 0.0;  // meter width

  void validate() const {
    if (!(lambda > 0)) throw std::invalid_argument("meter: lambda must be > 0");
    if (!(delta_x >= 0)) throw std::invalid_argument("meter: delta_x must be >= 0");
  }
};

/// Exact expectation of the rescaled two-meter readout product m1 m2 for
/// couplings at t1 and t2, with Gaussian meters of width delta_x:
///   Re sum_nm Q(t2 - t1)_nm sigma_mn (q_n + q_m)/2 exp(-lambda^2 (q_n - q_m)^2 dX^2 / 2)
/// in the eigenbasis of Q, where sigma is rho0 evolved to t1.
inline ProtocolEstimate weak_two_meter(const Operator& h, const Operator& q, const Matrix& rho0, double t1, double t2,
                                       const MeterConfig& cfg, const Tolerances& tol = default_tolerances()) {
  cfg.validate();
  if (!(t2 >= t1) || !(t1 >= 0)) throw std::invalid_argument("weak_two_meter: need 0 <= t1 <= t2");
  const auto heig = hermitian_eig(h, tol);
  const auto qeig = hermitian_eig(q, tol);
  const Matrix u1 = evolution(heig, t1);
  const Matrix u = evolution(heig, t2 - t1);
  const Matrix sigma = qeig.basis.adjoint() * (u1 * rho0 * u1.adjoint()) * qeig.basis;
  const Matrix q_tau = qeig.basis.adjoint() * (u.adjoint() * q.matrix() * u) * qeig.basis;
  const double l2x2 = cfg.lambda * cfg.lambda * cfg.delta_x * cfg.delta_x;

  cplx acc = 0;
  for (Eigen::Index n = 0; n < qeig.dim(); ++n) {
    for (Eigen::Index m = 0; m < qeig.dim(); ++m) {
      const double qn = qeig.energies(n);
      const double qm = qeig.energies(m);
      acc += q_tau(n, m) * sigma(m, n) * (0.5 * (qn + qm)) * std::exp(-0.5 * l2x2 * (qn - qm) * (qn - qm));
    }
  }
  if (std::abs(acc.imag()) > 1e-10 * std::max(1.0, std::abs(acc.real())))
    throw std::logic_error("weak_two_meter: imaginary part " + std::to_string(acc.imag()) + " exceeds tolerance");

  ProtocolEstimate e;
  e.t1 = t1;
  e.t2 = t2;
  e.value = acc.real();
  e.exact_ref = symmetrized_correlator(h, q, rho0, t1, t2);
  return e;
}

struct LgiEstimate {
  double value = 0;
  double std_error = 0;
};

/// K~ = C~12 + C~23 - C~13 from estimates at (t1,t2), (t2,t3), (t1,t3).
inline LgiEstimate lgi_from_protocol(const ProtocolEstimate& e12, const ProtocolEstimate& e23,
                                     const ProtocolEstimate& e13, double tol = 1e-12) {
  const double scale = std::max(1.0, e13.t2);
  const bool chained = std::abs(e12.t2 - e23.t1) <= tol * scale && std::abs(e12.t1 - e13.t1) <= tol * scale &&
                       std::abs(e23.t2 - e13.t2) <= tol * scale;
  const bool equal = std::abs((e12.t2 - e12.t1) - (e23.t2 - e23.t1)) <= tol * scale;
  if (!chained || !equal) throw std::invalid_argument("lgi_from_protocol: inconsistent time spacing");
  return {e12.value + e23.value - e13.value,
          std::sqrt(e12.std_error * e12.std_error + e23.std_error * e23.std_error + e13.std_error * e13.std_error)};
}

/// A classical joint distribution p(q1, q2, q3) over a finite outcome grid.
struct ClassicalJoint {
  std::vector<double> grid;  // outcome values, |q| <= 1
  std::vector<double> p;     // p[(i * G + j) * G + k]

  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    const std::size_t g = grid.size();
    return p[(i * g + j) * g + k];
  }
};

struct MacrorealistVerdict {
  double K = 0;
  double c12 = 0, c23 = 0, c13 = 0;
  bool satisfies_lgi = true;  // K <= 1 + 1e-12
};

/// Marginalizes the three-time distribution to the pairwise ones and forms
/// K = C12 + C23 - C13.
inline MacrorealistVerdict macrorealist_oracle(const ClassicalJoint& joint) {
  const std::size_t g = joint.grid.size();
  if (g == 0 || joint.p.size() != g * g * g) throw std::invalid_argument("macrorealist: table shape mismatch");
  for (double q : joint.grid)
    if (!(std::abs(q) <= 1.0)) throw std::invalid_argument("macrorealist: outcome outside [-1, 1]");
  double total = 0;
  for (double x : joint.p) {
    if (x < 0) throw std::invalid_argument("macrorealist: negative probability");
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-10) throw std::invalid_argument("macrorealist: probabilities do not sum to 1");

  std::vector<double> p12(g * g, 0.0), p23(g * g, 0.0), p13(g * g, 0.0);
  for (std::size_t i = 0; i < g; ++i)
    for (std::size_t j = 0; j < g; ++j)
      for (std::size_t k = 0; k < g; ++k) {
        const double x = joint(i, j, k);
        p12[i * g + j] += x;
        p23[j * g + k] += x;
        p13[i * g + k] += x;
      }
  MacrorealistVerdict v;
  for (std::size_t a = 0; a < g; ++a)
    for (std::size_t b = 0; b < g; ++b) {
      const double qq = joint.grid[a] * joint.grid[b];
      v.c12 += qq * p12[a * g + b];
      v.c23 += qq * p23[a * g + b];
      v.c13 += qq * p13[a * g + b];
    }
  v.K = v.c12 + v.c23 - v.c13;
  v.satisfies_lgi = v.K <= 1.0 + 1e-12;
  return v;
}

struct NoiseModel {
  double variance = 0;     // per-readout noise variance
  double correlation = 0;  // corr(xi1, xi2); 0 for the ideal detector
  std::uint64_t seed = 0;
};

struct ReadoutEstimate {
  double value = 0;
  double std_error = 0;
  double noiseless = 0;  // <q(0) q(tau)> of the same ensemble
};

/// <m1 m2> with m1 = q(0) + xi1, m2 = q(tau) + xi2 over a classical trajectory
/// ensemble given as (q(0), q(tau)) pairs.
inline ReadoutEstimate noisy_readout_correlator(const std::vector<std::pair<double, double>>& trajectories,
                                                const NoiseModel& noise) {
  if (trajectories.empty()) throw std::invalid_argument("noisy readout: empty ensemble");
  if (!(noise.variance >= 0) || !(std::abs(noise.correlation) <= 1))
    throw std::invalid_argument("noisy readout: invalid noise model");
  const double sd = std::sqrt(noise.variance);
  const double rho = noise.correlation;
  const double rho_c = std::sqrt(1.0 - rho * rho);
  double sum = 0, sum2 = 0, clean = 0;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto z = normals(noise.seed, 1, i);
    const double xi1 = sd * z[0];
    const double xi2 = sd * (rho * z[0] + rho_c * z[1]);
    const double m = (trajectories[i].first + xi1) * (trajectories[i].second + xi2);
    sum += m;
    sum2 += m * m;
    clean += trajectories[i].first * trajectories[i].second;
  }
  const double n = static_cast<double>(trajectories.size());
  ReadoutEstimate r;
  r.value = sum / n;
  r.noiseless = clean / n;
  r.std_error = n > 1 ? std::sqrt(std::max(0.0, (sum2 / n - r.value * r.value)) / (n - 1)) : 0.0;
  return r;
}

}  // namespace lgqfi
