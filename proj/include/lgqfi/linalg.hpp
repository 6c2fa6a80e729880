#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lgqfi/tolerances.hpp"

namespace lgqfi {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline double max_abs(const Matrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

/// Dense Hermitian operator. Hermiticity is checked on construction and the
/// stored matrix is the exactly Hermitian part (A + A^dagger)/2.
class Operator {
 public:
  explicit Operator(Matrix m, const Tolerances& tol = default_tolerances()) {
    if (m.rows() < 1 || m.rows() != m.cols()) {
      throw std::invalid_argument("Operator: matrix must be square with dim >= 1, got " +
                                  std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
    const double scale = std::max(1.0, max_abs(m));
    const double asym = max_abs(m - m.adjoint());
    if (!(asym <= tol.hermiticity * scale)) {
      throw std::invalid_argument("Operator: matrix is not Hermitian (max |A - A^dagger| = " +
                                  std::to_string(asym) + ")");
    }
    m_ = (m + m.adjoint()) * 0.5;
  }

  static Operator identity(Eigen::Index dim) { return Operator(Matrix::Identity(dim, dim)); }

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  cplx operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  Operator operator+(const Operator& o) const { return Operator(m_ + o.m_); }
  Operator operator-(const Operator& o) const { return Operator(m_ - o.m_); }
  Operator operator*(double s) const { return Operator(m_ * s); }
  friend Operator operator*(double s, const Operator& op) { return op * s; }

 private:
  Matrix m_;
};

struct Eigensystem {
  RealVector energies;  // ascending
  Matrix basis;         // columns are eigenvectors

  Eigen::Index dim() const { return energies.size(); }
  Vector vector(Eigen::Index n) const { return basis.col(n); }
};

namespace detail {

// One complex Jacobi rotation zeroing a(p,q). The rotation is the product of
// a phase on column q, which makes a(p,q) real, and a real Givens rotation.
inline void jacobi_rotate(Matrix& a, Matrix& v, Eigen::Index p, Eigen::Index q) {
  const cplx apq = a(p, q);
  const double b = std::abs(apq);
  if (b == 0.0) return;
  const cplx phase = apq / b;  // e^{i phi}
  const double app = a(p, p).real();
  const double aqq = a(q, q).real();
  const double theta = (aqq - app) / (2.0 * b);
  const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;

  // J = [[c, s], [-s e^{-i phi}, c e^{-i phi}]] acting on columns (p, q).
  const cplx jpp = c;
  const cplx jpq = s;
  const cplx jqp = -s * std::conj(phase);
  const cplx jqq = c * std::conj(phase);

  const Eigen::Index n = a.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    const cplx akp = a(k, p);
    const cplx akq = a(k, q);
    a(k, p) = akp * jpp + akq * jqp;
    a(k, q) = akp * jpq + akq * jqq;
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    const cplx apk = a(p, k);
    const cplx aqk = a(q, k);
    a(p, k) = std::conj(jpp) * apk + std::conj(jqp) * aqk;
    a(q, k) = std::conj(jpq) * apk + std::conj(jqq) * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;
  a(p, p) = app - t * b;
  a(q, q) = aqq + t * b;

  for (Eigen::Index k = 0; k < n; ++k) {
    const cplx vkp = v(k, p);
    const cplx vkq = v(k, q);
    v(k, p) = vkp * jpp + vkq * jqp;
    v(k, q) = vkp * jpq + vkq * jqq;
  }
}

inline double max_offdiag(const Matrix& a) {
  double m = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < j; ++i) m = std::max(m, std::abs(a(i, j)));
  return m;
}

// Phase convention: the first entry of maximal magnitude is real positive.
inline void fix_phase(Eigen::Ref<Vector> col) {
  Eigen::Index arg = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < col.size(); ++i) {
    const double mag = std::abs(col(i));
    if (mag > best * (1.0 + 1e-12)) {
      best = mag;
      arg = i;
    }
  }
  if (best > 0) col *= std::conj(col(arg)) / best;
}

inline bool lexicographic_less(const Vector& x, const Vector& y) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i).real() != y(i).real()) return x(i).real() < y(i).real();
    if (x(i).imag() != y(i).imag()) return x(i).imag() < y(i).imag();
  }
  return false;
}

}  // namespace detail

/// Cyclic Jacobi diagonalization of a Hermitian operator.
///
/// Eigenvalues come back ascending. Eigenvectors are phase-fixed so that the
/// largest-magnitude entry is real positive, and levels within the degeneracy
/// tolerance are ordered lexicographically by their (real, imag) entries, so
/// the output is a deterministic function of the input.
inline Eigensystem hermitian_eig(const Operator& op, const Tolerances& tol = default_tolerances()) {
  const Eigen::Index n = op.dim();
  Matrix a = op.matrix();
  Matrix v = Matrix::Identity(n, n);
  const double threshold = tol.jacobi_offdiag * max_abs(a);

  bool converged = detail::max_offdiag(a) <= threshold;
  for (int sweep = 0; sweep < tol.jacobi_max_sweeps && !converged; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q)
        if (std::abs(a(p, q)) > threshold * 1e-3) detail::jacobi_rotate(a, v, p, q);
    converged = detail::max_offdiag(a) <= threshold;
  }
  if (!converged) {
    throw std::runtime_error("hermitian_eig: Jacobi iteration did not converge within " +
                             std::to_string(tol.jacobi_max_sweeps) + " sweeps for dimension " +
                             std::to_string(n));
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  for (Eigen::Index k = 0; k < n; ++k) detail::fix_phase(v.col(k));
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    return a(x, x).real() < a(y, y).real();
  });

  // Resolve ties inside numerically degenerate clusters.
  const double scale = std::max(1.0, max_abs(op.matrix()));
  for (std::size_t lo = 0; lo < order.size();) {
    std::size_t hi = lo + 1;
    while (hi < order.size() &&
           a(order[hi], order[hi]).real() - a(order[hi - 1], order[hi - 1]).real() <=
               tol.ground_degeneracy * scale)
      ++hi;
    if (hi - lo > 1) {
      std::sort(order.begin() + static_cast<std::ptrdiff_t>(lo),
                order.begin() + static_cast<std::ptrdiff_t>(hi),
                [&](Eigen::Index x, Eigen::Index y) {
                  return detail::lexicographic_less(v.col(x), v.col(y));
                });
    }
    lo = hi;
  }

  Eigensystem out{RealVector(n), Matrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.energies(k) = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]).real();
    out.basis.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  // Sorting by value inside a cluster may leave a last-bit inversion.
  for (Eigen::Index k = 1; k < n; ++k)
    if (out.energies(k) < out.energies(k - 1)) out.energies(k) = out.energies(k - 1);
  return out;
}

/// Matrix of Q_nm = <n|Q|m> in the eigenbasis.
inline Matrix to_eigenbasis(const Operator& q, const Eigensystem& eig) {
  if (q.dim() != eig.dim()) {
    throw std::invalid_argument("to_eigenbasis: dimension mismatch (" + std::to_string(q.dim()) +
                                " vs " + std::to_string(eig.dim()) + ")");
  }
  return eig.basis.adjoint() * q.matrix() * eig.basis;
}

inline Matrix from_eigenbasis(const Matrix& qnm, const Eigensystem& eig) {
  return eig.basis * qnm * eig.basis.adjoint();
}

inline double operator_norm(const Operator& q) {
  const auto eig = hermitian_eig(q);
  return std::max(std::abs(eig.energies(0)), std::abs(eig.energies(eig.dim() - 1)));
}

/// Largest |V^dagger V - 1| entry.
inline double unitarity_residual(const Matrix& v) {
  return max_abs(v.adjoint() * v - Matrix::Identity(v.cols(), v.cols()));
}

inline double reconstruction_residual(const Operator& a, const Eigensystem& eig) {
  const Matrix rebuilt = eig.basis * eig.energies.cast<cplx>().asDiagonal() * eig.basis.adjoint();
  return max_abs(a.matrix() - rebuilt);
}

/// e^{-iHt} from a precomputed eigensystem of H.
inline Matrix evolution(const Eigensystem& eig, double t) {
  Vector phases(eig.dim());
  for (Eigen::Index k = 0; k < eig.dim(); ++k) phases(k) = std::polar(1.0, -eig.energies(k) * t);
  return eig.basis * phases.asDiagonal() * eig.basis.adjoint();
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace lgqfi
