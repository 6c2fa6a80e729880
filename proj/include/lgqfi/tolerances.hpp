#pragma once

namespace lgqfi {

/// Numerical tolerances shared by every module. Defaults are the values the
/// tests and the acceptance suite are pinned to.
struct Tolerances {
  double hermiticity = 1e-12;        // |A_ij - conj(A_ji)|, relative to max(1, |A|_max)
  double unitarity = 1e-10;
  int jacobi_max_sweeps = 100;
  double jacobi_offdiag = 1e-13;     // relative to |A|_max
  double norm_warn = 1e-9;           // |Q| above 1 + norm_warn is rejected
  double ground_degeneracy = 1e-10;  // beta = inf ground manifold
  double qfi_skip = 1e-14;           // skip f_nm when p_n + p_m below this
  double eigenvalue_cluster = 1e-9;  // projector construction for Q
  double line_merge = 1e-10;         // transition frequencies merged below this
  double normalization = 1e-10;
  double report_slack = 1e-9;        // bound-chain assertion slack
};

inline const Tolerances& default_tolerances() {
  static const Tolerances tol{};
  return tol;
}

}  // namespace lgqfi
