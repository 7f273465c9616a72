#pragma once

// Central table of numeric tolerances. Every module pulls its thresholds from
// here so a tolerance is tuned in exactly one place.

namespace arisopt::tol {

// --- linear algebra ---
inline constexpr double hermitian_rel_asym = 1e-12;  ///< allowed ||H-H^*||/||H|| before rejecting input
inline constexpr double eig_residual       = 1e-10;  ///< ||Hv - lambda v|| acceptance for eigenpairs
inline constexpr double orthonormal        = 1e-10;  ///< ||V^*V - I|| acceptance for eigenvector bases
inline constexpr double cond_d_max         = 1e12;   ///< condition-number cap for the generalized-eigvec denominator

// --- SDP solver ---
inline constexpr double sdp_eps_feas = 1e-6;   ///< relative primal/dual residual for status Optimal
inline constexpr double sdp_eps_psd  = 1e-8;   ///< allowed negative eigenvalue in reported blocks
inline constexpr double sdp_infeas_residual = 1e-3;  ///< stagnating primal residual above this flags infeasibility

// --- model / feasibility ---
inline constexpr double feas_rel = 1e-6;       ///< default relative slack when checking the design constraints

// --- optimizer ---
inline constexpr double eta_rel_tol      = 1e-3;   ///< outer-loop stop: |delta eta| / eta
inline constexpr double monotone_slack   = 1e-6;   ///< allowed relative decrease in a "non-decreasing" trace
inline constexpr double rank_recovery_tmin = 1e-9; ///< minimum homogenization magnitude when de-lifting
inline constexpr double repair_rel       = 1e-6;   ///< constraint violation that triggers randomization repair

} // namespace arisopt::tol
