#pragma once

#include "arisopt/linalg.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace arisopt {

/// Projection onto the PSD cone: eigendecompose and clip negative eigenvalues.
CMat project_psd(const CMat& s);

enum class Sense { LE, GE, EQ };

/// One linear constraint sum_b tr(A_b X_b) (sense) rhs. A matrix may be empty
/// (0x0) to mean "this block does not appear".
struct SdpConstraint {
    std::vector<CMat> mats;
    Sense sense = Sense::EQ;
    double rhs = 0.0;
};

/// Upper bound on one diagonal entry of one block: X_b(i, i) <= upper.
struct DiagBound {
    int block = 0;
    int index = 0;
    double upper = 0.0;
};

/// Block-diagonal semidefinite program in maximization form:
///   maximize   sum_b tr(C_b X_b)
///   subject to the linear constraints, the diagonal bounds, and X_b >= 0.
struct SdpProblem {
    std::vector<int> block_dims;
    std::vector<CMat> objective;  ///< one Hermitian C_b per block
    std::vector<SdpConstraint> constraints;
    std::vector<DiagBound> element_bounds;

    /// Total rows the solver will see (constraints plus lowered bounds).
    std::size_t constraint_count() const { return constraints.size() + element_bounds.size(); }
};

enum class SdpStatus { Optimal, MaxIter, Infeasible, Unbounded };

struct SdpSolution {
    std::vector<CMat> blocks;     ///< cone-feasible primal point
    double objective_value = 0.0;
    double primal_residual = 0.0; ///< worst relative violation of a linear row
    double dual_residual = 0.0;   ///< relative stationarity residual
    double psd_violation = 0.0;   ///< most negative block eigenvalue, clamped at 0
    double kkt_gap = 0.0;         ///< relative primal-dual objective gap estimate
    SdpStatus status = SdpStatus::MaxIter;
    int iterations = 0;
    std::vector<double> merit_history;  ///< filled when opts.log_merit
    std::vector<int> rho_changes;       ///< iterations where the penalty was rescaled
};

struct SdpOptions {
    int max_iter = 20000;
    double eps_feas = 1e-6;
    double eps_psd = 1e-8;
    double rho0 = 1.0;
    double over_relax = 1.6;    ///< relaxation factor in (0, 2)
    bool adaptive_rho = true;
    bool log_merit = false;
    std::optional<std::vector<CMat>> warm_start;  ///< initial primal blocks
    /// Expected magnitude sqrt(X_b(i,i)) per block index, when the caller
    /// knows it. The solver substitutes X = D X' D so its iterates see O(1)
    /// entries; traces, senses, and the returned blocks are unaffected.
    /// Essential for homogenized blocks whose physical entries sit many
    /// orders of magnitude below the unit homogenization slot.
    std::optional<std::vector<RVec>> var_scaling;
};

/// First-order splitting solver. Alternates a projection onto the affine
/// constraint set (objective folded in as a linear tilt) with a projection
/// onto the cone (PSD blocks, nonnegative slacks), with over-relaxation.
/// The logged merit is the distance between the two projected points; for a
/// fixed penalty it is non-increasing and it vanishes at a solution.
SdpSolution solve_sdp(const SdpProblem& problem, const SdpOptions& opts = {});

/// Self-describing text dump (block dims, objective, constraint triples).
void dump_problem(const SdpProblem& problem, std::ostream& os);

} // namespace arisopt
