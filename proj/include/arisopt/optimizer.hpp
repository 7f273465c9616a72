#pragma once

#include "arisopt/model.hpp"
#include "arisopt/rng.hpp"
#include "arisopt/sdp.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace arisopt {

struct InitializationFailedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InfeasibleError : std::runtime_error {
    InfeasibleError(const std::string& what, int iteration)
        : std::runtime_error(what), iteration(iteration) {}
    int iteration = 0;
};
struct RankRecoveryFailedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Fractional-programming and rate-transform auxiliaries. mu is the current
/// rate/power ratio in bits; the subproblem matrices weight power terms with
/// mu_eff() so that the rate side (kept in nats by the transform) and the
/// power side use one consistent unit.
struct AuxState {
    double mu = 0.0;           ///< bits/s/Hz per watt
    RVec rho;                  ///< per-user rate auxiliaries
    CVec nu;                   ///< per-user quadratic-transform auxiliaries
    double mu_eff() const { return mu * 0.6931471805599453; }
};

/// mu <- R / P from the current operating point.
double update_dinkelbach(const MetricsReport& metrics);

/// Positive root of the rate-auxiliary stationary condition
/// 1/(1+rho) - 1 + iota/sqrt(1+rho) = 0.
double rho_from_iota(double iota);

/// Joint stationary point of the rate auxiliaries at the current beams:
/// rho_k equals the user SINR and nu_k the matched response scaling, which
/// makes the transformed objective coincide with the true rate. Iterating
/// rho-from-nu / nu-from-rho converges to the same pair but at a rate that
/// degrades with SINR, so the fixed point is computed directly; it satisfies
/// rho_k = rho_from_iota(Re{conj(nu_k) h_k^H w_k}) identically.
AuxState update_auxiliaries(const ChannelSet& ch, const DesignVariables& v,
                            const ModelParams& p, const AuxState& aux);

/// Concave-over-convex surrogate of the rate objective minus mu times power,
/// evaluated directly from the physical model. Used to accept or reject
/// candidate beam updates so the outer objective never decreases.
double transformed_objective(const ChannelSet& ch, const DesignVariables& v,
                             const ModelParams& p, const AuxState& aux);

/// Unit-norm maximizer of the radar output SNR for fixed (W, psi).
CVec solve_receive_beamformer(const ChannelSet& ch, const DesignVariables& v,
                              const ModelParams& p);

// ---------------------------------------------------------------------------
// transmit subproblem (lifted blocks of dimension m + 1)
// ---------------------------------------------------------------------------

struct TransmitSubproblem {
    SdpProblem problem;
    std::vector<CMat> h_k;       ///< cascaded user channels
    std::vector<double> c0;      ///< per-user noise constants
    CMat h_z;                    ///< RIS forward-power coupling, m x m
    CMat h_u;                    ///< sensing coupling in BS space, m x m
    double ptilde_isac = 0.0;
    double ptilde_ris = 0.0;
    double gamma_tilde_r = 0.0;
    double mu_eff = 0.0;
    bool trivially_infeasible = false;  ///< sensing row required but identically zero
};

TransmitSubproblem build_transmit_sdp(const ChannelSet& ch, const DesignVariables& v,
                                      const AuxState& aux, const ModelParams& p);

/// Objective of the transmit subproblem evaluated directly at a candidate W
/// (border terms, quadratic user terms and the power tilt; no constants).
double transmit_objective_direct(const TransmitSubproblem& sub, const ChannelSet& ch,
                                 const DesignVariables& v, const AuxState& aux,
                                 const ModelParams& p);

// ---------------------------------------------------------------------------
// surface subproblem (lifted block of dimension n + 1)
// ---------------------------------------------------------------------------

/// Implicit Kronecker-structured quartic coefficient: V = right^T (x) left,
/// scaled; applying V to vec(S) is left * S * right (times scale).
struct KronOp {
    CMat left;
    CMat right;
    double scale = 1.0;

    CMat apply(const CMat& s) const { return scale * (left * s * right); }
    Eigen::Index dim() const { return left.rows() * right.rows(); }
};

struct QuarticSurrogate {
    CMat xbar;      ///< unvec((V - lambda I) x_s)
    double c = 0.0; ///< x_s^*(lambda I - V)x_s + lambda n^2 a_max^4
};

/// Majorize x^* V x (x = vec(psi psi^*)) by a quadratic in psi plus a
/// constant, anchored at x_s = vec(s_s); lambda must dominate lambda_max(V).
QuarticSurrogate majorize_quartic(const KronOp& v, double lambda, const CMat& s_s, double a_max);

struct SurrogateEigs {
    double lambda_w = 0.0;   ///< largest eigenvalue of the compressed forward power
    double lambda_t = 0.0;   ///< largest eigenvalue of the sensing difference matrix
    double lambda_v1 = 0.0;
    double lambda_v2 = 0.0;
    double lambda_v3 = 0.0;
};

struct RisSubproblem {
    SdpProblem problem;
    CVec b1;
    CMat a1, a2, a3;
    CMat wbar;                ///< G W W^* G^*
    CMat wbar_t;              ///< target-side compression of wbar
    CMat wbar_t2;             ///< (k+m)-dimensional twin of wbar_t (same nonzero spectrum)
    CMat hbar_rt;             ///< |h_rt|^2 diagonal
    CMat ubar_t;              ///< receive-filter image at the surface (rank one)
    CMat gbar;                ///< diag |G u|^2
    std::vector<CMat> wbar_kk, wbar_k, hbar_rk;
    KronOp v1, v2, v3;
    SurrogateEigs eigs;
    QuarticSurrogate s1, s2, s3;
    CVec x_s;                 ///< anchor vec(psi_s psi_s^*)
    double pbar_ris = 0.0;
    double mu_eff = 0.0;
    double obj_constant = 0.0;  ///< constant dropped from the lifted objective
    bool trivially_infeasible = false;
};

/// Eigenvalue shortcuts for the three quartic coefficients; never forms the
/// n^2 x n^2 matrices. The default adds the dynamic-noise Weyl margin so the
/// returned values always dominate; paper_exact_prop1 switches to the bare
/// shortcut formulas.
SurrogateEigs surrogate_eigenvalues(const CMat& wbar_t2, const CMat& hbar_rt, const CMat& ubar_t,
                                    const CMat& wbar_t, double mu_zeta, double tau_r,
                                    double sigma0, bool paper_exact);

RisSubproblem build_ris_sdp(const ChannelSet& ch, const DesignVariables& v,
                            const AuxState& aux, const ModelParams& p);

/// Pre-surrogate subproblem objective at a candidate psi:
/// 2 Re{b1^* psi} - psi^* A1 psi - x^* V1 x.
double ris_objective_direct(const RisSubproblem& sub, const CVec& psi);

// ---------------------------------------------------------------------------
// recovery and outer loop
// ---------------------------------------------------------------------------

/// Principal-eigenpair de-lift of one block; throws RankRecoveryFailedError
/// when the homogenization entry is degenerate.
CVec recover_lifted_column(const CMat& lifted);

struct BeamUpdateResult {
    bool accepted = false;   ///< false means the previous iterate was kept
    SdpStatus sdp_status = SdpStatus::MaxIter;
    std::vector<CMat> lifted;  ///< solver blocks, reusable as warm start
};

/// Solve + de-lift + repair for W. Keeps the previous beams unless a feasible
/// candidate with no objective loss is found (candidates: de-lift, then 100
/// Gaussian redraws from the lifted solution).
BeamUpdateResult update_transmit_beams(const TransmitSubproblem& sub, const ChannelSet& ch,
                                       DesignVariables& v, const AuxState& aux,
                                       const ModelParams& p, Rng& rng,
                                       const std::vector<CMat>* warm);

BeamUpdateResult update_ris_beams(const RisSubproblem& sub, const ChannelSet& ch,
                                  DesignVariables& v, const AuxState& aux,
                                  const ModelParams& p, Rng& rng,
                                  const std::vector<CMat>* warm);

/// Feasible starting point: random surface phases, matched-filter beams with
/// a QoS-aware power split, amplitude chosen to respect the surface budget,
/// then the optimal receive filter; up to 50 restarts.
DesignVariables initialize_variables(const ChannelSet& ch, const ModelParams& p,
                                     std::uint64_t seed, std::uint64_t trial);

struct TraceRow {
    int iteration = 0;
    double eta = 0.0;
    double sum_rate = 0.0;
    double p_total_watts = 0.0;
    double min_user_sinr_slack = 0.0;
    double echo_snr_slack = 0.0;
    double max_psi_magnitude = 0.0;
    // diagnostics, not serialized
    double eta_after_u = 0.0;
    double eta_after_w = 0.0;
    double eta_after_psi = 0.0;
    bool w_stalled = false;
    bool psi_stalled = false;
};

struct ConvergenceTrace {
    std::vector<TraceRow> rows;
};

void serialize_trace(const ConvergenceTrace& trace, std::ostream& os);

struct RunResult {
    Scheme scheme = Scheme::ActiveEE;
    DesignVariables vars;
    MetricsReport metrics;
    ConvergenceTrace trace;
    bool converged = false;
    int iterations = 0;
};

/// Alternating loop: ratio weight, rate auxiliaries, receive filter, transmit
/// beams, surface beams; stops when the scheme objective changes by less than
/// cfg.eta_rel_tol (relative) or after cfg.max_outer_iters rounds.
RunResult run_scheme(const SystemConfig& cfg, const ChannelSet& ch, Scheme scheme);

/// Convenience wrapper: draw channels for (cfg.seed, trial) and run ActiveEE.
RunResult run_algorithm1(const SystemConfig& cfg, std::uint64_t trial = 0);

} // namespace arisopt
