#pragma once

#include "arisopt/scenario.hpp"

#include <string>
#include <vector>

namespace arisopt {

enum class Scheme { ActiveEE, PassiveEE, SEMax, NoOpt };

const char* scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

/// Linear-scale parameters actually used by the signal and power model.
/// Schemes tweak these: the passive variants zero the RIS dynamic noise and
/// the amplification power draw and force unit modulus.
struct ModelParams {
    int m = 0, n = 0, k = 0;
    double xi = 1.1;
    double zeta = 1.1;           ///< 0 in the passive power model
    double p_st_w = 0.0;
    double p_rp_w = 0.0;
    double p_ra_w = 0.0;         ///< 0 for a passive surface
    double sigma0_w = 0.0;       ///< RIS dynamic noise power; 0 for passive
    double sigma_k_w = 0.0;
    double sigma_r_w = 0.0;
    std::vector<double> tau_k;   ///< per-user SINR thresholds, linear
    double tau_r = 1.0;          ///< echo SNR threshold, linear
    double a_max = 10.0;         ///< 1 for passive
    double p_isac_max_w = 0.0;
    double p_ris_max_w = 0.0;
    bool unit_modulus = false;   ///< project |psi_n| = 1 (passive surface)
    bool mu_frozen_zero = false; ///< rate-only objective (spectral-efficiency scheme)
    bool ris_budget_active = true;  ///< false when the RIS draw is a constant
    bool paper_exact_prop1 = false;
};

ModelParams make_model_params(const SystemConfig& cfg, Scheme scheme);

struct DesignVariables {
    CMat w;    ///< BS beams, m x (k + m); first k columns serve users
    CVec psi;  ///< RIS diagonal (amplitude * phase per element)
    CVec u;    ///< radar receive filter, unit norm
};

/// Effective BS-to-user channel through the surface for user k.
CVec cascaded_user_channel(const ChannelSet& ch, const CVec& psi, int user);

struct SensingChannels {
    CMat h_t;   ///< m x m, target echo (rank one)
    CMat h_z0;  ///< m x n, dynamic noise bounced off the target
    CMat h_z1;  ///< m x n, dynamic noise on the direct return
};

SensingChannels sensing_channels(const ChannelSet& ch, const CVec& psi);

double user_sinr(const ChannelSet& ch, const DesignVariables& v, const ModelParams& p, int user);
double sum_rate(const ChannelSet& ch, const DesignVariables& v, const ModelParams& p);
double echo_snr(const ChannelSet& ch, const DesignVariables& v, const ModelParams& p);

double power_isac(const DesignVariables& v, const ModelParams& p);
double power_ris(const ChannelSet& ch, const DesignVariables& v, const ModelParams& p);

struct MetricsReport {
    std::vector<double> sinr;
    double sum_rate = 0.0;   ///< bits/s/Hz
    double echo_snr = 0.0;
    double p_isac = 0.0;
    double p_ris = 0.0;
    double p_total = 0.0;
    double ee = 0.0;         ///< sum_rate / p_total
};

MetricsReport evaluate_metrics(const ChannelSet& ch, const DesignVariables& v, const ModelParams& p);

struct FeasibilityReport {
    bool feasible = true;
    double p_isac_slack = 0.0;   ///< (limit - value) / limit
    double p_ris_slack = 0.0;
    std::vector<double> sinr_slack;  ///< (sinr - tau) / tau per user
    double echo_slack = 0.0;
    double amp_slack = 0.0;      ///< min over elements of (a_max - |psi|) / a_max
    std::vector<std::string> violations;
};

/// Evaluates the five constraint families with a relative slack tolerance.
FeasibilityReport check_feasibility(const ChannelSet& ch, const DesignVariables& v,
                                    const ModelParams& p, double rel_tol = 1e-6);

} // namespace arisopt
