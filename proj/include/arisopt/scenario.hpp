#pragma once

#include "arisopt/linalg.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace arisopt {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& field, const std::string& why)
        : std::runtime_error("config field '" + field + "': " + why), field(field) {}
    std::string field;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

/// Full experiment description. Angles and distances are derived from the
/// geometry; powers are stored in dBm exactly as configured and converted on
/// demand.
struct SystemConfig {
    // system
    int m = 8;   ///< BS antennas
    int n = 32;  ///< RIS elements
    int k = 4;   ///< users
    int max_outer_iters = 100;
    double eta_rel_tol = 1e-3;
    bool paper_exact_prop1 = false;  ///< verbatim eigenvalue shortcuts, no safety margin

    // power
    double p_total_dbm = 10.0;
    double alpha = 0.9;  ///< fraction of the total budget assigned to the BS
    double xi = 1.1;     ///< BS amplifier inefficiency
    double zeta = 1.1;   ///< RIS amplifier inefficiency
    double p_st_dbm = -10.0;
    double p_rp_dbm = -30.0;
    double p_ra_dbm = -30.0;
    double sigma0_dbm = -80.0;   ///< RIS dynamic noise
    double sigma_k_dbm = -80.0;  ///< user receiver noise
    double sigma_r_dbm = -80.0;  ///< radar receiver noise

    // thresholds
    std::vector<double> tau_k_db = {10.0, 10.0, 10.0, 10.0};
    double tau_r_db = 0.0;
    double a_max = 10.0;

    // geometry
    Vec2 bs{0.0, 0.0};
    Vec2 ris{250.0, 0.0};
    Vec2 target{200.0, -50.0};
    Vec2 user_center{200.0, 30.0};
    double user_zone_radius = 5.0;

    // pathloss
    double ref_loss_db = -30.0;  ///< loss at 1 m
    double exp_bs_ris = 2.2;
    double exp_ris_user = 2.8;
    double exp_ris_target = 2.8;
    double rician_kappa = 10.0;

    // rng
    std::uint64_t seed = 1;

    double p_total_watts() const;
    double p_isac_max_watts() const;  ///< alpha * total
    double p_ris_max_watts() const;   ///< (1 - alpha) * total
};

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

/// Range / consistency checks; throws ConfigError naming the offending field.
void validate_config(const SystemConfig& cfg);

/// Parse the key-value config document (sections: system, power, thresholds,
/// geometry, pathloss, rng). Unknown sections or keys are rejected. Fields not
/// present keep their defaults. The result is validated before returning.
SystemConfig parse_config(std::istream& in);
SystemConfig load_config(const std::string& path);

/// One Monte-Carlo draw of the propagation state.
struct ChannelSet {
    CMat g;       ///< BS to RIS, n x m
    CMat h_ru;    ///< RIS to users, n x k (one column per user)
    CVec h_rt;    ///< RIS to target, n
    std::vector<Vec2> user_pos;
    std::uint64_t trial = 0;
};

/// Rician small-scale fading on top of distance path loss; all randomness is
/// drawn from counter-based streams keyed by (seed, trial, link tag) so any
/// (config, trial) pair regenerates identical channels.
ChannelSet generate_channels(const SystemConfig& cfg, std::uint64_t trial);

} // namespace arisopt
