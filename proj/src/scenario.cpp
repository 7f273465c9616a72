#include "arisopt/scenario.hpp"

#include "arisopt/rng.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>

namespace arisopt {

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

double SystemConfig::p_total_watts() const { return dbm_to_watts(p_total_dbm); }
double SystemConfig::p_isac_max_watts() const { return alpha * p_total_watts(); }
double SystemConfig::p_ris_max_watts() const { return (1.0 - alpha) * p_total_watts(); }

namespace {

double dist(const Vec2& a, const Vec2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

void require(bool cond, const char* field, const char* why) {
    if (!cond) throw ConfigError(field, why);
}

} // namespace

void validate_config(const SystemConfig& cfg) {
    require(cfg.m >= 1, "system.m", "need at least one BS antenna");
    require(cfg.n >= 1, "system.n", "need at least one RIS element");
    require(cfg.k >= 1, "system.k", "need at least one user");
    require(cfg.max_outer_iters >= 1, "system.max_outer_iters", "must be positive");
    require(cfg.eta_rel_tol > 0, "system.eta_rel_tol", "must be positive");

    require(std::isfinite(cfg.p_total_dbm), "power.p_total_dbm", "must be finite");
    require(cfg.alpha > 0.0 && cfg.alpha < 1.0, "power.alpha", "budget split must lie strictly inside (0, 1)");
    require(cfg.xi > 0.0, "power.xi", "amplifier inefficiency must be positive");
    require(cfg.zeta > 0.0, "power.zeta", "amplifier inefficiency must be positive");
    require(std::isfinite(cfg.p_st_dbm), "power.p_st_dbm", "must be finite");
    require(std::isfinite(cfg.p_rp_dbm), "power.p_rp_dbm", "must be finite");
    require(std::isfinite(cfg.p_ra_dbm), "power.p_ra_dbm", "must be finite");
    require(std::isfinite(cfg.sigma0_dbm), "power.sigma0_dbm", "must be finite");
    require(std::isfinite(cfg.sigma_k_dbm), "power.sigma_k_dbm", "must be finite");
    require(std::isfinite(cfg.sigma_r_dbm), "power.sigma_r_dbm", "must be finite");

    require(cfg.a_max >= 1.0, "thresholds.a_max", "amplifying RIS requires a_max >= 1");
    require(cfg.tau_k_db.size() == 1 || cfg.tau_k_db.size() == static_cast<std::size_t>(cfg.k),
            "thresholds.tau_k_db", "need one entry or one per user");
    for (double t : cfg.tau_k_db) {
        require(std::isfinite(t), "thresholds.tau_k_db", "must be finite");
    }
    require(std::isfinite(cfg.tau_r_db), "thresholds.tau_r_db", "must be finite");

    require(cfg.user_zone_radius >= 0.0, "geometry.user_zone_radius", "must be nonnegative");
    require(dist(cfg.bs, cfg.ris) > 0.0, "geometry.ris", "RIS must not coincide with the BS");
    require(dist(cfg.target, cfg.ris) > 0.0, "geometry.target", "target must not coincide with the RIS");
    require(dist(cfg.user_center, cfg.ris) > cfg.user_zone_radius,
            "geometry.user_center", "user zone must not contain the RIS");

    require(std::isfinite(cfg.ref_loss_db), "pathloss.ref_loss_db", "must be finite");
    require(cfg.exp_bs_ris >= 0.0, "pathloss.exp_bs_ris", "must be nonnegative");
    require(cfg.exp_ris_user >= 0.0, "pathloss.exp_ris_user", "must be nonnegative");
    require(cfg.exp_ris_target >= 0.0, "pathloss.exp_ris_target", "must be nonnegative");
    require(cfg.rician_kappa >= 0.0, "pathloss.rician_kappa", "must be nonnegative");
}

namespace {

using KeyHandler = void (*)(SystemConfig&, const std::string&, const std::string&);

double parse_double(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        throw ConfigError(key, "not a number: '" + value + "'");
    }
    if (used != value.size()) throw ConfigError(key, "trailing characters in '" + value + "'");
    return v;
}

long parse_int(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    long v = 0;
    try {
        v = std::stol(value, &used);
    } catch (const std::exception&) {
        throw ConfigError(key, "not an integer: '" + value + "'");
    }
    if (used != value.size()) throw ConfigError(key, "trailing characters in '" + value + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError(key, "expected a boolean, got '" + value + "'");
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        // allow spaces around commas
        std::size_t a = item.find_first_not_of(" \t");
        std::size_t b = item.find_last_not_of(" \t");
        if (a == std::string::npos) throw ConfigError(key, "empty list entry");
        out.push_back(parse_double(key, item.substr(a, b - a + 1)));
    }
    if (out.empty()) throw ConfigError(key, "empty list");
    return out;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace

SystemConfig parse_config(std::istream& in) {
    SystemConfig cfg;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("line " + std::to_string(lineno), "malformed section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            static const std::set<std::string> known = {"system", "power", "thresholds",
                                                        "geometry", "pathloss", "rng"};
            if (!known.count(section)) throw ConfigError(section, "unknown section");
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno), "expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (section.empty()) throw ConfigError(key, "key appears before any section");
        std::string full = section + "." + key;

        if (full == "system.m") cfg.m = static_cast<int>(parse_int(full, value));
        else if (full == "system.n") cfg.n = static_cast<int>(parse_int(full, value));
        else if (full == "system.k") cfg.k = static_cast<int>(parse_int(full, value));
        else if (full == "system.max_outer_iters") cfg.max_outer_iters = static_cast<int>(parse_int(full, value));
        else if (full == "system.eta_rel_tol") cfg.eta_rel_tol = parse_double(full, value);
        else if (full == "system.paper_exact_prop1") cfg.paper_exact_prop1 = parse_bool(full, value);
        else if (full == "power.p_total_dbm") cfg.p_total_dbm = parse_double(full, value);
        else if (full == "power.alpha") cfg.alpha = parse_double(full, value);
        else if (full == "power.xi") cfg.xi = parse_double(full, value);
        else if (full == "power.zeta") cfg.zeta = parse_double(full, value);
        else if (full == "power.p_st_dbm") cfg.p_st_dbm = parse_double(full, value);
        else if (full == "power.p_rp_dbm") cfg.p_rp_dbm = parse_double(full, value);
        else if (full == "power.p_ra_dbm") cfg.p_ra_dbm = parse_double(full, value);
        else if (full == "power.sigma0_dbm") cfg.sigma0_dbm = parse_double(full, value);
        else if (full == "power.sigma_k_dbm") cfg.sigma_k_dbm = parse_double(full, value);
        else if (full == "power.sigma_r_dbm") cfg.sigma_r_dbm = parse_double(full, value);
        else if (full == "thresholds.tau_k_db") cfg.tau_k_db = parse_double_list(full, value);
        else if (full == "thresholds.tau_r_db") cfg.tau_r_db = parse_double(full, value);
        else if (full == "thresholds.a_max") cfg.a_max = parse_double(full, value);
        else if (full == "geometry.bs_x") cfg.bs.x = parse_double(full, value);
        else if (full == "geometry.bs_y") cfg.bs.y = parse_double(full, value);
        else if (full == "geometry.ris_x") cfg.ris.x = parse_double(full, value);
        else if (full == "geometry.ris_y") cfg.ris.y = parse_double(full, value);
        else if (full == "geometry.target_x") cfg.target.x = parse_double(full, value);
        else if (full == "geometry.target_y") cfg.target.y = parse_double(full, value);
        else if (full == "geometry.user_center_x") cfg.user_center.x = parse_double(full, value);
        else if (full == "geometry.user_center_y") cfg.user_center.y = parse_double(full, value);
        else if (full == "geometry.user_zone_radius") cfg.user_zone_radius = parse_double(full, value);
        else if (full == "pathloss.ref_loss_db") cfg.ref_loss_db = parse_double(full, value);
        else if (full == "pathloss.exp_bs_ris") cfg.exp_bs_ris = parse_double(full, value);
        else if (full == "pathloss.exp_ris_user") cfg.exp_ris_user = parse_double(full, value);
        else if (full == "pathloss.exp_ris_target") cfg.exp_ris_target = parse_double(full, value);
        else if (full == "pathloss.rician_kappa") cfg.rician_kappa = parse_double(full, value);
        else if (full == "rng.seed") cfg.seed = static_cast<std::uint64_t>(parse_int(full, value));
        else throw ConfigError(full, "unknown key");
    }
    validate_config(cfg);
    return cfg;
}

SystemConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open config file");
    return parse_config(in);
}

namespace {

/// Half-wavelength ULA response for an array laid along the x axis; phi is
/// the azimuth of the link direction measured from the positive x axis.
CVec steering(int n_elem, double phi) {
    CVec a(n_elem);
    double step = M_PI * std::cos(phi);
    for (int i = 0; i < n_elem; ++i) {
        a(i) = std::polar(1.0, step * static_cast<double>(i));
    }
    return a;
}

double azimuth(const Vec2& from, const Vec2& to) { return std::atan2(to.y - from.y, to.x - from.x); }

CMat nlos_matrix(int rows, int cols, Rng& rng) {
    CMat h(rows, cols);
    // Column order fixed so the draw sequence is part of the contract.
    for (int j = 0; j < cols; ++j) {
        for (int i = 0; i < rows; ++i) {
            h(i, j) = rng.cnormal();
        }
    }
    return h;
}

} // namespace

ChannelSet generate_channels(const SystemConfig& cfg, std::uint64_t trial) {
    validate_config(cfg);
    ChannelSet ch;
    ch.trial = trial;

    const double kap = cfg.rician_kappa;
    const double los_w = std::sqrt(kap / (1.0 + kap));
    const double nlos_w = std::sqrt(1.0 / (1.0 + kap));
    const double ref = std::pow(10.0, cfg.ref_loss_db / 10.0);
    auto pl = [&](double d, double expo) { return ref * std::pow(d, -expo); };

    // BS -> RIS
    {
        double d = std::hypot(cfg.ris.x - cfg.bs.x, cfg.ris.y - cfg.bs.y);
        CVec a_r = steering(cfg.n, azimuth(cfg.ris, cfg.bs));
        CVec a_b = steering(cfg.m, azimuth(cfg.bs, cfg.ris));
        Rng rng(cfg.seed, trial, "G");
        CMat nlos = nlos_matrix(cfg.n, cfg.m, rng);
        ch.g = std::sqrt(pl(d, cfg.exp_bs_ris)) *
               (los_w * (a_r * a_b.adjoint()) + nlos_w * nlos);
    }

    // user drops, then RIS -> user links
    ch.user_pos.resize(cfg.k);
    {
        Rng rng(cfg.seed, trial, "userpos");
        for (int u = 0; u < cfg.k; ++u) {
            double r = cfg.user_zone_radius * std::sqrt(rng.uniform());
            double th = rng.phase();
            ch.user_pos[u] = {cfg.user_center.x + r * std::cos(th),
                              cfg.user_center.y + r * std::sin(th)};
        }
    }
    ch.h_ru.resize(cfg.n, cfg.k);
    for (int u = 0; u < cfg.k; ++u) {
        double d = std::hypot(ch.user_pos[u].x - cfg.ris.x, ch.user_pos[u].y - cfg.ris.y);
        CVec a_r = steering(cfg.n, azimuth(cfg.ris, ch.user_pos[u]));
        Rng rng(cfg.seed, trial, "hru:" + std::to_string(u));
        CMat nlos = nlos_matrix(cfg.n, 1, rng);
        ch.h_ru.col(u) = std::sqrt(pl(d, cfg.exp_ris_user)) * (los_w * a_r + nlos_w * nlos.col(0));
    }

    // RIS -> target
    {
        double d = std::hypot(cfg.target.x - cfg.ris.x, cfg.target.y - cfg.ris.y);
        CVec a_r = steering(cfg.n, azimuth(cfg.ris, cfg.target));
        Rng rng(cfg.seed, trial, "hrt");
        CMat nlos = nlos_matrix(cfg.n, 1, rng);
        ch.h_rt = std::sqrt(pl(d, cfg.exp_ris_target)) * (los_w * a_r + nlos_w * nlos.col(0));
    }
    return ch;
}

} // namespace arisopt
