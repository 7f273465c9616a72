#include "arisopt/model.hpp"

#include <cmath>

namespace arisopt {

const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::ActiveEE: return "ActiveEE";
        case Scheme::PassiveEE: return "PassiveEE";
        case Scheme::SEMax: return "SEMax";
        case Scheme::NoOpt: return "NoOpt";
    }
    return "?";
}

Scheme scheme_from_name(const std::string& name) {
    if (name == "ActiveEE") return Scheme::ActiveEE;
    if (name == "PassiveEE") return Scheme::PassiveEE;
    if (name == "SEMax") return Scheme::SEMax;
    if (name == "NoOpt") return Scheme::NoOpt;
    throw std::invalid_argument("unknown scheme '" + name + "'");
}

ModelParams make_model_params(const SystemConfig& cfg, Scheme scheme) {
    ModelParams p;
    p.m = cfg.m;
    p.n = cfg.n;
    p.k = cfg.k;
    p.xi = cfg.xi;
    p.zeta = cfg.zeta;
    p.p_st_w = dbm_to_watts(cfg.p_st_dbm);
    p.p_rp_w = dbm_to_watts(cfg.p_rp_dbm);
    p.p_ra_w = dbm_to_watts(cfg.p_ra_dbm);
    p.sigma0_w = dbm_to_watts(cfg.sigma0_dbm);
    p.sigma_k_w = dbm_to_watts(cfg.sigma_k_dbm);
    p.sigma_r_w = dbm_to_watts(cfg.sigma_r_dbm);
    p.tau_k.resize(cfg.k);
    for (int i = 0; i < cfg.k; ++i) {
        double db = cfg.tau_k_db.size() == 1 ? cfg.tau_k_db[0] : cfg.tau_k_db[i];
        p.tau_k[i] = std::pow(10.0, db / 10.0);
    }
    p.tau_r = std::pow(10.0, cfg.tau_r_db / 10.0);
    p.a_max = cfg.a_max;
    p.p_isac_max_w = cfg.p_isac_max_watts();
    p.p_ris_max_w = cfg.p_ris_max_watts();
    p.paper_exact_prop1 = cfg.paper_exact_prop1;

    if (scheme == Scheme::PassiveEE) {
        // Passive limit: reflection only. No dynamic noise, no amplifier
        // draw, and the element budget collapses to the phase-shifter bias.
        p.a_max = 1.0;
        p.sigma0_w = 0.0;
        p.p_ra_w = 0.0;
        p.zeta = 0.0;
        p.unit_modulus = true;
        p.ris_budget_active = false;
    }
    if (scheme == Scheme::SEMax) {
        p.mu_frozen_zero = true;
    }
    return p;
}

CVec cascaded_user_channel(const ChannelSet& ch, const CVec& psi, int user) {
    if (psi.size() != ch.g.rows()) {
        throw DimensionMismatchError("cascaded_user_channel: psi length != RIS size");
    }
    if (user < 0 || user >= ch.h_ru.cols()) {
        throw DimensionMismatchError("cascaded_user_channel: user index out of range");
    }
    // h_k = G^* diag(psi) h_{r,k}
    return ch.g.adjoint() * psi.cwiseProduct(ch.h_ru.col(user));
}

SensingChannels sensing_channels(const ChannelSet& ch, const CVec& psi) {
    if (psi.size() != ch.g.rows()) {
        throw DimensionMismatchError("sensing_channels: psi length != RIS size");
    }
    SensingChannels s;
    CVec vr = psi.cwiseProduct(ch.h_rt);   // diag(psi) h_rt
    CVec gt = ch.g.adjoint() * vr;         // G^* diag(psi) h_rt
    s.h_t = gt * gt.adjoint();
    s.h_z0 = gt * vr.adjoint();
    s.h_z1 = ch.g.adjoint() * CMat(psi.asDiagonal());
    return s;
}

double user_sinr(const ChannelSet& ch, const DesignVariables& v, const ModelParams& p, int user) {
    CVec hk = cascaded_user_channel(ch, v.psi, user);
    Eigen::RowVectorXcd resp = hk.adjoint() * v.w;  // h_k^* w_i for every beam
    double sig = std::norm(resp(user));
    double interf = resp.squaredNorm() - sig;
    double dyn = p.sigma0_w * v.psi.cwiseProduct(ch.h_ru.col(user)).squaredNorm();
    return sig / (interf + dyn + p.sigma_k_w);
}

double sum_rate(const ChannelSet& ch, const DesignVariables& v, const ModelParams& p) {
    double acc = 0.0;
    for (int u = 0; u < p.k; ++u) {
        acc += std::log2(1.0 + user_sinr(ch, v, p, u));
    }
    return acc;
}

double echo_snr(const ChannelSet& ch, const DesignVariables& v, const ModelParams& p) {
    SensingChannels s = sensing_channels(ch, v.psi);
    CVec hu = s.h_t.adjoint() * v.u;               // H_t^* u
    double num = (v.w.adjoint() * hu).squaredNorm();  // sum_i |u^* H_t w_i|^2
    double den = p.sigma0_w * (s.h_z0.adjoint() * v.u).squaredNorm() +
                 p.sigma0_w * (s.h_z1.adjoint() * v.u).squaredNorm() +
                 p.sigma_r_w * v.u.squaredNorm();
    return num / den;
}

double power_isac(const DesignVariables& v, const ModelParams& p) {
    return p.xi * v.w.squaredNorm() + p.p_st_w;
}

double power_ris(const ChannelSet& ch, const DesignVariables& v, const ModelParams& p) {
    double fixed = p.n * (p.p_rp_w + p.p_ra_w);
    if (p.zeta == 0.0) return fixed;  // passive surface: bias draw only
    CMat gw = ch.g * v.w;                               // N x (K+M)
    CMat psig_w = v.psi.conjugate().asDiagonal() * gw;  // Psi^* G W
    CVec vr = v.psi.cwiseProduct(ch.h_rt);              // Psi h_rt
    Eigen::RowVectorXcd echo_fwd = vr.adjoint() * gw;   // h_rt^* Psi^* G W
    double amp = psig_w.squaredNorm()                                  // forward signal
               + 2.0 * p.sigma0_w * v.psi.squaredNorm()                // dynamic noise, both passes
               + vr.squaredNorm() * echo_fwd.squaredNorm()             // signal echoed via the target
               + p.sigma0_w * vr.squaredNorm() * vr.squaredNorm();     // noise echoed via the target
    return fixed + p.zeta * amp;
}

MetricsReport evaluate_metrics(const ChannelSet& ch, const DesignVariables& v, const ModelParams& p) {
    MetricsReport r;
    r.sinr.resize(p.k);
    r.sum_rate = 0.0;
    for (int u = 0; u < p.k; ++u) {
        r.sinr[u] = user_sinr(ch, v, p, u);
        r.sum_rate += std::log2(1.0 + r.sinr[u]);
    }
    r.echo_snr = echo_snr(ch, v, p);
    r.p_isac = power_isac(v, p);
    r.p_ris = power_ris(ch, v, p);
    r.p_total = r.p_isac + r.p_ris;
    r.ee = r.sum_rate / r.p_total;
    return r;
}

FeasibilityReport check_feasibility(const ChannelSet& ch, const DesignVariables& v,
                                    const ModelParams& p, double rel_tol) {
    FeasibilityReport rep;
    MetricsReport m = evaluate_metrics(ch, v, p);

    auto flag = [&](double slack, const std::string& name) {
        if (slack < -rel_tol) {
            rep.feasible = false;
            rep.violations.push_back(name);
        }
    };

    rep.p_isac_slack = (p.p_isac_max_w - m.p_isac) / p.p_isac_max_w;
    flag(rep.p_isac_slack, "p_isac");
    rep.p_ris_slack = (p.p_ris_max_w - m.p_ris) / p.p_ris_max_w;
    flag(rep.p_ris_slack, "p_ris");

    rep.sinr_slack.resize(p.k);
    for (int u = 0; u < p.k; ++u) {
        rep.sinr_slack[u] = (m.sinr[u] - p.tau_k[u]) / std::max(p.tau_k[u], 1e-300);
        flag(rep.sinr_slack[u], "sinr[" + std::to_string(u) + "]");
    }
    rep.echo_slack = (m.echo_snr - p.tau_r) / std::max(p.tau_r, 1e-300);
    flag(rep.echo_slack, "echo_snr");

    double worst = 1.0;
    for (Eigen::Index i = 0; i < v.psi.size(); ++i) {
        worst = std::min(worst, (p.a_max - std::abs(v.psi(i))) / p.a_max);
    }
    rep.amp_slack = worst;
    flag(rep.amp_slack, "amplification");

    return rep;
}

} // namespace arisopt
