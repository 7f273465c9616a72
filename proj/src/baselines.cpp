#include "arisopt/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace arisopt {

RunResult run_passive_ee(const SystemConfig& cfg, std::uint64_t trial) {
    ChannelSet ch = generate_channels(cfg, trial);
    return run_scheme(cfg, ch, Scheme::PassiveEE);
}

RunResult run_se_max(const SystemConfig& cfg, std::uint64_t trial) {
    ChannelSet ch = generate_channels(cfg, trial);
    return run_scheme(cfg, ch, Scheme::SEMax);
}

RunResult run_random_on_channels(const SystemConfig& cfg, const ChannelSet& ch, int attempts) {
    if (attempts < 1) throw std::invalid_argument("run_random_on_channels: attempts must be >= 1");
    ModelParams p = make_model_params(cfg, Scheme::NoOpt);
    Rng rng(cfg.seed, ch.trial, "noopt");

    DesignVariables v;
    v.w = CMat(p.m, p.k + p.m);
    for (Eigen::Index j = 0; j < v.w.cols(); ++j)
        for (Eigen::Index i = 0; i < v.w.rows(); ++i) v.w(i, j) = rng.cnormal();
    // scale just inside the BS budget so the check passes with margin
    double w_cap = 0.999 * (p.p_isac_max_w - p.p_st_w) / p.xi;
    v.w *= std::sqrt(w_cap / v.w.squaredNorm());

    CVec phases(p.n);
    for (int i = 0; i < p.n; ++i) phases(i) = std::polar(1.0, rng.phase());
    auto ris_power_at = [&](double a) {
        DesignVariables probe = v;
        probe.psi = a * phases;
        return power_ris(ch, probe, p);
    };
    double a0 = p.a_max;
    if (ris_power_at(a0) > p.p_ris_max_w) {
        double lo = 1e-6, hi = p.a_max;
        for (int it = 0; it < 60; ++it) {
            double mid = 0.5 * (lo + hi);
            (ris_power_at(mid) <= p.p_ris_max_w ? lo : hi) = mid;
        }
        a0 = lo;
    }
    v.psi = a0 * phases;

    CVec u(p.m);
    for (int i = 0; i < p.m; ++i) u(i) = rng.cnormal();
    v.u = u / u.norm();

    RunResult res;
    res.scheme = Scheme::NoOpt;
    res.vars = v;
    res.metrics = evaluate_metrics(ch, v, p);
    res.converged = true;
    res.iterations = 0;
    FeasibilityReport fr = check_feasibility(ch, v, p, 1e-9);
    TraceRow row;
    row.iteration = 0;
    row.eta = res.metrics.ee;
    row.sum_rate = res.metrics.sum_rate;
    row.p_total_watts = res.metrics.p_total;
    row.min_user_sinr_slack = *std::min_element(fr.sinr_slack.begin(), fr.sinr_slack.end());
    row.echo_snr_slack = fr.echo_slack;
    row.max_psi_magnitude = v.psi.cwiseAbs().maxCoeff();
    res.trace.rows.push_back(row);
    return res;
}

RunResult run_random_baseline(const SystemConfig& cfg, int attempts, std::uint64_t trial) {
    ChannelSet ch = generate_channels(cfg, trial);
    return run_random_on_channels(cfg, ch, attempts);
}

RunResult run_benchmark(const SystemConfig& cfg, const ChannelSet& ch, Scheme scheme,
                        int attempts) {
    if (scheme == Scheme::NoOpt) return run_random_on_channels(cfg, ch, attempts);
    return run_scheme(cfg, ch, scheme);
}

} // namespace arisopt
