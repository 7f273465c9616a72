#pragma once

#include "arisopt/rng.hpp"
#include "arisopt/scenario.hpp"

namespace testutil {

inline arisopt::CMat random_cmat(arisopt::Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    arisopt::CMat a(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) a(i, j) = rng.cnormal();
    return a;
}

inline arisopt::CMat random_hermitian(arisopt::Rng& rng, Eigen::Index n) {
    arisopt::CMat a = random_cmat(rng, n, n);
    return 0.5 * (a + a.adjoint());
}

inline arisopt::CMat random_psd(arisopt::Rng& rng, Eigen::Index n) {
    arisopt::CMat a = random_cmat(rng, n, n);
    return a * a.adjoint();
}

inline arisopt::CVec random_cvec(arisopt::Rng& rng, Eigen::Index n) {
    arisopt::CVec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.cnormal();
    return v;
}

inline arisopt::CVec random_unit(arisopt::Rng& rng, Eigen::Index n) {
    arisopt::CVec v = random_cvec(rng, n);
    return v / v.norm();
}

/// Small instance the iterative tests run on: a 4-antenna BS, an 8-element
/// surface and 2 users close to the surface, so one full optimization
/// finishes in a couple of seconds. Mirrors configs/desk.ini.
inline arisopt::SystemConfig desk_config() {
    arisopt::SystemConfig cfg;
    cfg.m = 4;
    cfg.n = 8;
    cfg.k = 2;
    cfg.max_outer_iters = 100;
    cfg.eta_rel_tol = 1e-3;
    cfg.p_total_dbm = 10.0;
    cfg.alpha = 0.9;
    cfg.xi = 1.1;
    cfg.zeta = 1.1;
    cfg.p_st_dbm = -10.0;
    cfg.p_rp_dbm = -30.0;
    cfg.p_ra_dbm = -30.0;
    cfg.sigma0_dbm = -80.0;
    cfg.sigma_k_dbm = -80.0;
    cfg.sigma_r_dbm = -80.0;
    cfg.tau_k_db = {10.0};
    cfg.tau_r_db = 0.0;
    cfg.a_max = 10.0;
    cfg.bs = {0.0, 0.0};
    cfg.ris = {10.0, 0.0};
    cfg.target = {8.0, -2.0};
    cfg.user_center = {8.0, 3.0};
    cfg.user_zone_radius = 1.0;
    cfg.ref_loss_db = -20.0;
    cfg.exp_bs_ris = 2.2;
    cfg.exp_ris_user = 2.8;
    cfg.exp_ris_target = 2.8;
    cfg.rician_kappa = 0.0;
    cfg.seed = 1;
    return cfg;
}

} // namespace testutil
