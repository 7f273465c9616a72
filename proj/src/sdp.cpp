#include "arisopt/sdp.hpp"

#include "arisopt/tolerances.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

namespace arisopt {

CMat project_psd(const CMat& s) {
    if (s.rows() != s.cols()) {
        throw DimensionMismatchError("project_psd: matrix must be square");
    }
    require_finite(s, "project_psd");
    if (!is_hermitian(s, 1e-9)) {
        throw NotHermitianError("project_psd: input is not Hermitian");
    }
    CMat h = 0.5 * (s + s.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(h);
    RVec clipped = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().adjoint();
}

namespace {

// Flat iterate: Hermitian blocks plus one slack scalar per inequality row.
struct Point {
    std::vector<CMat> x;
    Eigen::VectorXd s;
};

double dot(const Point& a, const Point& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.x.size(); ++i) {
        acc += a.x[i].cwiseProduct(b.x[i].conjugate()).sum().real();
    }
    if (a.s.size() > 0) acc += a.s.dot(b.s);
    return acc;
}

double norm(const Point& a) { return std::sqrt(std::max(0.0, dot(a, a))); }

struct Row {
    std::vector<CMat> mats;   // normalized, one per block (may be 0x0)
    double rhs = 0.0;         // normalized
    double rhs_orig = 0.0;
    double scale = 1.0;       // divisor applied to the original row
    Sense sense = Sense::EQ;
    int slack = -1;           // slack index, -1 for equalities
};

double row_value(const Row& row, const std::vector<CMat>& x) {
    double acc = 0.0;
    for (std::size_t b = 0; b < row.mats.size(); ++b) {
        if (row.mats[b].size() == 0) continue;
        acc += row.mats[b].cwiseProduct(x[b].conjugate()).sum().real();
    }
    return acc;
}

void validate(const SdpProblem& p) {
    if (p.block_dims.empty()) throw std::invalid_argument("solve_sdp: no blocks");
    for (int d : p.block_dims) {
        if (d < 1) throw std::invalid_argument("solve_sdp: block dimension must be positive");
    }
    if (p.objective.size() != p.block_dims.size()) {
        throw DimensionMismatchError("solve_sdp: objective must have one matrix per block");
    }
    for (std::size_t b = 0; b < p.objective.size(); ++b) {
        const CMat& c = p.objective[b];
        if (c.size() == 0) continue;
        if (c.rows() != p.block_dims[b] || c.cols() != p.block_dims[b]) {
            throw DimensionMismatchError("solve_sdp: objective block has wrong shape");
        }
        require_finite(c, "solve_sdp objective");
        if (!is_hermitian(c, 1e-9)) throw NotHermitianError("solve_sdp: objective block not Hermitian");
    }
    if (p.constraints.empty() && p.element_bounds.empty()) {
        throw std::invalid_argument("solve_sdp: problem has no constraints (unbounded risk)");
    }
    for (const auto& con : p.constraints) {
        if (con.mats.size() != p.block_dims.size()) {
            throw DimensionMismatchError("solve_sdp: constraint must have one matrix per block");
        }
        bool nonzero = false;
        for (std::size_t b = 0; b < con.mats.size(); ++b) {
            const CMat& a = con.mats[b];
            if (a.size() == 0) continue;
            if (a.rows() != p.block_dims[b] || a.cols() != p.block_dims[b]) {
                throw DimensionMismatchError("solve_sdp: constraint block has wrong shape");
            }
            require_finite(a, "solve_sdp constraint");
            if (!is_hermitian(a, 1e-9)) throw NotHermitianError("solve_sdp: constraint block not Hermitian");
            if (a.norm() > 0) nonzero = true;
        }
        if (!nonzero) throw std::invalid_argument("solve_sdp: constraint row is identically zero");
        if (!std::isfinite(con.rhs)) throw NonFiniteError("solve_sdp: constraint rhs not finite");
    }
    for (const auto& bd : p.element_bounds) {
        if (bd.block < 0 || bd.block >= static_cast<int>(p.block_dims.size()) ||
            bd.index < 0 || bd.index >= p.block_dims[bd.block]) {
            throw DimensionMismatchError("solve_sdp: element bound out of range");
        }
        if (!std::isfinite(bd.upper)) throw NonFiniteError("solve_sdp: element bound not finite");
    }
}

void validate_scaling(const SdpProblem& p, const std::vector<RVec>& scaling) {
    if (scaling.size() != p.block_dims.size()) {
        throw DimensionMismatchError("solve_sdp: var_scaling must have one vector per block");
    }
    for (std::size_t b = 0; b < scaling.size(); ++b) {
        if (scaling[b].size() != p.block_dims[b]) {
            throw DimensionMismatchError("solve_sdp: var_scaling vector has wrong length");
        }
        for (Eigen::Index i = 0; i < scaling[b].size(); ++i) {
            if (!(scaling[b](i) > 0.0) || !std::isfinite(scaling[b](i))) {
                throw std::invalid_argument("solve_sdp: var_scaling entries must be positive finite");
            }
        }
    }
}

} // namespace

SdpSolution solve_sdp(const SdpProblem& problem, const SdpOptions& opts) {
    validate(problem);
    const std::size_t nb = problem.block_dims.size();

    // Assemble rows: explicit constraints first, then diagonal bounds lowered
    // to tr(E_ii X) <= upper.
    std::vector<Row> rows;
    rows.reserve(problem.constraint_count());
    for (const auto& con : problem.constraints) {
        Row r;
        r.mats.resize(nb);
        for (std::size_t b = 0; b < nb; ++b) {
            r.mats[b] = con.mats[b].size() ? CMat(0.5 * (con.mats[b] + con.mats[b].adjoint())) : CMat();
        }
        r.sense = con.sense;
        r.rhs_orig = con.rhs;
        rows.push_back(std::move(r));
    }
    for (const auto& bd : problem.element_bounds) {
        Row r;
        r.mats.resize(nb);
        CMat e = CMat::Zero(problem.block_dims[bd.block], problem.block_dims[bd.block]);
        e(bd.index, bd.index) = 1.0;
        r.mats[bd.block] = std::move(e);
        r.sense = Sense::LE;
        r.rhs_orig = bd.upper;
        rows.push_back(std::move(r));
    }

    // Symmetric diagonal equilibration of the variable blocks: solve for
    // X' = D^-1 X D^-1 with row data A -> D A D, objective C -> D C D. Every
    // trace tr(A X) is invariant, so senses, rhs values, and reported
    // residuals are untouched; only the iteration geometry improves. Without
    // this, instances mixing channel-power rows (~1e-14) with unit rows stall.
    std::vector<CMat> cobj(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        cobj[b] = problem.objective[b].size()
                      ? CMat(0.5 * (problem.objective[b] + problem.objective[b].adjoint()))
                      : CMat::Zero(problem.block_dims[b], problem.block_dims[b]);
    }
    std::vector<RVec> dscale(nb);
    for (std::size_t b = 0; b < nb; ++b) dscale[b] = RVec::Ones(problem.block_dims[b]);
    if (opts.var_scaling) {
        // Caller-declared per-index magnitudes come first; data-driven passes
        // below can only refine them.
        validate_scaling(problem, *opts.var_scaling);
        for (std::size_t b = 0; b < nb; ++b) {
            auto ds = (*opts.var_scaling)[b].asDiagonal();
            cobj[b] = ds * cobj[b] * ds;
            for (auto& r : rows) {
                if (r.mats[b].size()) r.mats[b] = ds * r.mats[b] * ds;
            }
            dscale[b] = dscale[b].cwiseProduct((*opts.var_scaling)[b]);
        }
    }
    for (int pass = 0; pass < 8; ++pass) {
        bool moved = false;
        for (std::size_t b = 0; b < nb; ++b) {
            const int dim = problem.block_dims[b];
            RVec s = RVec::Ones(dim);
            for (int i = 0; i < dim; ++i) {
                double m = cobj[b].row(i).cwiseAbs().maxCoeff();
                for (const auto& r : rows) {
                    if (r.mats[b].size()) {
                        m = std::max(m, r.mats[b].row(i).cwiseAbs().maxCoeff());
                    }
                }
                if (m > 0.0 && (m > 2.0 || m < 0.5)) {
                    s(i) = 1.0 / std::sqrt(m);
                    moved = true;
                }
            }
            if (s != RVec::Ones(dim)) {
                auto ds = s.asDiagonal();
                cobj[b] = ds * cobj[b] * ds;
                for (auto& r : rows) {
                    if (r.mats[b].size()) r.mats[b] = ds * r.mats[b] * ds;
                }
                dscale[b] = dscale[b].cwiseProduct(s);
            }
        }
        if (!moved) break;
    }

    // Row normalization keeps the affine projection well-conditioned when the
    // physical scales of the rows differ by many orders of magnitude.
    int n_slack = 0;
    for (auto& r : rows) {
        double nrm2 = 0.0;
        for (const auto& a : r.mats) {
            if (a.size()) nrm2 += a.squaredNorm();
        }
        r.scale = std::sqrt(nrm2);
        for (auto& a : r.mats) {
            if (a.size()) a /= r.scale;
        }
        r.rhs = r.rhs_orig / r.scale;
        if (r.sense != Sense::EQ) r.slack = n_slack++;
    }
    const int m = static_cast<int>(rows.size());

    // Gram matrix of the row map (slack column contributes 1 on the diagonal).
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = i; j < m; ++j) {
            double g = 0.0;
            for (std::size_t b = 0; b < nb; ++b) {
                if (rows[i].mats[b].size() && rows[j].mats[b].size()) {
                    g += rows[i].mats[b].cwiseProduct(rows[j].mats[b].conjugate()).sum().real();
                }
            }
            gram(i, j) = g;
            gram(j, i) = g;
        }
        if (rows[i].slack >= 0) gram(i, i) += 1.0;
    }
    // Tiny ridge so duplicated rows (possible in infeasibility probes) do not
    // break the factorization.
    gram.diagonal().array() += 1e-12 * std::max(1.0, gram.trace() / std::max(1, m));
    Eigen::LDLT<Eigen::MatrixXd> gram_ldlt(gram);

    // Normalized objective tilt.
    double cnorm = 0.0;
    for (const auto& c : cobj) cnorm += c.squaredNorm();
    cnorm = std::sqrt(cnorm);
    Point ctilde;
    ctilde.x.resize(nb);
    ctilde.s = Eigen::VectorXd::Zero(n_slack);
    for (std::size_t b = 0; b < nb; ++b) {
        ctilde.x[b] = cnorm > 0 ? CMat(cobj[b] / cnorm)
                                : CMat::Zero(problem.block_dims[b], problem.block_dims[b]);
    }

    auto zero_point = [&]() {
        Point p;
        p.x.resize(nb);
        for (std::size_t b = 0; b < nb; ++b) {
            p.x[b] = CMat::Zero(problem.block_dims[b], problem.block_dims[b]);
        }
        p.s = Eigen::VectorXd::Zero(n_slack);
        return p;
    };

    // Projection onto {row values + slack = rhs}.
    Eigen::VectorXd y_last = Eigen::VectorXd::Zero(m);
    auto proj_affine = [&](const Point& w, Point& out) {
        Eigen::VectorXd resid(m);
        for (int i = 0; i < m; ++i) {
            double v = row_value(rows[i], w.x);
            if (rows[i].slack >= 0) {
                v += (rows[i].sense == Sense::LE ? 1.0 : -1.0) * w.s(rows[i].slack);
            }
            resid(i) = v - rows[i].rhs;
        }
        y_last = gram_ldlt.solve(resid);
        out = w;
        for (int i = 0; i < m; ++i) {
            double yi = y_last(i);
            if (yi == 0.0) continue;
            for (std::size_t b = 0; b < nb; ++b) {
                if (rows[i].mats[b].size()) out.x[b].noalias() -= yi * rows[i].mats[b];
            }
            if (rows[i].slack >= 0) {
                out.s(rows[i].slack) -= yi * (rows[i].sense == Sense::LE ? 1.0 : -1.0);
            }
        }
    };

    auto proj_cone = [&](const Point& w, Point& out) {
        out.x.resize(nb);
        for (std::size_t b = 0; b < nb; ++b) {
            CMat h = 0.5 * (w.x[b] + w.x[b].adjoint());
            Eigen::SelfAdjointEigenSolver<CMat> es(h);
            RVec clipped = es.eigenvalues().cwiseMax(0.0);
            out.x[b] = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().adjoint();
        }
        out.s = w.s.cwiseMax(0.0);
    };

    // Measured on the original scale; ignores slacks and judges the blocks by
    // the declared sense. The violation is relative to the row's own value
    // scale, never absolute: rows whose physical magnitude is far below one
    // (receiver-noise power levels) must still be enforced.
    auto primal_violation = [&](const Point& p) {
        double worst = 0.0;
        for (int i = 0; i < m; ++i) {
            double v = row_value(rows[i], p.x) * rows[i].scale;
            double viol = 0.0;
            if (rows[i].sense == Sense::LE) viol = std::max(0.0, v - rows[i].rhs_orig);
            else if (rows[i].sense == Sense::GE) viol = std::max(0.0, rows[i].rhs_orig - v);
            else viol = std::abs(v - rows[i].rhs_orig);
            double denom = std::max({std::abs(rows[i].rhs_orig), std::abs(v), 1e-300});
            worst = std::max(worst, viol / denom);
        }
        return worst;
    };

    // cobj carries the same traces as the original objective, so this is the
    // objective value on the original scale.
    auto objective_of = [&](const Point& p) {
        double acc = 0.0;
        for (std::size_t b = 0; b < nb; ++b) {
            acc += cobj[b].cwiseProduct(p.x[b].conjugate()).sum().real();
        }
        return acc;
    };

    double rho = opts.rho0;
    const double alpha = opts.over_relax;

    Point s_pt = zero_point();
    Point v1 = zero_point(), v2 = zero_point(), q = zero_point();
    if (opts.warm_start) {
        if (opts.warm_start->size() != nb) {
            throw DimensionMismatchError("solve_sdp: warm start block count mismatch");
        }
        for (std::size_t b = 0; b < nb; ++b) {
            CMat h = 0.5 * ((*opts.warm_start)[b] + (*opts.warm_start)[b].adjoint());
            auto dinv = dscale[b].cwiseInverse().asDiagonal();
            h = dinv * h * dinv;  // into the equilibrated variable scale
            Eigen::SelfAdjointEigenSolver<CMat> es(h);
            s_pt.x[b] = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
                        es.eigenvectors().adjoint();
        }
        // Seed slacks consistently with the warm blocks.
        for (int i = 0; i < m; ++i) {
            if (rows[i].slack < 0) continue;
            double v = row_value(rows[i], s_pt.x);
            double gap = rows[i].sense == Sense::LE ? rows[i].rhs - v : v - rows[i].rhs;
            s_pt.s(rows[i].slack) = std::max(0.0, gap);
        }
    }

    SdpSolution sol;
    if (opts.log_merit) sol.merit_history.reserve(opts.max_iter);

    double prim_res = 1e30, dual_res = 1e30, gap = 1e30;
    double best_prim = 1e30, best_prim_window = 1e30;
    const int check_every = 25;
    const int window = std::max(500, opts.max_iter / 10);
    int last_window_mark = 0;
    bool diverged = false;

    int it = 0;
    for (it = 1; it <= opts.max_iter; ++it) {
        // v1 = ProjL(s + C/rho), v2 = ProjK(2 v1 - s), s += alpha (v2 - v1)
        Point w = s_pt;
        for (std::size_t b = 0; b < nb; ++b) w.x[b].noalias() += ctilde.x[b] / rho;
        proj_affine(w, v1);
        for (std::size_t b = 0; b < nb; ++b) q.x[b] = 2.0 * v1.x[b] - s_pt.x[b];
        q.s = 2.0 * v1.s - s_pt.s;
        proj_cone(q, v2);

        double merit2 = 0.0;
        for (std::size_t b = 0; b < nb; ++b) {
            s_pt.x[b].noalias() += alpha * (v2.x[b] - v1.x[b]);
            merit2 += (v2.x[b] - v1.x[b]).squaredNorm();
        }
        s_pt.s += alpha * (v2.s - v1.s);
        merit2 += (v2.s - v1.s).squaredNorm();
        double merit = std::sqrt(merit2);
        if (opts.log_merit) sol.merit_history.push_back(merit);

        if (it % check_every == 0 || merit < 1e-14) {
            prim_res = primal_violation(v2);
            double vnorm = std::max(1.0, norm(v2));
            dual_res = rho * merit / vnorm;
            best_prim = std::min(best_prim, prim_res);

            if (prim_res <= opts.eps_feas && dual_res <= opts.eps_feas) {
                sol.status = SdpStatus::Optimal;
                break;
            }
            if (norm(v2) > 1e12) {
                diverged = true;
                break;
            }
            // Infeasibility heuristic: the residual stagnates well above
            // tolerance with no meaningful improvement across a window.
            if (it - last_window_mark >= window) {
                if (it >= std::max(1000, opts.max_iter / 10) &&
                    prim_res > tol::sdp_infeas_residual &&
                    best_prim > best_prim_window * (1.0 - 1e-3)) {
                    sol.status = SdpStatus::Infeasible;
                    break;
                }
                best_prim_window = best_prim;
                last_window_mark = it;
            }
            if (opts.adaptive_rho && it % 100 == 0) {
                double ratio = prim_res / std::max(dual_res, 1e-300);
                double factor = 1.0;
                if (ratio > 10.0) factor = std::min(5.0, std::sqrt(ratio));
                else if (ratio < 0.1) factor = 1.0 / std::min(5.0, std::sqrt(1.0 / ratio));
                if (factor != 1.0) {
                    double rho_new = std::clamp(rho * factor, 1e-8, 1e8);
                    if (rho_new != rho) {
                        // Keep the embedded dual estimate invariant.
                        for (std::size_t b = 0; b < nb; ++b) {
                            s_pt.x[b] = v2.x[b] + (rho / rho_new) * (s_pt.x[b] - v2.x[b]);
                        }
                        s_pt.s = v2.s + (rho / rho_new) * (s_pt.s - v2.s);
                        rho = rho_new;
                        sol.rho_changes.push_back(it);
                    }
                }
            }
        }
    }
    sol.iterations = std::min(it, opts.max_iter);

    if (diverged) {
        sol.status = SdpStatus::Unbounded;
    } else if (sol.status != SdpStatus::Optimal && sol.status != SdpStatus::Infeasible) {
        // Ran out of iterations: apply the documented stagnation test.
        prim_res = primal_violation(v2);
        if (prim_res > tol::sdp_infeas_residual &&
            best_prim > best_prim_window * (1.0 - 1e-3)) {
            sol.status = SdpStatus::Infeasible;
        } else {
            sol.status = SdpStatus::MaxIter;
        }
    }

    sol.blocks = v2.x;
    for (std::size_t b = 0; b < nb; ++b) {
        auto ds = dscale[b].asDiagonal();
        sol.blocks[b] = ds * sol.blocks[b] * ds;  // back to the caller's scale
    }
    sol.objective_value = objective_of(v2);
    sol.primal_residual = primal_violation(v2);
    {
        double merit_now = 0.0;
        for (std::size_t b = 0; b < nb; ++b) merit_now += (v2.x[b] - v1.x[b]).squaredNorm();
        merit_now += (v2.s - v1.s).squaredNorm();
        sol.dual_residual = rho * std::sqrt(merit_now) / std::max(1.0, norm(v2));
    }
    double psd_min = 0.0;
    for (const auto& x : sol.blocks) {
        Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (x + x.adjoint()));
        psd_min = std::min(psd_min, es.eigenvalues().minCoeff());
    }
    sol.psd_violation = std::max(0.0, -psd_min);

    // Dual objective estimate from the affine-projection multipliers; on the
    // normalized rows the constraint duals are rho * y.
    if (m > 0) {
        double dual_obj = 0.0;
        for (int i = 0; i < m; ++i) dual_obj += rho * y_last(i) * rows[i].rhs;
        double primal_obj_normed = cnorm > 0 ? sol.objective_value / cnorm : 0.0;
        sol.kkt_gap = std::abs(primal_obj_normed - dual_obj) / (1.0 + std::abs(primal_obj_normed));
    }
    return sol;
}

void dump_problem(const SdpProblem& problem, std::ostream& os) {
    os << "sdp maximize blocks=" << problem.block_dims.size() << " dims=[";
    for (std::size_t b = 0; b < problem.block_dims.size(); ++b) {
        os << (b ? "," : "") << problem.block_dims[b];
    }
    os << "]\n";
    auto put_mat = [&os](const CMat& a) {
        if (a.size() == 0) {
            os << "    (absent)\n";
            return;
        }
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            os << "    ";
            for (Eigen::Index j = 0; j < a.cols(); ++j) {
                os << a(i, j).real() << (a(i, j).imag() < 0 ? "-" : "+")
                   << std::abs(a(i, j).imag()) << "i ";
            }
            os << "\n";
        }
    };
    for (std::size_t b = 0; b < problem.objective.size(); ++b) {
        os << "objective block " << b << ":\n";
        put_mat(problem.objective[b]);
    }
    for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
        const auto& con = problem.constraints[i];
        const char* sense = con.sense == Sense::LE ? "<=" : (con.sense == Sense::GE ? ">=" : "==");
        os << "constraint " << i << " " << sense << " " << con.rhs << "\n";
        for (std::size_t b = 0; b < con.mats.size(); ++b) {
            os << "  block " << b << ":\n";
            put_mat(con.mats[b]);
        }
    }
    for (const auto& bd : problem.element_bounds) {
        os << "bound block " << bd.block << " diag " << bd.index << " <= " << bd.upper << "\n";
    }
}

} // namespace arisopt
