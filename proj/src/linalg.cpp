#include "arisopt/linalg.hpp"

#include "arisopt/tolerances.hpp"

#include <string>

namespace arisopt {

void require_finite(const CMat& a, const char* what) {
    if (!a.allFinite()) {
        throw NonFiniteError(std::string(what) + ": non-finite entry");
    }
}

bool is_hermitian(const CMat& h, double rel_tol) {
    if (h.rows() != h.cols()) return false;
    double scale = h.norm();
    double asym = (h - h.adjoint()).norm();
    return asym <= rel_tol * std::max(scale, 1e-300);
}

EigDecomposition hermitian_eig(const CMat& h) {
    if (h.rows() != h.cols() || h.rows() == 0) {
        throw DimensionMismatchError("hermitian_eig: matrix must be square and non-empty");
    }
    require_finite(h, "hermitian_eig");
    if (!is_hermitian(h, tol::hermitian_rel_asym)) {
        throw NotHermitianError("hermitian_eig: input is not Hermitian");
    }

    // Symmetrize before factorizing so the result does not depend on which
    // triangle carries the rounding noise.
    CMat hs = 0.5 * (h + h.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(hs);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("hermitian_eig: eigensolver did not converge");
    }

    const Eigen::Index n = h.rows();
    EigDecomposition out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    // Eigen returns ascending order; flip to descending.
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values(i) = es.eigenvalues()(n - 1 - i);
        out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
    }
    // Phase fix: rotate each column so its largest-magnitude entry is real
    // positive. Keeps repeated runs (and platforms) byte-comparable.
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index imax = 0;
        double best = -1.0;
        for (Eigen::Index r = 0; r < n; ++r) {
            double m = std::abs(out.vectors(r, i));
            if (m > best + 1e-15) {
                best = m;
                imax = r;
            }
        }
        cd pivot = out.vectors(imax, i);
        if (std::abs(pivot) > 0.0) {
            out.vectors.col(i) *= std::conj(pivot) / std::abs(pivot);
        }
    }
    return out;
}

CVec max_generalized_eigvec(const CMat& c, const CMat& d) {
    if (c.rows() != c.cols() || d.rows() != d.cols() || c.rows() != d.rows()) {
        throw DimensionMismatchError("max_generalized_eigvec: C and D must be square with equal size");
    }
    require_finite(c, "max_generalized_eigvec C");
    require_finite(d, "max_generalized_eigvec D");
    if (!is_hermitian(c, tol::hermitian_rel_asym) || !is_hermitian(d, tol::hermitian_rel_asym)) {
        throw NotHermitianError("max_generalized_eigvec: inputs must be Hermitian");
    }

    EigDecomposition de = hermitian_eig(d);
    double dmax = de.values(0);
    double dmin = de.values(de.values.size() - 1);
    if (dmin <= 0.0 || dmax / dmin > tol::cond_d_max) {
        throw SingularDError("max_generalized_eigvec: D is singular or too ill-conditioned");
    }

    // Whiten: with D = V diag(s) V^*, solve the ordinary problem for
    // M = S^{-1/2} V^* C V S^{-1/2}, then map the winner back.
    RVec inv_sqrt = de.values.array().sqrt().inverse();
    CMat t = de.vectors * inv_sqrt.asDiagonal();  // D^{-1/2} (Hermitian square root inverse)
    CMat m = t.adjoint() * c * t;
    EigDecomposition me = hermitian_eig(0.5 * (m + m.adjoint()));
    CVec u = t * me.vectors.col(0);
    u /= u.norm();
    // Same phase convention as hermitian_eig.
    Eigen::Index imax = 0;
    double best = -1.0;
    for (Eigen::Index r = 0; r < u.size(); ++r) {
        double mag = std::abs(u(r));
        if (mag > best + 1e-15) {
            best = mag;
            imax = r;
        }
    }
    if (std::abs(u(imax)) > 0.0) u *= std::conj(u(imax)) / std::abs(u(imax));
    return u;
}

CMat kron(const CMat& a, const CMat& b) {
    CMat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

CVec vec(const CMat& a) {
    CVec x(a.size());
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            x(k++) = a(i, j);
        }
    }
    return x;
}

CMat unvec(const CVec& x, Eigen::Index rows, Eigen::Index cols) {
    if (x.size() != rows * cols) {
        throw DimensionMismatchError("unvec: length does not match target shape");
    }
    CMat a(rows, cols);
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            a(i, j) = x(k++);
        }
    }
    return a;
}

CMat hadamard(const CMat& a, const CMat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionMismatchError("hadamard: shapes differ");
    }
    return a.cwiseProduct(b);
}

} // namespace arisopt
