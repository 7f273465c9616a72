#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "arisopt/linalg.hpp"
#include "arisopt/rng.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <vector>

using namespace arisopt;
using testutil::random_cmat;
using testutil::random_cvec;
using testutil::random_hermitian;
using testutil::random_unit;

namespace {

/// Cyclic Jacobi spectrum, written from the 2x2 rotation formulas directly so
/// it shares nothing with hermitian_eig beyond the matrix type.
RVec jacobi_spectrum(CMat a) {
    const Eigen::Index n = a.rows();
    for (int sweep = 0; sweep < 200; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) off += std::norm(a(p, q));
        if (off < 1e-28) break;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                double apq = std::abs(a(p, q));
                if (apq < 1e-300) continue;
                cd phase = a(p, q) / apq;
                double tau = (a(q, q).real() - a(p, p).real()) / (2.0 * apq);
                double t = (tau >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = t * c;
                CMat u = CMat::Identity(n, n);
                u(p, p) = c;
                u(q, q) = c;
                u(p, q) = s * phase;
                u(q, p) = -s * std::conj(phase);
                a = u.adjoint() * a * u;
            }
        }
    }
    RVec vals = a.diagonal().real();
    std::sort(vals.data(), vals.data() + vals.size(), std::greater<double>());
    return vals;
}

double rayleigh_quotient(const CMat& c, const CMat& d, const CVec& u) {
    return (u.adjoint() * c * u).real()(0, 0) / (u.adjoint() * d * u).real()(0, 0);
}

} // namespace

TEST_CASE("diagonal matrix decomposes into its entries and unit vectors") {
    CMat h = CMat::Zero(2, 2);
    h(0, 0) = 3.0;
    h(1, 1) = 1.0;
    EigDecomposition eig = hermitian_eig(h);
    CHECK(eig.values(0) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(eig.values(1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(eig.vectors(0, 0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(eig.vectors(1, 1)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(eig.vectors(1, 0)) < 1e-12);
    CHECK(std::abs(eig.vectors(0, 1)) < 1e-12);
}

TEST_CASE("identity matrix has an all-ones spectrum") {
    EigDecomposition eig = hermitian_eig(CMat::Identity(4, 4));
    for (int i = 0; i < 4; ++i) CHECK(eig.values(i) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("spectrum matches an independent Jacobi rotation routine") {
    Rng rng(11, 0, "jacobi");
    for (int rep = 0; rep < 20; ++rep) {
        CMat h = random_hermitian(rng, 6);
        EigDecomposition eig = hermitian_eig(h);
        RVec ref = jacobi_spectrum(h);
        for (int i = 0; i < 6; ++i)
            CHECK(eig.values(i) ==
                  doctest::Approx(ref(i)).epsilon(1e-8).scale(std::max(1.0, h.norm())));
    }
}

TEST_CASE("eigenpairs reconstruct the input and stay orthonormal") {
    Rng rng(12, 0, "recon");
    for (int rep = 0; rep < 100; ++rep) {
        Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.next_u64() % 31);  // up to 32
        CMat h = random_hermitian(rng, n);
        EigDecomposition eig = hermitian_eig(h);
        CMat recon = eig.vectors * eig.values.asDiagonal().toDenseMatrix().cast<cd>() *
                     eig.vectors.adjoint();
        CHECK((h - recon).norm() <= 1e-9 * h.norm());
        CHECK((eig.vectors.adjoint() * eig.vectors - CMat::Identity(n, n)).norm() < 1e-10 * n);
        for (Eigen::Index i = 0; i < n; ++i)
            CHECK((h * eig.vectors.col(i) - eig.values(i) * eig.vectors.col(i)).norm() <=
                  1e-10 * std::max(1.0, h.norm()));
        CHECK(std::is_sorted(eig.values.data(), eig.values.data() + n,
                             std::greater<double>()));
    }
}

TEST_CASE("eigenvector phase convention is deterministic") {
    Rng rng(13, 0, "phase");
    CMat h = random_hermitian(rng, 5);
    EigDecomposition a = hermitian_eig(h);
    EigDecomposition b = hermitian_eig(h);
    CHECK((a.vectors - b.vectors).norm() == 0.0);
    for (int i = 0; i < 5; ++i) {
        Eigen::Index arg_max = 0;
        a.vectors.col(i).cwiseAbs().maxCoeff(&arg_max);
        cd top = a.vectors(arg_max, i);
        CHECK(top.real() > 0.0);
        CHECK(std::abs(top.imag()) < 1e-12 * std::abs(top));
    }
}

TEST_CASE("asymmetric and non-finite inputs are rejected") {
    CMat bad(2, 2);
    bad << cd(1.0, 0.0), cd(2.0, 0.0), cd(5.0, 0.0), cd(1.0, 0.0);
    CHECK_THROWS_AS(hermitian_eig(bad), NotHermitianError);

    CMat nan_mat = CMat::Identity(2, 2);
    nan_mat(0, 1) = cd(std::numeric_limits<double>::quiet_NaN(), 0.0);
    nan_mat(1, 0) = nan_mat(0, 1);
    CHECK_THROWS_AS(hermitian_eig(nan_mat), NonFiniteError);
}

TEST_CASE("generalized quotient with identity weighting picks the top eigenvector") {
    CMat c = CMat::Zero(2, 2);
    c(0, 0) = 3.0;
    c(1, 1) = 1.0;
    CMat d = CMat::Identity(2, 2);
    CVec u = max_generalized_eigvec(c, d);
    CHECK(std::abs(u(0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(u(1)) < 1e-10);
    CHECK(rayleigh_quotient(c, d, u) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("equal numerator and denominator give quotient one") {
    Rng rng(14, 0, "equal");
    CMat d = random_cmat(rng, 3, 3);
    d = d * d.adjoint() + CMat::Identity(3, 3);
    CVec u = max_generalized_eigvec(d, d);
    CHECK(u.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rayleigh_quotient(d, d, u) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("generalized quotient dominates random unit vectors") {
    Rng rng(15, 0, "sampling");
    CMat c = random_cmat(rng, 4, 4);
    c = c * c.adjoint();
    CMat d = random_cmat(rng, 4, 4);
    d = d * d.adjoint() + CMat::Identity(4, 4);
    CVec u = max_generalized_eigvec(c, d);
    double best = rayleigh_quotient(c, d, u);
    for (int rep = 0; rep < 1000; ++rep) {
        CVec probe = random_unit(rng, 4);
        CHECK(best + 1e-10 * std::abs(best) >= rayleigh_quotient(c, d, probe));
    }
}

TEST_CASE("singular weighting matrix is rejected") {
    CMat c = CMat::Identity(2, 2);
    CMat d = CMat::Zero(2, 2);
    d(0, 0) = 1.0;  // rank deficient
    CHECK_THROWS_AS(max_generalized_eigvec(c, d), SingularDError);
}

TEST_CASE("kron with a leading identity is block diagonal") {
    Rng rng(16, 0, "kron");
    CMat b = random_cmat(rng, 2, 2);
    CMat k = kron(CMat::Identity(2, 2), b);
    REQUIRE(k.rows() == 4);
    CHECK((k.topLeftCorner(2, 2) - b).norm() == 0.0);
    CHECK((k.bottomRightCorner(2, 2) - b).norm() == 0.0);
    CHECK(k.topRightCorner(2, 2).norm() == 0.0);
    CHECK(k.bottomLeftCorner(2, 2).norm() == 0.0);
}

TEST_CASE("kron spectrum is the pairwise product of factor spectra") {
    Rng rng(17, 0, "kronspec");
    for (Eigen::Index na : {2, 3}) {
        for (Eigen::Index nb : {2, 3, 6 / na}) {
            CMat a = random_hermitian(rng, na);
            CMat b = random_hermitian(rng, nb);
            EigDecomposition ea = hermitian_eig(a);
            EigDecomposition eb = hermitian_eig(b);
            std::vector<double> expected;
            for (Eigen::Index i = 0; i < na; ++i)
                for (Eigen::Index j = 0; j < nb; ++j) expected.push_back(ea.values(i) * eb.values(j));
            std::sort(expected.begin(), expected.end(), std::greater<double>());
            EigDecomposition ek = hermitian_eig(kron(a, b));
            for (std::size_t i = 0; i < expected.size(); ++i)
                CHECK(ek.values(static_cast<Eigen::Index>(i)) ==
                      doctest::Approx(expected[i]).epsilon(1e-10).scale(
                          std::max(1.0, std::abs(expected.front()))));
        }
    }
}

TEST_CASE("vec and unvec are exact inverses") {
    Rng rng(18, 0, "vec");
    CMat a = random_cmat(rng, 3, 5);
    CVec x = vec(a);
    REQUIRE(x.size() == 15);
    CHECK((unvec(x, 3, 5) - a).norm() == 0.0);
    CHECK_THROWS_AS(unvec(x, 4, 4), DimensionMismatchError);
}

TEST_CASE("sandwiched trace equals the kron quadratic form") {
    Rng rng(19, 0, "trace");
    for (int rep = 0; rep < 20; ++rep) {
        CMat a = random_cmat(rng, 3, 3);
        CMat b = random_hermitian(rng, 3);
        CMat c = random_hermitian(rng, 3);
        cd lhs = (a * b * a.adjoint() * c).trace();
        CVec x = vec(a);
        cd rhs = (x.adjoint() * kron(b.transpose(), c) * x)(0, 0);
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
    }
}

TEST_CASE("diagonal sandwich reduces to a hadamard quadratic form") {
    Rng rng(20, 0, "hadamard");
    for (int rep = 0; rep < 20; ++rep) {
        CVec xd = random_cvec(rng, 4);
        CMat x = xd.asDiagonal();
        CMat b = random_hermitian(rng, 4);
        cd lhs = (x.adjoint() * b * x).trace();
        cd rhs = (xd.adjoint() * hadamard(CMat::Identity(4, 4), b) * xd)(0, 0);
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
    }
}

TEST_CASE("hadamard requires matching dimensions") {
    CHECK_THROWS_AS(hadamard(CMat::Identity(2, 2), CMat::Identity(3, 3)),
                    DimensionMismatchError);
}

TEST_CASE("vectorized outer products have fourth-power norms") {
    Rng rng(21, 0, "quartic");
    for (int rep = 0; rep < 100; ++rep) {
        CVec psi = random_cvec(rng, 5);
        double lhs = vec(CMat(psi * psi.adjoint())).squaredNorm();
        double rhs = std::pow(psi.squaredNorm(), 2.0);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}
