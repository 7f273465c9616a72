#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>

namespace arisopt {

using cd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

struct NotHermitianError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct NonFiniteError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct DimensionMismatchError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct SingularDError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Throws NonFiniteError if any entry is NaN or infinite.
void require_finite(const CMat& a, const char* what);

/// True when ||H - H^*|| is within the relative asymmetry tolerance.
bool is_hermitian(const CMat& h, double rel_tol);

struct EigDecomposition {
    RVec values;   ///< real eigenvalues, descending
    CMat vectors;  ///< columns are the matching eigenvectors, orthonormal
};

/// Eigendecomposition of a Hermitian matrix. Deterministic: eigenvalues come
/// back in descending order and each eigenvector's phase is fixed so that its
/// largest-magnitude entry is real and positive.
EigDecomposition hermitian_eig(const CMat& h);

/// Unit-norm maximizer of the generalized Rayleigh quotient
/// u^* C u / u^* D u with C Hermitian PSD and D Hermitian positive definite.
/// Throws SingularDError when D is singular or has condition number beyond
/// tol::cond_d_max.
CVec max_generalized_eigvec(const CMat& c, const CMat& d);

/// Kronecker product a (x) b.
CMat kron(const CMat& a, const CMat& b);

/// Column-stacking vectorization.
CVec vec(const CMat& a);

/// Inverse of vec for a rows x cols target shape.
CMat unvec(const CVec& x, Eigen::Index rows, Eigen::Index cols);

/// Elementwise (Hadamard) product; dimensions must match.
CMat hadamard(const CMat& a, const CMat& b);

} // namespace arisopt
