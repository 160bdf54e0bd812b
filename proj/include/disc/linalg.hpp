#pragma once

#include "disc/rng.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstddef>

namespace disc::linalg {

using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// U = Q diag(eigenvalues) Q^T with eigenvalues nonincreasing and clamped at zero.
struct SpectralDecomposition {
    Vector eigenvalues;
    DenseMatrix eigenvectors;
};

struct SingularTriplets {
    Vector values;            // nonincreasing
    DenseMatrix right_vectors; // one orthonormal column per value
};

/// Largest `count` singular values of `mat` and their right singular vectors, computed
/// by a dense SVD. Throws InvalidParameter if count > min(rows, cols).
SingularTriplets top_right_singular(const DenseMatrix& mat, std::size_t count);

struct SubspaceIterationOptions {
    std::size_t oversample = 10;
    std::size_t iterations = 4;      // extra power steps from a random start
    std::size_t warm_iterations = 0; // extra power steps when a warm start is supplied
};

/// Randomized block subspace iteration on a sparse operator. Values are Rayleigh-Ritz
/// estimates, so each is a lower bound on the corresponding true singular value.
/// `warm_start` (cols x anything, possibly empty) seeds the first block columns; a warm
/// start from a nearby operator needs far fewer power steps.
SingularTriplets approx_top_right_singular(const SparseRowMatrix& mat, std::size_t count,
                                           const SubspaceIterationOptions& options, Rng& rng,
                                           const DenseMatrix& warm_start = DenseMatrix());

/// Throws InvalidParameter when U is not symmetric within 1e-10 or has an eigenvalue
/// below -1e-8 (relative to max(1, |U|)).
SpectralDecomposition spectral_decompose_psd(const DenseMatrix& U);

/// Default rank tolerance: 1e-8 times the largest column norm.
double default_rank_tol(const DenseMatrix& vectors);

/// Orthonormal basis for the span of the columns of `vectors` (block Gram-Schmidt with
/// reorthogonalization). A column whose residual after projection falls below `tol` is
/// dropped. A negative `tol` selects default_rank_tol.
DenseMatrix orthonormalize(const DenseMatrix& vectors, double tol = -1.0);

/// max |Q^T Q - I|.
double orthonormality_error(const DenseMatrix& Q);

} // namespace disc::linalg
