#include "disc/linalg.hpp"

#include "disc/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace disc::linalg {

SingularTriplets top_right_singular(const DenseMatrix& mat, std::size_t count) {
    const auto limit = static_cast<std::size_t>(std::min(mat.rows(), mat.cols()));
    if (count > limit) {
        throw InvalidParameter(fmt::format("requested {} singular vectors of a {}x{} matrix", count, mat.rows(), mat.cols()));
    }
    SingularTriplets out;
    if (count == 0) {
        out.values.resize(0);
        out.right_vectors.resize(mat.cols(), 0);
        return out;
    }
    Eigen::BDCSVD<DenseMatrix> svd(mat, Eigen::ComputeThinV);
    const auto c = static_cast<Eigen::Index>(count);
    out.values = svd.singularValues().head(c);
    out.right_vectors = svd.matrixV().leftCols(c);
    return out;
}

namespace {

DenseMatrix householder_q(const DenseMatrix& Y) {
    Eigen::HouseholderQR<DenseMatrix> qr(Y);
    return qr.householderQ() * DenseMatrix::Identity(Y.rows(), Y.cols());
}

// Two rounds of Cholesky QR; falls back to Householder when the block is ill-conditioned.
DenseMatrix thin_q(const DenseMatrix& Y) {
    DenseMatrix Q = Y;
    for (int round = 0; round < 2; ++round) {
        DenseMatrix G = DenseMatrix::Zero(Q.cols(), Q.cols());
        G.selfadjointView<Eigen::Lower>().rankUpdate(Q.transpose());
        Eigen::LLT<DenseMatrix> llt(G);
        if (llt.info() != Eigen::Success) return householder_q(Y);
        const double d_min = llt.matrixL().toDenseMatrix().diagonal().minCoeff();
        const double d_max = llt.matrixL().toDenseMatrix().diagonal().maxCoeff();
        if (!(d_min > 1e-6 * d_max)) return householder_q(Y);
        llt.matrixU().solveInPlace<Eigen::OnTheRight>(Q);
    }
    return Q;
}

using RowBlock = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Row-major blocks keep each sparse entry's update a contiguous vector operation.
RowBlock times(const SparseRowMatrix& A, const RowBlock& X) {
    RowBlock out = RowBlock::Zero(A.rows(), X.cols());
    for (Eigen::Index i = 0; i < A.outerSize(); ++i) {
        for (SparseRowMatrix::InnerIterator it(A, i); it; ++it) out.row(i).noalias() += it.value() * X.row(it.col());
    }
    return out;
}

RowBlock transpose_times(const SparseRowMatrix& A, const RowBlock& X) {
    RowBlock out = RowBlock::Zero(A.cols(), X.cols());
    for (Eigen::Index i = 0; i < A.outerSize(); ++i) {
        for (SparseRowMatrix::InnerIterator it(A, i); it; ++it) out.row(it.col()).noalias() += it.value() * X.row(i);
    }
    return out;
}

} // namespace

SingularTriplets approx_top_right_singular(const SparseRowMatrix& mat, std::size_t count,
                                           const SubspaceIterationOptions& options, Rng& rng,
                                           const DenseMatrix& warm_start) {
    const Eigen::Index h = mat.cols();
    const Eigen::Index r = mat.rows();
    const Eigen::Index limit = std::min(h, r);
    const Eigen::Index want = std::min<Eigen::Index>(static_cast<Eigen::Index>(count), limit);
    SingularTriplets out;
    if (want == 0) {
        out.values.resize(0);
        out.right_vectors.resize(h, 0);
        return out;
    }
    const Eigen::Index block = std::min<Eigen::Index>(want + static_cast<Eigen::Index>(options.oversample), limit);
    if (block >= h / 2) {
        // Subspace iteration buys nothing when the block is most of the space.
        auto exact = top_right_singular(DenseMatrix(mat), static_cast<std::size_t>(want));
        return exact;
    }

    DenseMatrix Y(h, block);
    std::normal_distribution<double> gauss;
    Eigen::Index seeded = 0;
    if (warm_start.rows() == h) {
        seeded = std::min(block, static_cast<Eigen::Index>(warm_start.cols()));
        Y.leftCols(seeded) = warm_start.leftCols(seeded);
    }
    for (Eigen::Index c = seeded; c < block; ++c) {
        for (Eigen::Index i = 0; i < h; ++i) Y(i, c) = gauss(rng);
    }

    DenseMatrix Q;
    const std::size_t steps = seeded > 0 ? options.warm_iterations : options.iterations;
    for (std::size_t it = 0; it <= steps; ++it) {
        Q = thin_q(Y);
        Y = transpose_times(mat, times(mat, Q));
    }
    Q = thin_q(Y);
    DenseMatrix B = times(mat, Q);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(B.transpose() * B);
    // Ascending eigenvalues; take from the back.
    out.values.resize(want);
    out.right_vectors.resize(h, want);
    for (Eigen::Index c = 0; c < want; ++c) {
        const Eigen::Index src = block - 1 - c;
        out.values(c) = std::sqrt(std::max(0.0, eig.eigenvalues()(src)));
        out.right_vectors.col(c) = Q * eig.eigenvectors().col(src);
    }
    return out;
}

SpectralDecomposition spectral_decompose_psd(const DenseMatrix& U) {
    if (U.rows() != U.cols()) {
        throw InvalidParameter(fmt::format("matrix is {}x{}, expected square", U.rows(), U.cols()));
    }
    const double scale = std::max(1.0, U.cwiseAbs().maxCoeff());
    const double asym = (U - U.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * scale) {
        throw InvalidParameter(fmt::format("matrix is not symmetric (max asymmetry {:.3e})", asym));
    }
    Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(0.5 * (U + U.transpose()));
    if (eig.info() != Eigen::Success) throw SolverFailure("symmetric eigensolver did not converge");
    const Eigen::Index h = U.rows();
    SpectralDecomposition out;
    out.eigenvalues.resize(h);
    out.eigenvectors.resize(h, h);
    for (Eigen::Index c = 0; c < h; ++c) {
        const Eigen::Index src = h - 1 - c;
        double value = eig.eigenvalues()(src);
        if (value < -1e-8 * scale) {
            throw InvalidParameter(fmt::format("matrix is not PSD (eigenvalue {:.3e})", value));
        }
        out.eigenvalues(c) = std::max(0.0, value);
        out.eigenvectors.col(c) = eig.eigenvectors().col(src);
    }
    return out;
}

double default_rank_tol(const DenseMatrix& vectors) {
    if (vectors.cols() == 0) return 0.0;
    return 1e-8 * vectors.colwise().norm().maxCoeff();
}

DenseMatrix orthonormalize(const DenseMatrix& vectors, double tol) {
    if (tol < 0) tol = default_rank_tol(vectors);
    const Eigen::Index dim = vectors.rows();
    const Eigen::Index total = vectors.cols();
    DenseMatrix Q(dim, std::min(dim, total));
    Eigen::Index kept = 0;
    constexpr Eigen::Index kBlock = 32;

    for (Eigen::Index start = 0; start < total && kept < dim; start += kBlock) {
        const Eigen::Index width = std::min(kBlock, total - start);
        DenseMatrix C = vectors.middleCols(start, width);
        if (kept > 0) {
            // Two passes of classical Gram-Schmidt against the accepted basis.
            for (int pass = 0; pass < 2; ++pass) {
                DenseMatrix coeff = Q.leftCols(kept).transpose() * C;
                C.noalias() -= Q.leftCols(kept) * coeff;
            }
        }
        const Eigen::Index block_start = kept;
        for (Eigen::Index c = 0; c < width && kept < dim; ++c) {
            Vector v = C.col(c);
            for (int pass = 0; pass < 2; ++pass) {
                for (Eigen::Index q = block_start; q < kept; ++q) v -= Q.col(q).dot(v) * Q.col(q);
            }
            const double norm = v.norm();
            if (norm < tol || norm == 0.0) continue;
            Q.col(kept++) = v / norm;
        }
    }
    return Q.leftCols(kept);
}

double orthonormality_error(const DenseMatrix& Q) {
    if (Q.cols() == 0) return 0.0;
    DenseMatrix G = Q.transpose() * Q;
    G.diagonal().array() -= 1.0;
    return G.cwiseAbs().maxCoeff();
}

} // namespace disc::linalg
