#pragma once

#include "disc/linalg.hpp"
#include "disc/rng.hpp"

#include <cstddef>
#include <span>

namespace disc::sampler {

using linalg::DenseMatrix;
using linalg::Vector;

/// Candidate vectors for the forbidden subspace, grouped by the rule that produced them.
/// Every matrix has one column per vector and `dim` rows; empty groups have zero columns.
struct BlockingVectors {
    DenseMatrix large_rows;
    DenseMatrix top_potential_rows;
    DenseMatrix dangerous_support_rows;
    DenseMatrix dang_singular;
    DenseMatrix safe_singular;
    Vector x_alive;
};

struct SubspaceCaps {
    std::size_t per_rule = 0;     // floor(h / 10)
    std::size_t per_singular = 0; // floor(h / 11)
    std::size_t total = 0;        // floor(h / 2)

    static SubspaceCaps for_dimension(std::size_t h) { return {h / 10, h / 11, h / 2}; }
};

struct SubspaceBasis {
    std::size_t dim = 0;
    DenseMatrix basis; // dim x size(), orthonormal columns
    std::size_t declared_count = 0;

    std::size_t size() const noexcept { return static_cast<std::size_t>(basis.cols()); }
};

/// Orthonormal basis of the span of all submitted vectors. Throws InvariantViolation if a
/// rule exceeds its cap or the basis would exceed floor(h/2); callers must trim first.
SubspaceBasis build_subspace(std::size_t h, const BlockingVectors& vectors);

struct SolverOptions {
    std::size_t max_iterations = 500;
    double clamp_margin = 1e-3; // eigenvalues of the diagonally normalized U are clamped to (1 - margin) / eta
};

/// Residuals of the four sub-isotropy conditions, computed from U alone.
struct PlanCheck {
    double orthogonality = 0.0;  // max_w <w w^T, U> over basis vectors w
    double max_diag = 0.0;       // max_i U_ii
    double trace = 0.0;
    double diag_domination = 0.0; // min eigenvalue of diag(U)/eta - U
    bool ok = false;
};

PlanCheck check_plan(const DenseMatrix& U, const SubspaceBasis& W, double kappa, double eta);

struct SubIsotropicPlan {
    DenseMatrix U;
    linalg::SpectralDecomposition decomposition;
    double trace = 0.0;
    double kappa = 0.25;
    double eta = 0.25;
    std::size_t iterations = 0;
    PlanCheck check;

    std::size_t dim() const noexcept { return static_cast<std::size_t>(U.rows()); }
};

/// PSD U orthogonal to W with U_ii <= 1, Tr U >= kappa h and U <= diag(U)/eta.
///
/// Starts from the projector onto the orthogonal complement of W and alternates
/// (a) clamping the spectrum of D^{-1/2} U D^{-1/2} into [0, (1 - margin)/eta], which
///     enforces PSD and diagonal domination at the current diagonal D,
/// (b) re-projecting onto the complement of W to remove rounding drift,
/// (c) capping the diagonal at 1 by uniform rescaling.
/// Each clamp only shrinks U, so the diagonal stays below 1 and the iteration is monotone.
/// Throws InvalidParameter when kappa + eta + dim(W)/h > 1 and SolverFailure when the
/// result misses any condition after max_iterations.
SubIsotropicPlan solve_subisotropic(const SubspaceBasis& W, double kappa = 0.25, double eta = 0.25,
                                    const SolverOptions& options = {});

/// v = Q Lambda^{1/2} r / sqrt(Tr U) for a Rademacher vector r. Unit norm by construction.
Vector draw_direction(const SubIsotropicPlan& plan, Rng& rng);
Vector draw_direction(const SubIsotropicPlan& plan, std::span<const int> signs);

/// Normalized projection of a standard Gaussian onto the complement of W.
Vector projection_fallback_direction(const SubspaceBasis& W, Rng& rng);

} // namespace disc::sampler
