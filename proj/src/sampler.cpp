#include "disc/sampler.hpp"

#include "disc/error.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace disc::sampler {

namespace {

void check_rows(const DenseMatrix& m, std::size_t h, const char* name) {
    if (m.cols() > 0 && static_cast<std::size_t>(m.rows()) != h) {
        throw InvalidParameter(fmt::format("{} vectors have dimension {}, expected {}", name, m.rows(), h));
    }
}

void check_cap(std::size_t got, std::size_t cap, const char* name) {
    if (got > cap) throw InvariantViolation(fmt::format("{}: {} vectors submitted, cap is {}", name, got, cap));
}

} // namespace

SubspaceBasis build_subspace(std::size_t h, const BlockingVectors& v) {
    const auto caps = SubspaceCaps::for_dimension(h);
    check_rows(v.large_rows, h, "large-row");
    check_rows(v.top_potential_rows, h, "top-potential");
    check_rows(v.dangerous_support_rows, h, "dangerous-support");
    check_rows(v.dang_singular, h, "dangerous singular");
    check_rows(v.safe_singular, h, "safe singular");
    if (v.x_alive.size() != 0 && static_cast<std::size_t>(v.x_alive.size()) != h) {
        throw InvalidParameter(fmt::format("x has dimension {}, expected {}", v.x_alive.size(), h));
    }
    check_cap(v.large_rows.cols(), caps.per_rule, "large rows");
    check_cap(v.top_potential_rows.cols(), caps.per_rule, "top-potential rows");
    check_cap(v.dangerous_support_rows.cols(), caps.per_rule, "dangerous-support rows");
    check_cap(v.dang_singular.cols(), caps.per_singular, "dangerous singular vectors");
    check_cap(v.safe_singular.cols(), caps.per_singular, "safe singular vectors");

    const Eigen::Index hi = static_cast<Eigen::Index>(h);
    const Eigen::Index total = v.large_rows.cols() + v.top_potential_rows.cols() + v.dangerous_support_rows.cols() +
                               v.dang_singular.cols() + v.safe_singular.cols() + (v.x_alive.size() ? 1 : 0);
    DenseMatrix all(hi, total);
    Eigen::Index at = 0;
    for (const DenseMatrix* group : {&v.large_rows, &v.top_potential_rows, &v.dangerous_support_rows,
                                     &v.dang_singular, &v.safe_singular}) {
        if (group->cols() == 0) continue;
        all.middleCols(at, group->cols()) = *group;
        at += group->cols();
    }
    if (v.x_alive.size()) all.col(at++) = v.x_alive;

    SubspaceBasis out;
    out.dim = h;
    out.declared_count = static_cast<std::size_t>(total);
    out.basis = total > 0 ? linalg::orthonormalize(all) : DenseMatrix(hi, 0);
    if (out.size() > caps.total) {
        throw InvariantViolation(fmt::format("forbidden subspace has dimension {} > floor(h/2) = {}", out.size(), caps.total));
    }
    return out;
}

PlanCheck check_plan(const DenseMatrix& U, const SubspaceBasis& W, double kappa, double eta) {
    PlanCheck c;
    const auto h = static_cast<double>(U.rows());
    if (W.size() > 0) c.orthogonality = (W.basis.transpose() * U * W.basis).diagonal().cwiseAbs().maxCoeff();
    c.max_diag = U.rows() ? U.diagonal().maxCoeff() : 0.0;
    c.trace = U.trace();
    if (U.rows()) {
        DenseMatrix dom = -U;
        dom.diagonal() += U.diagonal() / eta;
        Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(dom, Eigen::EigenvaluesOnly);
        c.diag_domination = eig.eigenvalues().minCoeff();
    }
    c.ok = c.orthogonality <= 1e-8 && c.max_diag <= 1.0 + 1e-8 && c.trace >= kappa * h - 1e-6 &&
           c.diag_domination >= -1e-6;
    return c;
}

SubIsotropicPlan solve_subisotropic(const SubspaceBasis& W, double kappa, double eta, const SolverOptions& options) {
    const Eigen::Index h = static_cast<Eigen::Index>(W.dim);
    if (h == 0) throw InvalidParameter("sub-isotropic plan needs a positive dimension");
    if (kappa <= 0 || eta <= 0) throw InvalidParameter("kappa and eta must be positive");
    const double delta = static_cast<double>(W.size()) / static_cast<double>(h);
    if (kappa + eta + delta > 1.0 + 1e-12) {
        throw InvalidParameter(fmt::format("kappa + eta + dim(W)/h = {:.4f} exceeds 1", kappa + eta + delta));
    }

    DenseMatrix P = DenseMatrix::Identity(h, h);
    if (W.size() > 0) P.noalias() -= W.basis * W.basis.transpose();
    DenseMatrix U = P;

    const double ceiling = 1.0 / eta;
    const double clamp_to = (1.0 - options.clamp_margin) / eta;
    std::size_t it = 0;
    Vector scale(h);
    for (; it < options.max_iterations; ++it) {
        const double tiny = 1e-12 * std::max(1.0, U.diagonal().maxCoeff());
        for (Eigen::Index i = 0; i < h; ++i) {
            scale(i) = U(i, i) > tiny ? 1.0 / std::sqrt(U(i, i)) : 0.0;
        }
        DenseMatrix N = scale.asDiagonal() * U * scale.asDiagonal();
        Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(N);
        const Vector& lam = eig.eigenvalues();
        if (lam.maxCoeff() <= ceiling * (1.0 + 1e-9) && lam.minCoeff() >= -1e-9) break;

        Vector clamped = lam.cwiseMax(0.0).cwiseMin(clamp_to);
        N.noalias() = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
        Vector unscale(h);
        for (Eigen::Index i = 0; i < h; ++i) unscale(i) = scale(i) > 0 ? 1.0 / scale(i) : 0.0;
        U = unscale.asDiagonal() * N * unscale.asDiagonal();
        if (W.size() > 0) U = P * U * P;
        U = 0.5 * (U + U.transpose());
        const double top = U.diagonal().maxCoeff();
        if (top > 1.0) U /= top;
    }

    SubIsotropicPlan plan;
    plan.kappa = kappa;
    plan.eta = eta;
    plan.iterations = it;
    plan.check = check_plan(U, W, kappa, eta);
    if (!plan.check.ok) {
        throw SolverFailure(fmt::format(
            "sub-isotropic solve failed after {} iterations (h={}, dim W={}): orthogonality {:.2e}, "
            "max diag {:.6f}, trace {:.4f} (need {:.4f}), diag-domination eigenvalue {:.2e}",
            it, h, W.size(), plan.check.orthogonality, plan.check.max_diag, plan.check.trace,
            kappa * static_cast<double>(h), plan.check.diag_domination));
    }
    plan.decomposition = linalg::spectral_decompose_psd(U);
    // Spectral noise below this level would leak directions out of W's complement.
    const double floor = 1e-12 * std::max(1.0, plan.decomposition.eigenvalues(0));
    for (Eigen::Index c = 0; c < h; ++c) {
        if (plan.decomposition.eigenvalues(c) < floor) plan.decomposition.eigenvalues(c) = 0.0;
    }
    plan.trace = plan.decomposition.eigenvalues.sum();
    plan.U = std::move(U);
    return plan;
}

Vector draw_direction(const SubIsotropicPlan& plan, std::span<const int> signs) {
    const auto& dec = plan.decomposition;
    const Eigen::Index h = dec.eigenvalues.size();
    if (static_cast<Eigen::Index>(signs.size()) != h) {
        throw InvalidParameter(fmt::format("{} signs supplied for a {}-dimensional plan", signs.size(), h));
    }
    if (!(plan.trace > 0)) throw InvalidParameter("plan has zero trace");
    Vector weighted = Vector::Zero(h);
    Eigen::Index rank = 0;
    while (rank < h && dec.eigenvalues(rank) > 0) ++rank;
    for (Eigen::Index c = 0; c < rank; ++c) weighted(c) = std::sqrt(dec.eigenvalues(c)) * signs[c];
    return dec.eigenvectors.leftCols(rank) * weighted.head(rank) / std::sqrt(plan.trace);
}

Vector draw_direction(const SubIsotropicPlan& plan, Rng& rng) {
    std::vector<int> signs(static_cast<std::size_t>(plan.decomposition.eigenvalues.size()));
    for (auto& s : signs) s = rademacher(rng);
    return draw_direction(plan, signs);
}

Vector projection_fallback_direction(const SubspaceBasis& W, Rng& rng) {
    const auto h = static_cast<Eigen::Index>(W.dim);
    if (W.size() >= W.dim) throw InvalidParameter("forbidden subspace spans the whole space");
    std::normal_distribution<double> gauss;
    for (int attempt = 0; attempt < 16; ++attempt) {
        Vector g(h);
        for (Eigen::Index i = 0; i < h; ++i) g(i) = gauss(rng);
        if (W.size() > 0) {
            for (int pass = 0; pass < 2; ++pass) g.noalias() -= W.basis * (W.basis.transpose() * g);
        }
        const double norm = g.norm();
        if (norm > 1e-10) return g / norm;
    }
    throw SolverFailure("projection sampler produced a degenerate direction");
}

} // namespace disc::sampler
