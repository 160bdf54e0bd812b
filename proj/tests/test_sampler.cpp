#include "disc/error.hpp"
#include "disc/sampler.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace disc;
using namespace disc::sampler;

namespace {

BlockingVectors empty_vectors(std::size_t h) {
    BlockingVectors v;
    const auto H = static_cast<Eigen::Index>(h);
    v.large_rows = DenseMatrix(H, 0);
    v.top_potential_rows = DenseMatrix(H, 0);
    v.dangerous_support_rows = DenseMatrix(H, 0);
    v.dang_singular = DenseMatrix(H, 0);
    v.safe_singular = DenseMatrix(H, 0);
    v.x_alive = Vector::Zero(H);
    return v;
}

SubspaceBasis random_subspace(std::size_t h, std::size_t d, Rng& rng) {
    std::normal_distribution<double> g;
    DenseMatrix m(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(d));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = g(rng);
    SubspaceBasis W;
    W.dim = h;
    W.basis = linalg::orthonormalize(m);
    W.declared_count = d;
    return W;
}

SubspaceBasis span_of(std::size_t h, std::initializer_list<Eigen::Index> axes) {
    SubspaceBasis W;
    W.dim = h;
    W.basis = DenseMatrix::Zero(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(axes.size()));
    Eigen::Index c = 0;
    for (auto a : axes) W.basis(a, c++) = 1.0;
    W.declared_count = axes.size();
    return W;
}

} // namespace

TEST_CASE("build_subspace from empty and small inputs") {
    CHECK(build_subspace(4, empty_vectors(4)).size() == 0);

    auto v = empty_vectors(20);
    v.large_rows = DenseMatrix::Zero(20, 1);
    v.large_rows(0, 0) = 1;
    v.x_alive = Vector::Zero(20);
    v.x_alive(1) = 0.3;
    const auto W = build_subspace(20, v);
    CHECK(W.size() == 2);
    CHECK(W.declared_count == 2);
    DenseMatrix expected = DenseMatrix::Zero(20, 2);
    expected(0, 0) = expected(1, 1) = 1;
    CHECK((W.basis * W.basis.transpose() - expected * expected.transpose()).norm() < 1e-12);
}

TEST_CASE("build_subspace at the full caps stays below h/2") {
    const std::size_t h = 110;
    Rng rng = make_rng(2);
    auto v = empty_vectors(h);
    auto fill = [&](DenseMatrix& m, std::size_t count) { m = random_subspace(h, count, rng).basis; };
    fill(v.large_rows, h / 10);
    fill(v.top_potential_rows, h / 10);
    fill(v.dangerous_support_rows, h / 10);
    fill(v.dang_singular, h / 11);
    fill(v.safe_singular, h / 11);
    v.x_alive = Vector::Ones(static_cast<Eigen::Index>(h));
    const auto W = build_subspace(h, v);
    CHECK(W.declared_count == 3 * (h / 10) + 2 * (h / 11) + 1);
    CHECK(W.size() <= h / 2);
    CHECK(linalg::orthonormality_error(W.basis) < 1e-10);

    fill(v.large_rows, h / 10 + 1);
    CHECK_THROWS_AS(build_subspace(h, v), InvariantViolation);
}

TEST_CASE("sub-isotropic plans on hand-checked cases") {
    const auto W = span_of(2, {0});
    const auto plan = solve_subisotropic(W, 0.25, 0.25);
    CHECK(oracle::verify_plan(plan.U, W.basis, 0.25, 0.25).all());
    Rng rng = make_rng(1);
    const Vector v = draw_direction(plan, rng);
    CHECK(std::abs(v(0)) < 1e-7);
    CHECK(std::abs(std::abs(v(1)) - 1.0) < 1e-10);

    // U = diag(0, 1) is feasible for this W; the verifier must agree.
    DenseMatrix hand = DenseMatrix::Zero(2, 2);
    hand(1, 1) = 1;
    CHECK(oracle::verify_plan(hand, W.basis, 0.25, 0.25).all());

    const auto open = span_of(4, {});
    const auto p4 = solve_subisotropic(open, 0.25, 0.25);
    CHECK(oracle::verify_plan(p4.U, open.basis, 0.25, 0.25).all());
    CHECK(p4.trace >= 1.0);
}

TEST_CASE("solver preconditions") {
    const auto W = span_of(4, {0, 1, 2});
    CHECK_THROWS_AS(solve_subisotropic(W, 0.25, 0.25), InvalidParameter);
    CHECK_THROWS_AS(solve_subisotropic(span_of(4, {}), 0.0, 0.25), InvalidParameter);
}

TEST_CASE("random subspaces give plans that pass the independent verifier") {
    Rng rng = make_rng(17);
    for (std::size_t h : {16, 40}) {
        for (int rep = 0; rep < 3; ++rep) {
            const auto W = random_subspace(h, h / 2, rng);
            const auto plan = solve_subisotropic(W, 0.25, 0.25);
            const auto verdict = oracle::verify_plan(plan.U, W.basis, 0.25, 0.25);
            CHECK(verdict.all());
            CHECK(plan.check.ok);
        }
    }
}

TEST_CASE("draws are unit, orthogonal to W and odd in the sign vector") {
    Rng rng = make_rng(23);
    const std::size_t h = 24;
    const auto W = random_subspace(h, 8, rng);
    const auto plan = solve_subisotropic(W);
    std::vector<int> r(h), neg(h);
    for (std::size_t i = 0; i < h; ++i) {
        r[i] = rademacher(rng);
        neg[i] = -r[i];
    }
    const Vector a = draw_direction(plan, r);
    const Vector b = draw_direction(plan, neg);
    CHECK(std::abs(a.norm() - 1.0) < 1e-10);
    CHECK((a + b).norm() < 1e-12);
    CHECK((W.basis.transpose() * a).cwiseAbs().maxCoeff() <= 1e-7);

    const Vector p = projection_fallback_direction(W, rng);
    CHECK(std::abs(p.norm() - 1.0) < 1e-10);
    CHECK((W.basis.transpose() * p).cwiseAbs().maxCoeff() <= 1e-7);
}

TEST_CASE("identity plan has covariance I/h") {
    const std::size_t h = 6;
    SubIsotropicPlan plan;
    plan.U = DenseMatrix::Identity(h, h);
    plan.decomposition = linalg::spectral_decompose_psd(plan.U);
    plan.trace = static_cast<double>(h);
    Rng rng = make_rng(31);
    const int draws = 100000;
    DenseMatrix cov = DenseMatrix::Zero(h, h);
    for (int d = 0; d < draws; ++d) {
        const Vector v = draw_direction(plan, rng);
        cov += v * v.transpose();
    }
    cov /= draws;
    const DenseMatrix expected = DenseMatrix::Identity(h, h) / static_cast<double>(h);
    CHECK((cov - expected).cwiseAbs().maxCoeff() <= 5.0 / std::sqrt(static_cast<double>(draws)));
}

TEST_CASE("projection sampler") {
    Rng rng = make_rng(41);
    const auto line = span_of(2, {0});
    for (int i = 0; i < 5; ++i) {
        const Vector v = projection_fallback_direction(line, rng);
        CHECK(std::abs(v(0)) < 1e-12);
        CHECK(std::abs(std::abs(v(1)) - 1.0) < 1e-12);
    }
    CHECK_THROWS_AS(projection_fallback_direction(span_of(2, {0, 1}), rng), InvalidParameter);

    const std::size_t h = 8;
    const auto W = random_subspace(h, 4, rng);
    const int draws = 100000;
    DenseMatrix cov = DenseMatrix::Zero(h, h);
    for (int d = 0; d < draws; ++d) {
        const Vector v = projection_fallback_direction(W, rng);
        cov += v * v.transpose();
    }
    cov /= draws;
    // Expected covariance is the projector onto the complement divided by its rank.
    const DenseMatrix P = DenseMatrix::Identity(h, h) - W.basis * W.basis.transpose();
    CHECK((W.basis.transpose() * cov * W.basis).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((cov - P / 4.0).cwiseAbs().maxCoeff() <= 5.0 / std::sqrt(static_cast<double>(draws)));
}

TEST_CASE("draw rejects a zero plan") {
    SubIsotropicPlan plan;
    plan.U = DenseMatrix::Zero(3, 3);
    plan.decomposition = linalg::spectral_decompose_psd(plan.U);
    plan.trace = 0;
    Rng rng = make_rng(1);
    CHECK_THROWS_AS(draw_direction(plan, rng), InvalidParameter);
}
