// Acceptance criteria A1-A10. One PASS/FAIL line per criterion.
//
//   disc_acceptance [--artifacts DIR] GROUP...
//
// GROUP is one of A1, A2-A6, A7, A8, A9-A10 or all.

#include "disc/baselines.hpp"
#include "disc/harness.hpp"
#include "disc/linalg.hpp"
#include "disc/sampler.hpp"
#include "disc/walk.hpp"
#include "oracles.hpp"

#include <chrono>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <fmt/format.h>
#include <map>
#include <random>
#include <string>
#include <vector>

using namespace disc;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and sizes.
constexpr int kA1Configs = 50;
constexpr int kA1Draws = 100000;
constexpr double kA1McSigmas = 3.0;
constexpr double kA1Seconds = 300.0;
constexpr double kA2StepTol = 1e-10;
constexpr double kA2CumulativeTol = 1e-6;
constexpr double kA2RunSeconds = 600.0;
constexpr std::size_t kA3Runs = 20;
constexpr std::size_t kA3Required = 18;
constexpr std::size_t kA3N = 512, kA3K = 32;
constexpr double kA4CeilingTol = 1e-6;
constexpr double kA5RelTol = 1e-9;
constexpr std::size_t kA7PerK = 25;
constexpr std::size_t kA8Instances = 25;
constexpr std::size_t kA9N = 1024, kA9K = 64, kA9Seeds = 10;
constexpr double kA9Factor = 8.0;
constexpr std::size_t kA10Seeds = 5;
constexpr std::size_t kA10CellsRequired = 2;

struct Verdict {
    std::string id;
    bool pass = false;
    std::string detail;
};

std::vector<Verdict> verdicts;

void report(std::string id, bool pass, std::string detail) {
    fmt::print("{} {} {}\n", id, pass ? "PASS" : "FAIL", detail);
    std::fflush(stdout);
    verdicts.push_back({std::move(id), pass, std::move(detail)});
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Constants recomputed from their defining formulas with the default configuration.
struct Constants {
    double n, k, ln_n, lambda, b0, beta, n_freeze;
};

Constants constants_for(std::size_t n, std::size_t k) {
    Constants c{};
    c.n = static_cast<double>(n);
    c.k = static_cast<double>(k);
    c.ln_n = std::log(c.n);
    c.lambda = 3.0 * std::max(1.0, std::log(c.ln_n));
    c.b0 = 2.0 * std::sqrt(c.lambda * c.k);
    c.beta = c.b0 / (20.0 * c.k);
    c.n_freeze = std::max(16.0, std::ceil(c.ln_n * c.ln_n));
    return c;
}

// ---------------------------------------------------------------- A1

sampler::SubspaceBasis a1_subspace(std::size_t h, int config, Rng& rng) {
    const auto H = static_cast<Eigen::Index>(h);
    const Eigen::Index d = H / 2;
    linalg::DenseMatrix m = linalg::DenseMatrix::Zero(H, d);
    if (config % 4 < 2) {
        std::normal_distribution<double> g;
        for (Eigen::Index j = 0; j < d; ++j)
            for (Eigen::Index i = 0; i < H; ++i) m(i, j) = g(rng);
    } else {
        // Sparse signed vectors, like rows of a low-degree system.
        std::uniform_int_distribution<Eigen::Index> pick(0, H - 1);
        for (Eigen::Index j = 0; j < d; ++j)
            for (int t = 0; t < 8; ++t) m(pick(rng), j) = rademacher(rng);
    }
    sampler::SubspaceBasis W;
    W.dim = h;
    W.basis = linalg::orthonormalize(m);
    W.declared_count = static_cast<std::size_t>(d);
    return W;
}

void run_a1() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng = make_rng(20240101);
    int verified = 0, covariance_ok = 0;
    double worst_excess = -1e300;
    for (int c = 0; c < kA1Configs; ++c) {
        const std::size_t h = c % 2 ? 256 : 64;
        const auto W = a1_subspace(h, c, rng);
        const auto plan = sampler::solve_subisotropic(W, 0.25, 0.25);
        if (oracle::verify_plan(plan.U, W.basis, 0.25, 0.25).all()) ++verified;

        Eigen::ArrayXd s1 = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(h));
        Eigen::ArrayXd s2 = s1;
        for (int d = 0; d < kA1Draws; ++d) {
            const Eigen::ArrayXd sq = sampler::draw_direction(plan, rng).array().square();
            s1 += sq;
            s2 += sq.square();
        }
        const Eigen::ArrayXd mean = s1 / kA1Draws;
        const Eigen::ArrayXd sd = ((s2 / kA1Draws - mean.square()).max(0.0) / kA1Draws).sqrt();
        const Eigen::ArrayXd excess = mean - 16.0 / static_cast<double>(h) - kA1McSigmas * sd;
        worst_excess = std::max(worst_excess, excess.maxCoeff());
        if (excess.maxCoeff() <= 0) ++covariance_ok;
    }
    const double secs = seconds_since(t0);
    report("A1", verified == kA1Configs && covariance_ok == kA1Configs && secs <= kA1Seconds,
           fmt::format("{}/{} plans verified, {}/{} within 16/h + 3 sd (worst margin {:.3e}), {:.1f} s", verified,
                       kA1Configs, covariance_ok, kA1Configs, worst_excess, secs));
}

// ---------------------------------------------------------------- A2-A6

void run_a2_a6() {
    const auto t0 = std::chrono::steady_clock::now();
    walk::WalkConfig cfg;
    std::vector<harness::RunOutput> runs;
    std::vector<std::shared_ptr<const CanonicalInstance>> insts;
    std::vector<double> per_run_seconds;
    for (std::size_t s = 1; s <= kA3Runs; ++s) {
        const auto r0 = std::chrono::steady_clock::now();
        const auto sys = harness::grid_instance({kA3N, kA3K}, s, SignModel::Positive);
        auto canon = std::make_shared<const CanonicalInstance>(canonicalize(sys));
        runs.push_back(harness::run_single(harness::Algorithm::Walk, sys, canon, s, cfg));
        insts.push_back(std::move(canon));
        per_run_seconds.push_back(seconds_since(r0));
    }
    const auto& C0 = insts.front()->system;
    const auto c = constants_for(C0.cols(), C0.k());

    // A2
    double step_err = 0, cum_err = 0;
    bool a2 = true;
    for (const auto& r : runs) {
        if (!r.walk) {
            a2 = false;
            continue;
        }
        step_err = std::max(step_err, r.walk->diagnostics.max_step_norm_error);
        cum_err = std::max(cum_err, r.walk->diagnostics.max_cumulative_norm_error);
    }
    const double slowest = *std::max_element(per_run_seconds.begin(), per_run_seconds.end());
    a2 = a2 && step_err <= kA2StepTol && cum_err <= kA2CumulativeTol && slowest <= kA2RunSeconds;
    report("A2", a2,
           fmt::format("max per-step error {:.2e} (tol {:.0e}), max cumulative error / (1+t) {:.2e} (tol {:.0e}) "
                       "over {} runs, slowest run {:.1f} s",
                       step_err, kA2StepTol, cum_err, kA2CumulativeTol, runs.size(), slowest));

    // A3
    std::size_t clean = 0;
    for (const auto& r : runs) clean += r.walk && r.walk->status.healthy() && !r.walk->status.guard_tripped;
    report("A3", clean >= kA3Required,
           fmt::format("{}/{} runs complete with the guard never tripped (need {})", clean, kA3Runs, kA3Required));

    // A4: slacks recomputed from x and b_final.
    const double ceiling = c.b0 + c.lambda * c.k / c.b0 * (1.0 + std::log(c.n / c.n_freeze));
    std::size_t healthy = 0, a4_ok = 0;
    double min_slack = 1e300, worst_gap = -1e300, max_b = 0;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        if (!runs[r].walk || !runs[r].walk->status.healthy()) continue;
        ++healthy;
        const auto& sys = insts[r]->system;
        const auto& x = runs[r].walk->fractional.values;
        const double b = runs[r].walk->b_final;
        const double alive_cut = 1.0 - 1.0 / (2.0 * c.n);
        bool ok = b <= ceiling + kA4CeilingTol;
        max_b = std::max(max_b, b);
        for (std::size_t i = 0; i < sys.rows(); ++i) {
            double inner = 0, energy = 0;
            std::size_t alive = 0;
            for (const auto& e : sys.row(i)) {
                inner += e.sign * x[e.col];
                energy += 1.0 - x[e.col] * x[e.col];
                alive += std::abs(x[e.col]) <= alive_cut;
            }
            const double s = alive > 10 * c.k ? c.b0 / 2 : b - inner - c.beta * energy;
            min_slack = std::min(min_slack, s);
            worst_gap = std::max(worst_gap, inner - b);
            ok = ok && s > 0 && inner < b;
        }
        a4_ok += ok;
    }
    report("A4", healthy > 0 && a4_ok == healthy,
           fmt::format("{}/{} healthy runs pass; min slack {:.4f}, max <a_i,x> - b_final {:.4f}, max b_final {:.4f} "
                       "vs ceiling {:.4f}",
                       a4_ok, healthy, min_slack, worst_gap, max_b, ceiling));

    // A5
    const double sigma_bound = std::sqrt(20.0 * c.k) * (1.0 + 2.0 * c.beta);
    std::size_t sigma_violations = 0, records = 0;
    double sigma_max = 0;
    for (const auto& r : runs) {
        if (!r.walk || !r.walk->status.healthy()) continue;
        for (const auto& rec : r.walk->telemetry) {
            ++records;
            const double s = std::max(rec.sigma_dang, rec.sigma_safe);
            sigma_max = std::max(sigma_max, s);
            sigma_violations += s > sigma_bound * (1 + kA5RelTol);
        }
    }
    report("A5", records > 0 && sigma_violations == 0,
           fmt::format("{} violations over {} rebuilds; max sigma {:.4f} vs bound {:.4f}", sigma_violations, records,
                       sigma_max, sigma_bound));

    // A6
    const double envelope = c.k * std::exp(2 * c.lambda) + 10 * std::exp(3 * c.lambda) * c.ln_n * c.ln_n;
    std::size_t clean_runs = 0, total_violations = 0;
    double w_max = 0;
    for (const auto& r : runs) {
        if (!r.walk) continue;
        std::size_t v = 0;
        for (const auto& rec : r.walk->telemetry) {
            w_max = std::max(w_max, rec.w_max);
            v += rec.w_max > envelope;
        }
        total_violations += v;
        clean_runs += v == 0;
    }
    report("A6", clean_runs >= kA3Required,
           fmt::format("{}/{} runs without violations ({} total); max W_j {:.4g} vs envelope {:.4g}; group {:.1f} s",
                       clean_runs, kA3Runs, total_violations, w_max, envelope, seconds_since(t0)));
}

// ---------------------------------------------------------------- A7

void run_a7() {
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t total = 0, violations = 0;
    double worst_ratio = 0;
    Rng shape = make_rng(77);
    for (std::size_t k : {2, 4, 8, 16}) {
        for (std::size_t i = 0; i < kA7PerK; ++i) {
            const std::size_t cols = std::uniform_int_distribution<std::size_t>(32, 256)(shape);
            const std::size_t rows = std::max(k, cols * std::uniform_int_distribution<std::size_t>(1, 4)(shape) / 2);
            const auto signs = i % 2 ? SignModel::Random : SignModel::Positive;
            const auto sys = gen_random_regular(rows, cols, k, 1000 * k + i, signs);
            const auto x = baselines::beck_fiala(sys);
            const long d = oracle::max_abs_row_sum(sys, x.values);
            const long bound = 2 * static_cast<long>(k) - 1;
            ++total;
            violations += !x.is_full() || d > bound;
            worst_ratio = std::max(worst_ratio, static_cast<double>(d) / static_cast<double>(bound));
        }
    }
    const double secs = seconds_since(t0);
    report("A7", violations == 0 && secs <= 120.0,
           fmt::format("{} violations over {} instances; max disc / (2k-1) = {:.3f}; {:.2f} s", violations, total,
                       worst_ratio, secs));
}

// ---------------------------------------------------------------- A8

void run_a8() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng shape = make_rng(88);
    std::size_t below_floor = 0, bf_over = 0, runs = 0;
    const std::vector<harness::Algorithm> algs{harness::Algorithm::Walk, harness::Algorithm::WalkSimple,
                                               harness::Algorithm::BeckFiala, harness::Algorithm::Gsw,
                                               harness::Algorithm::Random};
    for (std::size_t i = 0; i < kA8Instances; ++i) {
        const std::size_t cols = std::uniform_int_distribution<std::size_t>(4, 16)(shape);
        const std::size_t rows = std::uniform_int_distribution<std::size_t>(3, 16)(shape);
        const std::size_t k = std::uniform_int_distribution<std::size_t>(1, std::min<std::size_t>(rows, 5))(shape);
        const auto sys = gen_random_regular(rows, cols, k, 500 + i, i % 2 ? SignModel::Random : SignModel::Positive);
        const long floor = oracle::min_disc(sys);
        for (auto alg : algs) {
            const auto out = harness::run_single(alg, sys, nullptr, i + 1, walk::WalkConfig{});
            const long d = oracle::max_abs_row_sum(sys, out.coloring.values);
            ++runs;
            below_floor += !out.coloring.is_full() || d < floor;
            if (alg == harness::Algorithm::BeckFiala) bf_over += d > 2 * static_cast<long>(k) - 1;
        }
    }
    const double secs = seconds_since(t0);
    report("A8", below_floor == 0 && bf_over == 0 && secs <= 120.0,
           fmt::format("{} runs on {} instances: {} below the exact optimum, {} Beck-Fiala over 2k-1; {:.2f} s", runs,
                       kA8Instances, below_floor, bf_over, secs));
}

// ---------------------------------------------------------------- A9-A10

std::vector<double> discs_of(const std::vector<harness::ResultRow>& rows, const std::string& alg, std::size_t k) {
    std::vector<double> out;
    for (const auto& r : rows)
        if (r.alg == alg && r.k == k && r.status != "error") out.push_back(r.disc);
    return out;
}

void run_a9_a10(const fs::path& artifacts) {
    fs::remove_all(artifacts);
    fs::create_directories(artifacts);
    const auto t0 = std::chrono::steady_clock::now();

    harness::ExperimentConfig main;
    main.algorithms = {harness::Algorithm::Walk, harness::Algorithm::Random, harness::Algorithm::WalkSimple};
    main.grid = {{kA9N, kA9K}};
    for (std::uint64_t s = 1; s <= kA9Seeds; ++s) main.seeds.push_back(s);
    main.results = artifacts / "results.csv";
    main.telemetry_dir = artifacts / "telemetry";
    const auto rows = harness::run_experiment(main);
    const double a9_secs = seconds_since(t0);

    const auto walk = discs_of(rows, "walk", kA9K);
    const auto random = discs_of(rows, "random", kA9K);
    const double mw = oracle::median(walk), mr = oracle::median(random);
    const double target = kA9Factor * std::sqrt(static_cast<double>(kA9K));
    double walk_secs = 0;
    for (const auto& r : rows)
        if (r.alg == "walk") walk_secs += r.runtime_ms / 1000.0;
    report("A9", walk.size() == kA9Seeds && mw <= mr && mw <= target && walk_secs <= 3600.0,
           fmt::format("median walk {} vs random {} (target <= {}), walk runtime {:.0f} s over {} seeds", mw, mr,
                       target, walk_secs, walk.size()));

    harness::ExperimentConfig cells;
    cells.algorithms = {harness::Algorithm::Walk, harness::Algorithm::WalkSimple};
    cells.grid = {{kA9N, 16}, {kA9N, 256}};
    for (std::uint64_t s = 1; s <= kA10Seeds; ++s) cells.seeds.push_back(s);
    cells.results = artifacts / "results.csv";
    cells.telemetry_dir = artifacts / "telemetry";
    auto all = harness::run_experiment(cells);
    all.insert(all.end(), rows.begin(), rows.end());

    std::size_t wins = 0;
    std::string detail;
    for (std::size_t k : {16, 64, 256}) {
        const double full = oracle::median(discs_of(all, "walk", k));
        const double simple = oracle::median(discs_of(all, "walk-simple", k));
        wins += full <= simple;
        detail += fmt::format("k={}: full {} vs simple {}; ", k, full, simple);
    }
    report("A10", wins >= kA10CellsRequired,
           fmt::format("{}{}/3 cells favour full mode; telemetry in {}; {:.0f} s (A9 part {:.0f} s)", detail, wins,
                       artifacts.string(), seconds_since(t0), a9_secs));
}

} // namespace

int main(int argc, char** argv) {
    fs::path artifacts = "acceptance_artifacts";
    std::vector<std::string> groups;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--artifacts" && i + 1 < argc) {
            artifacts = argv[++i];
        } else {
            groups.push_back(a);
        }
    }
    if (groups.empty() || (groups.size() == 1 && groups[0] == "all")) groups = {"A1", "A2-A6", "A7", "A8", "A9-A10"};
    const std::map<std::string, std::function<void()>> table{
        {"A1", run_a1},
        {"A2-A6", run_a2_a6},
        {"A7", run_a7},
        {"A8", run_a8},
        {"A9-A10", [&] { run_a9_a10(artifacts); }},
    };
    for (const auto& g : groups) {
        const auto it = table.find(g);
        if (it == table.end()) {
            fmt::print(stderr, "unknown group '{}'\n", g);
            return 2;
        }
        try {
            it->second();
        } catch (const std::exception& e) {
            report(g, false, fmt::format("aborted: {}", e.what()));
        }
    }
    bool all = true;
    for (const auto& v : verdicts) all = all && v.pass;
    return all ? 0 : 1;
}
