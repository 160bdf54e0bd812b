#include "disc/harness.hpp"

#include "disc/baselines.hpp"
#include "disc/error.hpp"
#include "disc/rounding.hpp"
#include "disc/telemetry.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <thread>

namespace disc::harness {

namespace {

template <typename T>
T parse_uint(std::string_view text, std::string_view what) {
    T value{};
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size() || text.empty()) {
        throw InvalidParameter(fmt::format("malformed {} '{}'", what, text));
    }
    return value;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        out.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::uint64_t stream_of(Algorithm alg) { return 0x616c67ULL + static_cast<std::uint64_t>(alg); }

constexpr std::uint64_t kRoundingStream = 0x726f756eULL;

} // namespace

std::string_view to_string(Algorithm alg) {
    switch (alg) {
    case Algorithm::Walk: return "walk";
    case Algorithm::WalkSimple: return "walk-simple";
    case Algorithm::BeckFiala: return "beckfiala";
    case Algorithm::Gsw: return "gsw";
    case Algorithm::Random: return "random";
    }
    return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
    for (auto alg : {Algorithm::Walk, Algorithm::WalkSimple, Algorithm::BeckFiala, Algorithm::Gsw, Algorithm::Random}) {
        if (to_string(alg) == name) return alg;
    }
    throw InvalidParameter(fmt::format("unknown algorithm '{}'", name));
}

std::vector<GridCell> parse_grid(std::string_view text) {
    std::vector<GridCell> grid;
    for (auto item : split(text, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) throw InvalidParameter(fmt::format("grid cell '{}' is not n:k", item));
        grid.push_back({parse_uint<std::size_t>(item.substr(0, colon), "grid n"),
                        parse_uint<std::size_t>(item.substr(colon + 1), "grid k")});
    }
    return grid;
}

std::vector<std::uint64_t> parse_seeds(std::string_view text) {
    std::vector<std::uint64_t> seeds;
    if (text.find(',') != std::string_view::npos) {
        for (auto item : split(text, ',')) seeds.push_back(parse_uint<std::uint64_t>(item, "seed"));
        return seeds;
    }
    if (const auto dash = text.find('-'); dash != std::string_view::npos) {
        const auto lo = parse_uint<std::uint64_t>(text.substr(0, dash), "seed");
        const auto hi = parse_uint<std::uint64_t>(text.substr(dash + 1), "seed");
        if (hi < lo) throw InvalidParameter(fmt::format("empty seed range '{}'", text));
        for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
        return seeds;
    }
    const auto count = parse_uint<std::uint64_t>(text, "seed count");
    for (std::uint64_t s = 1; s <= count; ++s) seeds.push_back(s);
    return seeds;
}

void ExperimentConfig::validate() const {
    if (algorithms.empty()) throw InvalidParameter("no algorithms selected");
    if (!input && grid.empty()) throw InvalidParameter("empty grid and no input instance");
    if (seeds.empty()) throw InvalidParameter("no seeds selected");
    if (jobs == 0) throw InvalidParameter("jobs must be at least 1");
    walk.validate();
}

std::string format_row(const ResultRow& r) {
    return fmt::format("{},{},{},{},{},{},{},{},{},{}", r.alg, r.n, r.k, r.seed, r.disc,
                       r.b_final ? fmt::format("{}", *r.b_final) : std::string(), r.runtime_ms, r.status,
                       r.guard_tripped ? 1 : 0, r.violations);
}

void write_results(std::ostream& out, std::span<const ResultRow> rows, bool header) {
    if (header) fmt::print(out, "{}\n", kResultsHeader);
    for (const auto& r : rows) fmt::print(out, "{}\n", format_row(r));
}

void append_results(const std::filesystem::path& path, std::span<const ResultRow> rows) {
    bool fresh = true;
    if (std::filesystem::exists(path) && std::filesystem::file_size(path) > 0) {
        std::ifstream in(path);
        std::string first;
        std::getline(in, first);
        if (first != kResultsHeader) {
            throw Error(fmt::format("{} has header '{}', expected '{}'", path.string(), first, kResultsHeader));
        }
        fresh = false;
    }
    std::ofstream out(path, std::ios::app);
    if (!out) throw Error(fmt::format("cannot open {} for appending", path.string()));
    write_results(out, rows, fresh);
}

std::vector<ResultRow> read_results(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kResultsHeader) throw ParseError(1, "missing results header");
    std::vector<ResultRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 10) throw ParseError(lineno, fmt::format("expected 10 fields, found {}", f.size()));
        try {
            ResultRow r;
            r.alg = std::string(f[0]);
            r.n = parse_uint<std::size_t>(f[1], "n");
            r.k = parse_uint<std::size_t>(f[2], "k");
            r.seed = parse_uint<std::uint64_t>(f[3], "seed");
            r.disc = std::stod(std::string(f[4]));
            if (!f[5].empty()) r.b_final = std::stod(std::string(f[5]));
            r.runtime_ms = std::stod(std::string(f[6]));
            r.status = std::string(f[7]);
            r.guard_tripped = parse_uint<int>(f[8], "guard_tripped") != 0;
            r.violations = parse_uint<std::size_t>(f[9], "violations");
            rows.push_back(std::move(r));
        } catch (const std::logic_error& e) {
            throw ParseError(lineno, fmt::format("malformed number: {}", e.what()));
        } catch (const InvalidParameter& e) {
            throw ParseError(lineno, e.what());
        }
    }
    return rows;
}

SetSystem grid_instance(const GridCell& cell, std::uint64_t seed, SignModel signs) {
    return gen_random_regular(cell.n, cell.n, cell.k, seed, signs);
}

RunOutput run_single(Algorithm alg, const SetSystem& original, std::shared_ptr<const CanonicalInstance> canonical,
                     std::uint64_t seed, const walk::WalkConfig& walk_cfg) {
    RunOutput out;
    out.row.alg = std::string(to_string(alg));
    out.row.n = original.cols();
    out.row.k = original.k();
    out.row.seed = seed;
    const auto started = std::chrono::steady_clock::now();
    Rng rng = make_rng(seed, stream_of(alg));
    try {
        switch (alg) {
        case Algorithm::Walk:
        case Algorithm::WalkSimple: {
            if (!canonical) canonical = std::make_shared<const CanonicalInstance>(canonicalize(original));
            walk::WalkConfig cfg = walk_cfg;
            cfg.seed = seed;
            cfg.potential = alg == Algorithm::Walk ? walk::PotentialMode::Full : walk::PotentialMode::Simple;
            auto result = walk::run_walk(canonical, cfg, rng);
            Rng round_rng = make_rng(seed, kRoundingStream);
            auto rounded = rounding::round_full(result.fractional, canonical->system, round_rng);
            out.coloring = canonical->restrict_to_original(rounded.coloring);
            out.row.b_final = result.b_final;
            out.row.status = walk::to_string(result.status.outcome);
            out.row.guard_tripped = result.status.guard_tripped;
            out.row.violations = result.diagnostics.total();
            out.walk = std::move(result);
            break;
        }
        case Algorithm::BeckFiala: out.coloring = baselines::beck_fiala(original); break;
        case Algorithm::Gsw: out.coloring = baselines::gram_schmidt_walk(original, rng); break;
        case Algorithm::Random: out.coloring = baselines::random_coloring(original.cols(), rng); break;
        }
        out.row.disc = discrepancy(original, out.coloring);
    } catch (const Error& e) {
        out.row.status = "error";
        out.row.disc = std::numeric_limits<double>::quiet_NaN();
        fmt::print(stderr, "{} seed {}: {}\n", out.row.alg, seed, e.what());
    }
    out.row.runtime_ms = std::round(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count());
    return out;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    struct Task {
        std::optional<GridCell> cell;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    std::shared_ptr<const SetSystem> fixed;
    if (cfg.input) {
        fixed = std::make_shared<const SetSystem>(load_instance(*cfg.input));
        for (auto s : cfg.seeds) tasks.push_back({std::nullopt, s});
    } else {
        for (const auto& cell : cfg.grid) {
            for (auto s : cfg.seeds) tasks.push_back({cell, s});
        }
    }
    std::shared_ptr<const CanonicalInstance> fixed_canon;
    const bool any_walk = std::any_of(cfg.algorithms.begin(), cfg.algorithms.end(), [](Algorithm a) {
        return a == Algorithm::Walk || a == Algorithm::WalkSimple;
    });
    if (fixed && any_walk) fixed_canon = std::make_shared<const CanonicalInstance>(canonicalize(*fixed));
    if (cfg.telemetry_dir) std::filesystem::create_directories(*cfg.telemetry_dir);

    const std::size_t per_task = cfg.algorithms.size();
    std::vector<ResultRow> rows(tasks.size() * per_task);
    std::vector<std::string> errors(tasks.size());

    auto work = [&](std::size_t t) {
        const Task& task = tasks[t];
        SetSystem generated;
        const SetSystem* sys = fixed.get();
        auto canon = fixed_canon;
        if (!sys) {
            generated = grid_instance(*task.cell, task.seed, cfg.signs);
            sys = &generated;
            if (any_walk) canon = std::make_shared<const CanonicalInstance>(canonicalize(generated));
        }
        for (std::size_t a = 0; a < per_task; ++a) {
            auto out = run_single(cfg.algorithms[a], *sys, canon, task.seed, cfg.walk);
            if (cfg.zero_runtime) out.row.runtime_ms = 0;
            if (out.walk && cfg.telemetry_dir) {
                const auto stem = fmt::format("{}_n{}_k{}_s{}", out.row.alg, out.row.n, out.row.k, task.seed);
                save_telemetry(*cfg.telemetry_dir / (stem + ".csv"), out.walk->telemetry);
                save_run_meta(*cfg.telemetry_dir / (stem + ".meta"), out.walk->params);
            }
            rows[t * per_task + a] = std::move(out.row);
        }
    };

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t t = next++; t < tasks.size(); t = next++) {
            try {
                work(t);
            } catch (const std::exception& e) {
                errors[t] = e.what();
            }
        }
    };
    const std::size_t threads = std::min(cfg.jobs, std::max<std::size_t>(tasks.size(), 1));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(worker);
    }
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        if (!errors[t].empty()) throw Error(fmt::format("task {} failed: {}", t, errors[t]));
    }
    if (cfg.results) append_results(*cfg.results, rows);
    return rows;
}

std::vector<Check> verify_walk(const SetSystem& original, const walk::WalkConfig& cfg) {
    auto canon = std::make_shared<const CanonicalInstance>(canonicalize(original));
    const auto alg = cfg.potential == walk::PotentialMode::Full ? Algorithm::Walk : Algorithm::WalkSimple;
    auto run = run_single(alg, original, canon, cfg.seed, cfg);
    if (!run.walk) throw Error(fmt::format("walk did not complete: {}", run.row.status));
    const auto& res = *run.walk;
    const auto& p = res.params;
    const auto& d = res.diagnostics;
    std::vector<Check> checks;
    auto add = [&](std::string name, bool ok, std::string detail) {
        checks.push_back({std::move(name), ok, std::move(detail)});
    };
    add("run-healthy", res.status.healthy(), walk::to_string(res.status.outcome));
    add("norm-step", d.norm_step_violations == 0, fmt::format("max error {:.3e}", d.max_step_norm_error));
    add("norm-cumulative", d.norm_cumulative_violations == 0,
        fmt::format("max relative error {:.3e}", d.max_cumulative_norm_error));
    const double s_min = *std::min_element(res.final_slack.begin(), res.final_slack.end());
    add("slack-positive", s_min > 0, fmt::format("min slack {:.6g}", s_min));
    const auto sums = row_sums(canon->system, res.fractional.values);
    const double top = *std::max_element(sums.begin(), sums.end());
    add("below-barrier", top < res.b_final, fmt::format("max <a_i,x> {:.6g} vs b_final {:.6g}", top, res.b_final));
    add("barrier-ceiling", res.b_final <= p.barrier_ceiling() + 1e-6,
        fmt::format("b_final {:.6g} vs ceiling {:.6g}", res.b_final, p.barrier_ceiling()));
    add("sigma-bound", d.sigma_violations == 0, fmt::format("max sigma / bound {:.4f}", d.max_sigma_ratio));
    double w_max = 0;
    for (const auto& r : res.telemetry) w_max = std::max(w_max, r.w_max);
    const double envelope = static_cast<double>(p.k) * std::exp(2 * p.lambda) +
                            10 * std::exp(3 * p.lambda) * p.ln_n * p.ln_n;
    add("column-weights", w_max <= envelope, fmt::format("max W_j {:.6g} vs envelope {:.6g}", w_max, envelope));
    add("guard", !res.status.guard_tripped, res.status.guard_tripped ? fmt::format("tripped at t = {}", res.status.guard_time) : "never tripped");
    add("invariant-counters", d.total() == 0, fmt::format("{} violations", d.total()));
    return checks;
}

} // namespace disc::harness
