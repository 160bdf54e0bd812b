#include "disc/cli.hpp"

#include "disc/error.hpp"
#include "disc/harness.hpp"
#include "disc/telemetry.hpp"

#include <CLI11.hpp>
#include <fmt/ostream.h>
#include <iostream>
#include <map>
#include <optional>

namespace disc {

namespace {

const std::map<std::string, walk::SamplerMode> kSamplers{{"projection", walk::SamplerMode::Projection},
                                                         {"sdp", walk::SamplerMode::Sdp}};
const std::map<std::string, SignModel> kSigns{{"positive", SignModel::Positive}, {"random", SignModel::Random}};
const std::vector<std::string> kAlgorithms{"walk", "walk-simple", "beckfiala", "gsw", "random"};

void add_walk_options(CLI::App* app, walk::WalkConfig& cfg) {
    app->add_option("--sampler", cfg.sampler, "Direction sampler")
        ->transform(CLI::CheckedTransformer(kSamplers).description("{projection,sdp}"))
        ->default_str("projection");
    app->add_option("--dt", cfg.dt, "Micro-step length")->check(CLI::Range(1e-6, 1.0))->capture_default_str();
    app->add_option("--batch", cfg.batch_steps, "Micro-steps between rebuilds")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--lambda-const", cfg.lambda_const, "lambda = C ln ln n")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--b0-const", cfg.b0_const, "b0 = C sqrt(lambda k)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--ct-const", cfg.ct_const, "Barrier-rate multiplier")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--freeze", cfg.freeze_threshold, "Alive count below which the barrier stops (0 = auto)")
        ->capture_default_str();
    app->add_option("--guard", cfg.potential_guard, "Potential guard multiple")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_flag("--strict", cfg.strict, "Abort on guard trip or dead slack");
}

struct InstanceSource {
    std::optional<std::string> input;
    std::size_t n = 0;
    std::size_t rows = 0;
    std::size_t k = 0;
    SignModel signs = SignModel::Positive;
    std::uint64_t seed = 1;

    void add(CLI::App* app) {
        app->add_option("--input", input, "Instance file")->check(CLI::ExistingFile);
        app->add_option("--n", n, "Columns of a generated instance");
        app->add_option("--rows", rows, "Rows of a generated instance (default n)");
        app->add_option("--k", k, "Column degree of a generated instance");
        app->add_option("--signs", signs, "Sign model of a generated instance")
            ->transform(CLI::CheckedTransformer(kSigns).description("{positive,random}"))
            ->default_str("positive");
        app->add_option("--seed", seed, "Seed")->capture_default_str();
    }

    SetSystem load() const {
        if (input) return load_instance(*input);
        if (n == 0) throw InvalidParameter("give --input or --n and --k");
        return gen_random_regular(rows ? rows : n, n, k, seed, signs);
    }
};

// Fills options from key=value lines unless the command line already set them.
void apply_config(CLI::App* app, const std::string& path) {
    for (const auto& item : CLI::ConfigINI().from_file(path)) {
        if (item.name == "++" || item.name == "--") continue;
        if (item.name == "config") throw InvalidParameter("config files cannot include other config files");
        CLI::Option* opt = app->get_option_no_throw("--" + item.name);
        if (!opt) throw InvalidParameter(fmt::format("{}: unknown key '{}'", path, item.fullname()));
        if (opt->count() > 0) continue;
        if (opt->get_type_size() == 0) {
            const std::string v = item.inputs.empty() ? "true" : item.inputs.front();
            if (CLI::detail::to_flag_value(v) <= 0) continue;
            opt->add_result("true");
        } else {
            opt->add_result(item.inputs);
        }
        opt->run_callback();
    }
}

void print_checks(std::ostream& out, const std::vector<harness::Check>& checks) {
    for (const auto& c : checks) fmt::print(out, "{} {:<20} {}\n", c.passed ? "PASS" : "FAIL", c.name, c.detail);
}

} // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Combinatorial discrepancy minimization: barrier walk and baselines", "disc"};
    app.require_subcommand(1);

    // gen
    InstanceSource gen_src;
    std::optional<std::string> gen_out;
    auto* gen = app.add_subcommand("gen", "Generate a random instance with k nonzeros per column");
    gen_src.add(gen);
    gen->get_option("--n")->required();
    gen->get_option("--k")->required();
    gen->remove_option(gen->get_option("--input"));
    gen->add_option("--out", gen_out, "Output file (default stdout)");

    // solve
    InstanceSource solve_src;
    std::string solve_alg = "walk";
    walk::WalkConfig solve_cfg;
    std::optional<std::string> solve_out, solve_telemetry;
    auto* solve = app.add_subcommand("solve", "Run one algorithm on one instance");
    std::optional<std::string> solve_config;
    solve->add_option("--config", solve_config, "key=value file; command-line flags take precedence")
        ->check(CLI::ExistingFile);
    solve->add_option("--alg", solve_alg, "Algorithm")->check(CLI::IsMember(kAlgorithms))->capture_default_str();
    solve_src.add(solve);
    add_walk_options(solve, solve_cfg);
    solve->add_option("--out", solve_out, "Write the coloring here");
    solve->add_option("--telemetry", solve_telemetry, "Write walk telemetry CSV here (plus a .meta sidecar)");

    // bench
    harness::ExperimentConfig bench_cfg;
    std::vector<std::string> bench_algs{"walk"};
    std::optional<std::string> bench_input, bench_out, bench_telemetry, bench_grid;
    std::vector<std::size_t> bench_n, bench_k;
    std::string bench_seeds = "1";
    auto* bench = app.add_subcommand("bench", "Run algorithms over a grid of instances and seeds");
    std::optional<std::string> bench_config;
    bench->add_option("--config", bench_config, "key=value file; command-line flags take precedence")
        ->check(CLI::ExistingFile);
    bench->add_option("--alg", bench_algs, "Algorithms (comma separated)")
        ->delimiter(',')
        ->check(CLI::IsMember(kAlgorithms));
    bench->add_option("--input", bench_input, "Fixed instance file (replaces the grid)")->check(CLI::ExistingFile);
    bench->add_option("--grid", bench_grid, "Cells as n:k,n:k,...");
    bench->add_option("--n", bench_n, "Column counts, crossed with --k")->delimiter(',');
    bench->add_option("--k", bench_k, "Column degrees, crossed with --n")->delimiter(',');
    bench->add_option("--seeds", bench_seeds, "N (seeds 1..N), a-b, or a,b,c")->capture_default_str();
    bench->add_option("--signs", bench_cfg.signs, "Sign model")
        ->transform(CLI::CheckedTransformer(kSigns).description("{positive,random}"))
        ->default_str("positive");
    bench->add_option("--jobs", bench_cfg.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    bench->add_option("--out", bench_out, "Append result rows to this CSV (default stdout)");
    bench->add_option("--telemetry", bench_telemetry, "Directory for per-run walk telemetry");
    bench->add_flag("--zero-runtime", bench_cfg.zero_runtime, "Record runtime_ms as 0");
    add_walk_options(bench, bench_cfg.walk);

    // verify
    InstanceSource verify_src;
    walk::WalkConfig verify_cfg;
    auto* verify = app.add_subcommand("verify", "Run one walk and check its invariants");
    std::optional<std::string> verify_config;
    verify->add_option("--config", verify_config, "key=value file; command-line flags take precedence")
        ->check(CLI::ExistingFile);
    std::string verify_alg = "walk";
    verify->add_option("--alg", verify_alg, "Walk variant")
        ->check(CLI::IsMember({"walk", "walk-simple"}))
        ->capture_default_str();
    verify_src.add(verify);
    add_walk_options(verify, verify_cfg);

    // oracle
    InstanceSource oracle_src;
    auto* oracle = app.add_subcommand("oracle", "Exact minimum discrepancy by enumeration (small instances)");
    oracle_src.add(oracle);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        for (auto [sub, conf] : {std::pair{solve, &solve_config}, {bench, &bench_config}, {verify, &verify_config}}) {
            if (*sub && *conf) apply_config(sub, **conf);
        }
        if (*gen) {
            const auto sys = gen_src.load();
            if (gen_out) {
                save_instance(sys, *gen_out);
            } else {
                out << write_instance(sys);
            }
            return 0;
        }
        if (*solve) {
            const auto sys = solve_src.load();
            const auto alg = harness::parse_algorithm(solve_alg);
            auto result = harness::run_single(alg, sys, nullptr, solve_src.seed, solve_cfg);
            if (solve_out && result.row.status != "error") save_coloring(*solve_out, result.coloring);
            if (solve_telemetry) {
                if (!result.walk) throw InvalidParameter("--telemetry applies only to walk algorithms");
                save_telemetry(*solve_telemetry, result.walk->telemetry);
                save_run_meta(std::filesystem::path(*solve_telemetry).replace_extension(".meta"), result.walk->params);
            }
            harness::write_results(out, std::span(&result.row, 1));
            return result.row.status == "ok" ? 0 : 1;
        }
        if (*bench) {
            for (const auto& a : bench_algs) bench_cfg.algorithms.push_back(harness::parse_algorithm(a));
            if (bench_input) bench_cfg.input = *bench_input;
            if (bench_grid) bench_cfg.grid = harness::parse_grid(*bench_grid);
            for (auto n : bench_n) {
                for (auto k : bench_k) bench_cfg.grid.push_back({n, k});
            }
            bench_cfg.seeds = harness::parse_seeds(bench_seeds);
            if (bench_out) bench_cfg.results = *bench_out;
            if (bench_telemetry) bench_cfg.telemetry_dir = *bench_telemetry;
            const auto rows = harness::run_experiment(bench_cfg);
            if (!bench_out) harness::write_results(out, rows);
            bool all_ok = true;
            for (const auto& r : rows) all_ok = all_ok && r.status == "ok";
            return all_ok ? 0 : 1;
        }
        if (*verify) {
            verify_cfg.seed = verify_src.seed;
            verify_cfg.potential = verify_alg == "walk" ? walk::PotentialMode::Full : walk::PotentialMode::Simple;
            const auto checks = harness::verify_walk(verify_src.load(), verify_cfg);
            print_checks(out, checks);
            bool all = true;
            for (const auto& c : checks) all = all && c.passed;
            return all ? 0 : 1;
        }
        if (*oracle) {
            fmt::print(out, "{}\n", brute_force_min_disc(oracle_src.load()));
            return 0;
        }
    } catch (const InvalidParameter& e) {
        fmt::print(err, "error: {}\n", e.what());
        return 2;
    } catch (const ParseError& e) {
        fmt::print(err, "error: {}\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        fmt::print(err, "error: {}\n", e.what());
        return 1;
    }
    return 2;
}

int cli_main(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return cli_main(args, std::cout, std::cerr);
}

} // namespace disc
