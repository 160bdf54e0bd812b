#pragma once

#include "disc/instance.hpp"
#include "disc/walk.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace disc::harness {

enum class Algorithm : std::uint8_t { Walk, WalkSimple, BeckFiala, Gsw, Random };

std::string_view to_string(Algorithm alg);
/// Accepts walk, walk-simple, beckfiala, gsw, random. Throws InvalidParameter otherwise.
Algorithm parse_algorithm(std::string_view name);

struct GridCell {
    std::size_t n = 0;
    std::size_t k = 0;

    friend bool operator==(const GridCell&, const GridCell&) = default;
};

/// "n:k,n:k,..." pairs.
std::vector<GridCell> parse_grid(std::string_view text);
/// "N" selects seeds 1..N; "a-b" a range; "a,b,c" an explicit list.
std::vector<std::uint64_t> parse_seeds(std::string_view text);

struct ExperimentConfig {
    std::vector<Algorithm> algorithms;
    std::optional<std::filesystem::path> input; // fixed instance; the grid is ignored when set
    std::vector<GridCell> grid;                 // square n x n instances, column degree k
    SignModel signs = SignModel::Positive;
    std::vector<std::uint64_t> seeds;
    walk::WalkConfig walk;
    std::optional<std::filesystem::path> results;       // appended CSV
    std::optional<std::filesystem::path> telemetry_dir; // one CSV per walk run
    std::size_t jobs = 1;
    bool zero_runtime = false; // write runtime_ms = 0 so reruns are byte-identical

    /// Throws InvalidParameter on an empty algorithm list, grid (without input) or seed list.
    void validate() const;
};

struct ResultRow {
    std::string alg;
    std::size_t n = 0;
    std::size_t k = 0;
    std::uint64_t seed = 0;
    double disc = 0.0;
    std::optional<double> b_final;
    double runtime_ms = 0.0;
    std::string status = "ok";
    bool guard_tripped = false;
    std::size_t violations = 0;

    friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

inline constexpr std::string_view kResultsHeader =
    "alg,n,k,seed,disc,b_final,runtime_ms,status,guard_tripped,violations";

std::string format_row(const ResultRow& row);
void write_results(std::ostream& out, std::span<const ResultRow> rows, bool header = true);
/// Appends to `path`, writing the header only when the file is new or empty. Throws Error
/// if an existing file has a different header.
void append_results(const std::filesystem::path& path, std::span<const ResultRow> rows);
std::vector<ResultRow> read_results(std::istream& in);

/// Everything produced by one algorithm on one instance.
struct RunOutput {
    ResultRow row;
    Coloring coloring; // over the original columns
    std::optional<walk::WalkResult> walk;
};

/// Runs `alg` on `original`. Walk variants use `canonical` (built on demand when null).
/// Failures are reported in row.status rather than thrown.
RunOutput run_single(Algorithm alg, const SetSystem& original, std::shared_ptr<const CanonicalInstance> canonical,
                     std::uint64_t seed, const walk::WalkConfig& walk_cfg);

/// One row per (cell, seed, algorithm), ordered by cell, then seed, then the configured
/// algorithm order, independent of `jobs`. Writes results and telemetry when configured.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

/// Instance for a grid cell and seed.
SetSystem grid_instance(const GridCell& cell, std::uint64_t seed, SignModel signs);

struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Runs one walk and evaluates its invariant checks (norm growth, slack safety, barrier
/// ceiling, singular-value bound, column-weight envelope, guard, zero counted violations).
std::vector<Check> verify_walk(const SetSystem& original, const walk::WalkConfig& cfg);

} // namespace disc::harness
