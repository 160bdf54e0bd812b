#pragma once

#include "disc/instance.hpp"
#include "disc/linalg.hpp"
#include "disc/rng.hpp"
#include "disc/sampler.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace disc::walk {

using linalg::DenseMatrix;
using linalg::Vector;

enum class SamplerMode : std::uint8_t { Projection, Sdp };
enum class PotentialMode : std::uint8_t { Full, Simple };

struct WalkConfig {
    double lambda_const = 3.0;      // lambda = lambda_const * ln ln n
    double b0_const = 2.0;          // b0 = b0_const * sqrt(lambda k)
    double ct_const = 1.0;          // barrier-rate multiplier
    double dt = 0.25;
    std::size_t freeze_threshold = 0; // 0 selects max(16, ceil(ln^2 n))
    std::size_t batch_steps = 8;      // micro-steps between rebuilds
    SamplerMode sampler = SamplerMode::Projection;
    PotentialMode potential = PotentialMode::Full;
    double potential_guard = 10.0;
    bool strict = false; // abort on dead slack or guard trip instead of recording and continuing
    std::uint64_t seed = 1;

    // Numerical knobs.
    std::size_t exact_svd_max_dim = 64; // dense SVD when min(rows, n_t) is at most this
    linalg::SubspaceIterationOptions svd{10, 4, 0};
    std::size_t max_micro_steps = 0; // 0 selects 8 n / dt + 1000

    /// Throws InvalidParameter on non-positive constants, dt outside (0, 1], or a batch of 0.
    void validate() const;
};

/// Constants derived once per (instance, config).
struct WalkParams {
    std::size_t n = 0;
    std::size_t k = 0;
    double ln_n = 0.0;
    double lambda = 0.0;        // C ln ln n, floored at C
    double potential_rate = 0.0; // lambda (full) or 1 (simple): Phi = exp(rate * b0 / s)
    double b0 = 0.0;
    double beta = 0.0;          // energy weight; 0 in simple mode
    double alive_threshold = 0.0; // 1 - 1/(2n)
    std::size_t large_threshold = 0; // 10 k
    std::size_t n_freeze = 0;
    double phi_reference = 0.0; // exp(2 rate), the per-row initial-potential convention
    double phi_safe = 0.0;      // exp(3 rate)
    double sigma_bound = 0.0;   // sqrt(20 k) (1 + 2 beta)
    double sigma_bound_tight = 0.0; // sqrt(12.1 k) (1 + 2 beta)
    PotentialMode mode = PotentialMode::Full;
    double ct_const = 1.0;
    double dt = 0.25;

    /// b0 + ct_const lambda k / b0 (1 + ln(n / n_freeze)), the barrier ceiling for full mode.
    double barrier_ceiling() const;
};

WalkParams derive_params(std::size_t n, std::size_t k, const WalkConfig& cfg);

enum class RowStatus : std::uint8_t { Large, Small };

struct WalkState {
    std::shared_ptr<const CanonicalInstance> instance;
    WalkParams params;
    std::vector<double> x;
    double t = 0.0;
    double b = 0.0;
    double c_t = 0.0;
    std::vector<std::size_t> alive;        // ascending column indices
    std::vector<std::int64_t> alive_pos;   // column -> position in `alive`, -1 when frozen
    std::vector<RowStatus> status;
    std::vector<std::size_t> alive_support;
    std::vector<double> inner;  // <a_i, x>
    std::vector<double> energy; // sum_j a_i(j)^2 (1 - x_j^2)
    std::vector<double> slack;
    std::vector<double> potential;
    std::vector<std::uint8_t> capped; // potential exponent hit the cap
    double phi_total = 0.0;
    double norm2 = 0.0;      // ||x||^2
    double clamp_loss = 0.0; // squared norm removed by clamping
    std::size_t clamps = 0;
    std::size_t micro_steps = 0;
    Rng svd_rng;
    DenseMatrix warm_dang, warm_safe; // previous singular vectors, indexed by `warm_cols`
    std::vector<std::size_t> warm_cols;

    std::size_t n_t() const noexcept { return alive.size(); }
    const SetSystem& system() const { return instance->system; }
};

struct PotentialValue {
    double value = 0.0;
    bool capped = false;
};

inline constexpr double kPotentialExponentCap = 700.0;

/// Full mode exp(lambda b0 / s), simple mode exp(b0 / s); exponent capped at 700.
/// Throws DeadRow when s <= 0.
PotentialValue compute_potential(double s, const WalkParams& params);

/// Slack of `row` recomputed from x and b (no cached sums).
double compute_slack(const WalkState& state, std::size_t row);

WalkState init_walk(std::shared_ptr<const CanonicalInstance> inst, const WalkConfig& cfg, Rng& rng);

/// Recompute the alive set, row statuses, sums, slacks and potentials from scratch.
/// Returns the rows that switched from large to small.
std::vector<std::size_t> refresh(WalkState& state);

double barrier_rate(const WalkState& state);

/// W_j for every alive column (in `alive` order).
std::vector<double> column_weights(const WalkState& state);

struct BlockingPlan {
    std::vector<std::size_t> large_rows;
    std::vector<std::size_t> top_potential_rows;
    std::vector<std::size_t> dangerous_support_rows;
    std::vector<std::size_t> dang_rows;
    std::vector<std::size_t> safe_rows;
    std::vector<std::uint8_t> blocked; // per row
    sampler::BlockingVectors vectors;
    Vector dang_values; // singular values computed for E_dang (up to ceil(n_t/11))
    Vector safe_values;
    std::size_t dang_rank = 0;
    std::size_t safe_rank = 0;
    double sigma_dang = 0.0; // singular value at index ceil(n_t/11), 0 if beyond rank
    double sigma_safe = 0.0;
    double max_entry = 0.0;  // max |entry| over E_dang and E_safe
    std::size_t classification_mismatches = 0;
};

/// Assemble blocked rows and singular-vector families for the current state.
/// Requires n_t >= n_freeze. Updates the warm-start cache in `state`.
BlockingPlan select_blocking(WalkState& state, const WalkConfig& cfg);

/// (2 beta e_{t,i} - a_i) restricted to alive columns, or a_i for `raw_row`.
Vector row_vector(const WalkState& state, std::size_t row, bool raw_row = false);

struct StepOutcome {
    double norm_delta = 0.0; // ||x'||^2 - ||x||^2 before clamping
    std::size_t clamped = 0;
    std::size_t dead_rows = 0;
    std::vector<std::size_t> newly_frozen; // columns now past the alive threshold (still alive until refresh)
};

/// x += v sqrt(dt) on alive columns (v = 0 only advances the clock), clamp to [-1, 1], b += c_t dt, t += dt, and
/// update slacks and potentials. The alive set and row statuses change only in refresh().
/// Throws InvariantViolation when v has the wrong size, is not unit, or is not orthogonal
/// to x or to the plan's blocked vectors.
StepOutcome step(WalkState& state, const BlockingPlan& plan, const Vector& v);

struct StepRecord {
    double t = 0.0;
    std::size_t n_t = 0;
    double b_t = 0.0;
    double c_t = 0.0;
    double phi_total = 0.0;
    double phi_max = 0.0;
    double s_min = 0.0;
    double w_max = 0.0;
    double sigma_dang = 0.0;
    double sigma_safe = 0.0;
    std::size_t n_dang = 0;
    std::size_t dang_support_max = 0;
    bool guard_tripped = false;

    // Sampler diagnostics (not part of the CSV schema).
    std::size_t subspace_dim = 0;
    std::size_t declared_vectors = 0;
    std::size_t n_blocked = 0;
    double plan_trace = 0.0;
    std::size_t plan_iterations = 0;
};

/// Counters for every monitored invariant. Tolerances match the walk's documented contracts.
struct WalkDiagnostics {
    double max_step_norm_error = 0.0;       // |delta ||x||^2 - dt| per micro-step
    double max_cumulative_norm_error = 0.0; // |(||x||^2 + clamp loss) - t| / (1 + t)
    std::size_t norm_step_violations = 0;       // > 1e-10
    std::size_t norm_cumulative_violations = 0; // > 1e-6
    std::size_t alive_count_violations = 0;     // n_t < n - t - 1
    std::size_t classification_violations = 0;  // Phi_i <= e^{3 rate} disagrees with s_i >= b0/3
    std::size_t sigma_violations = 0;           // sigma at ceil(n_t/11) above sqrt(20k)(1+2beta)
    std::size_t entry_bound_violations = 0;     // |E entry| > 1 + 2 beta
    std::size_t unblocked_slack_violations = 0; // unblocked slack below rate b0/(2 rate + ln(100 n/n_t))
    std::size_t dang_support_violations = 0;    // unblocked dangerous support above 10 max W_j / e^{3 rate}
    std::size_t slack_jump_violations = 0;      // large -> small transition lowered the slack
    std::size_t barrier_violations = 0;         // b_t decreased or exceeded the ceiling
    std::size_t clamps = 0;
    double max_sigma_ratio = 0.0; // max sigma / sigma_bound

    std::size_t total() const;
};

enum class RunOutcome : std::uint8_t { Healthy, Failed, Aborted, Stalled };

std::string to_string(RunOutcome outcome);

struct RunStatus {
    RunOutcome outcome = RunOutcome::Healthy;
    bool guard_tripped = false;
    double guard_time = -1.0;
    bool dead_slack = false;
    double dead_time = -1.0;
    std::string message;

    bool healthy() const noexcept { return outcome == RunOutcome::Healthy; }
};

struct WalkResult {
    Coloring fractional;
    std::vector<StepRecord> telemetry;
    RunStatus status;
    WalkDiagnostics diagnostics;
    WalkParams params;
    double b_final = 0.0;
    double t_final = 0.0;
    std::size_t rebuilds = 0;
    std::vector<double> final_slack; // per row at the end of the run
};

WalkResult run_walk(std::shared_ptr<const CanonicalInstance> inst, const WalkConfig& cfg, Rng& rng);
WalkResult run_walk(std::shared_ptr<const CanonicalInstance> inst, const WalkConfig& cfg);

} // namespace disc::walk
