#include "disc/walk.hpp"

#include "disc/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

namespace disc::walk {

void WalkConfig::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0) || !std::isfinite(v)) throw InvalidParameter(fmt::format("{} must be positive, got {}", name, v));
    };
    positive(lambda_const, "lambda_const");
    positive(b0_const, "b0_const");
    positive(potential_guard, "potential_guard");
    if (!(ct_const >= 0) || !std::isfinite(ct_const)) {
        throw InvalidParameter(fmt::format("ct_const must be non-negative, got {}", ct_const));
    }
    if (!(dt > 0 && dt <= 1)) throw InvalidParameter(fmt::format("dt must lie in (0, 1], got {}", dt));
    if (batch_steps == 0) throw InvalidParameter("batch_steps must be at least 1");
}

double WalkParams::barrier_ceiling() const {
    const double tail = 1.0 + std::log(std::max(1.0, static_cast<double>(n) / static_cast<double>(n_freeze)));
    const double ke = static_cast<double>(k);
    if (mode == PotentialMode::Simple) return b0 + ct_const * ke * ln_n * ln_n / b0 * tail;
    return b0 + ct_const * lambda * ke / b0 * tail;
}

WalkParams derive_params(std::size_t n, std::size_t k, const WalkConfig& cfg) {
    cfg.validate();
    WalkParams p;
    p.n = n;
    p.k = k;
    p.mode = cfg.potential;
    p.ct_const = cfg.ct_const;
    p.dt = cfg.dt;
    p.ln_n = std::log(std::max<double>(2.0, static_cast<double>(n)));
    // ln ln n is negative below n = e^e; keep lambda at least lambda_const.
    p.lambda = cfg.lambda_const * std::max(1.0, std::log(p.ln_n));
    const double ke = static_cast<double>(std::max<std::size_t>(k, 1));
    p.b0 = cfg.b0_const * std::sqrt(p.lambda * ke);
    const bool full = cfg.potential == PotentialMode::Full;
    p.potential_rate = full ? p.lambda : 1.0;
    p.beta = full ? p.b0 / (20.0 * ke) : 0.0;
    p.alive_threshold = 1.0 - 1.0 / (2.0 * static_cast<double>(std::max<std::size_t>(n, 1)));
    p.large_threshold = 10 * std::max<std::size_t>(k, 1);
    p.n_freeze = cfg.freeze_threshold
                     ? cfg.freeze_threshold
                     : std::max<std::size_t>(16, static_cast<std::size_t>(std::ceil(p.ln_n * p.ln_n)));
    p.phi_reference = std::exp(2.0 * p.potential_rate);
    p.phi_safe = std::exp(3.0 * p.potential_rate);
    p.sigma_bound = std::sqrt(20.0 * ke) * (1.0 + 2.0 * p.beta);
    p.sigma_bound_tight = std::sqrt(12.1 * ke) * (1.0 + 2.0 * p.beta);
    return p;
}

namespace {

PotentialValue potential_of(double s, const WalkParams& p) {
    if (s <= 0) return {std::exp(kPotentialExponentCap), true};
    const double e = p.potential_rate * p.b0 / s;
    if (e >= kPotentialExponentCap) return {std::exp(kPotentialExponentCap), true};
    return {std::exp(e), false};
}

double small_slack(const WalkState& st, std::size_t i) {
    return st.b - st.inner[i] - st.params.beta * st.energy[i];
}

void recompute_potentials(WalkState& st) {
    const std::size_t m = st.system().rows();
    const double half = st.params.b0 / 2.0;
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        st.slack[i] = st.status[i] == RowStatus::Large ? half : small_slack(st, i);
        const auto pv = potential_of(st.slack[i], st.params);
        st.potential[i] = pv.value;
        st.capped[i] = pv.capped ? 1 : 0;
        total += pv.value;
    }
    st.phi_total = total;
}

// Rebuilds alive set, supports and statuses; optionally reports large -> small transitions.
std::vector<std::size_t> refresh_impl(WalkState& st, bool initial) {
    const SetSystem& sys = st.system();
    const std::size_t n = sys.cols();
    const std::size_t m = sys.rows();
    st.alive.clear();
    std::fill(st.alive_pos.begin(), st.alive_pos.end(), -1);
    for (std::size_t j = 0; j < n; ++j) {
        if (std::abs(st.x[j]) <= st.params.alive_threshold) {
            st.alive_pos[j] = static_cast<std::int64_t>(st.alive.size());
            st.alive.push_back(j);
        }
    }
    std::fill(st.alive_support.begin(), st.alive_support.end(), 0);
    std::fill(st.inner.begin(), st.inner.end(), 0.0);
    std::fill(st.energy.begin(), st.energy.end(), 0.0);
    double norm2 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double xj = st.x[j];
        norm2 += xj * xj;
        const bool live = st.alive_pos[j] >= 0;
        for (const Entry& e : sys.column(j)) {
            st.inner[e.row] += e.sign * xj;
            st.energy[e.row] += 1.0 - xj * xj;
            if (live) ++st.alive_support[e.row];
        }
    }
    st.norm2 = norm2;

    std::vector<std::size_t> transitions;
    for (std::size_t i = 0; i < m; ++i) {
        const RowStatus next = st.alive_support[i] > st.params.large_threshold ? RowStatus::Large : RowStatus::Small;
        if (!initial && st.status[i] == RowStatus::Large && next == RowStatus::Small) transitions.push_back(i);
        if (!initial && st.status[i] == RowStatus::Small && next == RowStatus::Large) {
            throw InvariantViolation(fmt::format("row {} became large again", i));
        }
        st.status[i] = next;
    }
    recompute_potentials(st);
    return transitions;
}

struct RankedRow {
    double key;
    std::size_t row;
};

// Top `count` rows by ascending key, ties broken by lower index.
std::vector<std::size_t> top_rows(std::vector<RankedRow> ranked, std::size_t count) {
    count = std::min(count, ranked.size());
    auto cmp = [](const RankedRow& a, const RankedRow& b) { return a.key < b.key || (a.key == b.key && a.row < b.row); };
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(count), ranked.end(), cmp);
    std::vector<std::size_t> out(count);
    for (std::size_t r = 0; r < count; ++r) out[r] = ranked[r].row;
    return out;
}

DenseMatrix stack_rows(const WalkState& st, const std::vector<std::size_t>& rows, bool raw) {
    DenseMatrix out(static_cast<Eigen::Index>(st.n_t()), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) out.col(static_cast<Eigen::Index>(r)) = row_vector(st, rows[r], raw);
    return out;
}

linalg::SparseRowMatrix e_matrix(const WalkState& st, const std::vector<std::size_t>& rows, double& max_entry) {
    const double beta2 = 2.0 * st.params.beta;
    std::size_t nnz = 0;
    for (auto i : rows) nnz += st.alive_support[i];
    linalg::SparseRowMatrix E(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(st.n_t()));
    E.reserve(static_cast<Eigen::Index>(nnz));
    // Row entries come sorted by column, and alive positions are monotone in the column.
    for (std::size_t r = 0; r < rows.size(); ++r) {
        E.startVec(static_cast<Eigen::Index>(r));
        for (const RowEntry& e : st.system().row(rows[r])) {
            const auto pos = st.alive_pos[e.col];
            if (pos < 0) continue;
            const double value = beta2 * st.x[e.col] - e.sign;
            max_entry = std::max(max_entry, std::abs(value));
            E.insertBack(static_cast<Eigen::Index>(r), pos) = value;
        }
    }
    E.finalize();
    return E;
}

struct Family {
    DenseMatrix blocked;
    DenseMatrix computed;
    Vector values;
    std::size_t rank = 0;
    double sigma = 0.0;
};

Family singular_family(WalkState& st, const linalg::SparseRowMatrix& E, const DenseMatrix& warm, const WalkConfig& cfg) {
    const std::size_t h = st.n_t();
    const std::size_t want_block = h / 11;
    const std::size_t want_check = (h + 10) / 11;
    const auto rows = static_cast<std::size_t>(E.rows());
    const std::size_t count = std::min({want_check, rows, h});
    Family f;
    if (count == 0) {
        f.blocked.resize(static_cast<Eigen::Index>(h), 0);
        f.computed.resize(static_cast<Eigen::Index>(h), 0);
        return f;
    }
    linalg::SingularTriplets trip;
    if (std::min(rows, h) <= cfg.exact_svd_max_dim) {
        trip = linalg::top_right_singular(DenseMatrix(E), count);
    } else {
        trip = linalg::approx_top_right_singular(E, count, cfg.svd, st.svd_rng, warm);
    }
    const double floor = 1e-10 * std::max(1.0, trip.values.size() ? trip.values(0) : 0.0);
    while (f.rank < count && trip.values(static_cast<Eigen::Index>(f.rank)) > floor) ++f.rank;
    const std::size_t take = std::min(want_block, f.rank);
    f.blocked = trip.right_vectors.leftCols(static_cast<Eigen::Index>(take));
    if (want_check <= count) f.sigma = trip.values(static_cast<Eigen::Index>(want_check - 1));
    f.values = trip.values;
    f.computed = std::move(trip.right_vectors);
    return f;
}

DenseMatrix remap_warm(const WalkState& st, const DenseMatrix& warm) {
    if (warm.cols() == 0 || st.warm_cols.empty()) return {};
    DenseMatrix out(static_cast<Eigen::Index>(st.n_t()), warm.cols());
    std::size_t q = 0;
    for (std::size_t p = 0; p < st.n_t(); ++p) {
        while (q < st.warm_cols.size() && st.warm_cols[q] < st.alive[p]) ++q;
        if (q == st.warm_cols.size() || st.warm_cols[q] != st.alive[p]) return {};
        out.row(static_cast<Eigen::Index>(p)) = warm.row(static_cast<Eigen::Index>(q));
    }
    return out;
}

Vector alive_x(const WalkState& st) {
    Vector xv(static_cast<Eigen::Index>(st.n_t()));
    for (std::size_t p = 0; p < st.n_t(); ++p) xv(static_cast<Eigen::Index>(p)) = st.x[st.alive[p]];
    return xv;
}

double max_abs_product(const DenseMatrix& group, const Vector& v) {
    if (group.cols() == 0) return 0.0;
    return (group.transpose() * v).cwiseAbs().maxCoeff();
}

} // namespace

PotentialValue compute_potential(double s, const WalkParams& params) {
    if (!(s > 0)) throw DeadRow(fmt::format("slack {} is not positive", s));
    return potential_of(s, params);
}

double compute_slack(const WalkState& st, std::size_t row) {
    if (row >= st.system().rows()) throw InvalidParameter(fmt::format("row {} out of range", row));
    if (st.status[row] == RowStatus::Large) return st.params.b0 / 2.0;
    double inner = 0.0;
    double energy = 0.0;
    for (const RowEntry& e : st.system().row(row)) {
        const double xj = st.x[e.col];
        inner += e.sign * xj;
        energy += 1.0 - xj * xj;
    }
    return st.b - inner - st.params.beta * energy;
}

WalkState init_walk(std::shared_ptr<const CanonicalInstance> inst, const WalkConfig& cfg, Rng& rng) {
    if (!inst) throw InvalidParameter("walk needs an instance");
    const SetSystem& sys = inst->system;
    if (sys.rows() != sys.cols()) {
        throw InvalidParameter(fmt::format("walk needs a square canonical instance, got {}x{}", sys.rows(), sys.cols()));
    }
    WalkState st;
    st.params = derive_params(sys.cols(), sys.k(), cfg);
    st.instance = std::move(inst);
    const std::size_t n = sys.cols();
    const std::size_t m = sys.rows();
    st.x.assign(n, 0.0);
    st.b = st.params.b0;
    st.alive_pos.assign(n, -1);
    st.status.assign(m, RowStatus::Small);
    st.alive_support.assign(m, 0);
    st.inner.assign(m, 0.0);
    st.energy.assign(m, 0.0);
    st.slack.assign(m, 0.0);
    st.potential.assign(m, 0.0);
    st.capped.assign(m, 0);
    st.svd_rng = make_rng(rng(), 0x5eed);
    refresh_impl(st, true);
    st.c_t = barrier_rate(st);
    return st;
}

std::vector<std::size_t> refresh(WalkState& state) {
    auto transitions = refresh_impl(state, false);
    state.c_t = barrier_rate(state);
    return transitions;
}

double barrier_rate(const WalkState& st) {
    const std::size_t nt = st.n_t();
    if (nt == 0 || nt < st.params.n_freeze) return 0.0;
    const auto& p = st.params;
    const double ke = static_cast<double>(p.k);
    const double ntd = static_cast<double>(nt);
    if (p.mode == PotentialMode::Simple) return p.ct_const * ke * p.ln_n * p.ln_n / (p.b0 * ntd);
    return p.ct_const * p.lambda * ke / (p.b0 * ntd * p.ln_n);
}

std::vector<double> column_weights(const WalkState& st) {
    std::vector<double> w(st.n_t(), 0.0);
    for (std::size_t p = 0; p < st.n_t(); ++p) {
        double sum = 0.0;
        for (const Entry& e : st.system().column(st.alive[p])) sum += std::min(st.potential[e.row], st.params.phi_safe);
        w[p] = sum;
    }
    return w;
}

Vector row_vector(const WalkState& st, std::size_t row, bool raw_row) {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(st.n_t()));
    const double beta2 = 2.0 * st.params.beta;
    for (const RowEntry& e : st.system().row(row)) {
        const auto pos = st.alive_pos[e.col];
        if (pos < 0) continue;
        v(pos) = raw_row ? e.sign : beta2 * st.x[e.col] - e.sign;
    }
    return v;
}

BlockingPlan select_blocking(WalkState& st, const WalkConfig& cfg) {
    const std::size_t h = st.n_t();
    if (h == 0) throw InvalidParameter("no alive columns to block");
    const std::size_t m = st.system().rows();
    const auto& p = st.params;
    const std::size_t per_rule = h / 10;
    const double dang_cut = p.b0 / 3.0;

    BlockingPlan plan;
    plan.blocked.assign(m, 0);
    std::vector<RankedRow> small_by_slack;
    std::vector<RankedRow> dang_by_support;
    for (std::size_t i = 0; i < m; ++i) {
        if (st.status[i] == RowStatus::Large) {
            plan.large_rows.push_back(i);
            if (st.alive_support[i] > 0) plan.safe_rows.push_back(i);
            continue;
        }
        const double s = st.slack[i];
        small_by_slack.push_back({s, i});
        const bool dang = s < dang_cut;
        const bool dang_phi = st.potential[i] > p.phi_safe;
        if (dang != dang_phi && std::abs(s - dang_cut) > 1e-9 * p.b0) ++plan.classification_mismatches;
        if (dang) {
            dang_by_support.push_back({-static_cast<double>(st.alive_support[i]), i});
            if (st.alive_support[i] > 0) plan.dang_rows.push_back(i);
        } else if (st.alive_support[i] > 0) {
            plan.safe_rows.push_back(i);
        }
    }
    std::sort(plan.safe_rows.begin(), plan.safe_rows.end());
    if (plan.large_rows.size() > per_rule) {
        throw InvariantViolation(fmt::format("{} large rows exceed floor(n_t/10) = {}", plan.large_rows.size(), per_rule));
    }
    plan.top_potential_rows = top_rows(std::move(small_by_slack), per_rule);
    plan.dangerous_support_rows = top_rows(std::move(dang_by_support), per_rule);
    for (auto i : plan.large_rows) plan.blocked[i] = 1;
    for (auto i : plan.top_potential_rows) plan.blocked[i] = 1;
    for (auto i : plan.dangerous_support_rows) plan.blocked[i] = 1;

    plan.vectors.large_rows = stack_rows(st, plan.large_rows, true);
    plan.vectors.top_potential_rows = stack_rows(st, plan.top_potential_rows, false);
    plan.vectors.dangerous_support_rows = stack_rows(st, plan.dangerous_support_rows, false);

    const auto E_dang = e_matrix(st, plan.dang_rows, plan.max_entry);
    const auto E_safe = e_matrix(st, plan.safe_rows, plan.max_entry);
    const DenseMatrix warm_dang = remap_warm(st, st.warm_dang);
    const DenseMatrix warm_safe = remap_warm(st, st.warm_safe);
    Family dang = singular_family(st, E_dang, warm_dang, cfg);
    Family safe = singular_family(st, E_safe, warm_safe, cfg);
    plan.dang_values = dang.values;
    plan.safe_values = safe.values;
    plan.dang_rank = dang.rank;
    plan.safe_rank = safe.rank;
    plan.sigma_dang = dang.sigma;
    plan.sigma_safe = safe.sigma;
    plan.vectors.dang_singular = std::move(dang.blocked);
    plan.vectors.safe_singular = std::move(safe.blocked);
    st.warm_dang = std::move(dang.computed);
    st.warm_safe = std::move(safe.computed);
    st.warm_cols = st.alive;
    plan.vectors.x_alive = alive_x(st);
    return plan;
}

StepOutcome step(WalkState& st, const BlockingPlan& plan, const Vector& v) {
    const std::size_t h = st.n_t();
    if (static_cast<std::size_t>(v.size()) != h) {
        throw InvariantViolation(fmt::format("direction has dimension {}, expected n_t = {}", v.size(), h));
    }
    StepOutcome out;
    if (h == 0 || v.isZero(0.0)) {
        st.b += st.c_t * st.params.dt;
        st.t += st.params.dt;
        ++st.micro_steps;
        recompute_potentials(st);
        return out;
    }
    const double vn = v.norm();
    if (std::abs(vn - 1.0) > 1e-9) throw InvariantViolation(fmt::format("direction norm {} is not 1", vn));
    const double vx = v.dot(alive_x(st));
    if (std::abs(vx) > 1e-7) throw InvariantViolation(fmt::format("direction has <v, x> = {:.3e}", vx));
    const double leak = std::max({max_abs_product(plan.vectors.large_rows, v),
                                  max_abs_product(plan.vectors.top_potential_rows, v),
                                  max_abs_product(plan.vectors.dangerous_support_rows, v),
                                  max_abs_product(plan.vectors.dang_singular, v),
                                  max_abs_product(plan.vectors.safe_singular, v)});
    if (leak > 1e-7) throw InvariantViolation(fmt::format("direction overlaps a blocked vector by {:.3e}", leak));

    const double root = std::sqrt(st.params.dt);
    const SetSystem& sys = st.system();
    double delta = 0.0;
    double delta_post = 0.0;
    for (std::size_t p = 0; p < h; ++p) {
        const std::size_t j = st.alive[p];
        const double before = st.x[j];
        double after = before + root * v(static_cast<Eigen::Index>(p));
        delta += (after - before) * (after + before);
        if (std::abs(after) > 1.0) {
            st.clamp_loss += after * after - 1.0;
            after = after > 0 ? 1.0 : -1.0;
            ++out.clamped;
        }
        if (std::abs(after) > st.params.alive_threshold) out.newly_frozen.push_back(j);
        const double d = after - before;
        const double dsq = (after - before) * (after + before);
        delta_post += dsq;
        for (const Entry& e : sys.column(j)) {
            st.inner[e.row] += e.sign * d;
            st.energy[e.row] -= dsq;
        }
        st.x[j] = after;
    }
    st.norm2 += delta_post;
    st.clamps += out.clamped;
    out.norm_delta = delta;
    st.b += st.c_t * st.params.dt;
    st.t += st.params.dt;
    ++st.micro_steps;
    recompute_potentials(st);
    for (std::size_t i = 0; i < sys.rows(); ++i) {
        if (st.status[i] == RowStatus::Small && st.slack[i] <= 0) ++out.dead_rows;
    }
    return out;
}

std::size_t WalkDiagnostics::total() const {
    return norm_step_violations + norm_cumulative_violations + alive_count_violations + classification_violations +
           sigma_violations + entry_bound_violations + unblocked_slack_violations + dang_support_violations +
           slack_jump_violations + barrier_violations;
}

std::string to_string(RunOutcome outcome) {
    switch (outcome) {
    case RunOutcome::Healthy: return "ok";
    case RunOutcome::Failed: return "failed";
    case RunOutcome::Aborted: return "aborted";
    case RunOutcome::Stalled: return "stalled";
    }
    return "unknown";
}

namespace {

constexpr double kStepNormTol = 1e-10;
constexpr double kCumulativeNormTol = 1e-6;

void check_rebuild(const WalkState& st, const BlockingPlan& plan, double w_max, WalkDiagnostics& diag,
                   StepRecord& rec) {
    const auto& p = st.params;
    const std::size_t m = st.system().rows();
    const double nt = static_cast<double>(st.n_t());
    const double n = static_cast<double>(p.n);

    const double err = std::abs(st.norm2 + st.clamp_loss - st.t) / (1.0 + st.t);
    diag.max_cumulative_norm_error = std::max(diag.max_cumulative_norm_error, err);
    if (err > kCumulativeNormTol) ++diag.norm_cumulative_violations;
    if (nt < n - st.t - 1.0 - 1e-9) ++diag.alive_count_violations;
    diag.classification_violations += plan.classification_mismatches;

    const double sig_tol = p.sigma_bound * (1.0 + 1e-9);
    if (plan.sigma_dang > sig_tol) ++diag.sigma_violations;
    if (plan.sigma_safe > sig_tol) ++diag.sigma_violations;
    diag.max_sigma_ratio = std::max(diag.max_sigma_ratio, std::max(plan.sigma_dang, plan.sigma_safe) / p.sigma_bound);
    if (plan.max_entry > 1.0 + 2.0 * p.beta + 1e-12) ++diag.entry_bound_violations;

    const double rate = p.potential_rate;
    const bool bounded_phi = st.phi_total <= 10.0 * n * p.phi_reference;
    const double slack_floor = rate * p.b0 / (2.0 * rate + std::log(100.0 * n / nt)) - 1e-9;
    const double support_cap = 10.0 * w_max / p.phi_safe + 1e-9;
    const double dang_cut = p.b0 / 3.0;
    std::size_t dang = 0;
    std::size_t dang_support_max = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (st.status[i] != RowStatus::Small) continue;
        const bool is_dang = st.slack[i] < dang_cut;
        if (is_dang) ++dang;
        if (plan.blocked[i]) continue;
        if (bounded_phi && st.slack[i] < slack_floor) ++diag.unblocked_slack_violations;
        if (is_dang) {
            dang_support_max = std::max(dang_support_max, st.alive_support[i]);
            if (static_cast<double>(st.alive_support[i]) > support_cap) ++diag.dang_support_violations;
        }
    }
    rec.n_dang = dang;
    rec.dang_support_max = dang_support_max;
}

StepRecord snapshot(const WalkState& st, const BlockingPlan& plan, double w_max) {
    StepRecord r;
    r.t = st.t;
    r.n_t = st.n_t();
    r.b_t = st.b;
    r.c_t = st.c_t;
    r.phi_total = st.phi_total;
    r.phi_max = st.potential.empty() ? 0.0 : *std::max_element(st.potential.begin(), st.potential.end());
    r.s_min = st.slack.empty() ? 0.0 : *std::min_element(st.slack.begin(), st.slack.end());
    r.w_max = w_max;
    r.sigma_dang = plan.sigma_dang;
    r.sigma_safe = plan.sigma_safe;
    r.n_blocked = static_cast<std::size_t>(std::count(plan.blocked.begin(), plan.blocked.end(), 1));
    return r;
}

// Remove the part of v along the current x that is not already excluded by the basis.
void orthogonalize_to_x(Vector& v, const Vector& xv, const sampler::SubspaceBasis& W) {
    Vector r = xv;
    if (W.size() > 0) r.noalias() -= W.basis * (W.basis.transpose() * xv);
    const double rn = r.norm();
    if (rn <= 1e-12 * std::max(1.0, xv.norm())) return;
    r /= rn;
    v -= r.dot(v) * r;
    v -= r.dot(v) * r;
    const double vn = v.norm();
    if (vn <= 1e-12) throw SolverFailure("direction vanished after removing the x component");
    v /= vn;
}

} // namespace

WalkResult run_walk(std::shared_ptr<const CanonicalInstance> inst, const WalkConfig& cfg) {
    Rng rng = make_rng(cfg.seed);
    return run_walk(std::move(inst), cfg, rng);
}

WalkResult run_walk(std::shared_ptr<const CanonicalInstance> inst, const WalkConfig& cfg, Rng& rng) {
    cfg.validate();
    WalkState st = init_walk(std::move(inst), cfg, rng);
    const auto& p = st.params;
    WalkResult res;
    res.params = p;
    auto& diag = res.diagnostics;
    auto& status = res.status;
    const std::size_t step_cap =
        cfg.max_micro_steps ? cfg.max_micro_steps
                            : static_cast<std::size_t>(8.0 * static_cast<double>(p.n) / p.dt) + 1000;
    const double guard_level = cfg.potential_guard * static_cast<double>(p.n) * p.phi_reference;
    double last_b = st.b;
    bool stop = false;

    while (!stop) {
        if (res.rebuilds > 0) {
            const auto transitions = refresh(st);
            for (auto i : transitions) {
                if (st.slack[i] < p.b0 / 2.0 - 1e-9) ++diag.slack_jump_violations;
            }
        }
        if (st.n_t() == 0 || st.n_t() <= p.n_freeze) break;
        if (st.micro_steps >= step_cap) {
            status.outcome = RunOutcome::Stalled;
            status.message = fmt::format("stopped after {} micro-steps with n_t = {}", st.micro_steps, st.n_t());
            break;
        }
        BlockingPlan plan = select_blocking(st, cfg);
        const auto weights = column_weights(st);
        const double w_max = weights.empty() ? 0.0 : *std::max_element(weights.begin(), weights.end());
        StepRecord rec = snapshot(st, plan, w_max);
        check_rebuild(st, plan, w_max, diag, rec);
        ++res.rebuilds;

        const auto W = sampler::build_subspace(st.n_t(), plan.vectors);
        rec.subspace_dim = W.size();
        rec.declared_vectors = W.declared_count;
        std::optional<sampler::SubIsotropicPlan> sdp;
        if (cfg.sampler == SamplerMode::Sdp) {
            sdp = sampler::solve_subisotropic(W);
            rec.plan_trace = sdp->trace;
            rec.plan_iterations = sdp->iterations;
        }
        rec.guard_tripped = status.guard_tripped;
        res.telemetry.push_back(rec);

        for (std::size_t s = 0; s < cfg.batch_steps && !stop; ++s) {
            Vector v = sdp ? sampler::draw_direction(*sdp, rng) : sampler::projection_fallback_direction(W, rng);
            orthogonalize_to_x(v, alive_x(st), W);
            const auto out = step(st, plan, v);
            const double err = std::abs(out.norm_delta - p.dt);
            diag.max_step_norm_error = std::max(diag.max_step_norm_error, err);
            if (err > kStepNormTol) ++diag.norm_step_violations;
            if (st.b < last_b) ++diag.barrier_violations;
            last_b = st.b;
            if (!status.guard_tripped && st.phi_total > guard_level) {
                status.guard_tripped = true;
                status.guard_time = st.t;
                if (cfg.strict) {
                    status.outcome = RunOutcome::Aborted;
                    status.message = fmt::format("potential guard tripped at t = {}", st.t);
                    stop = true;
                }
            }
            if (out.dead_rows > 0 && !status.dead_slack) {
                status.dead_slack = true;
                status.dead_time = st.t;
                if (status.outcome == RunOutcome::Healthy) status.outcome = RunOutcome::Failed;
                status.message = fmt::format("{} rows reached non-positive slack at t = {}", out.dead_rows, st.t);
                if (cfg.strict) {
                    status.outcome = RunOutcome::Aborted;
                    stop = true;
                }
            }
        }
    }
    if (!stop) refresh(st);

    const double err = std::abs(st.norm2 + st.clamp_loss - st.t) / (1.0 + st.t);
    diag.max_cumulative_norm_error = std::max(diag.max_cumulative_norm_error, err);
    if (err > kCumulativeNormTol) ++diag.norm_cumulative_violations;
    if (st.b > p.barrier_ceiling() + 1e-6) ++diag.barrier_violations;
    diag.clamps = st.clamps;

    res.fractional.values = st.x;
    res.b_final = st.b;
    res.t_final = st.t;
    res.final_slack.resize(st.system().rows());
    for (std::size_t i = 0; i < res.final_slack.size(); ++i) res.final_slack[i] = compute_slack(st, i);
    return res;
}

} // namespace disc::walk
