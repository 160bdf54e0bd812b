#include "disc/baselines.hpp"

#include "disc/error.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

namespace disc::baselines {

namespace {

using Matrix = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

constexpr double kSnap = 1e-12;

double snap(double v) {
    if (v >= 1.0 - kSnap) return 1.0;
    if (v <= -1.0 + kSnap) return -1.0;
    return v;
}

bool frozen(double v) { return v == 1.0 || v == -1.0; }

// Columns per kernel batch beyond the active-row count; each batch fixes up to this many variables.
constexpr std::size_t kKernelSlack = 16;

} // namespace

Coloring beck_fiala(const SetSystem& sys) {
    const std::size_t n = sys.cols();
    const std::size_t m = sys.rows();
    const std::size_t t = sys.max_column_degree();
    std::vector<double> x(n, 0.0);
    std::vector<std::size_t> floating_in_row(m, 0);
    for (std::size_t i = 0; i < m; ++i) floating_in_row[i] = sys.row(i).size();
    std::vector<std::uint8_t> fixed(n, 0);
    std::size_t n_floating = n;

    auto fix = [&](std::size_t j, double value) {
        x[j] = value;
        fixed[j] = 1;
        --n_floating;
        for (const Entry& e : sys.column(j)) --floating_in_row[e.row];
    };

    while (n_floating > 0) {
        std::vector<std::size_t> active;
        for (std::size_t i = 0; i < m; ++i) {
            if (floating_in_row[i] > t) active.push_back(i);
        }
        if (active.empty()) {
            for (std::size_t j = 0; j < n; ++j) {
                if (!fixed[j]) fix(j, x[j] >= 0 ? 1.0 : -1.0);
            }
            break;
        }
        const std::size_t r = active.size();
        if (r >= n_floating) {
            throw InvariantViolation(fmt::format("{} active rows but only {} floating variables", r, n_floating));
        }
        std::vector<std::size_t> cols;
        const std::size_t width = std::min(n_floating, r + kKernelSlack);
        for (std::size_t j = 0; j < n && cols.size() < width; ++j) {
            if (!fixed[j]) cols.push_back(j);
        }
        std::vector<std::int64_t> local(n, -1);
        for (std::size_t c = 0; c < cols.size(); ++c) local[cols[c]] = static_cast<std::int64_t>(c);
        const auto w = static_cast<Eigen::Index>(cols.size());
        Matrix M = Matrix::Zero(static_cast<Eigen::Index>(r), w);
        for (std::size_t a = 0; a < r; ++a) {
            for (const RowEntry& e : sys.row(active[a])) {
                if (local[e.col] >= 0) M(static_cast<Eigen::Index>(a), local[e.col]) = e.sign;
            }
        }
        // Trailing columns of the full Q of M^T are orthogonal to every active row.
        Eigen::HouseholderQR<Matrix> qr(M.transpose());
        Matrix Q = qr.householderQ();
        Matrix K = Q.rightCols(w - static_cast<Eigen::Index>(r));
        if ((M * K).cwiseAbs().maxCoeff() > 1e-9) {
            Eigen::FullPivLU<Matrix> lu(M);
            K = lu.kernel();
            if (K.cols() == 0 || (M * K).cwiseAbs().maxCoeff() > 1e-9) {
                throw SolverFailure("Beck-Fiala kernel computation failed");
            }
        }

        while (K.cols() > 0) {
            Vec y = K.col(0);
            double alpha = std::numeric_limits<double>::infinity();
            for (Eigen::Index c = 0; c < w; ++c) {
                const std::size_t j = cols[static_cast<std::size_t>(c)];
                if (fixed[j] || std::abs(y(c)) < 1e-14) continue;
                const double bound = y(c) > 0 ? (1.0 - x[j]) / y(c) : (-1.0 - x[j]) / y(c);
                alpha = std::min(alpha, bound);
            }
            if (!std::isfinite(alpha)) {
                K = K.rightCols(K.cols() - 1).eval();
                continue;
            }
            std::vector<Eigen::Index> newly;
            for (Eigen::Index c = 0; c < w; ++c) {
                const std::size_t j = cols[static_cast<std::size_t>(c)];
                if (fixed[j]) continue;
                const double v = snap(x[j] + alpha * y(c));
                x[j] = std::clamp(v, -1.0, 1.0);
                if (frozen(v)) newly.push_back(c);
            }
            if (newly.empty()) throw SolverFailure("Beck-Fiala step fixed no variable");
            for (auto c : newly) {
                fix(cols[static_cast<std::size_t>(c)], x[cols[static_cast<std::size_t>(c)]]);
                if (K.cols() == 0) continue;
                // Keep only kernel directions that leave the fixed coordinate alone.
                Eigen::Index piv = 0;
                K.row(c).cwiseAbs().maxCoeff(&piv);
                const double p = K(c, piv);
                if (std::abs(p) > 1e-14) {
                    for (Eigen::Index q = 0; q < K.cols(); ++q) {
                        if (q != piv) K.col(q) -= (K(c, q) / p) * K.col(piv);
                    }
                }
                Matrix next(w, K.cols() - 1);
                Eigen::Index at = 0;
                for (Eigen::Index q = 0; q < K.cols(); ++q) {
                    if (q != piv) next.col(at++) = K.col(q);
                }
                K = std::move(next);
                for (Eigen::Index q = 0; q < K.cols(); ++q) K(c, q) = 0.0;
            }
            for (Eigen::Index q = 0; q < K.cols(); ++q) {
                const double norm = K.col(q).norm();
                if (norm > 0) K.col(q) /= norm;
            }
        }
    }

    Coloring out{std::move(x)};
    const double bound = t == 0 ? 0.0 : 2.0 * static_cast<double>(t) - 1.0;
    const double d = discrepancy(sys, out);
    if (d > bound + 1e-9) throw InvariantViolation(fmt::format("Beck-Fiala discrepancy {} exceeds 2t-1 = {}", d, bound));
    return out;
}

namespace {

// Inverse of G restricted to a shrinking index set, downdated one index at a time.
class ShrinkingInverse {
public:
    ShrinkingInverse(const Matrix& G, std::vector<Eigen::Index> members) : G_(G), members_(std::move(members)) {
        refactor();
    }

    const std::vector<Eigen::Index>& members() const { return members_; }

    // -G_AA^{-1} G_{A,p}, aligned with members().
    Vec solve_against(Eigen::Index p) const {
        const auto a = static_cast<Eigen::Index>(members_.size());
        Vec rhs(a);
        for (Eigen::Index s = 0; s < a; ++s) rhs(s) = G_(members_[static_cast<std::size_t>(s)], p);
        return -(H_.topLeftCorner(a, a) * rhs);
    }

    void remove(Eigen::Index id) {
        const auto it = std::find(members_.begin(), members_.end(), id);
        if (it == members_.end()) return;
        const auto s = static_cast<Eigen::Index>(it - members_.begin());
        const auto last = static_cast<Eigen::Index>(members_.size()) - 1;
        if (s != last) {
            H_.row(s).head(last + 1).swap(H_.row(last).head(last + 1));
            H_.col(s).head(last + 1).swap(H_.col(last).head(last + 1));
            std::swap(members_[static_cast<std::size_t>(s)], members_.back());
        }
        members_.pop_back();
        ++removals_;
        const double pivot = H_(last, last);
        if (!(pivot > 0) || removals_ > std::max<std::size_t>(32, members_.size() / 4)) {
            refactor();
            return;
        }
        // Schur complement of the removed slot.
        const Vec col = H_.col(last).head(last);
        H_.topLeftCorner(last, last).noalias() -= col * col.transpose() / pivot;
    }

private:
    void refactor() {
        removals_ = 0;
        const auto a = static_cast<Eigen::Index>(members_.size());
        Matrix sub(a, a);
        for (Eigen::Index r = 0; r < a; ++r) {
            for (Eigen::Index c = 0; c < a; ++c) {
                sub(r, c) = G_(members_[static_cast<std::size_t>(r)], members_[static_cast<std::size_t>(c)]);
            }
        }
        Eigen::LDLT<Matrix> ldlt(sub);
        H_ = ldlt.solve(Matrix::Identity(a, a));
    }

    const Matrix& G_;
    std::vector<Eigen::Index> members_;
    Matrix H_;
    std::size_t removals_ = 0;
};

} // namespace

std::vector<double> gram_schmidt_walk(const SetSystem& sys, std::span<const double> start,
                                      std::span<const std::size_t> columns, Rng& rng, const GswOptions& options) {
    if (start.size() != sys.cols()) {
        throw InvalidParameter(fmt::format("start has {} entries, system has {} columns", start.size(), sys.cols()));
    }
    std::vector<double> x(start.begin(), start.end());
    for (double v : x) {
        if (!(std::abs(v) <= 1.0)) throw InvalidParameter(fmt::format("start value {} outside [-1, 1]", v));
    }
    const auto c = static_cast<Eigen::Index>(columns.size());
    if (c == 0) return x;

    std::vector<std::int64_t> local(sys.cols(), -1);
    for (Eigen::Index a = 0; a < c; ++a) {
        const std::size_t j = columns[static_cast<std::size_t>(a)];
        if (j >= sys.cols()) throw InvalidParameter(fmt::format("column {} out of range", j));
        if (local[j] >= 0) throw InvalidParameter(fmt::format("column {} listed twice", j));
        local[j] = a;
    }
    // Gram matrix of the selected columns, accumulated row by row.
    Matrix G = Matrix::Zero(c, c);
    std::vector<std::pair<Eigen::Index, int>> in_row;
    for (std::size_t i = 0; i < sys.rows(); ++i) {
        in_row.clear();
        for (const RowEntry& e : sys.row(i)) {
            if (local[e.col] >= 0) in_row.emplace_back(local[e.col], e.sign);
        }
        for (const auto& [a, sa] : in_row) {
            for (const auto& [b, sb] : in_row) G(a, b) += sa * sb;
        }
    }
    const double ridge = options.ridge * std::max(1.0, G.diagonal().maxCoeff());
    G.diagonal().array() += ridge;

    Vec y(c);
    for (Eigen::Index a = 0; a < c; ++a) y(a) = snap(x[columns[static_cast<std::size_t>(a)]]);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(c));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t cursor = 0;
    auto next_pivot = [&]() -> Eigen::Index {
        while (cursor < order.size() && frozen(y(order[cursor]))) ++cursor;
        return cursor < order.size() ? order[cursor] : -1;
    };

    Eigen::Index pivot = next_pivot();
    if (pivot >= 0) {
        std::vector<Eigen::Index> members;
        for (Eigen::Index a = 0; a < c; ++a) {
            if (a != pivot && !frozen(y(a))) members.push_back(a);
        }
        ShrinkingInverse inv(G, std::move(members));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        while (pivot >= 0) {
            const auto& mem = inv.members();
            const Vec u_rest = inv.solve_against(pivot);
            double up = std::numeric_limits<double>::infinity();
            double down = std::numeric_limits<double>::infinity();
            auto limit = [&](double xv, double uv) {
                if (uv > 0) {
                    up = std::min(up, (1.0 - xv) / uv);
                    down = std::min(down, (xv + 1.0) / uv);
                } else if (uv < 0) {
                    up = std::min(up, (-1.0 - xv) / uv);
                    down = std::min(down, (xv - 1.0) / uv);
                }
            };
            limit(y(pivot), 1.0);
            for (std::size_t s = 0; s < mem.size(); ++s) limit(y(mem[s]), u_rest(static_cast<Eigen::Index>(s)));
            // Mean-zero step: +up with probability down / (up + down).
            const double delta = unit(rng) * (up + down) < down ? up : -down;
            std::vector<Eigen::Index> newly;
            y(pivot) = std::clamp(snap(y(pivot) + delta), -1.0, 1.0);
            for (std::size_t s = 0; s < mem.size(); ++s) {
                const Eigen::Index a = mem[s];
                y(a) = std::clamp(snap(y(a) + delta * u_rest(static_cast<Eigen::Index>(s))), -1.0, 1.0);
                if (frozen(y(a))) newly.push_back(a);
            }
            for (auto a : newly) inv.remove(a);
            if (frozen(y(pivot))) {
                pivot = next_pivot();
                if (pivot >= 0) inv.remove(pivot);
            } else if (newly.empty()) {
                throw SolverFailure("Gram-Schmidt walk step fixed no coordinate");
            }
        }
    }
    for (Eigen::Index a = 0; a < c; ++a) x[columns[static_cast<std::size_t>(a)]] = y(a);
    return x;
}

Coloring gram_schmidt_walk(const SetSystem& sys, Rng& rng, const GswOptions& options) {
    std::vector<double> zero(sys.cols(), 0.0);
    std::vector<std::size_t> all(sys.cols());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return Coloring{gram_schmidt_walk(sys, zero, all, rng, options)};
}

Coloring random_coloring(std::size_t n, Rng& rng) {
    Coloring out;
    out.values.resize(n);
    for (auto& v : out.values) v = rademacher(rng);
    return out;
}

} // namespace disc::baselines
