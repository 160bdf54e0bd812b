#include "disc/rounding.hpp"

#include "disc/baselines.hpp"
#include "disc/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace disc::rounding {

PartialColoring snap_frozen(const Coloring& x, std::size_t n) {
    if (n == 0) throw InvalidParameter("snap threshold needs n >= 1");
    const double threshold = 1.0 - 1.0 / (2.0 * static_cast<double>(n));
    PartialColoring p;
    p.values.resize(x.size());
    p.fixed.assign(x.size(), 0);
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double v = x.values[j];
        if (!(std::abs(v) <= 1.0)) throw InvalidParameter(fmt::format("x[{}] = {} is outside [-1, 1]", j, v));
        if (std::abs(v) > threshold) {
            p.values[j] = v > 0 ? 1.0 : -1.0;
            p.fixed[j] = 1;
        } else {
            p.values[j] = v;
            p.free.push_back(j);
        }
    }
    return p;
}

std::vector<double> snap_error(const SetSystem& sys, const Coloring& x, const PartialColoring& partial) {
    if (x.size() != sys.cols() || partial.size() != sys.cols()) {
        throw InvalidParameter("coloring sizes do not match the system");
    }
    std::vector<double> err(sys.rows(), 0.0);
    for (const Entry& e : sys.entries()) err[e.row] += e.sign * (partial.values[e.col] - x.values[e.col]);
    for (auto& v : err) v = std::abs(v);
    return err;
}

FinishResult finish_remainder(const SetSystem& sys, const PartialColoring& partial, Rng& rng, std::size_t cap) {
    if (partial.size() != sys.cols()) {
        throw InvalidParameter(fmt::format("partial coloring has {} columns, system has {}", partial.size(), sys.cols()));
    }
    if (partial.free.size() > cap) {
        throw InvalidParameter(fmt::format("{} free columns exceed the finisher cap of {}", partial.free.size(), cap));
    }
    FinishResult out;
    out.coloring.values = baselines::gram_schmidt_walk(sys, partial.values, partial.free, rng);
    out.added_error.assign(sys.rows(), 0.0);
    for (auto j : partial.free) {
        const double d = out.coloring.values[j] - partial.values[j];
        for (const Entry& e : sys.column(j)) out.added_error[e.row] += e.sign * d;
    }
    for (auto& v : out.added_error) v = std::abs(v);
    for (std::size_t j = 0; j < sys.cols(); ++j) {
        if (partial.fixed[j] && out.coloring.values[j] != partial.values[j]) {
            throw InvariantViolation(fmt::format("finisher changed fixed column {}", j));
        }
    }
    return out;
}

RoundResult round_full(const Coloring& x, const SetSystem& sys, Rng& rng, std::size_t cap) {
    if (x.size() != sys.cols()) {
        throw InvalidParameter(fmt::format("coloring has {} entries, system has {} columns", x.size(), sys.cols()));
    }
    RoundResult r;
    const auto partial = snap_frozen(x, std::max<std::size_t>(sys.cols(), 1));
    r.snap_error = snap_error(sys, x, partial);
    r.free_columns = partial.free.size();
    auto fin = finish_remainder(sys, partial, rng, cap);
    r.coloring = std::move(fin.coloring);
    r.added_error = std::move(fin.added_error);
    r.row_sums = row_sums(sys, r.coloring.values);
    for (double s : r.row_sums) r.discrepancy = std::max(r.discrepancy, std::abs(s));
    return r;
}

} // namespace disc::rounding
