#pragma once

#include "disc/instance.hpp"
#include "disc/rng.hpp"

#include <cstddef>
#include <vector>

namespace disc::rounding {

/// Columns split into fixed (+-1) and free (fractional). `values` holds the sign for fixed
/// columns and the fractional value for free ones.
struct PartialColoring {
    std::vector<double> values;
    std::vector<std::uint8_t> fixed;
    std::vector<std::size_t> free; // ascending

    std::size_t size() const noexcept { return values.size(); }
    bool is_fixed(std::size_t j) const { return fixed.at(j) != 0; }
};

/// Columns with |x_j| > 1 - 1/(2n) snap to sign(x_j); the rest stay free.
PartialColoring snap_frozen(const Coloring& x, std::size_t n);

/// Per-row |<a_i, snapped - x>|.
std::vector<double> snap_error(const SetSystem& sys, const Coloring& x, const PartialColoring& partial);

inline constexpr std::size_t kDefaultFreeCap = 4096;

struct FinishResult {
    Coloring coloring;
    std::vector<double> added_error; // per row |sum_{j free} a_i(j) (final_j - partial_j)|
};

/// Rounds the free columns with the Gram-Schmidt walk; fixed columns are copied.
/// Throws InvalidParameter when more than `cap` columns are free.
FinishResult finish_remainder(const SetSystem& sys, const PartialColoring& partial, Rng& rng,
                              std::size_t cap = kDefaultFreeCap);

struct RoundResult {
    Coloring coloring;
    std::vector<double> snap_error;
    std::vector<double> added_error;
    std::vector<double> row_sums; // <a_i, coloring>
    double discrepancy = 0.0;
    std::size_t free_columns = 0;
};

/// snap_frozen with n = sys.cols(), then finish_remainder.
RoundResult round_full(const Coloring& x, const SetSystem& sys, Rng& rng, std::size_t cap = kDefaultFreeCap);

} // namespace disc::rounding
