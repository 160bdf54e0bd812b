#pragma once

#include "disc/instance.hpp"
#include "disc/rng.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace disc::baselines {

/// Iterative rounding: while some row has more floating variables than the maximum column
/// degree t, move along a kernel vector of those rows until a variable reaches +-1.
/// Guarantees disc <= 2t - 1 (checked; throws InvariantViolation otherwise).
Coloring beck_fiala(const SetSystem& sys);

struct GswOptions {
    double ridge = 1e-9; // relative Tikhonov term on the Gram matrix, keeps rank-deficient systems solvable
};

/// Gram-Schmidt walk from x = 0 with a seeded pivot order. Output is in {-1, 1}^n.
Coloring gram_schmidt_walk(const SetSystem& sys, Rng& rng, const GswOptions& options = {});

/// Gram-Schmidt walk on `columns` only, starting from `start` (values in [-1, 1]). Other
/// coordinates are copied unchanged and do not influence the walk.
std::vector<double> gram_schmidt_walk(const SetSystem& sys, std::span<const double> start,
                                      std::span<const std::size_t> columns, Rng& rng,
                                      const GswOptions& options = {});

/// i.i.d. uniform signs.
Coloring random_coloring(std::size_t n, Rng& rng);

} // namespace disc::baselines
