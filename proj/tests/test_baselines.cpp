#include "disc/baselines.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace disc;
using namespace disc::baselines;

TEST_CASE("beck-fiala on tiny systems") {
    const SetSystem single(3, 3, 1, {{0, 0, 1}, {1, 1, -1}, {2, 2, 1}});
    const auto c1 = beck_fiala(single);
    CHECK(c1.is_full());
    CHECK(discrepancy(single, c1) <= 1);

    std::vector<Entry> ones;
    for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t i = 0; i < 3; ++i) ones.push_back({i, j, 1});
    const SetSystem all(3, 3, 3, ones);
    const auto c = beck_fiala(all);
    CHECK(c.is_full());
    const double d = discrepancy(all, c);
    CHECK(d <= 5);
    CHECK(d >= oracle::min_disc(all));
}

TEST_CASE("beck-fiala bound on random systems") {
    for (std::size_t k : {1, 2, 3, 6, 12}) {
        for (std::uint64_t seed = 1; seed <= 4; ++seed) {
            const auto sys = gen_random_regular(60, 80, k, seed, SignModel::Random);
            const auto c = beck_fiala(sys);
            CHECK(c.is_full());
            CHECK(discrepancy(sys, c) <= 2.0 * static_cast<double>(k) - 1.0);
        }
    }
    const SetSystem empty(4, 4, 0, {});
    CHECK(beck_fiala(empty).is_full());
}

TEST_CASE("gram-schmidt walk outputs signs and is seeded") {
    const SetSystem one(1, 1, 1, {{0, 0, 1}});
    Rng r1 = make_rng(1);
    const auto c = gram_schmidt_walk(one, r1);
    CHECK(c.is_full());
    CHECK(c.size() == 1);

    const auto sys = gen_random_regular(50, 70, 6, 2, SignModel::Random);
    Rng a = make_rng(5), b = make_rng(5), d = make_rng(6);
    const auto x = gram_schmidt_walk(sys, a);
    CHECK(x.is_full());
    CHECK(x.values == gram_schmidt_walk(sys, b).values);
    CHECK(x.values != gram_schmidt_walk(sys, d).values);
}

TEST_CASE("gram-schmidt walk on a subset leaves other columns alone") {
    const auto sys = gen_random_regular(30, 30, 4, 3);
    std::vector<double> start(30, 0.25);
    start[0] = 1.0;
    std::vector<std::size_t> cols{2, 5, 9, 11};
    Rng rng = make_rng(7);
    const auto out = gram_schmidt_walk(sys, start, cols, rng);
    for (std::size_t j = 0; j < 30; ++j) {
        if (std::find(cols.begin(), cols.end(), j) != cols.end()) {
            CHECK(std::abs(out[j]) == 1.0);
        } else {
            CHECK(out[j] == start[j]);
        }
    }
}

TEST_CASE("gram-schmidt walk beats random signs on average") {
    double gsw = 0, rnd = 0;
    for (std::uint64_t s = 1; s <= 5; ++s) {
        const auto sys = gen_random_regular(200, 200, 16, s);
        Rng r = make_rng(s);
        gsw += discrepancy(sys, gram_schmidt_walk(sys, r));
        rnd += discrepancy(sys, random_coloring(200, r));
    }
    CHECK(gsw < rnd);
}

TEST_CASE("random coloring is unbiased and seeded") {
    Rng a = make_rng(3), b = make_rng(3);
    CHECK(random_coloring(50, a).values == random_coloring(50, b).values);
    Rng rng = make_rng(4);
    std::vector<double> mean(8, 0.0);
    const int draws = 10000;
    for (int d = 0; d < draws; ++d) {
        const auto c = random_coloring(8, rng);
        CHECK(c.is_full());
        for (std::size_t j = 0; j < 8; ++j) mean[j] += c.values[j];
    }
    for (double m : mean) CHECK(std::abs(m / draws) <= 0.05);
}
