#include <gtest/gtest.h>

#include "orbitlab/limit/distribution.hpp"
#include "orbitlab/limit/estimators.hpp"
#include "support.hpp"

using namespace orbitlab;
using namespace orbitlab::testing;

namespace {

const PowerSchedule sqrt_half{Q(1, 2), Q(1, 2)};

MonteCarloOptions mc(std::size_t samples, std::uint64_t seed, std::size_t workers = 1) {
    MonteCarloOptions o;
    o.samples = samples;
    o.seed = seed;
    o.workers = workers;
    return o;
}

CylinderFunction<Q> coin() { return table(1, {Q(1, 2), Q(-1, 2)}); }

}  // namespace

TEST(Conditioned, ZeroObservableIsPointMass) {
    const auto sys = fair_coin();
    const auto zero = table(1, {Q(0), Q(0)});
    const auto d = empirical_birkhoff(sys, zero, sqrt_half, 64, ConditioningSpec<Q>{}, mc(2000, 1));
    EXPECT_DOUBLE_EQ(ks_distance(d, DiscreteDistribution<double>{{{0.0, 1.0}}}), 0.0);
}

TEST(Conditioned, ConstantTestFunctionHasNoGap) {
    const auto sys = fair_coin();
    const auto est = two_sided_conditioned_check(sys, coin(), sqrt_half, table(1, {Q(2), Q(0)}),
                                                 table(1, {Q(0), Q(2)}), test_function("constant-one"), 256,
                                                 mc(5000, 2));
    EXPECT_EQ(est.path, EstimatorPath::pinned);
    EXPECT_EQ(est.mass_exact, "1");
    EXPECT_NEAR(est.gap(), 0.0, 1e-12);
}

TEST(Conditioned, PinnedAndWeightedAgree) {
    const auto sys = fair_coin();
    const auto& g = test_function("clamped-positive");
    const std::size_t n = 256;
    // (3/2, 1/2) = (2, 0) / 2 + 1 / 2: the weighted estimate is the average of two pinned ones.
    const auto pinned = eagleson_check(sys, coin(), sqrt_half, table(1, {Q(2), Q(0)}), g, n, mc(20000, 3));
    const auto plain = conditioned_estimate(sys, coin(), sqrt_half, ConditioningSpec<Q>{}, g, n, mc(20000, 4));
    const auto mixed = eagleson_check(sys, coin(), sqrt_half, table(1, {Q(3, 2), Q(1, 2)}), g, n, mc(20000, 5));
    EXPECT_EQ(pinned.path, EstimatorPath::pinned);
    EXPECT_EQ(mixed.path, EstimatorPath::weighted);
    const double predicted = 0.5 * pinned.integral + 0.5 * plain.integral;
    const double combined = std::sqrt(0.25 * pinned.stderr_ * pinned.stderr_ + 0.25 * plain.stderr_ * plain.stderr_ +
                                      mixed.stderr_ * mixed.stderr_);
    EXPECT_LE(std::abs(mixed.integral - predicted), 3 * combined + 1e-12);
    EXPECT_DOUBLE_EQ(pinned.reference, mixed.reference);
}

TEST(Conditioned, MatchesExactLaw) {
    const auto sys = fair_coin();
    const std::size_t n = 16;
    // B_16 = 2, so the sampled and exact values are the same doubles.
    const auto exact = exact_conditioned_distribution(sys, coin(), n, {{0, 0}, {n, 1}}).scaled(0.5);
    const auto est = two_sided_conditioned_check(sys, coin(), sqrt_half, table(1, {Q(2), Q(0)}),
                                                 table(1, {Q(0), Q(2)}), test_function("tent"), n, mc(50000, 6));
    EXPECT_EQ(est.path, EstimatorPath::pinned);
    EXPECT_LE(ks_distance(est.distribution, exact), 0.02);
    double oracle = 0;
    for (const auto& [v, p] : exact.atoms) oracle += p * test_function("tent")(v);
    EXPECT_NEAR(est.integral, oracle, 4 * est.stderr_ + 1e-12);
}

TEST(Conditioned, EaglesonLargeN) {
    const auto sys = fair_coin();
    const auto est = eagleson_check(sys, coin(), sqrt_half, table(1, {Q(2), Q(0)}), test_function("clamped-positive"),
                                    4096, mc(20000, 7));
    EXPECT_LE(std::abs(est.gap()), 0.05);
    ASSERT_TRUE(est.ks);
    EXPECT_LE(*est.ks, 0.05);
}

TEST(Conditioned, SignedWeightsHaveNoKs) {
    const auto sys = fair_coin();
    const auto est = eagleson_check(sys, coin(), sqrt_half, table(1, {Q(-1), Q(1)}), test_function("bounded-sine"),
                                    64, mc(5000, 8));
    EXPECT_FALSE(est.ks);
    EXPECT_EQ(est.mass_exact, "0");
    EXPECT_FALSE(est.mass_positive);
}

TEST(Conditioned, WorkerCountDoesNotChangeResult) {
    const auto sys = fair_coin();
    MonteCarloOptions one = mc(10000, 9, 1), three = mc(10000, 9, 3);
    one.block_size = three.block_size = 1000;
    const auto a = eagleson_check(sys, coin(), sqrt_half, table(1, {Q(3, 2), Q(1, 2)}), test_function("tent"), 128, one);
    const auto b = eagleson_check(sys, coin(), sqrt_half, table(1, {Q(3, 2), Q(1, 2)}), test_function("tent"), 128, three);
    EXPECT_EQ(a.integral, b.integral);
    EXPECT_EQ(a.stderr_, b.stderr_);
}

TEST(Conditioned, Errors) {
    const auto sys = fair_coin();
    const auto& g = test_function("tent");
    EXPECT_THROW(eagleson_check(sys, coin(), sqrt_half, coin(), g, 0, mc(10, 1)), Error);
    EXPECT_THROW(eagleson_check(sys, coin(), sqrt_half, coin(), g, 4, mc(1, 1)), Error);
    const auto markov = ShiftSystem<Q>::markov({{Q(0), Q(1)}, {Q(1), Q(0)}}, {Q(1, 2), Q(1, 2)});
    EXPECT_THROW(eagleson_check(markov, coin(), sqrt_half, coin(), g, 4, mc(10, 1)), Error);
}

TEST(MultiPoint, ThreeDensities) {
    const auto sys = fair_coin();
    const std::vector<CylinderFunction<Q>> phis{table(1, {Q(2), Q(0)}), table(2, {Q(0), Q(4), Q(0), Q(0)}),
                                                table(1, {Q(0), Q(2)})};
    const auto est = multi_point_conditioned_check(sys, coin(), sqrt_half, phis, {0, 512, 1024},
                                                   test_function("clamped-positive"), 1024, mc(20000, 10));
    EXPECT_EQ(est.path, EstimatorPath::pinned);
    EXPECT_EQ(est.mass_exact, "1");
    EXPECT_LE(std::abs(est.gap()), 0.05);
}

TEST(MultiPoint, RejectsBadTimes) {
    const auto sys = fair_coin();
    const auto& g = test_function("tent");
    const std::vector<CylinderFunction<Q>> phis{table(2, {Q(0), Q(4), Q(0), Q(0)}), table(1, {Q(0), Q(2)})};
    EXPECT_THROW(multi_point_conditioned_check(sys, coin(), sqrt_half, phis, {3, 3}, g, 8, mc(10, 1)), Error);
    EXPECT_THROW(multi_point_conditioned_check(sys, coin(), sqrt_half, phis, {5, 2}, g, 8, mc(10, 1)), Error);
    try {
        multi_point_conditioned_check(sys, coin(), sqrt_half, phis, {3, 4}, g, 8, mc(10, 1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("overlap"), std::string::npos);
    }
    EXPECT_NO_THROW(multi_point_conditioned_check(sys, coin(), sqrt_half, phis, {3, 5}, g, 8, mc(10, 1)));
}

TEST(Invariance, ZeroObservable) {
    const auto sys = fair_coin();
    const auto gap = invariance_gap(sys, table(1, {Q(0), Q(0)}), sqrt_half, table(1, {Q(2), Q(0)}),
                                    table(1, {Q(0), Q(2)}), test_function("tent"), 64, mc(5000, 11));
    ASSERT_TRUE(gap.bound_exact);
    EXPECT_EQ(*gap.bound_exact, Q(0));
    EXPECT_DOUBLE_EQ(gap.bound, 0.0);
    // phi1 o T and phi2 o T^{n+1} are independent of phi1, phi2 and g(0) is fixed: the gap is pure noise.
    EXPECT_TRUE(gap.within_bound || gap.estimate <= 3 * gap.stderr_);
}

TEST(Invariance, BoundExactAndDecreasing) {
    const auto sys = fair_coin();
    const auto& g = test_function("clamped-identity");
    // C = 2 * 2 * max(1, 2) = 8; |f| = 1/2 everywhere so the bound is 2C min(1, 1/sqrt n).
    Q previous(1000);
    for (std::size_t n : {1u, 4u, 16u, 256u, 4096u}) {
        const auto gap = invariance_gap(sys, coin(), sqrt_half, table(1, {Q(2), Q(0)}), table(1, {Q(0), Q(2)}), g, n,
                                        mc(4000, 12));
        EXPECT_DOUBLE_EQ(gap.constant, 8.0);
        ASSERT_TRUE(gap.bound_exact);
        const Q sqrt_n = *PowerSchedule(Q(1), Q(1, 2)).exact(n);
        EXPECT_EQ(*gap.bound_exact, Q(16) * std::min(Q(1), Q(1) / sqrt_n)) << n;
        EXPECT_LE(*gap.bound_exact, previous);
        previous = *gap.bound_exact;
        EXPECT_TRUE(gap.within_bound) << n;
    }
}
