#include <gtest/gtest.h>

#include "orbitlab/cylinder_function.hpp"
#include "support.hpp"

using namespace orbitlab;
using namespace orbitlab::testing;

TEST(CylinderFunction, TableSizeChecked) {
    EXPECT_THROW(table(2, {Q(1), Q(2), Q(3)}), Error);
    EXPECT_NO_THROW(table(2, {Q(1), Q(2), Q(3), Q(4)}));
}

TEST(CylinderFunction, Integrate) {
    const auto sys = fair_coin();
    EXPECT_EQ(integrate(sys, CylinderFunction<Q>::constant(2, Q(1))), Q(1));
    EXPECT_EQ(integrate(sys, lift_depth(CylinderFunction<Q>::constant(2, Q(1)), 3)), Q(1));
    EXPECT_EQ(integrate(sys, table(1, {Q(2), Q(0)})), Q(1));
    const auto biased = ShiftSystem<Q>::bernoulli({Q(3, 10), Q(7, 10)});
    EXPECT_EQ(integrate(biased, table(1, {Q(1), Q(2)})), Q(17, 10));
}

TEST(CylinderFunction, LiftDepth) {
    EXPECT_EQ(lift_depth(CylinderFunction<Q>::constant(2, Q(5)), 2).values(), std::vector<Q>(4, Q(5)));
    EXPECT_EQ(lift_depth(table(1, {Q(2), Q(0)}), 2).values(), (std::vector<Q>{2, 2, 0, 0}));
    EXPECT_THROW(lift_depth(table(1, {Q(2), Q(0)}), 0), Error);
    std::mt19937_64 gen(1);
    const auto sys = fair_coin();
    for (int i = 0; i < 20; ++i) {
        const auto f = random_function(gen, sys, 2);
        EXPECT_EQ(integrate(sys, lift_depth(f, 4)), integrate(sys, f));
        EXPECT_EQ(compact(lift_depth(f, 4)), compact(f));
    }
}

TEST(CylinderFunction, ComposeWithShift) {
    const auto f = table(1, {Q(2), Q(0)});
    EXPECT_EQ(compose_with_shift(f, 0), f);
    EXPECT_EQ(compose_with_shift(f, 1).values(), (std::vector<Q>{2, 0, 2, 0}));
    std::mt19937_64 gen(2);
    const auto sys = ShiftSystem<Q>::bernoulli({Q(1, 3), Q(2, 3)});
    for (int i = 0; i < 20; ++i) {
        const auto g = random_function(gen, sys, 2);
        EXPECT_EQ(integrate(sys, compose_with_shift(g, 3)), integrate(sys, g));
    }
}

TEST(CylinderFunction, Transfer) {
    const auto sys = fair_coin();
    EXPECT_EQ(compact(transfer(sys, table(1, {Q(2), Q(0)}))), CylinderFunction<Q>::constant(2, Q(1)));
    EXPECT_EQ(compact(transfer(sys, CylinderFunction<Q>::constant(2, Q(3)))), CylinderFunction<Q>::constant(2, Q(3)));
    const auto chain = ShiftSystem<Q>::markov({{Q(0), Q(1)}, {Q(1), Q(0)}}, {Q(1, 2), Q(1, 2)});
    EXPECT_THROW(transfer(chain, table(1, {Q(2), Q(0)})), Error);
}

TEST(CylinderFunction, TransferDualityExact) {
    std::mt19937_64 gen(3);
    const auto sys = ShiftSystem<Q>::bernoulli({Q(1, 5), Q(3, 10), Q(1, 2)});
    for (int i = 0; i < 100; ++i) {
        const auto f = random_function(gen, sys, 1 + i % 3);
        const auto g = random_function(gen, sys, i % 4);
        const Q lhs = integrate(sys, multiply(f, compose_with_shift(g, 1)));
        const Q rhs = integrate(sys, multiply(transfer(sys, f), g));
        ASSERT_EQ(lhs, rhs);
    }
}

TEST(CylinderFunction, TransferDualityFloat) {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(-1, 1);
    const auto sys = ShiftSystem<double>::bernoulli({0.3, 0.7});
    for (int i = 0; i < 50; ++i) {
        std::vector<double> fv(8), gv(4);
        for (auto& v : fv) v = u(gen);
        for (auto& v : gv) v = u(gen);
        const CylinderFunction<double> f(2, 3, fv), g(2, 2, gv);
        const double lhs = integrate(sys, multiply(f, compose_with_shift(g, 1)));
        const double rhs = integrate(sys, multiply(transfer(sys, f), g));
        EXPECT_NEAR(lhs, rhs, 1e-12);
    }
}

TEST(CylinderFunction, TransferConservesMassAndSign) {
    std::mt19937_64 gen(5);
    const auto sys = fair_coin();
    for (int i = 0; i < 20; ++i) {
        const auto f = random_density(gen, sys, 3);
        const auto tf = transfer(sys, f);
        EXPECT_EQ(integrate(sys, tf), integrate(sys, f));
        EXPECT_TRUE(tf.is_nonnegative());
    }
}

TEST(CylinderFunction, CesaroAverage) {
    const auto sys = fair_coin();
    const auto f = table(1, {Q(2), Q(0)});
    EXPECT_EQ(compact(cesaro_average(sys, f, 1)), f);
    EXPECT_EQ(compact(cesaro_average(sys, f, 2)).values(), (std::vector<Q>{Q(3, 2), Q(1, 2)}));
    EXPECT_THROW(cesaro_average(sys, f, 0), Error);
}

TEST(CylinderFunction, TransferPowerReachesConstant) {
    std::mt19937_64 gen(6);
    const auto sys = ShiftSystem<Q>::bernoulli({Q(1, 3), Q(2, 3)});
    for (std::size_t m = 1; m <= 4; ++m) {
        const auto f = random_function(gen, sys, m);
        for (std::size_t j = m; j <= m + 2; ++j)
            EXPECT_EQ(compact(transfer_power(sys, f, j)), CylinderFunction<Q>::constant(2, integrate(sys, f)));
    }
}

// Finite-time Yosida on a product measure: zero-mean depth-m f is killed by m transfers.
TEST(CylinderFunction, ZeroMeanKilledAfterDepthTransfers) {
    std::mt19937_64 gen(7);
    const auto sys = fair_coin();
    for (int i = 0; i < 100; ++i) {
        const std::size_t m = 1 + i % 4;
        const auto f = random_function(gen, sys, m, true);
        ASSERT_EQ(integrate(sys, f), Q(0));
        EXPECT_EQ(compact(transfer_power(sys, f, m)), CylinderFunction<Q>::zero(2));
        for (std::size_t n = 1; n <= 3 * m; ++n)
            EXPECT_LE(l1_norm(sys, cesaro_average(sys, f, n)),
                      Q(static_cast<long>(m), static_cast<long>(n)) * l1_norm(sys, f));
    }
}

TEST(CylinderFunction, PointwiseOps) {
    const auto sys = fair_coin();
    const auto a = table(1, {Q(3, 2), Q(1, 2)});
    const auto b = table(1, {Q(1, 2), Q(3, 2)});
    EXPECT_EQ(pointwise_min(a, a), a);
    EXPECT_EQ(pointwise_min(a, b).values(), (std::vector<Q>{Q(1, 2), Q(1, 2)}));
    std::mt19937_64 gen(8);
    for (int i = 0; i < 30; ++i) {
        const auto f = random_function(gen, sys, 1 + i % 3);
        const auto g = random_function(gen, sys, i % 3);
        EXPECT_EQ(integrate(sys, pointwise_min(f, g)),
                  (integrate(sys, f) + integrate(sys, g) - integrate(sys, abs(subtract(f, g)))) / 2);
    }
    EXPECT_EQ(scale(a, Q(2)).values(), (std::vector<Q>{Q(3), Q(1)}));
}

TEST(CylinderFunction, Compact) {
    const auto f = table(2, {Q(1), Q(1), Q(3), Q(3)});
    EXPECT_EQ(compact(f), table(1, {Q(1), Q(3)}));
    EXPECT_EQ(compact(table(2, {Q(1), Q(1), Q(1), Q(1)})).depth(), 0u);
    EXPECT_EQ(compact(table(2, {Q(1), Q(2), Q(1), Q(2)})).depth(), 2u);
}

TEST(CylinderFunction, IndicatorAndSup) {
    const auto ind = CylinderFunction<Q>::indicator(2, Word::parse("01"), Q(4));
    EXPECT_EQ(ind.values(), (std::vector<Q>{0, 4, 0, 0}));
    EXPECT_EQ(ind(Word::parse("011")), Q(4));
    EXPECT_EQ(integrate(fair_coin(), ind), Q(1));
    EXPECT_EQ(table(1, {Q(-3), Q(2)}).sup_norm(), Q(3));
}
