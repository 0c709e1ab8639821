#include <gtest/gtest.h>

#include <map>

#include "orbitlab/coupling.hpp"
#include "orbitlab/transport_plan.hpp"
#include "support.hpp"

using namespace orbitlab;
using namespace orbitlab::testing;

namespace {

TransportPlan<Q> single_atom(const std::string& w1, const std::string& w2, Q mass) {
    const auto sys = fair_coin();
    TransportPlan<Q> plan{sys, {{Word::parse(w1), Word::parse(w2), mass}}, CylinderFunction<Q>::zero(2),
                          CylinderFunction<Q>::zero(2), Q(0), Q(0)};
    plan.declared_left = left_marginal(plan);
    plan.declared_right = right_marginal(plan);
    return plan;
}

/// Random plan from a mixture of iterate-graph couplings of a random density.
TransportPlan<Q> random_plan(std::mt19937_64& gen, const ShiftSystem<Q>& sys) {
    const auto f = random_density(gen, sys, 1 + gen() % 2);
    std::vector<TransportPlan<Q>> plans;
    std::vector<Q> weights;
    const std::size_t n = 1 + gen() % 3;
    for (std::size_t j = 0; j < n; ++j) {
        plans.push_back(iterate_graph_coupling(sys, f, j + gen() % 2));
        weights.push_back(Q(1, static_cast<long>(n)));
    }
    return mixture(plans, weights);
}

}  // namespace

TEST(TransportPlan, EmptyPlanMarginalsAreZero) {
    const auto sys = fair_coin();
    const auto f = table(1, {Q(2), Q(0)});
    const auto plan = empty_plan(sys, f, f);
    EXPECT_EQ(compact(left_marginal(plan)), CylinderFunction<Q>::zero(2));
    EXPECT_EQ(compact(right_marginal(plan)), CylinderFunction<Q>::zero(2));
}

TEST(TransportPlan, RefineExample) {
    const auto plan = single_atom("0", "", Q(1, 2));
    EXPECT_EQ(refine_to_depth(plan, Side::right, 0).atoms, plan.atoms);
    const auto refined = refine_to_depth(plan, Side::right, 1);
    ASSERT_EQ(refined.atoms.size(), 2u);
    EXPECT_EQ(refined.atoms[0], (TransportAtom<Q>{Word::parse("00"), Word::parse("0"), Q(1, 4)}));
    EXPECT_EQ(refined.atoms[1], (TransportAtom<Q>{Word::parse("01"), Word::parse("1"), Q(1, 4)}));

    const auto unit = single_atom("0", "", Q(1));
    const auto r1 = refine_to_depth(unit, Side::right, 1);
    EXPECT_EQ(r1.atoms[0].mass, Q(1, 2));
    EXPECT_EQ(r1.atoms[1].mass, Q(1, 2));
}

TEST(TransportPlan, RefinePreservesMarginals) {
    std::mt19937_64 gen(31);
    const auto sys = fair_coin();
    for (int i = 0; i < 30; ++i) {
        const auto plan = random_plan(gen, sys);
        for (auto side : {Side::left, Side::right}) {
            const auto r = refine_to_depth(plan, side, 4);
            EXPECT_TRUE(same_function(left_marginal(r), left_marginal(plan)));
            EXPECT_TRUE(same_function(right_marginal(r), right_marginal(plan)));
            EXPECT_EQ(r.mass(), plan.mass());
        }
    }
}

TEST(TransportPlan, MergeAndPrune) {
    const auto sys = fair_coin();
    TransportPlan<Q> plan{sys,
                          {{Word::parse("0"), Word::parse("1"), Q(1, 8)},
                           {Word::parse("0"), Word::parse("1"), Q(1, 8)},
                           {Word::parse("1"), Word{}, Q(1, 100)}},
                          CylinderFunction<Q>::zero(2), CylinderFunction<Q>::zero(2), Q(0), Q(0)};
    const auto merged = merge_and_prune(plan, Q(0));
    ASSERT_EQ(merged.atoms.size(), 2u);
    EXPECT_EQ(merged.atoms[0].mass, Q(1, 4));
    EXPECT_TRUE(same_function(left_marginal(merged), left_marginal(plan)));
    const auto pruned = merge_and_prune(plan, Q(1, 50));
    ASSERT_EQ(pruned.atoms.size(), 1u);
    EXPECT_EQ(pruned.tv_error_budget, Q(1, 100));
    EXPECT_EQ(pruned.defect, Q(1, 100));
}

TEST(TransportPlan, TiltRight) {
    std::mt19937_64 gen(32);
    const auto sys = fair_coin();
    for (int i = 0; i < 30; ++i) {
        const auto plan = random_plan(gen, sys);
        const auto den = right_marginal(plan);
        const auto same = tilt_right(plan, den, den);
        EXPECT_TRUE(same_function(left_marginal(same), left_marginal(plan)));
        EXPECT_EQ(same.mass(), plan.mass());

        const auto zero = tilt_right(plan, CylinderFunction<Q>::zero(2), den);
        EXPECT_TRUE(zero.atoms.empty());

        const auto num = pointwise_min(den, random_density(gen, sys, 2));
        const auto tilted = tilt_right(plan, num, den);
        EXPECT_TRUE(same_function(right_marginal(tilted), num));
        // Domination: at a common right depth every tilted atom sits below the original one.
        std::size_t depth = 0;
        for (const auto* p : {&plan, &tilted})
            for (const auto& a : p->atoms) depth = std::max(depth, a.w2.size());
        auto before = refine_to_depth(plan, Side::right, depth).atoms;
        auto after = refine_to_depth(tilted, Side::right, depth).atoms;
        canonicalize_atoms(before);
        canonicalize_atoms(after);
        std::map<std::pair<Word, Word>, Q> masses;
        for (const auto& a : before) masses[{a.w1, a.w2}] = a.mass;
        for (const auto& a : after) {
            const auto it = masses.find({a.w1, a.w2});
            ASSERT_NE(it, masses.end());
            EXPECT_LE(a.mass, it->second);
        }
    }
    const auto plan = single_atom("0", "", Q(1));
    EXPECT_THROW(tilt_right(plan, table(0, {Q(2)}), table(0, {Q(1)})), Error);
    EXPECT_THROW(tilt_right(plan, table(0, {Q(1, 2)}), table(0, {Q(2)})), Error);
}

TEST(TransportPlan, TransposeSwapsMarginals) {
    std::mt19937_64 gen(33);
    const auto sys = fair_coin();
    const auto plan = random_plan(gen, sys);
    const auto t = transpose(plan);
    EXPECT_TRUE(same_function(left_marginal(t), right_marginal(plan)));
    EXPECT_TRUE(same_function(right_marginal(t), left_marginal(plan)));
    EXPECT_EQ(transpose(t).atoms, plan.atoms);
}

TEST(TransportPlan, ComposeWithIdentity) {
    std::mt19937_64 gen(34);
    const auto sys = fair_coin();
    for (int i = 0; i < 10; ++i) {
        const auto plan = random_plan(gen, sys);
        const auto id = identity_coupling(sys, right_marginal(plan));
        const auto c = compose(plan, id);
        EXPECT_TRUE(same_function(left_marginal(c), left_marginal(plan)));
        EXPECT_TRUE(same_function(right_marginal(c), right_marginal(plan)));
        EXPECT_EQ(c.mass(), plan.mass());
    }
}

TEST(TransportPlan, ComposeGraphWithTranspose) {
    const auto sys = fair_coin();
    std::mt19937_64 gen(35);
    for (int i = 0; i < 10; ++i) {
        const auto f = random_density(gen, sys, 2);
        const auto g = graph_coupling(sys, f);
        for (auto gluing : {Gluing::independent, Gluing::monotone}) {
            const auto c = compose(g, transpose(g), gluing);
            EXPECT_TRUE(same_function(left_marginal(c), f));
            EXPECT_TRUE(same_function(right_marginal(c), f));
            EXPECT_EQ(c.mass(), Q(1));
        }
    }
}

TEST(TransportPlan, ComposeRejectsMismatchedMiddle) {
    const auto sys = fair_coin();
    const auto a = graph_coupling(sys, table(1, {Q(2), Q(0)}));
    const auto b = identity_coupling(sys, table(1, {Q(2), Q(0)}));
    EXPECT_THROW(compose(a, b), Error);
}

TEST(TransportPlan, ComposeAssociativeOnMarginals) {
    std::mt19937_64 gen(36);
    const auto sys = fair_coin();
    for (int i = 0; i < 10; ++i) {
        const auto f = random_density(gen, sys, 1 + i % 2);
        const auto a = iterate_graph_coupling(sys, f, 1);
        const auto b = iterate_graph_coupling(sys, right_marginal(a), 1);
        const auto c = transpose(iterate_graph_coupling(sys, f, 2));
        // a: f -> T^f, b: T^f -> T^^2 f, c: T^^2 f -> f.
        const auto left = compose(compose(a, b), c);
        const auto right = compose(a, compose(b, c));
        EXPECT_TRUE(same_function(left_marginal(left), left_marginal(right)));
        EXPECT_TRUE(same_function(right_marginal(left), right_marginal(right)));
        EXPECT_TRUE(same_function(left_marginal(left), f));
    }
}

TEST(TransportPlan, MixtureOfIteratesGivesCesaro) {
    const auto sys = fair_coin();
    std::mt19937_64 gen(37);
    for (std::size_t n = 1; n <= 4; ++n) {
        const auto f = random_density(gen, sys, 2);
        const auto plan = cesaro_coupling(sys, f, n);
        EXPECT_TRUE(same_function(right_marginal(plan), cesaro_average(sys, f, n)));
        EXPECT_TRUE(same_function(left_marginal(plan), f));
        EXPECT_EQ(plan.mass(), Q(1));
    }
    const auto g = graph_coupling(sys, table(1, {Q(2), Q(0)}));
    EXPECT_EQ(mixture(std::vector<TransportPlan<Q>>{g}, std::vector<Q>{Q(1)}).atoms, g.atoms);
}

TEST(TransportPlan, CoarsenKeepsMarginals) {
    std::mt19937_64 gen(38);
    const auto sys = fair_coin();
    for (int i = 0; i < 20; ++i) {
        const auto plan = refine_to_depth(random_plan(gen, sys), Side::left, 4);
        const auto c = coarsen(plan);
        EXPECT_LE(c.atoms.size(), plan.atoms.size());
        EXPECT_TRUE(same_function(left_marginal(c), left_marginal(plan)));
        EXPECT_TRUE(same_function(right_marginal(c), right_marginal(plan)));
    }
}

TEST(PairSampler, SuffixAgreementAndFrequencies) {
    const auto sys = fair_coin();
    const auto plan = cesaro_coupling(sys, table(2, {Q(4), Q(0), Q(0), Q(0)}), 3);
    const PairSampler sampler(plan);
    StreamRng rng(41, 0);
    std::map<std::pair<std::size_t, std::size_t>, double> counts;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        const auto pair = sampler.sample(rng, 12);
        ASSERT_TRUE(pair);
        const auto a = pair->x1.view().subspan(pair->n1);
        const auto b = pair->x2.view().subspan(pair->n2);
        ASSERT_TRUE(std::equal(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(std::min(a.size(), b.size())), b.begin()));
        counts[{pair->n1, pair->n2}] += 1;
    }
    // Meet-time classes (n1, n2) = (2, 2 - j) for j = 0, 1, 2 with mass 1/3 each.
    for (const auto& [key, c] : counts) {
        const double p = 1.0 / 3.0;
        EXPECT_NEAR(c, draws * p, 3 * std::sqrt(draws * p * (1 - p))) << key.first << "," << key.second;
    }
}

TEST(PairSampler, DefectOutcome) {
    auto plan = single_atom("0", "", Q(1, 2));
    plan.defect = Q(1, 2);
    const PairSampler sampler(plan);
    StreamRng rng(42, 0);
    int defects = 0;
    for (int i = 0; i < 10000; ++i) defects += sampler.sample(rng, 8) ? 0 : 1;
    EXPECT_NEAR(defects, 5000, 3 * 50);
    EXPECT_THROW(sampler.sample(rng, 0), Error);
}
