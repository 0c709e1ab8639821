#pragma once

// Monte Carlo estimators for Birkhoff sums S_n f / B_n under conditioned
// measures. Sampling runs in double; exact masses and bounds keep the
// system's scalar.

#include <cmath>
#include <optional>
#include <vector>

#include "orbitlab/cylinder_function.hpp"
#include "orbitlab/limit/distribution.hpp"
#include "orbitlab/limit/schedule.hpp"
#include "orbitlab/limit/test_functions.hpp"
#include "orbitlab/mixing.hpp"
#include "orbitlab/parallel.hpp"
#include "orbitlab/rng.hpp"
#include "orbitlab/sampling.hpp"

namespace orbitlab {

/// Density factor phi o T^time.
template <class S>
struct TimedFactor {
    CylinderFunction<S> phi;
    std::size_t time = 0;
};

/// Conditioning of the reference measure: word pins (time, w), and/or weight
/// factors phi o T^time. The measure is prod(1_[w] o T^time) * prod(phi o T^time) dm.
template <class S>
struct ConditioningSpec {
    std::vector<std::pair<std::size_t, Word>> pins;
    std::vector<TimedFactor<S>> factors;

    bool empty() const { return pins.empty() && factors.empty(); }
};

struct MonteCarloOptions {
    std::size_t samples = 100000;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::size_t workers = 1;
    std::size_t block_size = 4096;
};

enum class EstimatorPath { pinned, weighted };

inline const char* to_string(EstimatorPath p) { return p == EstimatorPath::pinned ? "pinned" : "weighted"; }

template <class S>
CylinderFunction<double> to_double_function(const CylinderFunction<S>& f) {
    std::vector<double> values;
    values.reserve(f.size());
    for (const auto& v : f.values()) values.push_back(to_double(v));
    return {f.alphabet(), f.depth(), std::move(values)};
}

namespace detail {

/// phi = c * 1_[w] (c != 0) or a constant, after compaction.
template <class S>
struct IndicatorShape {
    S scale{1};
    std::optional<Word> word;
};

template <class S>
std::optional<IndicatorShape<S>> indicator_shape(const CylinderFunction<S>& phi) {
    const auto g = compact(phi);
    if (g.depth() == 0) return IndicatorShape<S>{g[0], std::nullopt};
    std::optional<std::size_t> hit;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g[i] == S(0)) continue;
        if (hit) return std::nullopt;
        hit = i;
    }
    if (!hit) return IndicatorShape<S>{S(0), std::nullopt};
    return IndicatorShape<S>{g[*hit], Word::from_index(*hit, g.depth(), g.alphabet())};
}

struct BlockSums {
    std::vector<WeightedValue> values;
    double sum = 0;     // sum of per-sample integrand
    double sum_sq = 0;  // sum of squared per-sample integrand
};

}  // namespace detail

/// Everything estimated about one conditioned law at one n.
struct ConditionedEstimate {
    EstimatorPath path = EstimatorPath::weighted;
    std::size_t n = 0;
    std::size_t samples = 0;
    double integral = 0;   ///< estimate of int prod(factors) g(S_n f / B_n) dm
    double stderr_ = 0;    ///< its standard error
    double reference = 0;  ///< prod(int factors) * E g(Z)
    double mass = 0;       ///< m_n(X), exact value converted to double
    std::string mass_exact;
    bool mass_positive = true;
    EmpiricalDistribution distribution;  ///< law of S_n f / B_n under m_n / m_n(X)
    std::optional<double> ks;            ///< vs N(0, 1); empty when weights are signed or m_n(X) <= 0

    double gap() const { return integral - reference; }
};

/// Estimates int prod(phi_i o T^{t_i}) * g(S_n f / B_n) dm.
///
/// Word pins and factors of the form c * 1_[w] with disjoint windows are
/// sampled exactly from the product measure conditioned on the pinned
/// symbols; any other factor enters as a per-sample weight.
template <class S>
ConditionedEstimate conditioned_estimate(const ShiftSystem<S>& system, const CylinderFunction<S>& f,
                                         const PowerSchedule& normalization, const ConditioningSpec<S>& conditioning,
                                         const TestFunction& g, std::size_t n, const MonteCarloOptions& mc) {
    system.require_bernoulli("conditioned_estimate");
    if (n == 0) throw Error("conditioned_estimate: n must be at least 1");
    if (mc.samples < 2) throw Error("conditioned_estimate: need at least 2 samples");
    const std::size_t k = system.alphabet();

    // Exact mass m_n(X) of the conditioning density.
    std::vector<ShiftedFactor<S>> all;
    for (const auto& [t, w] : conditioning.pins) all.push_back({CylinderFunction<S>::indicator(k, w), t});
    for (const auto& fac : conditioning.factors) all.push_back({fac.phi, fac.time});
    const S mass = all.empty() ? S(1) : integrate_product(system, all);
    S product_of_integrals(1);
    for (const auto& fac : all) product_of_integrals *= integrate(system, fac.function);

    // Pinned path when every factor is a nonnegative scaled indicator and windows are disjoint.
    std::vector<SymbolConstraint> pins;
    bool pinned = true;
    std::vector<std::pair<std::size_t, std::size_t>> windows;
    auto add_pin = [&](std::size_t t, const Word& w) {
        windows.emplace_back(t, t + w.size());
        append_word_constraint(pins, t, w);
    };
    for (const auto& [t, w] : conditioning.pins) add_pin(t, w);
    for (const auto& fac : conditioning.factors) {
        const auto shape = detail::indicator_shape(fac.phi);
        if (!shape || shape->scale < S(0)) {
            pinned = false;
            break;
        }
        if (shape->word) add_pin(fac.time, *shape->word);
    }
    if (pinned) {
        std::sort(windows.begin(), windows.end());
        for (std::size_t i = 1; i < windows.size(); ++i)
            if (windows[i].first < windows[i - 1].second) pinned = false;
    }
    pinned = pinned && mass > S(0);

    const auto fd = to_double_function(compact(f));
    std::vector<TimedFactor<double>> weights;
    std::size_t length = n + std::max<std::size_t>(fd.depth(), 1) - 1;
    for (const auto& [t, w] : conditioning.pins) length = std::max(length, t + w.size());
    for (const auto& fac : conditioning.factors) {
        const auto phi = to_double_function(compact(fac.phi));
        length = std::max(length, fac.time + phi.depth());
        weights.push_back({phi, fac.time});
    }
    if (!pinned)
        for (const auto& [t, w] : conditioning.pins) weights.push_back({CylinderFunction<double>::indicator(k, w), t});

    const double bn = normalization(n);
    const StreamRng root(mc.seed, mc.stream);
    const BlockPlan blocks{mc.samples, mc.block_size};
    const auto sums = run_blocks(blocks, mc.workers, [&](std::size_t b) {
        StreamRng rng = root.child(b);
        SymbolSampler sampler(system);
        detail::BlockSums out;
        std::vector<Symbol> x(length);
        const std::size_t count = blocks.count(b);
        out.values.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            sampler.fill(rng, x);
            double weight = 1;
            if (pinned) {
                for (const auto& c : pins) x[c.position] = c.symbol;
            } else {
                for (const auto& w : weights) weight *= w.phi.at(x, w.time);
            }
            const double value = birkhoff_sum(fd, std::span<const Symbol>(x), n) / bn;
            const double term = weight * g(value);
            out.values.push_back({value, weight});
            out.sum += term;
            out.sum_sq += term * term;
        }
        return out;
    });

    ConditionedEstimate est;
    est.path = pinned ? EstimatorPath::pinned : EstimatorPath::weighted;
    est.n = n;
    est.samples = mc.samples;
    double sum = 0, sum_sq = 0;
    std::vector<WeightedValue> values;
    values.reserve(mc.samples);
    for (const auto& s : sums) {
        sum += s.sum;
        sum_sq += s.sum_sq;
        values.insert(values.end(), s.values.begin(), s.values.end());
    }
    const double count = static_cast<double>(mc.samples);
    const double mean = sum / count;
    const double var = std::max(0.0, (sum_sq - count * mean * mean) / (count - 1));
    // Pinned samples estimate the conditional mean; the exact mass restores the integral.
    const double factor = pinned ? to_double(mass) : 1.0;
    est.integral = factor * mean;
    est.stderr_ = factor * std::sqrt(var / count);
    est.reference = to_double(product_of_integrals) * g.normal_expectation();
    est.mass = to_double(mass);
    est.mass_exact = ScalarTraits<S>::to_string(mass);
    est.mass_positive = mass > S(0);
    est.distribution = EmpiricalDistribution(std::move(values));
    if (est.mass_positive && est.distribution.has_nonnegative_weights() && est.distribution.total_weight() > 0)
        est.ks = ks_distance(est.distribution, StandardNormal{});
    return est;
}

/// Unconditioned or conditioned samples of S_n f / B_n.
template <class S>
EmpiricalDistribution empirical_birkhoff(const ShiftSystem<S>& system, const CylinderFunction<S>& f,
                                         const PowerSchedule& normalization, std::size_t n,
                                         const ConditioningSpec<S>& conditioning, const MonteCarloOptions& mc) {
    auto est = conditioned_estimate(system, f, normalization, conditioning,
                                    test_function(TestFunctionId::constant_one), n, mc);
    if (!(est.distribution.total_weight() > 0))
        throw Error("empirical_birkhoff: conditioning has zero total weight");
    return std::move(est.distribution);
}

/// int g(S_n f / B_n) phi dm - E g(Z) int phi dm.
template <class S>
ConditionedEstimate eagleson_check(const ShiftSystem<S>& system, const CylinderFunction<S>& f,
                                   const PowerSchedule& normalization, const CylinderFunction<S>& phi,
                                   const TestFunction& g, std::size_t n, const MonteCarloOptions& mc) {
    ConditioningSpec<S> cond;
    cond.factors.push_back({phi, 0});
    return conditioned_estimate(system, f, normalization, cond, g, n, mc);
}

/// int phi1 * g(S_n f / B_n) * phi2 o T^n dm - (int phi1) E g(Z) (int phi2), with m_n(X) exact.
template <class S>
ConditionedEstimate two_sided_conditioned_check(const ShiftSystem<S>& system, const CylinderFunction<S>& f,
                                                const PowerSchedule& normalization, const CylinderFunction<S>& phi1,
                                                const CylinderFunction<S>& phi2, const TestFunction& g,
                                                std::size_t n, const MonteCarloOptions& mc) {
    ConditioningSpec<S> cond;
    cond.factors.push_back({phi1, 0});
    cond.factors.push_back({phi2, n});
    return conditioned_estimate(system, f, normalization, cond, g, n, mc);
}

/// p-point version: densities phi_i at strictly increasing times t_i, windows disjoint.
template <class S>
ConditionedEstimate multi_point_conditioned_check(const ShiftSystem<S>& system, const CylinderFunction<S>& f,
                                                  const PowerSchedule& normalization,
                                                  const std::vector<CylinderFunction<S>>& phis,
                                                  const std::vector<std::size_t>& times, const TestFunction& g,
                                                  std::size_t n, const MonteCarloOptions& mc) {
    if (phis.size() < 2) throw Error("multi_point_conditioned_check: need at least two densities");
    if (phis.size() != times.size()) throw Error("multi_point_conditioned_check: one time per density");
    ConditioningSpec<S> cond;
    for (std::size_t i = 0; i < phis.size(); ++i) {
        if (i > 0 && times[i] <= times[i - 1])
            throw Error("multi_point_conditioned_check: times must be strictly increasing");
        if (i > 0 && times[i - 1] + compact(phis[i - 1]).depth() > times[i])
            throw Error("multi_point_conditioned_check: windows of densities " + std::to_string(i - 1) + " and " +
                        std::to_string(i) + " overlap");
        cond.factors.push_back({phis[i], times[i]});
    }
    return conditioned_estimate(system, f, normalization, cond, g, n, mc);
}

struct InvarianceGap {
    std::size_t n = 0;
    double estimate = 0;  ///< |mean of the paired per-sample difference|
    double stderr_ = 0;
    double constant = 0;  ///< C = ||phi1|| ||phi2|| max(Lip g, 2 ||g||)
    double bound = 0;     ///< 2 C int min(1, |f| / B_n) dm
    std::optional<Rational> bound_exact;
    bool within_bound = false;
};

/// Difference of int phi1 g(S_n f/B_n) phi2 o T^n and int phi1 o T g(S_n f/B_n) phi2 o T^{n+1},
/// estimated from paired samples, against the analytic bound.
template <class S>
InvarianceGap invariance_gap(const ShiftSystem<S>& system, const CylinderFunction<S>& f,
                             const PowerSchedule& normalization, const CylinderFunction<S>& phi1,
                             const CylinderFunction<S>& phi2, const TestFunction& g, std::size_t n,
                             const MonteCarloOptions& mc) {
    system.require_bernoulli("invariance_gap");
    if (n == 0) throw Error("invariance_gap: n must be at least 1");
    const auto fd = to_double_function(compact(f));
    const auto p1 = to_double_function(compact(phi1));
    const auto p2 = to_double_function(compact(phi2));
    const double bn = normalization(n);

    InvarianceGap out;
    out.n = n;
    const double c = p1.sup_norm() * p2.sup_norm() * std::max(g.lipschitz, 2.0 * g.sup_norm);
    out.constant = c;
    const auto masses = cylinder_masses(system, compact(f).depth());
    const auto fc = compact(f);
    if constexpr (is_exact_v<S>) {
        if (const auto b = normalization.exact(n)) {
            Rational acc(0);
            for (std::size_t i = 0; i < fc.size(); ++i)
                acc += masses[i] * std::min(Rational(1), abs_value(fc[i]) / *b);
            out.bound_exact = Rational(2) * compact(phi1).sup_norm() * compact(phi2).sup_norm() *
                              Rational(std::max(g.lipschitz, 2.0 * g.sup_norm)) * acc;
        }
    }
    double acc = 0;
    for (std::size_t i = 0; i < fc.size(); ++i)
        acc += to_double(masses[i]) * std::min(1.0, std::abs(to_double(fc[i])) / bn);
    out.bound = out.bound_exact ? to_double(*out.bound_exact) : 2.0 * c * acc;

    const std::size_t length = std::max({n + std::max<std::size_t>(fd.depth(), 1) - 1, 1 + p1.depth(),
                                         n + 1 + p2.depth()});
    const StreamRng root(mc.seed, mc.stream);
    const BlockPlan blocks{mc.samples, mc.block_size};
    const auto sums = run_blocks(blocks, mc.workers, [&](std::size_t b) {
        StreamRng rng = root.child(b);
        SymbolSampler sampler(system);
        std::vector<Symbol> x(length);
        std::pair<double, double> s{0, 0};
        for (std::size_t i = 0; i < blocks.count(b); ++i) {
            sampler.fill(rng, x);
            const double gv = g(birkhoff_sum(fd, std::span<const Symbol>(x), n) / bn);
            const double d = gv * (p1.at(x, 0) * p2.at(x, n) - p1.at(x, 1) * p2.at(x, n + 1));
            s.first += d;
            s.second += d * d;
        }
        return s;
    });
    double sum = 0, sum_sq = 0;
    for (const auto& [a, b] : sums) {
        sum += a;
        sum_sq += b;
    }
    const double count = static_cast<double>(mc.samples);
    const double mean = sum / count;
    out.estimate = std::abs(mean);
    out.stderr_ = std::sqrt(std::max(0.0, (sum_sq - count * mean * mean) / (count - 1)) / count);
    out.within_bound = out.estimate <= out.bound + 3 * out.stderr_;
    return out;
}

}  // namespace orbitlab
