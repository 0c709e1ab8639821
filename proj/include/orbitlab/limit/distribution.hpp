#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <variant>
#include <vector>

#include "orbitlab/cylinder_function.hpp"
#include "orbitlab/sampling.hpp"
#include "orbitlab/shift_system.hpp"

namespace orbitlab {

struct WeightedValue {
    double value;
    double weight;
};

/// Weighted sample set; CDF queries use the sorted values.
class EmpiricalDistribution {
public:
    EmpiricalDistribution() = default;
    explicit EmpiricalDistribution(std::vector<WeightedValue> samples) : samples_(std::move(samples)) {
        std::sort(samples_.begin(), samples_.end(), [](const auto& a, const auto& b) { return a.value < b.value; });
        for (const auto& s : samples_) {
            if (s.weight < 0) nonnegative_ = false;
            total_ += s.weight;
        }
    }

    const std::vector<WeightedValue>& samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    double total_weight() const noexcept { return total_; }
    bool has_nonnegative_weights() const noexcept { return nonnegative_; }

    /// Weighted mean of h(value).
    template <class Fn>
    double expectation(Fn h) const {
        double acc = 0;
        for (const auto& s : samples_) acc += s.weight * h(s.value);
        return acc / total_;
    }

    /// Weighted CDF at x (right-continuous).
    double cdf(double x) const {
        double acc = 0;
        for (const auto& s : samples_) {
            if (s.value > x) break;
            acc += s.weight;
        }
        return acc / total_;
    }

private:
    std::vector<WeightedValue> samples_;
    double total_ = 0;
    bool nonnegative_ = true;
};

/// Finite distribution with exact or floating probabilities, sorted by value.
template <class S>
struct DiscreteDistribution {
    std::vector<std::pair<S, S>> atoms;  ///< (value, probability)

    S total() const {
        S t(0);
        for (const auto& [v, p] : atoms) t += p;
        return t;
    }
    S mean() const {
        S m(0);
        for (const auto& [v, p] : atoms) m += v * p;
        return m;
    }
    /// Law of value * factor, in double.
    DiscreteDistribution<double> scaled(double factor) const {
        DiscreteDistribution<double> out;
        for (const auto& [v, p] : atoms) out.atoms.emplace_back(to_double(v) * factor, to_double(p));
        if (factor < 0) std::reverse(out.atoms.begin(), out.atoms.end());
        return out;
    }
};

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

struct StandardNormal {
    double cdf(double x) const { return standard_normal_cdf(x); }
};

/// Reference law for distributional comparisons: N(0, 1) or a finite distribution.
using ReferenceDistribution = std::variant<StandardNormal, DiscreteDistribution<double>>;

inline EmpiricalDistribution as_empirical(const DiscreteDistribution<double>& d) {
    std::vector<WeightedValue> samples;
    for (const auto& [v, p] : d.atoms) samples.push_back({v, p});
    return EmpiricalDistribution(std::move(samples));
}

/// Sup over sample points of |weighted empirical CDF - reference CDF|.
inline double ks_distance(const EmpiricalDistribution& emp, const ReferenceDistribution& ref) {
    if (!(emp.total_weight() > 0)) throw Error("ks_distance: empirical distribution has zero total weight");
    if (!emp.has_nonnegative_weights()) throw Error("ks_distance: weights must be nonnegative");
    const auto& samples = emp.samples();
    const double total = emp.total_weight();
    double worst = 0;
    if (std::holds_alternative<StandardNormal>(ref)) {
        double before = 0;
        std::size_t i = 0;
        while (i < samples.size()) {
            const double x = samples[i].value;
            double group = 0;
            while (i < samples.size() && samples[i].value == x) group += samples[i++].weight;
            const double after = before + group;
            const double f = standard_normal_cdf(x);
            worst = std::max({worst, std::abs(before / total - f), std::abs(after / total - f)});
            before = after;
        }
        return worst;
    }
    // Two step functions: the sup is attained at a jump of either one.
    const auto& atoms = std::get<DiscreteDistribution<double>>(ref).atoms;
    double ref_total = 0;
    for (const auto& [v, p] : atoms) ref_total += p;
    std::size_t i = 0, j = 0;
    double fe = 0, fr = 0;
    while (i < samples.size() || j < atoms.size()) {
        const double x = std::min(i < samples.size() ? samples[i].value : INFINITY,
                                  j < atoms.size() ? atoms[j].first : INFINITY);
        while (i < samples.size() && samples[i].value == x) fe += samples[i++].weight;
        while (j < atoms.size() && atoms[j].first == x) fr += atoms[j++].second;
        worst = std::max(worst, std::abs(fe / total - fr / ref_total));
    }
    return worst;
}

namespace detail {

/// Law of the sum of `count` i.i.d. symbols valued by `values`, with
/// probabilities `weights`: enumerates symbol count vectors.
template <class S>
std::map<S, S> iid_sum_law(const std::vector<S>& values, const std::vector<S>& weights, std::size_t count) {
    const std::size_t k = values.size();
    std::map<S, S> law;
    std::vector<std::size_t> counts(k, 0);
    // log-space multinomial in floating mode avoids underflow of p^count.
    std::vector<double> log_factorial;
    if constexpr (!is_exact_v<S>) {
        log_factorial.resize(count + 1, 0.0);
        for (std::size_t i = 1; i <= count; ++i) log_factorial[i] = std::lgamma(static_cast<double>(i) + 1.0);
    }
    std::function<void(std::size_t, std::size_t, S, S)> recurse = [&](std::size_t symbol, std::size_t remaining,
                                                                      S value, S prob) {
        if (symbol + 1 == k) {
            counts[symbol] = remaining;
            const S v = value + values[symbol] * S(static_cast<long>(remaining));
            S p;
            if constexpr (is_exact_v<S>) {
                p = prob * power(weights[symbol], remaining);
            } else {
                double logp = log_factorial[count];
                for (std::size_t a = 0; a < k; ++a)
                    logp += -log_factorial[counts[a]] + static_cast<double>(counts[a]) * std::log(weights[a]);
                p = std::exp(logp);
            }
            law[v] += p;
            return;
        }
        // Exact mode carries C(remaining, c) * w^c incrementally.
        S coef(1);
        for (std::size_t c = 0; c <= remaining; ++c) {
            counts[symbol] = c;
            recurse(symbol + 1, remaining - c, value + values[symbol] * S(static_cast<long>(c)), prob * coef);
            if constexpr (is_exact_v<S>) {
                coef = coef * S(static_cast<long>(remaining - c)) / S(static_cast<long>(c + 1)) * weights[symbol];
            }
        }
    };
    recurse(0, count, S(0), S(1));
    return law;
}

}  // namespace detail

/// Exact law of S_n f under the product measure conditioned on pinned symbols.
///
/// Depth-1 f: counting over the free coordinates in [0, n) (pins outside the
/// window do not matter). Deeper f: full enumeration of the free coordinates
/// in [0, n + depth - 1), which must number at most 24.
template <class S>
DiscreteDistribution<S> exact_conditioned_distribution(const ShiftSystem<S>& system, const CylinderFunction<S>& f,
                                                       std::size_t n, const std::vector<SymbolConstraint>& constraints) {
    system.require_bernoulli("exact_conditioned_distribution");
    const std::size_t k = system.alphabet();
    const auto g = compact(f);
    const std::size_t window = n == 0 ? 0 : n + std::max<std::size_t>(g.depth(), 1) - 1;
    std::size_t horizon = window;
    for (const auto& c : constraints) horizon = std::max(horizon, c.position + 1);
    const auto pins = normalize_constraints(constraints, std::max<std::size_t>(horizon, 1), k);

    DiscreteDistribution<S> out;
    if (n == 0) {
        out.atoms.emplace_back(S(0), S(1));
        return out;
    }
    if (g.depth() <= 1) {
        const auto lifted = lift_depth(g, 1);
        std::vector<S> values(lifted.values());
        S fixed(0);
        std::size_t pinned = 0;
        for (const auto& c : pins)
            if (c.position < n) {
                fixed += values[c.symbol];
                ++pinned;
            }
        for (const auto& [v, p] : detail::iid_sum_law(values, system.weights(), n - pinned))
            out.atoms.emplace_back(v + fixed, p);
        return out;
    }

    std::vector<std::size_t> free_positions;
    std::vector<Symbol> point(window, 0);
    {
        std::size_t pi = 0;
        for (std::size_t pos = 0; pos < window; ++pos) {
            while (pi < pins.size() && pins[pi].position < pos) ++pi;
            if (pi < pins.size() && pins[pi].position == pos) point[pos] = pins[pi].symbol;
            else free_positions.push_back(pos);
        }
    }
    if (free_positions.size() > 24)
        throw DepthCapExceeded("exact_conditioned_distribution", free_positions.size(), 24);
    std::map<S, S> law;
    const std::size_t count = int_pow(k, free_positions.size());
    for (std::size_t idx = 0; idx < count; ++idx) {
        std::size_t rest = idx;
        S prob(1);
        for (std::size_t i = free_positions.size(); i-- > 0;) {
            const auto a = static_cast<Symbol>(rest % k);
            rest /= k;
            point[free_positions[i]] = a;
            prob *= system.weight(a);
        }
        law[birkhoff_sum(g, std::span<const Symbol>(point), n)] += prob;
    }
    for (const auto& [v, p] : law) out.atoms.emplace_back(v, p);
    return out;
}

}  // namespace orbitlab
