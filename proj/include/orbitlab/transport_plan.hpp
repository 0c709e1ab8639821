#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "orbitlab/cylinder_function.hpp"
#include "orbitlab/sampling.hpp"
#include "orbitlab/shift_system.hpp"

namespace orbitlab {

/// Image of mass * mu under z -> (w1 z, w2 z). Both points reach z, so
/// T^{|w1|} x1 = T^{|w2|} x2 holds for every pair carried by the atom.
template <class S>
struct TransportAtom {
    Word w1;
    Word w2;
    S mass;

    std::size_t meet_left() const noexcept { return w1.size(); }
    std::size_t meet_right() const noexcept { return w2.size(); }
    friend bool operator==(const TransportAtom&, const TransportAtom&) = default;
};

/// Finitely supported coupling along orbits on a Bernoulli shift.
///
/// Invariant: left_marginal + left residual = declared_left (likewise right),
/// where the residuals carry `defect` mass in total; `tv_error_budget` records
/// mass removed by pruning, which is also counted in `defect`.
template <class S>
struct TransportPlan {
    ShiftSystem<S> system;
    std::vector<TransportAtom<S>> atoms;
    CylinderFunction<S> declared_left;
    CylinderFunction<S> declared_right;
    S defect{0};
    S tv_error_budget{0};

    S mass() const {
        S total(0);
        for (const auto& a : atoms) total += a.mass;
        return total;
    }
    std::size_t max_word_length() const {
        std::size_t m = 0;
        for (const auto& a : atoms) m = std::max({m, a.w1.size(), a.w2.size()});
        return m;
    }
};

enum class Side { left, right };

/// f == g as functions (compared at a common depth), exactly or within tolerance.
template <class S>
bool same_function(const CylinderFunction<S>& f, const CylinderFunction<S>& g,
                   const S& tol = ScalarTraits<S>::tolerance()) {
    const std::size_t depth = std::max(f.depth(), g.depth());
    const auto a = lift_depth(f, depth);
    const auto b = lift_depth(g, depth);
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!nearly_equal(a[i], b[i], tol)) return false;
    return true;
}

namespace detail {

template <class S>
CylinderFunction<S> marginal(const TransportPlan<S>& plan, Side side) {
    const std::size_t k = plan.system.alphabet();
    std::size_t depth = 0;
    for (const auto& a : plan.atoms) depth = std::max(depth, (side == Side::left ? a.w1 : a.w2).size());
    plan.system.check_depth(depth, "marginal");
    std::vector<S> values(int_pow(k, depth), S(0));
    for (const auto& a : plan.atoms) {
        const Word& w = side == Side::left ? a.w1 : a.w2;
        const S density = a.mass / cylinder_mass(plan.system, w);
        const std::size_t span = int_pow(k, depth - w.size());
        const std::size_t first = w.index(k) * span;
        for (std::size_t i = 0; i < span; ++i) values[first + i] += density;
    }
    return {k, depth, std::move(values)};
}

}  // namespace detail

/// Density of the first marginal, at depth = longest left word.
template <class S>
CylinderFunction<S> left_marginal(const TransportPlan<S>& plan) {
    return detail::marginal(plan, Side::left);
}

template <class S>
CylinderFunction<S> right_marginal(const TransportPlan<S>& plan) {
    return detail::marginal(plan, Side::right);
}

/// Plan with no atoms whose declared marginals are both f (mass entirely defect).
template <class S>
TransportPlan<S> empty_plan(const ShiftSystem<S>& system, const CylinderFunction<S>& left,
                            const CylinderFunction<S>& right) {
    return {system, {}, left, right, S(0), S(0)};
}

/// Sorts atoms lexicographically by (w1, w2) and merges duplicates. Zero-mass
/// atoms are removed.
template <class S>
void canonicalize_atoms(std::vector<TransportAtom<S>>& atoms) {
    std::sort(atoms.begin(), atoms.end(), [](const auto& a, const auto& b) {
        if (a.w1 != b.w1) return a.w1 < b.w1;
        return a.w2 < b.w2;
    });
    std::vector<TransportAtom<S>> out;
    out.reserve(atoms.size());
    for (auto& a : atoms) {
        if (!out.empty() && out.back().w1 == a.w1 && out.back().w2 == a.w2) {
            out.back().mass += a.mass;
        } else {
            out.push_back(std::move(a));
        }
    }
    std::erase_if(out, [](const auto& a) { return !(a.mass > S(0)); });
    atoms = std::move(out);
}

/// Merges identical (w1, w2) atoms, then drops atoms lighter than `mass_floor`;
/// dropped mass is added to both `defect` and `tv_error_budget`.
template <class S>
TransportPlan<S> merge_and_prune(TransportPlan<S> plan, const S& mass_floor) {
    if (mass_floor < S(0)) throw Error("merge_and_prune: mass floor must be nonnegative");
    canonicalize_atoms(plan.atoms);
    S dropped(0);
    std::erase_if(plan.atoms, [&](const auto& a) {
        if (a.mass < mass_floor) {
            dropped += a.mass;
            return true;
        }
        return false;
    });
    plan.defect += dropped;
    plan.tv_error_budget += dropped;
    return plan;
}

/// Inverse of refinement: replaces complete families {(u1 a, u2 a, M p_a)}_a by
/// (u1, u2, M). Semantics are unchanged; atom count and word length shrink.
template <class S>
TransportPlan<S> coarsen(TransportPlan<S> plan) {
    if (!plan.system.is_bernoulli()) return plan;
    const std::size_t k = plan.system.alphabet();
    bool changed = true;
    while (changed) {
        changed = false;
        canonicalize_atoms(plan.atoms);
        std::map<std::pair<Word, Word>, std::vector<std::size_t>> families;
        for (std::size_t i = 0; i < plan.atoms.size(); ++i) {
            const auto& a = plan.atoms[i];
            if (a.w1.empty() || a.w2.empty()) continue;
            if (a.w1[a.w1.size() - 1] != a.w2[a.w2.size() - 1]) continue;
            families[{a.w1.prefix(a.w1.size() - 1), a.w2.prefix(a.w2.size() - 1)}].push_back(i);
        }
        std::vector<bool> removed(plan.atoms.size(), false);
        std::vector<TransportAtom<S>> added;
        for (auto& [key, members] : families) {
            if (members.size() != k) continue;
            S total(0);
            for (std::size_t i : members) total += plan.atoms[i].mass;
            bool proportional = true;
            for (std::size_t i : members) {
                const auto& a = plan.atoms[i];
                const S expected = total * plan.system.weight(a.w1[a.w1.size() - 1]);
                if (!nearly_equal(a.mass, expected)) { proportional = false; break; }
            }
            if (!proportional) continue;
            for (std::size_t i : members) removed[i] = true;
            added.push_back({key.first, key.second, total});
            changed = true;
        }
        if (!changed) break;
        std::vector<TransportAtom<S>> next;
        for (std::size_t i = 0; i < plan.atoms.size(); ++i)
            if (!removed[i]) next.push_back(std::move(plan.atoms[i]));
        next.insert(next.end(), added.begin(), added.end());
        plan.atoms = std::move(next);
    }
    return plan;
}

/// Splits atoms whose word on `side` is shorter than `depth`, extending both
/// words by the same suffix u with mass * mu[u]. Both marginals are unchanged.
template <class S>
TransportPlan<S> refine_to_depth(const TransportPlan<S>& plan, Side side, std::size_t depth) {
    plan.system.require_bernoulli("refine_to_depth");
    const std::size_t k = plan.system.alphabet();
    TransportPlan<S> out = plan;
    out.atoms.clear();
    for (const auto& a : plan.atoms) {
        const std::size_t len = (side == Side::left ? a.w1 : a.w2).size();
        if (len >= depth) {
            out.atoms.push_back(a);
            continue;
        }
        plan.system.check_depth(std::max(a.w1.size(), a.w2.size()) + depth - len, "refine_to_depth");
        const std::size_t extra = depth - len;
        const std::size_t count = int_pow(k, extra);
        for (std::size_t u = 0; u < count; ++u) {
            const Word suffix = Word::from_index(u, extra, k);
            out.atoms.push_back({a.w1.concat(suffix), a.w2.concat(suffix), a.mass * cylinder_mass(plan.system, suffix)});
        }
    }
    return out;
}

/// Multiplies the plan by numerator(y)/denominator(y) 1_{denominator(y) > 0},
/// a function of the right point y. Requires 0 <= numerator <= denominator and
/// that the plan's right marginal has density `denominator`; the new right
/// marginal is `numerator` and the new left marginal is dominated by the old.
template <class S>
TransportPlan<S> tilt_right(const TransportPlan<S>& plan, const CylinderFunction<S>& numerator,
                            const CylinderFunction<S>& denominator) {
    const std::size_t depth = std::max(numerator.depth(), denominator.depth());
    const auto num = lift_depth(numerator, depth);
    const auto den = lift_depth(denominator, depth);
    for (std::size_t i = 0; i < num.size(); ++i) {
        if (num[i] < S(0)) throw Error("tilt_right: numerator must be nonnegative");
        if (num[i] > den[i] && !nearly_equal(num[i], den[i]))
            throw Error("tilt_right: ratio numerator/denominator exceeds 1");
    }
    if (!same_function(right_marginal(plan), den))
        throw Error("tilt_right: right marginal of the plan does not match the denominator");

    // Only the ratio matters, so refine to the depth of its compact form.
    std::vector<S> ratio_values(num.size(), S(0));
    for (std::size_t i = 0; i < num.size(); ++i)
        if (den[i] > S(0)) ratio_values[i] = std::min(S(1), S(num[i] / den[i]));
    const auto ratio = compact(CylinderFunction<S>(num.alphabet(), depth, std::move(ratio_values)));

    TransportPlan<S> out = refine_to_depth(plan, Side::right, ratio.depth());
    const std::size_t k = plan.system.alphabet();
    for (auto& a : out.atoms) a.mass *= ratio[a.w2.index(k, ratio.depth())];
    std::erase_if(out.atoms, [](const auto& a) { return !(a.mass > S(0)); });
    out.declared_left = left_marginal(out);
    out.declared_right = num;
    out.defect = S(0);
    return out;
}

template <class S>
TransportPlan<S> transpose(TransportPlan<S> plan) {
    for (auto& a : plan.atoms) std::swap(a.w1, a.w2);
    std::swap(plan.declared_left, plan.declared_right);
    return plan;
}

/// How atoms meeting in the same middle cylinder are paired by `compose`.
/// Any pairing with the right row and column sums is a valid gluing, because
/// every atom in the cylinder carries the same conditional tail law.
enum class Gluing {
    independent,  ///< alpha * beta / nu: every pair, product weights
    monotone,     ///< north-west corner rule: at most |A| + |B| - 1 pairs per cylinder
};

/// Gluing of a (alpha <-> nu) and b (nu <-> beta) through the common middle
/// marginal nu. Middles are refined to a common depth; within each middle
/// cylinder v, atom pairs are glued with mass alpha * beta / nu-mass(v)
/// (or by the monotone rule).
template <class S>
TransportPlan<S> compose(const TransportPlan<S>& plan_a, const TransportPlan<S>& plan_b,
                         Gluing gluing = Gluing::independent) {
    plan_a.system.require_bernoulli("compose");
    if (!same_function(right_marginal(plan_a), left_marginal(plan_b)))
        throw Error("compose: right marginal of the first plan differs from left marginal of the second");

    std::size_t depth = 0;
    for (const auto& a : plan_a.atoms) depth = std::max(depth, a.w2.size());
    for (const auto& b : plan_b.atoms) depth = std::max(depth, b.w1.size());
    const auto ra = refine_to_depth(plan_a, Side::right, depth);
    const auto rb = refine_to_depth(plan_b, Side::left, depth);

    std::map<Word, std::vector<const TransportAtom<S>*>> left_groups;
    std::map<Word, std::vector<const TransportAtom<S>*>> right_groups;
    for (const auto& a : ra.atoms) left_groups[a.w2].push_back(&a);
    for (const auto& b : rb.atoms) right_groups[b.w1].push_back(&b);

    TransportPlan<S> out{plan_a.system, {}, plan_a.declared_left, plan_b.declared_right,
                         plan_a.defect, S(plan_a.tv_error_budget + plan_b.tv_error_budget)};
    for (const auto& [v, group_a] : left_groups) {
        S nu_a(0);
        for (const auto* a : group_a) nu_a += a->mass;
        const auto it = right_groups.find(v);
        if (it == right_groups.end()) {
            if (nu_a > S(0) && !nearly_equal(nu_a, S(0)))
                throw Error("compose: middle cylinder " + v.str() + " carries mass on one side only");
            continue;
        }
        if (!(nu_a > S(0))) throw Error("compose: middle cylinder " + v.str() + " has zero mass");
        if (gluing == Gluing::independent) {
            for (const auto* a : group_a)
                for (const auto* b : it->second) out.atoms.push_back({a->w1, b->w2, a->mass * b->mass / nu_a});
            continue;
        }
        S nu_b(0);
        for (const auto* b : it->second) nu_b += b->mass;
        const S rescale = nu_a / nu_b;  // exactly 1 in rational mode
        std::size_t i = 0, j = 0;
        S left = group_a[0]->mass;
        S right = it->second[0]->mass * rescale;
        while (i < group_a.size() && j < it->second.size()) {
            const S moved = std::min(left, right);
            if (moved > S(0)) out.atoms.push_back({group_a[i]->w1, it->second[j]->w2, moved});
            left -= moved;
            right -= moved;
            if (!(left > S(0)) && ++i < group_a.size()) left = group_a[i]->mass;
            if (!(right > S(0)) && ++j < it->second.size()) right = it->second[j]->mass * rescale;
            if constexpr (!is_exact_v<S>) {
                if (i + 1 == group_a.size() && j + 1 == it->second.size()) {
                    out.atoms.push_back({group_a[i]->w1, it->second[j]->w2, std::max(left, right)});
                    break;
                }
            }
        }
    }
    for (const auto& [v, group_b] : right_groups) {
        if (left_groups.count(v)) continue;
        S nu_b(0);
        for (const auto* b : group_b) nu_b += b->mass;
        if (nu_b > S(0) && !nearly_equal(nu_b, S(0)))
            throw Error("compose: middle cylinder " + v.str() + " carries mass on one side only");
    }
    canonicalize_atoms(out.atoms);
    return out;
}

/// Weighted sum of plans sharing the same left marginal.
template <class S>
TransportPlan<S> mixture(const std::vector<TransportPlan<S>>& plans, const std::vector<S>& weights) {
    if (plans.empty() || plans.size() != weights.size()) throw Error("mixture: plans and weights must match");
    S total_weight(0);
    for (const S& w : weights) {
        if (w < S(0)) throw Error("mixture: weights must be nonnegative");
        total_weight += w;
    }
    for (const auto& p : plans)
        if (!same_function(p.declared_left, plans.front().declared_left))
            throw Error("mixture: plans do not share the same left marginal");

    TransportPlan<S> out{plans.front().system, {}, scale(plans.front().declared_left, total_weight),
                         CylinderFunction<S>::zero(plans.front().system.alphabet()), S(0), S(0)};
    for (std::size_t i = 0; i < plans.size(); ++i) {
        for (const auto& a : plans[i].atoms) out.atoms.push_back({a.w1, a.w2, a.mass * weights[i]});
        out.declared_right = add(out.declared_right, scale(plans[i].declared_right, weights[i]));
        out.defect += plans[i].defect * weights[i];
        out.tv_error_budget += plans[i].tv_error_budget * weights[i];
    }
    canonicalize_atoms(out.atoms);
    return out;
}

/// One draw from a plan: the pair (x1, x2) truncated to a common length, or a
/// defect outcome when the draw lands on uncoupled mass.
struct CoupledPair {
    PrefixSample x1;
    PrefixSample x2;
    std::size_t n1 = 0;
    std::size_t n2 = 0;
};

/// Samples pairs from a plan with probability proportional to atom mass;
/// uncoupled mass (`defect`) yields std::nullopt.
class PairSampler {
public:
    template <class S>
    explicit PairSampler(const TransportPlan<S>& plan) : symbols_(plan.system) {
        double acc = 0;
        for (const auto& a : plan.atoms) {
            acc += to_double(a.mass);
            cumulative_.push_back(acc);
            words_.emplace_back(a.w1, a.w2);
        }
        total_ = acc + to_double(plan.defect);
        max_length_ = plan.max_word_length();
    }

    std::size_t max_word_length() const noexcept { return max_length_; }

    std::optional<CoupledPair> sample(StreamRng& rng, std::size_t length) const {
        if (length < max_length_ || length == 0)
            throw Error("sample_pair: length " + std::to_string(length) + " shorter than longest atom word");
        if (!(total_ > 0)) throw Error("sample_pair: plan has no mass");
        const double u = rng.uniform() * total_;
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        if (it == cumulative_.end()) {
            rng.uniform();  // keep draw count independent of the outcome
            return std::nullopt;
        }
        const auto& [w1, w2] = words_[static_cast<std::size_t>(it - cumulative_.begin())];
        std::vector<Symbol> tail(length - std::min(w1.size(), w2.size()));
        symbols_.fill(rng, tail);
        CoupledPair pair;
        pair.n1 = w1.size();
        pair.n2 = w2.size();
        auto build = [&](const Word& w) {
            PrefixSample x{{w.begin(), w.end()}, rng.master_seed(), rng.stream_index()};
            x.symbols.insert(x.symbols.end(), tail.begin(), tail.begin() + static_cast<std::ptrdiff_t>(length - w.size()));
            return x;
        };
        pair.x1 = build(w1);
        pair.x2 = build(w2);
        return pair;
    }

private:
    SymbolSampler symbols_;
    std::vector<double> cumulative_;
    std::vector<std::pair<Word, Word>> words_;
    double total_ = 0;
    std::size_t max_length_ = 0;
};

template <class S>
std::optional<CoupledPair> sample_pair(const TransportPlan<S>& plan, StreamRng& rng, std::size_t length) {
    return PairSampler(plan).sample(rng, length);
}

}  // namespace orbitlab
