#pragma once

#include <optional>
#include <string>
#include <vector>

#include "orbitlab/cylinder_function.hpp"
#include "orbitlab/transport_plan.hpp"

namespace orbitlab {

namespace detail {
template <class S>
void require_density(const CylinderFunction<S>& f, const std::string& operation) {
    if (!f.is_nonnegative()) throw Error(operation + ": density must be nonnegative");
}
}  // namespace detail

/// (Id, T^j)_*(f dmu): couples f dmu with (T^^j f) dmu. j = 0 is the identity coupling.
template <class S>
TransportPlan<S> iterate_graph_coupling(const ShiftSystem<S>& system, const CylinderFunction<S>& f, std::size_t j) {
    system.require_bernoulli("iterate_graph_coupling");
    detail::require_density(f, "iterate_graph_coupling");
    const std::size_t depth = std::max(f.depth(), j);
    system.check_depth(depth, "iterate_graph_coupling");
    const auto lifted = lift_depth(f, depth);
    const auto masses = cylinder_masses(system, depth);
    TransportPlan<S> plan{system, {}, f, transfer_power(system, f, j), S(0), S(0)};
    for (std::size_t i = 0; i < lifted.size(); ++i) {
        if (!(lifted[i] > S(0))) continue;
        const Word w = Word::from_index(i, depth, system.alphabet());
        plan.atoms.push_back({w, w.drop(j), lifted[i] * masses[i]});
    }
    return plan;
}

/// (Id, T)_*(f dmu): couples f dmu with (T^ f) dmu.
template <class S>
TransportPlan<S> graph_coupling(const ShiftSystem<S>& system, const CylinderFunction<S>& f) {
    detail::require_density(f, "graph_coupling");
    return iterate_graph_coupling(system, f.depth() == 0 ? lift_depth(f, 1) : f, 1);
}

template <class S>
TransportPlan<S> identity_coupling(const ShiftSystem<S>& system, const CylinderFunction<S>& f) {
    return iterate_graph_coupling(system, f, 0);
}

/// Couples f dmu with its Cesaro average (1/n) sum_{j<n} T^^j f dmu.
template <class S>
TransportPlan<S> cesaro_coupling(const ShiftSystem<S>& system, const CylinderFunction<S>& f, std::size_t n) {
    std::vector<TransportPlan<S>> plans;
    for (std::size_t j = 0; j < n; ++j) plans.push_back(iterate_graph_coupling(system, f, j));
    return mixture(plans, std::vector<S>(n, S(1) / S(static_cast<long>(n))));
}

template <class S>
struct HalfCoupling {
    TransportPlan<S> plan;  ///< declared marginals are the inputs; defect = residual mass
    CylinderFunction<S> residual1;
    CylinderFunction<S> residual2;
    std::size_t n_used = 0;
    S coupled_mass{0};
};

/// Smallest n >= 1 with integral of min(F_{1,n}, F_{2,n}) >= half the input mass,
/// where F_{i,n} are Cesaro averages of the inputs.
template <class S>
std::size_t half_coupling_time(const ShiftSystem<S>& system, const CylinderFunction<S>& f1,
                               const CylinderFunction<S>& f2) {
    const S target = integrate(system, f1) / S(2);
    // For a product measure the averages are within (depth/n) of a constant in
    // L1, so n = 2 * depth + 1 always suffices.
    const std::size_t limit = 2 * std::max(f1.depth(), f2.depth()) + 2;
    for (std::size_t n = 1; n <= limit; ++n) {
        const auto g = pointwise_min(cesaro_average(system, f1, n), cesaro_average(system, f2, n));
        if (!(integrate(system, g) < target)) return n;
    }
    throw Error("half_coupling: no admissible averaging length found");
}

/// Couples parts p1 <= f1 dmu and p2 <= f2 dmu of at least half the mass.
template <class S>
HalfCoupling<S> half_coupling(const ShiftSystem<S>& system, const CylinderFunction<S>& f1,
                              const CylinderFunction<S>& f2, Gluing gluing = Gluing::independent) {
    system.require_bernoulli("half_coupling");
    detail::require_density(f1, "half_coupling");
    detail::require_density(f2, "half_coupling");
    const S mass1 = integrate(system, f1);
    const S mass2 = integrate(system, f2);
    if (!(mass1 > S(0)) || !(mass2 > S(0))) throw Error("half_coupling: inputs must have positive mass");
    if (!nearly_equal(mass1, mass2)) throw Error("half_coupling: inputs must have equal mass");

    const std::size_t n = half_coupling_time(system, f1, f2);
    const auto avg1 = cesaro_average(system, f1, n);
    const auto avg2 = cesaro_average(system, f2, n);
    const auto common = pointwise_min(avg1, avg2);

    const auto part1 = tilt_right(cesaro_coupling(system, f1, n), common, avg1);
    const auto part2 = tilt_right(cesaro_coupling(system, f2, n), common, avg2);
    TransportPlan<S> plan = coarsen(compose(part1, transpose(part2), gluing));

    HalfCoupling<S> out{std::move(plan), {}, {}, n, S(0)};
    out.coupled_mass = out.plan.mass();
    out.residual1 = compact(subtract(f1, left_marginal(out.plan)));
    out.residual2 = compact(subtract(f2, right_marginal(out.plan)));
    if constexpr (!is_exact_v<S>) {
        // Clamp round-off below zero.
        auto clamp = [](const CylinderFunction<S>& r) { return map_values(r, [](S v) { return std::max(v, S(0)); }); };
        out.residual1 = clamp(out.residual1);
        out.residual2 = clamp(out.residual2);
    }
    out.plan.declared_left = f1;
    out.plan.declared_right = f2;
    out.plan.defect = integrate(system, out.residual1);
    return out;
}

/// Atoms the two tilted Cesaro couplings of a half-coupling step materialize
/// before gluing; computed from the inputs without building anything.
template <class S>
std::size_t predicted_half_coupling_atoms(const ShiftSystem<S>& system, const CylinderFunction<S>& f1,
                                          const CylinderFunction<S>& f2) {
    const std::size_t n = half_coupling_time(system, f1, f2);
    const std::size_t k = system.alphabet();
    std::size_t total = 0;
    for (const auto* f : {&f1, &f2}) {
        std::size_t nonzero = 0;
        for (const S& v : f->values()) nonzero += v > S(0) ? 1 : 0;
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t depth = std::max(f->depth(), j);
            const std::size_t right = depth - j;
            const std::size_t refine = f->depth() > right ? f->depth() - right : 0;
            total += nonzero * int_pow(k, depth - f->depth()) * int_pow(k, refine);
        }
    }
    return total;
}

template <class S>
struct CouplingRound {
    std::size_t n_used;
    S coupled_mass;
    S defect_after;
    std::size_t atom_count;
    std::size_t max_word_length;
};

template <class S>
struct FullCouplingOptions {
    S epsilon{0};
    std::size_t max_rounds = 32;
    /// Atoms lighter than this are pruned after each round (0 disables pruning).
    S mass_floor{0};
    Gluing gluing = Gluing::independent;
    /// Skip a round predicted to materialize more atoms than this.
    std::optional<std::size_t> max_round_atoms;
};

enum class StopReason { epsilon_reached, max_rounds, depth_cap, atom_budget, no_progress };

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::epsilon_reached: return "epsilon_reached";
        case StopReason::max_rounds: return "max_rounds";
        case StopReason::depth_cap: return "depth_cap";
        case StopReason::atom_budget: return "atom_budget";
        case StopReason::no_progress: return "no_progress";
    }
    return "unknown";
}

template <class S>
struct FullCoupling {
    TransportPlan<S> plan;
    CylinderFunction<S> residual1;
    CylinderFunction<S> residual2;
    std::vector<CouplingRound<S>> rounds;
    StopReason stop_reason = StopReason::epsilon_reached;
    /// Message of the depth-cap failure when stop_reason == depth_cap.
    std::optional<std::string> depth_cap_failure;
};

/// Repeated half couplings on the uncoupled remainders. Stops when the defect
/// is <= epsilon, after max_rounds, or when the next round would exceed the
/// depth cap or atom budget; the remainder stays as explicit defect.
template <class S>
FullCoupling<S> full_coupling(const ShiftSystem<S>& system, const CylinderFunction<S>& f1,
                              const CylinderFunction<S>& f2, const FullCouplingOptions<S>& options) {
    system.require_bernoulli("full_coupling");
    detail::require_density(f1, "full_coupling");
    detail::require_density(f2, "full_coupling");
    if (options.epsilon < S(0)) throw Error("full_coupling: epsilon must be nonnegative");
    if (!nearly_equal(integrate(system, f1), S(1)) || !nearly_equal(integrate(system, f2), S(1)))
        throw Error("full_coupling: inputs must be probability densities");

    FullCoupling<S> out{{system, {}, f1, f2, S(1), S(0)}, compact(f1), compact(f2), {}, StopReason::max_rounds,
                        std::nullopt};
    while (true) {
        if (!(out.plan.defect > options.epsilon)) {
            out.stop_reason = StopReason::epsilon_reached;
            break;
        }
        if (out.rounds.size() >= options.max_rounds) {
            out.stop_reason = StopReason::max_rounds;
            break;
        }
        std::optional<HalfCoupling<S>> step;
        try {
            if (options.max_round_atoms &&
                predicted_half_coupling_atoms(system, out.residual1, out.residual2) > *options.max_round_atoms) {
                out.stop_reason = StopReason::atom_budget;
                break;
            }
            step.emplace(half_coupling(system, out.residual1, out.residual2, options.gluing));
        } catch (const DepthCapExceeded& e) {
            out.stop_reason = StopReason::depth_cap;
            out.depth_cap_failure = e.what();
            break;
        }
        auto& half = *step;
        for (auto& a : half.plan.atoms) out.plan.atoms.push_back(std::move(a));
        out.plan = merge_and_prune(std::move(out.plan), options.mass_floor);
        out.residual1 = std::move(half.residual1);
        out.residual2 = std::move(half.residual2);
        // Pruned mass is tracked in tv_error_budget and counts as defect.
        out.plan.defect = integrate(system, out.residual1) + out.plan.tv_error_budget;
        out.rounds.push_back({half.n_used, half.coupled_mass, out.plan.defect, out.plan.atoms.size(),
                              out.plan.max_word_length()});
        if (!(half.coupled_mass > S(0))) {
            out.stop_reason = StopReason::no_progress;
            break;
        }
    }
    return out;
}

template <class S>
FullCoupling<S> full_coupling(const ShiftSystem<S>& system, const CylinderFunction<S>& f1,
                              const CylinderFunction<S>& f2, const S& epsilon, std::size_t max_rounds) {
    FullCouplingOptions<S> options;
    options.epsilon = epsilon;
    options.max_rounds = max_rounds;
    return full_coupling(system, f1, f2, options);
}

}  // namespace orbitlab
