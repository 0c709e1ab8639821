#pragma once

#include <random>

#include "orbitlab/cylinder_function.hpp"
#include "orbitlab/shift_system.hpp"

namespace orbitlab::testing {

using Q = Rational;

inline ShiftSystem<Q> fair_coin() { return ShiftSystem<Q>::bernoulli({Q(1, 2), Q(1, 2)}); }
inline ShiftSystem<double> fair_coin_d() { return ShiftSystem<double>::bernoulli({0.5, 0.5}); }

inline CylinderFunction<Q> table(std::size_t depth, std::vector<Q> values, std::size_t k = 2) {
    return {k, depth, std::move(values)};
}

/// Random values p/q with small numerators; zero_mean subtracts the integral.
inline CylinderFunction<Q> random_function(std::mt19937_64& gen, const ShiftSystem<Q>& system, std::size_t depth,
                                           bool zero_mean = false) {
    std::uniform_int_distribution<int> num(-6, 6);
    std::uniform_int_distribution<int> den(1, 4);
    std::vector<Q> values(int_pow(system.alphabet(), depth));
    for (auto& v : values) v = Q(num(gen), den(gen));
    CylinderFunction<Q> f(system.alphabet(), depth, std::move(values));
    if (zero_mean) f = subtract(f, CylinderFunction<Q>::constant(system.alphabet(), integrate(system, f)));
    return f;
}

/// Random probability density: nonnegative integers normalized to integral 1.
inline CylinderFunction<Q> random_density(std::mt19937_64& gen, const ShiftSystem<Q>& system, std::size_t depth) {
    std::uniform_int_distribution<int> num(0, 5);
    std::vector<Q> values(int_pow(system.alphabet(), depth));
    Q total(0);
    do {
        for (auto& v : values) v = Q(num(gen));
        total = integrate(system, CylinderFunction<Q>(system.alphabet(), depth, values));
    } while (total == 0);
    for (auto& v : values) v /= total;
    return {system.alphabet(), depth, std::move(values)};
}

}  // namespace orbitlab::testing
