#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "orbitlab/cylinder_function.hpp"
#include "orbitlab/shift_system.hpp"

namespace orbitlab {

/// f o T^shift as one factor of a product.
template <class S>
struct ShiftedFactor {
    CylinderFunction<S> function;
    std::size_t shift = 0;
};

/// Exact integral of prod_i f_i o T^{t_i} for a Bernoulli system. Factors
/// whose coordinate windows overlap are multiplied out as one table; disjoint
/// clusters are independent under a product measure, so their integrals multiply.
template <class S>
S integrate_product(const ShiftSystem<S>& system, std::vector<ShiftedFactor<S>> factors) {
    system.require_bernoulli("integrate_product");
    S result(1);
    std::vector<ShiftedFactor<S>> windowed;
    for (auto& fac : factors) {
        fac.function = compact(fac.function);
        if (fac.function.depth() == 0) {
            result *= fac.function[0];
        } else {
            windowed.push_back(std::move(fac));
        }
    }
    std::sort(windowed.begin(), windowed.end(), [](const auto& a, const auto& b) { return a.shift < b.shift; });
    std::size_t i = 0;
    while (i < windowed.size()) {
        const std::size_t start = windowed[i].shift;
        std::size_t end = start + windowed[i].function.depth();
        std::size_t j = i + 1;
        while (j < windowed.size() && windowed[j].shift < end) {
            end = std::max(end, windowed[j].shift + windowed[j].function.depth());
            ++j;
        }
        const std::size_t span = end - start;
        system.check_depth(span, "integrate_product");
        auto product = CylinderFunction<S>::constant(system.alphabet(), S(1));
        for (std::size_t m = i; m < j; ++m) {
            const auto shifted = compose_with_shift(windowed[m].function, windowed[m].shift - start);
            product = multiply(product, lift_depth(shifted, span));
        }
        result *= integrate(system, product);
        i = j;
    }
    return result;
}

template <class S>
using Matrix = std::vector<std::vector<S>>;

template <class S>
Matrix<S> matrix_multiply(const Matrix<S>& a, const Matrix<S>& b) {
    const std::size_t n = a.size();
    Matrix<S> c(n, std::vector<S>(n, S(0)));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t l = 0; l < n; ++l)
            for (std::size_t j = 0; j < n; ++j) c[i][j] += a[i][l] * b[l][j];
    return c;
}

template <class S>
Matrix<S> matrix_power(const Matrix<S>& a, std::size_t e) {
    const std::size_t n = a.size();
    Matrix<S> result(n, std::vector<S>(n, S(0)));
    for (std::size_t i = 0; i < n; ++i) result[i][i] = S(1);
    Matrix<S> base = a;
    while (e > 0) {
        if (e & 1) result = matrix_multiply(result, base);
        base = matrix_multiply(base, base);
        e >>= 1;
    }
    return result;
}

/// Exact correlation integral of phi1 * phi2 o T^n.
///
/// Bernoulli: windows [0, d1) and [n, n + d2) are independent once n >= d1,
/// so the result factorizes exactly. Markov: direct summation while the
/// windows overlap, matrix powers of the transition matrix across the gap.
template <class S>
S correlation(const ShiftSystem<S>& system, const CylinderFunction<S>& phi1, const CylinderFunction<S>& phi2,
              std::size_t n) {
    if (system.is_bernoulli()) return integrate_product(system, {{phi1, 0}, {phi2, n}});

    const auto f1 = compact(phi1);
    const auto f2 = compact(phi2);
    if (f1.depth() == 0) return f1[0] * integrate(system, f2);
    if (f2.depth() == 0) return f2[0] * integrate(system, f1);
    const std::size_t d1 = f1.depth();
    const std::size_t d2 = f2.depth();
    if (n < d1) {
        const std::size_t depth = std::max(d1, n + d2);
        system.check_depth(depth, "correlation");
        return integrate(system, multiply(lift_depth(f1, depth), lift_depth(compose_with_shift(f2, n), depth)));
    }
    const std::size_t k = system.alphabet();
    const auto bridge = matrix_power(system.transition(), n - d1 + 1);
    const auto masses1 = cylinder_masses(system, d1);
    const auto masses2 = cylinder_masses(system, d2);
    // Conditional mass of w2 given its first symbol, times phi2(w2), summed per first symbol.
    std::vector<S> tail(k, S(0));
    const std::size_t block2 = f2.size() / k;
    for (std::size_t idx = 0; idx < f2.size(); ++idx)
        tail[idx / block2] += masses2[idx] / system.weight(static_cast<Symbol>(idx / block2)) * f2[idx];
    S total(0);
    for (std::size_t idx = 0; idx < f1.size(); ++idx) {
        if (f1[idx] == S(0)) continue;
        const std::size_t last = idx % k;
        S inner(0);
        for (std::size_t b = 0; b < k; ++b) inner += bridge[last][b] * tail[b];
        total += masses1[idx] * f1[idx] * inner;
    }
    return total;
}

/// Squared L2 norm of (1/k) sum_{j<k} phi1 o T^j * phi2 o T^{n+j}, computed two ways.
template <class S>
struct L2AverageNorm {
    /// Expansion of the square into k correlation terms; always available.
    S squared;
    /// Direct integration of the square as one cylinder function; only when
    /// its depth fits `direct_depth_limit`.
    std::optional<S> squared_direct;

    double norm() const { return std::sqrt(std::max(0.0, to_double(squared))); }
};

template <class S>
S l2_average_norm_direct(const ShiftSystem<S>& system, const CylinderFunction<S>& phi1,
                         const CylinderFunction<S>& phi2, std::size_t n, std::size_t k) {
    const std::size_t depth = std::max(phi1.depth() + k - 1, n + k - 1 + phi2.depth());
    system.check_depth(depth, "l2_average_norm");
    auto sum = lift_depth(CylinderFunction<S>::zero(system.alphabet()), depth);
    for (std::size_t j = 0; j < k; ++j) {
        const auto term = multiply(lift_depth(compose_with_shift(phi1, j), depth),
                                   lift_depth(compose_with_shift(phi2, n + j), depth));
        sum = add(sum, term);
    }
    const auto avg = scale(sum, S(1) / S(static_cast<long>(k)));
    return integrate(system, multiply(avg, avg));
}

template <class S>
S l2_average_norm_expansion(const ShiftSystem<S>& system, const CylinderFunction<S>& phi1,
                            const CylinderFunction<S>& phi2, std::size_t n, std::size_t k) {
    const S kk(static_cast<long>(k));
    const auto phi1_sq = multiply(phi1, phi1);
    const auto phi2_sq = multiply(phi2, phi2);
    S total = integrate_product(system, {{phi1_sq, 0}, {phi2_sq, n}}) / kk;
    for (std::size_t j = 1; j < k; ++j) {
        const S weight = S(2) * (S(1) - S(static_cast<long>(j)) / kk) / kk;
        total += weight * integrate_product(system, {{phi1, 0}, {phi1, j}, {phi2, n}, {phi2, n + j}});
    }
    return total;
}

template <class S>
L2AverageNorm<S> l2_average_norm(const ShiftSystem<S>& system, const CylinderFunction<S>& phi1,
                                 const CylinderFunction<S>& phi2, std::size_t n, std::size_t k,
                                 std::size_t direct_depth_limit = 16) {
    system.require_bernoulli("l2_average_norm");
    if (k == 0) throw Error("l2_average_norm: k must be at least 1");
    const auto f1 = compact(phi1);
    const auto f2 = compact(phi2);
    L2AverageNorm<S> out{l2_average_norm_expansion(system, f1, f2, n, k), std::nullopt};
    const std::size_t depth = std::max(f1.depth() + k - 1, n + k - 1 + f2.depth());
    if (depth <= std::min(direct_depth_limit, system.max_depth()))
        out.squared_direct = l2_average_norm_direct(system, f1, f2, n, k);
    return out;
}

template <class S>
struct L2Witness {
    std::size_t k = 1;
    std::size_t lag = 0;  ///< N: the bound holds for every n >= N
    std::size_t a = 1;    ///< A: cross terms with j >= A are below the internal tolerance
    S c{0};               ///< ||phi1||^2 ||phi2||^2
    S internal_epsilon{0};
    S verified_squared{0};
    bool verified = false;

    double verified_norm() const { return std::sqrt(std::max(0.0, to_double(verified_squared))); }
};

/// (k, N) such that the k-average of phi1 o T^j * phi2 o T^{n+j} has L2 norm
/// <= epsilon for all n >= N, following the square expansion with internal
/// tolerance epsilon^2 / 3. The pair is checked by evaluating the norm at n = N.
template <class S>
L2Witness<S> l2_bound_witness(const ShiftSystem<S>& system, const CylinderFunction<S>& phi1,
                              const CylinderFunction<S>& phi2, const S& epsilon) {
    system.require_bernoulli("l2_bound_witness");
    if (!(epsilon > S(0))) throw Error("l2_bound_witness: epsilon must be positive");
    const auto f1 = compact(phi1);
    const auto f2 = compact(phi2);
    if (!nearly_equal(integrate(system, f2), S(0), S(ScalarTraits<S>::tolerance())))
        throw Error("l2_bound_witness: phi2 must have zero mean");

    L2Witness<S> w;
    const S s1 = f1.sup_norm();
    const S s2 = f2.sup_norm();
    w.c = s1 * s1 * s2 * s2;
    w.internal_epsilon = epsilon * epsilon / S(3);

    // Autocorrelations of phi2 vanish exactly for j >= depth(phi2).
    w.a = 1;
    for (std::size_t j = f2.depth(); j >= 1; --j) {
        const S term = S(2) * s1 * s1 * abs_value(correlation(system, f2, f2, j));
        if (term > w.internal_epsilon) {
            w.a = j + 1;
            break;
        }
    }
    const S needed = (w.c + S(2) * S(static_cast<long>(w.a)) * w.c) / w.internal_epsilon;
    w.k = std::max<std::size_t>(1, ceil_to_u64(needed));
    // Every cross term factorizes once n >= j + depth(phi1) for all j < k.
    w.lag = f1.depth() == 0 ? 0 : f1.depth() + w.k - 1;

    w.verified_squared = l2_average_norm_expansion(system, f1, f2, w.lag, w.k);
    w.verified = !(w.verified_squared > epsilon * epsilon);
    return w;
}

/// Period-2 chain on two states: P = [[0,1],[1,0]], stationary (1/2, 1/2).
template <class S>
ShiftSystem<S> period_two_chain() {
    return ShiftSystem<S>::markov({{S(0), S(1)}, {S(1), S(0)}}, {S(1) / S(2), S(1) / S(2)});
}

/// m_n(X) for phi1 = 2 * 1_{state 0}, phi2 = 2 * 1_{state 1} on the period-2
/// chain, n = 0..n_max. Alternates 0, 2, 0, ...: the chain is not mixing.
template <class S>
std::vector<S> nonmixing_masses(std::size_t n_max) {
    const auto system = period_two_chain<S>();
    const auto phi1 = CylinderFunction<S>::indicator(2, Word{0}, S(2));
    const auto phi2 = CylinderFunction<S>::indicator(2, Word{1}, S(2));
    std::vector<S> out;
    for (std::size_t n = 0; n <= n_max; ++n) out.push_back(correlation(system, phi1, phi2, n));
    return out;
}

}  // namespace orbitlab
