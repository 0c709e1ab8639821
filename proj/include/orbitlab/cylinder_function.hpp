#pragma once

#include <algorithm>
#include <functional>
#include <span>
#include <vector>

#include "orbitlab/scalar.hpp"
#include "orbitlab/shift_system.hpp"
#include "orbitlab/word.hpp"

namespace orbitlab {

/// Function of the first `depth` coordinates, stored as a table over all
/// alphabet^depth words in lexicographic order (first symbol most significant).
template <class S>
class CylinderFunction {
public:
    CylinderFunction() : CylinderFunction(2, 0, {S(0)}) {}

    CylinderFunction(std::size_t alphabet, std::size_t depth, std::vector<S> values)
        : alphabet_(alphabet), depth_(depth), values_(std::move(values)) {
        if (alphabet < 2) throw Error("cylinder function: alphabet size must be at least 2");
        if (values_.size() != int_pow(alphabet, depth))
            throw Error("cylinder function: table size " + std::to_string(values_.size()) +
                        " does not match alphabet^depth = " + std::to_string(int_pow(alphabet, depth)));
    }

    static CylinderFunction constant(std::size_t alphabet, const S& c) { return {alphabet, 0, {c}}; }
    static CylinderFunction zero(std::size_t alphabet) { return constant(alphabet, S(0)); }

    /// scale * 1_[w].
    static CylinderFunction indicator(std::size_t alphabet, const Word& w, const S& scale = S(1)) {
        w.validate(alphabet);
        std::vector<S> values(int_pow(alphabet, w.size()), S(0));
        values[w.index(alphabet)] = scale;
        return {alphabet, w.size(), std::move(values)};
    }

    std::size_t alphabet() const noexcept { return alphabet_; }
    std::size_t depth() const noexcept { return depth_; }
    std::size_t size() const noexcept { return values_.size(); }
    const std::vector<S>& values() const noexcept { return values_; }
    const S& operator[](std::size_t index) const { return values_[index]; }

    /// Value on any word of length >= depth (only the first `depth` symbols matter).
    const S& operator()(const Word& w) const {
        if (w.size() < depth_) throw Error("cylinder function: word shorter than depth");
        return values_[w.index(alphabet_, depth_)];
    }
    /// Value at the point whose coordinates start at symbols[offset].
    const S& at(std::span<const Symbol> symbols, std::size_t offset) const {
        std::size_t idx = 0;
        for (std::size_t i = 0; i < depth_; ++i) idx = idx * alphabet_ + symbols[offset + i];
        return values_[idx];
    }

    bool is_nonnegative() const {
        return std::all_of(values_.begin(), values_.end(), [](const S& v) { return !(v < S(0)); });
    }
    S sup_norm() const {
        S m(0);
        for (const S& v : values_) m = std::max(m, abs_value(v));
        return m;
    }

    friend bool operator==(const CylinderFunction&, const CylinderFunction&) = default;

private:
    std::size_t alphabet_;
    std::size_t depth_;
    std::vector<S> values_;
};

/// Same function viewed at a larger depth.
template <class S>
CylinderFunction<S> lift_depth(const CylinderFunction<S>& f, std::size_t new_depth,
                               std::size_t depth_cap = 64) {
    if (new_depth < f.depth()) throw Error("lift_depth: target depth below current depth");
    if (new_depth == f.depth()) return f;
    if (new_depth > depth_cap) throw DepthCapExceeded("lift_depth", new_depth, depth_cap);
    const std::size_t repeat = int_pow(f.alphabet(), new_depth - f.depth());
    std::vector<S> values;
    values.reserve(f.size() * repeat);
    for (const S& v : f.values()) values.insert(values.end(), repeat, v);
    return {f.alphabet(), new_depth, std::move(values)};
}

/// f o T^j: depth grows by j and the first j coordinates are ignored.
template <class S>
CylinderFunction<S> compose_with_shift(const CylinderFunction<S>& f, std::size_t j,
                                       std::size_t depth_cap = 64) {
    if (j == 0) return f;
    const std::size_t depth = f.depth() + j;
    if (depth > depth_cap) throw DepthCapExceeded("compose_with_shift", depth, depth_cap);
    const std::size_t repeat = int_pow(f.alphabet(), j);
    std::vector<S> values;
    values.reserve(f.size() * repeat);
    for (std::size_t r = 0; r < repeat; ++r) values.insert(values.end(), f.values().begin(), f.values().end());
    return {f.alphabet(), depth, std::move(values)};
}

/// Smallest-depth representation: drops trailing coordinates the function does
/// not depend on.
template <class S>
CylinderFunction<S> compact(const CylinderFunction<S>& f) {
    CylinderFunction<S> cur = f;
    const std::size_t k = f.alphabet();
    while (cur.depth() > 0) {
        const auto& v = cur.values();
        bool independent = true;
        for (std::size_t i = 0; i < v.size() && independent; i += k)
            for (std::size_t a = 1; a < k; ++a)
                if (!(v[i + a] == v[i])) { independent = false; break; }
        if (!independent) break;
        std::vector<S> reduced;
        reduced.reserve(v.size() / k);
        for (std::size_t i = 0; i < v.size(); i += k) reduced.push_back(v[i]);
        cur = CylinderFunction<S>(k, cur.depth() - 1, std::move(reduced));
    }
    return cur;
}

namespace detail {
template <class S, class Op>
CylinderFunction<S> pointwise(const CylinderFunction<S>& f, const CylinderFunction<S>& g, Op op) {
    if (f.alphabet() != g.alphabet()) throw Error("cylinder function: alphabet mismatch");
    const std::size_t depth = std::max(f.depth(), g.depth());
    const auto a = lift_depth(f, depth);
    const auto b = lift_depth(g, depth);
    std::vector<S> values(a.size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = op(a[i], b[i]);
    return {f.alphabet(), depth, std::move(values)};
}
}  // namespace detail

template <class S>
CylinderFunction<S> add(const CylinderFunction<S>& f, const CylinderFunction<S>& g) {
    return detail::pointwise(f, g, [](const S& x, const S& y) { return S(x + y); });
}
template <class S>
CylinderFunction<S> subtract(const CylinderFunction<S>& f, const CylinderFunction<S>& g) {
    return detail::pointwise(f, g, [](const S& x, const S& y) { return S(x - y); });
}
template <class S>
CylinderFunction<S> multiply(const CylinderFunction<S>& f, const CylinderFunction<S>& g) {
    return detail::pointwise(f, g, [](const S& x, const S& y) { return S(x * y); });
}
template <class S>
CylinderFunction<S> pointwise_min(const CylinderFunction<S>& f, const CylinderFunction<S>& g) {
    return detail::pointwise(f, g, [](const S& x, const S& y) { return std::min(x, y); });
}
template <class S>
CylinderFunction<S> scale(const CylinderFunction<S>& f, const S& c) {
    std::vector<S> values = f.values();
    for (S& v : values) v *= c;
    return {f.alphabet(), f.depth(), std::move(values)};
}
template <class S>
CylinderFunction<S> abs(const CylinderFunction<S>& f) {
    std::vector<S> values = f.values();
    for (S& v : values) v = abs_value(v);
    return {f.alphabet(), f.depth(), std::move(values)};
}
template <class S, class Fn>
CylinderFunction<S> map_values(const CylinderFunction<S>& f, Fn fn) {
    std::vector<S> values = f.values();
    for (S& v : values) v = fn(v);
    return {f.alphabet(), f.depth(), std::move(values)};
}

/// Integral of f against the system's invariant measure.
template <class S>
S integrate(const ShiftSystem<S>& system, const CylinderFunction<S>& f) {
    if (f.alphabet() != system.alphabet()) throw Error("integrate: alphabet mismatch");
    const auto masses = cylinder_masses(system, f.depth());
    S total(0);
    for (std::size_t i = 0; i < f.size(); ++i) total += f[i] * masses[i];
    return total;
}

template <class S>
S l1_norm(const ShiftSystem<S>& system, const CylinderFunction<S>& f) {
    return integrate(system, abs(f));
}

/// Transfer operator of the shift: (T^ f)(w') = sum_a p_a f(a w').
template <class S>
CylinderFunction<S> transfer(const ShiftSystem<S>& system, const CylinderFunction<S>& f) {
    system.require_bernoulli("transfer");
    if (f.alphabet() != system.alphabet()) throw Error("transfer: alphabet mismatch");
    if (f.depth() == 0) return f;
    const std::size_t k = f.alphabet();
    const std::size_t block = f.size() / k;
    std::vector<S> values(block, S(0));
    for (std::size_t a = 0; a < k; ++a) {
        const S& p = system.weight(static_cast<Symbol>(a));
        for (std::size_t i = 0; i < block; ++i) values[i] += p * f[a * block + i];
    }
    return {k, f.depth() - 1, std::move(values)};
}

template <class S>
CylinderFunction<S> transfer_power(const ShiftSystem<S>& system, CylinderFunction<S> f, std::size_t j) {
    for (std::size_t i = 0; i < j; ++i) {
        if (f.depth() == 0) break;  // constants are fixed points
        f = transfer(system, f);
    }
    return f;
}

/// (1/n) sum_{j<n} T^^j f, at the depth of f.
template <class S>
CylinderFunction<S> cesaro_average(const ShiftSystem<S>& system, const CylinderFunction<S>& f, std::size_t n) {
    if (n == 0) throw Error("cesaro_average: n must be at least 1");
    const std::size_t depth = f.depth();
    CylinderFunction<S> sum = CylinderFunction<S>::zero(f.alphabet());
    sum = lift_depth(sum, depth);
    CylinderFunction<S> term = f;
    for (std::size_t j = 0; j < n; ++j) {
        if (term.depth() == 0) {
            // Every remaining term is the same constant.
            sum = add(sum, scale(term, S(static_cast<long>(n - j))));
            break;
        }
        sum = add(sum, term);
        term = transfer(system, term);
    }
    return scale(sum, S(1) / S(static_cast<long>(n)));
}

}  // namespace orbitlab
