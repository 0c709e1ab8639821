#pragma once

#include <algorithm>
#include <bit>
#include <map>
#include <utility>
#include <vector>

#include "orbitlab/cylinder_function.hpp"
#include "orbitlab/rng.hpp"
#include "orbitlab/shift_system.hpp"

namespace orbitlab {

/// Finite-resolution point of the shift space: its first `size()` coordinates.
struct PrefixSample {
    std::vector<Symbol> symbols;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    std::size_t size() const noexcept { return symbols.size(); }
    std::span<const Symbol> view() const noexcept { return symbols; }
};

/// (position, symbol) pin used by conditioned sampling.
struct SymbolConstraint {
    std::size_t position;
    Symbol symbol;
};

/// Draws i.i.d. symbols from Bernoulli weights. Fair binary alphabets use raw bits.
class SymbolSampler {
public:
    template <class S>
    explicit SymbolSampler(const ShiftSystem<S>& system) {
        system.require_bernoulli("sampling");
        const std::size_t k = system.alphabet();
        double acc = 0;
        bool uniform = true;
        for (std::size_t a = 0; a < k; ++a) {
            acc += to_double(system.weight(static_cast<Symbol>(a)));
            cumulative_.push_back(acc);
            if (!(system.weight(static_cast<Symbol>(a)) == system.weight(0))) uniform = false;
        }
        cumulative_.back() = 1.0;
        if (uniform && std::has_single_bit(k)) bits_ = static_cast<unsigned>(std::countr_zero(k));
    }

    std::size_t alphabet() const noexcept { return cumulative_.size(); }

    void fill(StreamRng& rng, std::span<Symbol> out) const {
        if (bits_ > 0) {
            const unsigned per_word = 64 / bits_;
            const std::uint64_t mask = (std::uint64_t{1} << bits_) - 1;
            std::size_t i = 0;
            while (i < out.size()) {
                std::uint64_t word = rng();
                for (unsigned b = 0; b < per_word && i < out.size(); ++b, ++i) {
                    out[i] = static_cast<Symbol>(word & mask);
                    word >>= bits_;
                }
            }
            return;
        }
        for (Symbol& s : out) {
            const double u = rng.uniform();
            std::size_t a = 0;
            while (u >= cumulative_[a]) ++a;
            s = static_cast<Symbol>(a);
        }
    }

private:
    std::vector<double> cumulative_;
    unsigned bits_ = 0;
};

template <class S>
PrefixSample sample_prefix(const ShiftSystem<S>& system, StreamRng& rng, std::size_t length) {
    if (length == 0) throw Error("sample_prefix: length must be at least 1");
    PrefixSample x;
    x.seed = rng.master_seed();
    x.stream = rng.stream_index();
    x.symbols.resize(length);
    SymbolSampler(system).fill(rng, x.symbols);
    return x;
}

/// Checks constraints for range and consistency; returns them sorted by position.
inline std::vector<SymbolConstraint> normalize_constraints(std::vector<SymbolConstraint> constraints,
                                                           std::size_t length, std::size_t alphabet) {
    std::sort(constraints.begin(), constraints.end(),
              [](const auto& a, const auto& b) { return a.position < b.position; });
    std::vector<SymbolConstraint> out;
    for (const auto& c : constraints) {
        if (c.position >= length) throw Error("conditioned sampling: constraint position beyond prefix length");
        if (c.symbol >= alphabet) throw Error("conditioned sampling: constraint symbol out of range");
        if (!out.empty() && out.back().position == c.position) {
            if (out.back().symbol != c.symbol)
                throw Error("conditioned sampling: conflicting constraints at position " +
                            std::to_string(c.position));
            continue;
        }
        out.push_back(c);
    }
    return out;
}

/// Pins a word at a time index: (time, w) becomes |w| symbol constraints.
inline void append_word_constraint(std::vector<SymbolConstraint>& out, std::size_t time, const Word& w) {
    for (std::size_t i = 0; i < w.size(); ++i) out.push_back({time + i, w[i]});
}

/// Sample from the product measure conditioned on the pinned coordinates. Exact
/// for product measures since coordinates are independent.
template <class S>
PrefixSample sample_conditioned_prefix(const ShiftSystem<S>& system, StreamRng& rng, std::size_t length,
                                       const std::vector<SymbolConstraint>& constraints) {
    const auto pins = normalize_constraints(constraints, length, system.alphabet());
    PrefixSample x = sample_prefix(system, rng, length);
    for (const auto& c : pins) x.symbols[c.position] = c.symbol;
    return x;
}

/// S_n f(x) = sum_{j<n} f(T^j x).
template <class S>
S birkhoff_sum(const CylinderFunction<S>& f, std::span<const Symbol> x, std::size_t n) {
    if (n == 0) return S(0);
    if (x.size() < n + f.depth() - 1)
        throw Error("birkhoff_sum: prefix too short (need " + std::to_string(n + f.depth() - 1) + " symbols)");
    const std::size_t k = f.alphabet();
    const std::size_t d = f.depth();
    S total(0);
    if (d == 0) {
        for (std::size_t j = 0; j < n; ++j) total += f[0];
        return total;
    }
    const std::size_t modulus = f.size();
    std::size_t idx = 0;
    for (std::size_t i = 0; i + 1 < d; ++i) idx = idx * k + x[i];
    for (std::size_t j = 0; j < n; ++j) {
        idx = (idx * k + x[j + d - 1]) % modulus;
        total += f[idx];
    }
    return total;
}

template <class S>
S birkhoff_sum(const CylinderFunction<S>& f, const PrefixSample& x, std::size_t n) {
    return birkhoff_sum(f, x.view(), n);
}

}  // namespace orbitlab
