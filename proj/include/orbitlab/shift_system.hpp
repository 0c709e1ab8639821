#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "orbitlab/scalar.hpp"
#include "orbitlab/word.hpp"

namespace orbitlab {

enum class MeasureKind { bernoulli, markov };

/// Default cap on table depth: the largest depth with alphabet^depth <= 2^24
/// (24 for a binary alphabet).
inline std::size_t default_max_depth(std::size_t alphabet) {
    std::size_t depth = 0;
    std::size_t size = 1;
    while (size * alphabet <= (std::size_t{1} << 24)) {
        size *= alphabet;
        ++depth;
    }
    return depth;
}

/// One-sided full shift on {0..k-1} with a shift-invariant measure: either an
/// i.i.d. product (Bernoulli) measure or a stationary Markov measure.
/// Markov systems are accepted only by cylinder masses and correlation analytics.
template <class S>
class ShiftSystem {
public:
    using Matrix = std::vector<std::vector<S>>;

    static ShiftSystem bernoulli(std::vector<S> weights, std::optional<std::size_t> max_depth = {}) {
        ShiftSystem sys;
        sys.kind_ = MeasureKind::bernoulli;
        sys.weights_ = std::move(weights);
        sys.max_depth_ = max_depth.value_or(default_max_depth(sys.weights_.size()));
        sys.validate_probability_vector(sys.weights_, "bernoulli weights");
        return sys;
    }

    /// Stationary Markov measure. `stationary` must satisfy pi P = pi.
    static ShiftSystem markov(Matrix transition, std::vector<S> stationary,
                              std::optional<std::size_t> max_depth = {}) {
        ShiftSystem sys;
        sys.kind_ = MeasureKind::markov;
        sys.transition_ = std::move(transition);
        sys.weights_ = std::move(stationary);
        sys.max_depth_ = max_depth.value_or(default_max_depth(sys.weights_.size()));
        sys.validate_probability_vector(sys.weights_, "stationary vector");
        const std::size_t k = sys.weights_.size();
        if (sys.transition_.size() != k) throw Error("markov: transition matrix size mismatch");
        for (const auto& row : sys.transition_) {
            if (row.size() != k) throw Error("markov: transition matrix must be square");
            S sum(0);
            for (const S& x : row) {
                if (x < S(0)) throw Error("markov: negative transition probability");
                sum += x;
            }
            if (!within(sum, S(1))) throw Error("markov: transition rows must sum to 1");
        }
        for (std::size_t b = 0; b < k; ++b) {
            S acc(0);
            for (std::size_t a = 0; a < k; ++a) acc += sys.weights_[a] * sys.transition_[a][b];
            if (!within(acc, sys.weights_[b])) throw Error("markov: stationary vector is not invariant");
        }
        return sys;
    }

    MeasureKind kind() const noexcept { return kind_; }
    bool is_bernoulli() const noexcept { return kind_ == MeasureKind::bernoulli; }
    std::size_t alphabet() const noexcept { return weights_.size(); }
    std::size_t max_depth() const noexcept { return max_depth_; }
    /// Bernoulli weights, or the stationary vector of a Markov system.
    const std::vector<S>& weights() const noexcept { return weights_; }
    const S& weight(Symbol a) const { return weights_.at(a); }
    const Matrix& transition() const noexcept { return transition_; }

    void require_bernoulli(const std::string& operation) const {
        if (!is_bernoulli()) throw Error(operation + ": only Bernoulli (product) measures are supported");
    }
    void check_depth(std::size_t depth, const std::string& operation) const {
        if (depth > max_depth_) throw DepthCapExceeded(operation, depth, max_depth_);
    }

    std::string descriptor() const {
        std::string out = is_bernoulli() ? "bernoulli(" : "markov(";
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            if (i) out += ",";
            out += ScalarTraits<S>::to_string(weights_[i]);
        }
        return out + ")";
    }

private:
    ShiftSystem() = default;

    static bool within(const S& a, const S& b) {
        if constexpr (is_exact_v<S>) return a == b;
        else return std::abs(a - b) <= ScalarTraits<S>::weight_tolerance();
    }

    void validate_probability_vector(const std::vector<S>& v, const std::string& what) const {
        if (v.size() < 2) throw Error(what + ": alphabet size must be at least 2");
        if (v.size() > 256) throw Error(what + ": alphabet size must be at most 256");
        S sum(0);
        for (const S& x : v) {
            if (!(x > S(0))) throw Error(what + ": entries must be strictly positive");
            sum += x;
        }
        if (!within(sum, S(1))) throw Error(what + ": entries must sum to 1");
    }

    MeasureKind kind_ = MeasureKind::bernoulli;
    std::vector<S> weights_;
    Matrix transition_;
    std::size_t max_depth_ = 0;
};

/// mu[w]. Bernoulli: product of weights; Markov: pi(w_0) * prod P(w_i, w_{i+1}).
template <class S>
S cylinder_mass(const ShiftSystem<S>& system, const Word& w) {
    w.validate(system.alphabet());
    if (w.empty()) return S(1);
    if (system.is_bernoulli()) {
        S mass(1);
        for (Symbol a : w) mass *= system.weight(a);
        return mass;
    }
    S mass = system.weight(w[0]);
    for (std::size_t i = 1; i < w.size(); ++i) mass *= system.transition()[w[i - 1]][w[i]];
    return mass;
}

/// Masses of all cylinders of the given depth in lexicographic order.
template <class S>
std::vector<S> cylinder_masses(const ShiftSystem<S>& system, std::size_t depth) {
    system.check_depth(depth, "cylinder_masses");
    const std::size_t k = system.alphabet();
    std::vector<S> masses{S(1)};
    for (std::size_t level = 0; level < depth; ++level) {
        std::vector<S> next(masses.size() * k);
        for (std::size_t i = 0; i < masses.size(); ++i) {
            for (std::size_t a = 0; a < k; ++a) {
                if (system.is_bernoulli()) {
                    next[i * k + a] = masses[i] * system.weight(static_cast<Symbol>(a));
                } else if (level == 0) {
                    next[a] = system.weight(static_cast<Symbol>(a));
                } else {
                    next[i * k + a] = masses[i] * system.transition()[i % k][a];
                }
            }
        }
        masses = std::move(next);
    }
    return masses;
}

}  // namespace orbitlab
