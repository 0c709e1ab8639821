#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "orbitlab/scalar.hpp"

namespace orbitlab {

/// n -> coefficient * n^exponent, with a rational exponent so that exact
/// values are available whenever n^exponent is rational.
struct PowerSchedule {
    Rational coefficient{1};
    Rational exponent{0};

    static PowerSchedule parse(const std::string& coefficient, const std::string& exponent) {
        return {ScalarTraits<Rational>::parse(coefficient), ScalarTraits<Rational>::parse(exponent)};
    }

    /// True when the sequence tends to infinity.
    bool grows() const { return coefficient > 0 && exponent > 0; }

    void validate(const std::string& what) const {
        if (!(coefficient > 0)) throw Error(what + ": coefficient must be positive");
        if (exponent < 0) throw Error(what + ": exponent must be nonnegative");
    }

    double operator()(std::size_t n) const {
        return to_double(coefficient) * std::pow(static_cast<double>(n), to_double(exponent));
    }

    /// Exact value when n^exponent is rational (n^(p/q) with n a perfect q-th power).
    std::optional<Rational> exact(std::size_t n) const {
        const BigInt p = boost::multiprecision::numerator(exponent);
        const BigInt q = boost::multiprecision::denominator(exponent);
        const auto qq = q.convert_to<unsigned long>();
        const auto root = static_cast<unsigned long long>(std::llround(std::pow(static_cast<double>(n), 1.0 / static_cast<double>(qq))));
        for (unsigned long long r = root > 0 ? root - 1 : 0; r <= root + 1; ++r) {
            BigInt power = 1;
            for (unsigned long i = 0; i < qq; ++i) power *= r;
            if (power == n) {
                BigInt pw = 1;
                const auto pp = p.convert_to<unsigned long>();
                for (unsigned long i = 0; i < pp; ++i) pw *= r;
                return coefficient * Rational(pw);
            }
        }
        return std::nullopt;
    }

    std::string str() const { return coefficient.str() + "*n^(" + exponent.str() + ")"; }
};

/// Normalization B_n of the Birkhoff sums and almost-sure rate r(n).
struct NormalizationSchedule {
    PowerSchedule normalization{Rational(1, 2), Rational(1, 2)};
    PowerSchedule rate{Rational(1), Rational(1, 2)};

    void validate() const {
        normalization.validate("normalization");
        rate.validate("rate");
        if (!normalization.grows()) throw Error("normalization: B_n must tend to infinity");
        if (!rate.grows()) throw Error("rate: r(n) must tend to infinity");
    }
};

}  // namespace orbitlab
