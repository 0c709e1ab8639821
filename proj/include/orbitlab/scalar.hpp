#pragma once

// Scalar types used throughout the library: an exact rational mode and a
// floating mode. Every template takes the scalar as its first parameter.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <type_traits>

#include <boost/multiprecision/gmp.hpp>

namespace orbitlab {

using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational,
                                               boost::multiprecision::et_off>;
using BigInt = boost::multiprecision::number<boost::multiprecision::gmp_int,
                                             boost::multiprecision::et_off>;

/// Base error for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when an operation would build a table deeper than the configured cap.
class DepthCapExceeded : public Error {
public:
    DepthCapExceeded(const std::string& operation, std::size_t requested, std::size_t cap)
        : Error(operation + ": depth " + std::to_string(requested) + " exceeds cap " +
                std::to_string(cap)),
          operation_(operation), requested_(requested), cap_(cap) {}

    const std::string& operation() const noexcept { return operation_; }
    std::size_t requested() const noexcept { return requested_; }
    std::size_t cap() const noexcept { return cap_; }

private:
    std::string operation_;
    std::size_t requested_;
    std::size_t cap_;
};

template <class S>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
    static constexpr bool exact = false;
    /// Tolerance for equal-mass and marginal-match checks.
    static double tolerance() { return 1e-9; }
    /// Tolerance for "weights sum to one".
    static double weight_tolerance() { return 1e-12; }
    static double to_double(double x) { return x; }
    static double from_double(double x) { return x; }
    static std::string to_string(double x) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return buf;
    }
    static double parse(const std::string& s) {
        const auto slash = s.find('/');
        if (slash == std::string::npos) return std::stod(s);
        return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
    }
};

template <>
struct ScalarTraits<Rational> {
    static constexpr bool exact = true;
    static Rational tolerance() { return Rational(0); }
    static Rational weight_tolerance() { return Rational(0); }
    static double to_double(const Rational& x) { return x.convert_to<double>(); }
    /// Exact binary expansion of the double.
    static Rational from_double(double x) { return Rational(x); }
    static std::string to_string(const Rational& x) { return x.str(); }
    /// Accepts "p", "p/q" or a decimal such as "0.3" or "1e-12" (read as 3/10, 1/10^12).
    static Rational parse(const std::string& s) {
        if (s.find('/') != std::string::npos) return Rational(s);
        const auto e = s.find_first_of("eE");
        std::string mantissa = s.substr(0, e);
        long exponent = 0;
        if (e != std::string::npos) {
            std::size_t used = 0;
            exponent = std::stol(s.substr(e + 1), &used);
            if (used != s.size() - e - 1) throw std::invalid_argument("bad exponent in '" + s + "'");
        }
        const auto dot = mantissa.find('.');
        if (dot != std::string::npos) {
            exponent -= static_cast<long>(mantissa.size() - dot - 1);
            mantissa.erase(dot, 1);
        }
        BigInt scale = 1;
        for (long i = 0; i < std::abs(exponent); ++i) scale *= 10;
        const BigInt digits(mantissa);
        return exponent >= 0 ? Rational(digits * scale) : Rational(digits, scale);
    }
};

template <class S>
inline constexpr bool is_exact_v = ScalarTraits<S>::exact;

template <class S>
double to_double(const S& x) {
    return ScalarTraits<S>::to_double(x);
}

template <class S>
S abs_value(const S& x) {
    return x < S(0) ? S(-x) : x;
}

/// a == b exactly in rational mode, within `tol` (default traits tolerance) otherwise.
template <class S>
bool nearly_equal(const S& a, const S& b, const S& tol = ScalarTraits<S>::tolerance()) {
    if constexpr (is_exact_v<S>) {
        return a == b;
    } else {
        return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
    }
}

template <class S>
S power(S base, std::size_t e) {
    S result(1);
    while (e > 0) {
        if (e & 1) result *= base;
        base *= base;
        e >>= 1;
    }
    return result;
}

/// Smallest integer >= x, for nonnegative x.
inline std::uint64_t ceil_to_u64(const Rational& x) {
    const BigInt num = boost::multiprecision::numerator(x);
    const BigInt den = boost::multiprecision::denominator(x);
    BigInt q = num / den;
    if (q * den < num) q += 1;
    return q.convert_to<std::uint64_t>();
}

inline std::uint64_t ceil_to_u64(double x) { return static_cast<std::uint64_t>(std::ceil(x)); }

}  // namespace orbitlab
