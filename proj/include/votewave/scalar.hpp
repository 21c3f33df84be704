#pragma once
#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace votewave {

// Exact backend for decisions that amount to threshold comparisons
// (representability, golden values). Everything dynamical runs in double.
using Rational = boost::multiprecision::cpp_rational;

template <class S>
inline constexpr bool is_exact_scalar = false;
template <>
inline constexpr bool is_exact_scalar<Rational> = true;

inline double to_double(double x) { return x; }
inline double to_double(const Rational& x) { return x.template convert_to<double>(); }

template <class S>
S scalar_from_ratio(long long num, long long den) {
    if constexpr (is_exact_scalar<S>) {
        return S(num) / S(den);
    } else {
        return static_cast<S>(num) / static_cast<S>(den);
    }
}

// Comparison tolerance used by coefficient checks: exact backends compare
// exactly, the float backend uses 1e-12 absolute.
template <class S>
constexpr double coeff_tol() {
    return is_exact_scalar<S> ? 0.0 : 1e-12;
}

inline Rational rational_from_decimal(const std::string& s) {
    std::size_t pos = 0;
    bool neg = false;
    if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
        neg = (s[pos] == '-');
        ++pos;
    }
    boost::multiprecision::cpp_int num = 0;
    boost::multiprecision::cpp_int den = 1;
    bool any_digit = false;
    for (; pos < s.size() && s[pos] >= '0' && s[pos] <= '9'; ++pos) {
        num = num * 10 + (s[pos] - '0');
        any_digit = true;
    }
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        for (; pos < s.size() && s[pos] >= '0' && s[pos] <= '9'; ++pos) {
            num = num * 10 + (s[pos] - '0');
            den *= 10;
            any_digit = true;
        }
    }
    long long exp10 = 0;
    if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
        ++pos;
        bool eneg = false;
        if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
            eneg = (s[pos] == '-');
            ++pos;
        }
        bool edigit = false;
        for (; pos < s.size() && s[pos] >= '0' && s[pos] <= '9'; ++pos) {
            exp10 = exp10 * 10 + (s[pos] - '0');
            edigit = true;
        }
        if (!edigit) throw std::invalid_argument("malformed number: " + s);
        if (eneg) exp10 = -exp10;
    }
    if (!any_digit || pos != s.size())
        throw std::invalid_argument("malformed number: " + s);
    for (long long i = 0; i < exp10; ++i) num *= 10;
    for (long long i = 0; i < -exp10; ++i) den *= 10;
    if (neg) num = -num;
    return Rational(num, den);
}

// Parses "3", "-0.25", "1e-3" or "27/32" into an exact rational.
inline Rational rational_from_string(const std::string& s) {
    auto slash = s.find('/');
    if (slash == std::string::npos) return rational_from_decimal(s);
    Rational num = rational_from_decimal(s.substr(0, slash));
    Rational den = rational_from_decimal(s.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator: " + s);
    return num / den;
}

inline std::string rational_to_string(const Rational& x) {
    return x.str();
}

}  // namespace votewave
