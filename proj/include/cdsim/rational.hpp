#pragma once

// Exact rational arithmetic on arbitrary-precision integers.
//
// Every price, cash balance, allocation and utility in this library is a
// Rational; floating point appears nowhere on a computation path. Prices in
// the couple auction evolve as 2*(1+eps)^k, so numerators and denominators
// outgrow 64-bit integers quickly; cpp_int carries them exactly.

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace cdsim {

using BigInt = boost::multiprecision::cpp_int;

class Rational {
public:
    Rational() : num_(0), den_(1) {}
    Rational(long long n) : num_(n), den_(1) {}
    Rational(BigInt n) : num_(std::move(n)), den_(1) {}
    Rational(BigInt num, BigInt den);
    Rational(long long num, long long den) : Rational(BigInt(num), BigInt(den)) {}

    const BigInt& numerator() const { return num_; }
    const BigInt& denominator() const { return den_; }

    bool is_zero() const { return num_ == 0; }
    bool is_negative() const { return num_ < 0; }
    bool is_positive() const { return num_ > 0; }
    bool is_integer() const { return den_ == 1; }

    Rational operator-() const;

    Rational& operator+=(const Rational& rhs);
    Rational& operator-=(const Rational& rhs);
    Rational& operator*=(const Rational& rhs);
    Rational& operator/=(const Rational& rhs); // throws on division by zero

    friend Rational operator+(Rational lhs, const Rational& rhs) { return lhs += rhs; }
    friend Rational operator-(Rational lhs, const Rational& rhs) { return lhs -= rhs; }
    friend Rational operator*(Rational lhs, const Rational& rhs) { return lhs *= rhs; }
    friend Rational operator/(Rational lhs, const Rational& rhs) { return lhs /= rhs; }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

    // Largest integer <= value / smallest integer >= value.
    BigInt floor() const;
    BigInt ceil() const;
    Rational abs() const { return num_ < 0 ? -*this : *this; }

    static Rational pow(const Rational& base, unsigned exponent);

    // Accepts "p/q", "p" and optional leading '-'; nothing else (in
    // particular no decimals and no whitespace). Returns nullopt on any
    // malformed input, including q == 0.
    static std::optional<Rational> parse(std::string_view text);

    // Exact form: "25/8", "-3", "0".
    std::string str() const;

    // Decimal rendering for the *_dec CSV columns: sign, integer part,
    // then up to max_frac_digits fractional digits (truncated toward zero,
    // trailing zeros trimmed). Deterministic; documented in the README.
    std::string decimal(unsigned max_frac_digits = 12) const;

private:
    void normalize();

    BigInt num_; // carries the sign
    BigInt den_; // always positive
};

inline Rational operator*(long long lhs, const Rational& rhs) { return Rational(lhs) * rhs; }

} // namespace cdsim
