#include "cdsim/rational.hpp"

#include "cdsim/error.hpp"

#include <utility>

namespace cdsim {

namespace {

BigInt gcd_pos(BigInt a, BigInt b) {
    while (b != 0) {
        a %= b;
        std::swap(a, b);
    }
    return a;
}

} // namespace

Rational::Rational(BigInt num, BigInt den) : num_(std::move(num)), den_(std::move(den)) {
    if (den_ == 0) throw Error(ErrorKind::InvalidArgument, "rational with zero denominator");
    normalize();
}

void Rational::normalize() {
    if (den_ < 0) {
        num_ = -num_;
        den_ = -den_;
    }
    if (num_ == 0) {
        den_ = 1;
        return;
    }
    BigInt g = gcd_pos(num_ < 0 ? BigInt(-num_) : num_, den_);
    if (g > 1) {
        num_ /= g;
        den_ /= g;
    }
}

Rational Rational::operator-() const {
    Rational r;
    r.num_ = -num_;
    r.den_ = den_;
    return r;
}

Rational& Rational::operator+=(const Rational& rhs) {
    num_ = num_ * rhs.den_ + rhs.num_ * den_;
    den_ *= rhs.den_;
    normalize();
    return *this;
}

Rational& Rational::operator-=(const Rational& rhs) {
    num_ = num_ * rhs.den_ - rhs.num_ * den_;
    den_ *= rhs.den_;
    normalize();
    return *this;
}

Rational& Rational::operator*=(const Rational& rhs) {
    num_ *= rhs.num_;
    den_ *= rhs.den_;
    normalize();
    return *this;
}

Rational& Rational::operator/=(const Rational& rhs) {
    if (rhs.num_ == 0) throw Error(ErrorKind::InvalidArgument, "rational division by zero");
    num_ *= rhs.den_;
    den_ *= rhs.num_;
    normalize();
    return *this;
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    BigInt lhs = a.num_ * b.den_;
    BigInt rhs = b.num_ * a.den_;
    if (lhs < rhs) return std::strong_ordering::less;
    if (lhs > rhs) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

BigInt Rational::floor() const {
    BigInt q = num_ / den_;
    if (num_ < 0 && q * den_ != num_) --q;
    return q;
}

BigInt Rational::ceil() const {
    BigInt q = num_ / den_;
    if (num_ > 0 && q * den_ != num_) ++q;
    return q;
}

Rational Rational::pow(const Rational& base, unsigned exponent) {
    Rational result(1);
    Rational acc = base;
    unsigned e = exponent;
    while (e > 0) {
        if (e & 1u) result *= acc;
        e >>= 1u;
        if (e > 0) acc *= acc;
    }
    return result;
}

std::optional<Rational> Rational::parse(std::string_view text) {
    auto parse_int = [](std::string_view s) -> std::optional<BigInt> {
        if (s.empty()) return std::nullopt;
        bool neg = false;
        size_t i = 0;
        if (s[0] == '-') {
            neg = true;
            i = 1;
            if (s.size() == 1) return std::nullopt;
        }
        BigInt value = 0;
        for (; i < s.size(); ++i) {
            char c = s[i];
            if (c < '0' || c > '9') return std::nullopt;
            value = value * 10 + (c - '0');
        }
        return neg ? BigInt(-value) : value;
    };

    size_t slash = text.find('/');
    if (slash == std::string_view::npos) {
        auto n = parse_int(text);
        if (!n) return std::nullopt;
        return Rational(std::move(*n));
    }
    auto n = parse_int(text.substr(0, slash));
    auto d = parse_int(text.substr(slash + 1));
    if (!n || !d || *d == 0) return std::nullopt;
    if (*d < 0) return std::nullopt; // canonical input keeps the sign on the numerator
    return Rational(std::move(*n), std::move(*d));
}

std::string Rational::str() const {
    std::string s = num_.str();
    if (den_ != 1) {
        s += '/';
        s += den_.str();
    }
    return s;
}

std::string Rational::decimal(unsigned max_frac_digits) const {
    BigInt n = num_ < 0 ? BigInt(-num_) : num_;
    BigInt whole = n / den_;
    BigInt rem = n % den_;
    std::string out;
    if (num_ < 0) out += '-';
    out += whole.str();
    if (rem != 0 && max_frac_digits > 0) {
        std::string frac;
        for (unsigned i = 0; i < max_frac_digits && rem != 0; ++i) {
            rem *= 10;
            frac += char('0' + static_cast<int>(rem / den_));
            rem %= den_;
        }
        while (!frac.empty() && frac.back() == '0') frac.pop_back();
        if (!frac.empty()) {
            out += '.';
            out += frac;
        }
    }
    return out;
}

} // namespace cdsim
