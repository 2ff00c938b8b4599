#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sm {

using BigInt = boost::multiprecision::cpp_int;

/// Exact rational number, always kept in lowest terms with positive
/// denominator. All engine arithmetic goes through this type; there is no
/// floating-point fallback anywhere.
class Rat {
  public:
    Rat() : num_(0), den_(1) {}
    Rat(long long n) : num_(n), den_(1) {}
    Rat(const BigInt& n) : num_(n), den_(1) {}
    Rat(BigInt n, BigInt d) : num_(std::move(n)), den_(std::move(d)) { normalize(); }
    Rat(long long n, long long d) : num_(n), den_(d) { normalize(); }

    const BigInt& num() const { return num_; }
    const BigInt& den() const { return den_; }

    bool is_zero() const { return num_ == 0; }
    bool is_negative() const { return num_ < 0; }
    bool is_integer() const { return den_ == 1; }
    int sign() const { return num_ == 0 ? 0 : (num_ < 0 ? -1 : 1); }

    Rat operator-() const { return Rat(raw{}, -num_, den_); }

    friend Rat operator+(const Rat& a, const Rat& b) {
        return Rat(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Rat operator-(const Rat& a, const Rat& b) {
        return Rat(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Rat operator*(const Rat& a, const Rat& b) {
        return Rat(a.num_ * b.num_, a.den_ * b.den_);
    }
    friend Rat operator/(const Rat& a, const Rat& b) {
        if (b.num_ == 0) throw std::domain_error("rational division by zero");
        return Rat(a.num_ * b.den_, a.den_ * b.num_);
    }

    Rat& operator+=(const Rat& o) { return *this = *this + o; }
    Rat& operator-=(const Rat& o) { return *this = *this - o; }
    Rat& operator*=(const Rat& o) { return *this = *this * o; }
    Rat& operator/=(const Rat& o) { return *this = *this / o; }

    friend bool operator==(const Rat& a, const Rat& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rat& a, const Rat& b) { return !(a == b); }
    friend bool operator<(const Rat& a, const Rat& b) {
        return a.num_ * b.den_ < b.num_ * a.den_;
    }
    friend bool operator>(const Rat& a, const Rat& b) { return b < a; }
    friend bool operator<=(const Rat& a, const Rat& b) { return !(b < a); }
    friend bool operator>=(const Rat& a, const Rat& b) { return !(a < b); }

    Rat abs() const { return num_ < 0 ? -*this : *this; }

    /// Lowest-terms string. Integers print without the denominator.
    std::string str() const {
        std::string s = num_.str();
        if (den_ != 1) {
            s += '/';
            s += den_.str();
        }
        return s;
    }

    /// Always-slashed form used by the diagram log ("p/q", q >= 1).
    std::string str_pq() const { return num_.str() + "/" + den_.str(); }

    /// Parses "p", "p/q" or a finite decimal like "-2.375"; exact in all cases.
    static std::optional<Rat> parse(std::string_view text);

    /// Approximation for rendering only; never used in the dynamics.
    double to_double() const {
        return static_cast<double>(num_) / static_cast<double>(den_);
    }

    friend std::ostream& operator<<(std::ostream& os, const Rat& r) { return os << r.str(); }

  private:
    struct raw {};
    Rat(raw, BigInt n, BigInt d) : num_(std::move(n)), den_(std::move(d)) {}

    // Plain Euclid on the division operator. The binary gcd shipped with this
    // boost version can spin on exact-multiple inputs, so it is not used.
    static BigInt gcd_positive(BigInt a, BigInt b) {
        while (b != 0) {
            a %= b;
            a.swap(b);
        }
        return a;
    }

    void normalize() {
        if (den_ == 0) throw std::domain_error("rational with zero denominator");
        if (num_ == 0) {
            den_ = 1;
            return;
        }
        if (den_ < 0) {
            num_ = -num_;
            den_ = -den_;
        }
        BigInt g = gcd_positive(num_ < 0 ? BigInt(-num_) : num_, den_);
        if (g > 1) {
            num_ /= g;
            den_ /= g;
        }
    }

    BigInt num_;
    BigInt den_;
};

inline std::optional<Rat> Rat::parse(std::string_view text) {
    if (text.empty()) return std::nullopt;
    bool neg = false;
    size_t i = 0;
    if (text[0] == '-' || text[0] == '+') {
        neg = text[0] == '-';
        i = 1;
    }
    if (i >= text.size()) return std::nullopt;

    auto digits = [&](BigInt& out) -> bool {
        if (i >= text.size() || !isdigit(static_cast<unsigned char>(text[i]))) return false;
        out = 0;
        while (i < text.size() && isdigit(static_cast<unsigned char>(text[i]))) {
            out = out * 10 + (text[i] - '0');
            ++i;
        }
        return true;
    };

    BigInt whole;
    if (!digits(whole)) return std::nullopt;

    if (i < text.size() && text[i] == '/') {
        ++i;
        BigInt den;
        if (!digits(den) || i != text.size() || den == 0) return std::nullopt;
        Rat r(whole, den);
        return neg ? -r : r;
    }
    if (i < text.size() && text[i] == '.') {
        ++i;
        size_t start = i;
        BigInt frac;
        if (!digits(frac) || i != text.size()) return std::nullopt;
        size_t places = i - start;
        BigInt scale = 1;
        for (size_t p = 0; p < places; ++p) scale *= 10;
        Rat r(whole * scale + frac, scale);
        return neg ? -r : r;
    }
    if (i != text.size()) return std::nullopt;
    Rat r(whole, BigInt(1));
    return neg ? -r : r;
}

}  // namespace sm
