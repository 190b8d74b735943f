#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rbcm::two_adic {

using u128 = unsigned __int128;

constexpr unsigned kMaxExponent = 62;

inline constexpr std::uint64_t mask(unsigned e) {
    return e >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << e) - 1;
}

// Canonical representative of v modulo 2^e, for any signed v.
inline constexpr std::uint64_t reduce(std::int64_t v, unsigned e) {
    return static_cast<std::uint64_t>(v) & mask(e);
}

// 2-adic valuation; zero has valuation infinity.
class Valuation {
public:
    constexpr Valuation() : inf_(true) {}
    constexpr explicit Valuation(unsigned k) : k_(k), inf_(false) {}
    static constexpr Valuation infinity() { return Valuation{}; }

    constexpr bool is_infinite() const { return inf_; }
    constexpr unsigned value() const {
        if (inf_) throw std::logic_error("valuation is infinite");
        return k_;
    }

    constexpr bool operator==(const Valuation& o) const {
        return inf_ == o.inf_ && (inf_ || k_ == o.k_);
    }
    constexpr std::strong_ordering operator<=>(const Valuation& o) const {
        if (inf_ || o.inf_) return static_cast<int>(inf_) <=> static_cast<int>(o.inf_);
        return k_ <=> o.k_;
    }
    constexpr bool operator==(unsigned k) const { return !inf_ && k_ == k; }
    constexpr std::strong_ordering operator<=>(unsigned k) const {
        return *this <=> Valuation{k};
    }

    friend std::ostream& operator<<(std::ostream& os, const Valuation& v) {
        return v.inf_ ? os << "inf" : os << v.k_;
    }

private:
    unsigned k_ = 0;
    bool inf_;
};

inline constexpr Valuation deg2(std::int64_t u) {
    if (u == 0) return Valuation::infinity();
    auto x = static_cast<std::uint64_t>(u);
    unsigned k = 0;
    while ((x & 1u) == 0) {
        x >>= 1;
        ++k;
    }
    return Valuation{k};
}

// Valuation of u as an element of Z/2^e: infinite when u is 0 mod 2^e.
inline constexpr Valuation deg2_mod(std::int64_t u, unsigned e) {
    return deg2(static_cast<std::int64_t>(reduce(u, e)));
}

// Element of Z/2^e stored in [0, 2^e).
class Residue2 {
public:
    Residue2() = default;
    Residue2(std::int64_t v, unsigned e) : value_(reduce(v, e)), e_(e) {
        if (e > kMaxExponent) throw std::out_of_range("modulus exponent above 62");
    }

    std::uint64_t value() const { return value_; }
    unsigned exponent() const { return e_; }
    std::uint64_t modulus() const { return std::uint64_t{1} << e_; }

    Residue2 operator+(const Residue2& o) const { return {Raw{}, same(o), (value_ + o.value_) & mask(e_)}; }
    Residue2 operator-(const Residue2& o) const { return {Raw{}, same(o), (value_ - o.value_) & mask(e_)}; }
    Residue2 operator*(const Residue2& o) const {
        return {Raw{}, same(o), static_cast<std::uint64_t>(u128{value_} * o.value_) & mask(e_)};
    }
    Residue2 operator-() const { return {Raw{}, e_, (0 - value_) & mask(e_)}; }

    bool operator==(const Residue2&) const = default;
    bool operator==(std::int64_t v) const { return value_ == reduce(v, e_); }

    friend std::ostream& operator<<(std::ostream& os, const Residue2& r) {
        return os << r.value_ << " (mod 2^" << r.e_ << ")";
    }

private:
    struct Raw {};
    Residue2(Raw, unsigned e, std::uint64_t raw) : value_(raw), e_(e) {}
    unsigned same(const Residue2& o) const {
        if (o.e_ != e_) throw std::invalid_argument("residue moduli differ");
        return e_;
    }

    std::uint64_t value_ = 0;
    unsigned e_ = 0;
};

inline std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, unsigned e) {
    return static_cast<std::uint64_t>(u128{a} * b) & mask(e);
}

inline std::uint64_t pow_mod(std::uint64_t s, std::uint64_t k, unsigned e) {
    std::uint64_t acc = 1 & mask(e);
    s &= mask(e);
    while (k) {
        if (k & 1u) acc = mul_mod(acc, s, e);
        s = mul_mod(s, s, e);
        k >>= 1;
    }
    return acc;
}

namespace detail {
// Returns ([u]_s, s^u) mod 2^e by halving.
inline std::pair<std::uint64_t, std::uint64_t> geom_pair(std::uint64_t s, std::uint64_t u, unsigned e) {
    if (u == 0) return {0, 1 & mask(e)};
    if (u & 1u) {
        auto [sum, p] = geom_pair(s, u - 1, e);
        return {(1 + mul_mod(s, sum, e)) & mask(e), mul_mod(p, s, e)};
    }
    auto [sum, p] = geom_pair(s, u / 2, e);
    return {mul_mod(sum, 1 + p, e), mul_mod(p, p, e)};
}
}  // namespace detail

// [u]_s = 1 + s + ... + s^(u-1) mod 2^e.
inline Residue2 geom_sum(std::int64_t s, std::uint64_t u, unsigned e) {
    return Residue2{static_cast<std::int64_t>(detail::geom_pair(reduce(s, e), u, e).first), e};
}

inline std::uint64_t geom_sum_raw(std::uint64_t s, std::uint64_t u, unsigned e) {
    return detail::geom_pair(s & mask(e), u, e).first;
}

inline std::uint64_t inv_mod2_raw(std::uint64_t u, unsigned e) {
    if ((u & 1u) == 0) throw std::domain_error("not a unit");
    std::uint64_t v = u;  // correct to 3 bits
    for (int i = 0; i < 6; ++i) v *= 2 - u * v;
    return v & mask(e);
}

inline Residue2 inv_mod2(std::int64_t u, unsigned e) {
    return Residue2{static_cast<std::int64_t>(inv_mod2_raw(static_cast<std::uint64_t>(u), e)), e};
}

// All x in [0, 2^e) with A x = B (mod 2^e).
inline std::vector<Residue2> solve_linear(std::int64_t A, std::int64_t B, unsigned e) {
    std::uint64_t a = reduce(A, e), b = reduce(B, e);
    unsigned g = a == 0 ? e : std::min(deg2(static_cast<std::int64_t>(a)).value(), e);
    if (b != 0 && deg2(static_cast<std::int64_t>(b)).value() < g) return {};
    if (g > 20) throw std::length_error("solve_linear: more than 2^20 solutions");
    unsigned rest = e - g;
    std::uint64_t x0 = 0;
    if (rest > 0) x0 = mul_mod(b >> g, inv_mod2_raw(a >> g, rest), rest);
    std::vector<Residue2> out;
    out.reserve(std::size_t{1} << g);
    for (std::uint64_t k = 0; k < (std::uint64_t{1} << g); ++k)
        out.emplace_back(static_cast<std::int64_t>(x0 + (k << rest)), e);
    return out;
}

// Lifts a square root of h from 2^e to 2^target. The plain step
// s + 2^(K-1) u is kept when it reaches the next modulus; otherwise the
// step is divided by the current root, which always does.
inline Residue2 sqrt_lift(std::int64_t s, std::int64_t h, unsigned e, unsigned target) {
    if (e < 3) throw std::invalid_argument("sqrt_lift: base exponent below 3");
    if (target <= e) throw std::invalid_argument("sqrt_lift: target exponent must exceed base");
    if (target > kMaxExponent - 2) throw std::out_of_range("sqrt_lift: target exponent too large");
    const unsigned work = target + 2;
    const std::uint64_t hw = reduce(h, work);
    std::uint64_t cur = reduce(s, work);
    auto square_gap = [&](std::uint64_t x) { return (hw - mul_mod(x, x, work)) & mask(work); };
    if (square_gap(cur) & mask(e)) throw std::invalid_argument("not a square root at base level");
    if ((cur & 1u) == 0) throw std::invalid_argument("sqrt_lift: root must be odd");

    unsigned known = e;  // cur^2 = h mod 2^known
    unsigned next = 2 * (e - 1);
    while ((square_gap(cur) & mask(target)) != 0) {
        const unsigned step = known - 1;
        const std::uint64_t u = square_gap(cur) >> known;
        std::uint64_t plain = (cur + (u << step)) & mask(work);
        if ((square_gap(plain) & mask(next)) == 0) {
            cur = plain;
        } else {
            std::uint64_t adj = mul_mod(u, inv_mod2_raw(cur, work), work);
            cur = (cur + (adj << step)) & mask(work);
        }
        known = next;
        next += e - 1;
        if (known > work) known = work;
    }
    return Residue2{static_cast<std::int64_t>(cur & mask(target)), target};
}

}  // namespace rbcm::two_adic
