#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rbcm/two_adic.hpp"

namespace rbcm {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using Index = std::uint32_t;

namespace detail {

inline u64 mulmod(u64 a, u64 b, u64 n) {
    return n == 0 ? 0 : static_cast<u64>(static_cast<two_adic::u128>(a) * b % n);
}

inline u64 powmod(u64 s, u64 k, u64 n) {
    if (n == 1) return 0;
    u64 acc = 1;
    s %= n;
    while (k) {
        if (k & 1u) acc = mulmod(acc, s, n);
        s = mulmod(s, s, n);
        k >>= 1;
    }
    return acc;
}

// ([u]_s, s^u) modulo n.
inline std::pair<u64, u64> geom_pair(u64 s, u64 u, u64 n) {
    if (u == 0) return {0, 1 % n};
    if (u & 1u) {
        auto [sum, p] = geom_pair(s, u - 1, n);
        return {(1 + mulmod(s, sum, n)) % n, mulmod(p, s, n)};
    }
    auto [sum, p] = geom_pair(s, u / 2, n);
    return {mulmod(sum, (1 + p) % n, n), mulmod(p, p, n)};
}

inline u64 mod(i64 v, u64 n) {
    i64 r = v % static_cast<i64>(n);
    return static_cast<u64>(r < 0 ? r + static_cast<i64>(n) : r);
}

inline bool is_pow2(u64 v) { return v != 0 && (v & (v - 1)) == 0; }

inline unsigned log2_exact(u64 v) {
    if (!is_pow2(v)) throw std::invalid_argument("not a power of two: " + std::to_string(v));
    unsigned k = 0;
    while ((u64{1} << k) != v) ++k;
    return k;
}

}  // namespace detail

// Lambda(n, m; r) = < alpha, beta | alpha^n = beta^m = 1, beta alpha beta^-1 = alpha^r >.
struct MetacyclicDescriptor {
    u64 n = 1;
    u64 m = 1;
    u64 r = 0;

    bool operator==(const MetacyclicDescriptor&) const = default;

    void validate() const {
        if (n < 1 || m < 1) throw std::invalid_argument("group parameters n, m must be positive");
        if (detail::powmod(r, m, n) != 1 % n)
            throw std::invalid_argument("r^m = 1 (mod n) violated");
    }

    u64 order() const { return n * m; }

    std::string to_string() const {
        return "L(" + std::to_string(n) + "," + std::to_string(m) + "," + std::to_string(r) + ")";
    }
};

// The family Lambda(2^a, 2^b; 1 + 2^c) with max{2, a-b} <= c <= a-3 and b != c.
struct DeltaDescriptor {
    unsigned a = 0;
    unsigned b = 0;
    unsigned c = 0;

    bool operator==(const DeltaDescriptor&) const = default;

    // Empty when valid, otherwise the violated inequality.
    std::optional<std::string> violation() const {
        if (a == 0 || b == 0 || c == 0) return "a, b, c must be positive";
        if (a > 30 || b > 30) return "exponents above 30 are not supported";
        if (b == c) return "b≠c violated";
        if (c < 2) return "c ≥ 2 violated";
        if (static_cast<int>(c) < static_cast<int>(a) - static_cast<int>(b)) return "c ≥ a−b violated";
        if (static_cast<int>(c) > static_cast<int>(a) - 3) return "c ≤ a−3 violated";
        return std::nullopt;
    }

    void validate() const {
        if (auto v = violation()) throw std::invalid_argument(*v);
    }

    MetacyclicDescriptor metacyclic() const {
        return {u64{1} << a, u64{1} << b, (u64{1} << c) + 1};
    }

    std::string to_string() const {
        return "D(" + std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(c) + ")";
    }
};

// alpha^x beta^y in normal form.
struct GroupElement {
    u64 x = 0;
    u64 y = 0;
    auto operator<=>(const GroupElement&) const = default;
};

class MetacyclicGroup {
public:
    MetacyclicGroup() : MetacyclicGroup(MetacyclicDescriptor{1, 1, 0}) {}

    explicit MetacyclicGroup(MetacyclicDescriptor d) : desc_(d) {
        desc_.r %= desc_.n;
        desc_.validate();
        if (desc_.n > (u64{1} << 31) || desc_.m > (u64{1} << 31))
            throw std::invalid_argument("group parameters above 2^31 are not supported");
        rpow_.resize(desc_.m);
        u64 p = 1 % desc_.n;
        for (u64 y = 0; y < desc_.m; ++y) {
            rpow_[y] = p;
            p = detail::mulmod(p, desc_.r, desc_.n);
        }
    }

    const MetacyclicDescriptor& descriptor() const { return desc_; }
    u64 n() const { return desc_.n; }
    u64 m() const { return desc_.m; }
    u64 r() const { return desc_.r; }
    u64 order() const { return desc_.n * desc_.m; }

    bool operator==(const MetacyclicGroup& o) const { return desc_ == o.desc_; }

    bool is_abelian() const { return desc_.r == 1 % desc_.n; }
    bool is_two_group() const { return detail::is_pow2(desc_.n) && detail::is_pow2(desc_.m); }

    GroupElement identity() const { return {0, 0}; }
    GroupElement alpha() const { return {1 % desc_.n, 0}; }
    GroupElement beta() const { return {0, 1 % desc_.m}; }

    bool contains(const GroupElement& g) const { return g.x < desc_.n && g.y < desc_.m; }

    GroupElement make(i64 x, i64 y) const { return {detail::mod(x, desc_.n), detail::mod(y, desc_.m)}; }

    // r^y for any integer y.
    u64 rpow(i64 y) const { return rpow_[detail::mod(y, desc_.m)]; }

    GroupElement mul(const GroupElement& g, const GroupElement& h) const {
        require(g);
        require(h);
        return mul_unchecked(g, h);
    }

    GroupElement mul_unchecked(const GroupElement& g, const GroupElement& h) const {
        u64 y = g.y + h.y;
        if (y >= desc_.m) y -= desc_.m;
        return {(g.x + detail::mulmod(h.x, rpow_[g.y], desc_.n)) % desc_.n, y};
    }

    GroupElement inverse(const GroupElement& g) const {
        require(g);
        u64 y = (desc_.m - g.y) % desc_.m;
        u64 x = detail::mulmod((desc_.n - g.x) % desc_.n, rpow_[y], desc_.n);
        return {x, y};
    }

    GroupElement pow(const GroupElement& g, i64 u) const {
        require(g);
        if (u < 0) return pow(inverse(g), -u);
        auto uu = static_cast<u64>(u);
        u64 s = rpow_[g.y];
        u64 sum = detail::geom_pair(s, uu, desc_.n).first;
        return {detail::mulmod(g.x, sum, desc_.n), detail::mulmod(g.y, uu % desc_.m, desc_.m)};
    }

    GroupElement commutator(const GroupElement& g, const GroupElement& h) const {
        require(g);
        require(h);
        const i64 n = static_cast<i64>(desc_.n);
        i64 t1 = static_cast<i64>(detail::mulmod(g.x, (desc_.n + 1 - rpow_[h.y]) % desc_.n, desc_.n));
        i64 t2 = static_cast<i64>(detail::mulmod(h.x, (desc_.n + 1 - rpow_[g.y]) % desc_.n, desc_.n));
        return {static_cast<u64>(((t1 - t2) % n + n) % n), 0};
    }

    u64 element_order(const GroupElement& g) const {
        require(g);
        u64 k = desc_.m / std::gcd(g.y, desc_.m);
        GroupElement h = pow(g, static_cast<i64>(k));
        return k * (desc_.n / std::gcd(h.x, desc_.n));
    }

    Index index(const GroupElement& g) const { return static_cast<Index>(g.x * desc_.m + g.y); }
    GroupElement element(Index i) const { return {i / desc_.m, i % desc_.m}; }

    Index mul_index(Index i, Index j) const { return index(mul_unchecked(element(i), element(j))); }
    Index inv_index(Index i) const { return index(inverse(element(i))); }

    std::vector<GroupElement> elements() const {
        std::vector<GroupElement> out;
        out.reserve(order());
        for (u64 x = 0; x < desc_.n; ++x)
            for (u64 y = 0; y < desc_.m; ++y) out.push_back({x, y});
        return out;
    }

    // Subgroup generated by gens, as a sorted index list.
    std::vector<Index> closure(const std::vector<GroupElement>& gens) const {
        std::vector<char> seen(order(), 0);
        std::vector<Index> queue{index(identity())};
        seen[queue[0]] = 1;
        for (std::size_t i = 0; i < queue.size(); ++i) {
            GroupElement g = element(queue[i]);
            for (const auto& s : gens) {
                Index j = index(mul_unchecked(g, s));
                if (!seen[j]) {
                    seen[j] = 1;
                    queue.push_back(j);
                }
            }
        }
        std::sort(queue.begin(), queue.end());
        return queue;
    }

    bool generates(const std::vector<GroupElement>& gens) const { return closure(gens).size() == order(); }

private:
    void require(const GroupElement& g) const {
        if (!contains(g)) throw std::invalid_argument("element does not belong to " + desc_.to_string());
    }

    MetacyclicDescriptor desc_;
    std::vector<u64> rpow_;
};

// ---------------------------------------------------------------------------
// Index-2 subgroups

enum class Index2Tag { AlphaSqBeta, AlphaBetaSq, AlphaSqAlphaBeta };

inline std::string to_string(Index2Tag t) {
    switch (t) {
        case Index2Tag::AlphaSqBeta: return "<a^2,b>";
        case Index2Tag::AlphaBetaSq: return "<a,b^2>";
        case Index2Tag::AlphaSqAlphaBeta: return "<a^2,ab>";
    }
    return "?";
}

struct Subgroup {
    std::string name;
    std::vector<GroupElement> generators;
    std::function<bool(const GroupElement&)> contains;
    u64 index = 1;
    u64 order = 1;
};

// Kernel of the parity functional (x, y) -> ex*x + ey*y mod 2.
inline Subgroup parity_kernel(const MetacyclicGroup& G, unsigned ex, unsigned ey, std::string name,
                              std::vector<GroupElement> gens) {
    Subgroup s;
    s.name = std::move(name);
    s.generators = std::move(gens);
    s.contains = [ex, ey](const GroupElement& g) { return ((ex * g.x + ey * g.y) & 1u) == 0; };
    s.index = 2;
    s.order = G.order() / 2;
    return s;
}

inline std::vector<Subgroup> index2_subgroups(const MetacyclicGroup& G) {
    if (G.n() % 2 != 0 || G.m() % 2 != 0)
        throw std::invalid_argument("index2_subgroups needs even n and m");
    return {
        parity_kernel(G, 1, 0, to_string(Index2Tag::AlphaSqBeta), {G.pow(G.alpha(), 2), G.beta()}),
        parity_kernel(G, 0, 1, to_string(Index2Tag::AlphaBetaSq), {G.alpha(), G.pow(G.beta(), 2)}),
        parity_kernel(G, 1, 1, to_string(Index2Tag::AlphaSqAlphaBeta),
                      {G.pow(G.alpha(), 2), G.mul(G.alpha(), G.beta())}),
    };
}

// Every index-2 subgroup of any Lambda(n, m; r), from the parity functionals
// that respect the relations. Works for odd n or m as well.
inline std::vector<Subgroup> all_index2_subgroups(const MetacyclicGroup& G) {
    std::vector<Subgroup> out;
    for (unsigned ex = 0; ex < 2; ++ex) {
        for (unsigned ey = 0; ey < 2; ++ey) {
            if (ex == 0 && ey == 0) continue;
            if ((ex * G.n()) % 2 != 0 || (ey * G.m()) % 2 != 0) continue;
            if ((ex * (G.r() + G.n() - 1)) % 2 != 0 && G.n() % 2 == 0) continue;
            std::string name = ex && ey ? "<a^2,ab>" : ex ? "<a^2,b>" : "<a,b^2>";
            std::vector<GroupElement> gens;
            if (ex && ey) gens = {G.pow(G.alpha(), 2), G.mul(G.alpha(), G.beta())};
            else if (ex) gens = {G.pow(G.alpha(), 2), G.beta()};
            else gens = {G.alpha(), G.pow(G.beta(), 2)};
            out.push_back(parity_kernel(G, ex, ey, name, gens));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// The subgroups <a^2,b> and <a,b^2> as standalone metacyclic groups

struct PlusPresentation {
    MetacyclicDescriptor sub;
    Index2Tag tag;
    u64 x_scale = 1;  // alpha of the subgroup is alpha^x_scale of the parent
    u64 y_scale = 1;

    GroupElement include(const GroupElement& g) const { return {g.x * x_scale, g.y * y_scale}; }
    GroupElement retract(const GroupElement& g) const {
        if (g.x % x_scale != 0 || g.y % y_scale != 0)
            throw std::invalid_argument("element is outside the subgroup");
        return {g.x / x_scale, g.y / y_scale};
    }
};

inline PlusPresentation plus_presentation(const MetacyclicGroup& G, Index2Tag which) {
    if (G.n() % 2 != 0 || G.m() % 2 != 0) throw std::invalid_argument("plus_presentation needs even n and m");
    switch (which) {
        case Index2Tag::AlphaSqBeta:
            return {{G.n() / 2, G.m(), G.r() % (G.n() / 2)}, which, 2, 1};
        case Index2Tag::AlphaBetaSq:
            return {{G.n(), G.m() / 2, detail::mulmod(G.r(), G.r(), G.n())}, which, 1, 2};
        case Index2Tag::AlphaSqAlphaBeta:
            break;
    }
    throw std::invalid_argument("unsupported: <a^2,ab> has no presentation in these coordinates");
}

// ---------------------------------------------------------------------------
// Quotients by <alpha^p> or <alpha^p, beta^q>

struct Quotient {
    MetacyclicDescriptor target;
    u64 alpha_power;
    u64 beta_power;

    GroupElement project(const GroupElement& g) const { return {g.x % target.n, g.y % target.m}; }
};

// Kernel <alpha^p, beta^q>; q = m means the kernel is <alpha^p>.
inline Quotient quotient(const MetacyclicGroup& G, u64 p, std::optional<u64> q = std::nullopt) {
    u64 qq = q.value_or(G.m());
    if (p == 0 || G.n() % p != 0) throw std::invalid_argument("alpha power must divide n");
    if (qq == 0 || G.m() % qq != 0) throw std::invalid_argument("beta power must divide m");
    // alpha beta^q alpha^-1 = beta^q alpha^(r^-q - 1): in the kernel iff r^q = 1 mod p.
    if (detail::powmod(G.r(), qq, p) != 1 % p) throw std::invalid_argument("kernel is not normal");
    Quotient out{{p, qq, G.r() % p}, p, qq};
    out.target.validate();
    return out;
}

// ---------------------------------------------------------------------------
// Left-regular permutation representation

class PermRepresentation {
public:
    explicit PermRepresentation(const MetacyclicGroup& G) : G_(G) {
        if (G.order() > (u64{1} << 16)) throw std::invalid_argument("group too large for permutation representation");
    }

    std::vector<Index> of(const GroupElement& g) const {
        std::vector<Index> p(G_.order());
        for (Index h = 0; h < p.size(); ++h) p[h] = G_.index(G_.mul(g, G_.element(h)));
        return p;
    }

    // (p o q)(h) = p(q(h)).
    static std::vector<Index> compose(const std::vector<Index>& p, const std::vector<Index>& q) {
        std::vector<Index> out(q.size());
        for (std::size_t h = 0; h < q.size(); ++h) out[h] = p[q[h]];
        return out;
    }

    static std::size_t order(const std::vector<Index>& p) {
        std::size_t acc = 1;
        std::vector<char> seen(p.size(), 0);
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (seen[i]) continue;
            std::size_t len = 0;
            for (std::size_t j = i; !seen[j]; j = p[j]) {
                seen[j] = 1;
                ++len;
            }
            acc = std::lcm(acc, len);
        }
        return acc;
    }

    // The element whose permutation is p (read off the image of the identity).
    GroupElement element_of(const std::vector<Index>& p) const { return G_.element(p[G_.index(G_.identity())]); }

private:
    MetacyclicGroup G_;
};

// ---------------------------------------------------------------------------
// Text forms: "a^x b^y", "L(n,m,r)", "D(a,b,c)", "Zn", "ZnxZk"

inline std::string format_element(const GroupElement& g) {
    return "a^" + std::to_string(g.x) + " b^" + std::to_string(g.y);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

inline i64 parse_int(std::string_view s) {
    s = trim(s);
    i64 v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw std::invalid_argument("bad integer: '" + std::string(s) + "'");
    return v;
}

inline std::vector<i64> parse_int_list(std::string_view s) {
    std::vector<i64> out;
    while (true) {
        auto comma = s.find(',');
        out.push_back(parse_int(s.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

}  // namespace detail

// Accepts "a^x b^y", "a^x", "b^y", "a", "b", "a b", "1", "e"; exponents may be negative.
inline GroupElement parse_element(const MetacyclicGroup& G, std::string_view text) {
    auto s = detail::trim(text);
    if (s == "1" || s == "e" || s.empty()) return G.identity();
    i64 x = 0, y = 0;
    bool seen_a = false, seen_b = false;
    std::size_t pos = 0;
    while (pos < s.size()) {
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '*')) ++pos;
        if (pos >= s.size()) break;
        char sym = s[pos++];
        if (sym != 'a' && sym != 'b') throw std::invalid_argument("bad element syntax: '" + std::string(s) + "'");
        if ((sym == 'a' && (seen_a || seen_b)) || (sym == 'b' && seen_b))
            throw std::invalid_argument("element must be in normal form a^x b^y: '" + std::string(s) + "'");
        i64 e = 1;
        if (pos < s.size() && s[pos] == '^') {
            ++pos;
            std::size_t end = pos;
            if (end < s.size() && s[end] == '-') ++end;
            while (end < s.size() && s[end] >= '0' && s[end] <= '9') ++end;
            e = detail::parse_int(s.substr(pos, end - pos));
            pos = end;
        }
        if (sym == 'a') {
            x = e;
            seen_a = true;
        } else {
            y = e;
            seen_b = true;
        }
    }
    return G.make(x, y);
}

struct ParsedGroup {
    MetacyclicDescriptor descriptor;
    std::optional<DeltaDescriptor> delta;
    std::string text;
};

// "L(n,m,r)", "D(a,b,c)", "Zn", "ZnxZk" (the latter two as abelian Lambda groups).
inline ParsedGroup parse_group(std::string_view text) {
    auto s = detail::trim(text);
    auto args = [&](std::size_t open) {
        if (s.size() < open + 2 || s[open] != '(' || s.back() != ')')
            throw std::invalid_argument("bad group syntax: '" + std::string(s) + "'");
        return detail::parse_int_list(s.substr(open + 1, s.size() - open - 2));
    };
    ParsedGroup out;
    out.text = std::string(s);
    if (s.starts_with("L(")) {
        auto v = args(1);
        if (v.size() != 3 || v[0] <= 0 || v[1] <= 0 || v[2] < 0) throw std::invalid_argument("L(n,m,r) needs three nonnegative integers");
        out.descriptor = {static_cast<u64>(v[0]), static_cast<u64>(v[1]), static_cast<u64>(v[2]) % static_cast<u64>(v[0])};
    } else if (s.starts_with("D(")) {
        auto v = args(1);
        if (v.size() != 3 || v[0] <= 0 || v[1] <= 0 || v[2] <= 0) throw std::invalid_argument("D(a,b,c) needs three positive integers");
        DeltaDescriptor d{static_cast<unsigned>(v[0]), static_cast<unsigned>(v[1]), static_cast<unsigned>(v[2])};
        d.validate();
        out.delta = d;
        out.descriptor = d.metacyclic();
    } else if (s.starts_with("Z")) {
        auto x = s.find('x');
        if (x == std::string_view::npos) {
            i64 n = detail::parse_int(s.substr(1));
            if (n <= 0) throw std::invalid_argument("Zn needs n > 0");
            out.descriptor = {static_cast<u64>(n), 1, 1 % static_cast<u64>(n)};
        } else {
            if (x + 1 >= s.size() || s[x + 1] != 'Z') throw std::invalid_argument("bad group syntax: '" + std::string(s) + "'");
            i64 n = detail::parse_int(s.substr(1, x - 1));
            i64 m = detail::parse_int(s.substr(x + 2));
            if (n <= 0 || m <= 0) throw std::invalid_argument("ZnxZm needs positive orders");
            out.descriptor = {static_cast<u64>(n), static_cast<u64>(m), 1 % static_cast<u64>(n)};
        }
    } else {
        throw std::invalid_argument("unknown group syntax: '" + std::string(s) + "'");
    }
    out.descriptor.validate();
    return out;
}

inline std::string format_group(const MetacyclicDescriptor& d) { return d.to_string(); }

}  // namespace rbcm
