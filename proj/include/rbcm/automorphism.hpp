#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rbcm/metacyclic.hpp"
#include "rbcm/two_adic.hpp"

namespace rbcm {

// sigma(x1,y1;x2,y2): alpha -> alpha^x1 beta^y1, beta -> alpha^x2 beta^y2.
struct AutomorphismParams {
    u64 x1 = 1;
    u64 y1 = 0;
    u64 x2 = 0;
    u64 y2 = 1;

    auto operator<=>(const AutomorphismParams&) const = default;

    static AutomorphismParams identity() { return {1, 0, 0, 1}; }

    GroupElement alpha_image() const { return {x1, y1}; }
    GroupElement beta_image() const { return {x2, y2}; }

    std::string to_string() const {
        return "sigma(" + std::to_string(x1) + "," + std::to_string(y1) + ";" + std::to_string(x2) + "," +
               std::to_string(y2) + ")";
    }
};

inline AutomorphismParams reduce_params(const MetacyclicGroup& G, i64 x1, i64 y1, i64 x2, i64 y2) {
    auto a = G.make(x1, y1), b = G.make(x2, y2);
    return {a.x, a.y, b.x, b.y};
}

inline AutomorphismParams parse_params(std::string_view text) {
    auto s = detail::trim(text);
    if (!s.starts_with("sigma(") || s.back() != ')') throw std::invalid_argument("expected sigma(x1,y1;x2,y2)");
    auto body = s.substr(6, s.size() - 7);
    auto semi = body.find(';');
    if (semi == std::string_view::npos) throw std::invalid_argument("expected sigma(x1,y1;x2,y2)");
    auto first = detail::parse_int_list(body.substr(0, semi));
    auto second = detail::parse_int_list(body.substr(semi + 1));
    if (first.size() != 2 || second.size() != 2) throw std::invalid_argument("expected sigma(x1,y1;x2,y2)");
    for (i64 v : {first[0], first[1], second[0], second[1]})
        if (v < 0) throw std::invalid_argument("sigma parameters must be nonnegative residues");
    return {static_cast<u64>(first[0]), static_cast<u64>(first[1]), static_cast<u64>(second[0]),
            static_cast<u64>(second[1])};
}

// Exponents of Lambda(2^a~, 2^b~; r) with c~ = deg2(r - 1), capped at a~.
struct TwoGroupShape {
    unsigned a = 0;
    unsigned b = 0;
    unsigned c = 0;
};

inline TwoGroupShape shape_of(const MetacyclicGroup& G) {
    if (!G.is_two_group()) throw std::invalid_argument("not a metacyclic 2-group: " + G.descriptor().to_string());
    TwoGroupShape s;
    s.a = detail::log2_exact(G.n());
    s.b = detail::log2_exact(G.m());
    u64 rm1 = (G.r() + G.n() - 1) % G.n();
    auto v = two_adic::deg2(static_cast<i64>(rm1));
    s.c = v.is_infinite() ? s.a : std::min(v.value(), s.a);
    return s;
}

namespace detail {
inline bool deg_at_least(u64 v, unsigned modexp, int k) {
    if (k <= 0) return true;
    auto d = two_adic::deg2_mod(static_cast<i64>(v), modexp);
    return d.is_infinite() || d.value() >= static_cast<unsigned>(k);
}
}  // namespace detail

struct ValidationReport {
    bool ok = true;
    std::vector<std::string> violations;
};

inline ValidationReport validate(const AutomorphismParams& p, const MetacyclicGroup& G) {
    auto sh = shape_of(G);
    if (sh.c < 2) throw std::invalid_argument("validate needs deg2(r-1) >= 2");
    ValidationReport rep;
    auto fail = [&](std::string what) {
        rep.ok = false;
        rep.violations.push_back(std::move(what));
    };
    if (!G.contains(p.alpha_image()) || !G.contains(p.beta_image())) fail("parameters not reduced");
    if (((p.x1 * p.y2 - p.x2 * p.y1) & 1u) == 0) fail("2 ∤ x1·y2 − x2·y1");
    const int a = static_cast<int>(sh.a), b = static_cast<int>(sh.b), c = static_cast<int>(sh.c);
    if (!detail::deg_at_least(p.y1, sh.b, b - c)) fail("deg2(y1) ≥ b−c");
    if (!detail::deg_at_least(p.x2, sh.a, a - b)) fail("deg2(x2) ≥ a−b");
    if (a - c > 0) {
        const unsigned e = static_cast<unsigned>(a - c);
        auto dy1 = two_adic::deg2_mod(static_cast<i64>(p.y1), sh.b);
        bool special = b == a - c && !dy1.is_infinite() && static_cast<int>(dy1.value()) + c == b;
        u64 target = special ? 1 + (u64{1} << (e - 1)) : 1;
        if (((p.y2 - target) & two_adic::mask(e)) != 0)
            fail(special ? "y2 ≡ 1+2^(a−c−1) mod 2^(a−c)" : "y2 ≡ 1 mod 2^(a−c)");
    }
    return rep;
}

// Evaluates the image of alpha^u beta^v term by term.
inline GroupElement apply(const AutomorphismParams& p, const MetacyclicGroup& G, const GroupElement& g) {
    const u64 n = G.n();
    u64 s1 = G.rpow(static_cast<i64>(p.y1));
    u64 s2 = G.rpow(static_cast<i64>(p.y2));
    u64 term1 = detail::mulmod(p.x1, detail::geom_pair(s1, g.x, n).first, n);
    u64 twist = detail::powmod(s1, g.x, n);
    u64 term2 = detail::mulmod(twist, detail::mulmod(p.x2, detail::geom_pair(s2, g.y, n).first, n), n);
    u64 y = (detail::mulmod(p.y1, g.x, G.m()) + detail::mulmod(p.y2, g.y, G.m())) % G.m();
    return {(term1 + term2) % n, y};
}

// outer o inner.
inline AutomorphismParams compose(const AutomorphismParams& outer, const AutomorphismParams& inner,
                                  const MetacyclicGroup& G) {
    auto a = apply(outer, G, inner.alpha_image());
    auto b = apply(outer, G, inner.beta_image());
    return {a.x, a.y, b.x, b.y};
}

// Reduced composition formulas, valid when c~ > b~ (then 2c~ > a~ follows from r^m = 1).
// At c~ = b~ the x2 term picks up 2^(c~-1) x2 (x2 - 1) y1', which need not vanish.
inline AutomorphismParams simplified_compose(const AutomorphismParams& outer, const AutomorphismParams& inner,
                                             const MetacyclicGroup& G) {
    auto sh = shape_of(G);
    if (sh.c <= sh.b && sh.c < sh.a) throw std::invalid_argument("simplified composition needs c > b");
    if (2 * sh.c < sh.a) throw std::logic_error("c > b without 2c >= a contradicts r^m = 1");
    const u64 n = G.n(), m = G.m();
    const u64 half = sh.c >= 1 ? (u64{1} << (sh.c - 1)) % n : 0;  // r' = 2^(c-1)
    const u64 x1 = inner.x1, x2 = inner.x2;
    u64 corr = detail::mulmod(detail::mulmod(half, outer.y1, n), detail::mulmod(x1, (x1 + n - 1) % n, n), n);
    u64 h1 = (detail::mulmod(outer.x1, (x1 + corr) % n, n) + detail::mulmod(outer.x2, inner.y1, n)) % n;
    u64 h2 = (detail::mulmod(outer.x1, x2, n) + detail::mulmod(outer.x2, inner.y2, n)) % n;
    u64 k1 = (detail::mulmod(outer.y1, x1, m) + detail::mulmod(outer.y2, inner.y1, m)) % m;
    u64 k2 = (detail::mulmod(outer.y1, x2, m) + detail::mulmod(outer.y2, inner.y2, m)) % m;
    return {h1, k1, h2, k2};
}

// Preimage of target under p, by scanning beta-exponents and solving for the alpha part.
inline std::optional<GroupElement> preimage(const AutomorphismParams& p, const MetacyclicGroup& G,
                                            const GroupElement& target) {
    const auto A = p.alpha_image(), B = p.beta_image();
    for (u64 v = 0; v < G.m(); ++v) {
        auto W = G.mul(target, G.inverse(G.pow(B, static_cast<i64>(v))));
        for (u64 u = 0; u < G.n(); ++u) {
            if ((detail::mulmod(A.y, u, G.m()) + G.m() - W.y) % G.m() != 0) continue;
            if (G.pow(A, static_cast<i64>(u)) == W) return GroupElement{u, v};
        }
    }
    return std::nullopt;
}

inline AutomorphismParams inverse(const AutomorphismParams& p, const MetacyclicGroup& G) {
    auto a = preimage(p, G, G.alpha());
    auto b = preimage(p, G, G.beta());
    if (!a || !b) throw std::invalid_argument("parameters are not invertible: " + p.to_string());
    AutomorphismParams inv{a->x, a->y, b->x, b->y};
    if (compose(p, inv, G) != AutomorphismParams::identity() ||
        compose(inv, p, G) != AutomorphismParams::identity())
        throw std::logic_error("inverse check failed for " + p.to_string());
    return inv;
}

// Whether the generator images satisfy the defining relations.
inline bool preserves_relations(const AutomorphismParams& p, const MetacyclicGroup& G) {
    auto A = p.alpha_image(), B = p.beta_image();
    if (!G.contains(A) || !G.contains(B)) return false;
    if (G.pow(A, static_cast<i64>(G.n())) != G.identity()) return false;
    if (G.pow(B, static_cast<i64>(G.m())) != G.identity()) return false;
    return G.mul(G.mul(B, A), G.inverse(B)) == G.pow(A, static_cast<i64>(G.r()));
}

// All tuples passing validate().
inline std::vector<AutomorphismParams> enumerate_params(const MetacyclicGroup& G) {
    auto sh = shape_of(G);
    const int a = static_cast<int>(sh.a), b = static_cast<int>(sh.b), c = static_cast<int>(sh.c);
    const u64 y1_step = u64{1} << std::max(0, b - c);
    const u64 x2_step = u64{1} << std::max(0, a - b);
    std::vector<AutomorphismParams> out;
    for (u64 y1 = 0; y1 < G.m(); y1 += y1_step)
        for (u64 x2 = 0; x2 < G.n(); x2 += x2_step)
            for (u64 y2 = 0; y2 < G.m(); ++y2)
                for (u64 x1 = 0; x1 < G.n(); ++x1) {
                    AutomorphismParams p{x1, y1, x2, y2};
                    if (validate(p, G).ok) out.push_back(p);
                }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// Restriction to <alpha^2, beta>

struct PlusRestriction {
    AutomorphismParams params;  // in the coordinates of plus_presentation(<a^2,b>)
    MetacyclicDescriptor plus_group;
};

// Throws when p moves <a^2,b>, which happens exactly when x2 is odd.
inline PlusRestriction restrict_to_plus(const AutomorphismParams& p, const MetacyclicGroup& G) {
    if (p.x2 % 2 != 0) throw std::invalid_argument("does not preserve <a^2,b>: 2 | p2 required, got p2 odd");
    auto pres = plus_presentation(G, Index2Tag::AlphaSqBeta);
    auto a2 = G.pow(p.alpha_image(), 2);
    return {{a2.x / 2, a2.y, p.x2 / 2, p.y2}, pres.sub};
}

// Liftability criterion: w1 even and deg2(w2 - 1) >= a - c, with w1 = y1, w2 = y2.
inline bool lifts_to_whole(const AutomorphismParams& plus, const DeltaDescriptor& D) {
    if (plus.y1 % 2 != 0) return false;
    return detail::deg_at_least((plus.y2 + (u64{1} << D.b) - 1) % (u64{1} << D.b), D.b,
                                static_cast<int>(D.a) - static_cast<int>(D.c));
}

// Search over the p-parameters for an automorphism of Delta restricting to plus.
inline std::optional<AutomorphismParams> find_lift(const AutomorphismParams& plus, const DeltaDescriptor& D) {
    MetacyclicGroup G(D.metacyclic());
    const u64 n = G.n(), m = G.m();
    if (plus.y1 % 2 != 0) return std::nullopt;
    for (u64 q1 : {plus.y1 / 2, plus.y1 / 2 + m / 2}) {
        for (u64 p1 = 1; p1 < n; p1 += 2) {
            AutomorphismParams tau{p1, q1 % m, (2 * plus.x2) % n, plus.y2};
            if (!validate(tau, G).ok) continue;
            if (restrict_to_plus(tau, G).params == plus) return tau;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Conjugating the normal form sigma(z,1;0,w) on <alpha^2, beta>

struct ConjugationResult {
    std::optional<std::pair<u64, u64>> zw;  // (z', w') on success
    std::vector<std::string> failed;        // which of conj-1 .. conj-4 fail otherwise
};

inline AutomorphismParams normal_form(u64 z, u64 w) { return {z, 1, 0, w}; }

inline ConjugationResult conjugate_normal_form(const AutomorphismParams& tau_plus, u64 z, u64 w,
                                               const DeltaDescriptor& D) {
    if (!lifts_to_whole(tau_plus, D)) throw std::invalid_argument("tau+ does not lift to an automorphism of Delta");
    if ((z & 3u) != 3u) throw std::invalid_argument("z must be -1 mod 4");
    const unsigned A = D.a - 1;
    const u64 nA = u64{1} << A, mB = u64{1} << D.b;
    const u64 r = (u64{1} << D.c) + 1;
    const u64 p1 = tau_plus.x1, q1 = tau_plus.y1, p2 = tau_plus.x2, q2 = tau_plus.y2;
    z %= nA;
    w %= mB;

    ConjugationResult out;
    const bool cond1 = detail::deg_at_least(p2, A, static_cast<int>(D.a) - 2);
    const i64 lhs2 = static_cast<i64>(p1) - static_cast<i64>(q2);
    const i64 rhs2 = (static_cast<i64>(z) - static_cast<i64>(w)) * static_cast<i64>(q1);
    const bool cond2 = detail::mod(lhs2 - rhs2, mB) == 0;
    const u64 zp = (z + p2) % nA, wp = w;
    if (cond1 && cond2) {
        out.zw = {zp, wp};
        return out;
    }
    // Report the raw conjugation identities at the candidate (z + p2, w).
    const u64 rq1 = detail::powmod(r, q1, nA);
    u64 c1l = (detail::mulmod(p1, detail::geom_pair(rq1, z, nA).first, nA) + p2) % nA;
    u64 c1r = detail::mulmod(zp, detail::geom_pair(r % nA, p1, nA).first, nA);
    if (c1l != c1r) out.failed.push_back("conj-1");
    if (detail::mulmod(p2, w, nA) != detail::mulmod(zp, p2, nA)) out.failed.push_back("conj-2");
    if ((detail::mulmod(q1, z, mB) + q2) % mB != (p1 + detail::mulmod(wp, q1, mB)) % mB)
        out.failed.push_back("conj-3");
    if (detail::mulmod(q2, w, mB) != (p2 + detail::mulmod(wp, q2, mB)) % mB) out.failed.push_back("conj-4");
    if (out.failed.empty()) out.failed.push_back(cond1 ? "conjugate-2" : "conjugate-1");
    return out;
}

}  // namespace rbcm
