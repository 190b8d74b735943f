#pragma once

#include <algorithm>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rbcm/automorphism.hpp"
#include "rbcm/cayley_map.hpp"
#include "rbcm/metacyclic.hpp"
#include "rbcm/parallel.hpp"
#include "rbcm/two_adic.hpp"

namespace rbcm {

// A failed check, tagged with the identity or condition that broke.
class VerificationError : public std::runtime_error {
public:
    VerificationError(std::string tag, const std::string& detail)
        : std::runtime_error(tag + ": " + detail), tag_(std::move(tag)) {}
    const std::string& tag() const { return tag_; }

private:
    std::string tag_;
};

// ---------------------------------------------------------------------------
// Necessary conditions

struct NecessaryReport {
    DeltaDescriptor delta;
    bool existence = false;
    std::string reason;  // set when no map can exist
    unsigned t_valuation_bound = 0;  // deg2(t+1) must reach this
    std::vector<std::string> constraints;
};

inline unsigned t_valuation_bound(const DeltaDescriptor& D) { return std::max(D.b + 1, D.a - D.c + 2); }

inline NecessaryReport check_necessary(unsigned a, unsigned b, unsigned c) {
    DeltaDescriptor D{a, b, c};
    D.validate();
    NecessaryReport r;
    r.delta = D;
    r.existence = c > b;
    r.t_valuation_bound = t_valuation_bound(D);
    if (!r.existence) {
        r.reason = "c>b required";
        return r;
    }
    r.constraints = {"type I",
                     "ker pi = <a^2,b>",
                     "c > b",
                     "deg2(t+1) >= " + std::to_string(r.t_valuation_bound),
                     "ell = (t-1,d)/2"};
    return r;
}

// ---------------------------------------------------------------------------
// Solutions of the congruence system

struct ClassificationSolution {
    DeltaDescriptor delta;
    u64 z1 = 0, z = 0, w = 0;
    u64 u_tilde = 0, u1 = 0, v1 = 0, s = 0;
    u64 ell_prime = 0, t_prime = 0, t = 0;
    std::uint32_t d = 0, ell = 0;
    std::uint32_t t_residue = 0;  // t mod d read from the realized map
    u64 u1_closed_form = 0;
    unsigned fixed_point_iterations = 0;

    // Realized coordinates: phi+ = sigma(Z + 2^(c-2), 1; 2^(c-1), 1) on <a^2,b>.
    bool realizable = false;
    std::string realization_failure;
    u64 Z = 0;
    AutomorphismParams phi_plus;
    GroupElement omega_d, omega_1;
};

namespace classify_detail {

struct Frame {
    unsigned a, b, c;
    u64 A, B, r;  // A = 2^(a-1), B = 2^b, r = 1 + 2^c

    explicit Frame(const DeltaDescriptor& D)
        : a(D.a), b(D.b), c(D.c), A(u64{1} << (D.a - 1)), B(u64{1} << D.b), r((u64{1} << D.c) + 1) {}

    u64 modA(i64 v) const { return detail::mod(v, A); }
    u64 mulA(u64 x, u64 y) const { return detail::mulmod(x % A, y % A, A); }
    u64 mulB(u64 x, u64 y) const { return detail::mulmod(x % B, y % B, B); }
    u64 pow2(unsigned k) const { return u64{1} << k; }
};

inline u64 z_of(const Frame& F, u64 z1) {
    return F.modA(-1 + static_cast<i64>(F.pow2(F.c - 2)) + static_cast<i64>(F.pow2(F.c - 1) * z1));
}

inline u64 w_of(const Frame& F) { return detail::mod(1 - static_cast<i64>(F.pow2(F.c - 2)), F.B); }

// z [z]_r mod 2^(a-1).
inline u64 s_of(const Frame& F, u64 z) { return F.mulA(z, two_adic::geom_sum_raw(F.r, z, F.a - 1)); }

// (z^2 - 1) / 2^(c-1) as a residue mod 2^(a-c+1).
inline u64 q_of(const Frame& F, u64 z) {
    const u64 z2m1 = (two_adic::mul_mod(z, z, F.a) + two_adic::mask(F.a)) & two_adic::mask(F.a);
    auto v = two_adic::deg2_mod(static_cast<i64>(z2m1), F.a);
    if (!v.is_infinite() && v.value() < F.c - 1)
        throw std::logic_error("deg2(z^2 - 1) >= c - 1 fails for z = " + std::to_string(z));
    return z2m1 >> (F.c - 1);
}

struct Residues {
    u64 u_tilde, u1, v1, u1_closed_form;
};

inline u64 v1_of(const Frame& F, u64 u1, u64 lp, u64 w) {
    const u64 den = (1 + F.mulB(lp, w + 1)) % F.B;
    if (den % 2 == 0) throw std::logic_error("1 + l'(w+1) is not odd");
    const u64 inv = two_adic::inv_mod2_raw(den, F.b);
    const u64 num = (2 + F.mulB(lp, u1)) % F.B;
    return F.mulB((F.B - num) % F.B, inv);
}

inline u64 u_prime(const Frame& F, u64 z, u64 u1, u64 v1) {
    const u64 k = (z + 1 + F.mulA(F.pow2(F.c - 1), u1 + 2 * v1 + 1)) % F.A;
    return F.mulA(k, u1);
}

inline u64 v_prime(u64 u1, u64 v1, u64 w) { return u1 + (w + 1) * v1; }

// Tags of the failing conditions, empty when all four hold.
inline std::vector<std::string> condition_failures(const Frame& F, u64 z, u64 w, u64 s, u64 u_tilde, u64 u1, u64 v1,
                                                   u64 lp, u64 t) {
    std::vector<std::string> out;
    const u64 up = u_prime(F, z, u1, v1);
    const u64 vp = v_prime(u1, v1, w);
    if ((F.mulB(lp, vp) + v1 + 2) % F.B != 0) out.push_back("condition1");
    {
        u64 lhs = u1 % F.A;
        lhs = (lhs + F.mulA(lp, up)) % F.A;
        const u64 lpl = F.mulA(lp, F.modA(static_cast<i64>(lp) - 1));
        lhs = (lhs + F.A - F.mulA(lpl, F.mulA(z + 1, z + 1))) % F.A;
        const u64 coef = (1 + F.mulA(F.pow2(F.c - 1), F.modA(static_cast<i64>(v1) - 1))) % F.A;
        lhs = (lhs + F.mulA(coef, u_tilde)) % F.A;
        if (lhs != 0) out.push_back("condition2");
    }
    {
        const u64 lhs = (F.mulA(F.modA(static_cast<i64>(s) - 1), up + 1) + F.A - F.mulA(F.pow2(F.c - 1), vp)) % F.A;
        if (lhs != 0) out.push_back("condition3");
    }
    {
        auto v = two_adic::deg2(static_cast<i64>(t + 1));
        if (!v.is_infinite() && v.value() < F.a - F.c + 2) out.push_back("condition4");
    }
    return out;
}

inline Residues residues(const Frame& F, u64 z, u64 w, u64 s, u64 ell, u64 t) {
    if (ell % 2 == 0) throw std::logic_error("ell must be odd");
    const u64 lp = (ell - 1) / 2;
    const unsigned e = F.a - F.c;
    const u64 q = q_of(F, z);
    Residues out{};
    out.u_tilde = detail::mod(static_cast<i64>(ell) * (2 - static_cast<i64>(q)) - 4, u64{1} << e);
    if (out.u_tilde == 0) throw std::logic_error("no u~ in (0, 2^(a-c)) for z = " + std::to_string(z));
    out.u1_closed_form = detail::mod(
        static_cast<i64>(ell * q) - static_cast<i64>(lp * (F.pow2(F.c - 2) + 4)), u64{1} << e);
    // u1 and v1 jointly: v1 follows u1 through condition1, then conditions 2 and 3 pin u1.
    std::optional<u64> found;
    for (u64 u1 = 0; u1 < F.A && !found; ++u1) {
        const u64 v1 = v1_of(F, u1, lp, w);
        auto fails = condition_failures(F, z, w, s, out.u_tilde, u1, v1, lp, t);
        std::erase(fails, std::string("condition4"));
        if (fails.empty()) found = u1;
    }
    if (!found)
        throw std::logic_error("internal inconsistency: no u1 satisfies condition1-condition3 for z = " +
                               std::to_string(z));
    out.u1 = *found;
    out.v1 = v1_of(F, out.u1, lp, w);
    return out;
}

// Least t > 1 with t = residue (mod d) and deg2(t+1) >= bound.
inline std::optional<u64> lift_t(u64 residue, u64 d, unsigned bound) {
    const u64 step = u64{1} << bound;
    for (u64 t = residue % d; t <= d * step + residue; t += d) {
        if (t <= 1) continue;
        if ((t + 1) % step == 0) return t;
    }
    return std::nullopt;
}

}  // namespace classify_detail

// ---------------------------------------------------------------------------
// Structured construction of a map from phi+

struct BuiltMap {
    CayleyMap map;  // indexed with normalized ell
    Perm phi;
    AutomorphismParams phi_plus;
    GroupElement omega_d, omega_1;
    std::uint32_t d = 0, t_residue = 0, ell = 0;
};

// Exponent s with (phi+)^2 = (a^2 -> a^(2s), b -> b), if it has that shape.
inline std::optional<u64> plus_square_exponent(const MetacyclicGroup& P, const AutomorphismParams& p) {
    auto sq = compose(p, p, P);
    if (sq.y1 != 0 || sq.x2 != 0 || sq.y2 != 1 % P.m()) return std::nullopt;
    return sq.x1;
}

inline AutomorphismParams realizable_phi_plus(const DeltaDescriptor& D, u64 Z) {
    const u64 A = u64{1} << (D.a - 1), j = u64{1} << (D.c - 2);
    return {(Z + j) % A, 1, (2 * j) % A, 1};
}

// phi = phi+ on <a^2,b> and phi(h omega_d) = phi+(h) omega_1 on the other coset,
// with omega_d = a^u b for odd 0 < u < 2^(a-c). The first (u, t, omega_1) giving a
// t-balanced map with normalized type I offset is returned.
inline std::optional<BuiltMap> build_map(const DeltaDescriptor& D, const AutomorphismParams& phi_plus) {
    const MetacyclicGroup G(D.metacyclic());
    const auto pres = plus_presentation(G, Index2Tag::AlphaSqBeta);
    const MetacyclicGroup P(pres.sub);
    if (!validate(phi_plus, P).ok) return std::nullopt;
    const std::size_t N = G.order();
    const Index none = static_cast<Index>(N);

    Perm plus(N, none);
    for (Index i = 0; i < N; ++i) {
        GroupElement g = G.element(i);
        if (g.x % 2 == 0) plus[i] = G.index(pres.include(apply(phi_plus, P, pres.retract(g))));
    }
    const Index a2 = G.index({2, 0}), b1 = G.index({0, 1});
    std::vector<std::pair<Index, Index>> pows{{a2, b1}};
    for (;;) {
        auto [p, q] = pows.back();
        std::pair<Index, Index> nxt{plus[p], plus[q]};
        if (nxt == pows.front()) break;
        pows.push_back(nxt);
    }
    const std::size_t o = pows.size();

    auto conj = [&](Index w, Index h) { return G.mul_index(G.mul_index(w, h), G.inv_index(w)); };
    std::map<std::pair<Index, Index>, std::vector<Index>> by_conj;
    for (Index i = 0; i < N; ++i)
        if (G.element(i).x % 2 == 1) by_conj[{conj(i, a2), conj(i, b1)}].push_back(i);

    const u64 ubound = u64{1} << (D.a - D.c);
    for (u64 u = 1; u < ubound; u += 2) {
        const Index wd = G.index({u, 1});
        const Index wd_inv = G.inv_index(wd);
        for (std::size_t t = 0; t < o; ++t) {
            auto [h1, h2] = pows[(o - t) % o];
            auto it = by_conj.find({plus[conj(wd, h1)], plus[conj(wd, h2)]});
            if (it == by_conj.end()) continue;
            for (Index w1 : it->second) {
                auto phi_at = [&](Index x) {
                    return G.element(x).x % 2 == 0 ? plus[x] : G.mul_index(plus[G.mul_index(x, wd_inv)], w1);
                };
                std::vector<Index> orb{wd};
                for (Index cur = phi_at(wd); cur != wd; cur = phi_at(cur)) orb.push_back(cur);
                const std::size_t d = orb.size();
                if (plus[G.mul_index(wd, wd)] != G.mul_index(w1, orb[t % d])) continue;
                std::vector<GroupElement> omega;
                for (std::size_t p = 1; p <= d; ++p) omega.push_back(G.element(orb[p % d]));
                CayleyMap M(G, omega);
                if (M.defect()) continue;
                auto bd = balance_data(M);
                if (!bd || bd->type != MapType::I || bd->ell != normalized_ell(*bd)) continue;
                BuiltMap out;
                out.phi.resize(N);
                for (Index x = 0; x < N; ++x) out.phi[x] = phi_at(x);
                out.map = std::move(M);
                out.phi_plus = phi_plus;
                out.omega_d = G.element(wd);
                out.omega_1 = G.element(w1);
                out.d = bd->d;
                out.t_residue = bd->t;
                out.ell = bd->ell;
                return out;
            }
        }
    }
    return std::nullopt;
}

// Z = z (mod 2^(c-1)) whose phi+ squares to a^2 -> a^(2s); none when no such Z exists.
inline std::optional<u64> matching_Z(const DeltaDescriptor& D, u64 z, u64 s) {
    const MetacyclicGroup G(D.metacyclic());
    const MetacyclicGroup P(plus_presentation(G, Index2Tag::AlphaSqBeta).sub);
    const u64 A = u64{1} << (D.a - 1), step = u64{1} << (D.c - 1);
    for (u64 k = 0; k < (u64{1} << (D.a - D.c)); ++k) {
        const u64 Z = (z + k * step) % A;
        auto p = realizable_phi_plus(D, Z);
        if (!validate(p, P).ok) continue;
        if (plus_square_exponent(P, p) == s) return Z;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// solve

inline ClassificationSolution solve_one(const DeltaDescriptor& D, u64 z1) {
    using namespace classify_detail;
    const Frame F(D);
    ClassificationSolution sol;
    sol.delta = D;
    sol.z1 = z1;
    sol.z = z_of(F, z1);
    sol.w = w_of(F);
    if ((sol.z + sol.w) % F.B != 0) throw std::logic_error("z + w = 0 (mod 2^b) fails");
    if (q_of(F, sol.z) >= (u64{1} << (F.a - F.c + 1))) throw std::logic_error("q out of range");
    sol.s = s_of(F, sol.z);
    const unsigned bound = t_valuation_bound(D);

    std::optional<BuiltMap> built;
    if (auto Z = matching_Z(D, sol.z, sol.s)) {
        sol.Z = *Z;
        sol.phi_plus = realizable_phi_plus(D, *Z);
        built = build_map(D, sol.phi_plus);
        if (!built) sol.realization_failure = "no t-balanced map extends phi+ = " + sol.phi_plus.to_string();
    } else {
        sol.realization_failure = "no realizable phi+ squares to exponent s = " + std::to_string(sol.s);
    }
    sol.realizable = built.has_value();

    // Fixed point on (t, ell): seed, read back from the built map, recompute.
    u64 t = (u64{1} << bound) - 1, ell = 1;
    Residues res{};
    for (unsigned it = 1; it <= 4; ++it) {
        res = residues(F, sol.z, sol.w, sol.s, ell, t);
        sol.fixed_point_iterations = it;
        if (!built) break;
        auto lifted = lift_t(built->t_residue, built->d, bound);
        if (!lifted) {
            sol.realizable = false;
            sol.realization_failure = "t residue " + std::to_string(built->t_residue) + " mod " +
                                      std::to_string(built->d) + " has no lift with deg2(t+1) >= " +
                                      std::to_string(bound);
            break;
        }
        if (*lifted == t && built->ell == ell) break;
        t = *lifted;
        ell = built->ell;
        if (it == 4) throw std::logic_error("fixed point on (t, ell) did not stabilize");
    }
    sol.t = t;
    sol.ell = static_cast<std::uint32_t>(ell);
    sol.ell_prime = (ell - 1) / 2;
    sol.t_prime = (t + 1) / 2;
    sol.u_tilde = res.u_tilde;
    sol.u1 = res.u1;
    sol.v1 = res.v1;
    sol.u1_closed_form = res.u1_closed_form;
    if (built) {
        sol.d = built->d;
        sol.t_residue = built->t_residue;
        sol.omega_d = built->omega_d;
        sol.omega_1 = built->omega_1;
    }
    auto fails = condition_failures(F, sol.z, sol.w, sol.s, sol.u_tilde, sol.u1, sol.v1, sol.ell_prime, sol.t);
    if (!fails.empty()) throw std::logic_error("internal inconsistency: " + fails.front() + " fails after substitution");
    return sol;
}

// One solution per z1 in [0, 2^(a-c-1)), in increasing z1.
inline std::vector<ClassificationSolution> solve(unsigned a, unsigned b, unsigned c, unsigned workers = 0) {
    auto nec = check_necessary(a, b, c);
    if (!nec.existence) return {};
    const std::size_t count = std::size_t{1} << (a - c - 1);
    std::vector<ClassificationSolution> out(count);
    parallel_for(count, worker_count(workers), [&](std::size_t i) { out[i] = solve_one(nec.delta, i); });
    return out;
}

// Conditions 1-4 evaluated on the recorded residues.
inline std::vector<std::string> condition_failures(const ClassificationSolution& s) {
    classify_detail::Frame F(s.delta);
    return classify_detail::condition_failures(F, s.z, s.w, s.s, s.u_tilde, s.u1, s.v1, s.ell_prime, s.t);
}

// ---------------------------------------------------------------------------
// realize

struct RealizedRbcm {
    ClassificationSolution solution;
    CayleyMap map;
    SkewMorphism skew;
    BalanceData balance;
    GenusData genus;
    u64 pairs_checked = 0;
    bool exhaustive = true;
    u64 square_exponent = 0;        // (phi+)^2 : a^2 -> a^(2s) read off the skew-morphism
    bool plus_is_normal_form = false;  // phi+ = sigma(z,0;1,w)?
    std::vector<std::string> checks;
};

namespace classify_detail {

inline void require(bool ok, const std::string& tag, const std::string& detail = "violated") {
    if (!ok) throw VerificationError(tag, detail);
}

// inverse-1 and inverse-2 along the generator orbit.
inline void check_inverse_identities(const CayleyMap& M, const BalanceData& bd, const GeneratorOrbit& orb,
                                     u64 u_tilde) {
    const auto& G = M.group();
    const Frame F(DeltaDescriptor{detail::log2_exact(G.n()), detail::log2_exact(G.m()),
                                  shape_of(G).c});
    const u64 d = bd.d;
    auto rpow = [&](i64 e) { return G.rpow(e); };  // mod 2^a
    for (u64 i = 1; i <= d; ++i) {
        const u64 k = (bd.ell + u64{bd.t} * i) % d;
        const GroupElement pi = orb.partial[i], pk = orb.partial[k == 0 ? d : k];
        const u64 fi = pi.x / 2, fk = pk.x / 2;
        const u64 gi = pi.y, gk = pk.y;
        require((gk + gi + 2) % F.B == 0, "inverse-2", "index " + std::to_string(i));
        const u64 half = ((rpow(static_cast<i64>(gk)) + rpow(-1)) % (2 * F.A)) / 2;
        const u64 lhs = (fk + F.mulA(rpow(-static_cast<i64>(gi) - 1), fi) + F.mulA(half, u_tilde)) % F.A;
        require(lhs == 0, "inverse-1", "index " + std::to_string(i));
    }
}

}  // namespace classify_detail

inline RealizedRbcm realize(const ClassificationSolution& sol, const VerifyOptions& opt = {}) {
    using classify_detail::require;
    if (!sol.realizable) throw VerificationError("realization", sol.realization_failure);
    const DeltaDescriptor& D = sol.delta;
    auto built = build_map(D, sol.phi_plus);
    require(built.has_value(), "realization", "phi+ no longer extends");
    RealizedRbcm out;
    out.solution = sol;
    out.map = built->map;
    const auto& M = out.map;
    const auto& G = M.group();
    const std::size_t N = G.order();

    require(built->phi[G.index(sol.omega_d)] == G.index(sol.omega_1), "phi(omega_d) = omega_1");
    require(M.at(static_cast<i64>(M.valency())) == sol.omega_d, "omega_d = a^u b",
            "generator sequence does not end at the recorded omega_d");
    require(sol.omega_d.x > 0 && sol.omega_d.x < (u64{1} << (D.a - D.c)) && sol.omega_d.y == 1, "omega_d = a^u b");
    out.checks.push_back("phi(omega_d) = omega_1");

    auto chk = check_skew(G, built->phi, opt);
    if (!chk) {
        const auto& f = *chk.failure;
        throw VerificationError("skew law",
                                f.reason + " at eta=" + format_element(f.eta) + ", mu=" + format_element(f.mu));
    }
    out.skew = *chk.skew;
    out.pairs_checked = chk.pairs_checked;
    out.exhaustive = chk.exhaustive;
    out.checks.push_back(chk.exhaustive ? "skew law on all pairs" : "skew law on sampled pairs");

    auto reg = is_regular(M, opt);
    require(reg.has_value(), "regularity", "propagated map automorphism is not a skew-morphism");
    require(reg->phi == out.skew.phi, "regularity", "propagated automorphism differs from the constructed phi");
    out.checks.push_back("regular");

    auto bd = balance_data(M);
    require(bd.has_value(), "t-balance", "no valid t");
    out.balance = *bd;
    require(balance_violations(*bd).empty(), "t-balance", "balance identities fail");
    require(bd->t == sol.t_residue && bd->d == sol.d, "t-balance", "t or d differs from the solution");
    require(bd->type == MapType::I, "type I");
    require(bd->ell == sol.ell && bd->ell == normalized_ell(*bd), "ell normalization");
    require(sol.ell % 2 == 1, "ell normalization", "ell is even");
    require((sol.t + bd->d - bd->t) % bd->d == 0, "t-balance", "lifted t is not congruent to the residue");
    auto tv = two_adic::deg2(static_cast<i64>(sol.t + 1));
    require(tv.is_infinite() || tv.value() >= t_valuation_bound(D), "deg2(t+1) bound");
    out.checks.push_back("t-balanced, type I, normalized ell");

    auto structure = skew_structure_violations(M, out.skew, *bd, opt);
    require(structure.empty(), "skew structure", structure.empty() ? "" : structure.front());
    for (Index i = 0; i < N; ++i) {
        const bool plus = G.element(i).x % 2 == 0;
        require((out.skew.pi[i] % bd->d == 1 % bd->d) == plus, "ker pi = <a^2,b>", format_element(G.element(i)));
    }
    out.checks.push_back("ker pi = <a^2,b>, pi in {1,t}");

    // phi+ as recorded.
    const auto pres = plus_presentation(G, Index2Tag::AlphaSqBeta);
    const MetacyclicGroup P(pres.sub);
    require(out.skew.apply(G, {2, 0}) == pres.include(sol.phi_plus.alpha_image()) &&
                out.skew.apply(G, {0, 1}) == pres.include(sol.phi_plus.beta_image()),
            "phi+ parameters");
    auto sq_a = out.skew.apply(G, out.skew.apply(G, {2, 0}));
    auto sq_b = out.skew.apply(G, out.skew.apply(G, {0, 1}));
    require(sq_a.y == 0 && sq_b == GroupElement{0, 1}, "(phi+)^2 shape");
    out.square_exponent = sq_a.x / 2;
    require(out.square_exponent == sol.s, "(phi+)^2 = a^2 -> a^(2s)");
    out.plus_is_normal_form = sol.phi_plus == normal_form(sol.z, sol.w);
    out.checks.push_back("(phi+)^2 exponent matches s");

    try {
        auto orb = generator_orbit(M, *bd, out.skew);
        classify_detail::check_inverse_identities(M, *bd, orb, sol.omega_d.x);
    } catch (const InvariantViolation& e) {
        throw VerificationError(e.tag(), "index " + std::to_string(e.index()));
    }
    out.checks.push_back("inverse-1, inverse-2");

    auto fails = condition_failures(sol);
    require(fails.empty(), fails.empty() ? "conditions" : fails.front());
    out.checks.push_back("condition1-condition4");

    out.genus = genus(M);
    return out;
}

// Realize every solution, one per worker slot.
inline std::vector<RealizedRbcm> realize_all(const std::vector<ClassificationSolution>& sols, VerifyOptions opt = {}) {
    std::vector<RealizedRbcm> out(sols.size());
    const unsigned total = worker_count(opt.workers);
    const unsigned outer = std::max(1u, std::min<unsigned>(total, static_cast<unsigned>(sols.size())));
    opt.workers = std::max(1u, total / outer);
    parallel_for(sols.size(), outer, [&](std::size_t i) { out[i] = realize(sols[i], opt); });
    return out;
}

// ---------------------------------------------------------------------------
// Distinctness

struct PairCertificate {
    std::size_t i = 0, j = 0;
    bool calculus_distinct = false;  // s_j outside the reachable set of s_i
    bool search_isomorphic = false;
};

struct DistinctnessReport {
    std::vector<PairCertificate> pairs;
    bool all_distinct = true;  // by direct search
    bool certified_twice = true;  // every pair also separated by the exponent argument
};

// Exponents s' reachable from s by conjugating (phi+)^2 with an automorphism:
// sigma(a^2) = a^(2p) b^(2q) forces s' = [s]_(r^(2q)) mod 2^(a-1).
inline std::vector<u64> reachable_square_exponents(const DeltaDescriptor& D, u64 s) {
    const unsigned e = D.a - 1;
    const u64 r = (u64{1} << D.c) + 1;
    std::vector<u64> out;
    for (u64 q = 0; q < (u64{1} << (D.b - 1)); ++q)
        out.push_back(two_adic::geom_sum_raw(two_adic::pow_mod(r, 2 * q, e), s, e));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline DistinctnessReport distinct(const std::vector<RealizedRbcm>& maps, unsigned workers = 0) {
    DistinctnessReport rep;
    if (maps.size() < 2) return rep;
    const auto& G = maps.front().map.group();
    const auto candidates = isomorphism_candidates(G, G);
    const DeltaDescriptor& D = maps.front().solution.delta;
    for (std::size_t i = 0; i < maps.size(); ++i)
        for (std::size_t j = i + 1; j < maps.size(); ++j) rep.pairs.push_back({i, j});
    parallel_for(rep.pairs.size(), worker_count(workers), [&](std::size_t k) {
        auto& p = rep.pairs[k];
        const auto reach = reachable_square_exponents(D, maps[p.i].square_exponent);
        p.calculus_distinct = !std::binary_search(reach.begin(), reach.end(), maps[p.j].square_exponent);
        p.search_isomorphic = find_isomorphism(maps[p.i].map, maps[p.j].map, candidates).has_value();
    });
    for (const auto& p : rep.pairs) {
        if (p.calculus_distinct && p.search_isomorphic)
            throw std::logic_error("internal inconsistency: solutions " + std::to_string(p.i) + " and " +
                                   std::to_string(p.j) + " separated by exponents but isomorphic by search");
        rep.all_distinct = rep.all_distinct && !p.search_isomorphic;
        rep.certified_twice = rep.certified_twice && p.calculus_distinct;
    }
    return rep;
}

// z and z + 2^(a-2) give the same class: tau+ = sigma(1,0;2^(a-2),1) conjugates one
// normal form into the other, and the realized maps are isomorphic.
struct ShiftCertificate {
    u64 z = 0, z_shifted = 0;
    AutomorphismParams tau_plus, tau;
    bool conjugation_ok = false;
    bool lift_ok = false;
    bool isomorphic = false;
};

inline ShiftCertificate shift_certificate(const ClassificationSolution& sol) {
    const DeltaDescriptor& D = sol.delta;
    classify_detail::Frame F(D);
    ShiftCertificate c;
    c.z = sol.z;
    c.z_shifted = (sol.z + (u64{1} << (D.a - 2))) % F.A;
    c.tau_plus = {1, 0, (u64{1} << (D.a - 2)) % F.A, 1};
    auto conj = conjugate_normal_form(c.tau_plus, sol.z, sol.w, D);
    c.conjugation_ok = conj.zw && conj.zw->first == c.z_shifted && conj.zw->second == sol.w;
    if (c.conjugation_ok) {
        const MetacyclicGroup P(plus_presentation(MetacyclicGroup(D.metacyclic()), Index2Tag::AlphaSqBeta).sub);
        c.conjugation_ok = compose(compose(c.tau_plus, normal_form(sol.z, sol.w), P), inverse(c.tau_plus, P), P) ==
                           normal_form(c.z_shifted, sol.w);
    }
    if (auto lift = find_lift(c.tau_plus, D)) {
        c.tau = *lift;
        c.lift_ok = true;
    }
    if (!sol.realizable) return c;
    const u64 s2 = classify_detail::s_of(F, c.z_shifted);
    auto Z = matching_Z(D, c.z_shifted, s2);
    if (!Z) return c;
    auto other = build_map(D, realizable_phi_plus(D, *Z));
    auto mine = build_map(D, sol.phi_plus);
    if (other && mine) c.isomorphic = are_isomorphic(mine->map, other->map).has_value();
    return c;
}

// ---------------------------------------------------------------------------
// Quotient by <a^(2^c)>

inline AbelianRbcmProfile quotient_cross_check(const RealizedRbcm& R, const VerifyOptions& opt = {}) {
    const u64 p = u64{1} << R.solution.delta.c;
    QuotientMap q = quotient_map(R.map, R.skew, p, std::nullopt, opt);
    auto bd = balance_data(q.map);
    if (!bd) throw VerificationError("quotient profile", "quotient map is not t-balanced");
    auto pr = abelian_profile_check(q.map, q.skew, *bd);
    if (!pr.ok()) throw VerificationError("quotient profile", pr.failures.front());
    return pr;
}

// ---------------------------------------------------------------------------
// Whole pipeline

enum class VerifyLevel { Fast, Full };

struct ClassifyReport {
    NecessaryReport necessary;
    std::vector<ClassificationSolution> solutions;
    std::vector<std::optional<RealizedRbcm>> realized;
    std::vector<std::string> failures;  // one entry per failed check, "z1=k: ..."
    std::optional<DistinctnessReport> distinctness;
    std::vector<std::optional<AbelianRbcmProfile>> profiles;

    bool ok() const { return failures.empty(); }
};

inline ClassifyReport classify(unsigned a, unsigned b, unsigned c, VerifyLevel level, VerifyOptions opt = {}) {
    ClassifyReport rep;
    rep.necessary = check_necessary(a, b, c);
    if (!rep.necessary.existence) return rep;
    rep.solutions = solve(a, b, c, opt.workers);
    if (level == VerifyLevel::Fast) {
        opt.exhaustive_order = 0;
        opt.samples = std::min<u64>(opt.samples, u64{1} << 14);
    }
    rep.realized.resize(rep.solutions.size());
    rep.profiles.resize(rep.solutions.size());
    const unsigned total = worker_count(opt.workers);
    const unsigned outer = std::max(1u, std::min<unsigned>(total, static_cast<unsigned>(rep.solutions.size())));
    VerifyOptions inner = opt;
    inner.workers = std::max(1u, total / outer);
    std::vector<std::string> errors(rep.solutions.size());
    parallel_for(rep.solutions.size(), outer, [&](std::size_t i) {
        try {
            rep.realized[i] = realize(rep.solutions[i], inner);
            if (level == VerifyLevel::Full) rep.profiles[i] = quotient_cross_check(*rep.realized[i], inner);
        } catch (const std::exception& e) {
            errors[i] = "z1=" + std::to_string(rep.solutions[i].z1) + ": " + e.what();
        }
    });
    for (auto& e : errors)
        if (!e.empty()) rep.failures.push_back(e);
    if (level == VerifyLevel::Full && rep.failures.empty() && rep.solutions.size() >= 2) {
        std::vector<RealizedRbcm> maps;
        for (auto& r : rep.realized) maps.push_back(*r);
        rep.distinctness = distinct(maps, opt.workers);
        if (!rep.distinctness->all_distinct) rep.failures.push_back("two solutions are isomorphic");
        if (!rep.distinctness->certified_twice)
            rep.failures.push_back("exponent argument does not separate every pair");
    }
    return rep;
}

}  // namespace rbcm
