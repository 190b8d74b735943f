#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "rbcm/automorphism.hpp"
#include "rbcm/homomorphism.hpp"
#include "rbcm/metacyclic.hpp"
#include "rbcm/parallel.hpp"

namespace rbcm {

using Perm = std::vector<Index>;

// ---------------------------------------------------------------------------
// Maps

// CM(G, Omega, rho) with rho the cyclic shift omega_i -> omega_{i+1}.
// omega[p] holds omega_{p+1}; omega_d is omega.back().
class CayleyMap {
public:
    CayleyMap() = default;
    CayleyMap(MetacyclicGroup group, std::vector<GroupElement> omega)
        : group_(std::move(group)), omega_(std::move(omega)) {}

    const MetacyclicGroup& group() const { return group_; }
    const std::vector<GroupElement>& omega() const { return omega_; }
    std::size_t valency() const { return omega_.size(); }

    // omega_i for any integer i (indices are taken mod d).
    const GroupElement& at(i64 i) const {
        const i64 d = static_cast<i64>(omega_.size());
        return omega_[static_cast<std::size_t>(((i - 1) % d + d) % d)];
    }

    std::optional<std::size_t> position(const GroupElement& g) const {
        auto it = std::find(omega_.begin(), omega_.end(), g);
        if (it == omega_.end()) return std::nullopt;
        return static_cast<std::size_t>(it - omega_.begin());
    }

    // Position of omega[p]^-1; requires a valid map.
    std::vector<std::size_t> inverse_positions() const {
        std::vector<std::size_t> out(omega_.size());
        for (std::size_t p = 0; p < omega_.size(); ++p) {
            auto q = position(group_.inverse(omega_[p]));
            if (!q) throw std::invalid_argument("generating set is not closed under inverses");
            out[p] = *q;
        }
        return out;
    }

    std::optional<std::string> defect() const {
        if (omega_.empty()) return "empty generating set";
        for (const auto& g : omega_)
            if (!group_.contains(g)) return "generator " + format_element(g) + " is not a group element";
        for (const auto& g : omega_)
            if (g == group_.identity()) return "identity in generating set";
        auto sorted = omega_;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return "repeated generator";
        for (const auto& g : omega_)
            if (!position(group_.inverse(g))) return "not closed under inverses: " + format_element(g);
        if (!group_.generates(omega_)) return "generating set does not generate the group";
        return std::nullopt;
    }
    void require_valid() const {
        if (auto e = defect()) throw std::invalid_argument("invalid Cayley map: " + *e);
    }

    // Same map with omega_i renamed omega_{i-k}.
    CayleyMap shifted(i64 k) const {
        std::vector<GroupElement> out(omega_.size());
        for (std::size_t p = 0; p < omega_.size(); ++p) out[p] = at(static_cast<i64>(p) + 1 + k);
        return {group_, std::move(out)};
    }

    bool operator==(const CayleyMap& o) const { return group_ == o.group_ && omega_ == o.omega_; }

private:
    MetacyclicGroup group_;
    std::vector<GroupElement> omega_;
};

// ---------------------------------------------------------------------------
// Skew-morphisms

struct SkewMorphism {
    Perm phi;
    std::vector<std::uint32_t> pi;  // values in 1..period
    std::uint32_t period = 1;       // order of phi

    GroupElement apply(const MetacyclicGroup& G, const GroupElement& g) const { return G.element(phi[G.index(g)]); }
    std::uint32_t power(const MetacyclicGroup& G, const GroupElement& g) const { return pi[G.index(g)]; }
};

struct SkewFailure {
    GroupElement eta;
    GroupElement mu;
    std::string reason;
};

struct SkewCheck {
    std::optional<SkewMorphism> skew;
    std::optional<SkewFailure> failure;
    bool exhaustive = true;
    u64 pairs_checked = 0;

    explicit operator bool() const { return skew.has_value(); }
};

struct VerifyOptions {
    unsigned workers = 0;
    u64 seed = 20240229;
    u64 exhaustive_order = u64{1} << 13;  // all pairs up to this group order
    u64 samples = u64{1} << 20;           // random pairs above it
};

namespace detail {

inline std::optional<std::string> permutation_defect(const MetacyclicGroup& G, const Perm& phi) {
    if (phi.size() != G.order()) return "permutation has wrong size";
    std::vector<char> seen(phi.size(), 0);
    for (Index v : phi) {
        if (v >= phi.size() || seen[v]) return "not a bijection";
        seen[v] = 1;
    }
    if (phi[G.index(G.identity())] != G.index(G.identity())) return "does not fix the identity";
    return std::nullopt;
}

inline std::vector<Perm> powers_of(const Perm& phi, std::size_t period) {
    std::vector<Perm> pw(period + 1);
    pw[0].resize(phi.size());
    std::iota(pw[0].begin(), pw[0].end(), Index{0});
    for (std::size_t k = 1; k <= period; ++k) {
        pw[k].resize(phi.size());
        for (std::size_t i = 0; i < phi.size(); ++i) pw[k][i] = phi[pw[k - 1][i]];
    }
    return pw;
}

}  // namespace detail

// Checks phi(eta mu) = phi(eta) phi^pi(eta)(mu). Derives pi when `given_pi` is
// absent (least k that works for every mu); otherwise checks the given table.
inline SkewCheck check_skew(const MetacyclicGroup& G, const Perm& phi, const VerifyOptions& opt = {},
                            const std::vector<std::uint32_t>* given_pi = nullptr) {
    SkewCheck out;
    const GroupElement one = G.identity();
    if (auto e = detail::permutation_defect(G, phi)) {
        out.failure = SkewFailure{one, one, *e};
        return out;
    }
    const std::size_t N = phi.size();
    const std::size_t period = PermRepresentation::order(phi);
    if (period * N > (std::size_t{1} << 28)) throw std::length_error("check_skew: phi has too large an order");
    if (given_pi && given_pi->size() != N) {
        out.failure = SkewFailure{one, one, "power table has wrong size"};
        return out;
    }
    const auto pw = detail::powers_of(phi, period);

    out.exhaustive = G.order() <= opt.exhaustive_order;
    std::vector<std::uint32_t> pi(N, 0);
    const std::vector<Index> probes{G.index(G.alpha()), G.index(G.beta())};

    // Sample pairs are fixed up front so the result does not depend on workers.
    std::vector<std::pair<Index, Index>> samples;
    if (!out.exhaustive) {
        std::mt19937_64 rng(opt.seed);
        std::uniform_int_distribution<Index> pick(0, static_cast<Index>(N - 1));
        samples.resize(std::max<u64>(opt.samples, 1000000));
        for (auto& s : samples) s = {pick(rng), pick(rng)};
        std::sort(samples.begin(), samples.end());
    }

    const unsigned workers = N < 512 ? 1u : worker_count(opt.workers);
    std::vector<std::optional<std::pair<Index, SkewFailure>>> first_bad(std::max(1u, workers));

    auto holds = [&](Index eta, std::size_t k, Index mu) {
        Index lhs = phi[G.mul_index(eta, mu)];
        Index rhs = G.mul_index(phi[eta], pw[k][mu]);
        return lhs == rhs;
    };

    parallel_chunks(N, workers, [&](std::size_t lo, std::size_t hi, unsigned w) {
        for (std::size_t e = lo; e < hi; ++e) {
            const Index eta = static_cast<Index>(e);
            auto fail = [&](Index mu, std::string why) {
                if (!first_bad[w]) first_bad[w] = {eta, SkewFailure{G.element(eta), G.element(mu), std::move(why)}};
            };
            std::vector<std::size_t> cand;
            if (given_pi) {
                std::uint32_t k = (*given_pi)[eta];
                if (k < 1 || k > period) {
                    fail(eta, "power value out of range");
                    break;
                }
                cand.push_back(k);
            } else {
                for (std::size_t k = 1; k <= period; ++k) cand.push_back(k);
            }
            // Cheap filter on the group generators.
            Index probe_fail = probes[0];
            for (Index mu : probes) {
                std::vector<std::size_t> keep;
                for (auto k : cand)
                    if (holds(eta, k, mu)) keep.push_back(k);
                if (keep.empty()) {
                    probe_fail = mu;
                    cand.clear();
                    break;
                }
                cand.swap(keep);
            }
            if (cand.empty()) {
                fail(probe_fail, "no power satisfies the skew law");
                break;
            }
            std::optional<std::size_t> chosen;
            Index witness = 0;
            if (out.exhaustive) {
                for (auto k : cand) {
                    Index bad = 0;
                    bool ok = true;
                    for (Index mu = 0; mu < N; ++mu)
                        if (!holds(eta, k, mu)) {
                            ok = false;
                            bad = mu;
                            break;
                        }
                    if (ok) {
                        chosen = k;
                        break;
                    }
                    if (k == cand.front()) witness = bad;
                }
            } else {
                chosen = cand.front();
            }
            if (!chosen) {
                fail(witness, "skew law fails");
                break;
            }
            pi[eta] = static_cast<std::uint32_t>(*chosen);
        }
    });
    for (const auto& fb : first_bad)
        if (fb && (!out.failure || G.index(fb->second.eta) < G.index(out.failure->eta))) out.failure = fb->second;
    if (out.failure) return out;

    if (out.exhaustive) {
        out.pairs_checked = u64{N} * N;
    } else {
        for (auto [eta, mu] : samples)
            if (!holds(eta, pi[eta], mu)) {
                out.failure = SkewFailure{G.element(eta), G.element(mu), "skew law fails on sampled pair"};
                return out;
            }
        out.pairs_checked = samples.size();
    }
    out.skew = SkewMorphism{phi, std::move(pi), static_cast<std::uint32_t>(period)};
    return out;
}

// phi determined by its restriction rho and a power table:
// phi(v omega_i) = phi(v) omega_{i + pi(v)}. Conflicts give a witness (v, omega_i).
inline std::pair<std::optional<Perm>, std::optional<SkewFailure>> phi_from_powers(
    const CayleyMap& M, const std::vector<std::uint32_t>& pi) {
    const auto& G = M.group();
    const std::size_t N = G.order(), d = M.valency();
    if (pi.size() != N) return {std::nullopt, SkewFailure{G.identity(), G.identity(), "power table has wrong size"}};
    const Index none = static_cast<Index>(N);
    Perm phi(N, none);
    phi[G.index(G.identity())] = G.index(G.identity());
    std::vector<Index> queue{G.index(G.identity())};
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        Index v = queue[qi];
        GroupElement fv = G.element(phi[v]);
        for (std::size_t p = 0; p < d; ++p) {
            Index w = G.index(G.mul_unchecked(G.element(v), M.omega()[p]));
            Index fw = G.index(G.mul_unchecked(fv, M.omega()[(p + pi[v]) % d]));
            if (phi[w] == none) {
                phi[w] = fw;
                queue.push_back(w);
            } else if (phi[w] != fw) {
                return {std::nullopt, SkewFailure{G.element(v), M.omega()[p], "power table is inconsistent"}};
            }
        }
    }
    if (queue.size() != N) return {std::nullopt, SkewFailure{G.identity(), G.identity(), "map is not connected"}};
    return {std::move(phi), std::nullopt};
}

// ---------------------------------------------------------------------------
// Regularity

namespace detail {

// Extends the dart map (1, p) -> (v0, p + off0) across the graph.
// phi(v omega_p) = phi(v) omega_{p + off(v)}, off(v omega_p) = inv(p + off(v)) - inv(p).
inline std::optional<Perm> propagate(const CayleyMap& M, const std::vector<std::size_t>& inv, Index v0,
                                     std::size_t off0) {
    const auto& G = M.group();
    const std::size_t N = G.order(), d = M.valency();
    const Index none = static_cast<Index>(N);
    Perm phi(N, none);
    std::vector<std::size_t> off(N, 0);
    std::vector<char> used(N, 0);
    const Index one = G.index(G.identity());
    phi[one] = v0;
    off[one] = off0 % d;
    used[v0] = 1;
    std::vector<Index> queue{one};
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        Index v = queue[qi];
        GroupElement gv = G.element(v), fv = G.element(phi[v]);
        for (std::size_t p = 0; p < d; ++p) {
            std::size_t q = (p + off[v]) % d;
            Index w = G.index(G.mul_unchecked(gv, M.omega()[p]));
            Index fw = G.index(G.mul_unchecked(fv, M.omega()[q]));
            std::size_t ow = (inv[q] + d - inv[p]) % d;
            if (phi[w] == none) {
                if (used[fw]) return std::nullopt;
                phi[w] = fw;
                off[w] = ow;
                used[fw] = 1;
                queue.push_back(w);
            } else if (phi[w] != fw || off[w] != ow) {
                return std::nullopt;
            }
        }
    }
    if (queue.size() != N) return std::nullopt;
    return phi;
}

}  // namespace detail

// The map automorphism fixing 1 and turning (1, omega_1) into (1, omega_2),
// propagated over all arcs; regular iff it is consistent and skew.
inline std::optional<SkewMorphism> is_regular(const CayleyMap& M, const VerifyOptions& opt = {}) {
    if (M.defect()) return std::nullopt;
    const auto inv = M.inverse_positions();
    auto phi = detail::propagate(M, inv, M.group().index(M.group().identity()), 1);
    if (!phi) return std::nullopt;
    auto res = check_skew(M.group(), *phi, opt);
    if (!res.skew) return std::nullopt;
    return res.skew;
}

// Arc-transitivity straight from the definition: every dart must be the
// image of (1, omega_1) under some rotation-preserving automorphism.
inline bool is_regular_by_definition(const CayleyMap& M) {
    if (M.defect()) return false;
    const auto& G = M.group();
    const auto inv = M.inverse_positions();
    for (Index v = 0; v < G.order(); ++v)
        for (std::size_t s = 0; s < M.valency(); ++s)
            if (!detail::propagate(M, inv, v, s)) return false;
    return true;
}

// Exhaustive search over every bijection fixing 1 that extends rho.
// Feasible only for tiny groups.
inline bool is_regular_by_bijection_search(const CayleyMap& M) {
    if (M.defect()) return false;
    const auto& G = M.group();
    const std::size_t N = G.order(), d = M.valency();
    if (N > 10) throw std::length_error("bijection search limited to groups of order 10");
    const Index none = static_cast<Index>(N);
    Perm phi(N, none);
    std::vector<char> used(N, 0);
    const Index one = G.index(G.identity());
    phi[one] = one;
    used[one] = 1;
    for (std::size_t p = 0; p < d; ++p) {
        Index a = G.index(M.omega()[p]), b = G.index(M.omega()[(p + 1) % d]);
        phi[a] = b;
        used[b] = 1;
    }
    std::vector<Index> free_src, free_dst;
    for (Index i = 0; i < N; ++i) {
        if (phi[i] == none) free_src.push_back(i);
        if (!used[i]) free_dst.push_back(i);
    }
    std::sort(free_dst.begin(), free_dst.end());
    VerifyOptions opt;
    opt.workers = 1;
    do {
        for (std::size_t i = 0; i < free_src.size(); ++i) phi[free_src[i]] = free_dst[i];
        if (check_skew(G, phi, opt).skew) return true;
    } while (std::next_permutation(free_dst.begin(), free_dst.end()));
    return false;
}

// ---------------------------------------------------------------------------
// t-balance

enum class MapType { I, II };

inline std::string to_string(MapType t) { return t == MapType::I ? "I" : "II"; }

struct BalanceData {
    std::uint32_t d = 0;
    std::uint32_t t = 1;                 // least valid t in [1, d]
    std::vector<std::uint32_t> valid_t;  // every valid t in [1, d]
    std::uint32_t ell = 0;               // iota(d), in [1, d]
    std::vector<std::uint32_t> iota;     // iota[i-1] = iota(i), in [1, d]
    MapType type = MapType::I;

    std::uint32_t gcd_t_minus_1() const { return std::gcd(t - 1, d) == 0 ? d : std::gcd(t - 1, d); }
};

inline MapType map_type(std::uint32_t t, std::uint32_t ell, std::uint32_t d) {
    std::uint32_t g = std::gcd(t - 1, d);
    if (g == 0) g = d;
    return ell % g != 0 ? MapType::I : MapType::II;
}

// Every t with t^2 = 1 (mod d) and rho(w^-1) = (rho^t(w))^-1 on all of Omega.
inline std::optional<BalanceData> balance_data(const CayleyMap& M) {
    if (M.defect()) return std::nullopt;
    const std::uint32_t d = static_cast<std::uint32_t>(M.valency());
    const auto inv = M.inverse_positions();
    BalanceData bd;
    bd.d = d;
    bd.iota.resize(d);
    // omega_i at position i-1; iota(i) = inv(i-1) + 1.
    for (std::uint32_t i = 1; i <= d; ++i) bd.iota[i - 1] = static_cast<std::uint32_t>(inv[i - 1] + 1);
    for (std::uint32_t t = 1; t <= d; ++t) {
        if ((u64{t} * t) % d != 1 % d) continue;
        bool ok = true;
        for (std::uint32_t i = 1; i <= d && ok; ++i) {
            std::uint32_t it = bd.iota[(i - 1 + t) % d];
            ok = it % d == (bd.iota[i - 1] + 1) % d;
        }
        if (ok) bd.valid_t.push_back(t);
    }
    if (bd.valid_t.empty()) return std::nullopt;
    bd.t = bd.valid_t.front();
    bd.ell = bd.iota[d - 1];
    bd.type = map_type(bd.t, bd.ell, d);
    return bd;
}

// Checks the algebraic identities every balance record must satisfy.
inline std::vector<std::string> balance_violations(const BalanceData& bd) {
    std::vector<std::string> out;
    const u64 d = bd.d;
    if ((u64{bd.t} * bd.t) % d != 1 % d) out.push_back("t^2 = 1 (mod d)");
    for (std::uint32_t i = 1; i <= bd.d; ++i)
        if (bd.iota[i - 1] % d != (bd.ell + u64{bd.t} * i) % d) {
            out.push_back("iota(i) = ell + t i (mod d) at i=" + std::to_string(i));
            break;
        }
    if ((u64{bd.t + 1} * bd.ell) % d != 0) out.push_back("(t+1) ell = 0 (mod d)");
    return out;
}

// Target offset: (t-1,d)/2 for type I, (t-1,d) for type II.
inline std::uint32_t normalized_ell(const BalanceData& bd) {
    std::uint32_t g = bd.gcd_t_minus_1();
    return bd.type == MapType::I ? g / 2 : g;
}

// Cyclic re-indexing omega'_i = omega_{i+k} with ell' normalized.
// Shifting by k changes ell to ell + (t-1)k.
inline std::pair<CayleyMap, BalanceData> normalize_indexing(const CayleyMap& M, const BalanceData& bd) {
    const std::uint32_t target = normalized_ell(bd) % bd.d;
    for (std::uint32_t k = 0; k < bd.d; ++k) {
        if ((bd.ell + u64{bd.t - 1 + bd.d} * k) % bd.d != target) continue;
        CayleyMap out = M.shifted(k);
        auto nb = balance_data(out);
        if (!nb || nb->ell % bd.d != target || nb->t != bd.t)
            throw std::logic_error("normalize_indexing: re-indexed map does not have the expected offset");
        return {std::move(out), *nb};
    }
    throw std::invalid_argument("normalize_indexing: no shift reaches the normalized offset");
}

// ---------------------------------------------------------------------------
// Consequences of a skew-morphism with balance exponent t

inline std::vector<std::string> skew_structure_violations(const CayleyMap& M, const SkewMorphism& s,
                                                          const BalanceData& bd, const VerifyOptions& opt = {}) {
    std::vector<std::string> out;
    const auto& G = M.group();
    const std::size_t N = G.order(), d = M.valency();
    for (std::size_t p = 0; p < d; ++p)
        if (s.phi[G.index(M.omega()[p])] != G.index(M.omega()[(p + 1) % d])) {
            out.push_back("phi restricted to Omega differs from rho");
            break;
        }
    for (const auto& w : M.omega())
        if (s.pi[G.index(w)] % d != bd.t % d) {
            out.push_back("pi(omega) = t fails at " + format_element(w));
            break;
        }
    for (Index i = 0; i < N; ++i)
        if (s.pi[i] % d != 1 % d && s.pi[i] % d != bd.t % d) {
            out.push_back("pi takes a value outside {1, t} at " + format_element(G.element(i)));
            break;
        }
    if (bd.t % d == 1 % d) return out;

    // ker pi against the products of an even number of generators.
    std::vector<char> in_kernel(N), even(N, 0);
    std::size_t kernel_size = 0;
    for (Index i = 0; i < N; ++i) {
        in_kernel[i] = s.pi[i] % d == 1 % d;
        kernel_size += in_kernel[i];
    }
    if (2 * kernel_size != N) out.push_back("ker pi does not have index 2");
    std::vector<std::uint8_t> parity(N, 2);
    std::vector<Index> queue{G.index(G.identity())};
    parity[queue[0]] = 0;
    bool bipartite = true;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        Index v = queue[qi];
        for (const auto& w : M.omega()) {
            Index u = G.index(G.mul_unchecked(G.element(v), w));
            if (parity[u] == 2) {
                parity[u] = static_cast<std::uint8_t>(parity[v] ^ 1);
                queue.push_back(u);
            } else if (parity[u] == parity[v]) {
                bipartite = false;
            }
        }
    }
    if (!bipartite) out.push_back("even-length products of generators cover the whole group");
    for (Index i = 0; i < N; ++i)
        if ((parity[i] == 0) != static_cast<bool>(in_kernel[i])) {
            out.push_back("ker pi differs from the even-word subgroup");
            break;
        }
    for (Index i = 0; i < N; ++i)
        if (in_kernel[i] && !in_kernel[s.phi[i]]) {
            out.push_back("phi(ker pi) != ker pi");
            break;
        }
    // Homomorphism on ker pi; all pairs at small order, sampled beyond.
    std::vector<Index> kernel;
    for (Index i = 0; i < N; ++i)
        if (in_kernel[i]) kernel.push_back(i);
    auto hom_ok = [&](Index x, Index y) { return s.phi[G.mul_index(x, y)] == G.mul_index(s.phi[x], s.phi[y]); };
    bool hom = true;
    if (N <= opt.exhaustive_order) {
        std::vector<char> bad(worker_count(opt.workers), 0);
        parallel_chunks(kernel.size(), worker_count(opt.workers), [&](std::size_t lo, std::size_t hi, unsigned w) {
            for (std::size_t i = lo; i < hi && !bad[w]; ++i)
                for (Index y : kernel)
                    if (!hom_ok(kernel[i], y)) {
                        bad[w] = 1;
                        break;
                    }
        });
        hom = std::none_of(bad.begin(), bad.end(), [](char c) { return c != 0; });
    } else {
        std::mt19937_64 rng(opt.seed ^ 0x9e3779b97f4a7c15ull);
        std::uniform_int_distribution<std::size_t> pick(0, kernel.size() - 1);
        for (u64 k = 0; k < opt.samples && hom; ++k) hom = hom_ok(kernel[pick(rng)], kernel[pick(rng)]);
    }
    if (!hom) out.push_back("phi restricted to ker pi is not an automorphism");
    return out;
}

// ---------------------------------------------------------------------------
// Isomorphism

// Candidate isomorphisms between the two groups, as generator images.
inline std::vector<GeneratorImages> isomorphism_candidates(const MetacyclicGroup& G1, const MetacyclicGroup& G2) {
    if (G1 == G2 && G1.is_two_group() && !G1.is_abelian() && shape_of(G1).c >= 2) {
        std::vector<GeneratorImages> out;
        for (const auto& p : enumerate_params(G1)) out.push_back({p.alpha_image(), p.beta_image()});
        return out;
    }
    if (G1.order() > (u64{1} << 12)) throw std::length_error("isomorphism search limited to order 4096");
    return enumerate_isomorphisms(G1, G2);
}

// sigma with sigma(omega1_i) = omega2_{i+k} for some fixed k, from the given candidates.
inline std::optional<GeneratorImages> find_isomorphism(const CayleyMap& M1, const CayleyMap& M2,
                                                       const std::vector<GeneratorImages>& candidates) {
    const std::size_t d = M1.valency();
    if (d != M2.valency()) return std::nullopt;
    const auto& G2 = M2.group();
    for (const auto& im : candidates) {
        auto first = M2.position(map_element(G2, im, M1.omega()[0]));
        if (!first) continue;
        bool ok = true;
        for (std::size_t p = 1; p < d && ok; ++p)
            ok = map_element(G2, im, M1.omega()[p]) == M2.omega()[(p + *first) % d];
        if (ok) return im;
    }
    return std::nullopt;
}

inline std::optional<GeneratorImages> are_isomorphic(const CayleyMap& M1, const CayleyMap& M2) {
    if (M1.group().order() != M2.group().order()) throw std::invalid_argument("group orders differ");
    if (M1.valency() != M2.valency()) return std::nullopt;
    auto b1 = balance_data(M1), b2 = balance_data(M2);
    if (b1 && b2 && b1->type != b2->type) return std::nullopt;
    return find_isomorphism(M1, M2, isomorphism_candidates(M1.group(), M2.group()));
}

// ---------------------------------------------------------------------------
// Quotients

struct QuotientMap {
    Quotient quotient;
    CayleyMap map;
    SkewMorphism skew;
};

// Factor by Xi = <alpha^p, beta^q>; Xi must be normal, inside ker pi and phi-invariant.
inline QuotientMap quotient_map(const CayleyMap& M, const SkewMorphism& s, u64 p, std::optional<u64> q = std::nullopt,
                                const VerifyOptions& opt = {}) {
    const auto& G = M.group();
    Quotient Q = quotient(G, p, q);  // throws when Xi is not normal
    const MetacyclicGroup H(Q.target);
    auto in_xi = [&](const GroupElement& g) { return g.x % p == 0 && g.y % Q.beta_power == 0; };
    for (const auto& g : G.elements()) {
        if (!in_xi(g)) continue;
        if (s.pi[G.index(g)] % s.period != 1 % s.period)
            throw std::invalid_argument("Xi is not contained in ker pi: " + format_element(g));
        if (!in_xi(s.apply(G, g))) throw std::invalid_argument("Xi is not phi-invariant: " + format_element(g));
    }
    // Period of the projected generator sequence.
    const std::size_t d = M.valency();
    std::vector<GroupElement> proj;
    for (const auto& w : M.omega()) proj.push_back(Q.project(w));
    std::size_t dbar = d;
    for (std::size_t e = 1; e <= d; ++e) {
        if (d % e != 0) continue;
        bool periodic = true;
        for (std::size_t i = 0; i < d && periodic; ++i) periodic = proj[i] == proj[i % e];
        if (periodic) {
            dbar = e;
            break;
        }
    }
    std::vector<GroupElement> omega_bar(proj.begin(), proj.begin() + static_cast<std::ptrdiff_t>(dbar));
    CayleyMap Mbar(H, omega_bar);
    if (auto e = Mbar.defect()) throw std::invalid_argument("quotient generating set is degenerate: " + *e);

    const Index none = static_cast<Index>(H.order());
    Perm phibar(H.order(), none);
    std::vector<std::uint32_t> pibar(H.order(), 0);
    for (Index i = 0; i < G.order(); ++i) {
        GroupElement g = G.element(i);
        Index hi = H.index(Q.project(g));
        Index hv = H.index(Q.project(s.apply(G, g)));
        std::uint32_t pv = static_cast<std::uint32_t>((s.pi[i] - 1) % dbar + 1);
        if (phibar[hi] == none) {
            phibar[hi] = hv;
            pibar[hi] = pv;
        } else if (phibar[hi] != hv) {
            throw std::logic_error("induced phi is not well defined on cosets");
        } else if (pibar[hi] != pv) {
            throw std::logic_error("induced pi is not well defined on cosets");
        }
    }
    auto chk = check_skew(H, phibar, opt);
    if (!chk.skew) throw std::logic_error("induced map fails the skew law: " + chk.failure->reason);
    return {Q, std::move(Mbar), std::move(*chk.skew)};
}

// ---------------------------------------------------------------------------
// Generator orbit eta_j = omega_j omega_{j-1}^-1 and its partial products

struct GeneratorOrbit {
    std::vector<GroupElement> eta;      // eta[j-1] = eta_j, j = 1..d
    std::vector<GroupElement> partial;  // partial[i] = eta_i ... eta_1, i = 0..d

    u64 u(std::size_t j) const { return eta[j - 1].x; }
    u64 v(std::size_t j) const { return eta[j - 1].y; }
    u64 f(std::size_t i) const { return partial[i].x; }
    u64 g(std::size_t i) const { return partial[i].y; }
};

class InvariantViolation : public std::runtime_error {
public:
    InvariantViolation(const std::string& tag, std::size_t index)
        : std::runtime_error(tag + " fails at index " + std::to_string(index)), tag_(tag), index_(index) {}
    const std::string& tag() const { return tag_; }
    std::size_t index() const { return index_; }

private:
    std::string tag_;
    std::size_t index_;
};

inline GeneratorOrbit generator_orbit(const CayleyMap& M, const BalanceData& bd, const SkewMorphism& s) {
    const auto& G = M.group();
    const std::size_t d = M.valency();
    GeneratorOrbit out;
    for (std::size_t j = 1; j <= d; ++j)
        out.eta.push_back(G.mul(M.at(static_cast<i64>(j)), G.inverse(M.at(static_cast<i64>(j) - 1))));
    out.partial.push_back(G.identity());
    for (std::size_t i = 1; i <= d; ++i) out.partial.push_back(G.mul(out.eta[i - 1], out.partial[i - 1]));
    const GroupElement wd_inv = G.inverse(M.at(static_cast<i64>(d)));
    for (std::size_t i = 1; i <= d; ++i)
        if (out.partial[i] != G.mul(M.at(static_cast<i64>(i)), wd_inv))
            throw InvariantViolation("omega_i omega_d^-1 = eta_i ... eta_1", i);
    if (G.mul(wd_inv, wd_inv) != out.partial[bd.ell % d == 0 ? d : bd.ell % d])
        throw InvariantViolation("omega_d^-2 = eta_ell ... eta_1", bd.ell);
    for (std::size_t j = 1; j <= d; ++j)
        if (s.apply(G, out.eta[j - 1]) != out.eta[j % d])
            throw InvariantViolation("phi(eta_j) = eta_{j+1}", j);
    return out;
}

// ---------------------------------------------------------------------------
// Profile of an RBCM_t on a rank-2 abelian 2-group

struct AbelianRbcmProfile {
    GroupElement theta1, theta2;
    unsigned k = 0, k_prime = 0;
    std::uint32_t dbar = 0;
    std::uint32_t t = 0;
    MapType type = MapType::I;
    bool psi_plus_square_identity = false;
    std::vector<std::string> failures;

    bool ok() const { return failures.empty(); }
};

inline AbelianRbcmProfile abelian_profile_check(const CayleyMap& M, const SkewMorphism& s, const BalanceData& bd) {
    const auto& G = M.group();
    if (!G.is_abelian()) throw std::invalid_argument("profile check needs an abelian group");
    if (!G.is_two_group()) throw std::invalid_argument("profile check needs a 2-group");
    const std::size_t N = G.order(), d = M.valency();
    auto log2_order = [&](const GroupElement& g) { return detail::log2_exact(G.element_order(g)); };
    auto rank_of = [&](auto&& member) {
        u64 inv = 0;
        for (const auto& g : G.elements())
            if (member(g) && G.mul(g, g) == G.identity()) ++inv;
        return detail::log2_exact(inv);
    };
    auto in_plus = [&](const GroupElement& g) { return s.pi[G.index(g)] % d == 1 % d; };
    u64 plus_size = 0;
    for (Index i = 0; i < N; ++i) plus_size += in_plus(G.element(i));
    if (2 * plus_size != N) throw std::invalid_argument("ker pi does not have index 2");
    if (rank_of([](const GroupElement&) { return true; }) != 2 || rank_of(in_plus) != 2)
        throw std::invalid_argument("rank(G) = rank(G+) = 2 required");

    AbelianRbcmProfile pr;
    pr.dbar = static_cast<std::uint32_t>(d);
    pr.t = bd.t;
    pr.type = bd.type;
    const GroupElement mu0 = M.at(0), mu1 = M.at(1), mu2 = M.at(2);
    pr.theta1 = G.mul(mu1, G.inverse(mu0));
    pr.theta2 = G.mul(mu2, G.inverse(mu1));
    const GroupElement sum = G.mul(pr.theta1, pr.theta2);
    const GroupElement diff = G.mul(pr.theta1, G.inverse(pr.theta2));
    pr.k_prime = log2_order(pr.theta1);
    pr.k = log2_order(sum);
    auto fail = [&](std::string s) { pr.failures.push_back(std::move(s)); };

    if (!in_plus(pr.theta1) || !in_plus(pr.theta2)) fail("theta1, theta2 lie in G+");
    if (pr.k_prime < pr.k) fail("k' >= k");
    // <theta1> x <theta1+theta2> = G+.
    {
        auto c1 = G.closure({pr.theta1}), c2 = G.closure({sum});
        std::vector<Index> common;
        std::set_intersection(c1.begin(), c1.end(), c2.begin(), c2.end(), std::back_inserter(common));
        if (common.size() != 1 || (u64{1} << (pr.k + pr.k_prime)) != plus_size)
            fail("G+ = <theta1> x <theta1+theta2>");
    }
    if (log2_order(diff) != std::max(pr.k_prime - 1, pr.k)) fail("|theta1 - theta2| = 2^max(k'-1,k)");
    if (bd.type != MapType::I) fail("type I");
    if (d != (std::size_t{1} << (pr.k + 1))) fail("valency = 2^(k+1)");
    if ((bd.t + 1) % d != 0) fail("valency divides t+1");
    pr.psi_plus_square_identity = true;
    for (Index i = 0; i < N; ++i)
        if (in_plus(G.element(i)) && s.phi[s.phi[i]] != i) pr.psi_plus_square_identity = false;
    if (!pr.psi_plus_square_identity) fail("(psi+)^2 = id");
    return pr;
}

// ---------------------------------------------------------------------------
// Genus

struct GenusData {
    u64 vertices = 0, edges = 0, faces = 0, genus = 0;
};

namespace detail {
// Faces of the rotation system; next dart = rotation step (+1 or -1) of the reversed dart.
inline u64 count_faces(const CayleyMap& M, const std::vector<std::size_t>& inv, int step) {
    const auto& G = M.group();
    const std::size_t N = G.order(), d = M.valency();
    std::vector<char> seen(N * d, 0);
    u64 faces = 0;
    for (std::size_t start = 0; start < N * d; ++start) {
        if (seen[start]) continue;
        ++faces;
        std::size_t cur = start;
        while (!seen[cur]) {
            seen[cur] = 1;
            Index v = static_cast<Index>(cur / d);
            std::size_t p = cur % d;
            Index w = G.index(G.mul_unchecked(G.element(v), M.omega()[p]));
            std::size_t q = (inv[p] + d + static_cast<std::size_t>(step + static_cast<int>(d))) % d;
            cur = std::size_t{w} * d + q;
        }
    }
    return faces;
}
}  // namespace detail

inline GenusData genus(const CayleyMap& M) {
    M.require_valid();
    const auto inv = M.inverse_positions();
    GenusData gd;
    gd.vertices = M.group().order();
    gd.edges = gd.vertices * M.valency() / 2;
    gd.faces = detail::count_faces(M, inv, +1);
    const u64 other = detail::count_faces(M, inv, -1);
    if (other != gd.faces) throw std::logic_error("face count depends on the rotation convention");
    const i64 chi = static_cast<i64>(gd.vertices) - static_cast<i64>(gd.edges) + static_cast<i64>(gd.faces);
    if (chi > 2 || (2 - chi) % 2 != 0) throw std::logic_error("Euler characteristic is not 2 - 2g");
    gd.genus = static_cast<u64>((2 - chi) / 2);
    return gd;
}

}  // namespace rbcm
