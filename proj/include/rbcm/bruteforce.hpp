#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "rbcm/cayley_map.hpp"
#include "rbcm/homomorphism.hpp"
#include "rbcm/metacyclic.hpp"
#include "rbcm/parallel.hpp"

namespace rbcm {

struct SearchBudget {
    u64 max_order = 64;
    u64 max_candidates = u64{1} << 40;
    double time_limit_seconds = 0;  // 0 means unlimited
};

struct FoundMap {
    CayleyMap map;
    SkewMorphism skew;
    BalanceData balance;
    std::vector<Index> canonical;
};

class BudgetExceeded : public std::runtime_error {
public:
    BudgetExceeded(const std::string& what, std::vector<FoundMap> partial = {})
        : std::runtime_error(what), partial_(std::move(partial)) {}
    const std::vector<FoundMap>& partial() const { return partial_; }

private:
    std::vector<FoundMap> partial_;
};

namespace bf_detail {

// Shared candidate and wall-clock budget for a running search.
class Meter {
public:
    explicit Meter(const SearchBudget& b) : budget_(b), start_(std::chrono::steady_clock::now()) {}

    // False once either limit is hit; the search then winds down.
    bool tick() {
        if (stopped_.load(std::memory_order_relaxed)) return false;
        const u64 n = ++count_;
        if (n > budget_.max_candidates) return stop("candidate budget exceeded");
        if (budget_.time_limit_seconds > 0 && (n & 1023u) == 0 && elapsed() > budget_.time_limit_seconds)
            return stop("time limit exceeded");
        return true;
    }
    bool stopped() const { return stopped_.load(); }
    u64 count() const { return count_.load(); }
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
    std::string reason() const {
        std::lock_guard lock(mu_);
        return reason_;
    }

private:
    bool stop(const char* why) {
        std::lock_guard lock(mu_);
        if (!stopped_) reason_ = why;
        stopped_ = true;
        return false;
    }

    SearchBudget budget_;
    std::chrono::steady_clock::time_point start_;
    std::atomic<u64> count_{0};
    std::atomic<bool> stopped_{false};
    mutable std::mutex mu_;
    std::string reason_;
};

inline void require_order(const MetacyclicGroup& G, u64 limit) {
    if (G.order() > limit)
        throw BudgetExceeded("group order " + std::to_string(G.order()) + " exceeds the budget of " +
                             std::to_string(limit));
}

}  // namespace bf_detail

// ---------------------------------------------------------------------------
// Automorphisms

// All (image of alpha, image of beta) that respect the relations and give a bijection.
inline std::vector<GeneratorImages> enumerate_automorphisms(const MetacyclicGroup& G,
                                                            u64 max_order = u64{1} << 12) {
    bf_detail::require_order(G, max_order);
    return enumerate_isomorphisms(G, G);
}

inline Perm automorphism_perm(const MetacyclicGroup& G, const GeneratorImages& im) {
    Perm p(G.order());
    for (Index i = 0; i < G.order(); ++i) p[i] = G.index(map_element(G, im, G.element(i)));
    return p;
}

// Automorphisms of the subgroup generated by gens, as permutations of G's index set
// (entries outside the subgroup are left as G.order()). Brute force over generator images.
inline std::vector<Perm> subgroup_automorphisms(const MetacyclicGroup& G, const std::vector<GroupElement>& gens) {
    const Index none = static_cast<Index>(G.order());
    const auto members = G.closure(gens);
    std::vector<std::vector<Index>> by_order(gens.size());
    for (std::size_t k = 0; k < gens.size(); ++k) {
        const u64 o = G.element_order(gens[k]);
        for (Index i : members)
            if (G.element_order(G.element(i)) == o) by_order[k].push_back(i);
    }
    std::vector<Index> gi;
    for (const auto& g : gens) gi.push_back(G.index(g));
    std::vector<Perm> out;
    std::vector<Index> choice(gens.size());
    auto attempt = [&] {
        Perm f(G.order(), none);
        std::vector<char> hit(G.order(), 0);
        const Index one = G.index(G.identity());
        f[one] = one;
        hit[one] = 1;
        std::vector<Index> queue{one};
        for (std::size_t qi = 0; qi < queue.size(); ++qi) {
            const Index x = queue[qi];
            for (std::size_t k = 0; k < gi.size(); ++k) {
                const Index y = G.mul_index(x, gi[k]);
                const Index fy = G.mul_index(f[x], choice[k]);
                if (f[y] == none) {
                    if (hit[fy]) return;
                    f[y] = fy;
                    hit[fy] = 1;
                    queue.push_back(y);
                } else if (f[y] != fy) {
                    return;
                }
            }
        }
        out.push_back(std::move(f));
    };
    auto rec = [&](auto&& self, std::size_t k) -> void {
        if (k == gens.size()) {
            attempt();
            return;
        }
        for (Index c : by_order[k]) {
            choice[k] = c;
            self(self, k + 1);
        }
    };
    rec(rec, 0);
    return out;
}

// ---------------------------------------------------------------------------
// Canonical forms

// Lexicographically least index list over automorphic images and cyclic shifts.
inline std::vector<Index> canonical_form(const CayleyMap& M, const std::vector<Perm>& auts) {
    const auto& G = M.group();
    const std::size_t d = M.valency();
    std::vector<Index> best, img(d), rot(d);
    for (const auto& a : auts) {
        for (std::size_t p = 0; p < d; ++p) img[p] = a[G.index(M.omega()[p])];
        for (std::size_t k = 0; k < d; ++k) {
            for (std::size_t p = 0; p < d; ++p) rot[p] = img[(p + k) % d];
            if (best.empty() || rot < best) best = rot;
        }
    }
    return best;
}

namespace bf_detail {

inline std::optional<FoundMap> verify_from_definitions(const CayleyMap& M, const VerifyOptions& opt) {
    if (M.defect()) return std::nullopt;
    auto skew = is_regular(M, opt);
    if (!skew) return std::nullopt;
    auto bd = balance_data(M);
    if (!bd) return std::nullopt;
    return FoundMap{M, std::move(*skew), std::move(*bd), {}};
}

inline std::vector<GroupElement> orbit_sequence(const MetacyclicGroup& G, const Perm& f, Index start) {
    std::vector<GroupElement> out;
    Index cur = start;
    do {
        out.push_back(G.element(cur));
        cur = f[cur];
    } while (cur != start);
    return out;
}

// Canonical dedupe, then verification of each new class; sorted by canonical form.
class Collector {
public:
    Collector(std::vector<Perm> auts, VerifyOptions opt) : auts_(std::move(auts)), opt_(opt) {}

    void offer(const CayleyMap& M) {
        auto key = canonical_form(M, auts_);
        {
            std::lock_guard lock(mu_);
            if (!tried_.insert(key).second) return;
        }
        auto found = verify_from_definitions(M, opt_);
        if (!found) return;
        found->canonical = std::move(key);
        std::lock_guard lock(mu_);
        found_.push_back(std::move(*found));
    }

    std::vector<FoundMap> take() {
        std::lock_guard lock(mu_);
        std::sort(found_.begin(), found_.end(),
                  [](const FoundMap& a, const FoundMap& b) { return a.canonical < b.canonical; });
        return std::move(found_);
    }

    const std::vector<Perm>& auts() const { return auts_; }

private:
    std::vector<Perm> auts_;
    VerifyOptions opt_;
    std::mutex mu_;
    std::set<std::vector<Index>> tried_;
    std::vector<FoundMap> found_;
};

}  // namespace bf_detail

// ---------------------------------------------------------------------------
// enumerate_rbcm

struct EnumerationResult {
    std::vector<FoundMap> maps;  // one per isomorphism class, sorted by canonical form
    u64 candidates = 0;
};

// Every RBCM_t on G up to isomorphism. The t > 1 arm runs over index-2 subgroups H,
// automorphisms of H and pairs (omega_d, omega_1) outside H; the t = 1 arm runs over
// orbits of automorphisms of G.
inline EnumerationResult enumerate_rbcm(const MetacyclicGroup& G, const SearchBudget& budget = {},
                                        unsigned workers = 0) {
    bf_detail::require_order(G, budget.max_order);
    bf_detail::Meter meter(budget);
    std::vector<Perm> auts;
    for (const auto& im : enumerate_automorphisms(G)) auts.push_back(automorphism_perm(G, im));
    VerifyOptions opt;
    opt.workers = 1;
    bf_detail::Collector col(auts, opt);
    const std::size_t N = G.order();

    // Tasks: (subgroup, automorphism of it) for the t > 1 arm, then one per automorphism of G.
    struct Task {
        int subgroup;  // -1 for the t = 1 arm
        Perm f;
    };
    std::vector<Task> tasks;
    const auto subs = all_index2_subgroups(G);
    for (std::size_t s = 0; s < subs.size(); ++s)
        for (auto& f : subgroup_automorphisms(G, subs[s].generators)) tasks.push_back({static_cast<int>(s), f});
    for (const auto& a : auts) tasks.push_back({-1, a});

    parallel_for(tasks.size(), worker_count(workers), [&](std::size_t k) {
        if (meter.stopped()) return;
        const Task& task = tasks[k];
        if (task.subgroup < 0) {
            for (Index g = 0; g < N && meter.tick(); ++g) {
                if (g == G.index(G.identity())) continue;
                auto orb = bf_detail::orbit_sequence(G, task.f, g);
                // omega_1 = g, omega_{i+1} = sigma(omega_i).
                CayleyMap M(G, orb);
                if (!M.defect()) col.offer(M);
            }
            return;
        }
        const auto& H = subs[static_cast<std::size_t>(task.subgroup)];
        std::vector<Index> coset;
        for (Index i = 0; i < N; ++i)
            if (!H.contains(G.element(i))) coset.push_back(i);
        Perm phi(N);
        for (Index wd : coset) {
            const Index wd_inv = G.inv_index(wd);
            for (Index w1 : coset) {
                if (!meter.tick()) return;
                for (Index x = 0; x < N; ++x)
                    phi[x] = H.contains(G.element(x)) ? task.f[x] : G.mul_index(task.f[G.mul_index(x, wd_inv)], w1);
                auto orb = bf_detail::orbit_sequence(G, phi, wd);
                // orb = (omega_d, omega_1, ...): rotate so omega_d is last.
                std::rotate(orb.begin(), orb.begin() + 1, orb.end());
                CayleyMap M(G, orb);
                if (!M.defect()) col.offer(M);
            }
        }
    });
    EnumerationResult out;
    out.candidates = meter.count();
    out.maps = col.take();
    if (meter.stopped()) throw BudgetExceeded(meter.reason(), std::move(out.maps));
    return out;
}

// ---------------------------------------------------------------------------
// Naive oracle: every ordering of every inverse-closed generating set, tested
// for arc-transitivity straight from the definition.

namespace bf_detail {

// Consequences of the rotation-preserving automorphism fixing 1 with
// omega_i -> omega_{i+1}, evaluated on the placed prefix only. At a vertex v
// with known image the automorphism shifts the rotation by some k_v; any
// neighbour with known image fixes k_v, which then forces the other neighbours.
inline bool prefix_consistent(const MetacyclicGroup& G, const std::vector<Index>& seq, std::size_t d,
                              const std::vector<int>& pos) {
    const std::size_t L = seq.size(), N = G.order();
    const Index none = static_cast<Index>(N);
    std::vector<Index> f(N, none), finv(N, none);
    bool changed = false;
    auto assign = [&](Index x, Index y) {
        if (f[x] != none) return f[x] == y;
        if (finv[y] != none) return false;
        f[x] = y;
        finv[y] = x;
        changed = true;
        return true;
    };
    const Index one = G.index(G.identity());
    if (!assign(one, one)) return false;
    for (std::size_t i = 0; i + 1 < L; ++i)
        if (!assign(seq[i], seq[i + 1])) return false;
    if (L == d && !assign(seq[d - 1], seq[0])) return false;
    std::vector<int> shift(N, -1);
    shift[one] = 1;
    do {
        changed = false;
        for (Index v = 0; v < N; ++v) {
            if (f[v] == none) continue;
            const Index fv_inv = G.inv_index(f[v]);
            if (shift[v] < 0) {
                for (std::size_t j = 0; j < L; ++j) {
                    const Index img = f[G.mul_index(v, seq[j])];
                    if (img == none) continue;
                    const int q = pos[G.mul_index(fv_inv, img)];
                    if (q < 0) continue;
                    shift[v] = static_cast<int>((static_cast<std::size_t>(q) + d - j) % d);
                    changed = true;
                    break;
                }
                if (shift[v] < 0) continue;
            }
            const std::size_t k = static_cast<std::size_t>(shift[v]);
            for (std::size_t j = 0; j < L; ++j) {
                const Index vw = G.mul_index(v, seq[j]);
                const std::size_t jk = (j + k) % d;
                if (jk < L) {
                    if (!assign(vw, G.mul_index(f[v], seq[jk]))) return false;
                } else if (f[vw] != none) {
                    // The image must be a neighbour of f(v) at an unplaced position.
                    const int q = pos[G.mul_index(fv_inv, f[vw])];
                    if (q >= 0) return false;
                }
            }
        }
    } while (changed);
    return true;
}

// Arc-transitivity forces every generator to lie on the same number of triangles.
inline bool triangle_counts_equal(const MetacyclicGroup& G, const std::vector<Index>& set) {
    std::vector<char> in(G.order(), 0);
    for (Index i : set) in[i] = 1;
    std::optional<std::size_t> common;
    for (Index w : set) {
        std::size_t c = 0;
        const Index wi = G.inv_index(w);
        for (Index x : set) c += in[G.mul_index(wi, x)];
        if (common && *common != c) return false;
        common = c;
    }
    return true;
}

}  // namespace bf_detail

inline EnumerationResult naive_enumerate_rbcm(const MetacyclicGroup& G, const SearchBudget& budget = {}) {
    bf_detail::require_order(G, std::min<u64>(budget.max_order, 32));
    bf_detail::Meter meter(budget);
    const std::size_t N = G.order();
    const Index one = G.index(G.identity());
    std::vector<Perm> auts;
    for (const auto& im : enumerate_automorphisms(G)) auts.push_back(automorphism_perm(G, im));

    // Inverse-closed sets are unions of classes {g, g^-1}.
    std::vector<std::vector<Index>> classes;
    std::vector<char> used(N, 0);
    for (Index i = 0; i < N; ++i) {
        if (i == one || used[i]) continue;
        const Index j = G.inv_index(i);
        used[i] = used[j] = 1;
        classes.push_back(i == j ? std::vector<Index>{i} : std::vector<Index>{i, j});
    }
    if (classes.size() > 30) throw BudgetExceeded("too many inverse classes for the naive oracle");

    std::set<std::vector<Index>> seen;
    std::vector<FoundMap> found;
    for (u64 mask = 1; mask < (u64{1} << classes.size()); ++mask) {
        std::vector<Index> set;
        for (std::size_t c = 0; c < classes.size(); ++c)
            if (mask >> c & 1u) set.insert(set.end(), classes[c].begin(), classes[c].end());
        std::sort(set.begin(), set.end());
        std::vector<GroupElement> els;
        for (Index i : set) els.push_back(G.element(i));
        if (!G.generates(els) || !bf_detail::triangle_counts_equal(G, set)) continue;
        const std::size_t d = set.size();
        std::vector<int> pos(N, -1);
        std::vector<Index> seq{set[0]};
        pos[set[0]] = 0;
        std::vector<char> taken(d, 0);
        taken[0] = 1;
        auto rec = [&](auto&& self) -> void {
            if (!meter.tick()) return;
            if (!bf_detail::prefix_consistent(G, seq, d, pos)) return;
            if (seq.size() == d) {
                std::vector<GroupElement> om;
                for (Index i : seq) om.push_back(G.element(i));
                CayleyMap M(G, om);
                if (!is_regular_by_definition(M)) return;
                auto key = canonical_form(M, auts);
                if (!seen.insert(key).second) return;
                auto bd = balance_data(M);
                if (!bd) return;
                auto skew = is_regular(M);
                if (!skew) throw std::logic_error("regular by definition but no skew-morphism");
                found.push_back({M, std::move(*skew), std::move(*bd), std::move(key)});
                return;
            }
            for (std::size_t c = 1; c < d; ++c) {
                if (taken[c]) continue;
                taken[c] = 1;
                pos[set[c]] = static_cast<int>(seq.size());
                seq.push_back(set[c]);
                self(self);
                seq.pop_back();
                pos[set[c]] = -1;
                taken[c] = 0;
            }
        };
        rec(rec);
        if (meter.stopped()) break;
    }
    std::sort(found.begin(), found.end(), [](const FoundMap& a, const FoundMap& b) { return a.canonical < b.canonical; });
    EnumerationResult out{std::move(found), meter.count()};
    if (meter.stopped()) throw BudgetExceeded(meter.reason(), std::move(out.maps));
    return out;
}

// ---------------------------------------------------------------------------
// Guided search on Delta, restricted to ker pi = <a^2, b>

namespace guided {

// phi+ must send a^2 to a^(2x) b^y with y odd.
inline bool admissible_phi_plus(const MetacyclicGroup& G, const Perm& phi_plus) {
    return G.element(phi_plus[G.index({2, 0})]).y % 2 == 1;
}

// Seeds lie outside <a^2, b>.
inline bool admissible_seed(const GroupElement& omega_d) { return omega_d.x % 2 == 1; }

inline bool orbit_inverse_closed(const MetacyclicGroup& G, const std::vector<GroupElement>& omega) {
    std::set<GroupElement> S(omega.begin(), omega.end());
    return std::all_of(omega.begin(), omega.end(), [&](const GroupElement& w) { return S.count(G.inverse(w)); });
}

// g_(ell+ti) + g_i + 2 y_d = 0 (mod 2^b), with g_i the beta-exponent of omega_i omega_d^-1
// and y_d the beta-exponent of omega_d.
// omega holds omega_1 .. omega_d.
inline bool inverse2_holds(const MetacyclicGroup& G, const std::vector<GroupElement>& omega, u64 t, u64 ell) {
    const u64 d = omega.size();
    auto g = [&](u64 i) {
        const GroupElement& w = omega[(i + d - 1) % d];
        return (w.y + G.m() - omega[d - 1].y) % G.m();
    };
    for (u64 i = 1; i <= d; ++i)
        if ((g((ell + t * i) % d) + g(i) + 2 * omega[d - 1].y) % G.m() != 0) return false;
    return true;
}

}  // namespace guided

struct GuidedResult {
    std::vector<FoundMap> maps;
    bool exhaustive = true;
    std::string stop_reason;
    u64 candidates = 0;
    u64 pruned_phi_plus = 0, pruned_closure = 0, pruned_inverse2 = 0;
    double seconds = 0;
};

inline GuidedResult guided_search_delta(const DeltaDescriptor& D, const SearchBudget& budget, unsigned workers = 0) {
    D.validate();
    const MetacyclicGroup G(D.metacyclic());
    bf_detail::require_order(G, budget.max_order);
    bf_detail::Meter meter(budget);
    const std::size_t N = G.order();

    std::vector<Perm> auts;
    for (const auto& im : enumerate_automorphisms(G)) auts.push_back(automorphism_perm(G, im));
    VerifyOptions opt;
    opt.workers = 1;
    bf_detail::Collector col(auts, opt);

    const Index a2 = G.index({2, 0}), b1 = G.index({0, 1});
    auto plus_auts = subgroup_automorphisms(G, {G.element(a2), G.element(b1)});
    std::atomic<u64> pruned_phi{0}, pruned_closure{0}, pruned_inv2{0};

    // Seeds up to automorphisms of G.
    std::vector<Index> seeds;
    {
        std::vector<char> covered(N, 0);
        for (Index i = 0; i < N; ++i) {
            if (!guided::admissible_seed(G.element(i)) || covered[i]) continue;
            seeds.push_back(i);
            for (const auto& a : auts) covered[a[i]] = 1;
        }
    }
    auto conj = [&](Index w, Index h) { return G.mul_index(G.mul_index(w, h), G.inv_index(w)); };
    std::map<std::pair<Index, Index>, std::vector<Index>> by_conj;
    for (Index i = 0; i < N; ++i)
        if (guided::admissible_seed(G.element(i))) by_conj[{conj(i, a2), conj(i, b1)}].push_back(i);

    parallel_for(plus_auts.size(), worker_count(workers), [&](std::size_t k) {
        if (meter.stopped()) return;
        const Perm& P = plus_auts[k];
        if (!guided::admissible_phi_plus(G, P)) {
            ++pruned_phi;
            return;
        }
        std::vector<std::pair<Index, Index>> pows{{a2, b1}};
        for (;;) {
            std::pair<Index, Index> nxt{P[pows.back().first], P[pows.back().second]};
            if (nxt == pows.front()) break;
            pows.push_back(nxt);
        }
        const std::size_t o = pows.size();
        for (Index wd : seeds) {
            const Index wd_inv = G.inv_index(wd);
            for (std::size_t t = 0; t < o; ++t) {
                auto [h1, h2] = pows[(o - t) % o];
                auto it = by_conj.find({P[conj(wd, h1)], P[conj(wd, h2)]});
                if (it == by_conj.end()) continue;
                for (Index w1 : it->second) {
                    if (!meter.tick()) return;
                    auto phi_at = [&](Index x) {
                        return G.element(x).x % 2 == 0 ? P[x] : G.mul_index(P[G.mul_index(x, wd_inv)], w1);
                    };
                    std::vector<Index> orb{wd};
                    for (Index cur = phi_at(wd); cur != wd; cur = phi_at(cur)) orb.push_back(cur);
                    const std::size_t d = orb.size();
                    if (P[G.mul_index(wd, wd)] != G.mul_index(w1, orb[t % d])) continue;
                    std::vector<GroupElement> omega;
                    for (std::size_t p = 1; p <= d; ++p) omega.push_back(G.element(orb[p % d]));
                    if (!guided::orbit_inverse_closed(G, omega)) {
                        ++pruned_closure;
                        continue;
                    }
                    u64 ell = 0;
                    for (std::size_t p = 0; p < d; ++p)
                        if (G.index(omega[p]) == wd_inv) ell = p + 1;
                    if (!guided::inverse2_holds(G, omega, t % d, ell)) {
                        ++pruned_inv2;
                        continue;
                    }
                    CayleyMap M(G, omega);
                    if (!M.defect()) col.offer(M);
                }
            }
        }
    });
    GuidedResult out;
    out.maps = col.take();
    out.exhaustive = !meter.stopped();
    out.stop_reason = meter.stopped() ? meter.reason() : "";
    out.candidates = meter.count();
    out.pruned_phi_plus = pruned_phi;
    out.pruned_closure = pruned_closure;
    out.pruned_inverse2 = pruned_inv2;
    out.seconds = meter.elapsed();
    return out;
}

}  // namespace rbcm
