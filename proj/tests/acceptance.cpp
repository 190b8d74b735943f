// Acceptance checks. stdout gets one PASS/FAIL line per criterion; details go to stderr.
// Usage: acceptance [--criterion N]... [--long]

#include <chrono>
#include <cstring>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rbcm/rbcm.hpp"

using namespace rbcm;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::ostream& log() { return std::cerr; }

u64 pow2(unsigned e) { return u64{1} << e; }

// Realized solutions of the instances used by criteria 3 and 4.
const std::vector<RealizedRbcm>& sample_solutions() {
    static const auto maps = [] {
        std::vector<RealizedRbcm> out;
        for (auto [a, b, c] : std::vector<std::array<unsigned, 3>>{{7, 3, 4}, {8, 3, 5}, {9, 3, 6}, {9, 4, 5}}) {
            for (auto& r : realize_all(solve(a, b, c))) out.push_back(std::move(r));
        }
        return out;
    }();
    return maps;
}

// ---------------------------------------------------------------------------

Outcome criterion_1() {
    const auto t0 = Clock::now();
    auto rep = classify(7, 3, 4, VerifyLevel::Full);
    const double secs = seconds_since(t0);
    bool ok = rep.ok() && rep.solutions.size() == 4;
    for (std::size_t i = 0; i < rep.realized.size(); ++i) {
        const auto& R = rep.realized[i];
        const bool each = R && R->exhaustive && R->pairs_checked == u64{1024} * 1024 && rep.profiles[i] &&
                          R->balance.type == MapType::I && R->balance.ell == normalized_ell(R->balance);
        log() << "  z1=" << i << ": " << (each ? "verified" : "NOT verified");
        if (R) log() << " (d=" << R->balance.d << " t=" << R->solution.t << " ell=" << R->balance.ell << ")";
        log() << "\n";
        ok = ok && each;
    }
    ok = ok && rep.distinctness && rep.distinctness->all_distinct && rep.distinctness->certified_twice &&
         rep.distinctness->pairs.size() == 6;
    for (const auto& f : rep.failures) log() << "  failure: " << f << "\n";
    ok = ok && secs < 60;
    std::ostringstream s;
    s << rep.solutions.size() << " solutions, all pairs separated twice, " << secs << " s";
    return {ok, s.str()};
}

Outcome criterion_2() {
    struct Case {
        unsigned a, b, c;
        std::size_t expected;
    };
    bool ok = true;
    std::ostringstream s;
    const auto t0 = Clock::now();
    for (auto [a, b, c, expected] : std::vector<Case>{{8, 3, 4, 8}, {8, 3, 5, 4}, {9, 3, 4, 16}}) {
        std::size_t verified = 0;
        std::string note;
        try {
            auto rep = classify(a, b, c, VerifyLevel::Full);
            for (std::size_t i = 0; i < rep.realized.size(); ++i)
                if (rep.realized[i] && rep.profiles[i]) ++verified;
            if (!rep.ok()) note = rep.failures.front();
        } catch (const std::invalid_argument& e) {
            note = e.what();
        }
        const bool pass = verified == expected && note.empty();
        log() << "  (" << a << "," << b << "," << c << "): " << verified << " verified, expected " << expected
              << (note.empty() ? "" : " [" + note + "]") << "\n";
        s << "(" << a << "," << b << "," << c << ")=" << verified << "/" << expected << " ";
        ok = ok && pass;
    }
    s << seconds_since(t0) << " s";
    return {ok, s.str()};
}

Outcome criterion_3() {
    bool ok = !sample_solutions().empty();
    for (const auto& R : sample_solutions()) {
        const auto& G = R.map.group();
        const auto& sol = R.solution;
        bool kernel = true;
        for (Index i = 0; i < G.order(); ++i) {
            const GroupElement g = G.element(i);
            const bool in_plus = g.x % 2 == 0;
            kernel = kernel && ((R.skew.pi[i] == 1) == in_plus);
        }
        auto v = two_adic::deg2(static_cast<i64>(sol.t + 1));
        const unsigned bound = std::max(sol.delta.b + 1, sol.delta.a - sol.delta.c + 2);
        const bool valuation = v.is_infinite() || v.value() >= bound;
        const bool residue = (sol.t % R.balance.d) == (R.balance.t % R.balance.d);
        if (!(kernel && valuation && residue))
            log() << "  " << sol.delta.to_string() << " z1=" << sol.z1 << ": kernel=" << kernel
                  << " valuation=" << valuation << " residue=" << residue << "\n";
        ok = ok && kernel && valuation && residue;
    }
    return {ok, std::to_string(sample_solutions().size()) + " solutions over D(7,3,4), D(8,3,5), D(9,3,6), D(9,4,5)"};
}

Outcome criterion_4() {
    bool ok = !sample_solutions().empty();
    for (const auto& R : sample_solutions()) {
        const auto& D = R.solution.delta;
        bool pass = false;
        std::string why;
        try {
            QuotientMap q = quotient_map(R.map, R.skew, pow2(D.c));
            const auto& H = q.map.group();
            const bool shape = H.n() == pow2(D.c) && H.m() == pow2(D.b) && H.is_abelian();
            auto check = check_document({q.map, skew_table(H, q.skew)});
            auto prof = quotient_cross_check(R);
            const bool valency = prof.dbar == pow2(prof.k + 1) && (R.solution.t + 1) % prof.dbar == 0 &&
                                 q.map.valency() == prof.dbar;
            pass = shape && check.ok() && prof.ok() && valency && prof.type == MapType::I &&
                   prof.psi_plus_square_identity;
            if (!pass) why = "shape/check/profile mismatch";
        } catch (const std::exception& e) {
            why = e.what();
        }
        if (!pass) log() << "  " << D.to_string() << " z1=" << R.solution.z1 << ": " << why << "\n";
        ok = ok && pass;
    }
    return {ok, "quotients by <a^(2^c)> checked for " + std::to_string(sample_solutions().size()) + " solutions"};
}

Outcome criterion_5() {
    using namespace two_adic;
    std::mt19937_64 rng(20240229);
    std::size_t random_ok = 0;
    for (int i = 0; i < 1000; ++i) {
        const unsigned e = 3 + rng() % 20;
        const unsigned target = e + 1 + rng() % 30;
        const u64 s = (rng() | 1u) & mask(e);
        const u64 h = (mul_mod(s, s, 62) + ((rng() & mask(20)) << e)) & mask(60);
        auto out = sqrt_lift(static_cast<i64>(s), static_cast<i64>(h), e, target);
        if (mul_mod(out.value(), out.value(), target) == (h & mask(target)) &&
            (out.value() & mask(e - 1)) == (s & mask(e - 1)))
            ++random_ok;
    }
    std::size_t cases = 0, agree = 0;
    for (unsigned e = 3; e <= 6; ++e)
        for (unsigned target = e + 1; target <= 12; ++target)
            for (u64 h = 1; h < pow2(target); h += 2)
                for (u64 s = 1; s < pow2(e); s += 2) {
                    if (mul_mod(s, s, e) != (h & mask(e))) continue;
                    ++cases;
                    std::set<u64> roots;
                    for (u64 x = 0; x < pow2(target); ++x)
                        if (mul_mod(x, x, target) == h && (x & mask(e - 1)) == (s & mask(e - 1))) roots.insert(x);
                    auto out = sqrt_lift(static_cast<i64>(s), static_cast<i64>(h), e, target);
                    if (roots.count(out.value())) ++agree;
                }
    std::ostringstream d;
    d << random_ok << "/1000 random, " << agree << "/" << cases << " exhaustive";
    return {random_ok == 1000 && agree == cases, d.str()};
}

Outcome criterion_6() {
    bool ok = true;
    u64 pairs = 0;
    for (auto desc : {MetacyclicDescriptor{8, 2, 3}, MetacyclicDescriptor{16, 4, 5}}) {
        MetacyclicGroup G(desc);
        PermRepresentation P(G);
        const auto els = G.elements();
        std::vector<std::vector<Index>> perm;
        for (const auto& g : els) perm.push_back(P.of(g));
        auto inverse_perm = [](const std::vector<Index>& p) {
            std::vector<Index> q(p.size());
            for (std::size_t i = 0; i < p.size(); ++i) q[p[i]] = static_cast<Index>(i);
            return q;
        };
        for (std::size_t i = 0; i < els.size(); ++i) {
            const auto inv = inverse_perm(perm[i]);
            ok = ok && P.element_of(inv) == G.inverse(els[i]);
            auto acc = P.of(G.identity());
            for (int k = 1; k <= 5; ++k) {
                acc = PermRepresentation::compose(acc, perm[i]);
                ok = ok && P.element_of(acc) == G.pow(els[i], k);
            }
            ok = ok && P.element_of(inv) == G.pow(els[i], -1);
            for (std::size_t j = 0; j < els.size(); ++j) {
                ++pairs;
                const auto prod = PermRepresentation::compose(perm[i], perm[j]);
                ok = ok && P.element_of(prod) == G.mul(els[i], els[j]);
                const auto comm = PermRepresentation::compose(
                    PermRepresentation::compose(PermRepresentation::compose(perm[i], perm[j]), inverse_perm(perm[i])),
                    inverse_perm(perm[j]));
                ok = ok && P.element_of(comm) == G.commutator(els[i], els[j]);
            }
        }
        if (!ok) log() << "  mismatch on " << desc.to_string() << "\n";
    }
    return {ok, std::to_string(pairs) + " pairs over L(8,2,3) and L(16,4,5)"};
}

Outcome criterion_7() {
    bool ok = true;
    std::ostringstream d;
    for (auto desc : {MetacyclicDescriptor{16, 4, 5}, MetacyclicDescriptor{32, 4, 5}}) {
        try {
            MetacyclicGroup G(desc);
            const auto params = enumerate_params(G);
            const auto brute = enumerate_automorphisms(G);
            std::mt19937_64 rng(7);
            const auto els = G.elements();
            std::size_t agree = 0;
            for (int i = 0; i < 10000; ++i) {
                const auto& s = params[rng() % params.size()];
                const auto& t = params[rng() % params.size()];
                const auto st = compose(s, t, G);
                bool pointwise = true;
                for (const auto& g : els) pointwise = pointwise && apply(st, G, g) == apply(s, G, apply(t, G, g));
                if (pointwise) ++agree;
            }
            const bool pass = params.size() == brute.size() && agree == 10000;
            log() << "  " << desc.to_string() << ": " << params.size() << " tuples, " << brute.size()
                  << " by search, compose agrees on " << agree << "/10000\n";
            d << desc.to_string() << " " << params.size() << "=" << brute.size() << " ";
            ok = ok && pass;
        } catch (const std::exception& e) {
            log() << "  " << desc.to_string() << ": " << e.what() << "\n";
            d << desc.to_string() << " rejected (" << e.what() << ") ";
            ok = false;
        }
    }
    return {ok, d.str()};
}

Outcome criterion_8() {
    bool ok = true;
    const MetacyclicGroup Z2({2, 1, 1});
    std::vector<MetacyclicDescriptor> tested = {{8, 2, 3},  {16, 4, 5},  {4, 2, 3},  {8, 2, 5},  {8, 2, 7},
                                                {16, 2, 7}, {4, 4, 3},   {2, 4, 1},  {32, 8, 5}, {64, 8, 17},
                                                {128, 8, 17}, {256, 8, 33}};
    for (const auto& desc : tested) {
        MetacyclicGroup G(desc);
        // Homomorphisms to Z2 are fixed by the images of a and b.
        std::set<std::vector<Index>> kernels;
        for (u64 i = 0; i < 2; ++i)
            for (u64 j = 0; j < 2; ++j) {
                GeneratorImages im{{i, 0}, {j, 0}};
                if ((i == 0 && j == 0) || !satisfies_relations(G, Z2, im)) continue;
                std::vector<Index> ker;
                for (const auto& g : G.elements())
                    if (map_element(Z2, im, g) == Z2.identity()) ker.push_back(G.index(g));
                kernels.insert(ker);
            }
        std::set<std::vector<Index>> mine;
        for (const auto& s : index2_subgroups(G)) {
            std::vector<Index> mem;
            for (const auto& g : G.elements())
                if (s.contains(g)) mem.push_back(G.index(g));
            mine.insert(mem);
        }
        const bool pass = mine.size() == 3 && kernels == mine;
        if (!pass) log() << "  " << desc.to_string() << ": " << mine.size() << " vs " << kernels.size() << "\n";
        ok = ok && pass;
    }
    return {ok, std::to_string(tested.size()) + " groups, 3 each"};
}

Outcome criterion_9() {
    bool ok = true;
    std::ostringstream d;
    for (const char* name : {"Z4", "Z8", "Z2xZ4", "L(8,2,3)"}) {
        MetacyclicGroup G(parse_group(name).descriptor);
        auto fast = enumerate_rbcm(G).maps;
        auto naive = naive_enumerate_rbcm(G).maps;
        std::set<std::vector<Index>> a, b;
        for (const auto& f : fast) a.insert(f.canonical);
        for (const auto& f : naive) b.insert(f.canonical);
        // Cross-check by direct isomorphism search as well as canonical forms.
        bool iso = fast.size() == naive.size();
        for (const auto& f : fast) {
            std::size_t hits = 0;
            for (const auto& g : naive) hits += are_isomorphic(f.map, g.map).has_value();
            iso = iso && hits == 1;
        }
        const bool pass = a == b && iso;
        d << name << ":" << fast.size() << "/" << naive.size() << " ";
        ok = ok && pass;
    }
    return {ok, d.str()};
}

Outcome criterion_10() {
    SearchBudget budget;
    budget.max_order = 4096;
    auto res = guided_search_delta({7, 3, 4}, budget);
    std::vector<CayleyMap> engine;
    for (const auto& R : realize_all(solve(7, 3, 4))) engine.push_back(R.map);
    bool ok = res.exhaustive && engine.size() == 4;
    std::set<std::size_t> hit;
    for (const auto& f : res.maps) {
        std::size_t matches = 0;
        for (std::size_t k = 0; k < engine.size(); ++k)
            if (are_isomorphic(f.map, engine[k])) {
                ++matches;
                hit.insert(k);
            }
        ok = ok && matches == 1;
    }
    std::ostringstream d;
    d << res.maps.size() << " maps found, " << hit.size() << " engine classes hit, "
      << (res.exhaustive ? "exhaustive" : "stopped: " + res.stop_reason) << ", " << res.seconds << " s";
    return {ok, d.str()};
}

const std::vector<std::pair<std::string, std::function<Outcome()>>> kCriteria = {
    {"classification count on D(7,3,4)", criterion_1},
    {"count scaling", criterion_2},
    {"kernel of pi and t valuation", criterion_3},
    {"quotient reduction", criterion_4},
    {"Hensel lifting", criterion_5},
    {"group law against permutation representation", criterion_6},
    {"automorphism parametrization", criterion_7},
    {"index-2 subgroups", criterion_8},
    {"small-group oracle agreement", criterion_9},
    {"guided completeness on D(7,3,4)", criterion_10},
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> chosen;
    bool with_long = false;
    for (int i = 1; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--criterion") && i + 1 < argc) {
            chosen.push_back(std::atoi(argv[++i]));
        } else if (!std::strcmp(argv[i], "--long")) {
            with_long = true;
        } else {
            std::cerr << "usage: acceptance [--criterion N]... [--long]\n";
            return 2;
        }
    }
    if (chosen.empty())
        for (int k = 1; k <= 9 + (with_long ? 1 : 0); ++k) chosen.push_back(k);

    int failed = 0;
    for (int k : chosen) {
        if (k < 1 || k > static_cast<int>(kCriteria.size())) {
            std::cerr << "no criterion " << k << "\n";
            return 2;
        }
        const auto& [name, fn] = kCriteria[k - 1];
        log() << "criterion " << k << " (" << name << ")\n";
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << "criterion " << k << ": " << (o.pass ? "PASS" : "FAIL") << " [" << name << "] " << o.detail
                  << std::endl;
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
