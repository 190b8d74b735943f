#pragma once

#include <vector>

#include "rbcm/metacyclic.hpp"

namespace rbcm {

// Generator images (alpha -> A, beta -> B) of a map from Lambda(n,m;r) into a group.
struct GeneratorImages {
    GroupElement alpha;
    GroupElement beta;
    auto operator<=>(const GeneratorImages&) const = default;
};

// A^x B^y computed in the target group.
inline GroupElement map_element(const MetacyclicGroup& target, const GeneratorImages& im, const GroupElement& g) {
    return target.mul(target.pow(im.alpha, static_cast<i64>(g.x)), target.pow(im.beta, static_cast<i64>(g.y)));
}

inline bool satisfies_relations(const MetacyclicGroup& source, const MetacyclicGroup& target,
                                const GeneratorImages& im) {
    if (target.pow(im.alpha, static_cast<i64>(source.n())) != target.identity()) return false;
    if (target.pow(im.beta, static_cast<i64>(source.m())) != target.identity()) return false;
    auto lhs = target.mul(target.mul(im.beta, im.alpha), target.inverse(im.beta));
    return lhs == target.pow(im.alpha, static_cast<i64>(source.r()));
}

// Whether the induced homomorphism is a bijection (requires equal orders).
inline bool is_bijective(const MetacyclicGroup& source, const MetacyclicGroup& target, const GeneratorImages& im) {
    if (source.order() != target.order()) return false;
    std::vector<char> seen(target.order(), 0);
    GroupElement ai = target.identity();
    for (u64 i = 0; i < source.n(); ++i) {
        GroupElement cur = ai;
        for (u64 j = 0; j < source.m(); ++j) {
            Index k = target.index(cur);
            if (seen[k]) return false;
            seen[k] = 1;
            cur = target.mul_unchecked(cur, im.beta);
        }
        ai = target.mul_unchecked(ai, im.alpha);
    }
    return true;
}

// All isomorphisms source -> target, as generator images, in sorted order.
inline std::vector<GeneratorImages> enumerate_isomorphisms(const MetacyclicGroup& source,
                                                           const MetacyclicGroup& target) {
    std::vector<GeneratorImages> out;
    if (source.order() != target.order()) return out;
    std::vector<GroupElement> as, bs;
    for (const auto& g : target.elements()) {
        u64 o = target.element_order(g);
        if (o == source.n()) as.push_back(g);
        if (o == source.m()) bs.push_back(g);
    }
    for (const auto& A : as)
        for (const auto& B : bs) {
            GeneratorImages im{A, B};
            if (satisfies_relations(source, target, im) && is_bijective(source, target, im)) out.push_back(im);
        }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace rbcm
