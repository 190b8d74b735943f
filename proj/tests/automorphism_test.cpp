#include <gtest/gtest.h>

#include <random>

#include "rbcm/automorphism.hpp"
#include "rbcm/homomorphism.hpp"

using namespace rbcm;

namespace {

MetacyclicGroup L(u64 n, u64 m, u64 r) { return MetacyclicGroup({n, m, r}); }

// Image of g under the homomorphism fixed by the generator images.
GroupElement extend(const MetacyclicGroup& G, const AutomorphismParams& p, const GroupElement& g) {
    return map_element(G, {p.alpha_image(), p.beta_image()}, g);
}

AutomorphismParams random_valid(const MetacyclicGroup& G, std::mt19937_64& rng) {
    while (true) {
        AutomorphismParams p{rng() % G.n(), rng() % G.m(), rng() % G.n(), rng() % G.m()};
        if (validate(p, G).ok) return p;
    }
}

}  // namespace

TEST(Validate, Examples) {
    auto G = L(16, 4, 5);
    EXPECT_TRUE(validate(AutomorphismParams::identity(), G).ok);
    EXPECT_TRUE(validate({1, 1, 4, 3}, G).ok);
    EXPECT_TRUE(preserves_relations({1, 1, 4, 3}, G));
    for (u64 x1 = 0; x1 < 16; x1 += 2)
        for (u64 x2 = 0; x2 < 16; x2 += 4) {
            auto rep = validate({x1, 0, x2, 1}, G);
            EXPECT_FALSE(rep.ok);
        }
    EXPECT_THROW(validate(AutomorphismParams::identity(), L(8, 2, 3)), std::invalid_argument);
}

TEST(Apply, Examples) {
    auto G = L(16, 4, 5);
    for (const auto& g : G.elements()) EXPECT_EQ(apply(AutomorphismParams::identity(), G, g), g);
    AutomorphismParams s{1, 1, 4, 3};
    EXPECT_EQ(apply(s, G, G.alpha()), (GroupElement{1, 1}));
    EXPECT_EQ(apply(s, G, G.beta()), (GroupElement{4, 3}));
    EXPECT_EQ(apply(s, G, G.mul(G.alpha(), G.beta())), G.mul(apply(s, G, G.alpha()), apply(s, G, G.beta())));
    for (const auto& g : G.elements()) EXPECT_EQ(apply(s, G, g), extend(G, s, g));
}

class AutomorphismGroups : public ::testing::TestWithParam<MetacyclicDescriptor> {};

TEST_P(AutomorphismGroups, ParameterCountMatchesBruteForce) {
    MetacyclicGroup G(GetParam());
    auto params = enumerate_params(G);
    auto brute = enumerate_isomorphisms(G, G);
    ASSERT_EQ(params.size(), brute.size());
    std::vector<GeneratorImages> from_params;
    for (const auto& p : params) from_params.push_back({p.alpha_image(), p.beta_image()});
    std::sort(from_params.begin(), from_params.end());
    EXPECT_EQ(from_params, brute);
}

TEST_P(AutomorphismGroups, ValidatedParamsAreAutomorphisms) {
    MetacyclicGroup G(GetParam());
    for (const auto& p : enumerate_params(G)) {
        ASSERT_TRUE(preserves_relations(p, G)) << p.to_string();
        for (const auto& g : G.elements()) ASSERT_EQ(apply(p, G, g), extend(G, p, g)) << p.to_string();
    }
}

TEST_P(AutomorphismGroups, ComposeIsPointwiseAndAssociative) {
    MetacyclicGroup G(GetParam());
    std::mt19937_64 rng(99);
    auto els = G.elements();
    for (int i = 0; i < 300; ++i) {
        auto s = random_valid(G, rng), t = random_valid(G, rng), u = random_valid(G, rng);
        auto st = compose(s, t, G);
        EXPECT_TRUE(validate(st, G).ok);
        for (int j = 0; j < 20; ++j) {
            auto g = els[rng() % els.size()];
            ASSERT_EQ(apply(st, G, g), apply(s, G, apply(t, G, g)));
        }
        EXPECT_EQ(compose(compose(s, t, G), u, G), compose(s, compose(t, u, G), G));
        auto inv = inverse(s, G);
        EXPECT_EQ(compose(s, inv, G), AutomorphismParams::identity());
        EXPECT_EQ(compose(AutomorphismParams::identity(), s, G), s);
    }
}

INSTANTIATE_TEST_SUITE_P(TwoGroups, AutomorphismGroups,
                         ::testing::Values(MetacyclicDescriptor{16, 4, 5}, MetacyclicDescriptor{32, 8, 5},
                                           MetacyclicDescriptor{16, 8, 5}, MetacyclicDescriptor{64, 16, 5},
                                           MetacyclicDescriptor{32, 4, 9}, MetacyclicDescriptor{32, 8, 9},
                                           MetacyclicDescriptor{64, 8, 17}));

TEST(Compose, ExhaustiveOnL16_4_5) {
    auto G = L(16, 4, 5);
    AutomorphismParams s{1, 1, 4, 3};
    auto ss = compose(s, s, G);
    for (const auto& g : G.elements()) EXPECT_EQ(apply(ss, G, g), apply(s, G, apply(s, G, g)));
}

TEST(SimplifiedCompose, AgreesWithGeneralCompose) {
    std::mt19937_64 rng(2024);
    for (auto d : {MetacyclicDescriptor{64, 8, 17}, MetacyclicDescriptor{128, 8, 17}, MetacyclicDescriptor{256, 8, 33},
                   MetacyclicDescriptor{512, 16, 33}}) {
        MetacyclicGroup G(d);
        for (int i = 0; i < 10000; ++i) {
            auto s = random_valid(G, rng), t = random_valid(G, rng);
            ASSERT_EQ(simplified_compose(s, t, G), compose(s, t, G)) << d.to_string() << s.to_string() << t.to_string();
        }
        EXPECT_EQ(simplified_compose(AutomorphismParams::identity(), AutomorphismParams{3, 1, 8, 1}, G),
                  (AutomorphismParams{3, 1, 8, 1}));
    }
}

TEST(SimplifiedCompose, BoundaryCaseIsRejected) {
    for (auto d : {MetacyclicDescriptor{64, 16, 17}, MetacyclicDescriptor{64, 16, 5}}) {
        auto G = MetacyclicGroup(d);
        const u64 half = u64{1} << (shape_of(G).c - 1);
        EXPECT_THROW(simplified_compose(AutomorphismParams::identity(), AutomorphismParams::identity(), G),
                     std::invalid_argument);
        std::mt19937_64 rng(1);
        std::size_t mismatches = 0;
        for (int i = 0; i < 2000; ++i) {
            auto s = random_valid(G, rng), t = random_valid(G, rng);
            auto full = compose(s, t, G);
            // Same reduced formulas, evaluated by hand.
            const u64 n = G.n();
            u64 x1 = t.x1;
            u64 corr = (half * s.y1 % n) * (x1 * ((x1 + n - 1) % n) % n) % n;
            u64 h1 = (s.x1 * ((x1 + corr) % n) + s.x2 * t.y1) % n;
            u64 h2 = (s.x1 * t.x2 + s.x2 * t.y2) % n;
            mismatches += h1 != full.x1 || h2 != full.x2;
        }
        EXPECT_GT(mismatches, 0u) << d.to_string();
    }
}

TEST(Descriptor, InconsistentExponentRejected) {
    // 5 has order 8 modulo 32, so beta^4 = 1 cannot hold with alpha of order 32.
    EXPECT_THROW(L(32, 4, 5), std::invalid_argument);
    EXPECT_THROW(L(128, 4, 17), std::invalid_argument);
}

TEST(Restriction, Examples) {
    DeltaDescriptor D{7, 3, 4};
    MetacyclicGroup G(D.metacyclic());
    auto id = restrict_to_plus(AutomorphismParams::identity(), G);
    EXPECT_EQ(id.params, AutomorphismParams::identity());
    EXPECT_EQ(id.plus_group, (MetacyclicDescriptor{64, 8, 17}));

    AutomorphismParams p{1, 0, 2, 1};
    auto res = restrict_to_plus(p, G);
    EXPECT_EQ(res.params, (AutomorphismParams{1, 0, 1, 1}));

    try {
        restrict_to_plus({1, 0, 1, 1}, G);
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("2 | p2"), std::string::npos);
    }
}

TEST(Restriction, AgreesWithApplyOnEveryAutomorphismSample) {
    DeltaDescriptor D{7, 3, 4};
    MetacyclicGroup G(D.metacyclic());
    auto pres = plus_presentation(G, Index2Tag::AlphaSqBeta);
    MetacyclicGroup H(pres.sub);
    std::mt19937_64 rng(8);
    for (int i = 0; i < 200; ++i) {
        auto p = random_valid(G, rng);
        auto res = restrict_to_plus(p, G);
        EXPECT_TRUE(validate(res.params, H).ok);
        for (int j = 0; j < 50; ++j) {
            GroupElement h{rng() % H.n(), rng() % H.m()};
            ASSERT_EQ(apply(p, G, pres.include(h)), pres.include(apply(res.params, H, h)));
        }
    }
}

TEST(Lifting, Examples) {
    DeltaDescriptor D{7, 3, 4};
    MetacyclicGroup G(D.metacyclic());
    MetacyclicGroup H(plus_presentation(G, Index2Tag::AlphaSqBeta).sub);
    EXPECT_TRUE(lifts_to_whole(AutomorphismParams::identity(), D));
    EXPECT_FALSE(lifts_to_whole(normal_form(3, 5), D));
    AutomorphismParams plus{1, 2, 0, 1};
    ASSERT_TRUE(validate(plus, H).ok);
    EXPECT_TRUE(lifts_to_whole(plus, D));
    auto lift = find_lift(plus, D);
    ASSERT_TRUE(lift);
    EXPECT_EQ(restrict_to_plus(*lift, G).params, plus);
}

TEST(Lifting, CriterionMatchesRestrictionImage) {
    DeltaDescriptor D{7, 3, 4};
    MetacyclicGroup G(D.metacyclic());
    MetacyclicGroup H(plus_presentation(G, Index2Tag::AlphaSqBeta).sub);
    std::vector<AutomorphismParams> image;
    for (const auto& p : enumerate_params(G)) image.push_back(restrict_to_plus(p, G).params);
    std::sort(image.begin(), image.end());
    image.erase(std::unique(image.begin(), image.end()), image.end());
    std::size_t liftable = 0;
    for (const auto& q : enumerate_params(H)) {
        bool in_image = std::binary_search(image.begin(), image.end(), q);
        ASSERT_EQ(lifts_to_whole(q, D), in_image) << q.to_string();
        liftable += in_image;
    }
    EXPECT_EQ(liftable, image.size());
}

TEST(Conjugation, AgreesWithComposition) {
    for (DeltaDescriptor D : {DeltaDescriptor{7, 3, 4}, DeltaDescriptor{8, 3, 5}}) {
        MetacyclicGroup G(D.metacyclic());
        MetacyclicGroup H(plus_presentation(G, Index2Tag::AlphaSqBeta).sub);
        const u64 w = (u64{1} << D.b) + 1 - (u64{1} << (D.c - 2));
        std::size_t successes = 0;
        for (const auto& tau : enumerate_params(H)) {
            if (!lifts_to_whole(tau, D)) continue;
            for (u64 z = 3; z < H.n(); z += 8) {
                auto res = conjugate_normal_form(tau, z, w, D);
                auto direct = compose(compose(tau, normal_form(z, w), H), inverse(tau, H), H);
                if (res.zw) {
                    ++successes;
                    ASSERT_EQ(direct, normal_form(res.zw->first, res.zw->second)) << tau.to_string() << " z=" << z;
                } else {
                    EXPECT_FALSE(res.failed.empty());
                }
            }
            if (successes > 400) break;
        }
        EXPECT_GT(successes, 0u);
    }
}

TEST(Conjugation, Examples) {
    DeltaDescriptor D{7, 3, 4};
    MetacyclicGroup G(D.metacyclic());
    MetacyclicGroup H(plus_presentation(G, Index2Tag::AlphaSqBeta).sub);
    auto same = conjugate_normal_form(AutomorphismParams::identity(), 3, 5, D);
    ASSERT_TRUE(same.zw);
    EXPECT_EQ(*same.zw, (std::pair<u64, u64>{3, 5}));

    AutomorphismParams shift{1, 0, 32, 1};
    auto moved = conjugate_normal_form(shift, 3, 5, D);
    ASSERT_TRUE(moved.zw);
    EXPECT_EQ(moved.zw->first, 35u);
    EXPECT_EQ(compose(compose(shift, normal_form(3, 5), H), inverse(shift, H), H), normal_form(35, 5));

    EXPECT_THROW(conjugate_normal_form(AutomorphismParams::identity(), 5, 5, D), std::invalid_argument);
}

TEST(TextForm, Params) {
    AutomorphismParams p{1, 1, 4, 3};
    EXPECT_EQ(p.to_string(), "sigma(1,1;4,3)");
    EXPECT_EQ(parse_params(p.to_string()), p);
    EXPECT_THROW(parse_params("sigma(1,1,4,3)"), std::invalid_argument);
}
