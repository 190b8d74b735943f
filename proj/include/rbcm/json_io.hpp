#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rbcm/cayley_map.hpp"
#include "rbcm/classify.hpp"
#include "rbcm/metacyclic.hpp"

namespace rbcm {

using Json = nlohmann::json;

// Skew-morphism as stored on disk: images of alpha and beta plus the power table.
struct SkewTable {
    GroupElement alpha_image, beta_image;
    std::vector<std::uint32_t> pi;
};

struct MapDocument {
    CayleyMap map;
    std::optional<SkewTable> skew;
};

inline SkewTable skew_table(const MetacyclicGroup& G, const SkewMorphism& s) {
    return {s.apply(G, G.alpha()), s.apply(G, G.beta()), s.pi};
}

inline Json to_json(const GroupElement& g) { return Json::array({g.x, g.y}); }

namespace json_detail {

inline u64 as_u64(const Json& j, const char* what) {
    if (!j.is_number_integer() || j.get<i64>() < 0)
        throw std::invalid_argument(std::string(what) + ": expected a nonnegative integer");
    return j.get<u64>();
}

inline const Json& field(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw std::invalid_argument(std::string("missing field '") + key + "'");
    return j.at(key);
}

}  // namespace json_detail

// [x, y] or "a^x b^y"; out-of-range coordinates are rejected, not reduced.
inline GroupElement element_from_json(const MetacyclicGroup& G, const Json& j) {
    GroupElement g;
    if (j.is_string()) {
        g = parse_element(G, j.get<std::string>());
    } else if (j.is_array() && j.size() == 2) {
        g = {json_detail::as_u64(j[0], "element"), json_detail::as_u64(j[1], "element")};
    } else {
        throw std::invalid_argument("element must be [x, y] or \"a^x b^y\"");
    }
    if (!G.contains(g)) throw std::invalid_argument("element " + format_element(g) + " is outside the group");
    return g;
}

inline Json to_json(const MapDocument& doc) {
    const auto& G = doc.map.group();
    Json j;
    j["group"] = format_group(G.descriptor());
    j["omega"] = Json::array();
    for (const auto& w : doc.map.omega()) j["omega"].push_back(to_json(w));
    if (doc.skew) {
        Json s;
        s["alpha"] = to_json(doc.skew->alpha_image);
        s["beta"] = to_json(doc.skew->beta_image);
        s["pi"] = doc.skew->pi;
        j["skew"] = std::move(s);
    }
    return j;
}

// Throws std::invalid_argument on anything malformed.
inline MapDocument map_from_json(const Json& j) {
    if (!j.is_object()) throw std::invalid_argument("map document must be a JSON object");
    const auto& gj = json_detail::field(j, "group");
    if (!gj.is_string()) throw std::invalid_argument("group must be a string such as \"L(8,2,3)\"");
    MetacyclicGroup G(parse_group(gj.get<std::string>()).descriptor);
    const auto& oj = json_detail::field(j, "omega");
    if (!oj.is_array()) throw std::invalid_argument("omega must be an array");
    std::vector<GroupElement> omega;
    for (const auto& e : oj) omega.push_back(element_from_json(G, e));
    MapDocument doc{CayleyMap(G, std::move(omega)), std::nullopt};
    if (j.contains("skew") && !j.at("skew").is_null()) {
        const auto& sj = j.at("skew");
        SkewTable t;
        t.alpha_image = element_from_json(G, json_detail::field(sj, "alpha"));
        t.beta_image = element_from_json(G, json_detail::field(sj, "beta"));
        const auto& pj = json_detail::field(sj, "pi");
        if (!pj.is_array()) throw std::invalid_argument("pi must be an array");
        for (const auto& v : pj) {
            u64 k = json_detail::as_u64(v, "pi");
            if (k == 0 || k > UINT32_MAX) throw std::invalid_argument("pi values must lie in 1..period");
            t.pi.push_back(static_cast<std::uint32_t>(k));
        }
        if (t.pi.size() != G.order())
            throw std::invalid_argument("pi has " + std::to_string(t.pi.size()) + " entries, group order is " +
                                        std::to_string(G.order()));
        doc.skew = std::move(t);
    }
    return doc;
}

inline MapDocument parse_map_document(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw std::invalid_argument(std::string("JSON parse error: ") + e.what());
    }
    return map_from_json(j);
}

// Keys come out sorted, so equal documents serialize to equal bytes.
inline std::string serialize(const Json& j) { return j.dump(2) + "\n"; }
inline std::string serialize(const MapDocument& doc) { return serialize(to_json(doc)); }

inline Json to_json(const SkewFailure& f) {
    return {{"eta", format_element(f.eta)}, {"mu", format_element(f.mu)}, {"reason", f.reason}};
}

inline Json to_json(const BalanceData& bd) {
    return {{"d", bd.d}, {"t", bd.t}, {"valid_t", bd.valid_t}, {"ell", bd.ell}, {"type", to_string(bd.type)}};
}

inline Json to_json(const GenusData& g) {
    return {{"vertices", g.vertices}, {"edges", g.edges}, {"faces", g.faces}, {"genus", g.genus}};
}

inline Json to_json(const AbelianRbcmProfile& p) {
    return {{"theta1", format_element(p.theta1)},
            {"theta2", format_element(p.theta2)},
            {"k", p.k},
            {"k_prime", p.k_prime},
            {"dbar", p.dbar},
            {"t", p.t},
            {"type", to_string(p.type)},
            {"psi_plus_square_identity", p.psi_plus_square_identity},
            {"failures", p.failures},
            {"ok", p.ok()}};
}

// One classification solution; `realized` is present when it verified.
inline Json solution_to_json(const ClassificationSolution& s, const RealizedRbcm* realized) {
    Json j = {{"a", s.delta.a},         {"b", s.delta.b},    {"c", s.delta.c},   {"z1", s.z1},
              {"z", s.z},               {"w", s.w},          {"u_tilde", s.u_tilde}, {"u1", s.u1},
              {"v1", s.v1},             {"s", s.s},          {"t", s.t},         {"d", s.d},
              {"ell", s.ell},           {"verified", realized != nullptr}};
    j["genus"] = realized ? Json(realized->genus.genus) : Json(nullptr);
    if (s.realizable) {
        j["phi_plus"] = s.phi_plus.to_string();
        j["omega_d"] = format_element(s.omega_d);
        j["omega_1"] = format_element(s.omega_1);
    } else {
        j["realization_failure"] = s.realization_failure;
    }
    return j;
}

inline MapDocument document_of(const RealizedRbcm& R) {
    return {R.map, skew_table(R.map.group(), R.skew)};
}

// ---------------------------------------------------------------------------
// Checking a stored map from definitions

struct DocumentCheck {
    std::optional<std::string> defect;   // map itself is malformed
    bool skew_stored = false;
    std::optional<SkewMorphism> skew;    // verified skew-morphism
    std::optional<SkewFailure> failure;  // witness when the skew check fails
    bool generator_images_match = true;
    bool regular = false;                // agrees with arc propagation
    std::optional<BalanceData> balance;
    std::optional<GenusData> genus;
    u64 pairs_checked = 0;
    bool exhaustive = true;

    bool ok() const { return !defect && skew && generator_images_match && regular && balance.has_value(); }
};

// phi is rebuilt from the power table alone, then checked against the
// stored generator images and against phi(eta mu) = phi(eta) phi^pi(eta)(mu).
inline DocumentCheck check_document(const MapDocument& doc, const VerifyOptions& opt = {}) {
    DocumentCheck out;
    const auto& M = doc.map;
    const auto& G = M.group();
    out.defect = M.defect();
    if (out.defect) return out;
    out.skew_stored = doc.skew.has_value();
    auto derived = is_regular(M, opt);
    if (doc.skew) {
        auto [phi, fail] = phi_from_powers(M, doc.skew->pi);
        if (!phi) {
            out.failure = fail;
            return out;
        }
        out.generator_images_match = G.element((*phi)[G.index(G.alpha())]) == doc.skew->alpha_image &&
                                     G.element((*phi)[G.index(G.beta())]) == doc.skew->beta_image;
        auto res = check_skew(G, *phi, opt, &doc.skew->pi);
        out.pairs_checked = res.pairs_checked;
        out.exhaustive = res.exhaustive;
        out.failure = res.failure;
        out.skew = res.skew;
        out.regular = out.skew && derived && derived->phi == out.skew->phi;
    } else {
        out.skew = derived;
        out.regular = derived.has_value();
        if (!derived) out.failure = SkewFailure{G.identity(), G.identity(), "arc propagation gives no skew-morphism"};
    }
    out.balance = balance_data(M);
    out.genus = genus(M);
    return out;
}

inline Json to_json(const DocumentCheck& c) {
    Json j;
    j["defect"] = c.defect ? Json(*c.defect) : Json(nullptr);
    j["skew_stored"] = c.skew_stored;
    j["skew_ok"] = c.skew.has_value();
    j["witness"] = c.failure ? to_json(*c.failure) : Json(nullptr);
    j["generator_images_match"] = c.generator_images_match;
    j["regular"] = c.regular;
    j["balance"] = c.balance ? to_json(*c.balance) : Json(nullptr);
    j["genus"] = c.genus ? to_json(*c.genus) : Json(nullptr);
    j["pairs_checked"] = c.pairs_checked;
    j["exhaustive"] = c.exhaustive;
    if (c.skew) j["period"] = c.skew->period;
    j["ok"] = c.ok();
    return j;
}

}  // namespace rbcm
