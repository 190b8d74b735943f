// rbcm: command-line front end. One JSON document on stdout, a summary on stderr.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "rbcm/rbcm.hpp"

using namespace rbcm;

namespace {

enum Status : int { Ok = 0, VerificationFailed = 1, InputError = 2, BudgetHit = 3 };

struct CommandResult {
    int status = Ok;
    Json payload = Json::object();
    std::string summary;
};

struct Globals {
    unsigned workers = 0;
    u64 seed = VerifyOptions{}.seed;

    VerifyOptions verify_options() const {
        VerifyOptions o;
        o.workers = worker_count(workers);
        o.seed = seed;
        return o;
    }
};

CommandResult input_error(const std::string& what) {
    CommandResult r;
    r.status = InputError;
    r.payload["error"] = what;
    r.summary = "error: " + what;
    return r;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// "a^16" -> kernel <a^16>; "a^16 b^4" -> <a^16, b^4>.
std::pair<u64, std::optional<u64>> kernel_powers(const MetacyclicGroup& G, const std::string& text) {
    auto g = parse_element(G, text);
    const u64 p = g.x == 0 ? G.n() : g.x;
    std::optional<u64> q;
    if (g.y != 0) q = g.y;
    return {p, q};
}

// ---------------------------------------------------------------------------

struct ClassifyArgs {
    unsigned a = 0, b = 0, c = 0;
    std::string level = "full";
    std::string write_maps;
};

CommandResult cmd_classify(const ClassifyArgs& args, const Globals& g) {
    const VerifyLevel level = args.level == "fast" ? VerifyLevel::Fast : VerifyLevel::Full;
    ClassifyReport rep;
    try {
        rep = classify(args.a, args.b, args.c, level, g.verify_options());
    } catch (const std::invalid_argument& e) {
        auto r = input_error(e.what());
        r.payload["command"] = "classify";
        return r;
    }
    const DeltaDescriptor& D = rep.necessary.delta;
    CommandResult r;
    Json& j = r.payload;
    j["command"] = "classify";
    j["group"] = D.to_string();
    j["metacyclic"] = format_group(D.metacyclic());
    j["verify_level"] = args.level;
    j["existence"] = rep.necessary.existence;
    j["reason"] = rep.necessary.reason.empty() ? Json(nullptr) : Json(rep.necessary.reason);
    j["constraints"] = rep.necessary.constraints;
    j["t_valuation_bound"] = rep.necessary.t_valuation_bound;
    j["expected_count"] = rep.necessary.existence ? (u64{1} << (D.a - D.c - 1)) : 0;
    j["count"] = rep.solutions.size();
    j["solutions"] = Json::array();
    for (std::size_t i = 0; i < rep.solutions.size(); ++i) {
        const bool verified =
            rep.realized[i].has_value() && (level == VerifyLevel::Fast || rep.profiles[i].has_value());
        Json s = solution_to_json(rep.solutions[i], verified ? &*rep.realized[i] : nullptr);
        if (rep.profiles[i]) s["quotient_profile"] = to_json(*rep.profiles[i]);
        j["solutions"].push_back(std::move(s));
    }
    if (rep.distinctness) {
        Json pairs = Json::array();
        for (const auto& p : rep.distinctness->pairs)
            pairs.push_back({{"i", p.i}, {"j", p.j}, {"exponent_separated", p.calculus_distinct},
                             {"isomorphic_by_search", p.search_isomorphic}});
        j["distinct"] = {{"pairs", pairs},
                         {"all_distinct", rep.distinctness->all_distinct},
                         {"certified_twice", rep.distinctness->certified_twice}};
    } else {
        j["distinct"] = nullptr;
    }
    j["failures"] = rep.failures;

    if (!args.write_maps.empty()) {
        std::filesystem::create_directories(args.write_maps);
        Json files = Json::array();
        for (std::size_t i = 0; i < rep.realized.size(); ++i) {
            if (!rep.realized[i]) continue;
            auto path = std::filesystem::path(args.write_maps) / ("z1_" + std::to_string(rep.solutions[i].z1) + ".json");
            std::ofstream(path) << serialize(document_of(*rep.realized[i]));
            files.push_back(path.string());
        }
        j["map_files"] = files;
    }

    r.status = rep.ok() ? Ok : VerificationFailed;
    j["status"] = r.status;
    std::ostringstream s;
    s << "classify " << D.to_string() << ": " << rep.solutions.size() << " solutions";
    if (!rep.necessary.existence) {
        s << " (" << rep.necessary.reason << ")";
    } else {
        s << " (expected " << j["expected_count"].get<u64>() << ")";
        if (rep.ok())
            s << ", all verified" << (rep.distinctness ? ", pairwise non-isomorphic" : "");
        else
            s << ", " << rep.failures.size() << " failure(s): " << rep.failures.front();
    }
    r.summary = s.str();
    return r;
}

// ---------------------------------------------------------------------------

struct BruteforceArgs {
    std::string group;
    bool guided = false;
    bool exhaustive = false;
    double time_limit = 0;
    u64 max_candidates = SearchBudget{}.max_candidates;
    std::optional<u64> max_order;
};

Json found_to_json(const FoundMap& f, const VerifyOptions& opt) {
    const auto& G = f.map.group();
    // Re-checked from the stored tables, not from search bookkeeping.
    auto check = check_document({f.map, skew_table(G, f.skew)}, opt);
    Json j;
    j["omega"] = Json::array();
    for (const auto& w : f.map.omega()) j["omega"].push_back(format_element(w));
    j["d"] = f.balance.d;
    j["t"] = f.balance.t;
    j["valid_t"] = f.balance.valid_t;
    j["ell"] = f.balance.ell;
    j["type"] = to_string(f.balance.type);
    j["genus"] = check.genus ? Json(check.genus->genus) : Json(nullptr);
    j["skew_ok"] = check.skew.has_value();
    j["regular"] = check.regular;
    j["balanced"] = check.balance.has_value();
    j["verified"] = check.ok();
    return j;
}

CommandResult cmd_bruteforce(const BruteforceArgs& args, const Globals& g) {
    ParsedGroup pg;
    try {
        pg = parse_group(args.group);
    } catch (const std::invalid_argument& e) {
        return input_error(e.what());
    }
    const MetacyclicGroup G(pg.descriptor);
    const VerifyOptions opt = g.verify_options();
    SearchBudget budget;
    budget.max_candidates = args.max_candidates;
    budget.time_limit_seconds = args.time_limit;
    budget.max_order = args.max_order.value_or(args.guided ? 4096 : 64);

    CommandResult r;
    Json& j = r.payload;
    j["command"] = "bruteforce";
    j["group"] = pg.text;
    j["order"] = G.order();
    j["budget"] = {{"max_order", budget.max_order},
                   {"max_candidates", budget.max_candidates},
                   {"time_limit_seconds", budget.time_limit_seconds}};
    std::vector<FoundMap> maps;
    bool complete = true;
    std::string stop;

    if (args.guided) {
        if (!pg.delta) return input_error("--guided needs a group of the form D(a,b,c)");
        if (G.order() > budget.max_order)
            return input_error("group order " + std::to_string(G.order()) + " exceeds --max-order");
        auto res = guided_search_delta(*pg.delta, budget, opt.workers);
        maps = std::move(res.maps);
        complete = res.exhaustive;
        stop = res.stop_reason;
        j["mode"] = "guided";
        j["stats"] = {{"candidates", res.candidates},
                      {"pruned_phi_plus", res.pruned_phi_plus},
                      {"pruned_closure", res.pruned_closure},
                      {"pruned_inverse2", res.pruned_inverse2},
                      {"seconds", res.seconds}};
    } else {
        j["mode"] = "enumerate";
        try {
            auto res = enumerate_rbcm(G, budget, opt.workers);
            maps = std::move(res.maps);
            j["stats"] = {{"candidates", res.candidates}};
        } catch (const BudgetExceeded& e) {
            maps = e.partial();
            complete = false;
            stop = e.what();
        }
    }

    j["complete"] = complete;
    j["stop_reason"] = stop.empty() ? Json(nullptr) : Json(stop);
    j["count"] = maps.size();
    j["maps"] = Json::array();
    bool all_verified = true;
    for (const auto& f : maps) {
        Json m = found_to_json(f, opt);
        all_verified = all_verified && m["verified"].get<bool>();
        j["maps"].push_back(std::move(m));
    }

    // Engine comparison for Delta groups.
    if (pg.delta && args.guided) {
        Json cmp = Json::array();
        auto nec = check_necessary(pg.delta->a, pg.delta->b, pg.delta->c);
        std::vector<CayleyMap> engine;
        if (nec.existence)
            for (const auto& s : solve(pg.delta->a, pg.delta->b, pg.delta->c, opt.workers))
                if (s.realizable)
                    if (auto bm = build_map(s.delta, s.phi_plus)) engine.push_back(bm->map);
        bool all_matched = true;
        for (const auto& f : maps) {
            Json hits = Json::array();
            for (std::size_t k = 0; k < engine.size(); ++k)
                if (are_isomorphic(f.map, engine[k])) hits.push_back(k);
            all_matched = all_matched && hits.size() == 1;
            cmp.push_back(hits);
        }
        j["engine_classes"] = engine.size();
        j["engine_matches"] = cmp;
        j["all_match_engine"] = all_matched;
        if (!all_matched) all_verified = false;
    }

    if (args.exhaustive && !args.guided) {
        Json nj;
        try {
            auto naive = naive_enumerate_rbcm(G, budget);
            std::set<std::vector<Index>> a, b;
            for (const auto& f : maps) a.insert(f.canonical);
            for (const auto& f : naive.maps) b.insert(f.canonical);
            nj = {{"count", naive.maps.size()}, {"complete", true}, {"agrees", a == b}};
            if (a != b) all_verified = false;
        } catch (const BudgetExceeded& e) {
            nj = {{"count", e.partial().size()}, {"complete", false}, {"agrees", nullptr}, {"stop_reason", e.what()}};
            complete = false;
            if (stop.empty()) stop = e.what();
        }
        j["naive"] = nj;
    }

    r.status = !all_verified ? VerificationFailed : (complete ? Ok : BudgetHit);
    j["status"] = r.status;
    std::ostringstream s;
    s << "bruteforce " << pg.text << ": " << maps.size() << " class(es), " << (complete ? "complete" : "partial");
    if (!stop.empty()) s << " (" << stop << ")";
    if (!all_verified) s << ", verification failed";
    r.summary = s.str();
    return r;
}

// ---------------------------------------------------------------------------

struct FileArgs {
    std::string file;
    std::string kernel;
};

std::optional<CommandResult> load(const std::string& file, MapDocument& doc) {
    try {
        doc = parse_map_document(read_file(file));
    } catch (const std::exception& e) {
        return input_error(e.what());
    }
    return std::nullopt;
}

// Quotient of a verified map; fills j and returns false on a failed check.
bool quotient_into(Json& j, const MapDocument& doc, const SkewMorphism& skew, const std::string& kernel,
                   const VerifyOptions& opt, std::optional<MapDocument>* out = nullptr) {
    const auto& G = doc.map.group();
    auto [p, q] = kernel_powers(G, kernel);
    QuotientMap qm = quotient_map(doc.map, skew, p, q, opt);
    const MetacyclicGroup& H = qm.map.group();
    MapDocument qdoc{qm.map, skew_table(H, qm.skew)};
    auto check = check_document(qdoc, opt);
    j["kernel"] = kernel;
    j["group"] = format_group(H.descriptor());
    j["check"] = to_json(check);
    bool ok = check.ok();
    if (check.ok() && H.is_abelian() && H.is_two_group()) {
        auto prof = abelian_profile_check(qm.map, qm.skew, *check.balance);
        j["profile"] = to_json(prof);
        ok = ok && prof.ok();
    } else {
        j["profile"] = nullptr;
    }
    if (out) *out = qdoc;
    return ok;
}

CommandResult cmd_verify(const FileArgs& args, const Globals& g) {
    MapDocument doc;
    if (auto err = load(args.file, doc)) return *err;
    const VerifyOptions opt = g.verify_options();
    CommandResult r;
    Json& j = r.payload;
    j["command"] = "verify";
    j["file"] = args.file;
    j["group"] = format_group(doc.map.group().descriptor());
    auto check = check_document(doc, opt);
    j["check"] = to_json(check);
    bool ok = check.ok();
    if (!args.kernel.empty()) {
        if (!ok) {
            j["quotient"] = nullptr;
        } else {
            Json qj;
            try {
                ok = quotient_into(qj, doc, *check.skew, args.kernel, opt) && ok;
            } catch (const std::invalid_argument& e) {
                return input_error(e.what());
            }
            j["quotient"] = qj;
        }
    }
    r.status = ok ? Ok : VerificationFailed;
    j["status"] = r.status;
    std::ostringstream s;
    s << "verify " << args.file << ": " << (ok ? "ok" : "FAILED");
    if (check.defect) s << " (" << *check.defect << ")";
    if (check.failure)
        s << " (witness eta=" << format_element(check.failure->eta) << ", mu=" << format_element(check.failure->mu)
          << ": " << check.failure->reason << ")";
    if (!check.generator_images_match) s << " (stored generator images disagree with the power table)";
    if (check.balance) s << ", d=" << check.balance->d << " t=" << check.balance->t << " ell=" << check.balance->ell;
    if (check.genus) s << ", genus " << check.genus->genus;
    r.summary = s.str();
    return r;
}

CommandResult cmd_quotient(const FileArgs& args, const Globals& g) {
    MapDocument doc;
    if (auto err = load(args.file, doc)) return *err;
    const VerifyOptions opt = g.verify_options();
    auto check = check_document(doc, opt);
    CommandResult r;
    Json& j = r.payload;
    j["command"] = "quotient";
    j["file"] = args.file;
    if (!check.ok()) {
        r.status = VerificationFailed;
        j["check"] = to_json(check);
        j["status"] = r.status;
        r.summary = "quotient " + args.file + ": input map does not verify";
        return r;
    }
    std::optional<MapDocument> qdoc;
    bool ok = false;
    try {
        ok = quotient_into(j, doc, *check.skew, args.kernel, opt, &qdoc);
    } catch (const std::invalid_argument& e) {
        return input_error(e.what());
    }
    j["command"] = "quotient";
    j["map"] = to_json(*qdoc);
    r.status = ok ? Ok : VerificationFailed;
    j["status"] = r.status;
    r.summary = "quotient by <" + args.kernel + ">: " + j["group"].get<std::string>() + ", " + (ok ? "ok" : "FAILED");
    return r;
}

CommandResult cmd_genus(const FileArgs& args, const Globals&) {
    MapDocument doc;
    if (auto err = load(args.file, doc)) return *err;
    CommandResult r;
    r.payload["command"] = "genus";
    r.payload["file"] = args.file;
    if (auto d = doc.map.defect()) {
        r.status = VerificationFailed;
        r.payload["defect"] = *d;
        r.payload["status"] = r.status;
        r.summary = "genus: invalid map (" + *d + ")";
        return r;
    }
    auto gd = genus(doc.map);
    r.payload["genus"] = to_json(gd);
    r.payload["status"] = Ok;
    r.summary = "genus " + std::to_string(gd.genus) + " (V=" + std::to_string(gd.vertices) +
                ", E=" + std::to_string(gd.edges) + ", F=" + std::to_string(gd.faces) + ")";
    return r;
}

CommandResult cmd_info(const std::string& group, const Globals&) {
    ParsedGroup pg;
    try {
        pg = parse_group(group);
    } catch (const std::invalid_argument& e) {
        return input_error(e.what());
    }
    const MetacyclicGroup G(pg.descriptor);
    CommandResult r;
    Json& j = r.payload;
    j["command"] = "info";
    j["group"] = pg.text;
    j["metacyclic"] = format_group(G.descriptor());
    j["n"] = G.n();
    j["m"] = G.m();
    j["r"] = G.r();
    j["order"] = G.order();
    j["abelian"] = G.is_abelian();
    j["two_group"] = G.is_two_group();
    Json subs = Json::array();
    for (const auto& s : all_index2_subgroups(G)) subs.push_back(s.name);
    j["index2_subgroups"] = subs;
    j["automorphism_count"] = G.order() <= 4096 ? Json(enumerate_automorphisms(G).size()) : Json(nullptr);
    if (pg.delta) {
        auto nec = check_necessary(pg.delta->a, pg.delta->b, pg.delta->c);
        j["delta"] = {{"a", pg.delta->a},
                      {"b", pg.delta->b},
                      {"c", pg.delta->c},
                      {"existence", nec.existence},
                      {"reason", nec.reason.empty() ? Json(nullptr) : Json(nec.reason)},
                      {"t_valuation_bound", nec.t_valuation_bound},
                      {"expected_count", nec.existence ? (u64{1} << (pg.delta->a - pg.delta->c - 1)) : 0}};
    } else {
        j["delta"] = nullptr;
    }
    j["status"] = Ok;
    r.summary = pg.text + ": order " + std::to_string(G.order()) + (G.is_abelian() ? ", abelian" : ", non-abelian");
    return r;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Regular t-balanced Cayley maps on split metacyclic groups"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--workers", g.workers, "worker threads (default: RBCM_WORKERS or all cores)");
    app.add_option("--seed", g.seed, "seed for sampled verification");

    ClassifyArgs ca;
    auto* classify_cmd = app.add_subcommand("classify", "classify RBCM_t on D(a,b,c)");
    classify_cmd->add_option("--a", ca.a)->required();
    classify_cmd->add_option("--b", ca.b)->required();
    classify_cmd->add_option("--c", ca.c)->required();
    classify_cmd->add_option("--verify-level", ca.level)->check(CLI::IsMember({"full", "fast"}));
    classify_cmd->add_option("--write-maps", ca.write_maps, "directory for one map file per solution");

    BruteforceArgs ba;
    auto* bf_cmd = app.add_subcommand("bruteforce", "enumerate RBCM_t by search");
    bf_cmd->add_option("--group", ba.group)->required();
    bf_cmd->add_flag("--guided", ba.guided, "restricted search on D(a,b,c)");
    bf_cmd->add_flag("--exhaustive", ba.exhaustive, "also run the naive oracle and compare");
    bf_cmd->add_option("--time-limit", ba.time_limit, "seconds, 0 = none");
    bf_cmd->add_option("--max-candidates", ba.max_candidates);
    bf_cmd->add_option("--max-order", ba.max_order);

    FileArgs va;
    auto* verify_cmd = app.add_subcommand("verify", "check a map file from definitions");
    verify_cmd->add_option("file", va.file)->required();
    verify_cmd->add_option("--quotient", va.kernel, "also factor by this kernel, e.g. \"a^16\"");

    FileArgs qa;
    auto* quotient_cmd = app.add_subcommand("quotient", "factor a map file by a kernel");
    quotient_cmd->add_option("file", qa.file)->required();
    quotient_cmd->add_option("--by", qa.kernel, "kernel generator(s), e.g. \"a^16\"")->required();

    FileArgs ga;
    auto* genus_cmd = app.add_subcommand("genus", "genus of a map file");
    genus_cmd->add_option("file", ga.file)->required();

    std::string info_group;
    auto* info_cmd = app.add_subcommand("info", "describe a group");
    info_cmd->add_option("--group", info_group)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return InputError;
    }

    CommandResult res;
    try {
        if (*classify_cmd) res = cmd_classify(ca, g);
        else if (*bf_cmd) res = cmd_bruteforce(ba, g);
        else if (*verify_cmd) res = cmd_verify(va, g);
        else if (*quotient_cmd) res = cmd_quotient(qa, g);
        else if (*genus_cmd) res = cmd_genus(ga, g);
        else res = cmd_info(info_group, g);
    } catch (const std::invalid_argument& e) {
        res = input_error(e.what());
    } catch (const std::exception& e) {
        res.status = VerificationFailed;
        res.payload = {{"error", e.what()}, {"status", VerificationFailed}};
        res.summary = std::string("error: ") + e.what();
    }
    if (!res.payload.contains("status")) res.payload["status"] = res.status;
    std::cout << serialize(res.payload);
    std::cerr << res.summary << "\n";
    return res.status;
}
