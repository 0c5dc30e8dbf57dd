#pragma once

/**
 * @file pipeline.hpp
 * @brief Command implementations shared by the CLI and the test suites.
 *        Each command maps a validated RunConfig to a JSON result.
 */

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include "idxdens/artin.hpp"
#include "idxdens/config.hpp"
#include "idxdens/density.hpp"
#include "idxdens/empirical.hpp"
#include "idxdens/error.hpp"
#include "idxdens/kummer.hpp"
#include "idxdens/report.hpp"

namespace idxdens::pipeline {

using json = nlohmann::json;
using config::RunConfig;
using nt::u64;

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kConfigError = 2,
    kUnsupported = 3,
    kInconsistent = 4,
    kInconclusive = 5,
};

/// Directory for the deficiency cache, from IDXDENS_CACHE_DIR.
inline std::optional<std::filesystem::path> cache_dir() {
    if (const char* d = std::getenv("IDXDENS_CACHE_DIR"); d && *d) return std::filesystem::path(d);
    return std::nullopt;
}

/// Kummer engine whose cache is loaded from and saved to the cache dir.
class Engine {
public:
    explicit Engine(const RunConfig& cfg) {
        kummer::SamplingConfig s;
        s.prime_bound = cfg.sampling_bound;
        s.threads = cfg.threads;
        auto cache = std::make_shared<kummer::DeficiencyCache>();
        if (auto dir = cache_dir()) {
            path_ = *dir / "deficiencies.txt";
            if (std::filesystem::exists(path_)) cache->load(path_.string());
        }
        engine_ = std::make_shared<kummer::KummerEngine>(cfg.family(), s, cache);
    }
    ~Engine() {
        if (!path_.empty()) {
            try {
                std::filesystem::create_directories(path_.parent_path());
                engine_->cache().save(path_.string());
            } catch (...) {
            }
        }
    }
    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    std::shared_ptr<kummer::KummerEngine> get() const { return engine_; }
    kummer::KummerEngine& operator*() const { return *engine_; }

private:
    std::shared_ptr<kummer::KummerEngine> engine_;
    std::filesystem::path path_;
};

inline json header(const std::string& command, const RunConfig& cfg) {
    const auto family = cfg.family();
    json j{{"command", command}, {"family", family.canonical()}, {"fingerprint", family.fingerprint()}};
    if (cfg.set) j["set"] = *cfg.set;
    return j;
}

inline density::DensityQuery query(const RunConfig& cfg, const std::shared_ptr<kummer::KummerEngine>& engine) {
    density::DensityQuery q{cfg.family(), cfg.index_set(), {}, cfg.degree_mode, engine};
    q.congruence = cfg.congruence;
    q.mode = cfg.degree_mode;
    q.engine = engine;
    q.euler_cutoff = cfg.truncation.L;
    q.report_upto = cfg.truncation.report_upto;
    q.threads = cfg.threads;
    return q;
}

inline json run_degree(const RunConfig& cfg) {
    if (!cfg.degree) throw config::ConfigError("degree needs a 'degree' block with m and n");
    Engine eng(cfg);
    json j = header("degree", cfg);
    j["m"] = cfg.degree->m;
    j["n"] = cfg.degree->n;
    j["mode"] = kummer::to_string(cfg.degree_mode);
    j["result"] = report::to_json((*eng).degree(cfg.degree->m, cfg.degree->n, cfg.degree_mode));
    return j;
}

inline artin::PatternFamily patterns_of(const IndexSet& set) {
    if (set.finite_members()) throw UnsupportedError("unsupported: finite sets are not products of local patterns; use density");
    artin::PatternFamily V;
    V.default_rule = set.default_pattern();
    for (u64 ell : set.listed_primes()) V.at.emplace(ell, set.local_pattern(ell));
    return V;
}

/// Artin-type constant of the set's local patterns (default: V_l = {0_I}).
inline json run_artin(const RunConfig& cfg) {
    const auto family = cfg.family();
    const RankProfile profile = rank_profile(family);
    require_positive_ranks(profile);
    artin::PatternFamily V;
    V.default_rule = LocalPattern::zero(profile.n());
    if (cfg.set) {
        const IndexSet set = cfg.index_set();
        if (!set.classify().is_almost_cut())
            throw UnsupportedError("unsupported: artin needs a set cut by valuations");
        V = patterns_of(set);
    }
    artin::EulerOptions opt;
    opt.cutoff = cfg.truncation.L;
    opt.report_upto = cfg.truncation.report_upto;
    opt.threads = cfg.threads;
    json j = header("artin", cfg);
    j["separated"] = profile.is_separated();
    j["result"] = report::to_json(artin::euler_product(V, profile, opt));
    return j;
}

inline json run_oracle(const RunConfig& cfg) {
    if (!cfg.oracle) throw config::ConfigError("artin-oracle needs an 'oracle' block");
    const auto family = cfg.family();
    const RankProfile profile = rank_profile(family);
    const ValuationTuple v{cfg.oracle->v};
    const auto method =
        cfg.oracle->method == "exact" ? artin::OracleMethod::ExactEnumeration : artin::OracleMethod::MonteCarlo;
    const auto r = artin::prob_model_oracle(cfg.oracle->ell, v, family, method, static_cast<long long>(cfg.samples), cfg.seed);
    const mpq_class F = artin::F(cfg.oracle->ell, v, profile);
    json j = header("artin-oracle", cfg);
    j["ell"] = cfg.oracle->ell;
    j["v"] = cfg.oracle->v;
    j["seed"] = cfg.seed;
    j["F"] = report::rational_str(F);
    j["F_value"] = F.get_d();
    j["oracle"] = report::to_json(r);
    if (r.exact) j["agrees"] = *r.exact == F;
    else if (r.std_error > 0) j["z_score"] = (r.estimate - F.get_d()) / r.std_error;
    return j;
}

inline density::DensityReport analytic(const RunConfig& cfg, const std::shared_ptr<kummer::KummerEngine>& engine) {
    const auto q = query(cfg, engine);
    std::string method = cfg.method;
    if (method == "auto") {
        const auto cls = q.set.classify();
        method = cls.is_almost_cut() ? "euler" : cls.is_determined() ? "singletons" : "";
        if (method.empty())
            throw UnsupportedError("unsupported: set is not determined by valuations; no analytic method applies");
    }
    if (method == "series") {
        density::SeriesOptions so;
        so.N = cfg.truncation.N;
        so.mode = cfg.degree_mode;
        if (!q.congruence.trivial())
            throw UnsupportedError("unsupported: analytic densities take only the trivial congruence condition; use survey");
        return density::hooley_series(*engine, config::level_map_for(q.set), so);
    }
    if (method == "euler") return density::valuation_density(q);
    density::SingletonOptions so;
    so.B = cfg.truncation.B;
    if (cfg.truncation.Q) so.Q = SquareFreeModulus(*cfg.truncation.Q);
    so.lattice_B = cfg.truncation.B_lattice;
    so.lattice_Q = cfg.truncation.Q_lattice;
    return density::singleton_sum(q, so);
}

inline json run_density(const RunConfig& cfg) {
    Engine eng(cfg);
    json j = header("density", cfg);
    j["mode"] = kummer::to_string(cfg.degree_mode);
    j["result"] = report::to_json(analytic(cfg, eng.get()));
    return j;
}

inline empirical::SurveyOptions survey_options(const RunConfig& cfg) {
    empirical::SurveyOptions o;
    o.threads = cfg.threads;
    o.log_path = cfg.observation_log;
    o.resume = cfg.resume;
    return o;
}

inline json run_survey(const RunConfig& cfg) {
    const auto family = cfg.family();
    json j = header("survey", cfg);
    j["congruence"] = cfg.congruence.describe();
    if (cfg.local) {
        const auto d = empirical::distribution(cfg.sieve_range(), family, cfg.local->ell, cfg.local->max_v,
                                               survey_options(cfg));
        j["distribution"] = report::to_json(d);
        if (!cfg.set) return j;
    }
    j["result"] = report::to_json(
        empirical::survey(cfg.sieve_range(), family, cfg.index_set(), cfg.congruence, survey_options(cfg)));
    return j;
}

inline std::pair<json, report::Verdict> run_compare(const RunConfig& cfg) {
    Engine eng(cfg);
    const auto family = cfg.family();
    auto a = analytic(cfg, eng.get());
    auto e = empirical::survey(cfg.sieve_range(), family, cfg.index_set(), cfg.congruence, survey_options(cfg));
    const auto c = report::compare(std::move(a), e, cfg.z);
    json j = header("compare", cfg);
    j["result"] = report::to_json(c);
    return {j, c.verdict};
}

inline json run_classify(const RunConfig& cfg) {
    const auto set = cfg.index_set();
    const auto c = set.classify();
    json j = header("classify", cfg);
    j["description"] = set.describe();
    j["class"] = to_string(c.kind);
    if (c.kind == SetClass::AlmostCut) j["q0"] = c.q0;
    j["cut"] = c.is_cut();
    j["almost_cut"] = c.is_almost_cut();
    j["determined"] = c.is_determined();
    return j;
}

/// Bundled reproductions: each row pairs an analytic value with a survey.
inline json paper_examples(u64 sieve_bound, unsigned threads) {
    struct Row {
        std::string name;
        json cfg;
        std::string method;
    };
    const json primitive{{"type", "equals"}, {"t", {1}}};
    const std::vector<Row> rows = {
        {"Artin constant, <2>", {{"groups", {{"2"}}}, {"set", primitive}}, "euler"},
        {"Artin constant via series, <2>", {{"groups", {{"2"}}}, {"set", primitive}}, "series"},
        {"both primitive roots, <2>,<3>",
         {{"groups", {{"2"}, {"3"}}}, {"set", {{"type", "equals"}, {"t", {1, 1}}}}},
         "euler"},
        {"square-free index, <2>", {{"groups", {{"2"}}}, {"set", {{"type", "kfree"}, {"k", {2}}}}}, "euler"},
        {"square-free index via series, <2>", {{"groups", {{"2"}}}, {"set", {{"type", "kfree"}, {"k", {2}}}}}, "series"},
        {"index exactly 2, <2>", {{"groups", {{"2"}}}, {"set", {{"type", "equals"}, {"t", {2}}}}}, "series"},
        {"prime index, <2>", {{"groups", {{"2"}}}, {"set", {{"type", "primes"}}}}, "singletons"},
        {"(q, q^2) with W1 = W2 = <2>",
         {{"groups", {{"2"}, {"2"}}}, {"set", {{"type", "prime-tuple"}, {"exponents", {1, 2}}}}},
         "singletons"},
    };
    json out = json::array();
    for (const auto& row : rows) {
        json cfgj = row.cfg;
        cfgj["method"] = row.method;
        cfgj["sieve"] = {{"bound", sieve_bound}};
        cfgj["threads"] = threads;
        const RunConfig cfg = config::parse_config(cfgj);
        json r{{"example", row.name}, {"method", row.method}};
        const auto e = empirical::survey(cfg.sieve_range(), cfg.family(), cfg.index_set(), cfg.congruence);
        r["empirical"] = report::to_json(e);
        try {
            Engine eng(cfg);
            const auto c = report::compare(analytic(cfg, eng.get()), e, cfg.z);
            r["analytic"] = {{"value", c.analytic.value}, {"lower", c.analytic.lower}, {"upper", c.analytic.upper}};
            r["verdict"] = report::to_string(c.verdict);
        } catch (const UnsupportedError& err) {
            r["refusal"] = err.what();
            r["verdict"] = e.hits == 0 ? "refused; survey finds no primes" : "refused";
        }
        out.push_back(r);
    }
    return out;
}

/// Deterministic serialization used for result files.
inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline void write_output(const RunConfig& cfg, const json& j) {
    if (!cfg.output) return;
    std::filesystem::path p(*cfg.output);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw Error("cannot write result file " + *cfg.output);
    out << dump(j);
}

}  // namespace idxdens::pipeline
