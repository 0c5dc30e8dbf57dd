#pragma once

/**
 * @file config.hpp
 * @brief Run configuration: JSON parsing, validation, and descriptor grammar.
 *
 * Unknown keys are rejected at every level. Rationals and large integers
 * may be given as strings.
 */

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "idxdens/density.hpp"
#include "idxdens/empirical.hpp"
#include "idxdens/error.hpp"
#include "idxdens/index_sets.hpp"
#include "idxdens/kummer.hpp"
#include "idxdens/rational_groups.hpp"

namespace idxdens::config {

using json = nlohmann::json;
using nt::u64;

class ConfigError : public ParseError {
public:
    using ParseError::ParseError;
};

namespace detail {

inline void only_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

inline u64 as_u64(const json& j, const std::string& what) {
    if (j.is_number_unsigned()) return j.get<u64>();
    if (j.is_number_integer() && j.get<long long>() >= 0) return static_cast<u64>(j.get<long long>());
    if (j.is_number_float()) {
        const double d = j.get<double>();
        if (d >= 0 && d == std::floor(d) && d < 1.8e19) return static_cast<u64>(d);
    }
    if (j.is_string()) {
        try {
            std::size_t pos = 0;
            const u64 v = std::stoull(j.get<std::string>(), &pos);
            if (pos == j.get<std::string>().size()) return v;
        } catch (const std::exception&) {
        }
    }
    throw ConfigError(what + " must be a nonnegative integer");
}

inline std::vector<u64> as_u64_list(const json& j, const std::string& what) {
    if (!j.is_array()) throw ConfigError(what + " must be an array");
    std::vector<u64> out;
    for (const auto& x : j) out.push_back(as_u64(x, what));
    return out;
}

inline std::string as_string(const json& j, const std::string& what) {
    if (!j.is_string()) throw ConfigError(what + " must be a string");
    return j.get<std::string>();
}

inline CoordSet coord_rule(const std::string& s, const std::string& what) {
    if (s == "zero") return coord::zero();
    if (s == "any" || s == "zero-or-any") return coord::any();
    if (s.rfind("lt:", 0) == 0) {
        const u64 k = as_u64(json(s.substr(3)), what);
        if (k == 0) throw ConfigError(what + ": lt:0 is empty");
        return coord::below(static_cast<unsigned>(k));
    }
    if (s.rfind("eq:", 0) == 0) {
        const u64 v = as_u64(json(s.substr(3)), what);
        return {{static_cast<unsigned>(v), static_cast<unsigned>(v + 1)}};
    }
    if (s.rfind("ge:", 0) == 0) {
        const u64 v = as_u64(json(s.substr(3)), what);
        return {{static_cast<unsigned>(v), std::nullopt}};
    }
    throw ConfigError(what + ": unknown rule '" + s + "' (expected zero, any, lt:k, eq:v, ge:v)");
}

/// A local pattern: a rule string for every coordinate, an array of rule
/// strings (one per coordinate), or an array of explicit tuples.
inline LocalPattern pattern(const json& j, int n, const std::string& what) {
    if (j.is_string()) return LocalPattern::product(std::vector<CoordSet>(n, coord_rule(j.get<std::string>(), what)));
    if (!j.is_array()) throw ConfigError(what + " must be a rule string or an array");
    if (!j.empty() && j.front().is_string()) {
        if (static_cast<int>(j.size()) != n) throw ConfigError(what + " needs one rule per group");
        std::vector<CoordSet> c;
        for (const auto& x : j) c.push_back(coord_rule(as_string(x, what), what));
        return LocalPattern::product(std::move(c));
    }
    std::vector<ValuationTuple> tuples;
    for (const auto& t : j) {
        ValuationTuple v;
        for (u64 x : as_u64_list(t, what)) v.entries.push_back(static_cast<unsigned>(x));
        if (v.n() != n) throw ConfigError(what + ": tuple length must equal the number of groups");
        tuples.push_back(std::move(v));
    }
    return LocalPattern::finite(n, std::move(tuples));
}

}  // namespace detail

namespace detail {

inline IndexSet index_set(const json& j, int n) {
    using namespace detail;
    if (!j.is_object() || !j.contains("type")) throw ConfigError("set must be an object with a 'type'");
    const std::string type = as_string(j.at("type"), "set.type");
    auto tuple = [&](const char* key) {
        if (!j.contains(key)) throw ConfigError(std::string("set.") + key + " is required");
        auto t = as_u64_list(j.at(key), std::string("set.") + key);
        if (static_cast<int>(t.size()) != n) throw ConfigError(std::string("set.") + key + " needs one entry per group");
        for (u64 x : t)
            if (x == 0) throw ConfigError("index tuples have positive entries");
        return t;
    };
    IndexSet out = IndexSet::equals(std::vector<u64>(n, 1));
    if (type == "equals") {
        only_keys(j, {"type", "t"}, "set");
        out = IndexSet::equals(tuple("t"));
    } else if (type == "divides") {
        only_keys(j, {"type", "t"}, "set");
        out = IndexSet::divides(tuple("t"));
    } else if (type == "kfree") {
        only_keys(j, {"type", "k"}, "set");
        std::vector<unsigned> k;
        for (u64 x : tuple("k")) k.push_back(static_cast<unsigned>(x));
        out = IndexSet::kfree(std::move(k));
    } else if (type == "squarefree") {
        only_keys(j, {"type"}, "set");
        out = IndexSet::squarefree(n);
    } else if (type == "valuation") {
        only_keys(j, {"type", "at", "default"}, "set");
        std::map<u64, LocalPattern> at;
        if (j.contains("at")) {
            if (!j.at("at").is_object()) throw ConfigError("set.at must map primes to patterns");
            for (const auto& [k, v] : j.at("at").items())
                at.emplace(as_u64(json(k), "set.at key"), pattern(v, n, "set.at." + k));
        }
        const LocalPattern def = j.contains("default") ? pattern(j.at("default"), n, "set.default") : LocalPattern::any(n);
        out = IndexSet::valuation(n, std::move(at), def);
    } else if (type == "finite") {
        only_keys(j, {"type", "members"}, "set");
        if (!j.contains("members") || !j.at("members").is_array()) throw ConfigError("set.members must be an array");
        std::vector<IndexTuple> members;
        for (const auto& m : j.at("members")) {
            IndexTuple t{as_u64_list(m, "set.members")};
            if (t.n() != n) throw ConfigError("set.members: tuple length must equal the number of groups");
            members.push_back(std::move(t));
        }
        out = IndexSet::finite(n, std::move(members));
    } else if (type == "primes") {
        only_keys(j, {"type"}, "set");
        if (n != 1) throw ConfigError("set type 'primes' needs exactly one group; use prime-tuple");
        out = IndexSet::primes();
    } else if (type == "prime-tuple") {
        only_keys(j, {"type", "exponents"}, "set");
        std::vector<unsigned> a;
        for (u64 x : as_u64_list(j.at("exponents"), "set.exponents")) a.push_back(static_cast<unsigned>(x));
        if (static_cast<int>(a.size()) != n) throw ConfigError("set.exponents needs one entry per group");
        out = IndexSet::prime_tuple(std::move(a));
    } else if (type == "even-prime-count") {
        only_keys(j, {"type"}, "set");
        if (n != 1) throw ConfigError("set type 'even-prime-count' needs exactly one group");
        out = IndexSet::even_prime_count();
    } else {
        throw ConfigError("unknown set type '" + type + "'");
    }
    return out;
}

}  // namespace detail

/// Index-set descriptor grammar.
inline IndexSet parse_index_set(const json& j, int n) {
    try {
        return detail::index_set(j, n);
    } catch (const PreconditionError& e) {
        throw ConfigError(std::string("set: ") + e.what());
    }
}

struct Truncation {
    u64 N = 10'000;
    u64 L = 100'000;
    u64 B = 1'000;
    std::optional<u64> Q;
    std::vector<u64> B_lattice;
    std::vector<u64> Q_lattice;  // primorial bounds x, giving Q_x
    u64 report_upto = 50;
};

struct DegreeSpec {
    u64 m = 1;
    std::vector<u64> n;
};

struct OracleSpec {
    u64 ell = 3;
    std::vector<unsigned> v;
    std::string method = "exact";  // exact | monte-carlo
};

struct LocalSpec {
    u64 ell = 3;
    unsigned max_v = 2;
};

struct RunConfig {
    std::vector<std::vector<std::string>> groups;
    std::optional<json> set;
    Congruence congruence;
    Truncation truncation;
    u64 sieve_lo = 2;
    u64 sieve_bound = 1'000'000;
    u64 sieve_cap = empirical::kDefaultSieveCap;
    u64 sampling_bound = 1'000'000;
    kummer::DegreeMode degree_mode = kummer::DegreeMode::Generic;
    std::string method = "auto";  // auto | series | euler | singletons
    unsigned threads = 1;
    std::optional<std::string> output;
    std::optional<std::string> observation_log;
    bool resume = false;
    std::uint64_t seed = 1;
    u64 samples = 1'000'000;
    double z = 3.0;
    std::optional<DegreeSpec> degree;
    std::optional<OracleSpec> oracle;
    std::optional<LocalSpec> local;

    GroupFamily family() const {
        try {
            return GroupFamily::parse(groups);
        } catch (const FactorizationError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(std::string("groups: ") + e.what());
        }
    }
    int family_size() const { return static_cast<int>(groups.size()); }
    IndexSet index_set() const {
        if (!set) throw ConfigError("this command needs a 'set' descriptor");
        return parse_index_set(*set, family_size());
    }
    empirical::SieveRange sieve_range() const { return {sieve_lo, sieve_bound, sieve_cap}; }
};

inline RunConfig parse_config(const json& j) {
    using namespace detail;
    only_keys(j,
              {"groups", "set", "congruence", "truncation", "sieve", "sampling_bound", "degree_mode", "method",
               "threads", "output", "seed", "samples", "z", "degree", "oracle", "local"},
              "config");
    RunConfig c;
    if (!j.contains("groups") || !j.at("groups").is_array() || j.at("groups").empty())
        throw ConfigError("config needs a nonempty 'groups' array");
    for (const auto& g : j.at("groups")) {
        if (!g.is_array() || g.empty()) throw ConfigError("each group must be a nonempty array of rational literals");
        std::vector<std::string> lits;
        for (const auto& x : g) {
            if (x.is_string()) lits.push_back(x.get<std::string>());
            else if (x.is_number_integer()) lits.push_back(std::to_string(x.get<long long>()));
            else throw ConfigError("group generators must be strings or integers");
        }
        c.groups.push_back(std::move(lits));
    }
    if (c.groups.size() > static_cast<std::size_t>(kMaxFamilySize))
        throw ConfigError("at most " + std::to_string(kMaxFamilySize) + " groups are supported");
    if (j.contains("set")) {
        c.set = j.at("set");
        (void)parse_index_set(*c.set, c.family_size());
    }
    if (j.contains("congruence")) {
        const auto& cg = j.at("congruence");
        only_keys(cg, {"modulus", "residues"}, "congruence");
        c.congruence.modulus = as_u64(cg.at("modulus"), "congruence.modulus");
        c.congruence.residues = as_u64_list(cg.at("residues"), "congruence.residues");
        try {
            c.congruence.validate();
        } catch (const PreconditionError& e) {
            throw ConfigError(std::string("congruence: ") + e.what());
        }
    }
    if (j.contains("truncation")) {
        const auto& t = j.at("truncation");
        only_keys(t, {"N", "L", "B", "Q", "B_lattice", "Q_lattice", "report_upto"}, "truncation");
        if (t.contains("N")) c.truncation.N = as_u64(t.at("N"), "truncation.N");
        if (t.contains("L")) c.truncation.L = as_u64(t.at("L"), "truncation.L");
        if (t.contains("B")) c.truncation.B = as_u64(t.at("B"), "truncation.B");
        if (t.contains("Q")) c.truncation.Q = as_u64(t.at("Q"), "truncation.Q");
        if (t.contains("B_lattice")) c.truncation.B_lattice = as_u64_list(t.at("B_lattice"), "truncation.B_lattice");
        if (t.contains("Q_lattice")) c.truncation.Q_lattice = as_u64_list(t.at("Q_lattice"), "truncation.Q_lattice");
        if (t.contains("report_upto")) c.truncation.report_upto = as_u64(t.at("report_upto"), "truncation.report_upto");
        if (c.truncation.N < 1 || c.truncation.B < 1) throw ConfigError("truncation N and B must be >= 1");
        if (c.truncation.L < 2) throw ConfigError("truncation.L must be >= 2");
        if (c.truncation.Q) {
            try {
                SquareFreeModulus q(*c.truncation.Q);
            } catch (const PreconditionError& e) {
                throw ConfigError(std::string("truncation.Q: ") + e.what());
            }
        }
    }
    if (j.contains("sieve")) {
        const auto& s = j.at("sieve");
        only_keys(s, {"lo", "bound", "cap", "log", "resume"}, "sieve");
        if (s.contains("lo")) c.sieve_lo = as_u64(s.at("lo"), "sieve.lo");
        if (s.contains("bound")) c.sieve_bound = as_u64(s.at("bound"), "sieve.bound");
        if (s.contains("cap")) c.sieve_cap = as_u64(s.at("cap"), "sieve.cap");
        if (s.contains("log")) c.observation_log = as_string(s.at("log"), "sieve.log");
        if (s.contains("resume")) {
            if (!s.at("resume").is_boolean()) throw ConfigError("sieve.resume must be a boolean");
            c.resume = s.at("resume").get<bool>();
        }
        try {
            c.sieve_range().validate();
        } catch (const Error& e) {
            throw ConfigError(std::string("sieve: ") + e.what());
        }
    }
    if (j.contains("sampling_bound")) c.sampling_bound = as_u64(j.at("sampling_bound"), "sampling_bound");
    if (j.contains("degree_mode")) {
        try {
            c.degree_mode = kummer::parse_degree_mode(as_string(j.at("degree_mode"), "degree_mode"));
        } catch (const ParseError& e) {
            throw ConfigError(e.what());
        }
    }
    if (j.contains("method")) {
        c.method = as_string(j.at("method"), "method");
        if (c.method != "auto" && c.method != "series" && c.method != "euler" && c.method != "singletons")
            throw ConfigError("method must be auto, series, euler or singletons");
    }
    if (j.contains("threads")) {
        c.threads = static_cast<unsigned>(as_u64(j.at("threads"), "threads"));
        if (c.threads == 0 || c.threads > 256) throw ConfigError("threads must be in 1..256");
    }
    if (j.contains("output")) c.output = as_string(j.at("output"), "output");
    if (j.contains("seed")) c.seed = as_u64(j.at("seed"), "seed");
    if (j.contains("samples")) c.samples = as_u64(j.at("samples"), "samples");
    if (j.contains("z")) {
        if (!j.at("z").is_number() || j.at("z").get<double>() <= 0) throw ConfigError("z must be a positive number");
        c.z = j.at("z").get<double>();
    }
    if (j.contains("degree")) {
        const auto& d = j.at("degree");
        only_keys(d, {"m", "n"}, "degree");
        c.degree = DegreeSpec{as_u64(d.at("m"), "degree.m"), as_u64_list(d.at("n"), "degree.n")};
        if (c.degree->m == 0) throw ConfigError("degree.m must be positive");
        if (static_cast<int>(c.degree->n.size()) != c.family_size())
            throw ConfigError("degree.n needs one radical level per group");
    }
    if (j.contains("oracle")) {
        const auto& o = j.at("oracle");
        only_keys(o, {"ell", "v", "method"}, "oracle");
        OracleSpec s;
        s.ell = as_u64(o.at("ell"), "oracle.ell");
        for (u64 x : as_u64_list(o.at("v"), "oracle.v")) s.v.push_back(static_cast<unsigned>(x));
        if (o.contains("method")) s.method = as_string(o.at("method"), "oracle.method");
        if (s.method != "exact" && s.method != "monte-carlo") throw ConfigError("oracle.method must be exact or monte-carlo");
        if (!nt::is_prime_small(s.ell)) throw ConfigError("oracle.ell must be prime");
        if (static_cast<int>(s.v.size()) != c.family_size()) throw ConfigError("oracle.v needs one entry per group");
        c.oracle = s;
    }
    if (j.contains("local")) {
        const auto& l = j.at("local");
        only_keys(l, {"ell", "max_v"}, "local");
        LocalSpec s;
        s.ell = as_u64(l.at("ell"), "local.ell");
        if (l.contains("max_v")) s.max_v = static_cast<unsigned>(as_u64(l.at("max_v"), "local.max_v"));
        if (!nt::is_prime_small(s.ell)) throw ConfigError("local.ell must be prime");
        c.local = s;
    }
    (void)c.family();
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    return parse_config(j);
}

/// Level map of the series route implied by a single-group index set.
inline density::LevelMap level_map_for(const IndexSet& set) {
    using density::LevelMap;
    if (set.n() != 1) throw UnsupportedError("unsupported: the series route covers a single group only");
    const auto& d = set.descriptor();
    if (const auto* e = std::get_if<sets::Equals>(&d))
        return e->t[0] == 1 ? LevelMap::identity() : LevelMap::ziegler(e->t[0]);
    if (const auto* dv = std::get_if<sets::Divides>(&d)) return LevelMap::lenstra(dv->t[0]);
    if (const auto* k = std::get_if<sets::KFree>(&d)) return LevelMap::power(k->k[0]);
    if (const auto* vc = std::get_if<sets::ValuationConstraint>(&d)) {
        if (!(vc->default_rule.coords().size() == 1 && vc->default_rule.coords()[0] == coord::any()) ||
            vc->default_rule.is_finite_list())
            throw UnsupportedError("unsupported: the series route needs default 'any' and 'lt:k' rules");
        std::map<u64, unsigned> k_of;
        for (const auto& [ell, pat] : vc->at) {
            if (pat.is_finite_list() || pat.coords()[0].size() != 1 || pat.coords()[0][0].lo != 0 ||
                !pat.coords()[0][0].hi || *pat.coords()[0][0].hi == 0)
                throw UnsupportedError("unsupported: the series route needs 'lt:k' rules at listed primes");
            k_of[ell] = *pat.coords()[0][0].hi;
        }
        return LevelMap::prescribed(std::move(k_of));
    }
    throw UnsupportedError("unsupported: no series representation for set " + set.describe());
}

}  // namespace idxdens::config
