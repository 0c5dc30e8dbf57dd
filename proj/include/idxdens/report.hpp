#pragma once

/**
 * @file report.hpp
 * @brief JSON serialization of results. Rationals travel as "num/den"
 *        strings; doubles use the shortest round-trip representation.
 */

#include <gmpxx.h>
#include <json.hpp>

#include <optional>
#include <string>

#include "idxdens/artin.hpp"
#include "idxdens/density.hpp"
#include "idxdens/empirical.hpp"
#include "idxdens/error.hpp"
#include "idxdens/kummer.hpp"

namespace idxdens::report {

using json = nlohmann::json;
using nt::u64;

inline std::string rational_str(const mpq_class& q) {
    return q.get_num().get_str() + "/" + q.get_den().get_str();
}

inline mpq_class parse_rational_str(const std::string& s) {
    mpq_class q;
    if (q.set_str(s, 10) != 0) throw ParseError("not a rational: '" + s + "'");
    q.canonicalize();
    return q;
}

inline json to_json(const density::DensityReport& r) {
    json j;
    j["method"] = density::to_string(r.method);
    j["value"] = r.value;
    j["lower"] = r.lower;
    j["upper"] = r.upper;
    j["truncation"] = r.truncation;
    j["estimated"] = r.estimated;
    j["ledger"] = json::array();
    for (const auto& e : r.ledger) {
        json l{{"key", e.key}, {"value", e.value}};
        if (e.exact) l["exact"] = rational_str(*e.exact);
        if (!e.note.empty()) l["note"] = e.note;
        j["ledger"].push_back(l);
    }
    if (!r.lattice.empty()) {
        j["lattice"] = json::array();
        for (const auto& p : r.lattice)
            j["lattice"].push_back({{"B", p.B}, {"Q", p.Q}, {"members", p.members}, {"partial", p.partial}});
    }
    if (!r.notes.empty()) j["notes"] = r.notes;
    return j;
}

inline density::DensityReport density_from_json(const json& j) {
    density::DensityReport r;
    const std::string m = j.at("method");
    r.method = m == "series" ? density::Method::Series
               : m == "euler-product" ? density::Method::EulerProduct
                                      : density::Method::SingletonSum;
    r.value = j.at("value");
    r.lower = j.at("lower");
    r.upper = j.at("upper");
    r.truncation = j.at("truncation");
    r.estimated = j.at("estimated");
    for (const auto& l : j.at("ledger")) {
        density::LedgerEntry e;
        e.key = l.at("key");
        e.value = l.at("value");
        if (l.contains("exact")) e.exact = parse_rational_str(l.at("exact"));
        if (l.contains("note")) e.note = l.at("note");
        r.ledger.push_back(std::move(e));
    }
    if (j.contains("lattice"))
        for (const auto& p : j.at("lattice"))
            r.lattice.push_back({p.at("B"), p.at("Q"), p.at("members"), p.at("partial")});
    if (j.contains("notes")) r.notes = j.at("notes").get<std::vector<std::string>>();
    return r;
}

inline json to_json(const empirical::FrequencyReport& r) {
    return {{"hits", r.hits},         {"total", r.total},         {"skipped", r.skipped},
            {"filtered", r.filtered}, {"estimate", r.estimate},   {"wilson95", {r.lower, r.upper}},
            {"range", {r.range.lo, r.range.hi}}, {"resumed", r.resumed},
            {"note", "empirical frequency at finite height; densities are GRH-conditional"}};
}

inline empirical::FrequencyReport frequency_from_json(const json& j) {
    empirical::FrequencyReport r;
    r.hits = j.at("hits");
    r.total = j.at("total");
    r.skipped = j.at("skipped");
    r.filtered = j.at("filtered");
    r.estimate = j.at("estimate");
    r.lower = j.at("wilson95").at(0);
    r.upper = j.at("wilson95").at(1);
    r.range.lo = j.at("range").at(0);
    r.range.hi = j.at("range").at(1);
    r.resumed = j.at("resumed");
    return r;
}

inline json to_json(const artin::EulerProduct& e) {
    json j{{"lower", e.lower},
           {"upper", e.upper},
           {"cutoff", e.cutoff},
           {"primes_used", e.primes_used},
           {"tail_factor", e.tail_factor},
           {"absorbed_zero", e.absorbed_zero}};
    j["factors"] = json::array();
    for (const auto& [ell, v] : e.factors) j["factors"].push_back({{"ell", ell}, {"value", rational_str(v)}});
    return j;
}

inline artin::EulerProduct euler_from_json(const json& j) {
    artin::EulerProduct e;
    e.lower = j.at("lower");
    e.upper = j.at("upper");
    e.cutoff = j.at("cutoff");
    e.primes_used = j.at("primes_used");
    e.tail_factor = j.at("tail_factor");
    e.absorbed_zero = j.at("absorbed_zero");
    for (const auto& f : j.at("factors")) e.factors.emplace_back(f.at("ell"), parse_rational_str(f.at("value")));
    return e;
}

inline json to_json(const kummer::Deficiency& d) {
    return {{"ell", d.ell},       {"class", d.cls},     {"level", kummer::DeficiencyCache::tuple_str(d.level)},
            {"m", d.m},           {"c", d.c},           {"status", kummer::to_string(d.status)},
            {"total", d.total},   {"splits", d.splits}, {"degree", d.degree}};
}

inline json to_json(const kummer::DegreeResult& r) {
    json j{{"degree", r.degree.get_str()}, {"generic", r.generic.get_str()}, {"estimated", r.estimated}};
    j["deficiencies"] = json::array();
    for (const auto& d : r.deficiencies) j["deficiencies"].push_back(to_json(d));
    return j;
}

inline json to_json(const empirical::Distribution& d) {
    json j{{"ell", d.ell}, {"max_v", d.max_v}, {"total", d.total}, {"skipped", d.skipped}};
    j["counts"] = json::array();
    for (const auto& [v, c] : d.counts) {
        json vs = json::array();
        for (auto x : v.entries) vs.push_back(x > d.max_v ? json(">" + std::to_string(d.max_v)) : json(x));
        j["counts"].push_back({{"v", vs}, {"count", c}, {"frequency", d.frequency(v)}});
    }
    return j;
}

inline json to_json(const artin::OracleResult& r) {
    json j{{"method", r.method == artin::OracleMethod::ExactEnumeration ? "exact" : "monte-carlo"},
           {"estimate", r.estimate}};
    if (r.exact) j["exact"] = rational_str(*r.exact);
    if (r.method == artin::OracleMethod::MonteCarlo) {
        j["std_error"] = r.std_error;
        j["drawn"] = r.drawn;
        j["accepted"] = r.accepted;
    }
    return j;
}

// ---------------------------------------------------------------------------
// Compare
// ---------------------------------------------------------------------------

enum class Verdict { Consistent, Inconsistent, Inconclusive };

inline std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Consistent: return "consistent";
        case Verdict::Inconsistent: return "inconsistent";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

struct CompareResult {
    density::DensityReport analytic;
    empirical::FrequencyReport empirical;
    double z = 3.0;
    double empirical_lower = 0.0;
    double empirical_upper = 1.0;
    Verdict verdict = Verdict::Inconclusive;
};

/// Consistent iff the analytic interval and the Wilson interval at z overlap.
inline CompareResult compare(density::DensityReport analytic, empirical::FrequencyReport emp, double z) {
    CompareResult c;
    c.analytic = std::move(analytic);
    c.empirical = emp;
    c.z = z;
    std::tie(c.empirical_lower, c.empirical_upper) = empirical::wilson(emp.hits, emp.total, z);
    if (emp.total == 0) c.verdict = Verdict::Inconclusive;
    else if (c.analytic.upper >= c.empirical_lower && c.empirical_upper >= c.analytic.lower)
        c.verdict = Verdict::Consistent;
    else c.verdict = Verdict::Inconsistent;
    return c;
}

inline json to_json(const CompareResult& c) {
    return {{"analytic", to_json(c.analytic)},
            {"empirical", to_json(c.empirical)},
            {"z", c.z},
            {"empirical_interval", {c.empirical_lower, c.empirical_upper}},
            {"verdict", to_string(c.verdict)}};
}

}  // namespace idxdens::report
