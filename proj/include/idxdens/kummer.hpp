#pragma once

/**
 * @file kummer.hpp
 * @brief Degrees of cyclotomic-Kummer extensions Q(zeta_m, W_I^{1/n_I}).
 *
 * The l-adic valuation of the Kummer degree over Q(zeta_{l^inf}) is, for
 * all but finitely many l, the linear form
 *
 *     sum_i e_i (R_{[1,i]} - R_{[1,i-1]})        (e_I non-increasing)
 *
 * and for the remaining l it differs from that form by a constant that
 * only depends on the difference-tuple class of e_I. We never compute the
 * entanglement algebraically. Instead the true degree of a small extension
 * is measured by counting primes that split completely in it (Chebotarev)
 * and snapping the reciprocal frequency to the nearest admissible divisor
 * of the generic degree. The measured gaps are the deficiencies.
 */

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "idxdens/error.hpp"
#include "idxdens/index_sets.hpp"
#include "idxdens/numtheory.hpp"
#include "idxdens/rational_groups.hpp"

namespace idxdens::kummer {

using nt::u64;

/// Partition of I into intervals plus the per-interval gap tuples.
struct DifferenceTuple {
    std::vector<std::pair<int, int>> intervals;  // 1-based [m, M]
    std::vector<std::vector<unsigned>> gaps;     // empty for singletons

    std::string to_string() const {
        std::string s;
        for (std::size_t k = 0; k < intervals.size(); ++k) {
            s += "[" + std::to_string(intervals[k].first) + "," + std::to_string(intervals[k].second) + "]:(";
            for (std::size_t j = 0; j < gaps[k].size(); ++j) s += (j ? "," : "") + std::to_string(gaps[k][j]);
            s += ")";
        }
        return s.empty() ? "()" : s;
    }
    friend bool operator==(const DifferenceTuple&, const DifferenceTuple&) = default;
};

inline bool is_non_increasing(const std::vector<unsigned>& e) {
    return std::is_sorted(e.begin(), e.end(), std::greater<>());
}

/// Starts a new interval at i+1 whenever e_i - e_{i+1} > C.
inline DifferenceTuple difference_tuple(const std::vector<unsigned>& e, unsigned C) {
    if (!is_non_increasing(e)) throw PreconditionError("difference tuple needs a non-increasing exponent tuple");
    DifferenceTuple out;
    if (e.empty()) return out;
    int start = 0;
    std::vector<unsigned> gaps;
    for (std::size_t i = 0; i + 1 < e.size(); ++i) {
        const unsigned d = e[i] - e[i + 1];
        if (d > C) {
            out.intervals.emplace_back(start + 1, static_cast<int>(i) + 1);
            out.gaps.push_back(std::move(gaps));
            gaps.clear();
            start = static_cast<int>(i) + 1;
        } else {
            gaps.push_back(d);
        }
    }
    out.intervals.emplace_back(start + 1, static_cast<int>(e.size()));
    out.gaps.push_back(std::move(gaps));
    return out;
}

/// Indices of x ordered by non-increasing value (stable).
inline std::vector<int> sorting_permutation(const ValuationTuple& x) {
    std::vector<int> sigma(x.n());
    std::iota(sigma.begin(), sigma.end(), 0);
    std::stable_sort(sigma.begin(), sigma.end(), [&](int a, int b) { return x[a] > x[b]; });
    return sigma;
}

/// f(x_I) = sum_i x_{s_i} (R_{s_1..s_i} - R_{s_1..s_{i-1}}) for a sorting
/// permutation s; the value does not depend on how ties are broken.
inline long long f_exponent(const ValuationTuple& x, const RankProfile& profile) {
    if (x.n() != profile.n()) throw PreconditionError("tuple length does not match the family size");
    long long total = 0;
    unsigned mask = 0;
    for (int i : sorting_permutation(x)) {
        const unsigned next = mask | (1u << i);
        total += static_cast<long long>(x[i]) * (profile(next) - profile(mask));
        mask = next;
    }
    return total;
}

/// l-adic valuation of the degree for l beyond the exceptional set; e_I
/// must be non-increasing in the family's own order.
inline long long generic_valuation(const std::vector<unsigned>& e, const RankProfile& profile) {
    if (!is_non_increasing(e)) throw PreconditionError("generic valuation needs a non-increasing exponent tuple");
    if (static_cast<int>(e.size()) != profile.n()) throw PreconditionError("tuple length does not match the family size");
    long long total = 0;
    unsigned prefix = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const unsigned next = prefix | (1u << i);
        total += static_cast<long long>(e[i]) * (profile(next) - profile(prefix));
        prefix = next;
    }
    return total;
}

inline mpz_class mpz_pow(u64 base, long long exp) {
    mpz_class r;
    mpz_ui_pow_ui(r.get_mpz_t(), base, static_cast<unsigned long>(exp));
    return r;
}

/// l-adic levels e_I(l) = (v_l(n_1), ..., v_l(n_n)).
inline ValuationTuple levels_at(const std::vector<u64>& radical_levels, u64 ell) {
    ValuationTuple e;
    for (u64 x : radical_levels) e.entries.push_back(nt::valuation(x, ell));
    return e;
}

inline void check_levels(u64 m, const std::vector<u64>& n_levels, int family_size) {
    if (m == 0) throw PreconditionError("m must be positive");
    if (static_cast<int>(n_levels.size()) != family_size)
        throw PreconditionError("need one radical level per group");
    for (u64 x : n_levels)
        if (x == 0 || m % x != 0)
            throw PreconditionError("radical level " + std::to_string(x) + " does not divide m = " + std::to_string(m));
}

/// phi(m) * prod_l l^{f(e_I(l))}: the degree when nothing is entangled.
inline mpz_class generic_degree(u64 m, const std::vector<u64>& n_levels, const RankProfile& profile) {
    check_levels(m, n_levels, profile.n());
    u64 l_all = 1;
    for (u64 x : n_levels) l_all = std::lcm(l_all, x);
    mpz_class d = nt::euler_phi(m);
    for (u64 ell : nt::prime_divisors(l_all)) d *= mpz_pow(ell, f_exponent(levels_at(n_levels, ell), profile));
    return d;
}

struct SamplingConfig {
    u64 prime_bound = 1'000'000;
    u64 reliability_cap = 512;
    double min_expected_splits = 400.0;
    unsigned threads = 1;
};

/// Outcome of one Chebotarev count.
struct DegreeEstimate {
    u64 degree = 0;
    u64 generic_bound = 0;
    long long total = 0;   // primes examined
    long long splits = 0;  // primes splitting completely
    double raw = 0.0;      // total / splits before snapping
};

enum class DegreeMode { Generic, Corrected };

inline std::string to_string(DegreeMode m) { return m == DegreeMode::Generic ? "generic" : "corrected"; }

inline DegreeMode parse_degree_mode(const std::string& s) {
    if (s == "generic") return DegreeMode::Generic;
    if (s == "corrected") return DegreeMode::Corrected;
    throw ParseError("degree mode must be 'generic' or 'corrected', got '" + s + "'");
}

enum class DeficiencyStatus { KnownZero, Estimated, Configured };

inline std::string to_string(DeficiencyStatus s) {
    switch (s) {
        case DeficiencyStatus::KnownZero: return "known-zero";
        case DeficiencyStatus::Estimated: return "estimated";
        case DeficiencyStatus::Configured: return "configured";
    }
    return "?";
}

/// c_{l,T} with the evidence it was derived from.
struct Deficiency {
    u64 ell = 2;
    std::string cls;        // difference-tuple class
    ValuationTuple level;   // level actually measured
    u64 m = 0;              // cyclotomic level of the measurement
    long long c = 0;
    DeficiencyStatus status = DeficiencyStatus::KnownZero;
    long long total = 0;
    long long splits = 0;
    u64 degree = 0;
};

/// Persistent table of measured deficiencies. Lookups take a shared lock;
/// inserts take the exclusive lock, so readers only ever see committed rows.
class DeficiencyCache {
public:
    struct Row {
        std::string fingerprint;
        std::string kind;  // "level" or "class"
        Deficiency d;
    };

    std::optional<Deficiency> find(const std::string& key) const {
        std::shared_lock lock(mu_);
        auto it = rows_.find(key);
        if (it == rows_.end()) return std::nullopt;
        return it->second.d;
    }

    void insert(const std::string& key, Row row) {
        std::unique_lock lock(mu_);
        rows_.emplace(key, std::move(row));
    }

    std::size_t size() const {
        std::shared_lock lock(mu_);
        return rows_.size();
    }

    /// Largest estimated c stored for a family (0 if none).
    long long max_c(const std::string& fingerprint) const {
        std::shared_lock lock(mu_);
        long long m = 0;
        for (const auto& [k, r] : rows_)
            if (r.fingerprint == fingerprint) m = std::max(m, r.d.c);
        return m;
    }

    static std::string level_key(const std::string& fp, u64 ell, u64 m, const ValuationTuple& e) {
        return fp + " level " + std::to_string(ell) + " " + std::to_string(m) + " " + tuple_str(e);
    }
    static std::string class_key(const std::string& fp, u64 ell, const std::string& cls) {
        return fp + " class " + std::to_string(ell) + " " + cls;
    }

    /// Text table, one row per entry:
    /// fingerprint kind ell class level m total splits degree c status
    void save(const std::string& path) const {
        std::shared_lock lock(mu_);
        std::ofstream out(path);
        if (!out) throw Error("cannot write deficiency cache '" + path + "'");
        out << "# fingerprint kind ell class level m total splits degree c status\n";
        for (const auto& [key, r] : rows_) {
            out << r.fingerprint << ' ' << r.kind << ' ' << r.d.ell << ' ' << r.d.cls << ' ' << tuple_str(r.d.level)
                << ' ' << r.d.m << ' ' << r.d.total << ' ' << r.d.splits << ' ' << r.d.degree << ' ' << r.d.c << ' '
                << to_string(r.d.status) << '\n';
        }
    }

    /// Loads rows written by save(); returns the number of rows read.
    std::size_t load(const std::string& path) {
        std::ifstream in(path);
        if (!in) return 0;
        std::string line;
        std::size_t count = 0;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::istringstream is(line);
            Row r;
            std::string level, status;
            if (!(is >> r.fingerprint >> r.kind >> r.d.ell >> r.d.cls >> level >> r.d.m >> r.d.total >> r.d.splits >>
                  r.d.degree >> r.d.c >> status))
                throw ParseError("malformed deficiency cache row: " + line);
            r.d.level = parse_tuple(level);
            r.d.status = status == "known-zero" ? DeficiencyStatus::KnownZero
                         : status == "configured" ? DeficiencyStatus::Configured
                                                  : DeficiencyStatus::Estimated;
            const std::string key = r.kind == "class" ? class_key(r.fingerprint, r.d.ell, r.d.cls)
                                                      : level_key(r.fingerprint, r.d.ell, r.d.m, r.d.level);
            insert(key, std::move(r));
            ++count;
        }
        return count;
    }

    static std::string tuple_str(const ValuationTuple& e) {
        std::string s;
        for (int i = 0; i < e.n(); ++i) s += (i ? "," : "") + std::to_string(e[i]);
        return s.empty() ? "-" : s;
    }
    static ValuationTuple parse_tuple(const std::string& s) {
        ValuationTuple e;
        if (s == "-") return e;
        std::istringstream is(s);
        std::string part;
        while (std::getline(is, part, ',')) e.entries.push_back(static_cast<unsigned>(std::stoul(part)));
        return e;
    }

private:
    mutable std::shared_mutex mu_;
    std::map<std::string, Row> rows_;
};

/// Result of degree() in either mode.
struct DegreeResult {
    mpz_class degree;
    mpz_class generic;
    bool estimated = false;  // some factor came from sampling
    std::vector<Deficiency> deficiencies;
};

/// Degree computations for one fixed family.
class KummerEngine {
public:
    explicit KummerEngine(GroupFamily family, SamplingConfig sampling = {},
                          std::shared_ptr<DeficiencyCache> cache = std::make_shared<DeficiencyCache>())
        : family_(std::move(family)),
          profile_(rank_profile(family_)),
          sampling_(sampling),
          cache_(std::move(cache)),
          fingerprint_(family_.fingerprint()) {
        for (const auto& g : family_.groups()) gens_.push_back(g.generators());
        bad_primes_ = family_.prime_support();
        cutoff_ = std::max<u64>(2, bad_primes_.empty() ? 2 : *bad_primes_.rbegin());
    }

    const GroupFamily& family() const { return family_; }
    const RankProfile& profile() const { return profile_; }
    const SamplingConfig& sampling() const { return sampling_; }
    DeficiencyCache& cache() const { return *cache_; }
    std::shared_ptr<DeficiencyCache> cache_ptr() const { return cache_; }
    const std::string& fingerprint() const { return fingerprint_; }

    /// Primes above this have c_{l,T} = 0 (support of the family, and 2).
    u64 deficiency_cutoff() const { return cutoff_; }

    /// Suggested difference-tuple constant: one more than the largest
    /// measured c. Classes are labelled with difference_C(), which stays
    /// fixed for the engine's lifetime so cache keys are stable.
    unsigned suggested_C() const { return static_cast<unsigned>(cache_->max_c(fingerprint_) + 1); }
    unsigned difference_C() const { return difference_C_; }
    void set_difference_C(unsigned C) { difference_C_ = C; }

    mpz_class generic_degree(u64 m, const std::vector<u64>& n_levels) const {
        return kummer::generic_degree(m, n_levels, profile_);
    }

    /// Largest generic degree the sampler can resolve at its prime bound.
    u64 reliable_limit() const {
        const auto& primes = nt::cached_primes(sampling_.prime_bound);
        const double total = static_cast<double>(nt::primes_prefix(primes, sampling_.prime_bound).size());
        const double by_count = std::floor(total / sampling_.min_expected_splits);
        return std::min<u64>(sampling_.reliability_cap, static_cast<u64>(by_count));
    }

    bool is_reliable(u64 m, const std::vector<u64>& n_levels) const {
        const mpz_class g = generic_degree(m, n_levels);
        return g <= mpz_class(static_cast<unsigned long>(reliable_limit()));
    }

    /// Counts primes p <= P with p = 1 mod m and every generator of W_i an
    /// n_i-th power residue, then snaps total/splits to the nearest
    /// multiple of phi(m) dividing the generic bound.
    DegreeEstimate degree_estimate(u64 m, const std::vector<u64>& n_levels) const {
        check_levels(m, n_levels, family_.size());
        const mpz_class g = generic_degree(m, n_levels);
        DegreeEstimate est;
        const auto& primes = nt::cached_primes(sampling_.prime_bound);
        const auto range = nt::primes_prefix(primes, sampling_.prime_bound);

        const unsigned threads = std::max(1u, sampling_.threads);
        std::vector<std::pair<long long, long long>> partial(threads, {0, 0});
        auto work = [&](unsigned t) {
            const std::size_t lo = range.size() * t / threads, hi = range.size() * (t + 1) / threads;
            long long tot = 0, hit = 0;
            for (std::size_t k = lo; k < hi; ++k) {
                const u64 p = range[k];
                if (m % p == 0 || bad_primes_.count(p)) continue;
                ++tot;
                if ((p - 1) % m != 0) continue;
                bool all = true;
                for (std::size_t i = 0; i < gens_.size() && all; ++i) {
                    if (n_levels[i] == 1) continue;
                    const u64 e = (p - 1) / n_levels[i];
                    for (const auto& gen : gens_[i])
                        if (nt::pow_mod(gen.reduce_mod(p), e, p) != 1) {
                            all = false;
                            break;
                        }
                }
                if (all) ++hit;
            }
            partial[t] = {tot, hit};
        };
        if (threads == 1) {
            work(0);
        } else {
            std::vector<std::jthread> pool;
            for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
        }
        for (auto [t, h] : partial) {
            est.total += t;
            est.splits += h;
        }

        const u64 limit = reliable_limit();
        if (g > mpz_class(static_cast<unsigned long>(limit)) || est.splits == 0)
            throw InconclusiveError("inconclusive: generic degree " + g.get_str() + " exceeds what " +
                                        std::to_string(est.total) + " primes can resolve (limit " +
                                        std::to_string(limit) + ")",
                                    est.total, est.splits);
        est.generic_bound = g.get_ui();
        est.raw = static_cast<double>(est.total) / static_cast<double>(est.splits);
        const u64 phi = nt::euler_phi(m);
        u64 best = phi;
        double best_dist = INFINITY;
        for (u64 d : nt::divisors(est.generic_bound / phi)) {
            const double dist = std::fabs(std::log(static_cast<double>(d * phi)) - std::log(est.raw));
            if (dist < best_dist) {
                best_dist = dist;
                best = d * phi;
            }
        }
        est.degree = best;
        return est;
    }

    /// c at exactly the levels e (m = l^{max e}); needs a resolvable level.
    /// Always measured, including above deficiency_cutoff().
    Deficiency estimate_deficiency(u64 ell, const ValuationTuple& e) const {
        return level_deficiency(ell, e.max(), e, true);
    }

    /// c_{l,T} for the class of e: measured at the highest resolvable
    /// level reached by lowering every entry of e by the same amount.
    Deficiency class_deficiency(u64 ell, const ValuationTuple& e) const {
        const std::string cls = class_of(e);
        if (ell > cutoff_) return known_zero(ell, e, cls);
        const std::string key = DeficiencyCache::class_key(fingerprint_, ell, cls);
        if (auto hit = cache_->find(key)) return *hit;
        const unsigned top = e.max();
        for (unsigned t = 0; t < top; ++t) {
            ValuationTuple shifted;
            for (auto x : e.entries) shifted.entries.push_back(x > t ? x - t : 0);
            if (!is_reliable(nt::ipow(ell, top - t), radical_levels(ell, shifted))) continue;
            Deficiency d = level_deficiency(ell, top - t, shifted);
            d.cls = cls;
            cache_->insert(key, {fingerprint_, "class", d});
            return d;
        }
        throw InconclusiveError("inconclusive: no resolvable representative for class " + cls + " at l = " +
                                    std::to_string(ell),
                                0, 0);
    }

    /// Degree of Q(zeta_m, W_I^{1/n_I}). Corrected mode measures small
    /// extensions outright; larger ones are assembled l by l from generic
    /// valuations minus measured deficiencies at l <= deficiency_cutoff().
    DegreeResult degree(u64 m, const std::vector<u64>& n_levels, DegreeMode mode) const {
        DegreeResult out;
        out.generic = generic_degree(m, n_levels);
        if (mode == DegreeMode::Generic) {
            out.degree = out.generic;
            return out;
        }
        if (out.generic <= mpz_class(static_cast<unsigned long>(reliable_limit()))) {
            const std::string key = DeficiencyCache::level_key(fingerprint_, 0, m, levels_key(n_levels));
            if (auto hit = cache_->find(key)) {
                out.degree = static_cast<unsigned long>(hit->degree);
            } else {
                const auto est = degree_estimate(m, n_levels);
                Deficiency d;
                d.ell = 0;
                d.cls = "full";
                d.level = levels_key(n_levels);
                d.m = m;
                d.total = est.total;
                d.splits = est.splits;
                d.degree = est.degree;
                d.status = DeficiencyStatus::Estimated;
                cache_->insert(key, {fingerprint_, "full", d});
                out.degree = static_cast<unsigned long>(est.degree);
            }
            out.estimated = true;
            return out;
        }
        u64 l_all = 1;
        for (u64 x : n_levels) l_all = std::lcm(l_all, x);
        mpz_class d = nt::euler_phi(m);
        for (u64 ell : nt::prime_divisors(l_all)) {
            const ValuationTuple e = levels_at(n_levels, ell);
            long long c = 0;
            if (ell <= cutoff_) {
                const unsigned m_exp = nt::valuation(m, ell);
                Deficiency def = is_reliable(nt::ipow(ell, m_exp), radical_levels(ell, e))
                                     ? level_deficiency(ell, m_exp, e)
                                     : class_deficiency(ell, e);
                c = def.c;
                out.estimated = out.estimated || def.status == DeficiencyStatus::Estimated;
                out.deficiencies.push_back(def);
            }
            d *= mpz_pow(ell, f_exponent(e, profile_) - c);
        }
        out.degree = d;
        return out;
    }

    /// G(w_I) = 1 / [Q(zeta_{l^{max w}}, W_I^{1/l^{w_I}}) : Q], the density
    /// of primes whose l-adic index valuations are all >= w_I.
    mpq_class survival(u64 ell, const ValuationTuple& w, DegreeMode mode) const {
        const unsigned top = w.max();
        if (top == 0) return 1;
        const auto levels = radical_levels(ell, w);
        const DegreeResult r = degree(nt::ipow(ell, top), levels, mode);
        return mpq_class(mpz_class(1), r.degree);
    }

    std::vector<u64> radical_levels(u64 ell, const ValuationTuple& e) const {
        std::vector<u64> out;
        for (auto x : e.entries) out.push_back(nt::ipow(ell, x));
        return out;
    }

private:
    std::string class_of(const ValuationTuple& e) const {
        std::vector<unsigned> sorted = e.entries;
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        return difference_tuple(sorted, difference_C_).to_string();
    }

    Deficiency known_zero(u64 ell, const ValuationTuple& e, const std::string& cls) const {
        Deficiency d;
        d.ell = ell;
        d.cls = cls;
        d.level = e;
        d.c = 0;
        d.status = DeficiencyStatus::KnownZero;
        return d;
    }

    static ValuationTuple levels_key(const std::vector<u64>& n_levels) {
        ValuationTuple t;
        for (u64 x : n_levels) t.entries.push_back(static_cast<unsigned>(x));
        return t;
    }

    Deficiency level_deficiency(u64 ell, unsigned m_exp, const ValuationTuple& e, bool measure = false) const {
        const std::string cls = class_of(e);
        if (ell > cutoff_ && !measure) return known_zero(ell, e, cls);
        const u64 m = nt::ipow(ell, m_exp);
        const std::string key = DeficiencyCache::level_key(fingerprint_, ell, m, e);
        if (auto hit = cache_->find(key)) return *hit;
        const auto est = degree_estimate(m, radical_levels(ell, e));
        const u64 kummer_part = est.degree / nt::euler_phi(m);
        Deficiency d;
        d.ell = ell;
        d.cls = cls;
        d.level = e;
        d.m = m;
        d.total = est.total;
        d.splits = est.splits;
        d.degree = est.degree;
        d.c = f_exponent(e, profile_) - static_cast<long long>(nt::valuation(kummer_part, ell));
        d.status = DeficiencyStatus::Estimated;
        cache_->insert(key, {fingerprint_, "level", d});
        return d;
    }

    GroupFamily family_;
    RankProfile profile_;
    SamplingConfig sampling_;
    std::shared_ptr<DeficiencyCache> cache_;
    std::string fingerprint_;
    std::vector<std::vector<FactoredRational>> gens_;
    std::set<u64> bad_primes_;
    u64 cutoff_ = 2;
    unsigned difference_C_ = 1;
};

}  // namespace idxdens::kummer
