#pragma once

/**
 * @file density.hpp
 * @brief Analytic densities of prime sets defined by index conditions.
 *
 * Three routes: the Moebius series over cyclotomic-Kummer degrees, the
 * Euler product of local series for sets cut (or almost cut) by
 * valuations, and sums of singleton densities for enumerable sets.
 */

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "idxdens/artin.hpp"
#include "idxdens/empirical.hpp"
#include "idxdens/error.hpp"
#include "idxdens/index_sets.hpp"
#include "idxdens/kummer.hpp"
#include "idxdens/numtheory.hpp"
#include "idxdens/rational_groups.hpp"

namespace idxdens::density {

using nt::u64;
using kummer::DegreeMode;

enum class Method { Series, EulerProduct, SingletonSum };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::Series: return "series";
        case Method::EulerProduct: return "euler-product";
        case Method::SingletonSum: return "singleton-sum";
    }
    return "?";
}

/// One line of a report ledger: a local factor, series term, or ratio.
struct LedgerEntry {
    std::string key;
    std::optional<mpq_class> exact;
    double value = 0.0;
    std::string note;
};

/// Partial sum at one point of the (B, Q) truncation lattice.
struct LatticePoint {
    u64 B = 0;
    u64 Q = 0;  // 0 means no smoothness restriction
    std::size_t members = 0;
    double partial = 0.0;
};

struct DensityReport {
    Method method = Method::Series;
    double value = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    std::string truncation;
    bool estimated = false;  // uses sampled degrees somewhere
    std::vector<LedgerEntry> ledger;
    std::vector<LatticePoint> lattice;
    std::vector<std::string> notes;

    double width() const { return upper - lower; }
};

struct DensityQuery {
    GroupFamily family;
    IndexSet set;
    Congruence congruence;
    DegreeMode mode = DegreeMode::Generic;
    std::shared_ptr<kummer::KummerEngine> engine;  // needed for corrected mode
    u64 euler_cutoff = 100'000;
    u64 report_upto = 50;
    unsigned threads = 1;
};

// ---------------------------------------------------------------------------
// Series
// ---------------------------------------------------------------------------

/// Level maps f(n) for the Moebius series.
struct LevelMap {
    enum class Kind { Identity, Ziegler, Lenstra, Power, Prescribed } kind = Kind::Identity;
    u64 t = 1;
    unsigned k = 1;
    std::map<u64, unsigned> k_of;  // Prescribed: l -> k(l) >= 1, restricted to these primes

    static LevelMap identity() { return {}; }
    static LevelMap ziegler(u64 t) { return {Kind::Ziegler, t, 1, {}}; }
    static LevelMap lenstra(u64 t) { return {Kind::Lenstra, t, 1, {}}; }
    static LevelMap power(unsigned k) { return {Kind::Power, 1, k, {}}; }
    static LevelMap prescribed(std::map<u64, unsigned> k_of) { return {Kind::Prescribed, 1, 1, std::move(k_of)}; }

    /// Whether n takes part in the sum (Prescribed sums over P'_infinity).
    bool admits(u64 n) const {
        if (kind != Kind::Prescribed) return true;
        for (u64 ell : nt::prime_divisors(n))
            if (!k_of.count(ell)) return false;
        return true;
    }

    u64 operator()(u64 n) const {
        switch (kind) {
            case Kind::Identity: return n;
            case Kind::Ziegler: return n * t;
            case Kind::Lenstra: {
                u64 f = n;
                for (u64 ell : nt::prime_divisors(n)) f *= nt::ipow(ell, nt::valuation(t, ell));
                return f;
            }
            case Kind::Power: return nt::ipow(n, k);
            case Kind::Prescribed: {
                u64 f = 1;
                for (u64 ell : nt::prime_divisors(n)) f *= nt::ipow(ell, k_of.at(ell));
                return f;
            }
        }
        return n;
    }

    std::string describe() const {
        switch (kind) {
            case Kind::Identity: return "f(n)=n";
            case Kind::Ziegler: return "f(n)=n*" + std::to_string(t);
            case Kind::Lenstra: return "f(n)=n*prod l^v_l(" + std::to_string(t) + ")";
            case Kind::Power: return "f(n)=n^" + std::to_string(k);
            case Kind::Prescribed: {
                std::string s = "f(n)=prod l^k(l), k:";
                for (auto [l, kl] : k_of) s += " " + std::to_string(l) + "->" + std::to_string(kl);
                return s;
            }
        }
        return "?";
    }
};

struct SeriesOptions {
    u64 N = 10'000;
    DegreeMode mode = DegreeMode::Generic;
    std::size_t ledger_terms = 20;
};

/// sum_{n <= N} mu(n) / [Q(zeta_{f(n)}, alpha^{1/f(n)}) : Q] for a rank-one
/// group. The tail is estimated from the last decade of terms.
inline DensityReport hooley_series(const kummer::KummerEngine& engine, const LevelMap& f, const SeriesOptions& opt) {
    if (opt.N < 1) throw PreconditionError("series truncation N must be >= 1");
    if (engine.family().size() != 1) throw PreconditionError("the series route needs a single group");
    if (engine.profile().group_rank(0) != 1) throw PreconditionError("the series route needs a group of rank one");
    if (f.kind == LevelMap::Kind::Power && f.k == 0) throw PreconditionError("k must be >= 1");

    DensityReport r;
    r.method = Method::Series;
    long double sum = 0, last_decade = 0;
    for (u64 n = 1; n <= opt.N; ++n) {
        const int mu = nt::mobius(n);
        if (mu == 0 || !f.admits(n)) continue;
        const u64 m = f(n);
        const auto deg = engine.degree(m, {m}, opt.mode);
        r.estimated = r.estimated || deg.estimated;
        const long double term = static_cast<long double>(mu) / deg.degree.get_d();
        sum += term;
        if (10 * n > opt.N) last_decade += std::fabs(term);
        if (r.ledger.size() < opt.ledger_terms) {
            const mpq_class t(mpz_class(mu), deg.degree);
            r.ledger.push_back({"n=" + std::to_string(n), t, t.get_d(), "degree " + deg.degree.get_str()});
        }
    }
    // Prescribed level maps over a finite P' give a finite sum.
    const bool finite = f.kind == LevelMap::Kind::Prescribed && [&] {
        u64 prod = 1;
        for (auto [l, k] : f.k_of) {
            if (prod > opt.N / l) return false;
            prod *= l;
        }
        return true;
    }();
    const double tail = finite ? 0.0 : static_cast<double>(last_decade / 9.0L);
    r.value = static_cast<double>(sum);
    r.lower = std::max(0.0, r.value - tail);
    r.upper = std::min(1.0, r.value + tail);
    r.truncation = "N=" + std::to_string(opt.N) + ", " + f.describe() + ", tail estimate " + std::to_string(tail);
    r.notes.push_back("tail is an empirical estimate from terms with N/10 < n <= N");
    return r;
}

// ---------------------------------------------------------------------------
// Local factors
// ---------------------------------------------------------------------------

/// Local model at l: generic closed forms, or measured survival functions
/// at primes up to the deficiency cutoff in corrected mode.
inline artin::Survival local_model(const DensityQuery& q, u64 ell, const RankProfile& profile, bool* estimated = nullptr) {
    if (q.mode == DegreeMode::Corrected) {
        if (!q.engine) throw PreconditionError("corrected mode needs a Kummer engine");
        if (ell <= q.engine->deficiency_cutoff()) {
            if (estimated) *estimated = true;
            auto eng = q.engine;
            return [eng](u64 l, const ValuationTuple& w) { return eng->survival(l, w, DegreeMode::Corrected); };
        }
    }
    return artin::generic_model(profile);
}

inline bool uses_correction(const DensityQuery& q, u64 ell) {
    return q.mode == DegreeMode::Corrected && q.engine && ell <= q.engine->deficiency_cutoff();
}

/// F_{v_I}(l) in the query's degree mode.
inline mpq_class local_F(const DensityQuery& q, u64 ell, const ValuationTuple& v, const RankProfile& profile) {
    if (uses_correction(q, ell)) return artin::F_from_survival(ell, v, local_model(q, ell, profile));
    return artin::F(ell, v, profile);
}

/// A_{V_l}(l) in the query's degree mode.
inline mpq_class local_A(const DensityQuery& q, u64 ell, const LocalPattern& V, const RankProfile& profile) {
    if (uses_correction(q, ell)) return artin::local_series(ell, V, profile, local_model(q, ell, profile)).value;
    return artin::local_series(ell, V, profile).value;
}

/// m(h_I) = prod_{l | h} F_{v_l(h_I)}(l) / F_{0_I}(l).
struct CorrectionRatio {
    mpq_class value;
    bool estimated = false;
};

inline CorrectionRatio correction_ratio(const IndexTuple& h, const DensityQuery& q) {
    const RankProfile profile = rank_profile(q.family);
    if (!profile.is_separated())
        throw UnsupportedError("unsupported: non-separated family; correction ratios assume separated groups");
    if (h.n() != profile.n()) throw PreconditionError("tuple length does not match the family size");
    CorrectionRatio out{1, false};
    u64 L = 1;
    for (u64 x : h.entries) L = std::lcm(L, x);
    for (u64 ell : nt::prime_divisors(L)) {
        out.value *= local_F(q, ell, v_ell(h, ell), profile) / local_F(q, ell, ValuationTuple::zero(profile.n()), profile);
        if (uses_correction(q, ell)) out.estimated = true;
    }
    return out;
}

/// Caveats attached to product-of-local-factor reports.
inline void scope_notes(DensityReport& r, const GroupFamily& family, const RankProfile& profile) {
    if (!profile.is_separated())
        r.notes.push_back("family is not separated; generic local factors need not describe the true density");
    for (u64 p : family.prime_support())
        if (p != 2) {
            r.notes.push_back("local factors treat distinct primes as independent; entanglement between layers of "
                              "different primes (e.g. sqrt(3) in Q(zeta_12)) is not modelled");
            break;
        }
}

// ---------------------------------------------------------------------------
// Euler-product route
// ---------------------------------------------------------------------------

namespace detail {

inline artin::EulerOptions euler_options(const DensityQuery& q) {
    artin::EulerOptions opt;
    opt.cutoff = q.euler_cutoff;
    opt.report_upto = q.report_upto;
    opt.threads = q.threads;
    return opt;
}

inline void push_factors(DensityReport& r, const artin::EulerProduct& e) {
    for (const auto& [ell, v] : e.factors) r.ledger.push_back({"A(" + std::to_string(ell) + ")", v, v.get_d(), ""});
}

/// A_0 = prod_l F_{0_I}(l) in the query's mode.
inline artin::EulerProduct zero_constant(const DensityQuery& q, const RankProfile& profile) {
    artin::PatternFamily V;
    V.default_rule = LocalPattern::zero(profile.n());
    auto opt = euler_options(q);
    if (q.mode == DegreeMode::Corrected) {
        const LocalPattern z = V.default_rule;
        opt.override_factor = [q, profile, z](u64 ell) -> std::optional<mpq_class> {
            if (uses_correction(q, ell)) return local_A(q, ell, z, profile);
            return std::nullopt;
        };
    }
    return artin::euler_product(V, profile, opt);
}

}  // namespace detail

/// Density of a set cut or almost cut by valuations as an Euler product.
/// Cut sets multiply local series; sets with finite support in a modulus
/// Q0 replace the factors at l | Q0 by one joint factor.
inline DensityReport valuation_density(const DensityQuery& q) {
    if (q.set.is_predicate()) throw UnsupportedError("analytic operation unavailable for predicate sets");
    if (!q.congruence.trivial())
        throw UnsupportedError("unsupported: analytic densities take only the trivial congruence condition; use survey");
    const RankProfile profile = rank_profile(q.family);
    require_positive_ranks(profile);
    if (q.set.n() != profile.n()) throw PreconditionError("index set arity does not match the family size");
    const Classification cls = q.set.classify();
    if (!cls.is_almost_cut())
        throw UnsupportedError("unsupported: set is not almost cut by valuations; use the singleton-sum method");

    DensityReport r;
    r.method = Method::EulerProduct;

    if (const auto* fs = q.set.finite_members()) {
        // Finite support: density = A_0 * sum_h m(h).
        const auto A0 = detail::zero_constant(q, profile);
        mpq_class joint = 0;
        for (const auto& h : *fs) {
            const auto m = correction_ratio(h, q);
            joint += m.value;
            r.estimated = r.estimated || m.estimated;
            r.ledger.push_back({"m(" + h.to_string() + ")", m.value, m.value.get_d(), m.estimated ? "estimated" : ""});
        }
        detail::push_factors(r, A0);
        r.value = A0.upper * joint.get_d();
        r.lower = std::nextafter(A0.lower * joint.get_d(), 0.0);
        r.upper = std::min(1.0, std::nextafter(A0.upper * joint.get_d(), 2.0));
        r.truncation = "L=" + std::to_string(A0.cutoff) + ", joint factor over support " + std::to_string(cls.q0);
        scope_notes(r, q.family, profile);
        r.estimated = r.estimated || q.mode == DegreeMode::Corrected;
        return r;
    }

    artin::PatternFamily V;
    V.default_rule = q.set.default_pattern();
    for (u64 ell : q.set.listed_primes()) V.at.emplace(ell, q.set.local_pattern(ell));
    auto opt = detail::euler_options(q);
    if (q.mode == DegreeMode::Corrected) {
        opt.override_factor = [&](u64 ell) -> std::optional<mpq_class> {
            if (uses_correction(q, ell)) return local_A(q, ell, V(ell), profile);
            return std::nullopt;
        };
        r.estimated = true;
    }
    const auto e = artin::euler_product(V, profile, opt);
    detail::push_factors(r, e);
    r.lower = e.lower;
    r.upper = e.upper;
    r.value = e.upper;
    r.truncation = "L=" + std::to_string(e.cutoff) + ", tail factor " + std::to_string(e.tail_factor);
    scope_notes(r, q.family, profile);
    return r;
}

// ---------------------------------------------------------------------------
// Singleton sums
// ---------------------------------------------------------------------------

struct SingletonOptions {
    u64 B = 1000;
    std::optional<SquareFreeModulus> Q;
    std::vector<u64> lattice_B;  // extra truncation points to report
    std::vector<u64> lattice_Q;  // extra smoothness moduli (primorial bounds x)
    std::size_t ledger_terms = 25;
};

/// Memo of log m(h) contributions per (l, v_l(h_I)).
class RatioTable {
public:
    RatioTable(const DensityQuery& q, RankProfile profile) : q_(q), profile_(std::move(profile)) {}

    const mpq_class& ratio(u64 ell, const ValuationTuple& v) {
        auto key = std::make_pair(ell, v.entries);
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
        const mpq_class r = local_F(q_, ell, v, profile_) / zero(ell);
        return memo_.emplace(std::move(key), r).first->second;
    }

    mpq_class m(const IndexTuple& h) {
        mpq_class out = 1;
        u64 L = 1;
        for (u64 x : h.entries) L = std::lcm(L, x);
        for (u64 ell : nt::prime_divisors(L)) out *= ratio(ell, v_ell(h, ell));
        return out;
    }

private:
    const mpq_class& zero(u64 ell) {
        auto it = zero_.find(ell);
        if (it != zero_.end()) return it->second;
        return zero_.emplace(ell, local_F(q_, ell, ValuationTuple::zero(profile_.n()), profile_)).first->second;
    }

    const DensityQuery& q_;
    RankProfile profile_;
    std::map<std::pair<u64, std::vector<unsigned>>, mpq_class> memo_;
    std::map<u64, mpq_class> zero_;
};

inline std::string non_separated_message() {
    return "unsupported: non-separated family; singleton densities are not products of local factors when some "
           "W_i lies in the divisible hull of the others (for W_1 = W_2 = <2> the set {(q, q^2)} has no primes, "
           "while generic local factors would give a positive value)";
}

/// sum over h_I in H cap [1,B]^n (cap Q^infinity) of A_0 * m(h_I). The upper
/// end adds the density of every tuple outside the enumerated region.
inline DensityReport singleton_sum(const DensityQuery& q, const SingletonOptions& opt) {
    if (q.set.is_predicate()) throw UnsupportedError("analytic operation unavailable for predicate sets");
    if (!q.congruence.trivial())
        throw UnsupportedError("unsupported: analytic densities take only the trivial congruence condition; use survey");
    const RankProfile profile = rank_profile(q.family);
    require_positive_ranks(profile);
    if (!profile.is_separated()) throw UnsupportedError(non_separated_message());
    if (q.set.n() != profile.n()) throw PreconditionError("index set arity does not match the family size");
    if (opt.B < 1) throw PreconditionError("enumeration bound B must be >= 1");

    DensityReport r;
    r.method = Method::SingletonSum;
    r.estimated = q.mode == DegreeMode::Corrected;
    const auto A0 = detail::zero_constant(q, profile);
    detail::push_factors(r, A0);
    RatioTable table(q, profile);

    auto partial = [&](u64 B, const std::optional<SquareFreeModulus>& Q, bool record) {
        long double s = 0;
        std::size_t count = 0;
        q.set.for_each_member(B, Q, [&](const IndexTuple& h) {
            const mpq_class m = table.m(h);
            s += static_cast<long double>(m.get_d());
            if (record && r.ledger.size() < A0.factors.size() + opt.ledger_terms)
                r.ledger.push_back({"m(" + h.to_string() + ")", m, m.get_d(), ""});
            ++count;
        });
        return std::make_pair(s, count);
    };

    // Mass of all tuples in the enumerated region, for the upper bound.
    auto region_mass = [&](u64 B, const std::optional<SquareFreeModulus>& Q) {
        const int n = profile.n();
        std::vector<u64> allowed;
        for (u64 x = 1; x <= B; ++x)
            if (!Q || Q->is_smooth(x)) allowed.push_back(x);
        long double s = 0;
        std::vector<std::size_t> idx(n, 0);
        while (true) {
            IndexTuple h;
            for (int i = 0; i < n; ++i) h.entries.push_back(allowed[idx[i]]);
            s += static_cast<long double>(table.m(h).get_d());
            int i = n - 1;
            while (i >= 0 && ++idx[i] == allowed.size()) idx[i--] = 0;
            if (i < 0) break;
        }
        return s;
    };

    const auto [sum, count] = partial(opt.B, opt.Q, true);
    const long double a_lo = A0.lower, a_hi = A0.upper;
    const double missing = std::max(0.0L, 1.0L - a_lo * region_mass(opt.B, opt.Q));
    r.value = static_cast<double>(a_hi * sum);
    r.lower = std::nextafter(static_cast<double>(a_lo * sum), 0.0);
    r.upper = std::min(1.0, static_cast<double>(a_hi * sum) + missing);
    r.truncation = "B=" + std::to_string(opt.B) + (opt.Q ? ", Q=" + std::to_string(opt.Q->value()) : "") +
                   ", L=" + std::to_string(A0.cutoff) + ", members " + std::to_string(count);
    scope_notes(r, q.family, profile);

    std::vector<u64> Bs = opt.lattice_B;
    if (std::find(Bs.begin(), Bs.end(), opt.B) == Bs.end()) Bs.push_back(opt.B);
    std::sort(Bs.begin(), Bs.end());
    std::vector<std::optional<SquareFreeModulus>> Qs;
    for (u64 x : opt.lattice_Q) Qs.push_back(SquareFreeModulus::primorial(x));
    Qs.push_back(std::nullopt);
    for (const auto& Qm : Qs)
        for (u64 B : Bs) {
            const auto [s, c] = partial(B, Qm, false);
            r.lattice.push_back({B, Qm ? Qm->value() : 0, c, static_cast<double>(a_hi * s)});
        }
    return r;
}

}  // namespace idxdens::density
