#pragma once

/**
 * @file index_sets.hpp
 * @brief Symbolic descriptors for sets H of index tuples.
 *
 * H is never materialized. Each descriptor family knows its local images
 * V_l = v_l(H), how to test membership in H_Q (the preimage of v_Q(H)),
 * and where it sits in the cut / almost cut / determined taxonomy.
 */

#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "idxdens/error.hpp"
#include "idxdens/numtheory.hpp"

namespace idxdens {

using nt::u64;

/// Tuple of positive indices (h_1, ..., h_n).
struct IndexTuple {
    std::vector<u64> entries;

    std::string to_string() const {
        std::string s = "(";
        for (std::size_t i = 0; i < entries.size(); ++i) s += (i ? "," : "") + std::to_string(entries[i]);
        return s + ")";
    }
    int n() const { return static_cast<int>(entries.size()); }
    u64 operator[](int i) const { return entries.at(i); }

    u64 lcm() const {
        u64 h = 1;
        for (u64 x : entries) h = std::lcm(h, x);
        return h;
    }

    friend bool operator==(const IndexTuple&, const IndexTuple&) = default;
    friend auto operator<=>(const IndexTuple&, const IndexTuple&) = default;
};

/// Tuple of nonnegative valuations (v_1, ..., v_n).
struct ValuationTuple {
    std::vector<unsigned> entries;

    int n() const { return static_cast<int>(entries.size()); }
    unsigned operator[](int i) const { return entries.at(i); }
    unsigned max() const {
        unsigned m = 0;
        for (auto v : entries) m = std::max(m, v);
        return m;
    }
    bool is_zero() const { return max() == 0; }

    static ValuationTuple zero(int n) { return {std::vector<unsigned>(n, 0)}; }

    friend bool operator==(const ValuationTuple&, const ValuationTuple&) = default;
    friend auto operator<=>(const ValuationTuple&, const ValuationTuple&) = default;
};

inline ValuationTuple v_ell(const IndexTuple& h, u64 ell) {
    ValuationTuple v;
    for (u64 x : h.entries) v.entries.push_back(nt::valuation(x, ell));
    return v;
}

/// Square-free modulus Q > 1, stored as its prime divisors.
class SquareFreeModulus {
public:
    explicit SquareFreeModulus(u64 q) {
        if (q < 2) throw PreconditionError("Q must be > 1");
        for (auto [p, e] : nt::factor_small(q)) {
            if (e > 1) throw PreconditionError("Q = " + std::to_string(q) + " is not square-free");
            primes_.push_back(p);
        }
    }
    explicit SquareFreeModulus(std::vector<u64> primes) : primes_(std::move(primes)) {
        if (primes_.empty()) throw PreconditionError("Q must be > 1");
        std::sort(primes_.begin(), primes_.end());
        if (std::adjacent_find(primes_.begin(), primes_.end()) != primes_.end())
            throw PreconditionError("Q is not square-free");
        for (u64 p : primes_)
            if (!nt::is_prime_small(p)) throw PreconditionError(std::to_string(p) + " is not prime");
    }
    /// Q_x, the product of all primes <= x.
    static SquareFreeModulus primorial(u64 x) {
        auto ps = nt::primes_up_to(x);
        return SquareFreeModulus(std::vector<u64>(ps.begin(), ps.end()));
    }

    const std::vector<u64>& primes() const { return primes_; }
    u64 value() const {
        u64 q = 1;
        for (u64 p : primes_) q *= p;
        return q;
    }
    bool divides_by(u64 ell) const { return std::find(primes_.begin(), primes_.end(), ell) != primes_.end(); }

    /// True iff every prime factor of x divides Q.
    bool is_smooth(u64 x) const {
        for (u64 p : primes_)
            while (x % p == 0) x /= p;
        return x == 1;
    }

private:
    std::vector<u64> primes_;
};

/// Per-prime valuation tuples v_Q(h_I) as (l, v_l(h_I)) pairs.
inline std::vector<std::pair<u64, ValuationTuple>> v_Q(const IndexTuple& h, const SquareFreeModulus& Q) {
    std::vector<std::pair<u64, ValuationTuple>> out;
    for (u64 ell : Q.primes()) out.emplace_back(ell, v_ell(h, ell));
    return out;
}

/// Half-open coordinate range [lo, hi); no hi means unbounded.
struct CoordRange {
    unsigned lo = 0;
    std::optional<unsigned> hi;

    bool contains(unsigned v) const { return v >= lo && (!hi || v < *hi); }
    bool empty() const { return hi && *hi <= lo; }
    friend bool operator==(const CoordRange&, const CoordRange&) = default;
};

/// Union of disjoint ranges for one coordinate.
using CoordSet = std::vector<CoordRange>;

namespace coord {
inline CoordSet zero() { return {{0, 1}}; }
inline CoordSet any() { return {{0, std::nullopt}}; }
inline CoordSet below(unsigned k) { return {{0, k}}; }
inline bool contains(const CoordSet& s, unsigned v) {
    return std::any_of(s.begin(), s.end(), [&](const CoordRange& r) { return r.contains(v); });
}
}  // namespace coord

/// A local valuation set V_l: either a finite list of tuples or a product
/// of per-coordinate range unions.
class LocalPattern {
public:
    static LocalPattern finite(int n, std::vector<ValuationTuple> tuples) {
        std::set<ValuationTuple> uniq;
        for (auto& t : tuples) {
            if (t.n() != n) throw PreconditionError("valuation tuple has the wrong length");
            uniq.insert(t);
        }
        LocalPattern p;
        p.n_ = n;
        p.finite_ = true;
        p.tuples_.assign(uniq.begin(), uniq.end());
        return p;
    }
    static LocalPattern product(std::vector<CoordSet> coords) {
        LocalPattern p;
        p.n_ = static_cast<int>(coords.size());
        p.finite_ = false;
        p.coords_ = std::move(coords);
        return p;
    }
    static LocalPattern zero(int n) { return product(std::vector<CoordSet>(n, coord::zero())); }
    static LocalPattern any(int n) { return product(std::vector<CoordSet>(n, coord::any())); }
    static LocalPattern below(const std::vector<unsigned>& k) {
        std::vector<CoordSet> c;
        for (auto ki : k) c.push_back(coord::below(ki));
        return product(std::move(c));
    }

    int n() const { return n_; }
    bool is_finite_list() const { return finite_; }
    const std::vector<ValuationTuple>& tuples() const { return tuples_; }
    const std::vector<CoordSet>& coords() const { return coords_; }

    bool contains(const ValuationTuple& v) const {
        if (finite_) return std::binary_search(tuples_.begin(), tuples_.end(), v);
        for (int i = 0; i < n_; ++i)
            if (!coord::contains(coords_[i], v[i])) return false;
        return true;
    }
    bool contains_zero() const { return contains(ValuationTuple::zero(n_)); }
    bool is_zero_only() const {
        if (finite_) return tuples_.size() == 1 && tuples_[0].is_zero();
        for (const auto& c : coords_)
            if (!(c == coord::zero())) return false;
        return true;
    }

    /// Boxes (one range per coordinate) whose disjoint union is the
    /// pattern; only meaningful for product patterns.
    std::vector<std::vector<CoordRange>> boxes() const {
        std::vector<std::vector<CoordRange>> out{{}};
        for (const auto& c : coords_) {
            std::vector<std::vector<CoordRange>> next;
            for (const auto& partial : out)
                for (const auto& r : c) {
                    if (r.empty()) continue;
                    auto b = partial;
                    b.push_back(r);
                    next.push_back(std::move(b));
                }
            out = std::move(next);
        }
        return out;
    }

    std::string describe() const {
        std::string s;
        if (finite_) {
            s = "{";
            for (std::size_t i = 0; i < tuples_.size(); ++i) {
                s += i ? ", (" : "(";
                for (int j = 0; j < n_; ++j) s += (j ? "," : "") + std::to_string(tuples_[i][j]);
                s += ")";
            }
            return s + "}";
        }
        for (int i = 0; i < n_; ++i) {
            s += i ? " x " : "";
            for (std::size_t j = 0; j < coords_[i].size(); ++j) {
                const auto& r = coords_[i][j];
                s += (j ? "u" : "") + ("[" + std::to_string(r.lo) + "," + (r.hi ? std::to_string(*r.hi) : "inf") + ")");
            }
        }
        return s;
    }

private:
    int n_ = 0;
    bool finite_ = true;
    std::vector<ValuationTuple> tuples_;
    std::vector<CoordSet> coords_;
};

/// Descriptor families.
namespace sets {
struct Equals {
    IndexTuple t;
};
struct Divides {
    IndexTuple t;
};
struct KFree {
    std::vector<unsigned> k;  // per coordinate, each >= 1
};
struct ValuationConstraint {
    int n = 1;
    std::map<u64, LocalPattern> at;
    LocalPattern default_rule = LocalPattern::any(1);
};
struct FiniteSet {
    int n = 1;
    std::vector<IndexTuple> members;
};
/// {(q^{a_1}, ..., q^{a_n}) : q prime}; a = (1) is the set of primes.
struct PrimeTuple {
    std::vector<unsigned> exponents;
};
/// Opaque membership test; analytic operations are unavailable.
struct Predicate {
    int n = 1;
    std::string name;
    std::function<bool(const IndexTuple&)> test;
};
}  // namespace sets

enum class SetClass { Cut, AlmostCut, Determined, NoneOfThese, Unknown };

inline std::string to_string(SetClass c) {
    switch (c) {
        case SetClass::Cut: return "cut by valuations";
        case SetClass::AlmostCut: return "almost cut by valuations";
        case SetClass::Determined: return "determined by valuations";
        case SetClass::NoneOfThese: return "not determined by valuations";
        case SetClass::Unknown: return "unknown";
    }
    return "unknown";
}

struct Classification {
    SetClass kind = SetClass::Unknown;
    u64 q0 = 1;  // witness for AlmostCut

    bool is_cut() const { return kind == SetClass::Cut; }
    bool is_almost_cut() const { return kind == SetClass::Cut || kind == SetClass::AlmostCut; }
    bool is_determined() const { return is_almost_cut() || kind == SetClass::Determined; }
};

/// A set H of n-tuples of positive integers.
class IndexSet {
public:
    using Descriptor = std::variant<sets::Equals, sets::Divides, sets::KFree, sets::ValuationConstraint,
                                    sets::FiniteSet, sets::PrimeTuple, sets::Predicate>;

    explicit IndexSet(Descriptor d) : d_(std::move(d)) { validate(); }

    static IndexSet equals(std::vector<u64> t) { return IndexSet(sets::Equals{{std::move(t)}}); }
    static IndexSet divides(std::vector<u64> t) { return IndexSet(sets::Divides{{std::move(t)}}); }
    static IndexSet kfree(std::vector<unsigned> k) { return IndexSet(sets::KFree{std::move(k)}); }
    static IndexSet squarefree(int n = 1) { return kfree(std::vector<unsigned>(n, 2)); }
    static IndexSet valuation(int n, std::map<u64, LocalPattern> at, LocalPattern def) {
        return IndexSet(sets::ValuationConstraint{n, std::move(at), std::move(def)});
    }
    static IndexSet finite(int n, std::vector<IndexTuple> members) {
        return IndexSet(sets::FiniteSet{n, std::move(members)});
    }
    static IndexSet primes() { return IndexSet(sets::PrimeTuple{{1}}); }
    static IndexSet prime_tuple(std::vector<unsigned> a) { return IndexSet(sets::PrimeTuple{std::move(a)}); }
    static IndexSet predicate(int n, std::string name, std::function<bool(const IndexTuple&)> f) {
        return IndexSet(sets::Predicate{n, std::move(name), std::move(f)});
    }
    /// Integers with an even number of prime factors (with multiplicity).
    static IndexSet even_prime_count() {
        return predicate(1, "even-prime-count", [](const IndexTuple& h) {
            unsigned omega = 0;
            for (auto [p, e] : nt::factor_small(h[0])) omega += e;
            return omega % 2 == 0;
        });
    }

    const Descriptor& descriptor() const { return d_; }
    bool is_predicate() const { return std::holds_alternative<sets::Predicate>(d_); }

    int n() const {
        return std::visit(
            [](const auto& s) -> int {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, sets::Equals> || std::is_same_v<T, sets::Divides>)
                    return s.t.n();
                else if constexpr (std::is_same_v<T, sets::KFree>)
                    return static_cast<int>(s.k.size());
                else if constexpr (std::is_same_v<T, sets::PrimeTuple>)
                    return static_cast<int>(s.exponents.size());
                else
                    return s.n;
            },
            d_);
    }

    std::string describe() const {
        auto tuple_str = [](const std::vector<u64>& t) {
            std::string s = "(";
            for (std::size_t i = 0; i < t.size(); ++i) s += (i ? "," : "") + std::to_string(t[i]);
            return s + ")";
        };
        return std::visit(
            [&](const auto& s) -> std::string {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, sets::Equals>) return "equals" + tuple_str(s.t.entries);
                else if constexpr (std::is_same_v<T, sets::Divides>) return "divides" + tuple_str(s.t.entries);
                else if constexpr (std::is_same_v<T, sets::KFree>) {
                    return "kfree" + tuple_str(std::vector<u64>(s.k.begin(), s.k.end()));
                } else if constexpr (std::is_same_v<T, sets::ValuationConstraint>) {
                    std::string out = "valuation{";
                    for (const auto& [ell, pat] : s.at) out += std::to_string(ell) + ":" + pat.describe() + "; ";
                    return out + "default:" + s.default_rule.describe() + "}";
                } else if constexpr (std::is_same_v<T, sets::FiniteSet>) {
                    return "finite[" + std::to_string(s.members.size()) + "]";
                } else if constexpr (std::is_same_v<T, sets::PrimeTuple>) {
                    return "prime-tuple" + tuple_str(std::vector<u64>(s.exponents.begin(), s.exponents.end()));
                } else {
                    return "predicate:" + s.name;
                }
            },
            d_);
    }

    /// Direct membership h_I in H.
    bool contains(const IndexTuple& h) const {
        if (h.n() != n()) return false;
        for (u64 x : h.entries)
            if (x == 0) return false;
        return std::visit(
            [&](const auto& s) -> bool {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, sets::Equals>) {
                    return h == s.t;
                } else if constexpr (std::is_same_v<T, sets::Divides>) {
                    for (int i = 0; i < h.n(); ++i)
                        if (s.t[i] % h[i] != 0) return false;
                    return true;
                } else if constexpr (std::is_same_v<T, sets::KFree>) {
                    for (int i = 0; i < h.n(); ++i)
                        for (auto [p, e] : nt::factor_small(h[i]))
                            if (e >= s.k[i]) return false;
                    return true;
                } else if constexpr (std::is_same_v<T, sets::ValuationConstraint>) {
                    std::set<u64> primes;
                    for (u64 x : h.entries)
                        for (u64 p : nt::prime_divisors(x)) primes.insert(p);
                    for (const auto& [ell, pat] : s.at) primes.insert(ell);
                    for (u64 ell : primes)
                        if (!local_pattern(ell).contains(v_ell(h, ell))) return false;
                    // Unlisted primes not dividing h see 0_I, which the
                    // default rule contains.
                    return true;
                } else if constexpr (std::is_same_v<T, sets::FiniteSet>) {
                    return std::find(s.members.begin(), s.members.end(), h) != s.members.end();
                } else if constexpr (std::is_same_v<T, sets::PrimeTuple>) {
                    return prime_tuple_base(s, h).has_value();
                } else {
                    return s.test(h);
                }
            },
            d_);
    }

    /// V_l = v_l(H). Unavailable for predicate sets.
    LocalPattern local_pattern(u64 ell) const {
        const int n_ = n();
        return std::visit(
            [&](const auto& s) -> LocalPattern {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, sets::Equals>) {
                    return LocalPattern::finite(n_, {v_ell(s.t, ell)});
                } else if constexpr (std::is_same_v<T, sets::Divides>) {
                    std::vector<unsigned> k;
                    for (u64 x : s.t.entries) k.push_back(nt::valuation(x, ell) + 1);
                    return LocalPattern::below(k);
                } else if constexpr (std::is_same_v<T, sets::KFree>) {
                    return LocalPattern::below(s.k);
                } else if constexpr (std::is_same_v<T, sets::ValuationConstraint>) {
                    auto it = s.at.find(ell);
                    return it != s.at.end() ? it->second : s.default_rule;
                } else if constexpr (std::is_same_v<T, sets::FiniteSet>) {
                    std::vector<ValuationTuple> vs;
                    for (const auto& m : s.members) vs.push_back(v_ell(m, ell));
                    return LocalPattern::finite(n_, std::move(vs));
                } else if constexpr (std::is_same_v<T, sets::PrimeTuple>) {
                    return LocalPattern::finite(n_, {ValuationTuple::zero(n_), ValuationTuple{s.exponents}});
                } else {
                    throw UnsupportedError("analytic operation unavailable for predicate set '" + s.name + "'");
                }
            },
            d_);
    }

    /// Pattern used at every prime not in listed_primes().
    LocalPattern default_pattern() const {
        const int n_ = n();
        if (const auto* k = std::get_if<sets::KFree>(&d_)) return LocalPattern::below(k->k);
        if (const auto* vc = std::get_if<sets::ValuationConstraint>(&d_)) return vc->default_rule;
        if (is_predicate()) throw UnsupportedError("analytic operation unavailable for predicate sets");
        return LocalPattern::zero(n_);
    }

    /// Primes whose local pattern may differ from default_pattern().
    std::vector<u64> listed_primes() const {
        std::set<u64> out;
        auto add = [&](const IndexTuple& t) {
            for (u64 x : t.entries)
                for (u64 ell : nt::prime_divisors(x)) out.insert(ell);
        };
        if (const auto* e = std::get_if<sets::Equals>(&d_)) add(e->t);
        if (const auto* d = std::get_if<sets::Divides>(&d_)) add(d->t);
        if (const auto* vc = std::get_if<sets::ValuationConstraint>(&d_))
            for (const auto& [ell, pat] : vc->at) out.insert(ell);
        if (const auto* f = std::get_if<sets::FiniteSet>(&d_))
            for (const auto& m : f->members) add(m);
        return {out.begin(), out.end()};
    }

    /// Members of an explicit finite set, else null.
    const std::vector<IndexTuple>* finite_members() const {
        if (const auto* f = std::get_if<sets::FiniteSet>(&d_)) return &f->members;
        return nullptr;
    }

    /// Membership of h_I in H_Q, decided from the descriptor.
    bool member_HQ(const IndexTuple& h, const SquareFreeModulus& Q) const {
        if (is_predicate())
            throw UnsupportedError("analytic operation unavailable: H_Q membership needs a symbolic descriptor");
        if (h.n() != n()) return false;
        if (const auto* f = std::get_if<sets::FiniteSet>(&d_)) {
            const auto target = v_Q(h, Q);
            for (const auto& m : f->members)
                if (v_Q(m, Q) == target) return true;
            return false;
        }
        if (const auto* pt = std::get_if<sets::PrimeTuple>(&d_)) {
            // v_Q(H) = {0} together with, for each l | Q, the tuple a at l.
            const ValuationTuple a{pt->exponents};
            int nonzero = 0;
            for (const auto& [ell, v] : v_Q(h, Q)) {
                if (v.is_zero()) continue;
                if (!(v == a)) return false;
                ++nonzero;
            }
            return nonzero <= 1;
        }
        // Remaining families are products over l.
        for (const auto& [ell, v] : v_Q(h, Q))
            if (!local_pattern(ell).contains(v)) return false;
        return true;
    }

    Classification classify() const {
        return std::visit(
            [&](const auto& s) -> Classification {
                using T = std::decay_t<decltype(s)>;
                auto almost = [](u64 q0) {
                    return q0 == 1 ? Classification{SetClass::Cut, 1} : Classification{SetClass::AlmostCut, q0};
                };
                if constexpr (std::is_same_v<T, sets::Equals> || std::is_same_v<T, sets::Divides>) {
                    return almost(nt::radical(s.t.lcm()));
                } else if constexpr (std::is_same_v<T, sets::FiniteSet>) {
                    u64 l = 1;
                    for (const auto& m : s.members) l = std::lcm(l, nt::radical(m.lcm()));
                    return almost(l);
                } else if constexpr (std::is_same_v<T, sets::KFree> || std::is_same_v<T, sets::ValuationConstraint>) {
                    return {SetClass::Cut, 1};
                } else if constexpr (std::is_same_v<T, sets::PrimeTuple>) {
                    return {SetClass::Determined, 1};
                } else {
                    return {SetClass::Unknown, 1};
                }
            },
            d_);
    }

    /// Members of H in [1,B]^n (optionally Q-smooth), lexicographic.
    template <class Visit>
    void for_each_member(u64 B, const std::optional<SquareFreeModulus>& Q, Visit&& visit) const {
        if (B < 1) throw PreconditionError("enumeration bound B must be >= 1");
        const int n_ = n();
        auto ok_entry = [&](u64 x) { return !Q || Q->is_smooth(x); };
        if (const auto* pt = std::get_if<sets::PrimeTuple>(&d_)) {
            // Members are ordered by q; entries are monotone in q.
            std::vector<IndexTuple> members;
            for (u64 q = 2; q <= B; ++q) {
                if (!nt::is_prime_small(q)) continue;
                IndexTuple h;
                bool in_range = true;
                for (unsigned a : pt->exponents) {
                    const u64 x = nt::ipow(q, a);
                    if (x > B || (a > 0 && q > B)) in_range = false;
                    h.entries.push_back(x);
                }
                if (!in_range) continue;
                if (std::all_of(h.entries.begin(), h.entries.end(), ok_entry)) members.push_back(std::move(h));
            }
            std::sort(members.begin(), members.end());
            for (const auto& h : members) visit(h);
            return;
        }
        if (const auto* f = std::get_if<sets::FiniteSet>(&d_)) {
            std::vector<IndexTuple> members;
            for (const auto& m : f->members)
                if (std::all_of(m.entries.begin(), m.entries.end(), [&](u64 x) { return x <= B && ok_entry(x); }))
                    members.push_back(m);
            std::sort(members.begin(), members.end());
            members.erase(std::unique(members.begin(), members.end()), members.end());
            for (const auto& h : members) visit(h);
            return;
        }
        std::vector<u64> allowed;
        for (u64 x = 1; x <= B; ++x)
            if (ok_entry(x)) allowed.push_back(x);
        if (allowed.empty()) return;
        std::vector<std::size_t> idx(n_, 0);
        IndexTuple h{std::vector<u64>(n_, allowed[0])};
        while (true) {
            if (contains(h)) visit(h);
            int i = n_ - 1;
            while (i >= 0 && idx[i] + 1 == allowed.size()) {
                idx[i] = 0;
                h.entries[i] = allowed[0];
                --i;
            }
            if (i < 0) break;
            h.entries[i] = allowed[++idx[i]];
        }
    }

    std::vector<IndexTuple> enumerate(u64 B, const std::optional<SquareFreeModulus>& Q = std::nullopt) const {
        std::vector<IndexTuple> out;
        for_each_member(B, Q, [&](const IndexTuple& h) { out.push_back(h); });
        return out;
    }

private:
    void validate() const {
        std::visit(
            [&](const auto& s) {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, sets::Equals> || std::is_same_v<T, sets::Divides>) {
                    if (s.t.entries.empty()) throw PreconditionError("index tuple must be nonempty");
                    for (u64 x : s.t.entries)
                        if (x == 0) throw PreconditionError("index tuple entries must be >= 1");
                } else if constexpr (std::is_same_v<T, sets::KFree>) {
                    if (s.k.empty()) throw PreconditionError("k-free descriptor needs at least one coordinate");
                    for (auto k : s.k)
                        if (k < 1) throw PreconditionError("k must be >= 1");
                } else if constexpr (std::is_same_v<T, sets::ValuationConstraint>) {
                    if (s.default_rule.n() != s.n) throw PreconditionError("default rule has the wrong arity");
                    if (!s.default_rule.contains_zero())
                        throw PreconditionError("the default rule of a valuation constraint must contain 0_I");
                    for (const auto& [ell, pat] : s.at) {
                        if (!nt::is_prime_small(ell)) throw PreconditionError(std::to_string(ell) + " is not prime");
                        if (pat.n() != s.n) throw PreconditionError("local pattern has the wrong arity");
                    }
                } else if constexpr (std::is_same_v<T, sets::FiniteSet>) {
                    for (const auto& m : s.members) {
                        if (m.n() != s.n) throw PreconditionError("finite-set member has the wrong arity");
                        for (u64 x : m.entries)
                            if (x == 0) throw PreconditionError("index tuple entries must be >= 1");
                    }
                } else if constexpr (std::is_same_v<T, sets::PrimeTuple>) {
                    if (std::none_of(s.exponents.begin(), s.exponents.end(), [](unsigned a) { return a > 0; }))
                        throw PreconditionError("prime tuple needs a positive exponent");
                }
            },
            d_);
    }

    static std::optional<u64> prime_tuple_base(const sets::PrimeTuple& s, const IndexTuple& h) {
        // Find q with h_i = q^{a_i}; coordinates with a_i = 0 must be 1.
        std::optional<u64> q;
        for (int i = 0; i < h.n(); ++i) {
            const unsigned a = s.exponents[i];
            if (a == 0) {
                if (h[i] != 1) return std::nullopt;
                continue;
            }
            auto f = nt::factor_small(h[i]);
            if (f.size() != 1 || f[0].second != a) return std::nullopt;
            if (q && *q != f[0].first) return std::nullopt;
            q = f[0].first;
        }
        return q;
    }

    Descriptor d_;
};

}  // namespace idxdens
