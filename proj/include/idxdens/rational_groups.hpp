#pragma once

/**
 * @file rational_groups.hpp
 * @brief Finitely generated subgroups of Q^x and their rank data.
 *
 * A nonzero rational is stored as a sign plus a sparse prime-exponent map.
 * Group ranks are ranks of the stacked exponent vectors over Q, computed by
 * fraction-free (Bareiss) elimination over GMP integers, so no rounding can
 * leak into a rank. The divisible hull <B>^{1/inf} of a set B absorbs
 * torsion and rational powers, which makes "x lies in the hull" the same
 * as "the exponent vector of x lies in the rational span".
 */

#include <gmpxx.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "idxdens/error.hpp"
#include "idxdens/factor.hpp"
#include "idxdens/numtheory.hpp"

namespace idxdens {

using nt::u64;

/// A nonzero rational number as sign times a product of prime powers.
struct FactoredRational {
    int sign = 1;
    std::map<u64, int> exponents;  // prime -> nonzero exponent

    bool is_one() const { return sign == 1 && exponents.empty(); }

    mpq_class value() const {
        mpz_class num = 1, den = 1;
        for (auto [p, e] : exponents) {
            mpz_class pe;
            mpz_ui_pow_ui(pe.get_mpz_t(), p, static_cast<unsigned long>(e < 0 ? -e : e));
            (e > 0 ? num : den) *= pe;
        }
        mpq_class q(num * sign, den);
        q.canonicalize();
        return q;
    }

    /// Canonical literal ("-12/5", "7").
    std::string to_string() const { return value().get_str(); }

    /// Reduction modulo a prime p that divides neither numerator nor
    /// denominator.
    u64 reduce_mod(u64 p) const {
        u64 r = sign < 0 ? p - 1 : 1 % p;
        for (auto [q, e] : exponents) {
            const u64 base = e > 0 ? q % p : nt::inv_mod_prime(q % p, p);
            r = nt::mul_mod(r, nt::pow_mod(base, static_cast<u64>(e < 0 ? -e : e), p), p);
        }
        return r;
    }

    friend bool operator==(const FactoredRational&, const FactoredRational&) = default;
};

namespace detail {

inline u64 parse_u64_digits(std::string_view digits, std::string_view whole) {
    if (digits.empty()) throw ParseError("unparsable rational literal '" + std::string(whole) + "'");
    for (char c : digits)
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw ParseError("unparsable rational literal '" + std::string(whole) + "'");
    return 0;
}

inline FactoredRational from_fraction(const mpz_class& num_in, const mpz_class& den_in,
                                      const factor::FactorLimits& limits, std::string_view text) {
    mpq_class q(num_in, den_in);
    q.canonicalize();
    if (q == 0) throw ParseError("rational literal '" + std::string(text) + "' is zero");
    FactoredRational out;
    out.sign = sgn(q) < 0 ? -1 : 1;
    mpz_class num = abs(q.get_num());
    const mpz_class& den = q.get_den();
    if (!num.fits_ulong_p() || !den.fits_ulong_p())
        throw FactorizationError("factorization failed: '" + std::string(text) +
                                 "' exceeds the 64-bit factoring range");
    for (auto [p, e] : factor::factorize(num.get_ui(), limits)) out.exponents[p] += e;
    for (auto [p, e] : factor::factorize(den.get_ui(), limits)) out.exponents[p] -= e;
    std::erase_if(out.exponents, [](const auto& kv) { return kv.second == 0; });
    return out;
}

}  // namespace detail

/// Parses "12", "-12/5", "0.75" into factored form.
inline FactoredRational parse_rational(std::string_view text, const factor::FactorLimits& limits = {}) {
    std::string_view s = text;
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    bool negative = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    mpz_class num, den = 1;
    if (auto slash = s.find('/'); slash != std::string_view::npos) {
        auto a = s.substr(0, slash), b = s.substr(slash + 1);
        detail::parse_u64_digits(a, text);
        detail::parse_u64_digits(b, text);
        num = mpz_class(std::string(a), 10);
        den = mpz_class(std::string(b), 10);
        if (den == 0) throw ParseError("zero denominator in '" + std::string(text) + "'");
    } else if (auto dot = s.find('.'); dot != std::string_view::npos) {
        auto a = s.substr(0, dot), b = s.substr(dot + 1);
        if (a.empty() && b.empty()) detail::parse_u64_digits("", text);
        if (!a.empty()) detail::parse_u64_digits(a, text);
        if (!b.empty()) detail::parse_u64_digits(b, text);
        num = mpz_class(std::string(a.empty() ? "0" : a) + std::string(b), 10);
        mpz_ui_pow_ui(den.get_mpz_t(), 10, b.size());
    } else {
        detail::parse_u64_digits(s, text);
        num = mpz_class(std::string(s), 10);
    }
    if (negative) num = -num;
    return detail::from_fraction(num, den, limits, text);
}

namespace linalg {

using Row = std::vector<mpz_class>;

/// Rank over Q by fraction-free Gaussian elimination.
inline int rank(std::vector<Row> rows) {
    if (rows.empty()) return 0;
    const std::size_t cols = rows.front().size();
    int r = 0;
    mpz_class prev_pivot = 1;
    for (std::size_t c = 0; c < cols && r < static_cast<int>(rows.size()); ++c) {
        auto pivot = std::find_if(rows.begin() + r, rows.end(), [&](const Row& row) { return row[c] != 0; });
        if (pivot == rows.end()) continue;
        std::iter_swap(rows.begin() + r, pivot);
        for (std::size_t i = r + 1; i < rows.size(); ++i) {
            for (std::size_t j = c + 1; j < cols; ++j) {
                rows[i][j] = (rows[r][c] * rows[i][j] - rows[i][c] * rows[r][j]) / prev_pivot;
            }
            rows[i][c] = 0;
        }
        prev_pivot = rows[r][c];
        ++r;
    }
    return r;
}

}  // namespace linalg

/// Finitely generated subgroup of Q^x, kept as the generators given.
class MultGroup {
public:
    MultGroup() = default;
    explicit MultGroup(std::vector<FactoredRational> generators) : generators_(std::move(generators)) {
        if (generators_.empty()) throw PreconditionError("a group needs at least one generator");
    }

    static MultGroup parse(const std::vector<std::string>& literals, const factor::FactorLimits& limits = {}) {
        std::vector<FactoredRational> gens;
        for (const auto& s : literals) gens.push_back(parse_rational(s, limits));
        return MultGroup(std::move(gens));
    }

    const std::vector<FactoredRational>& generators() const { return generators_; }

    std::set<u64> prime_support() const {
        std::set<u64> out;
        for (const auto& g : generators_)
            for (auto [p, e] : g.exponents) out.insert(p);
        return out;
    }

    std::string to_string() const {
        std::string s = "<";
        for (std::size_t i = 0; i < generators_.size(); ++i) s += (i ? "," : "") + generators_[i].to_string();
        return s + ">";
    }

private:
    std::vector<FactoredRational> generators_;
};

/// Exponent vectors of generators over a fixed ordered prime basis.
inline std::vector<linalg::Row> exponent_rows(const std::vector<FactoredRational>& gens,
                                              const std::vector<u64>& basis) {
    std::vector<linalg::Row> rows;
    for (const auto& g : gens) {
        linalg::Row row(basis.size(), 0);
        for (std::size_t c = 0; c < basis.size(); ++c) {
            auto it = g.exponents.find(basis[c]);
            if (it != g.exponents.end()) row[c] = it->second;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::vector<u64> prime_basis(const std::vector<FactoredRational>& gens) {
    std::set<u64> s;
    for (const auto& g : gens)
        for (auto [p, e] : g.exponents) s.insert(p);
    return {s.begin(), s.end()};
}

/// Rank of a set of rationals (torsion ignored).
inline int rank_of(const std::vector<FactoredRational>& gens) {
    return linalg::rank(exponent_rows(gens, prime_basis(gens)));
}

inline int rank(const MultGroup& group) { return rank_of(group.generators()); }

/// True iff some power of x lies in the group (x in <group>^{1/inf}).
inline bool in_divisible_hull(const FactoredRational& x, const std::vector<FactoredRational>& gens) {
    std::vector<FactoredRational> with = gens;
    with.push_back(x);
    return rank_of(with) == rank_of(gens);
}

inline bool in_divisible_hull(const FactoredRational& x, const MultGroup& group) {
    return in_divisible_hull(x, group.generators());
}

/// Ranks R_J for every subset J of I, indexed by bitmask.
class RankProfile {
public:
    RankProfile() = default;
    RankProfile(int n, std::vector<int> ranks) : n_(n), ranks_(std::move(ranks)) {
        if (ranks_.size() != (std::size_t{1} << n_)) throw PreconditionError("rank profile size must be 2^n");
        if (ranks_[0] != 0) throw PreconditionError("R of the empty set must be 0");
    }

    /// Profile of multiplicatively independent groups with the given ranks.
    static RankProfile independent(const std::vector<int>& r) {
        const int n = static_cast<int>(r.size());
        std::vector<int> ranks(std::size_t{1} << n, 0);
        for (unsigned mask = 0; mask < ranks.size(); ++mask)
            for (int i = 0; i < n; ++i)
                if (mask >> i & 1u) ranks[mask] += r[i];
        return {n, std::move(ranks)};
    }

    int n() const { return n_; }
    int operator()(unsigned mask) const { return ranks_.at(mask); }
    int group_rank(int i) const { return ranks_.at(1u << i); }
    unsigned full_mask() const { return (1u << n_) - 1; }
    int total() const { return ranks_.at(full_mask()); }
    const std::vector<int>& ranks() const { return ranks_; }

    bool is_independent() const {
        for (unsigned mask = 0; mask < ranks_.size(); ++mask) {
            int s = 0;
            for (int i = 0; i < n_; ++i)
                if (mask >> i & 1u) s += group_rank(i);
            if (s != ranks_[mask]) return false;
        }
        return true;
    }

    /// Each W_i raises the rank of the others: R_I > R_{I\{i}}.
    bool is_separated() const {
        for (int i = 0; i < n_; ++i)
            if (total() <= ranks_[full_mask() & ~(1u << i)]) return false;
        return true;
    }

    friend bool operator==(const RankProfile&, const RankProfile&) = default;

private:
    int n_ = 0;
    std::vector<int> ranks_{0};
};

inline constexpr int kMaxFamilySize = 12;

/// The groups W_1, ..., W_n.
class GroupFamily {
public:
    GroupFamily() = default;
    explicit GroupFamily(std::vector<MultGroup> groups) : groups_(std::move(groups)) {
        if (groups_.empty()) throw PreconditionError("a family needs at least one group");
    }

    static GroupFamily parse(const std::vector<std::vector<std::string>>& literals,
                             const factor::FactorLimits& limits = {}) {
        std::vector<MultGroup> groups;
        for (const auto& g : literals) groups.push_back(MultGroup::parse(g, limits));
        return GroupFamily(std::move(groups));
    }

    int size() const { return static_cast<int>(groups_.size()); }
    const MultGroup& operator[](int i) const { return groups_.at(i); }
    const std::vector<MultGroup>& groups() const { return groups_; }

    std::set<u64> prime_support() const {
        std::set<u64> out;
        for (const auto& g : groups_) out.merge(g.prime_support());
        return out;
    }

    /// Generators of W_J for a subset bitmask J.
    std::vector<FactoredRational> generators_of(unsigned mask) const {
        std::vector<FactoredRational> out;
        for (int i = 0; i < size(); ++i)
            if (mask >> i & 1u)
                out.insert(out.end(), groups_[i].generators().begin(), groups_[i].generators().end());
        return out;
    }

    /// Canonical text form, e.g. "<2>|<3,5/7>".
    std::string canonical() const {
        std::string s;
        for (int i = 0; i < size(); ++i) s += (i ? "|" : "") + groups_[i].to_string();
        return s;
    }

    /// 64-bit FNV-1a of the canonical form, in hex.
    std::string fingerprint() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : canonical()) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        std::ostringstream os;
        os << std::hex << h;
        return os.str();
    }

private:
    std::vector<MultGroup> groups_;
};

inline RankProfile rank_profile(const GroupFamily& family) {
    const int n = family.size();
    if (n > kMaxFamilySize)
        throw LimitError("rank profile enumerates 2^n subsets; n = " + std::to_string(n) + " exceeds the limit " +
                         std::to_string(kMaxFamilySize));
    const auto all = family.generators_of((1u << n) - 1);
    const auto basis = prime_basis(all);
    std::vector<int> ranks(std::size_t{1} << n, 0);
    for (unsigned mask = 1; mask < ranks.size(); ++mask)
        ranks[mask] = linalg::rank(exponent_rows(family.generators_of(mask), basis));
    return {n, std::move(ranks)};
}

inline bool is_separated(const GroupFamily& family) { return rank_profile(family).is_separated(); }

/// Rejects families with a rank-zero group.
inline void require_positive_ranks(const RankProfile& profile) {
    for (int i = 0; i < profile.n(); ++i)
        if (profile.group_rank(i) < 1)
            throw PreconditionError("group W_" + std::to_string(i + 1) + " has rank 0; positive rank is required");
}

/// Greedy choice of rank(W_i) generators of W_i with independent
/// exponent vectors.
inline std::vector<FactoredRational> independent_subset(const MultGroup& group) {
    std::vector<FactoredRational> chosen;
    int r = 0;
    for (const auto& g : group.generators()) {
        chosen.push_back(g);
        const int nr = rank_of(chosen);
        if (nr == r) chosen.pop_back();
        else r = nr;
    }
    return chosen;
}

}  // namespace idxdens
