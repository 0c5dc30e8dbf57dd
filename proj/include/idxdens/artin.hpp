#pragma once

/**
 * @file artin.hpp
 * @brief Local factors F_{v_I,R}(l), local series A_{V_l,R}(l) and the
 *        Artin-type Euler product.
 *
 * All local quantities are exact rationals. The key identity used for
 * infinite local sets is
 *
 *     F_{v_I}(l) = sum_{J subset I} (-1)^{|J|} G(v_I + delta_J),
 *     G(w_I)     = 1 / (phi(l^{max w}) * l^{f(w_I)}),   G(0_I) = 1,
 *
 * where G(w_I) is the heuristic density of primes whose l-adic index
 * valuations are all >= w_I. Summing F over a box telescopes to a signed
 * sum of G over the box corners, and G vanishes once a coordinate goes to
 * infinity, so every product of ranges has a closed form.
 */

#include <gmpxx.h>

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include "idxdens/error.hpp"
#include "idxdens/index_sets.hpp"
#include "idxdens/kummer.hpp"
#include "idxdens/numtheory.hpp"
#include "idxdens/rational_groups.hpp"

namespace idxdens::artin {

using nt::u64;

/// 1 / base^k as an exact rational.
inline mpq_class inv_pow(u64 base, long long k) {
    return mpq_class(mpz_class(1), kummer::mpz_pow(base, k));
}

inline int popcount(unsigned mask) { return std::popcount(mask); }

/// prod_i (1 - x_i), cross-checked against the signed subset sum.
inline mpq_class inclusion_exclusion(std::span<const mpq_class> x) {
    mpq_class prod = 1;
    for (const auto& xi : x) prod *= 1 - xi;
    if (x.size() <= 12) {
        mpq_class sum = 0;
        for (unsigned mask = 0; mask < (1u << x.size()); ++mask) {
            mpq_class term = popcount(mask) % 2 ? -1 : 1;
            for (std::size_t i = 0; i < x.size(); ++i)
                if (mask >> i & 1u) term *= x[i];
            sum += term;
        }
        if (sum != prod) throw std::logic_error("inclusion-exclusion product and subset sum disagree");
    }
    return prod;
}

inline ValuationTuple add_delta(const ValuationTuple& v, unsigned mask) {
    ValuationTuple w = v;
    for (int i = 0; i < w.n(); ++i)
        if (mask >> i & 1u) ++w.entries[i];
    return w;
}

/// I' = {i : v_i = max v}.
inline unsigned argmax_mask(const ValuationTuple& v) {
    const unsigned top = v.max();
    unsigned mask = 0;
    for (int i = 0; i < v.n(); ++i)
        if (v[i] == top) mask |= 1u << i;
    return mask;
}

/// F_{0_I,R}(l) = (l-2)/(l-1) + 1/(l-1) * sum_J (-1)^{|J|} l^{-R_J}.
inline mpq_class F_zero(u64 ell, const RankProfile& profile) {
    mpq_class sum = 0;
    for (unsigned J = 0; J <= profile.full_mask(); ++J) {
        const mpq_class t = inv_pow(ell, profile(J));
        if (popcount(J) % 2) sum -= t;
        else sum += t;
    }
    return mpq_class(ell - 2, ell - 1) + sum / (ell - 1);
}

/// F_{v_I,R}(l) for v_I != 0_I. Both displayed forms of the definition
/// are evaluated; they must agree exactly.
inline mpq_class F_general(u64 ell, const ValuationTuple& v, const RankProfile& profile) {
    if (v.n() != profile.n()) throw PreconditionError("tuple length does not match the family size");
    if (v.is_zero()) throw PreconditionError("F_general needs v_I != 0_I; use F_zero");
    const unsigned top = v.max();
    const unsigned iprime = argmax_mask(v);
    const long long f0 = kummer::f_exponent(v, profile);

    mpq_class disjoint = 0, all = 0;          // rewritten form, absolute exponents
    mpq_class disjoint_rel = 0, all_rel = 0;  // defining form, exponents relative to f(v_I)
    for (unsigned J = 0; J <= profile.full_mask(); ++J) {
        const long long f = kummer::f_exponent(add_delta(v, J), profile);
        const int sign = popcount(J) % 2 ? -1 : 1;
        const mpq_class t = inv_pow(ell, f) * sign;
        const mpq_class t_rel = inv_pow(ell, f - f0) * sign;
        all += t;
        all_rel += t_rel;
        if ((J & iprime) == 0) {
            disjoint += t;
            disjoint_rel += t_rel;
        }
    }
    const mpq_class rewritten = inv_pow(ell, top) * (disjoint + all / (ell - 1));
    const mpq_class defining = mpq_class(mpz_class(1), mpz_class(static_cast<unsigned long>(nt::phi_prime_power(ell, top))) *
                                                           kummer::mpz_pow(ell, f0)) *
                               (mpq_class(ell - 1, ell) * disjoint_rel + all_rel / ell);
    if (rewritten != defining) throw std::logic_error("the two forms of F_general disagree");
    return rewritten;
}

inline mpq_class F(u64 ell, const ValuationTuple& v, const RankProfile& profile) {
    return v.is_zero() ? F_zero(ell, profile) : F_general(ell, v, profile);
}

/// Survival function G(w_I) at a prime; the generic one is closed form,
/// corrected ones come from measured Kummer degrees.
using Survival = std::function<mpq_class(u64 ell, const ValuationTuple& w)>;

inline mpq_class generic_survival(u64 ell, const ValuationTuple& w, const RankProfile& profile) {
    const unsigned top = w.max();
    if (top == 0) return 1;
    return mpq_class(mpz_class(1), mpz_class(static_cast<unsigned long>(nt::phi_prime_power(ell, top))) *
                                       kummer::mpz_pow(ell, kummer::f_exponent(w, profile)));
}

inline Survival generic_model(const RankProfile& profile) {
    return [profile](u64 ell, const ValuationTuple& w) { return generic_survival(ell, w, profile); };
}

/// Local density of v_l(Psi(p)) = v_I from a survival function.
inline mpq_class F_from_survival(u64 ell, const ValuationTuple& v, const Survival& G) {
    mpq_class sum = 0;
    for (unsigned J = 0; J < (1u << v.n()); ++J) {
        const mpq_class g = G(ell, add_delta(v, J));
        if (popcount(J) % 2) sum -= g;
        else sum += g;
    }
    return sum;
}

/// Sum of F over a box of half-open ranges via the corner telescoping.
inline mpq_class box_sum(u64 ell, const std::vector<CoordRange>& box, const Survival& G) {
    const int n = static_cast<int>(box.size());
    mpq_class sum = 0;
    for (unsigned S = 0; S < (1u << n); ++S) {
        ValuationTuple corner;
        bool at_infinity = false;
        for (int i = 0; i < n; ++i) {
            if (S >> i & 1u) {
                if (!box[i].hi) {
                    at_infinity = true;
                    break;
                }
                corner.entries.push_back(*box[i].hi);
            } else {
                corner.entries.push_back(box[i].lo);
            }
        }
        if (at_infinity) continue;
        const mpq_class g = G(ell, corner);
        if (popcount(S) % 2) sum -= g;
        else sum += g;
    }
    return sum;
}

/// A_{V_l,R}(l) with the provenance of its evaluation.
struct LocalSeries {
    u64 ell = 2;
    mpq_class value;
    std::string pattern;
    std::string method;  // "finite-sum" or "telescoped"
};

/// Exact local series. Finite lists sum F directly when the
/// model is generic; product patterns telescope.
inline LocalSeries local_series(u64 ell, const LocalPattern& V, const RankProfile& profile,
                                const Survival& G = {}) {
    LocalSeries out;
    out.ell = ell;
    out.pattern = V.describe();
    if (V.n() != profile.n()) throw PreconditionError("pattern arity does not match the family size");
    const Survival model = G ? G : generic_model(profile);
    if (V.is_finite_list()) {
        out.method = "finite-sum";
        for (const auto& v : V.tuples()) out.value += G ? F_from_survival(ell, v, model) : F(ell, v, profile);
        return out;
    }
    out.method = "telescoped";
    for (const auto& box : V.boxes()) out.value += box_sum(ell, box, model);
    return out;
}

/// Certified enclosure of prod_l A_{V_l,R}(l).
struct EulerProduct {
    double lower = 0.0;
    double upper = 0.0;
    u64 cutoff = 0;
    std::size_t primes_used = 0;
    double tail_factor = 1.0;  // lower bound for prod_{l > L} A_l
    std::vector<std::pair<u64, mpq_class>> factors;  // l <= report_upto
    bool absorbed_zero = false;
};

struct EulerOptions {
    u64 cutoff = 100'000;
    u64 report_upto = 50;
    unsigned threads = 1;
    /// Exact replacement local factors (e.g. measured ones at small l).
    std::function<std::optional<mpq_class>(u64 ell)> override_factor;
};

/// Local patterns per prime: explicit entries plus a default rule.
struct PatternFamily {
    std::map<u64, LocalPattern> at;
    LocalPattern default_rule = LocalPattern::zero(1);

    const LocalPattern& operator()(u64 ell) const {
        auto it = at.find(ell);
        return it == at.end() ? default_rule : it->second;
    }
};

namespace detail {
inline double round_down(double x) { return std::nextafter(x, 0.0); }
inline double round_up(double x) { return std::nextafter(x, std::numeric_limits<double>::infinity()); }
/// [lo, hi] double enclosure of a nonnegative rational.
inline std::pair<double, double> enclose(const mpq_class& q) {
    const double d = q.get_d();  // truncates toward zero
    if (mpq_class(d) == q) return {d, d};
    return {d, round_up(d)};
}
}  // namespace detail

/// prod_{l <= L} A_l, times [1 - 2^n / L, 1] for the tail: for l > L the
/// factor lies in [F_zero(l), 1] and F_zero(l) > 1 - 2^n/(l^2 - l), whose
/// sum over l > L is below 2^n / L. Products run in ascending l and every
/// multiplication is rounded outward, so the result is independent of the
/// thread count.
inline EulerProduct euler_product(const PatternFamily& V, const RankProfile& profile, const EulerOptions& opt) {
    if (!V.default_rule.contains_zero())
        throw PreconditionError("the default local pattern must contain 0_I for the Euler product to converge");
    const int n = profile.n();
    const u64 L = opt.cutoff;
    if (L < 2) throw PreconditionError("Euler cutoff must be >= 2");
    const double tail_mass = std::ldexp(1.0, n) / static_cast<double>(L);
    if (tail_mass >= 1.0) throw PreconditionError("Euler cutoff too small for the tail bound 2^n / L < 1");

    std::vector<u64> primes = nt::primes_up_to(L);
    for (const auto& [ell, pat] : V.at)
        if (ell > L) primes.push_back(ell);

    std::vector<mpq_class> values(primes.size());
    std::vector<char> done(primes.size(), 0);
    if (opt.override_factor) {
        for (std::size_t k = 0; k < primes.size(); ++k)
            if (auto v = opt.override_factor(primes[k])) {
                values[k] = *v;
                done[k] = 1;
            }
    }
    auto compute = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t k = lo; k < hi; ++k) {
            if (done[k]) continue;
            const u64 ell = primes[k];
            const LocalPattern& pat = V(ell);
            values[k] = pat.is_zero_only() ? F_zero(ell, profile) : local_series(ell, pat, profile).value;
        }
    };
    const unsigned threads = std::max(1u, opt.threads);
    if (threads == 1) {
        compute(0, primes.size());
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back(compute, primes.size() * t / threads, primes.size() * (t + 1) / threads);
    }

    EulerProduct out;
    out.cutoff = L;
    out.primes_used = primes.size();
    double lo = 1.0, hi = 1.0;
    for (std::size_t k = 0; k < primes.size(); ++k) {
        if (primes[k] <= opt.report_upto) out.factors.emplace_back(primes[k], values[k]);
        if (sgn(values[k]) < 0 || values[k] > 1) throw std::logic_error("local factor outside [0,1]");
        if (values[k] == 0) out.absorbed_zero = true;
        auto [flo, fhi] = detail::enclose(values[k]);
        lo = detail::round_down(lo * flo);
        hi = detail::round_up(hi * fhi);
    }
    if (out.absorbed_zero) {
        out.lower = out.upper = 0.0;
        out.tail_factor = 1.0;
        return out;
    }
    out.tail_factor = detail::round_down(1.0 - detail::round_up(tail_mass));
    out.lower = detail::round_down(lo * out.tail_factor);
    out.upper = std::min(1.0, hi);
    return out;
}

// ---------------------------------------------------------------------------
// Probabilistic model
// ---------------------------------------------------------------------------

/// Random-variable model: one truncated geometric variable per basis
/// element of each W_i, one for the roots of unity, conditioned on the
/// event E that hull relations between basis elements are respected.
class ProbabilityModel {
public:
    ProbabilityModel(const GroupFamily& family, u64 ell, const ValuationTuple& v) : ell_(ell), v_(v) {
        if (v.n() != family.size()) throw PreconditionError("tuple length does not match the family size");
        for (int i = 0; i < family.size(); ++i)
            for (const auto& b : independent_subset(family[i])) {
                owner_.push_back(i);
                basis_.push_back(b);
            }
        const std::size_t B = basis_.size();
        if (B > 16) throw LimitError("probabilistic model supports at most 16 basis elements");
        for (std::size_t b = 0; b < B; ++b) {
            for (unsigned mask = 1; mask < (1u << B); ++mask) {
                if (mask >> b & 1u) continue;
                std::vector<FactoredRational> sub;
                for (std::size_t k = 0; k < B; ++k)
                    if (mask >> k & 1u) sub.push_back(basis_[k]);
                if (in_divisible_hull(basis_[b], sub)) relations_.emplace_back(b, mask);
            }
        }
        const unsigned top = v.max() + 1;
        for (unsigned k = 0; k <= top; ++k) {
            px_.push_back(k == top ? inv_pow(ell, k) : inv_pow(ell, k) - inv_pow(ell, k + 1));
            const auto phi = [&](unsigned j) { return mpq_class(1, nt::phi_prime_power(ell, j)); };
            pz_.push_back(k == top ? phi(k) : phi(k) - phi(k + 1));
        }
    }

    std::size_t basis_size() const { return basis_.size(); }
    std::size_t relation_count() const { return relations_.size(); }

    /// Exact conditional probability by enumerating the finite support.
    mpq_class enumerate() const {
        const std::size_t B = basis_.size();
        const unsigned base = v_.max() + 2;
        std::vector<unsigned> x(B + 1, 0);
        mpq_class num = 0, den = 0;
        while (true) {
            if (satisfies_E(x)) {
                mpq_class p = pz_[x[B]];
                for (std::size_t k = 0; k < B; ++k) p *= px_[x[k]];
                den += p;
                if (hits(x)) num += p;
            }
            std::size_t i = 0;
            while (i <= B && ++x[i] == base) x[i++] = 0;
            if (i > B) break;
        }
        return num / den;
    }

    struct Estimate {
        double value = 0.0;
        double std_error = 0.0;
        long long drawn = 0;
        long long accepted = 0;
    };

    /// Rejection sampling of the same conditional probability.
    Estimate sample(long long draws, std::uint64_t seed) const {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        auto cdf = [](const std::vector<mpq_class>& p) {
            std::vector<double> c;
            double acc = 0;
            for (const auto& q : p) c.push_back(acc += q.get_d());
            c.back() = 1.0;
            return c;
        };
        const auto cx = cdf(px_), cz = cdf(pz_);
        auto draw = [&](const std::vector<double>& c) {
            const double u = U(rng);
            return static_cast<unsigned>(std::upper_bound(c.begin(), c.end(), u) - c.begin());
        };
        const std::size_t B = basis_.size();
        std::vector<unsigned> x(B + 1);
        Estimate est;
        long long hit = 0;
        for (long long s = 0; s < draws; ++s) {
            for (std::size_t k = 0; k < B; ++k) x[k] = std::min<unsigned>(draw(cx), static_cast<unsigned>(cx.size() - 1));
            x[B] = std::min<unsigned>(draw(cz), static_cast<unsigned>(cz.size() - 1));
            ++est.drawn;
            if (!satisfies_E(x)) continue;
            ++est.accepted;
            if (hits(x)) ++hit;
        }
        if (est.accepted > 0) {
            const double p = static_cast<double>(hit) / static_cast<double>(est.accepted);
            est.value = p;
            est.std_error = std::sqrt(p * (1 - p) / static_cast<double>(est.accepted));
        }
        return est;
    }

private:
    bool satisfies_E(const std::vector<unsigned>& x) const {
        for (auto [b, mask] : relations_) {
            unsigned mn = std::numeric_limits<unsigned>::max();
            for (std::size_t k = 0; k < basis_.size(); ++k)
                if (mask >> k & 1u) mn = std::min(mn, x[k]);
            if (x[b] < mn) return false;
        }
        return true;
    }

    bool hits(const std::vector<unsigned>& x) const {
        const std::size_t B = basis_.size();
        std::vector<unsigned> mins(v_.n(), x[B]);
        for (std::size_t k = 0; k < B; ++k) mins[owner_[k]] = std::min(mins[owner_[k]], x[k]);
        for (int i = 0; i < v_.n(); ++i)
            if (mins[i] != v_[i]) return false;
        return true;
    }

    u64 ell_;
    ValuationTuple v_;
    std::vector<int> owner_;
    std::vector<FactoredRational> basis_;
    std::vector<std::pair<std::size_t, unsigned>> relations_;
    std::vector<mpq_class> px_, pz_;
};

enum class OracleMethod { ExactEnumeration, MonteCarlo };

struct OracleResult {
    OracleMethod method = OracleMethod::ExactEnumeration;
    std::optional<mpq_class> exact;
    double estimate = 0.0;
    double std_error = 0.0;
    long long drawn = 0;
    long long accepted = 0;
};

inline OracleResult prob_model_oracle(u64 ell, const ValuationTuple& v, const GroupFamily& family,
                                      OracleMethod method, long long samples = 1'000'000,
                                      std::uint64_t seed = 1) {
    ProbabilityModel model(family, ell, v);
    OracleResult out;
    out.method = method;
    if (method == OracleMethod::ExactEnumeration) {
        if (!rank_profile(family).is_independent())
            throw PreconditionError("exact enumeration is only available for multiplicatively independent families");
        out.exact = model.enumerate();
        out.estimate = out.exact->get_d();
        return out;
    }
    const auto est = model.sample(samples, seed);
    out.estimate = est.value;
    out.std_error = est.std_error;
    out.drawn = est.drawn;
    out.accepted = est.accepted;
    return out;
}

}  // namespace idxdens::artin
