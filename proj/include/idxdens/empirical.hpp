#pragma once

/**
 * @file empirical.hpp
 * @brief Prime sieve harness: the index map p -> (Ind_p(W_1), ..., Ind_p(W_n))
 *        and frequency estimates with Wilson intervals.
 *
 * The range is cut into fixed chunks. Each chunk sieves its primes and
 * factors p - 1 for every prime in it by sieving with the base primes, so
 * orders come from exponent descent without trial division. Chunks are
 * independent and merged in ascending order, which makes results the same
 * for any thread count.
 */

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "idxdens/error.hpp"
#include "idxdens/index_sets.hpp"
#include "idxdens/numtheory.hpp"
#include "idxdens/rational_groups.hpp"

namespace idxdens {

/// Residue classes p mod m; trivial when modulus == 1.
struct Congruence {
    nt::u64 modulus = 1;
    std::vector<nt::u64> residues{0};

    bool trivial() const { return modulus == 1; }
    bool allows(nt::u64 p) const {
        return trivial() || std::find(residues.begin(), residues.end(), p % modulus) != residues.end();
    }
    void validate() const {
        if (modulus == 0) throw PreconditionError("congruence modulus must be >= 1");
        if (residues.empty()) throw PreconditionError("congruence needs at least one residue");
        for (auto r : residues)
            if (r >= modulus) throw PreconditionError("residue " + std::to_string(r) + " is not reduced mod " +
                                                      std::to_string(modulus));
    }
    std::string describe() const {
        if (trivial()) return "none";
        std::string s = "p mod " + std::to_string(modulus) + " in {";
        for (std::size_t i = 0; i < residues.size(); ++i) s += (i ? "," : "") + std::to_string(residues[i]);
        return s + "}";
    }
};

}  // namespace idxdens

namespace idxdens::empirical {

using nt::u64;

inline constexpr u64 kDefaultSieveCap = 100'000'000;

struct SieveRange {
    u64 lo = 2;
    u64 hi = 1'000'000;  // inclusive
    u64 cap = kDefaultSieveCap;

    void validate() const {
        if (hi < lo) throw PreconditionError("sieve range is empty");
        if (hi > cap)
            throw LimitError("sieve bound " + std::to_string(hi) + " exceeds the configured cap " + std::to_string(cap));
        if (hi >= (u64{1} << 32)) throw LimitError("sieve bound must stay below 2^32");
    }
};

struct IndexObservation {
    u64 p = 0;
    std::optional<IndexTuple> psi;  // empty when p divides a generator
};

/// Reductions of a family's generators, prepared once.
class IndexMap {
public:
    explicit IndexMap(const GroupFamily& family) {
        for (const auto& g : family.groups()) gens_.push_back(g.generators());
        for (u64 p : family.prime_support()) bad_.push_back(p);
    }

    bool skips(u64 p) const { return std::find(bad_.begin(), bad_.end(), p) != bad_.end(); }

    /// Psi(p) given the distinct prime factors of p - 1 (with exponents).
    std::optional<IndexTuple> operator()(u64 p, const std::vector<std::pair<u64, unsigned>>& pm1) const {
        if (skips(p)) return std::nullopt;
        IndexTuple out;
        for (const auto& gens : gens_) {
            u64 order = 1;
            for (const auto& g : gens) order = std::lcm(order, element_order(g.reduce_mod(p), p, pm1));
            out.entries.push_back((p - 1) / order);
        }
        return out;
    }

    static u64 element_order(u64 a, u64 p, const std::vector<std::pair<u64, unsigned>>& pm1) {
        u64 ord = p - 1;
        for (auto [q, e] : pm1)
            for (unsigned k = 0; k < e && nt::pow_mod(a, ord / q, p) == 1; ++k) ord /= q;
        return ord;
    }

private:
    std::vector<std::vector<FactoredRational>> gens_;
    std::vector<u64> bad_;
};

/// Psi(p) for a single prime, factoring p - 1 directly.
inline std::optional<IndexTuple> index_tuple(u64 p, const GroupFamily& family) {
    if (!nt::is_prime_small(p)) throw PreconditionError(std::to_string(p) + " is not prime");
    return IndexMap(family)(p, nt::factor_small(p - 1));
}

namespace detail {

inline constexpr u64 kChunk = 1u << 18;

/// Observations for primes in [lo, hi], p - 1 factored by sieving.
inline std::vector<IndexObservation> scan_chunk(u64 lo, u64 hi, const IndexMap& psi, std::span<const u64> base) {
    std::vector<IndexObservation> out;
    if (hi < 2) return out;
    lo = std::max<u64>(lo, 2);
    const std::size_t len = hi - lo + 1;
    std::vector<char> composite(len, 0);
    for (u64 q : base) {
        if (q * q > hi) break;
        for (u64 x = std::max(q * q, (lo + q - 1) / q * q); x <= hi; x += q) composite[x - lo] = 1;
    }
    // factors[i] lists distinct primes <= sqrt(hi) dividing (lo + i) - 1.
    constexpr int kMaxFactors = 10;
    std::vector<std::array<std::uint32_t, kMaxFactors>> factors(len);
    std::vector<std::uint8_t> nf(len, 0);
    for (u64 q : base) {
        if (q * q > hi) break;
        // multiples of q among p - 1 for p in [lo, hi], i.e. x in [lo-1, hi-1].
        const u64 first = (lo - 1 + q - 1) / q * q;
        for (u64 x = std::max<u64>(first, q); x + 1 <= hi; x += q) {
            const std::size_t i = x + 1 - lo;
            if (composite[i]) continue;
            factors[i][nf[i]++] = static_cast<std::uint32_t>(q);
        }
    }
    std::vector<std::pair<u64, unsigned>> pm1;
    for (std::size_t i = 0; i < len; ++i) {
        if (composite[i]) continue;
        const u64 p = lo + i;
        pm1.clear();
        u64 rest = p - 1;
        for (int k = 0; k < nf[i]; ++k) {
            const u64 q = factors[i][k];
            unsigned e = 0;
            while (rest % q == 0) {
                rest /= q;
                ++e;
            }
            pm1.emplace_back(q, e);
        }
        if (rest > 1) pm1.emplace_back(rest, 1);
        out.push_back({p, psi(p, pm1)});
    }
    return out;
}

}  // namespace detail

/// Visits every prime in the range in ascending order. Chunks are
/// computed by `threads` workers and handed to `visit` strictly in order.
template <class Visit>
void scan(const SieveRange& range, const GroupFamily& family, unsigned threads, Visit&& visit,
          std::function<void(u64 through)> chunk_done = {}) {
    range.validate();
    const IndexMap psi(family);
    const auto& base_all = nt::cached_primes(static_cast<u64>(std::sqrt(static_cast<double>(range.hi))) + 2);
    const std::span<const u64> base(base_all);
    const u64 first = range.lo;
    const u64 nchunks = (range.hi - first) / detail::kChunk + 1;
    threads = std::max(1u, threads);
    const u64 window = threads * 2;
    for (u64 c0 = 0; c0 < nchunks; c0 += window) {
        const u64 c1 = std::min(nchunks, c0 + window);
        std::vector<std::vector<IndexObservation>> results(c1 - c0);
        std::atomic<u64> next{c0};
        auto work = [&] {
            for (u64 c = next++; c < c1; c = next++) {
                const u64 lo = first + c * detail::kChunk;
                const u64 hi = std::min(range.hi, lo + detail::kChunk - 1);
                results[c - c0] = detail::scan_chunk(lo, hi, psi, base);
            }
        };
        if (threads == 1) {
            work();
        } else {
            std::vector<std::jthread> pool;
            for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
        }
        for (u64 c = c0; c < c1; ++c) {
            for (const auto& obs : results[c - c0]) visit(obs);
            if (chunk_done) chunk_done(std::min(range.hi, first + (c + 1) * detail::kChunk - 1));
        }
    }
}

/// Wilson score interval.
inline std::pair<double, double> wilson(u64 hits, u64 total, double z = 1.96) {
    if (total == 0) return {0.0, 1.0};
    const double n = static_cast<double>(total);
    const double p = static_cast<double>(hits) / n;
    const double z2 = z * z;
    const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
    const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct FrequencyReport {
    u64 hits = 0;
    u64 total = 0;
    u64 skipped = 0;
    u64 filtered = 0;  // primes rejected by the congruence condition
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 1.0;
    SieveRange range;
    bool resumed = false;

    void finish() {
        estimate = total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
        std::tie(lower, upper) = wilson(hits, total);
    }
    /// Standard error of the point estimate.
    double std_error() const {
        if (!total) return 1.0;
        return std::sqrt(estimate * (1 - estimate) / static_cast<double>(total));
    }
};

// ---------------------------------------------------------------------------
// Observation log
// ---------------------------------------------------------------------------

/// Text log: a header naming the family fingerprint and range, one line
/// "p h_1 ... h_n" per prime ("p -" for skipped primes) and "# through x"
/// after each completed chunk.
class ObservationLog {
public:
    static std::string header(const GroupFamily& family, const SieveRange& range) {
        return "# idxdens-observations fingerprint=" + family.fingerprint() + " family=" + family.canonical() +
               " lo=" + std::to_string(range.lo) + " hi=" + std::to_string(range.hi);
    }

    /// Reads the committed prefix of a log. Returns the last committed
    /// bound (lo - 1 when nothing was committed) or nullopt when the log
    /// belongs to another family or range.
    static std::optional<u64> read(const std::string& path, const GroupFamily& family, const SieveRange& range,
                                   std::vector<IndexObservation>& out) {
        std::ifstream in(path);
        if (!in) return std::nullopt;
        std::string line;
        if (!std::getline(in, line) || line != header(family, range)) return std::nullopt;
        std::vector<IndexObservation> pending;
        u64 through = range.lo - 1;
        while (std::getline(in, line)) {
            if (line.rfind("# through ", 0) == 0) {
                through = std::stoull(line.substr(10));
                out.insert(out.end(), pending.begin(), pending.end());
                pending.clear();
                continue;
            }
            std::istringstream ls(line);
            IndexObservation obs;
            std::string tok;
            if (!(ls >> obs.p)) break;
            IndexTuple t;
            bool skipped = false;
            while (ls >> tok) {
                if (tok == "-") {
                    skipped = true;
                    break;
                }
                t.entries.push_back(std::stoull(tok));
            }
            if (!skipped) {
                if (t.n() != family.size()) break;  // torn write
                obs.psi = std::move(t);
            }
            pending.push_back(std::move(obs));
        }
        return through;
    }

    static void write(std::ostream& os, const IndexObservation& obs) {
        os << obs.p;
        if (!obs.psi) os << " -";
        else
            for (u64 h : obs.psi->entries) os << ' ' << h;
        os << '\n';
    }
};

struct SurveyOptions {
    unsigned threads = 1;
    std::optional<std::string> log_path;
    bool resume = false;
};

/// Runs `visit` over all primes of the range, reusing and extending an
/// observation log when one is configured.
template <class Visit>
bool observe(const SieveRange& range, const GroupFamily& family, const SurveyOptions& opt, Visit&& visit) {
    range.validate();
    SieveRange todo = range;
    bool resumed = false;
    std::ofstream log;
    if (opt.log_path) {
        std::vector<IndexObservation> prior;
        std::optional<u64> through;
        if (opt.resume) through = ObservationLog::read(*opt.log_path, family, range, prior);
        if (through) {
            resumed = true;
            for (const auto& obs : prior) visit(obs);
            // rewrite the committed prefix so torn tails disappear
            std::ofstream fresh(*opt.log_path, std::ios::trunc);
            fresh << ObservationLog::header(family, range) << '\n';
            for (const auto& obs : prior) ObservationLog::write(fresh, obs);
            fresh << "# through " << *through << '\n';
            fresh.close();
            if (*through >= range.hi) return resumed;
            todo.lo = *through + 1;
            log.open(*opt.log_path, std::ios::app);
        } else {
            std::filesystem::path p(*opt.log_path);
            if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
            log.open(*opt.log_path, std::ios::trunc);
            log << ObservationLog::header(family, range) << '\n';
        }
        if (!log) throw Error("cannot write observation log " + *opt.log_path);
    }
    scan(
        todo, family, opt.threads,
        [&](const IndexObservation& obs) {
            if (log.is_open()) ObservationLog::write(log, obs);
            visit(obs);
        },
        [&](u64 through) {
            if (log.is_open()) log << "# through " << through << '\n' << std::flush;
        });
    return resumed;
}

/// Frequency of primes p in the range with p allowed by the congruence and
/// Psi(p) in H. Skipped primes and filtered primes leave the denominator.
inline FrequencyReport survey(const SieveRange& range, const GroupFamily& family, const IndexSet& set,
                              const Congruence& congruence = {}, const SurveyOptions& opt = {}) {
    congruence.validate();
    if (set.n() != family.size()) throw PreconditionError("index set arity does not match the family size");
    FrequencyReport r;
    r.range = range;
    r.resumed = observe(range, family, opt, [&](const IndexObservation& obs) {
        if (!congruence.allows(obs.p)) {
            ++r.filtered;
            return;
        }
        if (!obs.psi) {
            ++r.skipped;
            return;
        }
        ++r.total;
        if (set.contains(*obs.psi)) ++r.hits;
    });
    r.finish();
    return r;
}

/// Empirical law of v_l(Psi(p)); entries above max_v land in max_v + 1.
struct Distribution {
    u64 ell = 2;
    unsigned max_v = 2;
    u64 total = 0;
    u64 skipped = 0;
    std::map<ValuationTuple, u64> counts;

    double frequency(const ValuationTuple& v) const {
        auto it = counts.find(v);
        return total && it != counts.end() ? static_cast<double>(it->second) / static_cast<double>(total) : 0.0;
    }
};

inline Distribution distribution(const SieveRange& range, const GroupFamily& family, u64 ell, unsigned max_v,
                                 const SurveyOptions& opt = {}) {
    if (!nt::is_prime_small(ell)) throw PreconditionError(std::to_string(ell) + " is not prime");
    Distribution d;
    d.ell = ell;
    d.max_v = max_v;
    observe(range, family, opt, [&](const IndexObservation& obs) {
        if (!obs.psi) {
            ++d.skipped;
            return;
        }
        ValuationTuple v = v_ell(*obs.psi, ell);
        for (auto& x : v.entries) x = std::min(x, max_v + 1);
        ++d.counts[v];
        ++d.total;
    });
    return d;
}

}  // namespace idxdens::empirical
