#pragma once

/**
 * @file factor.hpp
 * @brief Integer factorization for generator literals.
 *
 * Trial division up to a bound, then Pollard rho (Brent variant) under a
 * configurable iteration budget. Primality of cofactors is decided by a
 * deterministic Miller-Rabin test for 64-bit inputs. Anything that cannot
 * be split within budget is reported, never guessed.
 */

#include <cstdint>
#include <map>
#include <numeric>
#include <string>

#include "idxdens/error.hpp"
#include "idxdens/numtheory.hpp"

namespace idxdens::factor {

using nt::u64;

struct FactorLimits {
    u64 trial_bound = 1'000'000;
    u64 rho_iterations = 2'000'000;
};

inline bool is_probable_prime(u64 n) {
    if (n < 2) return false;
    for (u64 p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
        if (n % p == 0) return n == p;
    }
    u64 d = n - 1;
    int s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    // These bases are deterministic for all n < 2^64.
    for (u64 a : {2ULL, 325ULL, 9375ULL, 28178ULL, 450775ULL, 9780504ULL, 1795265022ULL}) {
        u64 x = nt::pow_mod(a % n, d, n);
        if (a % n == 0 || x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int r = 1; r < s; ++r) {
            x = nt::mul_mod(x, x, n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

namespace detail {

// Brent's cycle-finding rho; returns a nontrivial factor or 0 on budget
// exhaustion.
inline u64 rho(u64 n, u64 c, u64& budget) {
    auto f = [&](u64 x) { return (nt::mul_mod(x, x, n) + c) % n; };
    u64 y = 2, x = 2, g = 1, q = 1, ys = 2;
    const u64 m = 128;
    u64 r = 1;
    while (g == 1) {
        x = y;
        for (u64 i = 0; i < r; ++i) y = f(y);
        u64 k = 0;
        while (k < r && g == 1) {
            ys = y;
            const u64 lim = std::min(m, r - k);
            for (u64 i = 0; i < lim; ++i) {
                y = f(y);
                q = nt::mul_mod(q, x > y ? x - y : y - x, n);
            }
            g = std::gcd(q, n);
            k += m;
            if (budget <= lim) return 0;
            budget -= lim;
        }
        r <<= 1;
    }
    if (g == n) {
        do {
            ys = f(ys);
            g = std::gcd(x > ys ? x - ys : ys - x, n);
        } while (g == 1);
    }
    return g == n ? 0 : g;
}

inline void split(u64 n, std::map<u64, int>& out, u64& budget) {
    if (n == 1) return;
    if (is_probable_prime(n)) {
        ++out[n];
        return;
    }
    for (u64 c = 1; c < 64; ++c) {
        const u64 d = rho(n, c, budget);
        if (d != 0) {
            split(d, out, budget);
            split(n / d, out, budget);
            return;
        }
        if (budget == 0) break;
    }
    throw FactorizationError("factorization failed: could not split " + std::to_string(n) +
                             " within the Pollard rho work bound");
}

}  // namespace detail

/// Prime factorization of n >= 1 as prime -> multiplicity.
inline std::map<u64, int> factorize(u64 n, const FactorLimits& limits = {}) {
    std::map<u64, int> out;
    if (n == 0) throw PreconditionError("cannot factor zero");
    for (u64 d = 2; d <= limits.trial_bound && d * d <= n; d += (d == 2 ? 1 : 2)) {
        while (n % d == 0) {
            ++out[d];
            n /= d;
        }
    }
    if (n == 1) return out;
    u64 budget = limits.rho_iterations;
    detail::split(n, out, budget);
    return out;
}

}  // namespace idxdens::factor
