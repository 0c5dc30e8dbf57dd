#pragma once

/**
 * @file numtheory.hpp
 * @brief Small-integer number theory shared by every module.
 *
 * Everything here works on 64-bit unsigned values. Modular products go
 * through unsigned __int128 so moduli up to 2^64 are safe.
 */

#include <algorithm>
#include <cstdint>
#include <mutex>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "idxdens/error.hpp"

namespace idxdens::nt {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

constexpr u64 mul_mod(u64 a, u64 b, u64 m) {
    return static_cast<u64>(static_cast<u128>(a) * b % m);
}

constexpr u64 pow_mod(u64 base, u64 exp, u64 m) {
    u64 result = 1 % m;
    base %= m;
    while (exp > 0) {
        if (exp & 1) result = mul_mod(result, base, m);
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    return result;
}

/// Inverse of a modulo a prime p (a not divisible by p).
constexpr u64 inv_mod_prime(u64 a, u64 p) { return pow_mod(a, p - 2, p); }

constexpr u64 ipow(u64 base, unsigned exp) {
    u64 r = 1;
    while (exp-- > 0) r *= base;
    return r;
}

/// Multiplicity of the prime l in x (x > 0).
constexpr unsigned valuation(u64 x, u64 l) {
    unsigned v = 0;
    while (x % l == 0) {
        x /= l;
        ++v;
    }
    return v;
}

/// Prime-power factorization by trial division; fine for the small
/// integers (indices, levels, tuple entries) this library manipulates.
inline std::vector<std::pair<u64, unsigned>> factor_small(u64 n) {
    std::vector<std::pair<u64, unsigned>> out;
    for (u64 d = 2; d * d <= n; d += (d == 2 ? 1 : 2)) {
        if (n % d != 0) continue;
        unsigned e = 0;
        while (n % d == 0) {
            n /= d;
            ++e;
        }
        out.emplace_back(d, e);
    }
    if (n > 1) out.emplace_back(n, 1);
    return out;
}

inline std::vector<u64> prime_divisors(u64 n) {
    std::vector<u64> out;
    for (auto [p, e] : factor_small(n)) out.push_back(p);
    return out;
}

inline bool is_prime_small(u64 n) {
    if (n < 2) return false;
    for (u64 d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

inline int mobius(u64 n) {
    int mu = 1;
    for (auto [p, e] : factor_small(n)) {
        if (e > 1) return 0;
        mu = -mu;
    }
    return mu;
}

inline u64 euler_phi(u64 n) {
    u64 phi = n;
    for (auto [p, e] : factor_small(n)) phi = phi / p * (p - 1);
    return phi;
}

/// phi(l^k) for a prime l; phi(l^0) = 1.
constexpr u64 phi_prime_power(u64 l, unsigned k) {
    return k == 0 ? 1 : (l - 1) * ipow(l, k - 1);
}

inline u64 radical(u64 n) {
    u64 r = 1;
    for (auto [p, e] : factor_small(n)) r *= p;
    return r;
}

inline std::vector<u64> divisors(u64 n) {
    std::vector<u64> out{1};
    for (auto [p, e] : factor_small(n)) {
        const std::size_t base = out.size();
        u64 pk = 1;
        for (unsigned k = 1; k <= e; ++k) {
            pk *= p;
            for (std::size_t i = 0; i < base; ++i) out.push_back(out[i] * pk);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Plain sieve of Eratosthenes; returns all primes <= limit.
inline std::vector<u64> primes_up_to(u64 limit) {
    std::vector<u64> out;
    if (limit < 2) return out;
    std::vector<bool> composite(limit + 1, false);
    for (u64 i = 2; i <= limit; ++i) {
        if (composite[i]) continue;
        out.push_back(i);
        for (u64 j = i * i; j <= limit; j += i) composite[j] = true;
    }
    return out;
}

/// Process-wide memo of primes_up_to for the sampling code paths, which
/// repeatedly ask for the same bound.
inline const std::vector<u64>& cached_primes(u64 limit) {
    static std::mutex mu;
    static u64 have = 0;
    static std::vector<u64> primes;
    std::lock_guard lock(mu);
    if (limit > have) {
        primes = primes_up_to(limit);
        have = limit;
    }
    return primes;
}

/// Number of cached primes <= limit (requires cached_primes(>= limit)).
inline std::span<const u64> primes_prefix(const std::vector<u64>& primes, u64 limit) {
    auto end = std::upper_bound(primes.begin(), primes.end(), limit);
    return {primes.data(), static_cast<std::size_t>(end - primes.begin())};
}

}  // namespace idxdens::nt
