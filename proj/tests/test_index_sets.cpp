#include <gtest/gtest.h>

#include <random>

#include "idxdens/index_sets.hpp"

using namespace idxdens;

namespace {

IndexTuple T(std::vector<u64> e) { return IndexTuple{std::move(e)}; }
ValuationTuple V(std::vector<unsigned> e) { return ValuationTuple{std::move(e)}; }

std::vector<IndexSet> zoo() {
    std::vector<IndexSet> z;
    z.push_back(IndexSet::equals({4}));
    z.push_back(IndexSet::equals({2, 6}));
    z.push_back(IndexSet::divides({12}));
    z.push_back(IndexSet::divides({4, 9}));
    z.push_back(IndexSet::squarefree());
    z.push_back(IndexSet::kfree({2, 3}));
    z.push_back(IndexSet::valuation(1, {{2, LocalPattern::zero(1)}}, LocalPattern::any(1)));
    z.push_back(IndexSet::valuation(2, {{3, LocalPattern::below({1, 2})}}, LocalPattern::below({2, 2})));
    z.push_back(IndexSet::finite(1, {T({1}), T({6}), T({10})}));
    z.push_back(IndexSet::primes());
    z.push_back(IndexSet::prime_tuple({1, 2}));
    z.push_back(IndexSet::even_prime_count());
    return z;
}

}  // namespace

TEST(VQ, Examples) {
    const auto a = v_Q(T({12, 9}), SquareFreeModulus({2, 3}));
    ASSERT_EQ(a.size(), 2u);
    EXPECT_EQ(a[0].first, 2u);
    EXPECT_EQ(a[0].second, V({2, 0}));
    EXPECT_EQ(a[1].second, V({1, 2}));

    for (const auto& [ell, v] : v_Q(T({1, 1}), SquareFreeModulus::primorial(13))) EXPECT_TRUE(v.is_zero()) << ell;

    const auto c = v_Q(T({8}), SquareFreeModulus({2, 5}));
    EXPECT_EQ(c[0].second, V({3}));
    EXPECT_EQ(c[1].second, V({0}));
}

TEST(SquareFreeModulus, RejectsSquares) {
    EXPECT_THROW(SquareFreeModulus(std::vector<u64>{2, 2}), PreconditionError);
    EXPECT_THROW(SquareFreeModulus(std::vector<u64>{4}), PreconditionError);
    EXPECT_THROW(SquareFreeModulus(u64{12}), PreconditionError);
    EXPECT_EQ(SquareFreeModulus::primorial(7).value(), 210u);
}

TEST(MemberHQ, Examples) {
    EXPECT_FALSE(IndexSet::squarefree().member_HQ(T({12}), SquareFreeModulus({2})));
    EXPECT_TRUE(IndexSet::squarefree().member_HQ(T({9}), SquareFreeModulus({2})));
    EXPECT_TRUE(IndexSet::equals({2, 4}).member_HQ(T({2, 4}), SquareFreeModulus::primorial(11)));
    EXPECT_TRUE(IndexSet::primes().member_HQ(T({1}), SquareFreeModulus::primorial(50)));
    EXPECT_THROW(IndexSet::even_prime_count().member_HQ(T({1}), SquareFreeModulus({2})), UnsupportedError);
}

TEST(Classify, Examples) {
    EXPECT_EQ(IndexSet::squarefree().classify().kind, SetClass::Cut);
    const auto e = IndexSet::equals({4}).classify();
    EXPECT_EQ(e.kind, SetClass::AlmostCut);
    EXPECT_EQ(e.q0, 2u);
    const auto p = IndexSet::primes().classify();
    EXPECT_TRUE(p.is_determined());
    EXPECT_FALSE(p.is_almost_cut());
    EXPECT_EQ(IndexSet::even_prime_count().classify().kind, SetClass::Unknown);
    EXPECT_EQ(to_string(SetClass::Cut), "cut by valuations");
}

TEST(Classify, ImplicationsOnZoo) {
    for (const auto& s : zoo()) {
        const auto c = s.classify();
        EXPECT_TRUE(!c.is_cut() || c.is_almost_cut()) << s.describe();
        EXPECT_TRUE(!c.is_almost_cut() || c.is_determined()) << s.describe();
    }
}

TEST(Enumerate, Examples) {
    std::vector<u64> got;
    for (const auto& h : IndexSet::squarefree().enumerate(10)) got.push_back(h[0]);
    EXPECT_EQ(got, (std::vector<u64>{1, 2, 3, 5, 6, 7, 10}));

    const auto eq = IndexSet::equals({3}).enumerate(10);
    ASSERT_EQ(eq.size(), 1u);
    EXPECT_EQ(eq[0], T({3}));

    got.clear();
    for (const auto& h : IndexSet::primes().enumerate(10, SquareFreeModulus({2, 3}))) got.push_back(h[0]);
    EXPECT_EQ(got, (std::vector<u64>{2, 3}));
}

TEST(Enumerate, AgreesWithMembership) {
    for (const auto& s : zoo()) {
        const int n = s.n();
        const u64 B = n == 1 ? 200 : n == 2 ? 40 : 12;
        const auto listed = s.enumerate(B);
        std::vector<IndexTuple> brute;
        std::vector<u64> idx(n, 1);
        while (true) {
            IndexTuple h{idx};
            if (s.contains(h)) brute.push_back(h);
            int i = n - 1;
            while (i >= 0 && ++idx[i] > B) idx[i--] = 1;
            if (i < 0) break;
        }
        EXPECT_EQ(listed, brute) << s.describe();
    }
}

TEST(Enumerate, SmoothnessFilter) {
    const SquareFreeModulus Q({2, 5});
    for (const auto& h : IndexSet::kfree({3}).enumerate(200, Q)) EXPECT_TRUE(Q.is_smooth(h[0]));
    EXPECT_EQ(IndexSet::kfree({3}).enumerate(200, Q).size(), 9u);  // 2^a 5^b with a,b <= 2
}

TEST(ValuationConstraint, MembershipIsPerPrime) {
    const auto s = IndexSet::valuation(2, {{2, LocalPattern::finite(2, {V({0, 0}), V({1, 0})})}, {3, LocalPattern::zero(2)}},
                                       LocalPattern::below({2, 2}));
    for (u64 a = 1; a <= 60; ++a)
        for (u64 b = 1; b <= 60; ++b) {
            const IndexTuple h = T({a, b});
            bool want = true;
            for (u64 ell : nt::primes_up_to(60))
                if (!s.local_pattern(ell).contains(v_ell(h, ell))) want = false;
            EXPECT_EQ(s.contains(h), want) << a << "," << b;
        }
}

TEST(ValuationConstraint, DefaultMustContainZero) {
    EXPECT_THROW(IndexSet::valuation(1, {}, LocalPattern::finite(1, {V({1})})), PreconditionError);
}

TEST(ChainProperty, RandomSamples) {
    std::mt19937 rng(17);
    const auto sets = zoo();
    const std::vector<std::vector<u64>> chain{{2}, {2, 3}, {2, 3, 5}, {2, 3, 5, 7}};
    for (const auto& s : sets) {
        if (s.is_predicate()) continue;
        const int n = s.n();
        for (int trial = 0; trial < 300; ++trial) {
            IndexTuple h;
            for (int i = 0; i < n; ++i) h.entries.push_back(1 + rng() % 400);
            bool inH = s.contains(h);
            bool prev = inH;
            for (const auto& primes : chain) {
                const SquareFreeModulus Q(primes);
                const bool inHQ = s.member_HQ(h, Q);
                bool inter = true;
                for (u64 ell : primes)
                    if (!s.local_pattern(ell).contains(v_ell(h, ell))) inter = false;
                EXPECT_TRUE(!prev || inHQ) << s.describe() << " " << h.to_string();
                EXPECT_TRUE(!inHQ || inter) << s.describe() << " " << h.to_string();
            }
            // H_Q shrinks as Q grows
            for (std::size_t k = 1; k < chain.size(); ++k)
                EXPECT_TRUE(!s.member_HQ(h, SquareFreeModulus(chain[k])) ||
                            s.member_HQ(h, SquareFreeModulus(chain[k - 1])));
        }
    }
}

TEST(Predicate, EvenPrimeCount) {
    const auto s = IndexSet::even_prime_count();
    EXPECT_TRUE(s.contains(T({1})));
    EXPECT_TRUE(s.contains(T({6})));
    EXPECT_FALSE(s.contains(T({2})));
    EXPECT_THROW(s.local_pattern(2), UnsupportedError);
}
