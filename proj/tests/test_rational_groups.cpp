#include <gtest/gtest.h>

#include <random>

#include "idxdens/rational_groups.hpp"

using namespace idxdens;

namespace {

MultGroup G(std::vector<std::string> lits) { return MultGroup::parse(lits); }
GroupFamily F(std::vector<std::vector<std::string>> lits) { return GroupFamily::parse(lits); }

}  // namespace

TEST(ParseRational, Integer) {
    const auto r = parse_rational("2");
    EXPECT_EQ(r.sign, 1);
    EXPECT_EQ(r.exponents, (std::map<u64, int>{{2, 1}}));
}

TEST(ParseRational, NegativeFraction) {
    const auto r = parse_rational("-12/5");
    EXPECT_EQ(r.sign, -1);
    EXPECT_EQ(r.exponents, (std::map<u64, int>{{2, 2}, {3, 1}, {5, -1}}));
    EXPECT_EQ(r.value(), mpq_class(-12, 5));
}

TEST(ParseRational, One) {
    const auto r = parse_rational("1");
    EXPECT_TRUE(r.is_one());
    EXPECT_TRUE(r.exponents.empty());
}

TEST(ParseRational, DecimalAndReducedFraction) {
    EXPECT_EQ(parse_rational("0.75").value(), mpq_class(3, 4));
    EXPECT_EQ(parse_rational("6/4").value(), mpq_class(3, 2));
    EXPECT_EQ(parse_rational("012/05").value(), mpq_class(12, 5));
}

TEST(ParseRational, Errors) {
    EXPECT_THROW(parse_rational("0"), ParseError);
    EXPECT_THROW(parse_rational("0/7"), ParseError);
    EXPECT_THROW(parse_rational("abc"), ParseError);
    EXPECT_THROW(parse_rational("3/0"), ParseError);
    EXPECT_THROW(parse_rational(""), ParseError);
}

TEST(ParseRational, LargePrimeFactor) {
    // 1000003 * 1000033 needs rho beyond trial division
    const auto r = parse_rational("1000036000099");
    EXPECT_EQ(r.exponents, (std::map<u64, int>{{1000003, 1}, {1000033, 1}}));
}

TEST(ParseRational, FactorizationBudgetExhausted) {
    factor::FactorLimits tight{10, 1};
    try {
        parse_rational("1000036000099", tight);
        FAIL() << "expected a factorization failure";
    } catch (const FactorizationError& e) {
        EXPECT_NE(std::string(e.what()).find("factorization failed"), std::string::npos);
    }
}

TEST(ParseRational, RoundTripProperty) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 500; ++i) {
        const long long num = static_cast<long long>(rng() % 2'000'000) + 1;
        const long long den = static_cast<long long>(rng() % 50'000) + 1;
        const bool neg = rng() & 1;
        const std::string lit = (neg ? "-" : "") + std::to_string(num) + "/" + std::to_string(den);
        const auto r = parse_rational(lit);
        mpq_class want(mpz_class(std::to_string(neg ? -num : num)), mpz_class(std::to_string(den)));
        want.canonicalize();
        EXPECT_EQ(r.value(), want) << lit;
        for (auto [p, e] : r.exponents) {
            EXPECT_NE(e, 0);
            EXPECT_TRUE(factor::is_probable_prime(p));
        }
    }
}

TEST(Rank, Examples) {
    EXPECT_EQ(rank(G({"2", "3"})), 2);
    EXPECT_EQ(rank(G({"4", "8"})), 1);
    EXPECT_EQ(rank(G({"-1"})), 0);
    EXPECT_EQ(rank(G({"2/3", "4/9", "6"})), 2);
}

TEST(Rank, TorsionDoesNotChangeRank) {
    std::mt19937 rng(3);
    const std::vector<std::string> atoms{"2", "3", "5", "6", "10", "15", "4/9", "7/2"};
    for (int i = 0; i < 100; ++i) {
        std::vector<std::string> gens;
        for (int k = 0; k < 3; ++k) gens.push_back(atoms[rng() % atoms.size()]);
        auto with = gens;
        with.push_back("-1");
        EXPECT_EQ(rank(G(gens)), rank(G(with)));
    }
}

TEST(RankProfile, Examples) {
    const auto a = rank_profile(F({{"2"}, {"3"}}));
    EXPECT_EQ(a(0b01), 1);
    EXPECT_EQ(a(0b10), 1);
    EXPECT_EQ(a(0b11), 2);
    EXPECT_EQ(a(0), 0);

    const auto b = rank_profile(F({{"2"}, {"2"}}));
    EXPECT_EQ(b(0b01), 1);
    EXPECT_EQ(b(0b10), 1);
    EXPECT_EQ(b(0b11), 1);

    const auto c = rank_profile(F({{"2", "3"}, {"6"}}));
    EXPECT_EQ(c(0b01), 2);
    EXPECT_EQ(c(0b10), 1);
    EXPECT_EQ(c(0b11), 2);
}

TEST(RankProfile, SizeLimit) {
    std::vector<std::vector<std::string>> lits(13, std::vector<std::string>{"2"});
    EXPECT_THROW(rank_profile(F(lits)), LimitError);
}

TEST(RankProfile, MatroidPropertiesOnRandomFamilies) {
    std::mt19937 rng(5);
    const std::vector<std::string> atoms{"2", "3", "5", "7", "6", "10", "14", "15", "21", "35", "4", "9/5", "-1"};
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 5);
        std::vector<std::vector<std::string>> lits;
        for (int i = 0; i < n; ++i) {
            std::vector<std::string> g;
            const int k = 1 + static_cast<int>(rng() % 3);
            for (int j = 0; j < k; ++j) g.push_back(atoms[rng() % atoms.size()]);
            lits.push_back(g);
        }
        const auto fam = F(lits);
        const auto R = rank_profile(fam);
        ASSERT_EQ(R(0), 0);
        for (unsigned J = 0; J <= R.full_mask(); ++J) {
            int sum = 0;
            for (int i = 0; i < n; ++i)
                if (J >> i & 1u) sum += R.group_rank(i);
            EXPECT_LE(R(J), sum);
            for (unsigned K = 0; K <= R.full_mask(); ++K) {
                if ((J & K) == J) {
                    EXPECT_LE(R(J), R(K));
                }
                EXPECT_LE(R(J | K) + R(J & K), R(J) + R(K));
            }
        }
        // separatedness against direct hull containment
        bool separated = true;
        for (int i = 0; i < n; ++i) {
            const auto others = fam.generators_of(R.full_mask() & ~(1u << i));
            bool contained = true;
            for (const auto& g : fam[i].generators())
                if (!in_divisible_hull(g, others)) contained = false;
            if (contained) separated = false;
        }
        EXPECT_EQ(is_separated(fam), separated) << fam.canonical();
    }
}

TEST(Separated, Examples) {
    EXPECT_TRUE(is_separated(F({{"2"}, {"3"}})));
    EXPECT_FALSE(is_separated(F({{"2"}, {"2"}})));
    EXPECT_FALSE(is_separated(F({{"2"}, {"4"}})));
    EXPECT_TRUE(is_separated(F({{"2", "3"}, {"6", "5"}})));
}

TEST(DivisibleHull, Examples) {
    EXPECT_TRUE(in_divisible_hull(parse_rational("8"), G({"2"})));
    EXPECT_FALSE(in_divisible_hull(parse_rational("6"), G({"2"})));
    EXPECT_TRUE(in_divisible_hull(parse_rational("2/3"), G({"4/9"})));
    EXPECT_TRUE(in_divisible_hull(parse_rational("-1"), G({"2"})));
}

TEST(GroupFamily, CanonicalAndFingerprint) {
    const auto a = F({{"2"}, {"3", "5/7"}});
    EXPECT_EQ(a.canonical(), "<2>|<3,5/7>");
    EXPECT_EQ(a.fingerprint(), F({{"2"}, {"3", "10/14"}}).fingerprint());
    EXPECT_NE(a.fingerprint(), F({{"3", "5/7"}, {"2"}}).fingerprint());
}

TEST(GroupFamily, IndependentSubset) {
    const auto basis = independent_subset(G({"2", "4", "3", "6", "-1"}));
    EXPECT_EQ(basis.size(), 2u);
    EXPECT_EQ(rank_of(basis), 2);
}
