#include <gtest/gtest.h>

#include "idxdens/density.hpp"
#include "oracles.hpp"

using namespace idxdens;
using namespace idxdens::density;

namespace {

GroupFamily Fam(std::vector<std::vector<std::string>> lits) { return GroupFamily::parse(lits); }

DensityQuery query(const GroupFamily& fam, IndexSet set) {
    return DensityQuery{fam, std::move(set), Congruence{}, DegreeMode::Generic, nullptr, 100'000, 50, 1};
}

bool overlap(const DensityReport& a, const DensityReport& b) { return a.lower <= b.upper && b.lower <= a.upper; }

}  // namespace

TEST(CorrectionRatio, Examples) {
    const auto q = query(Fam({{"2"}}), IndexSet::primes());
    EXPECT_EQ(correction_ratio(IndexTuple{{3}}, q).value, mpq_class(8, 45));
    EXPECT_EQ(correction_ratio(IndexTuple{{5}}, q).value, mpq_class(24, 475));
    EXPECT_EQ(correction_ratio(IndexTuple{{1}}, q).value, 1);
    for (u64 p : nt::primes_up_to(200)) {
        if (p == 2) continue;
        EXPECT_EQ(correction_ratio(IndexTuple{{p}}, q).value, oracle::prime_index_ratio(p)) << p;
    }
}

TEST(CorrectionRatio, RefusesNonSeparated) {
    const auto q = query(Fam({{"2"}, {"2"}}), IndexSet::prime_tuple({1, 2}));
    EXPECT_THROW(correction_ratio(IndexTuple{{3, 9}}, q), UnsupportedError);
}

TEST(SingletonSum, TelescopesToConstantTimesRatio) {
    // The singleton density of {h} is A_0 * m(h).
    const auto fam = Fam({{"2"}, {"3"}});
    for (const auto& h : {IndexTuple{{1, 1}}, IndexTuple{{3, 1}}, IndexTuple{{5, 15}}, IndexTuple{{7, 7}}}) {
        auto q = query(fam, IndexSet::equals(h.entries));
        SingletonOptions opt;
        opt.B = 20;
        const auto s = singleton_sum(q, opt);
        const auto A0 = density::detail::zero_constant(q, rank_profile(fam));
        const double want = A0.upper * correction_ratio(h, q).value.get_d();
        EXPECT_NEAR(s.value, want, 1e-15) << h.to_string();
        const auto v = valuation_density(query(fam, IndexSet::finite(2, {h})));
        EXPECT_NEAR(v.value, want, 1e-15) << h.to_string();
    }
}

TEST(SingletonSum, PrimeIndexLedger) {
    auto q = query(Fam({{"2"}}), IndexSet::primes());
    SingletonOptions opt;
    opt.B = 1000;
    const auto r = singleton_sum(q, opt);
    int checked = 0;
    for (const auto& e : r.ledger) {
        if (e.key.rfind("m((", 0) != 0) continue;
        const u64 p = std::stoull(e.key.substr(3));
        ASSERT_TRUE(e.exact.has_value());
        EXPECT_EQ(*e.exact, oracle::prime_index_ratio(p));
        ++checked;
    }
    EXPECT_GE(checked, 10);
    EXPECT_LT(r.lower, r.upper);
    EXPECT_NEAR(r.value, 0.3870, 5e-3);
}

TEST(MethodAgreement, ArtinConstantForSeveralBases) {
    for (const std::string a : {"2", "3", "6", "10"}) {
        const auto fam = Fam({{a}});
        kummer::KummerEngine engine(fam);
        const auto series = hooley_series(engine, LevelMap::identity(), SeriesOptions{});
        const auto euler = valuation_density(query(fam, IndexSet::equals({1})));
        SingletonOptions opt;
        opt.B = 1;
        const auto single = singleton_sum(query(fam, IndexSet::equals({1})), opt);
        EXPECT_TRUE(overlap(series, euler)) << a;
        EXPECT_TRUE(overlap(euler, single)) << a;
        EXPECT_TRUE(overlap(series, single)) << a;
        EXPECT_NEAR(euler.value, 0.3739558, 1e-4) << a;
    }
}

TEST(MethodAgreement, SquareFreeIndex) {
    const auto fam = Fam({{"2"}});
    kummer::KummerEngine engine(fam);
    const auto series = hooley_series(engine, LevelMap::power(2), SeriesOptions{});
    const auto euler = valuation_density(query(fam, IndexSet::squarefree()));
    EXPECT_TRUE(overlap(series, euler));
    EXPECT_NEAR(euler.value, 0.85654, 1e-4);
}

TEST(MethodAgreement, ZieglerAndDivides) {
    const auto fam = Fam({{"2"}});
    kummer::KummerEngine engine(fam);
    const auto z = hooley_series(engine, LevelMap::ziegler(2), SeriesOptions{});
    const auto e = valuation_density(query(fam, IndexSet::equals({2})));
    EXPECT_TRUE(overlap(z, e));
    const auto l = hooley_series(engine, LevelMap::lenstra(12), SeriesOptions{});
    const auto d = valuation_density(query(fam, IndexSet::divides({12})));
    EXPECT_TRUE(overlap(l, d));
}

TEST(KFree, MonotoneInK) {
    const auto fam = Fam({{"2"}});
    double prev_lo = 0, prev_hi = 0;
    for (unsigned k = 1; k <= 7; ++k) {
        const auto r = valuation_density(query(fam, IndexSet::kfree({k})));
        EXPECT_GE(r.upper, prev_lo) << k;
        EXPECT_GE(r.lower, prev_lo - 1e-12) << k;
        prev_lo = r.lower;
        prev_hi = r.upper;
    }
    EXPECT_GT(prev_lo, 0.99);
    EXPECT_LE(prev_hi, 1.0);
}

TEST(SingletonSum, CompletenessAndLattice) {
    // All positive integers as a singleton sum: partial sums grow with B
    // and stay below 1.
    auto q = query(Fam({{"2"}}), IndexSet::valuation(1, {}, LocalPattern::any(1)));
    SingletonOptions opt;
    opt.B = 2000;
    opt.lattice_B = {10, 50, 200, 1000};
    opt.lattice_Q = {3, 7};
    const auto r = singleton_sum(q, opt);
    std::map<u64, std::vector<LatticePoint>> byQ;
    for (const auto& p : r.lattice) byQ[p.Q].push_back(p);
    for (auto& [Q, pts] : byQ)
        for (std::size_t i = 1; i < pts.size(); ++i) {
            EXPECT_GE(pts[i].partial, pts[i - 1].partial);
            EXPECT_LE(pts[i].partial, 1.0);
        }
    // smoothness: larger Q admits more tuples at the same B
    for (const auto& a : r.lattice)
        for (const auto& b : r.lattice)
            if (a.B == b.B && a.Q != 0 && (b.Q == 0 || b.Q % a.Q == 0)) {
                EXPECT_LE(a.partial, b.partial);
            }
    EXPECT_GT(r.value, 0.99);
    EXPECT_LE(r.upper, 1.0);
}

TEST(Refusals, Documented) {
    auto ns = query(Fam({{"2"}, {"2"}}), IndexSet::prime_tuple({1, 2}));
    try {
        singleton_sum(ns, SingletonOptions{});
        FAIL() << "expected a refusal";
    } catch (const UnsupportedError& e) {
        EXPECT_NE(std::string(e.what()).find("non-separated"), std::string::npos);
    }
    EXPECT_THROW(valuation_density(query(Fam({{"2"}}), IndexSet::primes())), UnsupportedError);
    EXPECT_THROW(singleton_sum(query(Fam({{"2"}}), IndexSet::even_prime_count()), SingletonOptions{}), UnsupportedError);
    auto cong = query(Fam({{"2"}}), IndexSet::equals({1}));
    cong.congruence = Congruence{4, {1}};
    EXPECT_THROW(valuation_density(cong), UnsupportedError);
    kummer::KummerEngine two(Fam({{"2"}, {"3"}}));
    EXPECT_THROW(hooley_series(two, LevelMap::identity(), SeriesOptions{}), PreconditionError);
}

TEST(CorrectedMode, SquareBaseHasNoPrimitiveRoots) {
    // 4 is a square, so its index is always even.
    const auto fam = Fam({{"4"}});
    auto engine = std::make_shared<kummer::KummerEngine>(fam);
    const auto generic = hooley_series(*engine, LevelMap::identity(), SeriesOptions{1000});
    SeriesOptions corrected{1000};
    corrected.mode = DegreeMode::Corrected;
    const auto fixed = hooley_series(*engine, LevelMap::identity(), corrected);
    EXPECT_GT(generic.value, 0.3);
    EXPECT_LT(std::fabs(fixed.value), 0.01);
    EXPECT_TRUE(fixed.estimated);
}
