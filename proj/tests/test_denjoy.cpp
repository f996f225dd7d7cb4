#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bmolab/bmolab.hpp"
#include "oracles.hpp"

using namespace bmolab;
using namespace bmolab::denjoy;

namespace {

CellSet to_cells(const std::set<Index>& s) { return CellSet(std::vector<Index>(s.begin(), s.end())); }

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::LoadError;
}

// Balls B(x, r) on the cycle Z_n with counting measure, r in {0, 1, 2, 4, ...}.
Model cycle_balls(int n) {
    Model m;
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) ids.push_back("z" + std::to_string(i));
    m.space = Space(ids, std::vector<double>(n, 1.0 / n));
    std::vector<Generator> gens;
    for (int r = 0; r <= n / 2; r = r == 0 ? 1 : 2 * r)
        for (int x = 0; x < n; ++x) {
            std::vector<Index> cells;
            for (int d = -r; d <= r; ++d) cells.push_back(static_cast<Index>(((x + d) % n + n) % n));
            gens.push_back({"B" + std::to_string(x) + "." + std::to_string(r), CellSet(cells)});
        }
    m.family = Family(m.space, std::move(gens));
    return m;
}

struct NormLog {
    Model m;
    CellFn f;
};

NormLog normalized_log(int depth) {
    auto m = models::log_singularity(depth);
    const auto& raw = m.function("log_sing");
    CellFn f = raw.scaled(1.0 / bmo_seminorm(m.space, raw, m.family).value);
    return {std::move(m), std::move(f)};
}

} // namespace

TEST(Params, Validation) {
    EXPECT_NO_THROW(DenjoyParams(2, 2).validate());
    EXPECT_EQ(code_of([] { DenjoyParams(1.0, 6).validate(); }), ErrorCode::InvalidParams);
    EXPECT_EQ(code_of([] { DenjoyParams(3, 2).validate(); }), ErrorCode::InvalidParams);
    EXPECT_EQ(code_of([] { DenjoyParams(2, NAN).validate(); }), ErrorCode::InvalidParams);
}

TEST(Omega, IsolatedGeneratorContainsItself) {
    const auto s = Space::uniform(5);
    const Family fam(s, {{"g", CellSet{0, 1}}, {"h", CellSet{3, 4}}});
    EXPECT_EQ(omega_a(s, fam, CellSet{0, 1}, 2.0), (CellSet{0, 1}));
    EXPECT_EQ(code_of([&] { omega_a(s, fam, CellSet{}, 2.0); }), ErrorCode::EmptySet);
}

TEST(Omega, DyadicQuarterMatchesEnumeration) {
    const auto m = models::dyadic_cubes(1, 4);
    const CellSet quarter = IndexSet::range(0, 4);  // [0, 1/4)
    const auto lib = omega_a(m.space, m.family, quarter, 2.0);
    EXPECT_EQ(lib, to_cells(oracle::omega(m.space, m.family, quarter, 2.0)));
    EXPECT_EQ(lib, IndexSet::range(0, 8));  // [0, 1/2)
}

TEST(Omega, MonotoneUnderInclusion) {
    Rng rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = suite::random_model(rng, 4 + rng.below(10), 2 + rng.below(8));
        std::vector<Index> a, b;
        for (Index c = 0; c < m.space.size(); ++c) {
            const bool in_a = rng.coin(0.3);
            if (in_a) a.push_back(c);
            if (in_a || rng.coin(0.3)) b.push_back(c);
        }
        if (a.empty()) continue;
        const double ratio = 2.0;
        const auto oa = oracle::omega(m.space, m.family, CellSet(a), ratio);
        const auto ob = oracle::omega(m.space, m.family, CellSet(b), ratio);
        for (Index c : oa) EXPECT_TRUE(ob.count(c));
        EXPECT_EQ(omega_a(m.space, m.family, CellSet(a), ratio), to_cells(oa));
    }
}

TEST(Double, IsolatedGeneratorIsItsOwn) {
    const auto s = Space::uniform(4);
    const Family fam(s, {{"g", CellSet{0, 1}}, {"h", CellSet{2, 3}}});
    EXPECT_EQ(find_double(fam, 0, {2, 6}), Index{0});
    EXPECT_EQ(find_double(fam, std::string("h"), {2, 6}), std::string("h"));
}

TEST(Double, MatchesBruteForceOnRandomFamilies) {
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = suite::random_model(rng, 3 + rng.below(10), 2 + rng.below(8), 0.4);
        for (Index g = 0; g < m.family.size(); ++g)
            EXPECT_EQ(find_double(m.family, g, {2, 6}), oracle::double_of(m.space, m.family, g, 2, 6));
    }
}

// Strip [c, d] of width w: Omega_2 reaches 2w - 1 columns to each side.
TEST(Double, StripsFiveDilate) {
    const auto m = models::vertical_strips(16);
    const int cols = 16;
    for (int c = 0; c < cols; ++c)
        for (int d = c; d < cols; ++d) {
            const int w = d - c + 1;
            const int lo = std::max(c - 2 * w + 1, 0), hi = std::min(d + 2 * w - 1, cols - 1);
            const auto g = m.family.index_of("R" + std::to_string(c) + "." + std::to_string(d));
            const auto dbl = find_double(m.family, g, {2, 5});
            ASSERT_TRUE(dbl);
            EXPECT_EQ(m.family.id(*dbl), "R" + std::to_string(lo) + "." + std::to_string(hi));
            EXPECT_LE(m.family.measure(*dbl), 5 * m.family.measure(g) * (1 + 1e-12));
        }
}

TEST(Double, AxisRectanglesAwayFromBoundary) {
    const double a = 2.25, b = 16;
    const auto m = models::axis_rectangles(2, 8, 3);
    int interior = 0;
    for (Index g = 0; g < m.family.size(); ++g) {
        const auto lib = find_double(m.family, g, {a, b});
        EXPECT_EQ(lib, oracle::double_of(m.space, m.family, g, a, b)) << m.family.id(g);
        if (m.family.cells(g).size() != 1) continue;
        const Index c = m.family.cells(g).front();
        const Index x = c % 8, y = c / 8;
        if (x < 1 || x > 5 || y < 1 || y > 5) continue;
        // The 4x4 square at (x - 1, y - 1) fits, so a double exists.
        ++interior;
        ASSERT_TRUE(lib) << m.family.id(g);
        EXPECT_LE(m.family.measure(*lib), b * m.family.measure(g) * (1 + 1e-12));
    }
    EXPECT_EQ(interior, 25);
}

TEST(Audit, DyadicPassesEverything) {
    const auto m = models::log_singularity(8);
    DenjoyParams p(2, 6);
    p.eps_shrink = std::ldexp(1.0, -8);
    const auto r = denjoy_audit(m.space, m.family, p, &m.function("log_sing"));
    EXPECT_TRUE(r.shrinking_ok);
    EXPECT_TRUE(r.doubling_ok);
    EXPECT_TRUE(r.growth_ok);
    EXPECT_TRUE(r.weak_diff_ok);
    EXPECT_TRUE(r.overall);
    // Every double is the parent, or the root itself.
    for (Index g = 0; g < m.family.size(); ++g) {
        ASSERT_TRUE(r.doubles[g]);
        const double ratio = m.family.measure(*r.doubles[g]) / m.family.measure(g);
        EXPECT_TRUE(ratio == 2.0 || (g == 0 && ratio == 1.0)) << m.family.id(g);
    }
}

TEST(Audit, StripsFailWeakDifferentiationOnLowRows) {
    const int rows = 32;
    const auto m = models::vertical_strips(rows, 8);
    const auto r = denjoy_audit(m.space, m.family, {2, 5}, &m.function("sqrt_sing"));
    EXPECT_TRUE(r.shrinking_ok);
    EXPECT_TRUE(r.doubling_ok);
    EXPECT_TRUE(r.growth_ok);
    EXPECT_FALSE(r.weak_diff_ok);
    EXPECT_FALSE(r.overall);
    for (Index c = 0; c < m.space.size(); ++c)
        EXPECT_EQ(r.weak_diff_failures.contains(c), static_cast<int>(c % rows) < rows / 4) << c;
    EXPECT_LE(r.effective_b, 5.0);
}

TEST(Audit, GiantGeneratorHasNoDouble) {
    const auto s = Space::with_weights({1, 1, 1, 1, 100});
    const Family fam(s, {{"a", CellSet{0}}, {"b", CellSet{1}}, {"c", CellSet{2}}, {"d", CellSet{3}},
                         {"ab", CellSet{0, 1}}, {"cd", CellSet{2, 3}}, {"all", CellSet{0, 1, 2, 3}},
                         {"giant", CellSet{3, 4}}});
    const auto r = denjoy_audit(s, fam, {2, 6});
    EXPECT_FALSE(r.doubling_ok);
    EXPECT_EQ(r.doubling_failures, (std::vector<Index>{7}));
    // Omega_a(giant) is every cell and no generator contains it.
    EXPECT_FALSE(r.doubles[7]);
}

TEST(LocalAudit, EngulfedByBase) {
    const auto m = models::dyadic_cubes(1, 5);
    const auto r = local_denjoy_audit(m.space, m.family, m.family.index_of("I1.0"), {2, 6});
    EXPECT_TRUE(r.engulfing_ok);
    EXPECT_TRUE(r.overall);
    EXPECT_FALSE(r.degenerate);
}

TEST(LocalAudit, CycleBalls) {
    // |B(x, 2r)| <= 3 |B(x, r)| for counting measure (r = 0 to 1 is the worst step).
    const double A = 3;
    const auto m = cycle_balls(256);
    const auto g0 = m.family.index_of("B128.64");
    const auto r = local_denjoy_audit(m.space, m.family, g0, {A, std::pow(A, 4)});
    EXPECT_TRUE(r.shrinking_ok);
    EXPECT_TRUE(r.doubling_ok);
    EXPECT_TRUE(r.growth_ok);
    EXPECT_TRUE(r.engulfing_ok);
    EXPECT_FALSE(r.degenerate);
    EXPECT_GT(r.subfamily_size, 256u);
}

TEST(LocalAudit, DegenerateWhenNothingSmall) {
    const auto s = Space::uniform(2);
    const Family fam(s, {{"g", CellSet{0, 1}}});
    const auto r = local_denjoy_audit(s, fam, 0, {2, 6});
    EXPECT_TRUE(r.degenerate);
    EXPECT_TRUE(r.doubling_ok);
}

TEST(Pick, SingletonWhoseDoubleExits) {
    const auto m = models::dyadic_cubes(1, 3);
    const Index g = m.family.index_of("I2.1");
    const std::vector<Index> active{g};
    EXPECT_EQ(maximal_pick(m.family, active, std::nullopt, {2, 6}), g);
}

TEST(Pick, DyadicQuarter) {
    const auto m = models::dyadic_cubes(1, 4);
    const CellSet quarter = IndexSet::range(0, 4);
    std::vector<Index> active;
    for (Index g = 0; g < m.family.size(); ++g) {
        const int level = std::stoi(m.family.id(g).substr(1));
        if (level >= 2 && oracle::meets(m.family.cells(g), quarter)) active.push_back(g);
    }
    const Index pick = maximal_pick(m.family, active, std::nullopt, {2, 6});
    EXPECT_EQ(m.family.id(pick), "I2.0");
    const auto dbl = find_double(m.family, pick, {2, 6});
    ASSERT_TRUE(dbl);
    EXPECT_LE(std::stoi(m.family.id(*dbl).substr(1)), 1);
}

TEST(Pick, ClosedUnderDoublesFails) {
    // An isolated generator is its own double, so the chain never leaves.
    const auto s = Space::uniform(3);
    const Family fam(s, {{"g", CellSet{0, 1}}, {"h", CellSet{2}}});
    const std::vector<Index> active{0};
    EXPECT_EQ(code_of([&] { maximal_pick(fam, active, std::nullopt, {2, 6}); }), ErrorCode::NoMaximalPick);
    EXPECT_EQ(code_of([&] { maximal_pick(fam, std::vector<Index>{}, std::nullopt, {2, 6}); }), ErrorCode::EmptySet);
    // d too large for every member.
    EXPECT_EQ(code_of([&] { maximal_pick(fam, std::vector<Index>{1}, 10.0, {2, 6}); }), ErrorCode::NoMaximalPick);
}

TEST(Constants, Formulas) {
    const auto c = jn_constants({2, 5});
    EXPECT_DOUBLE_EQ(c.k, 17.5);
    EXPECT_DOUBLE_EQ(c.K, 150.0);
    EXPECT_NEAR(c.c2, 1.0 / (5250.0 * std::numbers::e), 1e-18);
    EXPECT_DOUBLE_EQ(c.c1, std::sqrt(std::numbers::e));
    const auto d = jn_constants({2, 6});
    EXPECT_DOUBLE_EQ(d.k, 24.0);
    EXPECT_DOUBLE_EQ(d.K, 252.0);
    const auto e = jn_constants({3, 3});
    EXPECT_DOUBLE_EQ(e.k, 6.0);
    EXPECT_DOUBLE_EQ(e.K, 36.0);
}

TEST(Cz, ConstantFunctionSelectsNothing) {
    const auto m = models::dyadic_cubes(1, 4);
    CzOptions opt;
    opt.norm_tolerance = 2.0;
    const auto r = cz_decompose(m.space, CellFn::constant(m.space.size(), 3.0), 0, m.family, {2, 6}, 2.0, opt);
    EXPECT_TRUE(r.selected.empty());
    EXPECT_EQ(r.a1_size, 0u);
    EXPECT_TRUE(r.ok());
    EXPECT_DOUBLE_EQ(r.margin_i, r.k * 2.0);
    EXPECT_DOUBLE_EQ(r.margin_ii, r.k * 2.0);
}

TEST(Cz, HighAlphaEmptiesLevelSet) {
    const auto lm = normalized_log(8);
    const auto r = cz_decompose(lm.m.space, lm.f, 0, lm.m.family, {2, 6}, 1000.0);
    EXPECT_EQ(r.a1_size, 0u);
    EXPECT_TRUE(r.selected.empty());
    EXPECT_TRUE(r.ok());
    // Nothing is covered, so (i) is the pointwise bound on all of G0.
    EXPECT_EQ(r.uncovered_good_set, lm.m.family.cells(0));
}

TEST(Cz, LogModelBoundsExhaustive) {
    const auto lm = normalized_log(10);
    const auto& sp = lm.m.space;
    const auto& fam = lm.m.family;
    const auto v = oracle::values(lm.f);
    const long double f0 = oracle::mean(sp, v, fam.cells(0));
    const auto r = cz_decompose(sp, lm.f, 0, fam, {2, 6}, 2.0);
    ASSERT_TRUE(r.ok());
    EXPECT_GT(r.a1_size, 0u);
    EXPECT_FALSE(r.selected.empty());
    EXPECT_TRUE(r.covers_level_set);
    // Recompute A_1 and the bounds by brute force.
    std::size_t a1 = 0;
    for (Index g = 0; g < fam.size(); ++g) {
        if (!(oracle::measure(sp, fam.cells(g)) < (2.0 / 6.0) * oracle::measure(sp, fam.cells(0)))) continue;
        long double h = 0;
        for (Index c : fam.cells(g)) h += sp.weight(c) * std::fabs(v[c] - f0);
        if (h / oracle::measure(sp, fam.cells(g)) > 2.0) ++a1;
    }
    EXPECT_EQ(a1, r.a1_size);
    std::vector<char> covered(sp.size(), 0);
    long double total = 0;
    for (const auto& s : r.selected) {
        for (Index c : fam.cells(s.dbl)) covered[c] = 1;
        total += oracle::measure(sp, fam.cells(s.dbl));
        EXPECT_LE(std::fabs(oracle::mean(sp, v, fam.cells(s.dbl)) - f0), 8 * 2.0);
    }
    for (Index c = 0; c < sp.size(); ++c) {
        if (!covered[c]) {
            EXPECT_LE(std::fabs(v[c] - f0), 8 * 2.0);
        }
    }
    EXPECT_LE(total, (252.0 / 2.0) * 1.0);
}

TEST(Cz, Preconditions) {
    const auto lm = normalized_log(6);
    const auto& raw = lm.m.function("log_sing");
    EXPECT_EQ(code_of([&] { cz_decompose(lm.m.space, raw.scaled(3.0), 0, lm.m.family, {2, 6}, 2.0); }),
              ErrorCode::NotNormalized);
    EXPECT_EQ(code_of([&] { cz_decompose(lm.m.space, lm.f, 0, lm.m.family, {2, 6}, 1.0); }), ErrorCode::AlphaTooSmall);
    // A generator without a double inside A_0.
    const auto s = Space::with_weights({1, 1, 1, 1, 100});
    const Family fam(s, {{"all", CellSet{0, 1, 2, 3, 4}}, {"x", CellSet{0}}, {"y", CellSet{1}}, {"xy", CellSet{0, 1}},
                         {"long", CellSet{1, 2, 3}}, {"big", CellSet{3, 4}}});
    const CellFn f({0, 0, 0, 0, 0});
    CzOptions opt;
    opt.norm_tolerance = 2;
    // "long" lies in A_0 of "big" and Omega_2(long) = {0, 1, 2, 3} is in no generator.
    EXPECT_EQ(code_of([&] { cz_decompose(s, f, 5, fam, {2, 2}, 2.0, opt); }), ErrorCode::MissingDouble);
}

TEST(Cz, TamperedKFailsBoundI) {
    const auto lm = normalized_log(10);
    CzOptions opt;
    opt.k_override = 0.01;
    const auto r = cz_decompose(lm.m.space, lm.f, 0, lm.m.family, {2, 6}, 2.0, opt);
    EXPECT_FALSE(r.ok());
    EXPECT_LT(std::min(r.margin_i, r.margin_ii), 0.0);
}

TEST(Iterated, LogModel) {
    const auto lm = normalized_log(10);
    const double alpha = 252.0 * std::numbers::e;
    const auto rep = iterated_cz_check(lm.m.space, lm.f, 0, lm.m.family, {2, 6}, alpha, 3);
    ASSERT_EQ(rep.levels.size(), 3u);
    EXPECT_TRUE(rep.ok());
    for (const auto& l : rep.levels) {
        EXPECT_LE(l.level_measure, l.bound);
        EXPECT_NEAR(l.bound, std::pow(252.0 / alpha, static_cast<double>(l.n)), 1e-15);
    }
    EXPECT_EQ(code_of([&] { iterated_cz_check(lm.m.space, lm.f, 0, lm.m.family, {2, 6}, 100.0, 2); }),
              ErrorCode::AlphaTooSmall);
}

TEST(Iterated, FarLevelsAreEmpty) {
    const auto lm = normalized_log(8);
    const double alpha = 300.0;
    const auto rep = iterated_cz_check(lm.m.space, lm.f, 0, lm.m.family, {2, 6}, alpha, 2);
    for (const auto& l : rep.levels) EXPECT_EQ(l.level_measure, 0.0);
}

TEST(Jn, ConstantPlusSpike) {
    const auto m = models::dyadic_cubes(1, 6);
    std::vector<double> v(m.space.size(), 2.0);
    v[17] = 50.0;
    const auto r = jn_verify(m.space, CellFn(v), m.family, {2, 6});
    EXPECT_TRUE(r.ok);
    EXPECT_GT(r.check.points, 0u);
    EXPECT_GT(r.constants.c1, 1.0);  // t = 0 is always fine
}

TEST(Jn, LogModelAllDepths) {
    for (int depth = 6; depth <= 10; ++depth) {
        const auto m = models::log_singularity(depth);
        EXPECT_TRUE(jn_verify(m.space, m.function("log_sing"), m.family, {2, 6}).ok) << depth;
    }
}

TEST(Jn, RowsKeptOnRequest) {
    const auto m = models::log_singularity(4);
    const auto r = jn_verify(m.space, m.function("log_sing"), m.family, {2, 6}, true);
    EXPECT_EQ(r.check.rows.size(), r.check.points);
    for (const auto& row : r.check.rows) EXPECT_GT(row.t, 0.0);
}

TEST(FineCover, LargeEpsIsPlainCover) {
    const auto m = models::dyadic_cubes(1, 3);
    const auto r = fine_cover_check(m.space, m.family, 2.0, m.space.all_cells());
    const auto plain = structure::essential_subcover_check(m.space, m.family, m.space.all_cells());
    EXPECT_EQ(r.covered, plain.covered);
    EXPECT_EQ(r.subcover, plain.subcover);
}

TEST(FineCover, StripsAboveResolution) {
    const auto m = models::vertical_strips(16, 16);
    for (double eps : {1.0, 0.5, 0.1, 1.01 / 16})
        EXPECT_TRUE(fine_cover_check(m.space, m.family, eps, m.space.all_cells()).covered) << eps;
}

TEST(FineCover, NotjnpFloorOnSpikes) {
    const auto m = models::notjnp_instance(3);
    const auto spikes = models::notjnp_spikes(m);
    const double floor = m.family.measure(m.family.index_of("H"));
    EXPECT_FALSE(fine_cover_check(m.space, m.family, floor, spikes).covered);
    EXPECT_TRUE(fine_cover_check(m.space, m.family, floor * 1.01, spikes).covered);
}

TEST(Maximal, IndicatorOfCell) {
    const auto s = Space::uniform(4);
    const Family fam(s, {{"one", CellSet{2}}, {"all", s.all_cells()}});
    const auto mf = maximal_function(s, indicator(4, CellSet{2}), fam);
    EXPECT_EQ(mf[2], 1.0);
    EXPECT_EQ(mf[0], 0.25);
}

TEST(WeakL1, RandomFunctionsOnDyadic) {
    const auto m = models::dyadic_cubes(1, 6);
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const auto f = suite::random_function(rng, m.space.size(), 10.0);
        double max_mf = 0;
        for (double x : maximal_function(m.space, f, m.family).values()) max_mf = std::max(max_mf, x);
        const std::vector<double> grid{0.1, 0.5, 1, 2, 5, max_mf + 1};
        const auto r = weak_l1_check(m.space, f, m.family, 6.0, grid);
        EXPECT_TRUE(r.ok);
        EXPECT_EQ(r.rows.back().level_measure, 0.0);
    }
}
