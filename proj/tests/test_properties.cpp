#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <numeric>

#include "bmolab/bmolab.hpp"
#include "oracles.hpp"

using namespace bmolab;

namespace {

constexpr int kTrials = 200;

double rel(double x, double y) { return std::fabs(x - y) / std::max({1.0, std::fabs(x), std::fabs(y)}); }

// The same model with cell c split into two halves.
suite::RandomModel split_cell(const suite::RandomModel& m, Index c, std::vector<double>& f) {
    std::vector<double> w(m.space.weights().begin(), m.space.weights().end());
    const auto n = static_cast<Index>(w.size());
    w[c] /= 2;
    w.push_back(w[c]);
    f.push_back(f[c]);
    suite::RandomModel out{Space::with_weights(w), {}};
    std::vector<Generator> gens;
    for (const auto& g : m.family.generators()) {
        std::vector<Index> cells = g.cells.vec();
        if (g.cells.contains(c)) cells.push_back(n);
        gens.push_back({g.id, CellSet(cells)});
    }
    out.family = Family(out.space, std::move(gens));
    return out;
}

suite::RandomModel permuted(const suite::RandomModel& m, const std::vector<Index>& perm, std::vector<double>& f) {
    std::vector<double> w(perm.size()), g(perm.size());
    for (Index c = 0; c < perm.size(); ++c) {
        w[perm[c]] = m.space.weight(c);
        g[perm[c]] = f[c];
    }
    f = g;
    suite::RandomModel out{Space::with_weights(w), {}};
    std::vector<Generator> gens;
    for (const auto& gen : m.family.generators()) {
        std::vector<Index> cells;
        for (Index c : gen.cells) cells.push_back(perm[c]);
        gens.push_back({gen.id, CellSet(cells)});
    }
    out.family = Family(out.space, std::move(gens));
    return out;
}

} // namespace

TEST(Properties, HomogeneityAndTranslation) {
    Rng rng(1);
    for (int trial = 0; trial < kTrials; ++trial) {
        const auto m = suite::random_model(rng, 2 + rng.below(20), 1 + rng.below(6));
        const auto f = suite::random_function(rng, m.space.size());
        const double lambda = rng.uniform(-8, 8), k = rng.uniform(-5, 5);
        for (double p : {1.0, 2.0}) {
            const double base = bmo_seminorm(m.space, f, m.family, p).value;
            EXPECT_LE(rel(bmo_seminorm(m.space, f.scaled(lambda), m.family, p).value, std::fabs(lambda) * base), 1e-12);
            EXPECT_LE(rel(bmo_seminorm(m.space, f.shifted(k), m.family, p).value, base), 1e-12);
        }
    }
}

TEST(Properties, TriangleInequality) {
    Rng rng(2);
    for (int trial = 0; trial < kTrials; ++trial) {
        const auto m = suite::random_model(rng, 2 + rng.below(15), 1 + rng.below(6));
        const auto f = suite::random_function(rng, m.space.size());
        const auto g = suite::random_function(rng, m.space.size());
        std::vector<double> sum(m.space.size());
        for (Index c = 0; c < sum.size(); ++c) sum[c] = f[c] + g[c];
        EXPECT_TRUE(approx_le(bmo_seminorm(m.space, CellFn(sum), m.family).value,
                              bmo_seminorm(m.space, f, m.family).value + bmo_seminorm(m.space, g, m.family).value));
    }
}

TEST(Properties, MonotoneInP) {
    Rng rng(3);
    for (int trial = 0; trial < kTrials; ++trial) {
        const auto m = suite::random_model(rng, 2 + rng.below(15), 1 + rng.below(4));
        const auto f = suite::random_function(rng, m.space.size());
        double prev = 0;
        for (double p : {1.0, 1.5, 2.0, 3.0, 5.0}) {
            const double v = bmo_seminorm(m.space, f, m.family, p).value;
            EXPECT_TRUE(approx_le(prev, v));
            prev = v;
        }
    }
}

TEST(Properties, SplittingACellChangesNothing) {
    Rng rng(4);
    for (int trial = 0; trial < kTrials; ++trial) {
        const auto m = suite::random_model(rng, 2 + rng.below(12), 1 + rng.below(6));
        auto v = oracle::values(suite::random_function(rng, m.space.size()));
        const double before = bmo_seminorm(m.space, CellFn(v), m.family).value;
        const bool fcp = structure::has_fcp(m.family).fcp;
        const auto c = static_cast<Index>(rng.below(m.space.size()));
        const auto s = split_cell(m, c, v);
        EXPECT_LE(rel(bmo_seminorm(s.space, CellFn(v), s.family).value, before), 1e-12);
        EXPECT_EQ(structure::has_fcp(s.family).fcp, fcp);
        // The halves share incidence, so they land in one atom.
        EXPECT_EQ(s.family.atom_of(c), s.family.atom_of(static_cast<Index>(s.space.size() - 1)));
        EXPECT_EQ(s.family.atom_count(), m.family.atom_count());
    }
}

TEST(Properties, RelabellingCellsChangesNothing) {
    Rng rng(5);
    for (int trial = 0; trial < kTrials; ++trial) {
        const auto m = suite::random_model(rng, 2 + rng.below(12), 1 + rng.below(6));
        auto v = oracle::values(suite::random_function(rng, m.space.size()));
        const double semi = bmo_seminorm(m.space, CellFn(v), m.family).value;
        const auto verdict = structure::banach_verdict(m.space, m.family).verdict;
        std::vector<Index> perm(m.space.size());
        std::iota(perm.begin(), perm.end(), Index{0});
        for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
        const auto p = permuted(m, perm, v);
        EXPECT_LE(rel(bmo_seminorm(p.space, CellFn(v), p.family).value, semi), 1e-12);
        EXPECT_EQ(structure::banach_verdict(p.space, p.family).verdict, verdict);
        for (Index g = 0; g < m.family.size(); ++g)
            EXPECT_EQ(denjoy::find_double(m.family, g, {2, 6}).has_value(),
                      denjoy::find_double(p.family, g, {2, 6}).has_value());
    }
}

TEST(Properties, DoublesContainTheFattening) {
    Rng rng(6);
    for (int trial = 0; trial < kTrials; ++trial) {
        const auto m = suite::random_model(rng, 2 + rng.below(12), 2 + rng.below(8));
        const double a = rng.uniform(1.1, 3.0), b = a * rng.uniform(1.0, 4.0);
        for (Index g = 0; g < m.family.size(); ++g) {
            const auto d = denjoy::find_double(m.family, g, {a, b});
            if (!d) continue;
            const auto om = denjoy::omega_a(m.space, m.family, m.family.cells(g), a);
            EXPECT_TRUE(om.is_subset_of(m.family.cells(*d)));
            EXPECT_TRUE(m.family.cells(g).is_subset_of(om));
            EXPECT_TRUE(approx_le(m.family.measure(*d), b * m.family.measure(g)));
        }
    }
}

TEST(Properties, ApAtLeastOneAndChainHolds) {
    Rng rng(7);
    for (int trial = 0; trial < kTrials; ++trial) {
        const auto m = suite::random_model(rng, 2 + rng.below(12), 1 + rng.below(6));
        const auto f = suite::random_function(rng, m.space.size(), rng.uniform(0.1, 5.0));
        for (double p : {1.5, 2.0, 4.0})
            EXPECT_GE(weights::ap_constant(m.space, f.map([](double x) { return std::exp(x); }), m.family, p),
                      1.0 - 1e-12);
        EXPECT_TRUE(weights::a2_bracket_check(m.space, f, m.family).ok);
    }
}

TEST(Properties, LayerCake) {
    Rng rng(8);
    for (int trial = 0; trial < kTrials; ++trial) {
        const auto m = suite::random_model(rng, 1 + rng.below(25), 1, 0.8);
        const auto f = suite::random_function(rng, m.space.size());
        const auto& e = m.family.cells(0);
        const auto d = distribution(m.space, f, e);
        for (double p : {1.0, 1.5, 2.0, 3.0}) {
            const double rhs = std::pow(oscillation_p(m.space, f, e, p), p);
            EXPECT_LE(std::fabs(moment_from_distribution(d, p) - rhs), 1e-10 * std::max(rhs, 1e-300));
        }
    }
}

TEST(Properties, CzOnRandomDyadicFunctions) {
    const auto m = models::dyadic_cubes(1, 7);
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        auto raw = suite::random_function(rng, m.space.size(), 5.0);
        const double norm = bmo_seminorm(m.space, raw, m.family).value;
        if (norm == 0) continue;
        const auto f = raw.scaled(1.0 / norm);
        for (double alpha : {1.5, 3.0, 10.0}) {
            const auto r = denjoy::cz_decompose(m.space, f, 0, m.family, {2, 6}, alpha);
            EXPECT_TRUE(r.disjoint_ok);
            EXPECT_TRUE(r.ok()) << trial << " " << alpha;
        }
    }
}

TEST(Properties, ThreadCountDoesNotChangeResults) {
    const auto m = models::log_singularity(10);
    const auto& f = m.function("log_sing");
    auto run = [&] {
        const auto a = denjoy::denjoy_audit(m.space, m.family, {2, 6}, &f);
        const auto fit = weights::jn_empirical_fit(m.space, f, m.family, std::sqrt(std::exp(1.0)));
        return std::make_tuple(bmo_seminorm(m.space, f, m.family, 2.0).value, fit.c2, fit.gen, a.effective_b,
                               a.max_iterations);
    };
    setenv("BMOLAB_THREADS", "1", 1);
    const auto one = run();
    setenv("BMOLAB_THREADS", "4", 1);
    const auto four = run();
    unsetenv("BMOLAB_THREADS");
    EXPECT_EQ(one, four);
}

TEST(Properties, SeedDeterminesRandomModels) {
    Rng a(42), b(42);
    const auto ma = suite::random_model(a, 10, 5), mb = suite::random_model(b, 10, 5);
    for (Index g = 0; g < 5; ++g) EXPECT_EQ(ma.family.cells(g), mb.family.cells(g));
    EXPECT_EQ(a.next(), b.next());
}
