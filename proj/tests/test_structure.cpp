#include <gtest/gtest.h>

#include "bmolab/bmolab.hpp"
#include "oracles.hpp"

using namespace bmolab;
using namespace bmolab::structure;

namespace {

// A = {0,1}, B = {1,2}, C = {2,3}: a path A - B - C.
struct PathModel {
    Space space = Space::uniform(4);
    Family family{space, {{"A", CellSet{0, 1}}, {"B", CellSet{1, 2}}, {"C", CellSet{2, 3}}}};
};

} // namespace

TEST(Graph, DisjointIntervals) {
    const auto s = Space::uniform(4);
    const Family fam(s, {{"L", CellSet{0, 1}}, {"R", CellSet{2, 3}}});
    const auto g = build_graph(fam);
    EXPECT_EQ(g.component_count(), 2u);
    EXPECT_EQ(g.edge_count(), 0u);
}

TEST(Graph, DyadicIsConnected) {
    const auto m = models::dyadic_cubes(1, 4);
    EXPECT_EQ(build_graph(m.family).component_count(), 1u);
    EXPECT_TRUE(has_fcp(m.family).fcp);
}

TEST(Graph, PathAdjacency) {
    PathModel p;
    const auto g = build_graph(p.family);
    EXPECT_EQ(g.edge_count(), 2u);
    EXPECT_TRUE(g.adjacent(0, 1));
    EXPECT_TRUE(g.adjacent(1, 2));
    EXPECT_FALSE(g.adjacent(0, 2));
    EXPECT_EQ(g.neighbors(1), (std::vector<Index>{0, 2}));
}

TEST(Fcp, SingleAndDisjoint) {
    const auto s = Space::uniform(3);
    EXPECT_TRUE(has_fcp(Family(s, {{"g", CellSet{0, 1, 2}}})).fcp);
    const auto r = has_fcp(Family(s, {{"a", CellSet{0}}, {"b", CellSet{1, 2}}}));
    EXPECT_FALSE(r.fcp);
    EXPECT_EQ(r.components.size(), 2u);
}

TEST(Fcp, MatchesUnionFind) {
    Rng rng(77);
    for (int trial = 0; trial < 300; ++trial) {
        const auto m = suite::random_model(rng, 2 + rng.below(12), 1 + rng.below(8), rng.uniform(0.05, 0.5));
        EXPECT_EQ(has_fcp(m.family).fcp, oracle::components(m.family) == 1);
        EXPECT_EQ(build_graph(m.family).component_count(), oracle::components(m.family));
    }
}

TEST(Chain, Reflexive) {
    PathModel p;
    EXPECT_EQ(*finite_chain(p.family, 1, 1), (std::vector<Index>{1}));
}

TEST(Chain, PathThroughMiddle) {
    PathModel p;
    const auto chain = finite_chain(p.family, std::string("A"), std::string("C"));
    ASSERT_TRUE(chain);
    EXPECT_EQ(*chain, (std::vector<std::string>{"A", "B", "C"}));
    EXPECT_EQ(chain_diameter(p.family), 2u);
}

TEST(Chain, DisjointPairHasNone) {
    const auto s = Space::uniform(2);
    const Family fam(s, {{"a", CellSet{0}}, {"b", CellSet{1}}});
    EXPECT_FALSE(finite_chain(fam, 0, 1));
    EXPECT_THROW(finite_chain(fam, 0, 5), Error);
    EXPECT_THROW(finite_chain(fam, std::string("a"), std::string("zz")), Error);
}

TEST(Chain, ConsecutiveMembersIntersect) {
    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = suite::random_model(rng, 4 + rng.below(10), 2 + rng.below(6), 0.2);
        const Index last = static_cast<Index>(m.family.size() - 1);
        const auto chain = finite_chain(m.family, 0, last);
        if (!chain) continue;
        EXPECT_EQ(chain->front(), 0u);
        EXPECT_EQ(chain->back(), last);
        for (std::size_t i = 1; i < chain->size(); ++i)
            EXPECT_TRUE(oracle::meets(m.family.cells((*chain)[i - 1]), m.family.cells((*chain)[i])));
    }
}

TEST(Cover, TargetInsideGenerator) {
    PathModel p;
    const auto r = essential_subcover_check(p.space, p.family, CellSet{1, 2});
    EXPECT_TRUE(r.covered);
    EXPECT_EQ(r.uncovered_mass, 0.0);
    EXPECT_EQ(r.subcover, (std::vector<Index>{0, 1, 2}));
}

TEST(Cover, UncoveredCellMass) {
    const auto s = Space::with_weights({0.2, 0.3, 0.5});
    const Family fam(s, {{"a", CellSet{0, 1}}});
    const auto r = essential_subcover_check(s, fam, s.all_cells());
    EXPECT_FALSE(r.covered);
    EXPECT_DOUBLE_EQ(r.uncovered_mass, 0.5);
    EXPECT_EQ(r.uncovered, (CellSet{2}));
    EXPECT_THROW(essential_subcover_check(s, fam, CellSet{}), Error);
}

TEST(Sigma, WholeAndFlaggedParts) {
    PathModel p;
    EXPECT_TRUE(sigma_decomposability(p.space, p.family, Partition::whole(p.space)).sigma_decomposable);

    const auto s = Space::uniform(4);
    const Family fam(s, {{"a", CellSet{0, 1}}, {"b", CellSet{3}}});
    const Partition parts(s, {CellSet{0, 1}, CellSet{2, 3}});
    const auto r = sigma_decomposability(s, fam, parts);
    EXPECT_FALSE(r.sigma_decomposable);
    EXPECT_EQ(r.failing_parts, (std::vector<std::size_t>{1}));
}

TEST(Sigma, SingletonPartitionMeansFullCover) {
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        const auto m = suite::random_model(rng, 2 + rng.below(10), 1 + rng.below(5), 0.3);
        const bool every_cell = m.family.uncovered_cells().empty();
        EXPECT_EQ(sigma_decomposability(m.space, m.family, Partition::singletons(m.space)).sigma_decomposable,
                  every_cell);
        // Independent of the partition.
        EXPECT_EQ(sigma_decomposability(m.space, m.family, Partition::whole(m.space)).sigma_decomposable, every_cell);
    }
}

TEST(Sigma, InvalidPartitionRejected) {
    const auto s = Space::uniform(3);
    EXPECT_THROW(Partition(s, {CellSet{0, 1}, CellSet{1, 2}}), Error);
    EXPECT_THROW(Partition(s, {CellSet{0, 1}}), Error);
}

TEST(Witness, NoneWhenBanach) {
    PathModel p;
    EXPECT_FALSE(kernel_witness(p.space, p.family));
}

TEST(Witness, DisjointIntervalsGiveIndicatorOfFirst) {
    const auto s = Space::uniform(4);
    const Family fam(s, {{"L", CellSet{0, 1}}, {"R", CellSet{2, 3}}});
    const auto w = kernel_witness(s, fam);
    ASSERT_TRUE(w);
    EXPECT_EQ(*w, CellFn({1, 1, 0, 0}));
    EXPECT_EQ(bmo_seminorm(s, *w, fam).value, 0.0);
}

TEST(Witness, MissingCellGivesItsIndicator) {
    const auto s = Space::uniform(3);
    const Family fam(s, {{"a", CellSet{0, 1}}});
    const auto w = kernel_witness(s, fam);
    ASSERT_TRUE(w);
    EXPECT_EQ(*w, CellFn({0, 0, 1}));
    EXPECT_EQ(bmo_seminorm(s, *w, fam).value, 0.0);
    EXPECT_FALSE(essential_subcover_check(s, fam, CellSet{2}).covered);
}

TEST(Verdict, Models) {
    const auto dy = models::dyadic_cubes(1, 3);
    EXPECT_EQ(banach_verdict(dy.space, dy.family).verdict, Verdict::Banach);
    const auto h = models::hedgehog(5, 6, models::HedgehogVariant::Ex62);
    EXPECT_EQ(banach_verdict(h.space, h.family).verdict, Verdict::Banach);

    const auto s = Space::uniform(4);
    const Family islands(s, {{"L", CellSet{0, 1}}, {"R", CellSet{2, 3}}});
    const auto v = banach_verdict(s, islands);
    EXPECT_EQ(v.verdict, Verdict::NotNorm);
    EXPECT_EQ(v.components, 2u);
    ASSERT_TRUE(v.witness);
    EXPECT_EQ(v.witness_seminorm, 0.0);
}

// Exhaustive over every family of nonempty subsets of three cells with at
// most three members: Banach exactly when a nonconstant zero-seminorm
// indicator does not exist.
TEST(Verdict, ExhaustiveSmallSpace) {
    const auto s = Space::with_weights({0.2, 0.3, 0.5});
    std::vector<CellSet> subsets;
    for (unsigned mask = 1; mask < 8; ++mask) {
        std::vector<Index> cells;
        for (Index c = 0; c < 3; ++c)
            if (mask & (1u << c)) cells.push_back(c);
        subsets.push_back(CellSet(cells));
    }
    auto kernel_has_indicator = [&](const Family& fam) {
        for (unsigned mask = 1; mask < 7; ++mask) {
            std::vector<double> v(3);
            for (Index c = 0; c < 3; ++c) v[c] = (mask >> c) & 1u;
            if (oracle::seminorm(s, v, fam) == 0) return true;
        }
        return false;
    };
    int checked = 0;
    for (std::size_t i = 0; i < subsets.size(); ++i)
        for (std::size_t j = i; j < subsets.size(); ++j)
            for (std::size_t k = j; k < subsets.size(); ++k) {
                std::vector<Generator> gens{{"a", subsets[i]}};
                if (j > i) gens.push_back({"b", subsets[j]});
                if (k > j) gens.push_back({"c", subsets[k]});
                const Family fam(s, gens);
                const auto v = banach_verdict(s, fam);
                EXPECT_EQ(v.verdict == Verdict::NotNorm, kernel_has_indicator(fam));
                ++checked;
            }
    EXPECT_GT(checked, 50);
}
