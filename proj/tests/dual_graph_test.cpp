#include <gtest/gtest.h>

#include <numeric>

#include "oracles.hpp"
#include "rdgcn/dual_graph.hpp"
#include "test_util.hpp"

namespace rdgcn {
namespace {

using testing::make_kg;

PrimalGraph single_kg(std::size_t n, std::size_t m, std::vector<RawTriple> triples) {
    return merge_graphs(make_kg(0, n, 0, m, std::move(triples)), make_kg(1000, 0, 1000, 0, {}));
}

TEST(DualGraph, SharedHeadAndTailOverlap) {
    // Relation 0: heads {A, B}, tails {C}. Relation 1: heads {B}, tails {C}.
    const auto g = single_kg(3, 2, {{0, 0, 2}, {1, 0, 2}, {1, 1, 2}});
    const auto dual = build_dual_graph(g);
    EXPECT_DOUBLE_EQ(dual.weight(0, 1), 1.5);
    EXPECT_DOUBLE_EQ(dual.weight(1, 0), 1.5);
    EXPECT_EQ(dual.edge_count(), 1u);
}

TEST(DualGraph, IdenticalSetsWeighTwo) {
    const auto g = single_kg(3, 2, {{0, 0, 1}, {0, 1, 1}});
    EXPECT_DOUBLE_EQ(build_dual_graph(g).weight(0, 1), 2.0);
}

TEST(DualGraph, DisjointRelationsOnlyHaveSelfEdges) {
    const auto g = single_kg(4, 2, {{0, 0, 1}, {2, 1, 3}});
    const auto dual = build_dual_graph(g);
    EXPECT_EQ(dual.edge_count(), 0u);
    EXPECT_DOUBLE_EQ(dual.weight(0, 1), 0.0);
    for (RelationId r = 0; r < 2; ++r) {
        ASSERT_EQ(dual.neighbors(r).size(), 1u);
        EXPECT_EQ(dual.neighbors(r)[0], r);
        EXPECT_DOUBLE_EQ(dual.weight(r, r), 2.0);
    }
    const auto stats = dual_graph_stats(dual);
    EXPECT_EQ(stats.isolated_count, 2u);
    EXPECT_EQ(stats.edge_count, 0u);
}

TEST(DualGraph, HeadOfOneTailOfAnotherIsNotShared) {
    // Entity 1 is a tail of relation 0 and a head of relation 1: no overlap of like sets.
    const auto g = single_kg(3, 2, {{0, 0, 1}, {1, 1, 2}});
    EXPECT_EQ(build_dual_graph(g).edge_count(), 0u);
}

TEST(DualGraph, MatchesBruteForceOnRandomGraphs) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        std::uniform_int_distribution<std::size_t> msize(1, 15);
        const auto g = testing::random_primal_graph(rng, 20, msize(rng), 40);
        const auto dual = build_dual_graph(g);
        const auto expected = oracle::dual_edges(g.triples(), g.relation_count());

        std::size_t stored = 0;
        for (RelationId i = 0; i < static_cast<RelationId>(dual.vertex_count()); ++i) {
            const auto nb = dual.neighbors(i);
            EXPECT_TRUE(std::is_sorted(nb.begin(), nb.end()));
            for (std::size_t k = dual.begin(i); k < dual.end(i); ++k) {
                const auto it = expected.find({i, dual.neighbor(k)});
                ASSERT_NE(it, expected.end());
                EXPECT_NEAR(dual.weight(k), it->second, 1e-12);
                EXPECT_GT(dual.weight(k), 0.0);
                EXPECT_LE(dual.weight(k), 2.0);
                ++stored;
            }
        }
        EXPECT_EQ(stored, expected.size());
    }
}

TEST(DualGraph, WeightsInvariantUnderEntityRelabeling) {
    std::mt19937_64 rng(5);
    auto triples = testing::random_triples(rng, 0, 15, 0, 5, 40);
    const auto g = single_kg(15, 5, triples);
    std::vector<OriginalId> perm(15);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (auto& t : triples) {
        t.head = perm[t.head];
        t.tail = perm[t.tail];
    }
    const auto h = single_kg(15, 5, triples);
    const auto a = build_dual_graph(g);
    const auto b = build_dual_graph(h);
    for (RelationId i = 0; i < 5; ++i)
        for (RelationId j = 0; j < 5; ++j) EXPECT_DOUBLE_EQ(a.weight(i, j), b.weight(i, j));
}

TEST(DualGraph, JaccardEdgeCases) {
    const std::vector<EntityId> a{1, 2, 3}, b{2, 3, 4}, empty;
    EXPECT_DOUBLE_EQ(jaccard(a, b), 0.5);
    EXPECT_DOUBLE_EQ(jaccard(a, a), 1.0);
    EXPECT_DOUBLE_EQ(jaccard(empty, empty), 0.0);
    EXPECT_DOUBLE_EQ(jaccard(a, empty), 0.0);
}

TEST(RelationProxies, SingletonSetsCopyRows) {
    const auto g = single_kg(2, 1, {{0, 0, 1}});
    Matrix<double> x(2, 2);
    x << 1, 2, 3, 4;
    const auto c = relation_proxies(g, x);
    ASSERT_EQ(c.rows(), 1);
    ASSERT_EQ(c.cols(), 4);
    EXPECT_EQ(RowVector<double>(c.row(0)), (RowVector<double>(4) << 1, 2, 3, 4).finished());
}

TEST(RelationProxies, OpposingHeadsCancel) {
    const auto g = single_kg(3, 1, {{0, 0, 2}, {1, 0, 2}});
    Matrix<double> x(3, 2);
    x << 1, -2, -1, 2, 5, 6;
    const auto c = relation_proxies(g, x);
    EXPECT_EQ(c(0, 0), 0.0);
    EXPECT_EQ(c(0, 1), 0.0);
    EXPECT_EQ(c(0, 2), 5.0);
    EXPECT_EQ(c(0, 3), 6.0);
}

TEST(RelationProxies, ThreeRelationHandExample) {
    // r0: 0 -> 1, 2 -> 1      r1: 0 -> 2, 0 -> 3      r2: 3 -> 0
    const auto g = single_kg(4, 3, {{0, 0, 1}, {2, 0, 1}, {0, 1, 2}, {0, 1, 3}, {3, 2, 0}});
    Matrix<double> x(4, 2);
    x << 1, 0, 0, 1, 3, 2, -1, 4;
    const auto c = relation_proxies(g, x);
    Matrix<double> expected(3, 4);
    expected << 2, 1, 0, 1,   //
        1, 0, 1, 3,           //
        -1, 4, 1, 0;
    EXPECT_TRUE(c.isApprox(expected, 1e-15)) << c;
}

TEST(RelationProxies, LinearInEntityRepresentations) {
    std::mt19937_64 rng(2);
    const auto g = testing::random_primal_graph(rng, 10, 3, 20);
    const Matrix<double> x = Matrix<double>::Random(static_cast<Eigen::Index>(g.entity_count()), 3);
    const auto c = relation_proxies(g, x);
    const Matrix<double> c_scaled = relation_proxies<double>(g, -2.5 * x);
    EXPECT_TRUE(c_scaled.isApprox(-2.5 * c, 1e-14));
}

}  // namespace
}  // namespace rdgcn
