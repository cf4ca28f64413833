#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "test_support.hpp"

using namespace gftransfer;
using gftransfer::testing::connected_er;
using gftransfer::testing::error_code_of;
using gftransfer::testing::max_abs;

namespace {

Graph path2() {
    Eigen::MatrixXd w(2, 2);
    w << 0, 1, 1, 0;
    return build_graph(w, iota_ids(2));
}

Graph complete(Index n) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Ones(n, n);
    w.diagonal().setZero();
    return build_graph(w, iota_ids(n));
}

std::set<std::pair<Index, Index>> edge_set(const Graph& g) {
    const auto e = g.edges();
    return {e.begin(), e.end()};
}

}  // namespace

TEST(Graph, LaplacianOfSingleEdge) {
    Eigen::MatrixXd expected(2, 2);
    expected << 1, -1, -1, 1;
    EXPECT_EQ(path2().laplacian(), expected);
}

TEST(Graph, ConstructorRejectsInvalidWeights) {
    Eigen::MatrixXd asym(2, 2);
    asym << 0, 1, 2, 0;
    EXPECT_EQ(error_code_of([&] { build_graph(asym, iota_ids(2)); }), ErrorCode::AsymmetricWeights);

    Eigen::MatrixXd loop = Eigen::MatrixXd::Zero(2, 2);
    loop(0, 0) = 1.0;
    EXPECT_EQ(error_code_of([&] { build_graph(loop, iota_ids(2)); }), ErrorCode::NonzeroDiagonal);

    Eigen::MatrixXd neg(2, 2);
    neg << 0, -1, -1, 0;
    EXPECT_EQ(error_code_of([&] { build_graph(neg, iota_ids(2)); }), ErrorCode::NegativeWeight);

    EXPECT_EQ(error_code_of([&] { build_graph(Eigen::MatrixXd::Zero(2, 2), {4, 4}); }), ErrorCode::DuplicateNodeId);
    EXPECT_EQ(error_code_of([&] { build_graph(Eigen::MatrixXd::Zero(2, 3), iota_ids(2)); }),
              ErrorCode::DimensionMismatch);
}

TEST(Graph, CycleLaplacianRowsSumToZero) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(4, 4);
    for (Index i = 0; i < 4; ++i) w(i, (i + 1) % 4) = w((i + 1) % 4, i) = 1.0;
    const Eigen::VectorXd sums = build_graph(w, iota_ids(4)).laplacian().rowwise().sum();
    EXPECT_EQ(sums, Eigen::VectorXd::Zero(4));
}

TEST(Spectral, AnalyticSpectra) {
    const SpectralBasis k2 = spectral_decompose(path2());
    EXPECT_NEAR(k2.eigenvalues(0), 0.0, 1e-12);
    EXPECT_NEAR(k2.eigenvalues(1), 2.0, 1e-12);

    const SpectralBasis k4 = spectral_decompose(complete(4));
    EXPECT_EQ(k4.eigenvalues(0), 0.0);
    for (Index i = 1; i < 4; ++i) EXPECT_NEAR(k4.eigenvalues(i), 4.0, 1e-12);
}

TEST(Spectral, BasisInvariantsOnRandomGraphs) {
    Rng rng(3);
    for (int rep = 0; rep < 10; ++rep) {
        const Graph g = gen_er(10 + rep, 0.4, 1.0, 3.0, rng);
        const SpectralBasis b = spectral_decompose(g);
        const Eigen::MatrixXd& u = b.eigenvectors;
        const Eigen::MatrixXd lap = g.laplacian();
        EXPECT_LT(max_abs(u.transpose() * u - Eigen::MatrixXd::Identity(g.size(), g.size())), 1e-9);
        EXPECT_LT(max_abs(u * b.eigenvalues.asDiagonal() * u.transpose() - lap), 1e-8 * max_abs(lap));
        for (Index i = 1; i < b.size(); ++i) EXPECT_LE(b.eigenvalues(i - 1), b.eigenvalues(i));
        EXPECT_GE(b.eigenvalues(0), 0.0);
        for (Index c = 0; c < b.size(); ++c) {
            Index r = 0;
            while (std::abs(u(r, c)) <= 1e-9) ++r;
            EXPECT_GT(u(r, c), 0.0) << "column " << c;
        }
    }
}

TEST(Spectral, DeterministicBitwise) {
    Rng rng(5);
    const Graph g = gen_er(30, 0.2, 1.0, 3.0, rng);
    const SpectralBasis a = spectral_decompose(g);
    const SpectralBasis b = spectral_decompose(g);
    EXPECT_EQ(a.eigenvalues, b.eigenvalues);
    EXPECT_EQ(a.eigenvectors, b.eigenvectors);
}

TEST(Spectral, ConnectedGraphHasConstantNullVector) {
    Rng rng(8);
    const Graph g = connected_er(25, 0.3, rng);
    const SpectralBasis b = spectral_decompose(g);
    EXPECT_EQ(b.eigenvalues(0), 0.0);
    const Eigen::VectorXd expected = Eigen::VectorXd::Constant(25, 1.0 / std::sqrt(25.0));
    EXPECT_LT((b.eigenvectors.col(0) - expected).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Gft, OneHotZeroAndParseval) {
    Rng rng(2);
    const Graph g = gen_er(10, 0.5, 1.0, 3.0, rng);
    const SpectralBasis b = spectral_decompose(g);
    const Eigen::VectorXd x0 = b.eigenvectors.col(0);
    Eigen::VectorXd e0 = Eigen::VectorXd::Zero(10);
    e0(0) = 1.0;
    EXPECT_LT((gft(b, x0) - e0).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(gft(b, Eigen::VectorXd(Eigen::VectorXd::Zero(10))), Eigen::VectorXd::Zero(10));

    const Eigen::VectorXd x = gftransfer::testing::gaussian_matrix(10, 1, rng).col(0);
    EXPECT_NEAR(gft(b, x).norm(), x.norm(), 1e-9);
    EXPECT_LT((igft(b, gft(b, x)) - x).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(error_code_of([&] { gft(b, Eigen::VectorXd(Eigen::VectorXd::Zero(3))); }), ErrorCode::DimensionMismatch);
}

TEST(GenEr, EdgeCountMatchesBinomialMean) {
    // 20 graphs of 4950 pairs each; the mean edge count has sd 25.1 / sqrt(20).
    const double mean = 0.15 * 4950.0;
    const double sd = std::sqrt(4950.0 * 0.15 * 0.85);
    double total = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        Rng rng(100 + s);
        const Graph g = gen_er(100, 0.15, 1.0, 3.0, rng);
        const double count = static_cast<double>(g.edge_count());
        EXPECT_LT(std::abs(count - mean), 4.0 * sd);
        for (auto [i, j] : g.edges()) {
            EXPECT_GE(g.weights()(i, j), 1.0);
            EXPECT_LE(g.weights()(i, j), 3.0);
        }
        total += count;
    }
    EXPECT_LT(std::abs(total / 20.0 - mean), 3.0 * sd / std::sqrt(20.0));
}

TEST(GenEr, ExtremeProbabilities) {
    Rng rng(1);
    EXPECT_EQ(gen_er(20, 0.0, 1.0, 3.0, rng).edge_count(), 0u);
    const Graph full = gen_er(20, 1.0, 1.0, 3.0, rng);
    EXPECT_EQ(full.edge_count(), 190u);
    for (auto [i, j] : full.edges()) {
        EXPECT_GE(full.weights()(i, j), 1.0);
        EXPECT_LE(full.weights()(i, j), 3.0);
    }
    EXPECT_EQ(error_code_of([&] { gen_er(5, 1.5, 1.0, 3.0, rng); }), ErrorCode::InvalidProbability);
}

TEST(GenRs, DegreeAndWeightBounds) {
    for (std::uint64_t s = 0; s < 5; ++s) {
        Rng rng(40 + s);
        const Graph g = gen_rs(100, 8, MeanEdgeLength{}, rng);
        ASSERT_TRUE(g.has_positions());
        for (Index i = 0; i < g.size(); ++i) EXPECT_GE(g.degree(i), 8);
        for (auto [i, j] : g.edges()) {
            EXPECT_GT(g.weights()(i, j), 0.0);
            EXPECT_LE(g.weights()(i, j), 1.0);
        }
        for (const Point2& p : *g.positions()) {
            EXPECT_GE(p.x, 0.0);
            EXPECT_LE(p.x, 1.0);
            EXPECT_GE(p.y, 0.0);
            EXPECT_LE(p.y, 1.0);
        }
    }
}

TEST(GenRs, KernelWeightAtZeroDistanceIsOne) {
    Rng rng(0);
    const std::optional<std::vector<Point2>> pos = std::vector<Point2>{{0.3, 0.4}, {0.3, 0.4}};
    EXPECT_EQ(detail::draw_weight(DistanceKernelWeights{0.2}, pos, 0, 1, rng), 1.0);
}

TEST(GenRs, FixedBandwidthWeights) {
    Rng rng(9);
    const Graph g = gen_rs(30, 4, FixedBandwidth{0.5}, rng);
    const auto& pos = *g.positions();
    for (auto [i, j] : g.edges())
        EXPECT_DOUBLE_EQ(g.weights()(i, j),
                         std::exp(-distance(pos[static_cast<std::size_t>(i)], pos[static_cast<std::size_t>(j)]) / 0.5));
}

TEST(PerturbEdges, ZeroChangesIsIdentity) {
    Rng rng(4);
    const Graph g = gen_er(40, 0.2, 1.0, 3.0, rng);
    EXPECT_TRUE(perturb_edges(g, 0, UniformWeights{}, rng) == g);
}

TEST(PerturbEdges, SwapsExactlyEEdges) {
    Rng rng(6);
    const Graph g = gen_er(100, 0.15, 1.0, 3.0, rng);
    for (std::size_t e : {1u, 10u, 30u}) {
        const Graph c = perturb_edges(g, e, UniformWeights{1.0, 3.0}, rng);
        EXPECT_EQ(c.node_ids(), g.node_ids());
        EXPECT_EQ(c.edge_count(), g.edge_count());
        const auto before = edge_set(g);
        const auto after = edge_set(c);
        std::vector<std::pair<Index, Index>> gone, fresh;
        std::set_difference(before.begin(), before.end(), after.begin(), after.end(), std::back_inserter(gone));
        std::set_difference(after.begin(), after.end(), before.begin(), before.end(), std::back_inserter(fresh));
        EXPECT_EQ(gone.size(), e);
        EXPECT_EQ(fresh.size(), e);
        for (auto [i, j] : before)
            if (after.count({i, j})) EXPECT_EQ(c.weights()(i, j), g.weights()(i, j));
    }
}

TEST(PerturbEdges, Errors) {
    Rng rng(6);
    const Graph sparse = gen_er(6, 0.0, 1.0, 3.0, rng);
    EXPECT_EQ(error_code_of([&] { perturb_edges(sparse, 1, UniformWeights{}, rng); }), ErrorCode::TooManyRemovals);
    EXPECT_EQ(error_code_of([&] { perturb_edges(complete(5), 1, UniformWeights{}, rng); }), ErrorCode::NoRoomToAdd);
}

TEST(PerturbNodes, ZeroChangesIsIdentity) {
    Rng rng(12);
    const Graph g = gen_rs(30, 5, MeanEdgeLength{}, rng);
    const NodePerturbation np = perturb_nodes(g, 0, 0.15, DistanceKernelWeights{0.2}, rng);
    EXPECT_TRUE(np.graph == g);
    EXPECT_TRUE(np.mapping.removed.empty());
    EXPECT_TRUE(np.mapping.added.empty());
    EXPECT_TRUE(np.mapping.is_identity());
}

TEST(PerturbNodes, MappingPartitionsBothNodeSets) {
    Rng rng(13);
    const Graph g = gen_er(50, 0.2, 1.0, 3.0, rng);
    const NodePerturbation np = perturb_nodes(g, 7, 0.15, UniformWeights{1.0, 3.0}, rng);
    EXPECT_EQ(np.graph.size(), g.size());
    EXPECT_EQ(np.mapping.removed.size(), 7u);
    EXPECT_EQ(np.mapping.added.size(), 7u);
    EXPECT_NO_THROW(np.mapping.validate(g, np.graph));
    for (std::size_t i = 0; i < np.mapping.kept.size(); ++i)
        for (std::size_t j = 0; j < np.mapping.kept.size(); ++j)
            EXPECT_EQ(np.graph.weights()(np.mapping.kept_rows_curr[i], np.mapping.kept_rows_curr[j]),
                      g.weights()(np.mapping.kept_rows_hist[i], np.mapping.kept_rows_hist[j]));
    NodeMapping broken = np.mapping;
    broken.added.pop_back();
    EXPECT_EQ(error_code_of([&] { broken.validate(g, np.graph); }), ErrorCode::MappingMismatch);
}

TEST(PerturbNodes, AddedDegreeIsBinomial) {
    // 60 graphs x 10 added nodes; degree ~ Binomial(90, 0.15): mean 13.5, variance 11.475.
    std::vector<double> degrees;
    for (std::uint64_t s = 0; s < 60; ++s) {
        Rng rng(500 + s);
        const Graph g = gen_er(100, 0.15, 1.0, 3.0, rng);
        const NodePerturbation np = perturb_nodes(g, 10, 0.15, UniformWeights{1.0, 3.0}, rng);
        for (Index a = 90; a < 100; ++a) degrees.push_back(static_cast<double>(np.graph.degree(a)));
    }
    const double n = static_cast<double>(degrees.size());
    double mean = 0.0;
    for (double d : degrees) mean += d;
    mean /= n;
    double var = 0.0;
    for (double d : degrees) var += (d - mean) * (d - mean);
    var /= n - 1.0;
    EXPECT_LT(std::abs(mean - 13.5), 3.0 * std::sqrt(11.475 / n));
    EXPECT_NEAR(var, 11.475, 0.2 * 11.475);
}

TEST(PerturbNodes, SensorGraphKeepsPositions) {
    Rng rng(21);
    const Graph g = gen_rs(40, 6, MeanEdgeLength{}, rng);
    const NodePerturbation np = perturb_nodes(g, 5, 0.15, DistanceKernelWeights{mean_edge_length(g)}, rng);
    ASSERT_TRUE(np.graph.has_positions());
    for (std::size_t i = 0; i < np.mapping.kept.size(); ++i) {
        const Point2& a = (*g.positions())[static_cast<std::size_t>(np.mapping.kept_rows_hist[i])];
        const Point2& b = (*np.graph.positions())[static_cast<std::size_t>(np.mapping.kept_rows_curr[i])];
        EXPECT_EQ(a.x, b.x);
        EXPECT_EQ(a.y, b.y);
    }
    EXPECT_EQ(error_code_of([&] { perturb_nodes(g, 40, 0.15, UniformWeights{}, rng); }), ErrorCode::TooManyRemovals);
}
