#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "gftransfer/error.hpp"
#include "gftransfer/random.hpp"

namespace gftransfer {

using NodeId = std::int64_t;
using Index = Eigen::Index;

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Undirected weighted graph. Immutable once constructed; the constructor
/// enforces symmetry, nonnegativity, a zero diagonal and unique node IDs.
class Graph {
public:
    static constexpr double kSymmetryTol = 1e-12;

    Graph(Eigen::MatrixXd weights, std::vector<NodeId> node_ids,
          std::optional<std::vector<Point2>> positions = std::nullopt)
        : weights_(std::move(weights)), ids_(std::move(node_ids)), positions_(std::move(positions)) {
        const Index n = weights_.rows();
        require(weights_.cols() == n, ErrorCode::DimensionMismatch, "weight matrix is not square");
        require(static_cast<Index>(ids_.size()) == n, ErrorCode::DimensionMismatch,
                "node id count does not match weight matrix");
        if (positions_) {
            require(static_cast<Index>(positions_->size()) == n, ErrorCode::DimensionMismatch,
                    "position count does not match node count");
        }
        for (Index i = 0; i < n; ++i) {
            require(weights_(i, i) == 0.0, ErrorCode::NonzeroDiagonal,
                    "self-loop at row " + std::to_string(i));
            for (Index j = 0; j < n; ++j) {
                const double w = weights_(i, j);
                require(std::isfinite(w), ErrorCode::InvalidArgument, "non-finite weight");
                require(w >= 0.0, ErrorCode::NegativeWeight,
                        "negative weight at (" + std::to_string(i) + "," + std::to_string(j) + ")");
                require(std::abs(w - weights_(j, i)) <= kSymmetryTol, ErrorCode::AsymmetricWeights,
                        "w(" + std::to_string(i) + "," + std::to_string(j) + ") != w(" + std::to_string(j) + "," +
                            std::to_string(i) + ")");
            }
        }
        // Symmetric within tolerance; store exactly symmetric.
        weights_ = (0.5 * (weights_ + weights_.transpose())).eval();
        index_.reserve(ids_.size());
        for (std::size_t i = 0; i < ids_.size(); ++i) {
            const bool fresh = index_.emplace(ids_[i], static_cast<Index>(i)).second;
            require(fresh, ErrorCode::DuplicateNodeId, "duplicate node id " + std::to_string(ids_[i]));
        }
    }

    Index size() const { return weights_.rows(); }
    const Eigen::MatrixXd& weights() const { return weights_; }
    const std::vector<NodeId>& node_ids() const { return ids_; }
    const std::optional<std::vector<Point2>>& positions() const { return positions_; }
    bool has_positions() const { return positions_.has_value(); }

    std::optional<Index> index_of(NodeId id) const {
        auto it = index_.find(id);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    /// L = D - W with d_mm = sum_n w_mn.
    Eigen::MatrixXd laplacian() const {
        Eigen::MatrixXd lap = -weights_;
        lap.diagonal() = weights_.rowwise().sum();
        return lap;
    }

    /// Edges as row-index pairs (i < j), in row-major order.
    std::vector<std::pair<Index, Index>> edges() const {
        std::vector<std::pair<Index, Index>> out;
        for (Index i = 0; i < size(); ++i)
            for (Index j = i + 1; j < size(); ++j)
                if (weights_(i, j) > 0.0) out.emplace_back(i, j);
        return out;
    }

    std::size_t edge_count() const { return edges().size(); }

    Index degree(Index i) const { return (weights_.row(i).array() > 0.0).count(); }

    bool operator==(const Graph& other) const {
        return ids_ == other.ids_ && weights_ == other.weights_ && has_positions() == other.has_positions() &&
               (!positions_ || std::equal(positions_->begin(), positions_->end(), other.positions_->begin(),
                                          [](const Point2& a, const Point2& b) { return a.x == b.x && a.y == b.y; }));
    }

private:
    Eigen::MatrixXd weights_;
    std::vector<NodeId> ids_;
    std::optional<std::vector<Point2>> positions_;
    std::unordered_map<NodeId, Index> index_;
};

inline Graph build_graph(Eigen::MatrixXd weights, std::vector<NodeId> node_ids,
                         std::optional<std::vector<Point2>> positions = std::nullopt) {
    return Graph(std::move(weights), std::move(node_ids), std::move(positions));
}

inline std::vector<NodeId> iota_ids(Index n) {
    std::vector<NodeId> ids(static_cast<std::size_t>(n));
    std::iota(ids.begin(), ids.end(), NodeId{0});
    return ids;
}

/// Weights for edges created by generators and perturbations.
struct UniformWeights {
    double low = 1.0;
    double high = 3.0;
};
/// w = exp(-dist / theta); needs node positions.
struct DistanceKernelWeights {
    double theta = 1.0;
};
using WeightPolicy = std::variant<UniformWeights, DistanceKernelWeights>;

namespace detail {

inline double draw_weight(const WeightPolicy& policy, const std::optional<std::vector<Point2>>& pos, Index i, Index j,
                          Rng& rng) {
    if (const auto* u = std::get_if<UniformWeights>(&policy)) {
        return std::uniform_real_distribution<double>(u->low, u->high)(rng);
    }
    const auto& k = std::get<DistanceKernelWeights>(policy);
    require(pos.has_value(), ErrorCode::InvalidArgument, "distance-kernel weights need node positions");
    return std::exp(-distance((*pos)[static_cast<std::size_t>(i)], (*pos)[static_cast<std::size_t>(j)]) / k.theta);
}

inline void check_policy(const WeightPolicy& policy) {
    if (const auto* u = std::get_if<UniformWeights>(&policy)) {
        require(u->low <= u->high && u->low >= 0.0, ErrorCode::InvalidArgument, "need 0 <= weight_low <= weight_high");
    } else {
        require(std::get<DistanceKernelWeights>(policy).theta > 0.0, ErrorCode::InvalidArgument, "theta must be > 0");
    }
}

}  // namespace detail

/// Erdos-Renyi G(n, p) with i.i.d. uniform edge weights.
inline Graph gen_er(Index n, double p, double weight_low, double weight_high, Rng& rng) {
    require(n >= 1, ErrorCode::InvalidArgument, "n must be >= 1");
    require(p >= 0.0 && p <= 1.0, ErrorCode::InvalidProbability, "edge probability outside [0,1]");
    require(weight_low <= weight_high, ErrorCode::InvalidArgument, "weight_low > weight_high");
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    std::bernoulli_distribution coin(p);
    std::uniform_real_distribution<double> weight(weight_low, weight_high);
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            if (coin(rng)) w(i, j) = w(j, i) = weight(rng);
        }
    }
    return Graph(std::move(w), iota_ids(n));
}

/// Kernel bandwidth rule for sensor graphs.
struct MeanEdgeLength {};
struct FixedBandwidth {
    double theta = 1.0;
};
using BandwidthRule = std::variant<MeanEdgeLength, FixedBandwidth>;

/// Mean Euclidean length over the edge set; 0 when there are no edges.
inline double mean_edge_length(const Graph& g) {
    require(g.has_positions(), ErrorCode::InvalidArgument, "graph has no positions");
    const auto& pos = *g.positions();
    double total = 0.0;
    std::size_t count = 0;
    for (auto [i, j] : g.edges()) {
        total += distance(pos[static_cast<std::size_t>(i)], pos[static_cast<std::size_t>(j)]);
        ++count;
    }
    return count == 0 ? 0.0 : total / static_cast<double>(count);
}

/// Random sensor graph: uniform positions in the unit square, symmetrized
/// k-nearest-neighbour edges, weights exp(-dist / theta).
inline Graph gen_rs(Index n, Index k, const BandwidthRule& rule, Rng& rng) {
    require(n >= 2, ErrorCode::InvalidArgument, "n must be >= 2");
    require(k >= 1 && k < n, ErrorCode::InvalidArgument, "need 1 <= k < n");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Point2> pos(static_cast<std::size_t>(n));
    for (auto& p : pos) {
        p.x = unit(rng);
        p.y = unit(rng);
    }

    std::vector<std::vector<char>> adjacent(static_cast<std::size_t>(n), std::vector<char>(static_cast<std::size_t>(n), 0));
    std::vector<Index> order(static_cast<std::size_t>(n - 1));
    for (Index i = 0; i < n; ++i) {
        order.clear();
        for (Index j = 0; j < n; ++j)
            if (j != i) order.push_back(j);
        const auto& pi = pos[static_cast<std::size_t>(i)];
        std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](Index a, Index b) {
            const double da = distance(pi, pos[static_cast<std::size_t>(a)]);
            const double db = distance(pi, pos[static_cast<std::size_t>(b)]);
            return da < db || (da == db && a < b);
        });
        for (Index m = 0; m < k; ++m) {
            const auto j = static_cast<std::size_t>(order[static_cast<std::size_t>(m)]);
            adjacent[static_cast<std::size_t>(i)][j] = 1;
            adjacent[j][static_cast<std::size_t>(i)] = 1;
        }
    }

    double theta = 0.0;
    if (const auto* fixed = std::get_if<FixedBandwidth>(&rule)) {
        theta = fixed->theta;
    } else {
        double total = 0.0;
        std::size_t count = 0;
        for (Index i = 0; i < n; ++i)
            for (Index j = i + 1; j < n; ++j)
                if (adjacent[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) {
                    total += distance(pos[static_cast<std::size_t>(i)], pos[static_cast<std::size_t>(j)]);
                    ++count;
                }
        theta = total / static_cast<double>(count);
    }
    require(theta > 0.0, ErrorCode::InvalidArgument, "kernel bandwidth must be > 0");

    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j)
            if (adjacent[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) {
                w(i, j) = w(j, i) =
                    std::exp(-distance(pos[static_cast<std::size_t>(i)], pos[static_cast<std::size_t>(j)]) / theta);
            }
    return Graph(std::move(w), iota_ids(n), std::move(pos));
}

/// Removes `e` edges uniformly at random and adds `e` edges between node pairs
/// that were not adjacent in `g`. Node set and edge count are preserved.
inline Graph perturb_edges(const Graph& g, std::size_t e, const WeightPolicy& policy, Rng& rng) {
    detail::check_policy(policy);
    const auto existing = g.edges();
    require(e <= existing.size(), ErrorCode::TooManyRemovals,
            "cannot remove " + std::to_string(e) + " of " + std::to_string(existing.size()) + " edges");
    std::vector<std::pair<Index, Index>> free_pairs;
    const Index n = g.size();
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j)
            if (g.weights()(i, j) == 0.0) free_pairs.emplace_back(i, j);
    require(e <= free_pairs.size(), ErrorCode::NoRoomToAdd,
            "only " + std::to_string(free_pairs.size()) + " non-adjacent pairs available");

    Eigen::MatrixXd w = g.weights();
    for (std::size_t idx : sample_without_replacement(existing.size(), e, rng)) {
        auto [i, j] = existing[idx];
        w(i, j) = w(j, i) = 0.0;
    }
    for (std::size_t idx : sample_without_replacement(free_pairs.size(), e, rng)) {
        auto [i, j] = free_pairs[idx];
        double weight = detail::draw_weight(policy, g.positions(), i, j, rng);
        // A zero weight would silently drop the edge.
        weight = std::max(weight, std::numeric_limits<double>::min());
        w(i, j) = w(j, i) = weight;
    }
    return Graph(std::move(w), g.node_ids(), g.positions());
}

/// Correspondence between the nodes of a historical and a current graph.
struct NodeMapping {
    std::vector<NodeId> kept;
    std::vector<NodeId> removed;
    std::vector<NodeId> added;
    /// Row of each kept node in the historical / current graph (aligned with `kept`).
    std::vector<Index> kept_rows_hist;
    std::vector<Index> kept_rows_curr;

    static NodeMapping identity(const Graph& g) {
        NodeMapping m;
        m.kept = g.node_ids();
        m.kept_rows_hist.resize(m.kept.size());
        std::iota(m.kept_rows_hist.begin(), m.kept_rows_hist.end(), Index{0});
        m.kept_rows_curr = m.kept_rows_hist;
        return m;
    }

    bool is_identity() const {
        if (!removed.empty() || !added.empty()) return false;
        for (std::size_t i = 0; i < kept.size(); ++i)
            if (kept_rows_hist[i] != static_cast<Index>(i) || kept_rows_curr[i] != static_cast<Index>(i)) return false;
        return true;
    }

    /// Checks that kept/removed partition the historical nodes and kept/added
    /// partition the current nodes, with consistent row indices.
    void validate(const Graph& hist, const Graph& curr) const {
        auto fail = [](const std::string& what) { throw Error(ErrorCode::MappingMismatch, what); };
        if (kept_rows_hist.size() != kept.size() || kept_rows_curr.size() != kept.size()) fail("row maps misaligned");
        if (kept.size() + removed.size() != static_cast<std::size_t>(hist.size()))
            fail("kept + removed != historical node count");
        if (kept.size() + added.size() != static_cast<std::size_t>(curr.size()))
            fail("kept + added != current node count");
        for (std::size_t i = 0; i < kept.size(); ++i) {
            if (hist.index_of(kept[i]) != kept_rows_hist[i]) fail("kept node row mismatch in historical graph");
            if (curr.index_of(kept[i]) != kept_rows_curr[i]) fail("kept node row mismatch in current graph");
        }
        for (NodeId id : removed)
            if (!hist.index_of(id) || curr.index_of(id)) fail("removed node " + std::to_string(id) + " misplaced");
        for (NodeId id : added)
            if (hist.index_of(id) || !curr.index_of(id)) fail("added node " + std::to_string(id) + " misplaced");
    }
};

struct NodePerturbation {
    Graph graph;
    NodeMapping mapping;
};

/// Removes `v` random nodes (with their edges) and appends `v` fresh nodes,
/// each linked to every surviving node independently with probability `p_v`.
/// Surviving nodes keep their relative order; added nodes come last.
inline NodePerturbation perturb_nodes(const Graph& g, std::size_t v, double p_v, const WeightPolicy& policy, Rng& rng) {
    detail::check_policy(policy);
    require(p_v >= 0.0 && p_v <= 1.0, ErrorCode::InvalidProbability, "p_v outside [0,1]");
    const auto n = static_cast<std::size_t>(g.size());
    require(v < n, ErrorCode::TooManyRemovals, "must keep at least one node");
    const bool kernel = std::holds_alternative<DistanceKernelWeights>(policy);
    require(!kernel || g.has_positions(), ErrorCode::InvalidArgument, "distance-kernel weights need node positions");

    std::vector<char> drop(n, 0);
    for (std::size_t idx : sample_without_replacement(n, v, rng)) drop[idx] = 1;

    NodeMapping map;
    for (std::size_t i = 0; i < n; ++i) {
        if (drop[i]) {
            map.removed.push_back(g.node_ids()[i]);
        } else {
            map.kept_rows_hist.push_back(static_cast<Index>(i));
            map.kept_rows_curr.push_back(static_cast<Index>(map.kept.size()));
            map.kept.push_back(g.node_ids()[i]);
        }
    }
    NodeId next_id = *std::max_element(g.node_ids().begin(), g.node_ids().end()) + 1;
    for (std::size_t a = 0; a < v; ++a) map.added.push_back(next_id++);

    const auto n_kept = static_cast<Index>(map.kept.size());
    const auto n_curr = static_cast<Index>(n);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n_curr, n_curr);
    for (Index i = 0; i < n_kept; ++i)
        for (Index j = 0; j < n_kept; ++j)
            w(i, j) = g.weights()(map.kept_rows_hist[static_cast<std::size_t>(i)],
                                  map.kept_rows_hist[static_cast<std::size_t>(j)]);

    std::optional<std::vector<Point2>> pos;
    if (g.has_positions()) {
        pos.emplace();
        for (Index r : map.kept_rows_hist) pos->push_back((*g.positions())[static_cast<std::size_t>(r)]);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (std::size_t a = 0; a < v; ++a) {
            const double x = unit(rng);
            const double y = unit(rng);
            pos->push_back({x, y});
        }
    }

    std::bernoulli_distribution coin(p_v);
    for (Index a = n_kept; a < n_curr; ++a) {
        for (Index j = 0; j < n_kept; ++j) {
            if (!coin(rng)) continue;
            double weight = detail::draw_weight(policy, pos, a, j, rng);
            weight = std::max(weight, std::numeric_limits<double>::min());
            w(a, j) = w(j, a) = weight;
        }
    }

    std::vector<NodeId> ids = map.kept;
    ids.insert(ids.end(), map.added.begin(), map.added.end());
    Graph out(std::move(w), std::move(ids), std::move(pos));
    return {std::move(out), std::move(map)};
}

}  // namespace gftransfer
