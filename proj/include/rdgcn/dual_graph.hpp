#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "rdgcn/graph.hpp"
#include "rdgcn/types.hpp"

namespace rdgcn {

/// Weighted dual relation graph: one vertex per relation, an edge between two
/// relations whenever they share a head or a tail entity, weighted by the sum
/// of the head-set and tail-set Jaccard overlaps. Every vertex also carries a
/// self-edge of weight 2 so attention neighborhoods are never empty.
///
/// Stored as sorted per-vertex neighbor arrays (CSR).
class DualRelationGraph {
public:
    std::size_t vertex_count() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    /// Undirected edges between distinct relations.
    std::size_t edge_count() const { return (neighbors_.size() - vertex_count()) / 2; }

    std::size_t begin(RelationId i) const { return offsets_[i]; }
    std::size_t end(RelationId i) const { return offsets_[i + 1]; }
    std::size_t slot_count() const { return neighbors_.size(); }
    RelationId neighbor(std::size_t slot) const { return neighbors_[slot]; }
    double weight(std::size_t slot) const { return weights_[slot]; }

    std::span<const RelationId> neighbors(RelationId i) const {
        return {neighbors_.data() + offsets_[i], neighbors_.data() + offsets_[i + 1]};
    }
    /// Weight of edge (i, j), or 0 if absent.
    double weight(RelationId i, RelationId j) const;

    friend DualRelationGraph build_dual_graph(const PrimalGraph& g);

private:
    std::vector<std::size_t> offsets_;
    std::vector<RelationId> neighbors_;
    std::vector<double> weights_;
};

DualRelationGraph build_dual_graph(const PrimalGraph& g);

/// |a ∩ b| / |a ∪ b| for sorted unique id lists; 0 when both are empty.
double jaccard(std::span<const EntityId> a, std::span<const EntityId> b);

struct DualGraphStats {
    std::size_t vertex_count = 0;
    std::size_t edge_count = 0;
    std::size_t isolated_count = 0;  // vertices whose only neighbor is themselves
    std::array<std::size_t, 10> weight_histogram{};  // bins of width 0.2 over (0, 2]
    double build_seconds = 0.0;
};

DualGraphStats dual_graph_stats(const DualRelationGraph& dual, double build_seconds = 0.0);

/// Row-stochastic head/tail averaging operators: proxies = [H X ∥ T X].
template <typename Scalar>
struct ProxyOperator {
    SparseMatrix<Scalar> head_mean;  // m × n
    SparseMatrix<Scalar> tail_mean;  // m × n

    explicit ProxyOperator(const PrimalGraph& g) {
        const auto m = static_cast<Eigen::Index>(g.relation_count());
        const auto n = static_cast<Eigen::Index>(g.entity_count());
        head_mean.resize(m, n);
        tail_mean.resize(m, n);
        std::vector<Eigen::Triplet<Scalar>> h, t;
        for (RelationId r = 0; r < static_cast<RelationId>(m); ++r) {
            const auto& heads = g.heads(r);
            const auto& tails = g.tails(r);
            if (heads.empty() || tails.empty())
                throw std::logic_error("relation " + std::to_string(r) + " has an empty head or tail set");
            for (const auto e : heads) h.emplace_back(r, e, Scalar(1) / static_cast<Scalar>(heads.size()));
            for (const auto e : tails) t.emplace_back(r, e, Scalar(1) / static_cast<Scalar>(tails.size()));
        }
        head_mean.setFromTriplets(h.begin(), h.end());
        tail_mean.setFromTriplets(t.begin(), t.end());
    }

    Matrix<Scalar> apply(const Matrix<Scalar>& x) const {
        Matrix<Scalar> out(head_mean.rows(), 2 * x.cols());
        out.leftCols(x.cols()) = head_mean * x;
        out.rightCols(x.cols()) = tail_mean * x;
        return out;
    }

    /// dX += Hᵀ dC_left + Tᵀ dC_right.
    void accumulate_gradient(const Matrix<Scalar>& d_proxies, Matrix<Scalar>& d_x) const {
        const auto d = d_x.cols();
        d_x.noalias() += head_mean.transpose() * d_proxies.leftCols(d);
        d_x.noalias() += tail_mean.transpose() * d_proxies.rightCols(d);
    }
};

/// Relation proxies: row i is [mean of X over H_i ∥ mean of X over T_i].
template <typename Scalar>
Matrix<Scalar> relation_proxies(const PrimalGraph& g, const Matrix<Scalar>& entity_reps) {
    return ProxyOperator<Scalar>(g).apply(entity_reps);
}

}  // namespace rdgcn
