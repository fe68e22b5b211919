#include "rdgcn/dual_graph.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace rdgcn {

double jaccard(std::span<const EntityId> a, std::span<const EntityId> b) {
    std::size_t common = 0;
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            ++common;
            ++i;
            ++j;
        }
    }
    const std::size_t uni = a.size() + b.size() - common;
    return uni == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(uni);
}

double DualRelationGraph::weight(RelationId i, RelationId j) const {
    const auto nb = neighbors(i);
    const auto it = std::lower_bound(nb.begin(), nb.end(), j);
    if (it == nb.end() || *it != j) return 0.0;
    return weights_[offsets_[i] + static_cast<std::size_t>(it - nb.begin())];
}

DualRelationGraph build_dual_graph(const PrimalGraph& g) {
    const std::size_t n = g.entity_count();
    const std::size_t m = g.relation_count();
    if (m == 0) throw std::invalid_argument("dual graph needs at least one relation");

    // Inverted index: entity -> relations having it as head (resp. tail).
    std::vector<std::vector<RelationId>> as_head(n), as_tail(n);
    for (RelationId r = 0; r < static_cast<RelationId>(m); ++r) {
        for (const auto e : g.heads(r)) as_head[e].push_back(r);
        for (const auto e : g.tails(r)) as_tail[e].push_back(r);
    }

    std::vector<std::vector<RelationId>> adj(m);
    for (RelationId r = 0; r < static_cast<RelationId>(m); ++r) adj[r].push_back(r);
    auto collide = [&adj](const std::vector<RelationId>& rels) {
        for (std::size_t a = 0; a < rels.size(); ++a) {
            for (std::size_t b = a + 1; b < rels.size(); ++b) {
                adj[rels[a]].push_back(rels[b]);
                adj[rels[b]].push_back(rels[a]);
            }
        }
    };
    for (std::size_t e = 0; e < n; ++e) {
        collide(as_head[e]);
        collide(as_tail[e]);
    }

    DualRelationGraph dual;
    dual.offsets_.assign(m + 1, 0);
    for (RelationId i = 0; i < static_cast<RelationId>(m); ++i) {
        auto& nb = adj[i];
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
        for (const auto j : nb) {
            dual.neighbors_.push_back(j);
            dual.weights_.push_back(jaccard(g.heads(i), g.heads(j)) + jaccard(g.tails(i), g.tails(j)));
        }
        dual.offsets_[i + 1] = dual.neighbors_.size();
    }
    return dual;
}

DualGraphStats dual_graph_stats(const DualRelationGraph& dual, double build_seconds) {
    DualGraphStats s;
    s.vertex_count = dual.vertex_count();
    s.edge_count = dual.edge_count();
    s.build_seconds = build_seconds;
    for (RelationId i = 0; i < static_cast<RelationId>(s.vertex_count); ++i) {
        if (dual.end(i) - dual.begin(i) == 1) ++s.isolated_count;
        for (std::size_t k = dual.begin(i); k < dual.end(i); ++k) {
            if (dual.neighbor(k) <= i) continue;
            const auto bin = static_cast<std::size_t>(std::ceil(dual.weight(k) / 0.2)) - 1;
            ++s.weight_histogram[std::min<std::size_t>(bin, s.weight_histogram.size() - 1)];
        }
    }
    return s;
}

}  // namespace rdgcn
