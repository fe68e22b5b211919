#include "rdgcn/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>
#include <unordered_map>

namespace rdgcn {

std::string to_string(Direction d) {
    switch (d) {
        case Direction::KG1ToKG2: return "kg1-kg2";
        case Direction::KG2ToKG1: return "kg2-kg1";
        case Direction::Both: return "both";
    }
    return "?";
}

Direction parse_direction(std::string_view s) {
    if (s == "kg1-kg2" || s == "kg1->kg2" || s == "forward") return Direction::KG1ToKG2;
    if (s == "kg2-kg1" || s == "kg2->kg1" || s == "backward") return Direction::KG2ToKG1;
    if (s == "both") return Direction::Both;
    throw std::invalid_argument("unknown direction '" + std::string(s) + "'");
}

std::string to_string(CandidatePool p) { return p == CandidatePool::TestSet ? "test" : "all"; }

CandidatePool parse_candidate_pool(std::string_view s) {
    if (s == "test") return CandidatePool::TestSet;
    if (s == "all") return CandidatePool::AllEntities;
    throw std::invalid_argument("unknown candidate pool '" + std::string(s) + "'");
}

double AlignmentReport::hits_at(std::size_t k) const {
    for (std::size_t i = 0; i < ks.size(); ++i)
        if (ks[i] == k) return hits[i];
    throw std::out_of_range("hits@" + std::to_string(k) + " not in report");
}

namespace {

template <typename Scalar>
DirectionalResult rank_direction(const Matrix<Scalar>& x, const PrimalGraph& graph,
                                 std::span<const AlignedPair> pairs, const std::vector<std::size_t>& ks,
                                 Direction dir, CandidatePool pool, const std::vector<EntityId>* triangular) {
    const bool forward = dir == Direction::KG1ToKG2;
    std::vector<EntityId> candidates;
    if (pool == CandidatePool::TestSet) {
        for (const auto& [a, b] : pairs) candidates.push_back(forward ? b : a);
    } else {
        const auto n1 = static_cast<EntityId>(graph.kg1_entity_count());
        const auto n = static_cast<EntityId>(graph.entity_count());
        for (EntityId e = forward ? n1 : 0; e < (forward ? n : n1); ++e) candidates.push_back(e);
    }

    DirectionalResult res;
    res.direction = dir;
    res.ranks.resize(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const EntityId query = forward ? pairs[i].first : pairs[i].second;
        const EntityId truth = forward ? pairs[i].second : pairs[i].first;
        const auto q = x.row(query);
        const Scalar target = (q - x.row(truth)).cwiseAbs().sum();
        std::size_t better = 0;
        for (const auto c : candidates) {
            if (c == truth) continue;
            const Scalar dist = (q - x.row(c)).cwiseAbs().sum();
            if (dist < target || (dist == target && c < truth)) ++better;
        }
        res.ranks[i] = better + 1;
    }

    res.hits.resize(ks.size());
    for (std::size_t j = 0; j < ks.size(); ++j) {
        const auto hit = std::count_if(res.ranks.begin(), res.ranks.end(), [&](std::size_t r) { return r <= ks[j]; });
        res.hits[j] = pairs.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(pairs.size());
    }

    if (triangular != nullptr) {
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const bool involved = std::binary_search(triangular->begin(), triangular->end(), pairs[i].first) ||
                                  std::binary_search(triangular->begin(), triangular->end(), pairs[i].second);
            if (!involved) continue;
            ++res.triangles.total;
            if (res.ranks[i] == 1) ++res.triangles.correct;
        }
    }
    return res;
}

}  // namespace

template <typename Scalar>
AlignmentReport evaluate(const Matrix<Scalar>& embeddings, const PrimalGraph& graph,
                         std::span<const AlignedPair> test_pairs, std::vector<std::size_t> ks, Direction direction,
                         CandidatePool pool, const std::vector<EntityId>* triangular) {
    const auto start = std::chrono::steady_clock::now();
    if (test_pairs.empty()) throw std::invalid_argument("evaluation needs at least one test pair");
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    if (ks.empty() || ks.front() == 0) throw std::invalid_argument("ks must be positive");

    AlignmentReport report;
    report.direction = direction;
    report.pool = pool;
    report.ks = ks;
    report.test_pairs = test_pairs.size();
    if (direction != Direction::KG2ToKG1) {
        report.directions.push_back(
            rank_direction(embeddings, graph, test_pairs, ks, Direction::KG1ToKG2, pool, triangular));
    }
    if (direction != Direction::KG1ToKG2) {
        report.directions.push_back(
            rank_direction(embeddings, graph, test_pairs, ks, Direction::KG2ToKG1, pool, triangular));
    }
    report.hits.assign(ks.size(), 0.0);
    for (const auto& d : report.directions)
        for (std::size_t j = 0; j < ks.size(); ++j) report.hits[j] += d.hits[j];
    for (auto& h : report.hits) h /= static_cast<double>(report.directions.size());
    report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

template <typename Scalar>
double hits_at_1(const Matrix<Scalar>& embeddings, const PrimalGraph& graph, std::span<const AlignedPair> pairs) {
    if (pairs.empty()) return 0.0;
    return rank_direction(embeddings, graph, pairs, {1}, Direction::KG1ToKG2, CandidatePool::TestSet, nullptr).hits[0];
}

std::vector<EntityId> find_triangular_entities(const PrimalGraph& g) {
    // Undirected, loop-free edge lists per relation.
    std::vector<std::vector<std::pair<EntityId, EntityId>>> edges(g.relation_count());
    for (const auto& t : g.triples()) {
        if (t.head == t.tail) continue;
        edges[t.relation].emplace_back(std::min(t.head, t.tail), std::max(t.head, t.tail));
    }

    std::vector<bool> marked(g.entity_count(), false);
    for (auto& list : edges) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
        std::unordered_map<EntityId, std::vector<EntityId>> adj;
        for (const auto& [u, v] : list) {
            adj[u].push_back(v);
            adj[v].push_back(u);
        }
        for (auto& [_, nb] : adj) std::sort(nb.begin(), nb.end());
        for (const auto& [u, v] : list) {
            const auto& nu = adj[u];
            const auto& nv = adj[v];
            auto i = nu.begin();
            auto j = nv.begin();
            while (i != nu.end() && j != nv.end()) {
                if (*i < *j) {
                    ++i;
                } else if (*j < *i) {
                    ++j;
                } else {
                    marked[u] = marked[v] = marked[*i] = true;
                    ++i;
                    ++j;
                }
            }
        }
    }
    std::vector<EntityId> out;
    for (std::size_t e = 0; e < marked.size(); ++e)
        if (marked[e]) out.push_back(static_cast<EntityId>(e));
    return out;
}

#define RDGCN_INSTANTIATE_EVAL(S)                                                                              \
    template AlignmentReport evaluate<S>(const Matrix<S>&, const PrimalGraph&, std::span<const AlignedPair>,   \
                                         std::vector<std::size_t>, Direction, CandidatePool,                   \
                                         const std::vector<EntityId>*);                                        \
    template double hits_at_1<S>(const Matrix<S>&, const PrimalGraph&, std::span<const AlignedPair>);

RDGCN_INSTANTIATE_EVAL(float)
RDGCN_INSTANTIATE_EVAL(double)

#undef RDGCN_INSTANTIATE_EVAL

}  // namespace rdgcn
