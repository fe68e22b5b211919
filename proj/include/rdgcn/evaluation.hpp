#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rdgcn/graph.hpp"
#include "rdgcn/types.hpp"

namespace rdgcn {

enum class Direction { KG1ToKG2, KG2ToKG1, Both };
enum class CandidatePool { TestSet, AllEntities };

std::string to_string(Direction d);
Direction parse_direction(std::string_view s);
std::string to_string(CandidatePool p);
CandidatePool parse_candidate_pool(std::string_view s);

struct TriangleStats {
    std::size_t correct = 0;  // triangle-involved test pairs aligned correctly (rank 1)
    std::size_t total = 0;    // triangle-involved test pairs
    double rate() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

struct DirectionalResult {
    Direction direction = Direction::KG1ToKG2;
    std::vector<double> hits;        // parallel to AlignmentReport::ks
    std::vector<std::size_t> ranks;  // per test pair, 1-based
    TriangleStats triangles;
};

struct AlignmentReport {
    Direction direction = Direction::KG1ToKG2;
    CandidatePool pool = CandidatePool::TestSet;
    std::vector<std::size_t> ks;
    std::vector<DirectionalResult> directions;  // one, or two for Direction::Both
    std::vector<double> hits;                   // reported values (mean over directions for Both)
    std::size_t test_pairs = 0;
    double runtime_seconds = 0.0;
    std::string config_fingerprint;

    double hits_at(std::size_t k) const;
};

/// L1 ranking of counterpart candidates. Ties in distance go to the lower id.
template <typename Scalar>
AlignmentReport evaluate(const Matrix<Scalar>& embeddings, const PrimalGraph& graph,
                         std::span<const AlignedPair> test_pairs, std::vector<std::size_t> ks,
                         Direction direction = Direction::KG1ToKG2, CandidatePool pool = CandidatePool::TestSet,
                         const std::vector<EntityId>* triangular = nullptr);

/// Hits@1 in the KG1 → KG2 direction over the pairs' own counterparts.
template <typename Scalar>
double hits_at_1(const Matrix<Scalar>& embeddings, const PrimalGraph& graph, std::span<const AlignedPair> pairs);

/// Entities lying on a 3-cycle whose three edges carry one relation type,
/// ignoring edge direction. Sorted ascending.
std::vector<EntityId> find_triangular_entities(const PrimalGraph& g);

}  // namespace rdgcn
