#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rdgcn/types.hpp"

namespace rdgcn {

using OriginalId = std::int64_t;

struct RawTriple {
    OriginalId head;
    OriginalId relation;
    OriginalId tail;

    auto operator<=>(const RawTriple&) const = default;
};

/// One knowledge graph as read from disk, keyed by the ids used in the files.
struct KnowledgeGraph {
    std::vector<OriginalId> entities;
    std::vector<std::string> entity_labels;  // parallel to entities, may be empty strings
    std::vector<OriginalId> relations;
    std::vector<std::string> relation_labels;
    std::vector<RawTriple> triples;

    /// Throws DataError on dangling ids or duplicate triples.
    void validate() const;
};

struct Triple {
    EntityId head;
    RelationId relation;
    EntityId tail;

    auto operator<=>(const Triple&) const = default;
};

struct Neighbor {
    EntityId entity;
    RelationId relation;
    bool outgoing;  // true when the owning entity is the head

    auto operator<=>(const Neighbor&) const = default;
};

/// Merged entity graph of both KGs in one dense id space (KG1 entities first).
///
/// Relations are re-indexed over the relations that occur in at least one
/// triple, KG1 relations first. Besides the raw neighbor lists the graph keeps
/// the grouped form consumed by primal attention: for entity q, one group per
/// distinct neighbor t listing every relation that links q and t.
class PrimalGraph {
public:
    PrimalGraph() = default;

    std::size_t entity_count() const { return entity_original_.size(); }
    std::size_t relation_count() const { return relation_original_.size(); }
    std::size_t kg1_entity_count() const { return kg1_entities_; }
    std::size_t kg1_relation_count() const { return kg1_relations_; }
    int kg_of(EntityId e) const { return static_cast<std::size_t>(e) < kg1_entities_ ? 0 : 1; }

    const std::vector<Triple>& triples() const { return triples_; }
    std::size_t kg1_triple_count() const { return kg1_triples_; }

    OriginalId original_entity(EntityId e) const { return entity_original_[e]; }
    OriginalId original_relation(RelationId r) const { return relation_original_[r]; }
    /// Dense id of an original entity id of KG `kg` (0 or 1), if present.
    std::optional<EntityId> dense_entity(int kg, OriginalId id) const;

    /// Raw neighbor list N^e_q: one entry per incident triple.
    std::span<const Neighbor> neighbors(EntityId q) const {
        return {neighbors_.data() + neighbor_offsets_[q],
                neighbors_.data() + neighbor_offsets_[q + 1]};
    }
    const std::vector<EntityId>& heads(RelationId r) const { return heads_[r]; }
    const std::vector<EntityId>& tails(RelationId r) const { return tails_[r]; }
    /// Undirected adjacency (sorted, unique); symmetric by construction.
    const std::vector<EntityId>& adjacent(EntityId q) const { return adjacency_[q]; }

    // Grouped neighborhoods used by primal attention.
    std::size_t group_begin(EntityId q) const { return group_offsets_[q]; }
    std::size_t group_end(EntityId q) const { return group_offsets_[q + 1]; }
    std::size_t group_count() const { return group_neighbor_.size(); }
    EntityId group_neighbor(std::size_t g) const { return group_neighbor_[g]; }
    std::span<const RelationId> group_relations(std::size_t g) const {
        return {group_relations_.data() + group_rel_offsets_[g],
                group_relations_.data() + group_rel_offsets_[g + 1]};
    }

    /// Number of relations declared in the id files (including ones without triples).
    std::array<std::size_t, 2> declared_relations() const { return declared_relations_; }

    friend PrimalGraph merge_graphs(const KnowledgeGraph& g1, const KnowledgeGraph& g2);

private:
    void build_indices();

    std::size_t kg1_entities_ = 0;
    std::size_t kg1_relations_ = 0;
    std::size_t kg1_triples_ = 0;
    std::array<std::size_t, 2> declared_relations_{0, 0};
    std::vector<OriginalId> entity_original_;
    std::vector<OriginalId> relation_original_;
    std::array<std::unordered_map<OriginalId, EntityId>, 2> entity_lookup_;
    std::vector<Triple> triples_;

    std::vector<std::size_t> neighbor_offsets_;
    std::vector<Neighbor> neighbors_;
    std::vector<std::vector<EntityId>> heads_;
    std::vector<std::vector<EntityId>> tails_;
    std::vector<std::vector<EntityId>> adjacency_;

    std::vector<std::size_t> group_offsets_;
    std::vector<EntityId> group_neighbor_;
    std::vector<std::size_t> group_rel_offsets_;
    std::vector<RelationId> group_relations_;
};

/// Merges two KGs into the primal graph. No edges are added between the KGs.
PrimalGraph merge_graphs(const KnowledgeGraph& g1, const KnowledgeGraph& g2);

using AlignedPair = std::pair<EntityId, EntityId>;

struct AlignmentSeeds {
    std::vector<AlignedPair> train;
    std::vector<AlignedPair> test;
};

/// Shuffles `pairs` with `rng_seed` and puts the first round(fraction * |pairs|) into train.
AlignmentSeeds split_seeds(std::vector<AlignedPair> pairs, double fraction, std::uint64_t rng_seed);

struct Dataset {
    KnowledgeGraph kg1;
    KnowledgeGraph kg2;
    PrimalGraph graph;
    std::vector<AlignedPair> pairs;  // every known aligned pair (ref plus sup)
    AlignmentSeeds seeds;
    bool fixed_split = false;        // true when sup_ent_ids supplied the train split
    std::size_t isolated_pairs = 0;  // pairs with a degree-0 entity on either side
    std::vector<std::string> warnings;
};

/// Reads a DBP15K-layout directory.
Dataset load_dataset(const std::filesystem::path& dir, double split_fraction, std::uint64_t rng_seed);

/// Reads `ent_ids_<k>`, `rel_ids_<k>`, `triples_<k>` from `dir`.
KnowledgeGraph read_knowledge_graph(const std::filesystem::path& dir, int which,
                                    std::vector<std::string>& warnings);

/// Writes one KG in the same layout `read_knowledge_graph` consumes.
void write_knowledge_graph(const std::filesystem::path& dir, int which, const KnowledgeGraph& kg);

std::vector<std::pair<OriginalId, OriginalId>> read_pairs(const std::filesystem::path& file);
void write_pairs(const std::filesystem::path& file,
                 const std::vector<std::pair<OriginalId, OriginalId>>& pairs);

struct NameEmbeddings {
    Matrix<double> values;
    std::size_t missing = 0;  // rows filled with the fallback vector
};

/// Loads `<entity id>\t<v1> ... <v_dim>` rows keyed by original entity id.
/// Entities absent from the file get a unit-norm vector seeded by a hash of
/// their KG and original id, mixed with `fallback_seed`.
NameEmbeddings load_name_embeddings(const std::filesystem::path& path, std::size_t dim,
                                    const PrimalGraph& graph, std::uint64_t fallback_seed = 0);

/// Deterministic unit vector used for entities with no name vector.
Vector<double> fallback_name_vector(int kg, OriginalId id, std::size_t dim, std::uint64_t seed);

}  // namespace rdgcn
