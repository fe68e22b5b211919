#include "rdgcn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "rdgcn/hash.hpp"
#include "text_io.hpp"

namespace rdgcn {

namespace fs = std::filesystem;

void KnowledgeGraph::validate() const {
    std::unordered_set<OriginalId> ents(entities.begin(), entities.end());
    std::unordered_set<OriginalId> rels(relations.begin(), relations.end());
    if (ents.size() != entities.size()) throw DataError("duplicate entity id definition");
    if (rels.size() != relations.size()) throw DataError("duplicate relation id definition");
    std::set<RawTriple> seen;
    for (const auto& t : triples) {
        if (!ents.count(t.head)) throw DataError("dangling entity id " + std::to_string(t.head));
        if (!ents.count(t.tail)) throw DataError("dangling entity id " + std::to_string(t.tail));
        if (!rels.count(t.relation))
            throw DataError("dangling relation id " + std::to_string(t.relation));
        if (!seen.insert(t).second) throw DataError("duplicate triple");
    }
}

std::optional<EntityId> PrimalGraph::dense_entity(int kg, OriginalId id) const {
    const auto& lookup = entity_lookup_.at(static_cast<std::size_t>(kg));
    const auto it = lookup.find(id);
    if (it == lookup.end()) return std::nullopt;
    return it->second;
}

PrimalGraph merge_graphs(const KnowledgeGraph& g1, const KnowledgeGraph& g2) {
    g1.validate();
    g2.validate();

    PrimalGraph g;
    const std::array<const KnowledgeGraph*, 2> kgs{&g1, &g2};
    for (std::size_t k = 0; k < 2; ++k) {
        for (const auto id : kgs[k]->entities) {
            g.entity_lookup_[k].emplace(id, static_cast<EntityId>(g.entity_original_.size()));
            g.entity_original_.push_back(id);
        }
        if (k == 0) g.kg1_entities_ = g.entity_original_.size();
        g.declared_relations_[k] = kgs[k]->relations.size();
    }

    for (std::size_t k = 0; k < 2; ++k) {
        std::unordered_set<OriginalId> used;
        for (const auto& t : kgs[k]->triples) used.insert(t.relation);
        std::unordered_map<OriginalId, RelationId> rel_lookup;
        for (const auto id : kgs[k]->relations) {
            if (!used.count(id)) continue;
            rel_lookup.emplace(id, static_cast<RelationId>(g.relation_original_.size()));
            g.relation_original_.push_back(id);
        }
        if (k == 0) g.kg1_relations_ = g.relation_original_.size();
        for (const auto& t : kgs[k]->triples) {
            g.triples_.push_back({g.entity_lookup_[k].at(t.head), rel_lookup.at(t.relation),
                                  g.entity_lookup_[k].at(t.tail)});
        }
        if (k == 0) g.kg1_triples_ = g.triples_.size();
    }
    g.build_indices();
    return g;
}

void PrimalGraph::build_indices() {
    const std::size_t n = entity_count();
    const std::size_t m = relation_count();

    std::vector<std::vector<Neighbor>> lists(n);
    heads_.assign(m, {});
    tails_.assign(m, {});
    adjacency_.assign(n, {});
    for (const auto& t : triples_) {
        lists[t.head].push_back({t.tail, t.relation, true});
        lists[t.tail].push_back({t.head, t.relation, false});
        heads_[t.relation].push_back(t.head);
        tails_[t.relation].push_back(t.tail);
        adjacency_[t.head].push_back(t.tail);
        adjacency_[t.tail].push_back(t.head);
    }
    auto sort_unique = [](std::vector<EntityId>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    for (auto& v : heads_) sort_unique(v);
    for (auto& v : tails_) sort_unique(v);
    for (auto& v : adjacency_) sort_unique(v);

    neighbor_offsets_.assign(n + 1, 0);
    neighbors_.clear();
    group_offsets_.assign(n + 1, 0);
    group_neighbor_.clear();
    group_rel_offsets_.assign(1, 0);
    group_relations_.clear();
    for (std::size_t q = 0; q < n; ++q) {
        auto& list = lists[q];
        std::sort(list.begin(), list.end());
        neighbors_.insert(neighbors_.end(), list.begin(), list.end());
        neighbor_offsets_[q + 1] = neighbors_.size();

        for (std::size_t i = 0; i < list.size();) {
            const EntityId t = list[i].entity;
            std::vector<RelationId> rels;
            for (; i < list.size() && list[i].entity == t; ++i) rels.push_back(list[i].relation);
            rels.erase(std::unique(rels.begin(), rels.end()), rels.end());
            group_neighbor_.push_back(t);
            group_relations_.insert(group_relations_.end(), rels.begin(), rels.end());
            group_rel_offsets_.push_back(group_relations_.size());
        }
        group_offsets_[q + 1] = group_neighbor_.size();
    }
}

AlignmentSeeds split_seeds(std::vector<AlignedPair> pairs, double fraction, std::uint64_t rng_seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw std::invalid_argument("split fraction must lie in (0,1)");
    std::mt19937_64 rng(rng_seed);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pairs.size())));
    AlignmentSeeds seeds;
    seeds.train.assign(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(n_train));
    seeds.test.assign(pairs.begin() + static_cast<std::ptrdiff_t>(n_train), pairs.end());
    return seeds;
}

namespace {

OriginalId parse_id(detail::LineReader& reader, std::string_view field) {
    OriginalId id = 0;
    if (!detail::parse_number(field, id) || id < 0)
        reader.fail("expected a non-negative integer id, got '" + std::string(field) + "'");
    return id;
}

void read_id_file(const fs::path& file, std::vector<OriginalId>& ids, std::vector<std::string>& labels) {
    detail::LineReader reader(file);
    std::unordered_set<OriginalId> seen;
    std::string line;
    while (reader.next(line)) {
        const auto fields = detail::split(line, '\t');
        const OriginalId id = parse_id(reader, fields[0]);
        if (!seen.insert(id).second) reader.fail("duplicate id definition " + std::to_string(id));
        ids.push_back(id);
        labels.emplace_back(fields.size() > 1 ? fields[1] : std::string_view{});
    }
}

std::string suffixed(const char* stem, int which) { return std::string(stem) + "_" + std::to_string(which); }

}  // namespace

KnowledgeGraph read_knowledge_graph(const fs::path& dir, int which, std::vector<std::string>& warnings) {
    KnowledgeGraph kg;
    read_id_file(dir / suffixed("ent_ids", which), kg.entities, kg.entity_labels);
    read_id_file(dir / suffixed("rel_ids", which), kg.relations, kg.relation_labels);

    const std::unordered_set<OriginalId> ents(kg.entities.begin(), kg.entities.end());
    const std::unordered_set<OriginalId> rels(kg.relations.begin(), kg.relations.end());
    detail::LineReader reader(dir / suffixed("triples", which));
    std::set<RawTriple> seen;
    std::size_t duplicates = 0;
    std::string line;
    while (reader.next(line)) {
        const auto fields = detail::split(line, '\t');
        if (fields.size() != 3) reader.fail("expected 3 tab-separated fields");
        const RawTriple t{parse_id(reader, fields[0]), parse_id(reader, fields[1]), parse_id(reader, fields[2])};
        if (!ents.count(t.head)) reader.fail("dangling entity id " + std::to_string(t.head));
        if (!ents.count(t.tail)) reader.fail("dangling entity id " + std::to_string(t.tail));
        if (!rels.count(t.relation)) reader.fail("dangling relation id " + std::to_string(t.relation));
        if (!seen.insert(t).second) {
            ++duplicates;
            continue;
        }
        kg.triples.push_back(t);
    }
    if (duplicates > 0) {
        warnings.push_back(reader.path().string() + ": dropped " + std::to_string(duplicates) +
                           " duplicate triple(s)");
    }
    return kg;
}

void write_knowledge_graph(const fs::path& dir, int which, const KnowledgeGraph& kg) {
    {
        auto out = detail::open_output(dir / suffixed("ent_ids", which));
        for (std::size_t i = 0; i < kg.entities.size(); ++i) {
            out << kg.entities[i] << '\t' << (i < kg.entity_labels.size() ? kg.entity_labels[i] : "") << '\n';
        }
    }
    {
        auto out = detail::open_output(dir / suffixed("rel_ids", which));
        for (std::size_t i = 0; i < kg.relations.size(); ++i) {
            out << kg.relations[i] << '\t' << (i < kg.relation_labels.size() ? kg.relation_labels[i] : "")
                << '\n';
        }
    }
    auto out = detail::open_output(dir / suffixed("triples", which));
    for (const auto& t : kg.triples) out << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
}

std::vector<std::pair<OriginalId, OriginalId>> read_pairs(const fs::path& file) {
    detail::LineReader reader(file);
    std::vector<std::pair<OriginalId, OriginalId>> pairs;
    std::string line;
    while (reader.next(line)) {
        const auto fields = detail::split(line, '\t');
        if (fields.size() != 2) reader.fail("expected 2 tab-separated fields");
        pairs.emplace_back(parse_id(reader, fields[0]), parse_id(reader, fields[1]));
    }
    return pairs;
}

void write_pairs(const fs::path& file, const std::vector<std::pair<OriginalId, OriginalId>>& pairs) {
    auto out = detail::open_output(file);
    for (const auto& [a, b] : pairs) out << a << '\t' << b << '\n';
}

namespace {

std::vector<AlignedPair> densify_pairs(const PrimalGraph& g, const fs::path& file,
                                       std::vector<std::string>& warnings) {
    const auto raw = read_pairs(file);
    std::vector<AlignedPair> out;
    std::set<AlignedPair> seen;
    std::unordered_set<EntityId> left, right;
    std::size_t duplicates = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto a = g.dense_entity(0, raw[i].first);
        const auto b = g.dense_entity(1, raw[i].second);
        const std::string where = file.string() + ":" + std::to_string(i + 1) + ": ";
        if (!a) throw DataError(where + "dangling KG1 entity id " + std::to_string(raw[i].first));
        if (!b) throw DataError(where + "dangling KG2 entity id " + std::to_string(raw[i].second));
        if (!seen.insert({*a, *b}).second) {
            ++duplicates;
            continue;
        }
        if (!left.insert(*a).second || !right.insert(*b).second)
            throw DataError(where + "entity appears in more than one aligned pair");
        out.emplace_back(*a, *b);
    }
    if (duplicates > 0)
        warnings.push_back(file.string() + ": dropped " + std::to_string(duplicates) + " duplicate pair(s)");
    return out;
}

}  // namespace

Dataset load_dataset(const fs::path& dir, double split_fraction, std::uint64_t rng_seed) {
    if (!fs::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
    Dataset ds;
    ds.kg1 = read_knowledge_graph(dir, 1, ds.warnings);
    ds.kg2 = read_knowledge_graph(dir, 2, ds.warnings);
    ds.graph = merge_graphs(ds.kg1, ds.kg2);
    for (std::size_t k = 0; k < 2; ++k) {
        const auto declared = ds.graph.declared_relations()[k];
        const auto used = k == 0 ? ds.graph.kg1_relation_count()
                                 : ds.graph.relation_count() - ds.graph.kg1_relation_count();
        if (declared != used) {
            ds.warnings.push_back("KG" + std::to_string(k + 1) + ": " + std::to_string(declared - used) +
                                  " declared relation(s) occur in no triple and were dropped");
        }
    }

    const auto ref = densify_pairs(ds.graph, dir / "ref_ent_ids", ds.warnings);
    ds.pairs = ref;
    if (fs::exists(dir / "sup_ent_ids")) {
        const auto sup = densify_pairs(ds.graph, dir / "sup_ent_ids", ds.warnings);
        const std::set<AlignedPair> sup_set(sup.begin(), sup.end());
        const std::set<AlignedPair> ref_set(ref.begin(), ref.end());
        ds.fixed_split = true;
        ds.seeds.train = sup;
        for (const auto& p : ref)
            if (!sup_set.count(p)) ds.seeds.test.push_back(p);
        for (const auto& p : sup)
            if (!ref_set.count(p)) ds.pairs.push_back(p);
    } else {
        ds.seeds = split_seeds(ref, split_fraction, rng_seed);
    }

    for (const auto& [a, b] : ds.pairs) {
        if (ds.graph.adjacent(a).empty() || ds.graph.adjacent(b).empty()) ++ds.isolated_pairs;
    }
    return ds;
}

Vector<double> fallback_name_vector(int kg, OriginalId id, std::size_t dim, std::uint64_t seed) {
    const std::string key = std::to_string(kg) + ":" + std::to_string(id);
    std::mt19937_64 rng(fnv1a64(key) ^ (seed * 0x9E3779B97F4A7C15ULL));
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector<double> v(static_cast<Eigen::Index>(dim));
    do {
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal(rng);
    } while (v.norm() == 0.0);
    return v / v.norm();
}

NameEmbeddings load_name_embeddings(const fs::path& path, std::size_t dim, const PrimalGraph& graph,
                                    std::uint64_t fallback_seed) {
    const auto n = static_cast<Eigen::Index>(graph.entity_count());
    NameEmbeddings result;
    result.values = Matrix<double>::Zero(n, static_cast<Eigen::Index>(dim));
    std::vector<bool> filled(static_cast<std::size_t>(n), false);

    detail::LineReader reader(path);
    std::string line;
    std::vector<double> values;
    while (reader.next(line)) {
        const auto tab = line.find('\t');
        if (tab == std::string::npos) reader.fail("expected '<entity id>\\t<values>'");
        const OriginalId id = parse_id(reader, std::string_view(line).substr(0, tab));

        values.clear();
        for (const auto tok : detail::split(std::string_view(line).substr(tab + 1), ' ')) {
            if (tok.empty()) continue;
            double v = 0;
            if (!detail::parse_number(tok, v)) reader.fail("non-numeric token '" + std::string(tok) + "'");
            values.push_back(v);
        }
        if (values.size() != dim) {
            reader.fail("dimension mismatch for entity " + std::to_string(id) + ": expected " +
                        std::to_string(dim) + " values, got " + std::to_string(values.size()));
        }

        const auto in1 = graph.dense_entity(0, id);
        const auto in2 = graph.dense_entity(1, id);
        if (in1 && in2) reader.fail("entity id " + std::to_string(id) + " is ambiguous: defined in both KGs");
        const auto dense = in1 ? in1 : in2;
        if (!dense) continue;
        if (filled[*dense]) reader.fail("duplicate name vector for entity " + std::to_string(id));
        filled[*dense] = true;
        result.values.row(*dense) = Eigen::Map<const RowVector<double>>(values.data(), static_cast<Eigen::Index>(dim));
    }

    for (Eigen::Index e = 0; e < n; ++e) {
        if (filled[static_cast<std::size_t>(e)]) continue;
        const auto ent = static_cast<EntityId>(e);
        result.values.row(e) = fallback_name_vector(graph.kg_of(ent), graph.original_entity(ent), dim,
                                                    fallback_seed).transpose();
        ++result.missing;
    }
    return result;
}

}  // namespace rdgcn
