#include "rdgcn/synthgen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

#include "text_io.hpp"

namespace rdgcn {

void SynthConfig::validate() const {
    if (entities_per_kg < 3) throw std::invalid_argument("entities_per_kg must be at least 3");
    if (relation_count < 1) throw std::invalid_argument("relation_count must be at least 1");
    if (triple_count < entities_per_kg) throw std::invalid_argument("triple_count must be >= entities_per_kg");
    const double possible = static_cast<double>(entities_per_kg) * static_cast<double>(entities_per_kg - 1) *
                            static_cast<double>(relation_count);
    if (static_cast<double>(triple_count) > possible)
        throw std::invalid_argument("triple_count exceeds the number of distinct loop-free triples");
    if (!(edge_dropout >= 0.0 && edge_dropout < 1.0)) throw std::invalid_argument("edge_dropout must lie in [0,1)");
    if (!(name_noise >= 0.0)) throw std::invalid_argument("name_noise must be nonnegative");
    if (embedding_dim < 1) throw std::invalid_argument("embedding_dim must be positive");
    if (!(seed_fraction > 0.0 && seed_fraction < 1.0)) throw std::invalid_argument("seed_fraction must lie in (0,1)");
}

namespace {

struct BaseTriple {
    std::size_t head;
    std::size_t relation;
    std::size_t tail;
    auto operator<=>(const BaseTriple&) const = default;
};

class BaseGraphBuilder {
public:
    BaseGraphBuilder(const SynthConfig& c, std::mt19937_64& rng) : rng_(rng) {
        std::vector<double> pop(c.relation_count);
        for (std::size_t r = 0; r < pop.size(); ++r) pop[r] = 1.0 / static_cast<double>(r + 1);
        relation_dist_ = std::discrete_distribution<std::size_t>(pop.begin(), pop.end());
        for (std::size_t e = 0; e < c.entities_per_kg; ++e) tickets_.push_back(e);
    }

    bool add(BaseTriple t) {
        if (t.head == t.tail || !seen_.insert(t).second) return false;
        triples_.push_back(t);
        tickets_.push_back(t.head);
        tickets_.push_back(t.tail);
        return true;
    }

    bool contains(const BaseTriple& t) const { return seen_.count(t) > 0; }

    std::size_t relation() { return relation_dist_(rng_); }

    // Preferential attachment: probability proportional to degree + 1.
    std::size_t popular_entity(std::size_t below) {
        while (true) {
            std::uniform_int_distribution<std::size_t> pick(0, tickets_.size() - 1);
            const auto e = tickets_[pick(rng_)];
            if (e < below) return e;
        }
    }

    bool coin() { return std::bernoulli_distribution(0.5)(rng_); }

    std::vector<BaseTriple>& triples() { return triples_; }
    std::size_t size() const { return triples_.size(); }

private:
    std::mt19937_64& rng_;
    std::discrete_distribution<std::size_t> relation_dist_;
    std::vector<std::size_t> tickets_;
    std::set<BaseTriple> seen_;
    std::vector<BaseTriple> triples_;
};

void write_vector_line(std::ofstream& out, OriginalId id, const std::vector<double>& v) {
    out << id << '\t';
    char buf[64];
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto res = std::to_chars(buf, buf + sizeof buf, v[i]);
        if (i > 0) out << ' ';
        out.write(buf, res.ptr - buf);
    }
    out << '\n';
}

}  // namespace

SynthOutput generate(const SynthConfig& config, const std::filesystem::path& dir) {
    config.validate();
    const std::size_t n = config.entities_per_kg;
    const std::size_t m = config.relation_count;
    std::mt19937_64 rng(config.rng_seed);
    BaseGraphBuilder base(config, rng);
    SynthOutput out;

    // Planted same-relation triangles, with a random orientation per edge.
    const std::size_t budget = (config.triple_count - (n - 1)) / 3;
    const std::size_t triangles = std::min(config.planted_triangles, budget);
    std::uniform_int_distribution<std::size_t> any_entity(0, n - 1);
    for (std::size_t planted = 0, attempts = 0; planted < triangles && attempts < 100 * triangles + 100; ++attempts) {
        const std::size_t a = any_entity(rng), b = any_entity(rng), c = any_entity(rng);
        const std::size_t r = base.relation();
        if (a == b || b == c || a == c) continue;
        const std::array<std::pair<std::size_t, std::size_t>, 3> edges{{{a, b}, {b, c}, {a, c}}};
        std::array<BaseTriple, 3> oriented;
        for (std::size_t k = 0; k < 3; ++k) {
            const auto [u, v] = edges[k];
            oriented[k] = base.coin() ? BaseTriple{u, r, v} : BaseTriple{v, r, u};
        }
        if (std::any_of(oriented.begin(), oriented.end(), [&](const BaseTriple& t) { return base.contains(t); }))
            continue;
        for (const auto& t : oriented) base.add(t);
        out.planted_triangles.push_back({static_cast<OriginalId>(a), static_cast<OriginalId>(b),
                                         static_cast<OriginalId>(c)});
        ++planted;
    }

    // Connect every entity to an earlier one.
    for (std::size_t e = 1; e < n && base.size() < config.triple_count; ++e) {
        const std::size_t partner = base.popular_entity(e);
        const std::size_t r = base.relation();
        base.add(base.coin() ? BaseTriple{e, r, partner} : BaseTriple{partner, r, e});
    }
    while (base.size() < config.triple_count) {
        const std::size_t h = base.popular_entity(n);
        const std::size_t t = base.popular_entity(n);
        base.add({h, base.relation(), t});
    }

    // KG2 is an id-permuted copy.
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto kg2_entity = [&](std::size_t k) { return static_cast<OriginalId>(n + perm[k]); };
    const auto kg2_relation = [&](std::size_t r) { return static_cast<OriginalId>(m + r); };

    std::array<KnowledgeGraph, 2> kgs;
    for (std::size_t k = 0; k < n; ++k) {
        kgs[0].entities.push_back(static_cast<OriginalId>(k));
        kgs[0].entity_labels.push_back("synth:kg1/e" + std::to_string(k));
        kgs[1].entities.push_back(static_cast<OriginalId>(n + k));
        kgs[1].entity_labels.push_back("synth:kg2/e" + std::to_string(k));
    }
    for (std::size_t r = 0; r < m; ++r) {
        kgs[0].relations.push_back(static_cast<OriginalId>(r));
        kgs[0].relation_labels.push_back("synth:kg1/r" + std::to_string(r));
        kgs[1].relations.push_back(kg2_relation(r));
        kgs[1].relation_labels.push_back("synth:kg2/r" + std::to_string(r));
    }
    std::bernoulli_distribution drop(config.edge_dropout);
    for (const auto& t : base.triples()) {
        if (!drop(rng)) {
            kgs[0].triples.push_back({static_cast<OriginalId>(t.head), static_cast<OriginalId>(t.relation),
                                      static_cast<OriginalId>(t.tail)});
        }
    }
    for (const auto& t : base.triples()) {
        if (!drop(rng)) kgs[1].triples.push_back({kg2_entity(t.head), kg2_relation(t.relation), kg2_entity(t.tail)});
    }

    for (std::size_t k = 0; k < n; ++k) out.gold_pairs.emplace_back(static_cast<OriginalId>(k), kg2_entity(k));

    // Name vectors: shared unit base vector per aligned pair plus independent noise.
    const std::size_t dim = config.embedding_dim;
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::vector<double>> base_vectors(n, std::vector<double>(dim));
    for (auto& v : base_vectors) {
        double norm = 0.0;
        do {
            norm = 0.0;
            for (auto& x : v) {
                x = normal(rng);
                norm += x * x;
            }
        } while (norm == 0.0);
        norm = std::sqrt(norm);
        for (auto& x : v) x /= norm;
    }
    std::array<std::vector<std::vector<double>>, 2> names;
    for (std::size_t side = 0; side < 2; ++side) {
        names[side] = base_vectors;
        for (auto& v : names[side])
            for (auto& x : v) x += config.name_noise * normal(rng);
    }

    std::filesystem::create_directories(dir);
    write_knowledge_graph(dir, 1, kgs[0]);
    write_knowledge_graph(dir, 2, kgs[1]);
    write_pairs(dir / "ref_ent_ids", out.gold_pairs);
    write_pairs(dir / "gold_pairs", out.gold_pairs);

    out.dataset_dir = dir;
    out.names_file = dir / "name_vectors";
    auto file = detail::open_output(out.names_file);
    for (std::size_t k = 0; k < n; ++k) write_vector_line(file, static_cast<OriginalId>(k), names[0][k]);
    // KG2 rows in KG2 id order.
    std::vector<std::size_t> inverse(n);
    for (std::size_t k = 0; k < n; ++k) inverse[perm[k]] = k;
    for (std::size_t j = 0; j < n; ++j) write_vector_line(file, static_cast<OriginalId>(n + j), names[1][inverse[j]]);

    out.triple_counts = {kgs[0].triples.size(), kgs[1].triples.size()};
    return out;
}

}  // namespace rdgcn
