#include "rdgcn/network.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <stdexcept>

namespace rdgcn {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::RDGCN: return "rdgcn";
        case Variant::HGCN_S: return "hgcn-s";
        case Variant::GCN_S: return "gcn-s";
        case Variant::RD: return "rd";
    }
    return "?";
}

namespace {

std::string normalize_token(std::string_view s) {
    std::string out;
    for (const char c : s) out.push_back(c == '_' ? '-' : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

}  // namespace

Variant parse_variant(std::string_view s) {
    const auto t = normalize_token(s);
    if (t == "rdgcn") return Variant::RDGCN;
    if (t == "hgcn-s") return Variant::HGCN_S;
    if (t == "gcn-s") return Variant::GCN_S;
    if (t == "rd") return Variant::RD;
    throw std::invalid_argument("unknown variant '" + std::string(s) + "'");
}

std::string to_string(Activation a) { return a == Activation::Relu ? "relu" : "identity"; }

Activation parse_activation(std::string_view s) {
    const auto t = normalize_token(s);
    if (t == "relu") return Activation::Relu;
    if (t == "identity" || t == "linear") return Activation::Identity;
    throw std::invalid_argument("unknown activation '" + std::string(s) + "'");
}

std::string to_string(WeightInit w) { return w == WeightInit::Glorot ? "glorot" : "identity"; }

WeightInit parse_weight_init(std::string_view s) {
    const auto t = normalize_token(s);
    if (t == "glorot") return WeightInit::Glorot;
    if (t == "identity") return WeightInit::Identity;
    throw std::invalid_argument("unknown weight init '" + std::string(s) + "'");
}

void ModelOptions::validate() const {
    if (dim == 0) throw std::invalid_argument("dim must be positive");
    if (uses_interactions(variant)) {
        if (interactions == 0) throw std::invalid_argument("at least one interaction is required");
        if (interactions > betas.size()) {
            throw std::invalid_argument(std::to_string(interactions) + " interactions requested but only " +
                                        std::to_string(betas.size()) + " beta value(s) given");
        }
    }
    if (uses_gcn(variant) && gcn_layers == 0) throw std::invalid_argument("variant needs at least one GCN layer");
    if (!(leaky_slope >= 0.0)) throw std::invalid_argument("leaky slope must be nonnegative");
}

namespace {

template <typename Scalar>
void glorot(Eigen::Ref<Matrix<Scalar>> m, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = static_cast<Scalar>(dist(rng));
}

template <typename Scalar>
Vector<Scalar> glorot_vector(std::size_t size, std::mt19937_64& rng) {
    Matrix<Scalar> m(static_cast<Eigen::Index>(size), 1);
    glorot<Scalar>(m, size, 1, rng);
    return m.col(0);
}

template <typename Scalar>
inline Scalar leaky(Scalar x, Scalar slope) {
    return x > Scalar(0) ? x : slope * x;
}

template <typename Scalar>
void apply_activation(Activation a, const Matrix<Scalar>& in, Matrix<Scalar>& out) {
    if (a == Activation::Relu)
        out = in.cwiseMax(Scalar(0));
    else
        out = in;
}

// In-place softmax over values[begin, end), shifted by the max.
template <typename Scalar>
void softmax_range(std::vector<Scalar>& values, std::size_t begin, std::size_t end) {
    if (begin == end) return;
    Scalar peak = values[begin];
    for (std::size_t k = begin + 1; k < end; ++k) peak = std::max(peak, values[k]);
    Scalar total = 0;
    for (std::size_t k = begin; k < end; ++k) {
        values[k] = std::exp(values[k] - peak);
        total += values[k];
    }
    for (std::size_t k = begin; k < end; ++k) values[k] /= total;
}

}  // namespace

template <typename Scalar>
ModelParams<Scalar> init_params(const ModelOptions& options, const Matrix<double>& names, std::uint64_t rng_seed) {
    options.validate();
    if (static_cast<std::size_t>(names.cols()) != options.dim) {
        throw std::invalid_argument("name embedding width " + std::to_string(names.cols()) +
                                    " does not match model dim " + std::to_string(options.dim));
    }
    const std::size_t d = options.dim;
    std::mt19937_64 rng(rng_seed);
    ModelParams<Scalar> p;
    p.options = options;
    p.tensors.entity_init = names.cast<Scalar>();

    const std::size_t scorer_sets = options.share_scorers ? 1 : std::max<std::size_t>(options.interactions, 1);
    for (std::size_t s = 0; s < scorer_sets; ++s) {
        p.tensors.dual_scorers.push_back({glorot_vector<Scalar>(4 * d, rng), Scalar(0)});
        p.tensors.primal_scorers.push_back({glorot_vector<Scalar>(2 * d, rng), Scalar(0)});
    }
    const auto dd = static_cast<Eigen::Index>(d);
    for (std::size_t l = 0; l < std::max<std::size_t>(options.gcn_layers, 1); ++l) {
        GcnLayerParams<Scalar> layer;
        layer.weight.resize(dd, dd);
        layer.gate_weight.resize(dd, dd);
        glorot<Scalar>(layer.weight, d, d, rng);
        if (options.gcn_init == WeightInit::Identity) layer.weight.setIdentity();
        glorot<Scalar>(layer.gate_weight, d, d, rng);
        layer.gate_bias = Vector<Scalar>::Constant(dd, static_cast<Scalar>(options.gate_bias_init));
        p.tensors.gcn.push_back(std::move(layer));
    }
    return p;
}

template <typename Scalar>
SparseMatrix<Scalar> normalized_adjacency(const PrimalGraph& g) {
    const auto n = static_cast<EntityId>(g.entity_count());
    std::vector<Scalar> degree(static_cast<std::size_t>(n), Scalar(1));
    for (EntityId q = 0; q < n; ++q) degree[q] += static_cast<Scalar>(g.adjacent(q).size());

    std::vector<Eigen::Triplet<Scalar>> entries;
    for (EntityId q = 0; q < n; ++q) {
        const Scalar dq = std::sqrt(degree[q]);
        entries.emplace_back(q, q, Scalar(1) / degree[q]);
        for (const auto t : g.adjacent(q)) entries.emplace_back(q, t, Scalar(1) / (dq * std::sqrt(degree[t])));
    }
    SparseMatrix<Scalar> adj(n, n);
    adj.setFromTriplets(entries.begin(), entries.end());  // duplicates (self-loop triples) are summed
    return adj;
}

template <typename Scalar>
GraphContext<Scalar>::GraphContext(const PrimalGraph& g, const DualRelationGraph& d)
    : graph(&g), dual(&d), proxies(g), adjacency(normalized_adjacency<Scalar>(g)) {
    dual_weights.resize(d.slot_count());
    for (std::size_t k = 0; k < d.slot_count(); ++k) dual_weights[k] = static_cast<Scalar>(d.weight(k));
}

template <typename Scalar>
Matrix<Scalar> dual_attention(const DualRelationGraph& dual, const std::vector<Scalar>& dual_weights,
                              const Matrix<Scalar>& dual_input, const Matrix<Scalar>& proxies,
                              const AttentionScorer<Scalar>& scorer, const ModelOptions& options,
                              DualAttentionTrace<Scalar>* trace) {
    const auto m = static_cast<RelationId>(dual.vertex_count());
    const auto width = proxies.cols();
    const Vector<Scalar> left = proxies * scorer.weight.head(width);
    const Vector<Scalar> right = proxies * scorer.weight.tail(width);
    const auto slope = static_cast<Scalar>(options.leaky_slope);

    std::vector<Scalar> logits(dual.slot_count());
    std::vector<Scalar> alpha(dual.slot_count());
    Matrix<Scalar> pre = Matrix<Scalar>::Zero(m, dual_input.cols());
    for (RelationId i = 0; i < m; ++i) {
        for (std::size_t k = dual.begin(i); k < dual.end(i); ++k) {
            logits[k] = dual_weights[k] * (left(i) + right(dual.neighbor(k)) + scorer.bias);
            alpha[k] = leaky(logits[k], slope);
        }
        softmax_range(alpha, dual.begin(i), dual.end(i));
        for (std::size_t k = dual.begin(i); k < dual.end(i); ++k) {
            pre.row(i) += alpha[k] * dual_input.row(dual.neighbor(k));
        }
    }
    Matrix<Scalar> out;
    apply_activation(options.dual_activation, pre, out);
    if (trace != nullptr) {
        trace->input = dual_input;
        trace->proxies = proxies;
        trace->left_scores = left;
        trace->right_scores = right;
        trace->logits = std::move(logits);
        trace->alpha = std::move(alpha);
        trace->pre_activation = std::move(pre);
        trace->output = out;
    }
    return out;
}

template <typename Scalar>
Matrix<Scalar> primal_attention(const PrimalGraph& g, const Matrix<Scalar>& primal_input,
                                const Matrix<Scalar>& dual_reps, const AttentionScorer<Scalar>& scorer, Scalar beta,
                                const Matrix<Scalar>& entity_init, const ModelOptions& options,
                                PrimalAttentionTrace<Scalar>* trace) {
    const auto n = static_cast<EntityId>(g.entity_count());
    const auto slope = static_cast<Scalar>(options.leaky_slope);
    const Vector<Scalar> rel_scores = dual_reps * scorer.weight;

    std::vector<Scalar> logits(g.group_count());
    std::vector<Scalar> alpha(g.group_count());
    Matrix<Scalar> pre = Matrix<Scalar>::Zero(n, primal_input.cols());
    for (EntityId q = 0; q < n; ++q) {
        const auto begin = g.group_begin(q);
        const auto end = g.group_end(q);
        for (std::size_t k = begin; k < end; ++k) {
            const auto rels = g.group_relations(k);
            Scalar pooled = 0;
            for (const auto r : rels) pooled += rel_scores(r);
            logits[k] = pooled / static_cast<Scalar>(rels.size()) + scorer.bias;
            alpha[k] = leaky(logits[k], slope);
        }
        softmax_range(alpha, begin, end);
        for (std::size_t k = begin; k < end; ++k) pre.row(q) += alpha[k] * primal_input.row(g.group_neighbor(k));
    }
    Matrix<Scalar> out;
    apply_activation(options.primal_activation, pre, out);
    Matrix<Scalar> mixed = beta * out + entity_init;
    if (trace != nullptr) {
        trace->input = primal_input;
        trace->relation_scores = rel_scores;
        trace->logits = std::move(logits);
        trace->alpha = std::move(alpha);
        trace->pre_activation = std::move(pre);
        trace->output = std::move(out);
        trace->mixed = mixed;
        trace->beta = beta;
    }
    return mixed;
}

template <typename Scalar>
Matrix<Scalar> interaction_stack(const GraphContext<Scalar>& ctx, const ModelParams<Scalar>& params,
                                 std::size_t num_interactions, ForwardTrace<Scalar>* trace) {
    const auto& opts = params.options;
    if (num_interactions == 0) throw std::invalid_argument("at least one interaction is required");
    if (num_interactions > opts.betas.size())
        throw std::invalid_argument("not enough beta values for " + std::to_string(num_interactions) + " interactions");

    const Matrix<Scalar>& init = params.tensors.entity_init;
    // First interaction: dual inputs and proxies both come from X^{e_init}.
    Matrix<Scalar> proxies = ctx.proxies.apply(init);
    Matrix<Scalar> dual_in = proxies;
    Matrix<Scalar> primal_in = init;
    if (trace != nullptr) trace->interactions.resize(num_interactions);

    for (std::size_t s = 0; s < num_interactions; ++s) {
        auto* step = trace != nullptr ? &trace->interactions[s] : nullptr;
        Matrix<Scalar> dual_out = dual_attention(*ctx.dual, ctx.dual_weights, dual_in, proxies, params.dual_scorer(s),
                                                 opts, step != nullptr ? &step->dual : nullptr);
        Matrix<Scalar> mixed = primal_attention(*ctx.graph, primal_in, dual_out, params.primal_scorer(s),
                                                static_cast<Scalar>(opts.betas[s]), init, opts,
                                                step != nullptr ? &step->primal : nullptr);
        if (s + 1 == num_interactions) return mixed;
        proxies = ctx.proxies.apply(mixed);
        dual_in = std::move(dual_out);
        primal_in = std::move(mixed);
    }
    return primal_in;  // unreachable
}

template <typename Scalar>
Matrix<Scalar> highway_gcn_layer(const Matrix<Scalar>& x, const SparseMatrix<Scalar>& adjacency,
                                 const GcnLayerParams<Scalar>& layer, bool gated, GcnLayerTrace<Scalar>* trace) {
    Matrix<Scalar> propagated = adjacency * x;
    Matrix<Scalar> pre = propagated * layer.weight;
    Matrix<Scalar> out = pre.cwiseMax(Scalar(0));
    Matrix<Scalar> gate;
    if (gated) {
        Matrix<Scalar> z = x * layer.gate_weight;
        z.rowwise() += layer.gate_bias.transpose();
        gate = z.unaryExpr([](Scalar v) { return Scalar(1) / (Scalar(1) + std::exp(-v)); });
        out = gate.cwiseProduct(out) + (Matrix<Scalar>::Ones(x.rows(), x.cols()) - gate).cwiseProduct(x);
    }
    if (trace != nullptr) {
        trace->input = x;
        trace->propagated = std::move(propagated);
        trace->pre_activation = std::move(pre);
        trace->gate = std::move(gate);
        trace->output = out;
    }
    return out;
}

namespace {

template <typename Scalar>
Matrix<Scalar> run_forward(const GraphContext<Scalar>& ctx, const ModelParams<Scalar>& params,
                           ForwardTrace<Scalar>* trace) {
    const auto& opts = params.options;
    opts.validate();
    const auto variant = opts.variant;
    if (trace != nullptr) trace->variant = variant;

    Matrix<Scalar> x = uses_interactions(variant) ? interaction_stack(ctx, params, opts.interactions, trace)
                                                  : params.tensors.entity_init;
    if (uses_gcn(variant)) {
        if (params.tensors.gcn.size() < opts.gcn_layers) throw std::invalid_argument("missing GCN layer parameters");
        if (trace != nullptr) trace->gcn.resize(opts.gcn_layers);
        for (std::size_t l = 0; l < opts.gcn_layers; ++l) {
            x = highway_gcn_layer(x, ctx.adjacency, params.tensors.gcn[l], uses_gates(variant),
                                  trace != nullptr ? &trace->gcn[l] : nullptr);
        }
    }
    if (trace != nullptr) trace->output = x;
    return x;
}

}  // namespace

template <typename Scalar>
ForwardResult<Scalar> forward(const GraphContext<Scalar>& ctx, const ModelParams<Scalar>& params) {
    ForwardResult<Scalar> result;
    result.output = run_forward(ctx, params, &result.trace);
    return result;
}

template <typename Scalar>
Matrix<Scalar> embed(const GraphContext<Scalar>& ctx, const ModelParams<Scalar>& params) {
    return run_forward<Scalar>(ctx, params, nullptr);
}

#define RDGCN_INSTANTIATE_NETWORK(S)                                                                            \
    template ModelParams<S> init_params<S>(const ModelOptions&, const Matrix<double>&, std::uint64_t);          \
    template SparseMatrix<S> normalized_adjacency<S>(const PrimalGraph&);                                      \
    template struct GraphContext<S>;                                                                           \
    template Matrix<S> dual_attention<S>(const DualRelationGraph&, const std::vector<S>&, const Matrix<S>&,    \
                                         const Matrix<S>&, const AttentionScorer<S>&, const ModelOptions&,     \
                                         DualAttentionTrace<S>*);                                              \
    template Matrix<S> primal_attention<S>(const PrimalGraph&, const Matrix<S>&, const Matrix<S>&,             \
                                           const AttentionScorer<S>&, S, const Matrix<S>&, const ModelOptions&, \
                                           PrimalAttentionTrace<S>*);                                          \
    template Matrix<S> interaction_stack<S>(const GraphContext<S>&, const ModelParams<S>&, std::size_t,        \
                                            ForwardTrace<S>*);                                                 \
    template Matrix<S> highway_gcn_layer<S>(const Matrix<S>&, const SparseMatrix<S>&, const GcnLayerParams<S>&, \
                                            bool, GcnLayerTrace<S>*);                                          \
    template ForwardResult<S> forward<S>(const GraphContext<S>&, const ModelParams<S>&);                       \
    template Matrix<S> embed<S>(const GraphContext<S>&, const ModelParams<S>&);

RDGCN_INSTANTIATE_NETWORK(float)
RDGCN_INSTANTIATE_NETWORK(double)

#undef RDGCN_INSTANTIATE_NETWORK

}  // namespace rdgcn
