#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rdgcn/dual_graph.hpp"
#include "rdgcn/graph.hpp"
#include "rdgcn/types.hpp"

namespace rdgcn {

enum class Variant { RDGCN, HGCN_S, GCN_S, RD };

std::string to_string(Variant v);
/// Accepts "rdgcn", "hgcn-s", "gcn-s", "rd" (case-insensitive, '_' or '-').
Variant parse_variant(std::string_view s);

inline bool uses_interactions(Variant v) { return v == Variant::RDGCN || v == Variant::RD; }
inline bool uses_gcn(Variant v) { return v != Variant::RD; }
inline bool uses_gates(Variant v) { return v == Variant::RDGCN || v == Variant::HGCN_S; }

enum class Activation { Relu, Identity };

std::string to_string(Activation a);
Activation parse_activation(std::string_view s);

/// Starting value of the GCN weights W^(l). Gate weights are always Glorot-uniform.
enum class WeightInit { Glorot, Identity };

std::string to_string(WeightInit w);
WeightInit parse_weight_init(std::string_view s);

/// Fixed (non-trainable) model hyperparameters.
struct ModelOptions {
    std::size_t dim = 300;
    std::size_t interactions = 2;
    std::size_t gcn_layers = 2;
    std::vector<double> betas{0.1, 0.3};
    bool share_scorers = false;  // one dual/primal scorer pair for every interaction
    double leaky_slope = 0.2;
    Activation dual_activation = Activation::Relu;
    Activation primal_activation = Activation::Relu;
    WeightInit gcn_init = WeightInit::Glorot;
    double gate_bias_init = -2.0;  // starting value of every b_T entry (negative favors carry)
    Variant variant = Variant::RDGCN;

    /// Throws std::invalid_argument on inconsistent settings.
    void validate() const;
};

/// Fully connected layer to a scalar: weight · x + bias.
template <typename Scalar>
struct AttentionScorer {
    Vector<Scalar> weight;
    Scalar bias = 0;
};

template <typename Scalar>
struct GcnLayerParams {
    Matrix<Scalar> weight;       // d × d
    Matrix<Scalar> gate_weight;  // d × d
    Vector<Scalar> gate_bias;    // d
};

/// Every trainable tensor. Also used as the gradient container.
template <typename Scalar>
struct Parameters {
    Matrix<Scalar> entity_init;                         // n × d
    std::vector<AttentionScorer<Scalar>> dual_scorers;  // weights of length 4d
    std::vector<AttentionScorer<Scalar>> primal_scorers;  // weights of length 2d
    std::vector<GcnLayerParams<Scalar>> gcn;

    /// Visits every tensor as (name, data pointer, element count), in a fixed order.
    template <typename F>
    void for_each_tensor(F&& f) {
        visit(*this, f);
    }
    template <typename F>
    void for_each_tensor(F&& f) const {
        visit(*this, f);
    }

    Parameters zeros_like() const {
        Parameters z = *this;
        z.for_each_tensor([](const std::string&, Scalar* data, std::size_t size) {
            std::fill(data, data + size, Scalar(0));
        });
        return z;
    }

    std::size_t element_count() const {
        std::size_t total = 0;
        for_each_tensor([&](const std::string&, const Scalar*, std::size_t size) { total += size; });
        return total;
    }

    template <typename Other>
    Parameters<Other> cast() const {
        Parameters<Other> out;
        out.entity_init = entity_init.template cast<Other>();
        for (const auto& s : dual_scorers) out.dual_scorers.push_back({s.weight.template cast<Other>(), Other(s.bias)});
        for (const auto& s : primal_scorers)
            out.primal_scorers.push_back({s.weight.template cast<Other>(), Other(s.bias)});
        for (const auto& l : gcn) {
            out.gcn.push_back({l.weight.template cast<Other>(), l.gate_weight.template cast<Other>(),
                               l.gate_bias.template cast<Other>()});
        }
        return out;
    }

private:
    template <typename Self, typename F>
    static void visit(Self& self, F& f) {
        f(std::string("entity_init"), self.entity_init.data(), static_cast<std::size_t>(self.entity_init.size()));
        for (std::size_t s = 0; s < self.dual_scorers.size(); ++s) {
            auto& sc = self.dual_scorers[s];
            const auto tag = std::to_string(s);
            f("dual_scorer" + tag + ".weight", sc.weight.data(), static_cast<std::size_t>(sc.weight.size()));
            f("dual_scorer" + tag + ".bias", &sc.bias, std::size_t{1});
        }
        for (std::size_t s = 0; s < self.primal_scorers.size(); ++s) {
            auto& sc = self.primal_scorers[s];
            const auto tag = std::to_string(s);
            f("primal_scorer" + tag + ".weight", sc.weight.data(), static_cast<std::size_t>(sc.weight.size()));
            f("primal_scorer" + tag + ".bias", &sc.bias, std::size_t{1});
        }
        for (std::size_t l = 0; l < self.gcn.size(); ++l) {
            auto& layer = self.gcn[l];
            const auto tag = std::to_string(l);
            f("gcn" + tag + ".weight", layer.weight.data(), static_cast<std::size_t>(layer.weight.size()));
            f("gcn" + tag + ".gate_weight", layer.gate_weight.data(),
              static_cast<std::size_t>(layer.gate_weight.size()));
            f("gcn" + tag + ".gate_bias", layer.gate_bias.data(), static_cast<std::size_t>(layer.gate_bias.size()));
        }
    }
};

template <typename Scalar>
using GradientBundle = Parameters<Scalar>;

template <typename Scalar>
struct ModelParams {
    ModelOptions options;
    Parameters<Scalar> tensors;

    const AttentionScorer<Scalar>& dual_scorer(std::size_t interaction) const {
        return tensors.dual_scorers[std::min(interaction, tensors.dual_scorers.size() - 1)];
    }
    const AttentionScorer<Scalar>& primal_scorer(std::size_t interaction) const {
        return tensors.primal_scorers[std::min(interaction, tensors.primal_scorers.size() - 1)];
    }
};

/// Builds parameters with entity_init copied from `names` and every other
/// matrix/vector drawn from the symmetric Glorot-uniform range. Biases start at 0.
template <typename Scalar>
ModelParams<Scalar> init_params(const ModelOptions& options, const Matrix<double>& names, std::uint64_t rng_seed);

/// D̃^{-1/2} (A + I) D̃^{-1/2} over the undirected primal adjacency.
template <typename Scalar>
SparseMatrix<Scalar> normalized_adjacency(const PrimalGraph& g);

/// Graph-derived operators shared by every forward/backward call.
template <typename Scalar>
struct GraphContext {
    const PrimalGraph* graph;
    const DualRelationGraph* dual;
    ProxyOperator<Scalar> proxies;
    SparseMatrix<Scalar> adjacency;
    std::vector<Scalar> dual_weights;  // per dual CSR slot

    GraphContext(const PrimalGraph& g, const DualRelationGraph& d);
};

template <typename Scalar>
struct DualAttentionTrace {
    Matrix<Scalar> input;    // X^r, m × 2d
    Matrix<Scalar> proxies;  // c, m × 2d
    Vector<Scalar> left_scores;   // a_left · c_i
    Vector<Scalar> right_scores;  // a_right · c_j
    std::vector<Scalar> logits;   // w_ij (a · [c_i ∥ c_j] + b), per dual slot
    std::vector<Scalar> alpha;    // per dual slot
    Matrix<Scalar> pre_activation;
    Matrix<Scalar> output;        // x̃^r
};

template <typename Scalar>
struct PrimalAttentionTrace {
    Matrix<Scalar> input;            // X^e, n × d
    Vector<Scalar> relation_scores;  // a_e · x̃^r_r, per relation
    std::vector<Scalar> logits;      // per primal neighbor group
    std::vector<Scalar> alpha;       // per primal neighbor group
    Matrix<Scalar> pre_activation;
    Matrix<Scalar> output;  // x̃^e
    Matrix<Scalar> mixed;   // x̂^e = beta x̃^e + X^{e_init}
    Scalar beta = 0;
};

template <typename Scalar>
struct InteractionTrace {
    DualAttentionTrace<Scalar> dual;
    PrimalAttentionTrace<Scalar> primal;
};

template <typename Scalar>
struct GcnLayerTrace {
    Matrix<Scalar> input;
    Matrix<Scalar> propagated;      // Â X
    Matrix<Scalar> pre_activation;  // Â X W
    Matrix<Scalar> gate;            // sigmoid(X W_T + b_T); empty when ungated
    Matrix<Scalar> output;
};

template <typename Scalar>
struct ForwardTrace {
    Variant variant = Variant::RDGCN;
    std::vector<InteractionTrace<Scalar>> interactions;
    std::vector<GcnLayerTrace<Scalar>> gcn;
    Matrix<Scalar> output;  // X̄
};

/// x̃^r_i = σ^r(Σ_j α_ij x^r_j), α_i· = softmax_j η(w_ij (a · [c_i ∥ c_j] + b)).
template <typename Scalar>
Matrix<Scalar> dual_attention(const DualRelationGraph& dual, const std::vector<Scalar>& dual_weights,
                              const Matrix<Scalar>& dual_input, const Matrix<Scalar>& proxies,
                              const AttentionScorer<Scalar>& scorer, const ModelOptions& options,
                              DualAttentionTrace<Scalar>* trace = nullptr);

/// x̂^e_q = beta σ^e(Σ_t α_qt x^e_t) + x^{e_init}_q with α_q· = softmax_t η(a_e · x̃^r_qt + b),
/// x̃^r_qt being the mean dual representation of the relations linking q and t.
template <typename Scalar>
Matrix<Scalar> primal_attention(const PrimalGraph& g, const Matrix<Scalar>& primal_input,
                                const Matrix<Scalar>& dual_reps, const AttentionScorer<Scalar>& scorer,
                                Scalar beta, const Matrix<Scalar>& entity_init, const ModelOptions& options,
                                PrimalAttentionTrace<Scalar>* trace = nullptr);

/// Runs `num_interactions` dual/primal interaction modules and returns the final x̂^e.
template <typename Scalar>
Matrix<Scalar> interaction_stack(const GraphContext<Scalar>& ctx, const ModelParams<Scalar>& params,
                                 std::size_t num_interactions, ForwardTrace<Scalar>* trace = nullptr);

/// T ⊙ ξ(Â X W) + (1 − T) ⊙ X with T = sigmoid(X W_T + b_T); ungated layers return ξ(Â X W).
template <typename Scalar>
Matrix<Scalar> highway_gcn_layer(const Matrix<Scalar>& x, const SparseMatrix<Scalar>& adjacency,
                                 const GcnLayerParams<Scalar>& layer, bool gated,
                                 GcnLayerTrace<Scalar>* trace = nullptr);

template <typename Scalar>
struct ForwardResult {
    Matrix<Scalar> output;
    ForwardTrace<Scalar> trace;
};

/// Full forward pass for `params.options.variant`.
template <typename Scalar>
ForwardResult<Scalar> forward(const GraphContext<Scalar>& ctx, const ModelParams<Scalar>& params);

/// Output embeddings only (no trace retained).
template <typename Scalar>
Matrix<Scalar> embed(const GraphContext<Scalar>& ctx, const ModelParams<Scalar>& params);

}  // namespace rdgcn
