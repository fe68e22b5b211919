#include <cmath>
#include <string>

#include "rdgcn/training.hpp"

namespace rdgcn {

namespace {

template <typename Scalar>
Matrix<Scalar> activation_mask(Activation a, const Matrix<Scalar>& pre) {
    if (a == Activation::Identity) return Matrix<Scalar>::Ones(pre.rows(), pre.cols());
    return pre.unaryExpr([](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(0); });
}

template <typename Scalar>
inline Scalar leaky_slope_at(Scalar z, Scalar slope) {
    return z > Scalar(0) ? Scalar(1) : slope;
}

// Gradient wrt the layer input; parameter gradients are accumulated into `grad`.
template <typename Scalar>
Matrix<Scalar> gcn_layer_backward(const GcnLayerTrace<Scalar>& tr, const SparseMatrix<Scalar>& adjacency,
                                  const GcnLayerParams<Scalar>& layer, bool gated, const Matrix<Scalar>& d_out,
                                  GcnLayerParams<Scalar>& grad) {
    const Matrix<Scalar>& x = tr.input;
    Matrix<Scalar> d_candidate;
    Matrix<Scalar> d_x;
    if (gated) {
        const Matrix<Scalar> candidate = tr.pre_activation.cwiseMax(Scalar(0));
        const Matrix<Scalar> one_minus_gate = Matrix<Scalar>::Ones(x.rows(), x.cols()) - tr.gate;
        const Matrix<Scalar> d_gate = d_out.cwiseProduct(candidate - x);
        d_candidate = d_out.cwiseProduct(tr.gate);
        d_x = d_out.cwiseProduct(one_minus_gate);
        const Matrix<Scalar> d_z = d_gate.cwiseProduct(tr.gate).cwiseProduct(one_minus_gate);
        grad.gate_weight.noalias() += x.transpose() * d_z;
        grad.gate_bias += d_z.colwise().sum().transpose();
        d_x.noalias() += d_z * layer.gate_weight.transpose();
    } else {
        d_candidate = d_out;
        d_x = Matrix<Scalar>::Zero(x.rows(), x.cols());
    }
    const Matrix<Scalar> d_pre = d_candidate.cwiseProduct(activation_mask(Activation::Relu, tr.pre_activation));
    grad.weight.noalias() += tr.propagated.transpose() * d_pre;
    const Matrix<Scalar> d_propagated = d_pre * layer.weight.transpose();
    d_x.noalias() += adjacency.transpose() * d_propagated;
    return d_x;
}

// Primal attention: consumes ∂L/∂x̂^e, fills ∂L/∂(primal input), ∂L/∂x̃^r and scorer grads.
template <typename Scalar>
void primal_backward(const PrimalGraph& g, const PrimalAttentionTrace<Scalar>& tr, const Matrix<Scalar>& dual_out,
                     const AttentionScorer<Scalar>& scorer, const ModelOptions& opts, const Matrix<Scalar>& d_mixed,
                     Matrix<Scalar>& d_input, Matrix<Scalar>& d_dual_out, AttentionScorer<Scalar>& g_scorer,
                     Matrix<Scalar>& d_entity_init) {
    const auto slope = static_cast<Scalar>(opts.leaky_slope);
    d_entity_init += d_mixed;
    const Matrix<Scalar> d_pre =
        (tr.beta * d_mixed).cwiseProduct(activation_mask(opts.primal_activation, tr.pre_activation));

    Vector<Scalar> d_rel = Vector<Scalar>::Zero(dual_out.rows());
    std::vector<Scalar> d_alpha;
    const auto n = static_cast<EntityId>(g.entity_count());
    for (EntityId q = 0; q < n; ++q) {
        const auto begin = g.group_begin(q);
        const auto end = g.group_end(q);
        if (begin == end) continue;
        d_alpha.assign(end - begin, Scalar(0));
        Scalar weighted = 0;
        for (std::size_t k = begin; k < end; ++k) {
            const auto t = g.group_neighbor(k);
            d_alpha[k - begin] = d_pre.row(q).dot(tr.input.row(t));
            weighted += tr.alpha[k] * d_alpha[k - begin];
            d_input.row(t) += tr.alpha[k] * d_pre.row(q);
        }
        for (std::size_t k = begin; k < end; ++k) {
            const Scalar d_logit = tr.alpha[k] * (d_alpha[k - begin] - weighted) * leaky_slope_at(tr.logits[k], slope);
            g_scorer.bias += d_logit;
            const auto rels = g.group_relations(k);
            const Scalar share = d_logit / static_cast<Scalar>(rels.size());
            for (const auto r : rels) d_rel(r) += share;
        }
    }
    g_scorer.weight.noalias() += dual_out.transpose() * d_rel;
    d_dual_out.noalias() += d_rel * scorer.weight.transpose();
}

// Dual attention: consumes ∂L/∂x̃^r, fills ∂L/∂X^r, ∂L/∂c and scorer grads.
template <typename Scalar>
void dual_backward(const DualRelationGraph& dual, const std::vector<Scalar>& weights,
                   const DualAttentionTrace<Scalar>& tr, const AttentionScorer<Scalar>& scorer,
                   const ModelOptions& opts, const Matrix<Scalar>& d_out, Matrix<Scalar>& d_input,
                   Matrix<Scalar>& d_proxies, AttentionScorer<Scalar>& g_scorer) {
    const auto slope = static_cast<Scalar>(opts.leaky_slope);
    const Matrix<Scalar> d_pre = d_out.cwiseProduct(activation_mask(opts.dual_activation, tr.pre_activation));
    const auto m = static_cast<RelationId>(dual.vertex_count());
    Vector<Scalar> d_left = Vector<Scalar>::Zero(m);
    Vector<Scalar> d_right = Vector<Scalar>::Zero(m);
    std::vector<Scalar> d_alpha;
    for (RelationId i = 0; i < m; ++i) {
        const auto begin = dual.begin(i);
        const auto end = dual.end(i);
        d_alpha.assign(end - begin, Scalar(0));
        Scalar weighted = 0;
        for (std::size_t k = begin; k < end; ++k) {
            const auto j = dual.neighbor(k);
            d_alpha[k - begin] = d_pre.row(i).dot(tr.input.row(j));
            weighted += tr.alpha[k] * d_alpha[k - begin];
            d_input.row(j) += tr.alpha[k] * d_pre.row(i);
        }
        for (std::size_t k = begin; k < end; ++k) {
            const Scalar d_logit = tr.alpha[k] * (d_alpha[k - begin] - weighted) * leaky_slope_at(tr.logits[k], slope);
            const Scalar d_score = d_logit * weights[k];
            g_scorer.bias += d_score;
            d_left(i) += d_score;
            d_right(dual.neighbor(k)) += d_score;
        }
    }
    const auto width = tr.proxies.cols();
    g_scorer.weight.head(width).noalias() += tr.proxies.transpose() * d_left;
    g_scorer.weight.tail(width).noalias() += tr.proxies.transpose() * d_right;
    d_proxies.noalias() += d_left * scorer.weight.head(width).transpose();
    d_proxies.noalias() += d_right * scorer.weight.tail(width).transpose();
}

template <typename Scalar>
void check_finite(const GradientBundle<Scalar>& grads) {
    grads.for_each_tensor([](const std::string& name, const Scalar* data, std::size_t size) {
        for (std::size_t i = 0; i < size; ++i) {
            if (!std::isfinite(data[i])) {
                throw NumericalError("non-finite gradient in " + name + " at element " + std::to_string(i) +
                                     " (value " + std::to_string(static_cast<double>(data[i])) + ")");
            }
        }
    });
}

}  // namespace

template <typename Scalar>
GradientBundle<Scalar> backward(const GraphContext<Scalar>& ctx, const ModelParams<Scalar>& params,
                                const ForwardTrace<Scalar>& trace, const Matrix<Scalar>& d_output) {
    const auto& opts = params.options;
    const auto variant = trace.variant;
    GradientBundle<Scalar> grads = params.tensors.zeros_like();

    Matrix<Scalar> d_x = d_output;
    if (uses_gcn(variant)) {
        for (std::size_t l = trace.gcn.size(); l-- > 0;) {
            d_x = gcn_layer_backward(trace.gcn[l], ctx.adjacency, params.tensors.gcn[l], uses_gates(variant), d_x,
                                     grads.gcn[l]);
        }
    }

    if (!uses_interactions(variant)) {
        grads.entity_init += d_x;
        check_finite(grads);
        return grads;
    }

    const std::size_t steps = trace.interactions.size();
    const auto n = params.tensors.entity_init.rows();
    const auto m = static_cast<Eigen::Index>(ctx.graph->relation_count());
    const auto d = params.tensors.entity_init.cols();
    std::vector<Matrix<Scalar>> d_mixed(steps, Matrix<Scalar>::Zero(n, d));
    std::vector<Matrix<Scalar>> d_dual_out(steps, Matrix<Scalar>::Zero(m, 2 * d));
    d_mixed[steps - 1] = d_x;

    for (std::size_t s = steps; s-- > 0;) {
        const auto& step = trace.interactions[s];
        const std::size_t dual_slot = std::min(s, grads.dual_scorers.size() - 1);
        const std::size_t primal_slot = std::min(s, grads.primal_scorers.size() - 1);

        Matrix<Scalar> d_primal_in = Matrix<Scalar>::Zero(n, d);
        primal_backward(*ctx.graph, step.primal, step.dual.output, params.primal_scorer(s), opts, d_mixed[s],
                        d_primal_in, d_dual_out[s], grads.primal_scorers[primal_slot], grads.entity_init);

        Matrix<Scalar> d_dual_in = Matrix<Scalar>::Zero(m, 2 * d);
        Matrix<Scalar> d_proxies = Matrix<Scalar>::Zero(m, 2 * d);
        dual_backward(*ctx.dual, ctx.dual_weights, step.dual, params.dual_scorer(s), opts, d_dual_out[s], d_dual_in,
                      d_proxies, grads.dual_scorers[dual_slot]);

        if (s == 0) {
            // Dual input and proxies of the first interaction are both proxies(X^{e_init}).
            grads.entity_init += d_primal_in;
            d_proxies += d_dual_in;
            ctx.proxies.accumulate_gradient(d_proxies, grads.entity_init);
        } else {
            d_mixed[s - 1] += d_primal_in;
            ctx.proxies.accumulate_gradient(d_proxies, d_mixed[s - 1]);
            d_dual_out[s - 1] += d_dual_in;
        }
    }
    check_finite(grads);
    return grads;
}

template GradientBundle<float> backward<float>(const GraphContext<float>&, const ModelParams<float>&,
                                               const ForwardTrace<float>&, const Matrix<float>&);
template GradientBundle<double> backward<double>(const GraphContext<double>&, const ModelParams<double>&,
                                                 const ForwardTrace<double>&, const Matrix<double>&);

}  // namespace rdgcn
