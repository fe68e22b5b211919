#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "rdgcn/dual_graph.hpp"
#include "rdgcn/network.hpp"
#include "rdgcn/training.hpp"
#include "test_util.hpp"

namespace rdgcn::testing {

/// A tiny model plus fixed negatives whose loss is smooth near the current parameters.
struct GradCheckInstance {
    PrimalGraph graph;
    DualRelationGraph dual;
    ModelParams<double> params;
    std::vector<AlignedPair> train;
    NegativeSet negatives;
    double margin = 1.0;
};

/// Smallest distance of any nonsmooth point (ReLU, leaky ReLU, |.|, hinge) from its kink.
inline double kink_distance(const GraphContext<double>& ctx, const ModelParams<double>& params,
                            const GradCheckInstance& inst) {
    const auto fwd = forward(ctx, params);
    double closest = std::numeric_limits<double>::infinity();
    auto visit = [&](double v) { closest = std::min(closest, std::abs(v)); };
    auto visit_matrix = [&](const Matrix<double>& m) {
        for (Eigen::Index i = 0; i < m.size(); ++i) visit(m.data()[i]);
    };
    for (const auto& step : fwd.trace.interactions) {
        for (const auto v : step.dual.logits) visit(v);
        for (const auto v : step.primal.logits) visit(v);
        visit_matrix(step.dual.pre_activation);
        visit_matrix(step.primal.pre_activation);
    }
    for (const auto& layer : fwd.trace.gcn) visit_matrix(layer.pre_activation);
    const auto& x = fwd.output;
    for (std::size_t i = 0; i < inst.train.size(); ++i) {
        const auto [p, q] = inst.train[i];
        visit_matrix(x.row(p) - x.row(q));
        const double pos = alignment_distance(x, p, q);
        for (const auto& [pn, qn] : inst.negatives.of(i)) {
            visit_matrix(x.row(pn) - x.row(qn));
            visit(pos - alignment_distance(x, pn, qn) + inst.margin);
        }
    }
    return closest;
}

/// Draws instances (n <= 12, m <= 4, d = 4, 2 interactions, 2 layers) until one sits at least
/// `kink_margin` away from every kink, so central differences are valid there.
inline GradCheckInstance make_gradcheck_instance(std::mt19937_64& rng, Variant variant, double kink_margin = 1e-3,
                                                 std::size_t* rejected = nullptr) {
    std::uniform_int_distribution<std::size_t> n_dist(4, 6), m_dist(1, 2);
    std::uniform_real_distribution<double> unit(-1.0, 1.0), margin_dist(0.5, 4.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (;;) {
        const std::size_t n = n_dist(rng), m = m_dist(rng);
        GradCheckInstance inst;
        inst.graph = random_primal_graph(rng, n, m, n + 2);
        inst.dual = build_dual_graph(inst.graph);
        ModelOptions opts;
        opts.dim = 4;
        opts.interactions = 2;
        opts.gcn_layers = 2;
        opts.betas = {0.1 + 0.4 * (unit(rng) + 1.0), 0.1 + 0.4 * (unit(rng) + 1.0)};
        opts.variant = variant;
        Matrix<double> names(static_cast<Eigen::Index>(inst.graph.entity_count()), 4);
        for (Eigen::Index i = 0; i < names.size(); ++i) names.data()[i] = normal(rng);
        inst.params = init_params<double>(opts, names, rng());
        for (auto& s : inst.params.tensors.dual_scorers) s.bias = unit(rng);
        for (auto& s : inst.params.tensors.primal_scorers) s.bias = unit(rng);
        for (auto& l : inst.params.tensors.gcn)
            for (Eigen::Index k = 0; k < l.gate_bias.size(); ++k) l.gate_bias(k) = unit(rng);
        const std::size_t seeds = std::uniform_int_distribution<std::size_t>(2, n - 1)(rng);
        inst.train = diagonal_pairs(n, seeds);
        inst.margin = margin_dist(rng);

        const GraphContext<double> ctx(inst.graph, inst.dual);
        inst.negatives = mine_negatives(embed(ctx, inst.params), inst.graph, inst.train, 2);
        if (kink_distance(ctx, inst.params, inst) >= kink_margin) return inst;
        if (rejected != nullptr) ++*rejected;
    }
}

struct GradCheckResult {
    std::size_t coordinates = 0;
    std::size_t failures = 0;
    double worst_error = 0.0;  // |analytic - numeric| / max(|analytic|, |numeric|) over failing-scale entries
    std::string worst_tensor;
    double loss = 0.0;
};

/// Compares every analytic gradient coordinate with a central difference of step `h`.
/// A coordinate passes when |a - f| <= max(rel * max(|a|, |f|), floor).
inline GradCheckResult check_gradients(GradCheckInstance& inst, double h = 1e-5, double rel = 1e-4,
                                       double floor = 1e-8) {
    const GraphContext<double> ctx(inst.graph, inst.dual);
    auto loss_at = [&](const ModelParams<double>& p) {
        return margin_loss(embed(ctx, p), inst.train, inst.negatives, inst.margin);
    };

    const auto fwd = forward(ctx, inst.params);
    Matrix<double> d_out;
    GradCheckResult result;
    result.loss = margin_loss_gradient(fwd.output, inst.train, inst.negatives, inst.margin, d_out);
    const auto grads = backward(ctx, inst.params, fwd.trace, d_out);

    std::vector<const double*> analytic;
    grads.for_each_tensor([&](const std::string&, const double* data, std::size_t) { analytic.push_back(data); });

    auto probe = inst.params;
    std::size_t tensor = 0;
    probe.tensors.for_each_tensor([&](const std::string& name, double* data, std::size_t size) {
        for (std::size_t i = 0; i < size; ++i) {
            const double saved = data[i];
            data[i] = saved + h;
            const double up = loss_at(probe);
            data[i] = saved - h;
            const double down = loss_at(probe);
            data[i] = saved;
            const double numeric = (up - down) / (2 * h);
            const double a = analytic[tensor][i];
            const double diff = std::abs(a - numeric);
            const double scale = std::max(std::abs(a), std::abs(numeric));
            ++result.coordinates;
            if (diff > std::max(rel * scale, floor)) {
                ++result.failures;
                const double err = diff / std::max(scale, floor);
                if (err > result.worst_error) {
                    result.worst_error = err;
                    result.worst_tensor = name + "[" + std::to_string(i) + "]";
                }
            }
        }
        ++tensor;
    });
    return result;
}

}  // namespace rdgcn::testing
