#include "rdgcn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "rdgcn/evaluation.hpp"

namespace rdgcn {

std::string to_string(OptimizerKind k) { return k == OptimizerKind::Adam ? "adam" : "sgd"; }

OptimizerKind parse_optimizer(std::string_view s) {
    if (s == "adam") return OptimizerKind::Adam;
    if (s == "sgd") return OptimizerKind::Sgd;
    throw std::invalid_argument("unknown optimizer '" + std::string(s) + "'");
}

void TrainingConfig::validate() const {
    if (!(margin > 0.0)) throw std::invalid_argument("margin must be positive");
    if (negatives_per_side < 1) throw std::invalid_argument("negatives_per_side must be at least 1");
    if (negative_refresh_epochs < 1) throw std::invalid_argument("negative_refresh_epochs must be at least 1");
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be nonnegative");
    if (early_stop && !(validation_fraction > 0.0 && validation_fraction < 1.0))
        throw std::invalid_argument("validation_fraction must lie in (0,1)");
}

namespace {

template <typename Scalar>
inline Scalar sign(Scalar v) {
    return static_cast<Scalar>((Scalar(0) < v) - (v < Scalar(0)));
}

template <typename Scalar>
Scalar hinge_pass(const Matrix<Scalar>& x, std::span<const AlignedPair> positives, const NegativeSet& negatives,
                  Scalar margin, Matrix<Scalar>* d_x) {
    if (negatives.pairs.size() != positives.size() * 2 * negatives.per_side)
        throw std::invalid_argument("negative set does not match the positive pairs");
    Scalar total = 0;
    for (std::size_t i = 0; i < positives.size(); ++i) {
        const auto [p, q] = positives[i];
        const Scalar pos = alignment_distance(x, p, q);
        std::size_t active = 0;
        for (const auto& [pn, qn] : negatives.of(i)) {
            const Scalar h = pos - alignment_distance(x, pn, qn) + margin;
            if (h <= Scalar(0)) continue;
            total += h;
            ++active;
            if (d_x != nullptr) {
                const RowVector<Scalar> s = (x.row(pn) - x.row(qn)).unaryExpr([](Scalar v) { return sign(v); });
                d_x->row(pn) -= s;
                d_x->row(qn) += s;
            }
        }
        if (d_x != nullptr && active > 0) {
            const RowVector<Scalar> s =
                static_cast<Scalar>(active) * (x.row(p) - x.row(q)).unaryExpr([](Scalar v) { return sign(v); });
            d_x->row(p) += s;
            d_x->row(q) -= s;
        }
    }
    return total;
}

template <typename Scalar>
std::vector<std::span<Scalar>> tensor_views(Parameters<Scalar>& p) {
    std::vector<std::span<Scalar>> out;
    p.for_each_tensor([&](const std::string&, Scalar* data, std::size_t size) { out.emplace_back(data, size); });
    return out;
}

template <typename Scalar>
std::vector<std::span<const Scalar>> tensor_views(const Parameters<Scalar>& p) {
    std::vector<std::span<const Scalar>> out;
    p.for_each_tensor([&](const std::string&, const Scalar* data, std::size_t size) { out.emplace_back(data, size); });
    return out;
}

}  // namespace

template <typename Scalar>
Scalar margin_loss(const Matrix<Scalar>& embeddings, std::span<const AlignedPair> positives,
                   const NegativeSet& negatives, Scalar margin) {
    return hinge_pass<Scalar>(embeddings, positives, negatives, margin, nullptr);
}

template <typename Scalar>
Scalar margin_loss_gradient(const Matrix<Scalar>& embeddings, std::span<const AlignedPair> positives,
                            const NegativeSet& negatives, Scalar margin, Matrix<Scalar>& d_embeddings) {
    d_embeddings = Matrix<Scalar>::Zero(embeddings.rows(), embeddings.cols());
    return hinge_pass<Scalar>(embeddings, positives, negatives, margin, &d_embeddings);
}

template <typename Scalar>
NegativeSet mine_negatives(const Matrix<Scalar>& embeddings, const PrimalGraph& graph,
                           std::span<const AlignedPair> positives, std::size_t per_side) {
    const auto n1 = static_cast<EntityId>(graph.kg1_entity_count());
    const auto n = static_cast<EntityId>(graph.entity_count());
    const std::size_t pool1 = static_cast<std::size_t>(n1);
    const std::size_t pool2 = static_cast<std::size_t>(n - n1);
    if (per_side < 1) throw std::invalid_argument("per_side must be at least 1");
    if (per_side > pool1 - 1 || per_side > pool2 - 1 || pool1 == 0 || pool2 == 0) {
        throw std::invalid_argument("candidate pool (" + std::to_string(std::min(pool1, pool2)) +
                                    " entities) too small for " + std::to_string(per_side) + " negatives per side");
    }

    NegativeSet neg;
    neg.per_side = per_side;
    neg.pairs.reserve(positives.size() * 2 * per_side);

    constexpr Eigen::Index kBlock = 4096;
    std::vector<std::pair<Scalar, EntityId>> scored;
    // Exact K-nearest of `query` among [begin, end) \ {exclude}, ordered by (distance, id).
    auto nearest = [&](EntityId query, EntityId begin, EntityId end, EntityId exclude) {
        scored.clear();
        const auto qrow = embeddings.row(query);
        for (Eigen::Index start = begin; start < end; start += kBlock) {
            const auto rows = std::min<Eigen::Index>(kBlock, end - start);
            const Vector<Scalar> dist =
                (embeddings.middleRows(start, rows).rowwise() - qrow).cwiseAbs().rowwise().sum();
            for (Eigen::Index r = 0; r < rows; ++r) {
                const auto e = static_cast<EntityId>(start + r);
                if (e != exclude) scored.emplace_back(dist(r), e);
            }
        }
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(per_side), scored.end());
    };

    for (const auto& [p, q] : positives) {
        nearest(p, n1, n, q);
        for (std::size_t k = 0; k < per_side; ++k) neg.pairs.emplace_back(p, scored[k].second);
        nearest(q, 0, n1, p);
        for (std::size_t k = 0; k < per_side; ++k) neg.pairs.emplace_back(scored[k].second, q);
    }
    return neg;
}

template <typename Scalar>
Optimizer<Scalar>::Optimizer(const TrainingConfig& config, const Parameters<Scalar>& like)
    : config_(config), first_moment_(like.zeros_like()), second_moment_(like.zeros_like()) {}

template <typename Scalar>
void Optimizer<Scalar>::step(Parameters<Scalar>& params, const GradientBundle<Scalar>& grads) {
    ++steps_;
    auto p = tensor_views(params);
    const auto g = tensor_views(grads);
    if (p.size() != g.size()) throw std::invalid_argument("gradient bundle does not match parameters");
    const auto lr = static_cast<Scalar>(config_.learning_rate);

    if (config_.optimizer == OptimizerKind::Sgd) {
        for (std::size_t t = 0; t < p.size(); ++t)
            for (std::size_t i = 0; i < p[t].size(); ++i) p[t][i] -= lr * g[t][i];
        return;
    }

    auto m = tensor_views(first_moment_);
    auto v = tensor_views(second_moment_);
    const auto b1 = static_cast<Scalar>(config_.adam_beta1);
    const auto b2 = static_cast<Scalar>(config_.adam_beta2);
    const auto eps = static_cast<Scalar>(config_.adam_epsilon);
    const auto step = static_cast<double>(steps_);
    const auto c1 = static_cast<Scalar>(1.0 - std::pow(config_.adam_beta1, step));
    const auto c2 = static_cast<Scalar>(1.0 - std::pow(config_.adam_beta2, step));
    for (std::size_t t = 0; t < p.size(); ++t) {
        for (std::size_t i = 0; i < p[t].size(); ++i) {
            const Scalar gi = g[t][i];
            m[t][i] = b1 * m[t][i] + (Scalar(1) - b1) * gi;
            v[t][i] = b2 * v[t][i] + (Scalar(1) - b2) * gi * gi;
            p[t][i] -= lr * (m[t][i] / c1) / (std::sqrt(v[t][i] / c2) + eps);
        }
    }
}

template <typename Scalar>
TrainingResult<Scalar> train(const GraphContext<Scalar>& ctx, ModelParams<Scalar> params, const TrainingConfig& config,
                             std::span<const AlignedPair> train_pairs, const EpochCallback& on_epoch) {
    config.validate();
    params.options.validate();
    if (train_pairs.empty()) throw std::invalid_argument("training needs at least one seed pair");

    TrainingResult<Scalar> result;
    if (config.epochs == 0) {
        result.params = std::move(params);
        return result;
    }

    std::vector<AlignedPair> fit(train_pairs.begin(), train_pairs.end());
    std::vector<AlignedPair> validation;
    if (config.early_stop) {
        std::mt19937_64 rng(config.rng_seed ^ 0x5eed5eed5eed5eedULL);
        std::shuffle(fit.begin(), fit.end(), rng);
        const auto held = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(config.validation_fraction * static_cast<double>(fit.size()))));
        if (held >= fit.size()) throw std::invalid_argument("validation split leaves no training pairs");
        validation.assign(fit.end() - static_cast<std::ptrdiff_t>(held), fit.end());
        fit.resize(fit.size() - held);
    }

    const auto start = std::chrono::steady_clock::now();
    const auto margin = static_cast<Scalar>(config.margin);
    Optimizer<Scalar> optimizer(config, params.tensors);
    NegativeSet negatives;
    ModelParams<Scalar> best = params;
    ModelParams<Scalar> last_good = params;
    double best_hits = -1.0;
    std::size_t since_best = 0;
    Matrix<Scalar> d_out;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        auto fwd = forward(ctx, params);
        if (epoch % config.negative_refresh_epochs == 0)
            negatives = mine_negatives(fwd.output, *ctx.graph, fit, config.negatives_per_side);
        const Scalar loss = margin_loss_gradient(fwd.output, fit, negatives, margin, d_out);
        if (!std::isfinite(loss)) {
            throw TrainingDiverged<Scalar>("loss became non-finite at epoch " + std::to_string(epoch + 1),
                                           std::move(last_good));
        }
        last_good = params;

        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.loss = static_cast<double>(loss);
        const bool evaluate_now =
            config.eval_every > 0 && ((epoch + 1) % config.eval_every == 0 || epoch + 1 == config.epochs);
        if (evaluate_now) {
            rec.validation = !validation.empty();
            rec.hits1 = hits_at_1(fwd.output, *ctx.graph, rec.validation ? validation : fit);
        }

        if (config.early_stop && rec.hits1) {
            if (*rec.hits1 > best_hits) {
                best_hits = *rec.hits1;
                best = params;
                result.best_epoch = epoch;
                since_best = 0;
            } else {
                since_best += config.eval_every;
            }
        }

        const auto grads = backward(ctx, params, fwd.trace, d_out);
        optimizer.step(params.tensors, grads);

        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.log.push_back(rec);
        if (on_epoch) on_epoch(rec);

        if (config.early_stop && since_best >= config.patience) {
            result.stopped_early = true;
            break;
        }
    }

    result.params = config.early_stop && best_hits >= 0.0 ? std::move(best) : std::move(params);
    return result;
}

#define RDGCN_INSTANTIATE_TRAINING(S)                                                                              \
    template S margin_loss<S>(const Matrix<S>&, std::span<const AlignedPair>, const NegativeSet&, S);              \
    template S margin_loss_gradient<S>(const Matrix<S>&, std::span<const AlignedPair>, const NegativeSet&, S,      \
                                       Matrix<S>&);                                                                \
    template NegativeSet mine_negatives<S>(const Matrix<S>&, const PrimalGraph&, std::span<const AlignedPair>,     \
                                           std::size_t);                                                           \
    template class Optimizer<S>;                                                                                   \
    template TrainingResult<S> train<S>(const GraphContext<S>&, ModelParams<S>, const TrainingConfig&,             \
                                        std::span<const AlignedPair>, const EpochCallback&);

RDGCN_INSTANTIATE_TRAINING(float)
RDGCN_INSTANTIATE_TRAINING(double)

#undef RDGCN_INSTANTIATE_TRAINING

}  // namespace rdgcn
