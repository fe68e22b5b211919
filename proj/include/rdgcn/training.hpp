#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rdgcn/graph.hpp"
#include "rdgcn/network.hpp"
#include "rdgcn/types.hpp"

namespace rdgcn {

enum class OptimizerKind { Adam, Sgd };

std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view s);

struct TrainingConfig {
    double margin = 1.0;                   // γ
    std::size_t negatives_per_side = 125;  // 𝒦
    std::size_t negative_refresh_epochs = 10;
    double learning_rate = 0.001;
    std::size_t epochs = 600;
    std::uint64_t rng_seed = 0;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    bool early_stop = false;
    std::size_t patience = 50;
    double validation_fraction = 0.1;  // held out from train seeds when early_stop is on
    std::size_t eval_every = 10;       // epochs between logged Hits@1 values (0 disables)

    void validate() const;
};

/// Corrupted pairs for each positive: the first half replaces q, the second half replaces p.
struct NegativeSet {
    std::size_t per_side = 0;
    std::vector<AlignedPair> pairs;  // positive i owns pairs[i * 2 * per_side, (i + 1) * 2 * per_side)

    std::span<const AlignedPair> of(std::size_t positive) const {
        return {pairs.data() + positive * 2 * per_side, 2 * per_side};
    }
};

/// ‖x̄_{e1} − x̄_{e2}‖₁.
template <typename Scalar>
Scalar alignment_distance(const Matrix<Scalar>& embeddings, EntityId e1, EntityId e2) {
    return (embeddings.row(e1) - embeddings.row(e2)).cwiseAbs().sum();
}

/// Σ over positives and their negatives of max{0, d(p,q) − d(p',q') + γ}.
template <typename Scalar>
Scalar margin_loss(const Matrix<Scalar>& embeddings, std::span<const AlignedPair> positives,
                   const NegativeSet& negatives, Scalar margin);

/// Same loss; also accumulates ∂L/∂X̄ into `d_embeddings` (resized and zeroed first).
template <typename Scalar>
Scalar margin_loss_gradient(const Matrix<Scalar>& embeddings, std::span<const AlignedPair> positives,
                            const NegativeSet& negatives, Scalar margin, Matrix<Scalar>& d_embeddings);

/// Exact 𝒦-nearest corruptions under L1 on both sides of every positive.
/// Candidates are all entities of the counterpart KG except the true partner;
/// ties go to the lower entity id.
template <typename Scalar>
NegativeSet mine_negatives(const Matrix<Scalar>& embeddings, const PrimalGraph& graph,
                           std::span<const AlignedPair> positives, std::size_t per_side);

/// Reverse pass of `forward` given ∂L/∂X̄. Mined negatives are treated as constants.
/// Throws NumericalError if any gradient entry is non-finite.
template <typename Scalar>
GradientBundle<Scalar> backward(const GraphContext<Scalar>& ctx, const ModelParams<Scalar>& params,
                                const ForwardTrace<Scalar>& trace, const Matrix<Scalar>& d_output);

template <typename Scalar>
class Optimizer {
public:
    Optimizer(const TrainingConfig& config, const Parameters<Scalar>& like);

    void step(Parameters<Scalar>& params, const GradientBundle<Scalar>& grads);
    std::size_t steps() const { return steps_; }

private:
    TrainingConfig config_;
    Parameters<Scalar> first_moment_;
    Parameters<Scalar> second_moment_;
    std::size_t steps_ = 0;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double loss = 0.0;
    std::optional<double> hits1;  // validation (or train, without a validation split) Hits@1
    bool validation = false;
    double wall_seconds = 0.0;
};

template <typename Scalar>
struct TrainingResult {
    ModelParams<Scalar> params;
    std::vector<EpochRecord> log;
    std::size_t best_epoch = 0;
    bool stopped_early = false;
};

/// Thrown when the loss turns non-finite; carries the last parameters with a finite loss.
template <typename Scalar>
class TrainingDiverged : public NumericalError {
public:
    TrainingDiverged(const std::string& what, ModelParams<Scalar> last_good)
        : NumericalError(what), last_good_(std::move(last_good)) {}
    const ModelParams<Scalar>& last_good() const { return last_good_; }

private:
    ModelParams<Scalar> last_good_;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Full-batch training with periodic hard-negative refresh.
template <typename Scalar>
TrainingResult<Scalar> train(const GraphContext<Scalar>& ctx, ModelParams<Scalar> params,
                             const TrainingConfig& config, std::span<const AlignedPair> train_pairs,
                             const EpochCallback& on_epoch = {});

}  // namespace rdgcn
