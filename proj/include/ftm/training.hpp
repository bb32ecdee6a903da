#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ftm/graph.hpp"
#include "ftm/model.hpp"
#include "ftm/optimizer.hpp"
#include "ftm/rng.hpp"

namespace ftm {

struct TrainConfig {
    double learning_rate = 1e-4;
    std::size_t epochs = 10;
    std::size_t batch_size = 200;
    std::size_t negatives = 1; // sampled destinations per positive
    std::uint64_t seed = 0;
    std::size_t patience = 3;  // non-improving validation epochs tolerated

    void validate() const;
};

/// One positive link plus its sampled negative destinations.
struct BatchItem {
    std::size_t link = 0;
    std::vector<NodeId> negatives;
};

struct EpochStats {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_ap = 0.0;
    double seconds = 0.0;
};

struct FitResult {
    ParameterStore best_params;
    double best_val_ap = 0.0;
    std::size_t best_epoch = 0;
    std::vector<EpochStats> history;
};

/// `count` destinations drawn uniformly from the universe, rejecting the true
/// destination. A universe that cannot supply a negative is a configuration
/// error.
std::vector<NodeId> sample_negatives(RngStream& rng, const std::vector<NodeId>& universe,
                                     NodeId true_dst, std::size_t count);

/// Mean over the batch of -log s(pos) + sum_q -log s(-neg_q), with s the
/// logistic sigmoid of the link score.
Var batch_loss(EmbedContext& ctx, const std::vector<BatchItem>& batch);

/// Contrastive future-link-prediction trainer. Iterates training links
/// chronologically, resamples negatives each epoch, applies one optimizer
/// step per batch, and early-stops on validation AP.
class Trainer {
public:
    Trainer(FtmModel& model, const TemporalGraph& g, const DatasetSplit& split,
            TrainConfig cfg);

    /// One pass over the training links; returns mean loss and wall time.
    EpochStats train_epoch(std::size_t epoch_index);

    /// Up to cfg.epochs passes with validation-AP early stopping. Keeps and
    /// returns the best checkpoint. `on_epoch` fires after each epoch.
    FitResult fit(const std::function<void(const EpochStats&)>& on_epoch = {});

    const std::vector<NodeId>& negative_universe() const { return universe_; }
    double validation_ap(std::uint64_t eval_seed) const;

private:
    FtmModel& model_;
    const TemporalGraph& g_;
    const DatasetSplit& split_;
    TrainConfig cfg_;
    Adam opt_;
    std::vector<NodeId> universe_; // destination nodes of training links
};

} // namespace ftm
