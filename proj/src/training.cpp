#include "ftm/training.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "ftm/errors.hpp"
#include "ftm/evaluation.hpp"

namespace ftm {

void TrainConfig::validate() const {
    if (learning_rate < 0.0) throw ConfigError("learning rate must be nonnegative");
    if (batch_size < 1) throw ConfigError("batch size must be at least 1");
    if (negatives < 1) throw ConfigError("negative sample count must be at least 1");
}

std::vector<NodeId> sample_negatives(RngStream& rng, const std::vector<NodeId>& universe,
                                     NodeId true_dst, std::size_t count) {
    if (universe.size() < 2) {
        std::ostringstream os;
        os << "negative sampling universe has " << universe.size()
           << " node(s); need at least 2";
        throw ConfigError(os.str());
    }
    std::vector<NodeId> out;
    out.reserve(count);
    while (out.size() < count) {
        NodeId q = universe[rng.below(universe.size())];
        if (q != true_dst) out.push_back(q);
    }
    return out;
}

Var batch_loss(EmbedContext& ctx, const std::vector<BatchItem>& batch) {
    if (batch.empty()) throw ContractViolation("batch_loss: empty batch");
    Var total;
    for (const BatchItem& item : batch) {
        const TemporalLink& l = ctx.graph().link(item.link);
        Var pos = ctx.link_score(l.src, l.dst, l.timestamp);
        Var term = neg(log(sigmoid(pos)));
        for (NodeId q : item.negatives) {
            Var s = ctx.link_score(l.src, q, l.timestamp);
            term = add(term, neg(log(sigmoid(neg(s)))));
        }
        total = total.valid() ? add(total, term) : term;
    }
    return scale(total, 1.0 / static_cast<double>(batch.size()));
}

Trainer::Trainer(FtmModel& model, const TemporalGraph& g, const DatasetSplit& split,
                 TrainConfig cfg)
    : model_(model), g_(g), split_(split), cfg_(cfg),
      opt_(model.params(), cfg.learning_rate) {
    cfg_.validate();
    if (split_.train.empty()) throw ValidationError("training split is empty");
    universe_ = g_.destination_nodes(split_.train);
}

EpochStats Trainer::train_epoch(std::size_t epoch_index) {
    auto t0 = std::chrono::steady_clock::now();
    RngStream rng(cfg_.seed, 1000 + epoch_index);

    double loss_sum = 0.0;
    std::size_t item_count = 0;
    for (std::size_t start = 0; start < split_.train.size(); start += cfg_.batch_size) {
        std::size_t end = std::min(start + cfg_.batch_size, split_.train.size());
        std::vector<BatchItem> batch;
        batch.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) {
            BatchItem item;
            item.link = split_.train[i];
            item.negatives =
                sample_negatives(rng, universe_, g_.link(item.link).dst, cfg_.negatives);
            batch.push_back(std::move(item));
        }

        Tape tape;
        EmbedContext ctx(tape, model_, g_);
        Var loss = batch_loss(ctx, batch);
        double loss_value = loss.scalar();
        if (std::isnan(loss_value)) {
            std::ostringstream os;
            os << "NaN loss in batch starting at training position " << start << " (epoch "
               << epoch_index << ")";
            throw NumericalError(os.str());
        }
        std::vector<Tensor> adj = tape.backward(loss);
        opt_.step(model_.params(), ctx.parameter_gradients(adj));

        loss_sum += loss_value * static_cast<double>(batch.size());
        item_count += batch.size();
    }

    EpochStats stats;
    stats.epoch = epoch_index;
    stats.train_loss = loss_sum / static_cast<double>(item_count);
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return stats;
}

double Trainer::validation_ap(std::uint64_t eval_seed) const {
    if (split_.validation.empty()) throw ValidationError("validation split is empty");
    std::vector<NodeId> universe = g_.destination_nodes();
    return link_prediction_ap(model_, g_, split_.validation, universe, eval_seed);
}

FitResult Trainer::fit(const std::function<void(const EpochStats&)>& on_epoch) {
    FitResult result;
    result.best_params = model_.params();
    const std::uint64_t eval_seed = cfg_.seed ^ 0x5DEECE66DULL;

    if (cfg_.epochs == 0) {
        result.best_val_ap = validation_ap(eval_seed);
        return result;
    }

    double best = -1.0;
    std::size_t non_improving = 0;
    for (std::size_t epoch = 1; epoch <= cfg_.epochs; ++epoch) {
        EpochStats stats = train_epoch(epoch);
        stats.val_ap = validation_ap(eval_seed);
        result.history.push_back(stats);
        if (on_epoch) on_epoch(stats);
        if (stats.val_ap > best) {
            best = stats.val_ap;
            result.best_params = model_.params();
            result.best_val_ap = stats.val_ap;
            result.best_epoch = epoch;
            non_improving = 0;
        } else {
            ++non_improving;
            if (non_improving > cfg_.patience) break;
        }
    }
    return result;
}

} // namespace ftm
