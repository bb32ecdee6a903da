#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ftm/graph.hpp"
#include "ftm/model.hpp"
#include "ftm/training.hpp"

namespace ftm {

// --- ranking metrics ---------------------------------------------------------

/// Area under the precision-recall curve by descending-score ranking; ties
/// keep input order. Needs at least one positive label.
double average_precision(const std::vector<double>& scores, const std::vector<int>& labels);

/// Probability that a random positive outranks a random negative, ties
/// counted one half (Mann-Whitney). Needs both classes.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// --- link prediction ---------------------------------------------------------

enum class EvalSetting { Transductive, Inductive };
const char* to_string(EvalSetting setting);

struct EvalReport {
    std::string task;
    std::string setting;
    std::string metric;
    double value = 0.0;
    std::uint64_t seed = 0;
};

/// AP over the given links: each positive is paired with one uniformly
/// sampled negative destination from the universe.
double link_prediction_ap(const FtmModel& model, const TemporalGraph& g,
                          const std::vector<std::size_t>& links,
                          const std::vector<NodeId>& negative_universe, std::uint64_t seed);

/// Transductive: test links among train-observed nodes. Inductive: test
/// links touching at least one masked new node.
EvalReport eval_link_prediction(const FtmModel& model, const TemporalGraph& g,
                                const DatasetSplit& split, EvalSetting setting,
                                std::uint64_t seed);

// --- node classification -----------------------------------------------------

struct FinetuneOptions {
    double train_fraction = 0.7;  // chronological head of the labeled instances
    std::size_t max_instances = 0; // 0 = all; otherwise the most recent m links
    std::size_t iterations = 300;
    double learning_rate = 0.05;
};

struct FinetuneResult {
    double auc = 0.0;
    std::size_t train_instances = 0;
    std::size_t test_instances = 0;
};

/// Fits one affine layer + sigmoid with the logistic loss on the leading
/// train_fraction of the instances; reports held-out AUC on the rest. The
/// fit is deterministic (zero init, full-batch updates).
FinetuneResult fit_affine_classifier(const std::vector<std::vector<double>>& embeddings,
                                     const std::vector<int>& labels,
                                     FinetuneOptions options = {});

/// Freezes the backbone, embeds each labeled interaction's source node at the
/// interaction timestamp, and fits one affine layer with the logistic loss.
/// Reports held-out AUC over the chronological tail.
FinetuneResult finetune_node_classifier(const FtmModel& model, const TemporalGraph& g,
                                        std::uint64_t seed, FinetuneOptions options = {});

// --- robustness --------------------------------------------------------------

struct AttackSweep {
    std::vector<double> intensities{0.0, 0.01, 0.10, 0.20, 0.30, 0.40, 0.50};
    std::size_t repetitions = 5;
    std::vector<double> auc; // filled by attack_eval, one entry per intensity
};

/// Per intensity: mean fine-tune AUC over `repetitions` noise seeds; the zero
/// entry bypasses noise injection entirely and equals the clean run exactly.
AttackSweep attack_eval(const FtmModel& model, const TemporalGraph& g, AttackSweep sweep,
                        std::uint64_t seed, FinetuneOptions options = {});

// --- domain transfer ---------------------------------------------------------

struct TransferResult {
    EvalReport report;
    bool features_adapted = false; // target features were padded or truncated
    std::size_t source_dim = 0;
    std::size_t target_dim = 0;
};

/// Evaluates a trained model on another dataset without retraining: splits
/// the target chronologically and reports transductive link-prediction AP.
/// Feature-width mismatches are zero-padded or truncated.
TransferResult transfer_eval(const FtmModel& model, const TemporalGraph& target,
                             SplitRatios ratios, double new_node_fraction,
                             std::uint64_t split_seed, std::uint64_t eval_seed);

// --- embedding stability -----------------------------------------------------

struct StabilityResult {
    double mean_cosine = 0.0;
    std::size_t pairs = 0;
    std::size_t skipped = 0; // zero-norm pairs left out
};

/// Mean cosine similarity of successive embeddings; by default each node is
/// evaluated at its own interaction timestamps in order.
StabilityResult embedding_stability(const FtmModel& model, const TemporalGraph& g,
                                    const std::vector<NodeId>& nodes);
StabilityResult embedding_stability(const FtmModel& model, const TemporalGraph& g,
                                    const std::vector<NodeId>& nodes,
                                    const std::vector<std::vector<double>>& times);

// --- case studies ------------------------------------------------------------

enum class SweepAxis { NeighborhoodScale, DataFraction };

struct SweepPoint {
    std::size_t layers = 0;
    std::size_t frame_len = 0;
    double fraction = 1.0;
    std::size_t train_links = 0;
    double ap = 0.0;
};

/// Trains one model per grid point and evaluates it on the unchanged test
/// split. Neighborhood axis varies (layers, frame length); data axis trains
/// on a chronological head fraction of train/validation.
std::vector<SweepPoint> case_study_sweep(
    SweepAxis axis, const TemporalGraph& g, const DatasetSplit& split, ModelConfig base,
    TrainConfig train, EvalSetting setting, std::uint64_t seed,
    const std::vector<std::pair<std::size_t, std::size_t>>& neighborhood_grid =
        {{1, 10}, {1, 20}, {2, 10}, {2, 20}},
    const std::vector<double>& fraction_grid = {0.01, 0.05, 0.10, 0.50});

std::string sweep_table_text(SweepAxis axis, const std::vector<SweepPoint>& points);

} // namespace ftm
