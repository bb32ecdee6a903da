#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ftm/evaluation.hpp"
#include "ftm/graph.hpp"
#include "ftm/model.hpp"
#include "ftm/training.hpp"

namespace ftm {

/// One experiment run, fully determined by a flat `key = value` file plus
/// command-line overrides. Unknown keys are rejected; every key has a
/// documented default (docs/formats.md).
struct RunConfig {
    std::string dataset;
    bool dataset_has_header = true;
    std::size_t dataset_max_links = 0; // 0 = all
    std::string output_dir = "run";
    std::uint64_t seed = 42;

    ModelConfig model; // feature_dim is taken from the dataset at load time

    double train_lr = 1e-4;
    std::size_t train_epochs = 10;
    std::size_t train_batch = 200;
    std::size_t train_negatives = 1;
    std::size_t train_patience = 3;

    SplitRatios split_ratios;
    double new_node_fraction = 0.10;

    std::string eval_setting = "transductive";
    std::vector<double> attack_intensities{0.0, 0.01, 0.10, 0.20, 0.30, 0.40, 0.50};
    std::size_t attack_repetitions = 5;
    std::size_t finetune_iterations = 300;
    std::size_t finetune_max_instances = 0;
    std::string transfer_dataset;
    std::string sweep_axis = "neighborhood"; // neighborhood | fraction
    std::size_t stability_nodes = 20;

    SynthSpec synth;

    /// Applies one `key = value` assignment; throws ConfigError on unknown
    /// keys or unparsable values.
    void set(const std::string& key, const std::string& value);

    /// Reads a config file (UTF-8, `#` comments, blank lines ignored).
    static RunConfig from_file(const std::string& path);

    /// Canonical snapshot: every key, sorted, `key = value` per line.
    /// Parsing it back reproduces this config exactly.
    std::string resolved_text() const;

    TrainConfig train_config() const;
    EvalSetting eval_setting_enum() const;
};

} // namespace ftm
