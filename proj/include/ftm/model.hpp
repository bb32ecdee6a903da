#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "ftm/framing.hpp"
#include "ftm/graph.hpp"
#include "ftm/params.hpp"
#include "ftm/tape.hpp"

namespace ftm {

struct ModelConfig {
    std::size_t layers = 2;       // stacked attention layers, shared weights
    std::size_t heads = 2;        // attention heads per layer
    std::size_t frame_len = 20;   // links per frame, even
    std::size_t timeline_len = 3; // frames per timeline
    std::size_t hidden_dim = 32;  // node embedding width
    std::size_t time_dim = 172;   // time encoding width
    std::size_t feature_dim = 0;  // link feature width, from the dataset

    void validate() const;
    std::size_t head_dim() const { return hidden_dim / heads; }
    /// Width of a time-aware row [h || phi || e].
    std::size_t z_width() const { return hidden_dim + time_dim + feature_dim; }
};

/// Learnable state: time-encoder frequencies/phases, per-head projections,
/// the feed-forward of the frame aggregator and the timeline aggregator.
/// One copy shared by every layer.
class FtmModel {
public:
    FtmModel(ModelConfig cfg, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    ParameterStore& params() { return params_; }
    const ParameterStore& params() const { return params_; }

    std::size_t p_omega, p_phase;
    std::vector<std::size_t> p_wq, p_wk, p_wv; // per head
    std::size_t p_w0, p_b0, p_w1, p_b1;
    std::size_t p_w2, p_b2;

private:
    ModelConfig cfg_;
    ParameterStore params_;
};

/// One recorded forward pass: binds parameters as tape leaves on demand and
/// memoizes node embeddings per (node, time, depth), which is sound because
/// embeddings are pure functions of the graph state before t.
class EmbedContext {
public:
    EmbedContext(Tape& tape, const FtmModel& model, const TemporalGraph& g);

    Tape& tape() { return tape_; }
    const FtmModel& model() const { return model_; }
    const TemporalGraph& graph() const { return g_; }

    /// Leaf for parameter store index i (bound once per context).
    Var param(std::size_t index);
    /// -1 while a parameter was never touched by this context.
    std::int32_t param_leaf_id(std::size_t index) const { return param_leaves_[index]; }
    /// Pre-binds every parameter to the given leaves (store order); used by
    /// derivative checks that own the leaf values.
    void bind_parameters(const std::vector<Var>& leaves);

    /// sqrt(1/d_T) * cos(omega * dt + phase); memoized per distinct dt.
    Var time_encode(double dt);

    /// [h_prev || phi(dt) || e]; e empty means a zero link-feature block.
    Var time_aware_feature(Var h_prev, double dt, const std::vector<double>& e);

    /// Attention over one frame (query = target row, keys/values = entries),
    /// then the two-layer feed-forward. Requires a valid frame and one
    /// neighbor embedding per entry. When given, `alphas_out` receives the
    /// per-head attention weight rows.
    Var frame_embed(const Frame& frame, const std::vector<Var>& neighbor_embeds,
                    Var target_embed, std::vector<Var>* alphas_out = nullptr);

    /// Embedding of s at time t after `depth` layers; depth 0 is the raw node
    /// feature row (zeros when the dataset has none).
    Var node_embed(NodeId s, double t, std::size_t depth);
    Var node_embed(NodeId s, double t) { return node_embed(s, t, model_.config().layers); }

    /// Inner product of the two final-layer embeddings.
    Var link_score(NodeId i, NodeId j, double t);

    /// Gradients per parameter (store order) from the adjoints of a backward
    /// pass; parameters never bound by this context get zeros.
    std::vector<Tensor> parameter_gradients(const std::vector<Tensor>& adjoints) const;

private:
    struct EmbedKey {
        NodeId node;
        std::uint64_t time_bits;
        std::uint32_t depth;
        bool operator==(const EmbedKey&) const = default;
    };
    struct EmbedKeyHash {
        std::size_t operator()(const EmbedKey& k) const {
            std::uint64_t h = k.node * 0x9E3779B97F4A7C15ULL;
            h ^= k.time_bits + 0x517CC1B727220A95ULL + (h << 6) + (h >> 2);
            h ^= k.depth + 0x2545F4914F6CDD1DULL + (h << 6) + (h >> 2);
            return static_cast<std::size_t>(h);
        }
    };

    Tape& tape_;
    const FtmModel& model_;
    const TemporalGraph& g_;
    std::vector<std::int32_t> param_leaves_;
    std::unordered_map<EmbedKey, Var, EmbedKeyHash> embed_memo_;
    std::unordered_map<std::uint64_t, Var> time_memo_;
    Var zero_hidden_;

    Var zero_hidden();
};

} // namespace ftm
