#include "ftm/model.hpp"

#include <bit>
#include <cmath>
#include <sstream>

#include "ftm/errors.hpp"
#include "ftm/rng.hpp"

namespace ftm {

void ModelConfig::validate() const {
    if (layers < 1) throw ConfigError("model needs at least one layer");
    if (heads < 1) throw ConfigError("model needs at least one attention head");
    if (frame_len < 2 || frame_len % 2 != 0) {
        throw ConfigError("frame length must be even and at least 2, got " +
                          std::to_string(frame_len));
    }
    if (timeline_len < 1) throw ConfigError("timeline length must be at least 1");
    if (hidden_dim < 1 || time_dim < 1) throw ConfigError("model dimensions must be positive");
    if (hidden_dim % heads != 0) {
        std::ostringstream os;
        os << "hidden dimension " << hidden_dim << " not divisible by " << heads << " heads";
        throw ConfigError(os.str());
    }
}

namespace {

Tensor xavier(RngStream& rng, std::size_t rows, std::size_t cols) {
    double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Tensor t = Tensor::zeros({rows, cols});
    for (double& v : t.values) v = rng.uniform(-a, a);
    return t;
}

} // namespace

FtmModel::FtmModel(ModelConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    RngStream rng(seed, /*stream=*/4);

    // geometric frequency ladder spans time scales from 1 down to ~1e-9
    Tensor omega = Tensor::zeros({1, cfg_.time_dim});
    for (std::size_t m = 0; m < cfg_.time_dim; ++m) {
        omega.values[m] =
            std::pow(10.0, -9.0 * static_cast<double>(m) / static_cast<double>(cfg_.time_dim));
    }
    p_omega = params_.add("time.omega", std::move(omega));
    p_phase = params_.add("time.phase", Tensor::zeros({1, cfg_.time_dim}));

    std::size_t w = cfg_.z_width();
    std::size_t dk = cfg_.head_dim();
    for (std::size_t r = 0; r < cfg_.heads; ++r) {
        std::string base = "attn.h" + std::to_string(r) + ".";
        p_wq.push_back(params_.add(base + "Wq", xavier(rng, w, dk)));
        p_wk.push_back(params_.add(base + "Wk", xavier(rng, w, dk)));
        p_wv.push_back(params_.add(base + "Wv", xavier(rng, w, dk)));
    }
    // y = [z0 || heads] has width w + hidden_dim
    p_w0 = params_.add("ff.W0", xavier(rng, w + cfg_.hidden_dim, cfg_.hidden_dim));
    p_b0 = params_.add("ff.b0", Tensor::zeros({1, cfg_.hidden_dim}));
    p_w1 = params_.add("ff.W1", xavier(rng, cfg_.hidden_dim, cfg_.hidden_dim));
    p_b1 = params_.add("ff.b1", Tensor::zeros({1, cfg_.hidden_dim}));
    // zero-initialized output projection: an untrained model embeds every
    // node identically (chance-level scores), and W2's gradient breaks the
    // symmetry on the first update
    p_w2 = params_.add("timeline.W2",
                       Tensor::zeros({cfg_.timeline_len * cfg_.hidden_dim, cfg_.hidden_dim}));
    Tensor b2 = Tensor::zeros({1, cfg_.hidden_dim});
    double a = 1.0 / std::sqrt(static_cast<double>(cfg_.hidden_dim));
    for (double& v : b2.values) v = rng.uniform(-a, a);
    p_b2 = params_.add("timeline.b2", std::move(b2));
}

EmbedContext::EmbedContext(Tape& tape, const FtmModel& model, const TemporalGraph& g)
    : tape_(tape), model_(model), g_(g),
      param_leaves_(model.params().size(), -1) {
    if (model.config().feature_dim != g.feature_dim()) {
        std::ostringstream os;
        os << "model expects link feature dimension " << model.config().feature_dim
           << ", graph has " << g.feature_dim();
        throw ConfigError(os.str());
    }
    if (g.has_node_features() && g.node_feature_dim() != model.config().hidden_dim) {
        std::ostringstream os;
        os << "node feature dimension " << g.node_feature_dim()
           << " must equal the hidden dimension " << model.config().hidden_dim;
        throw ConfigError(os.str());
    }
}

Var EmbedContext::param(std::size_t index) {
    std::int32_t& leaf = param_leaves_[index];
    if (leaf < 0) leaf = tape_.leaf(model_.params().at(index).value).id;
    return Var{&tape_, leaf};
}

void EmbedContext::bind_parameters(const std::vector<Var>& leaves) {
    if (leaves.size() != param_leaves_.size()) {
        throw ContractViolation("bind_parameters: expected " +
                                std::to_string(param_leaves_.size()) + " leaves, got " +
                                std::to_string(leaves.size()));
    }
    for (std::size_t i = 0; i < leaves.size(); ++i) param_leaves_[i] = leaves[i].id;
}

Var EmbedContext::zero_hidden() {
    if (!zero_hidden_.valid())
        zero_hidden_ = tape_.leaf(Tensor::zeros({1, model_.config().hidden_dim}));
    return zero_hidden_;
}

Var EmbedContext::time_encode(double dt) {
    std::uint64_t key = std::bit_cast<std::uint64_t>(dt);
    auto it = time_memo_.find(key);
    if (it != time_memo_.end()) return it->second;
    double inv = std::sqrt(1.0 / static_cast<double>(model_.config().time_dim));
    Var phi = scale(cos(add(scale(param(model_.p_omega), dt), param(model_.p_phase))), inv);
    time_memo_.emplace(key, phi);
    return phi;
}

Var EmbedContext::time_aware_feature(Var h_prev, double dt, const std::vector<double>& e) {
    const ModelConfig& cfg = model_.config();
    if (h_prev.value().cols() != cfg.hidden_dim) {
        throw ContractViolation("time_aware_feature: node row has width " +
                                std::to_string(h_prev.value().cols()) + ", expected " +
                                std::to_string(cfg.hidden_dim));
    }
    if (!e.empty() && e.size() != cfg.feature_dim) {
        throw ContractViolation("time_aware_feature: link features have width " +
                                std::to_string(e.size()) + ", expected " +
                                std::to_string(cfg.feature_dim));
    }
    Var feat = e.empty() ? tape_.leaf(Tensor::zeros({1, cfg.feature_dim}))
                         : tape_.leaf(Tensor::row(e));
    std::vector<Var> parts{h_prev, time_encode(dt), feat};
    return concat_cols(parts);
}

Var EmbedContext::frame_embed(const Frame& frame, const std::vector<Var>& neighbor_embeds,
                              Var target_embed, std::vector<Var>* alphas_out) {
    if (!frame.valid || frame.entries.empty()) return zero_hidden();
    if (neighbor_embeds.size() != frame.entries.size()) {
        throw ContractViolation("frame_embed: " + std::to_string(neighbor_embeds.size()) +
                                " neighbor embeddings for " +
                                std::to_string(frame.entries.size()) + " entries");
    }
    const ModelConfig& cfg = model_.config();

    // row 0: the target at the frame's reference time, no associated link
    Var z0 = time_aware_feature(target_embed, 0.0, {});
    std::vector<Var> rows;
    rows.reserve(frame.entries.size());
    for (std::size_t i = 0; i < frame.entries.size(); ++i) {
        const TemporalLink& l = g_.link(frame.entries[i]);
        rows.push_back(time_aware_feature(neighbor_embeds[i], frame.ref_time - l.timestamp,
                                          l.features));
    }
    Var keys_input = rows.size() == 1 ? rows[0] : concat_rows(rows);

    double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(cfg.head_dim()));
    std::vector<Var> y_parts;
    y_parts.push_back(z0);
    for (std::size_t r = 0; r < cfg.heads; ++r) {
        Var q = matmul(z0, param(model_.p_wq[r]));
        Var k = matmul(keys_input, param(model_.p_wk[r]));
        Var v = matmul(keys_input, param(model_.p_wv[r]));
        Var alpha = softmax_rows(scale(matmul(q, transpose(k)), inv_sqrt));
        if (alphas_out) alphas_out->push_back(alpha);
        y_parts.push_back(matmul(alpha, v));
    }
    Var y = concat_cols(y_parts);
    Var hidden = relu(add(matmul(y, param(model_.p_w0)), param(model_.p_b0)));
    return add(matmul(hidden, param(model_.p_w1)), param(model_.p_b1));
}

Var EmbedContext::node_embed(NodeId s, double t, std::size_t depth) {
    // depth 0 is time-independent, so all times share one cache slot
    EmbedKey key{s, depth == 0 ? 0 : std::bit_cast<std::uint64_t>(t),
                 static_cast<std::uint32_t>(depth)};
    auto it = embed_memo_.find(key);
    if (it != embed_memo_.end()) return it->second;

    Var out;
    if (depth == 0) {
        if (g_.has_node_features()) {
            out = tape_.leaf(Tensor::row(g_.node_features(s)));
        } else {
            out = zero_hidden();
        }
    } else {
        const ModelConfig& cfg = model_.config();
        Timeline tl = build_timeline(g_, s, t, cfg.frame_len, cfg.timeline_len);
        std::vector<Var> frame_vecs;
        frame_vecs.reserve(tl.frames.size());
        for (const Frame& f : tl.frames) {
            if (!f.valid) {
                frame_vecs.push_back(zero_hidden());
                continue;
            }
            std::vector<Var> nb;
            nb.reserve(f.entries.size());
            for (std::size_t idx : f.entries) {
                const TemporalLink& l = g_.link(idx);
                nb.push_back(node_embed(g_.other_endpoint(idx, s), l.timestamp, depth - 1));
            }
            Var target = node_embed(s, f.ref_time, depth - 1);
            frame_vecs.push_back(frame_embed(f, nb, target));
        }
        Var cat = frame_vecs.size() == 1 ? frame_vecs[0] : concat_cols(frame_vecs);
        out = add(matmul(cat, param(model_.p_w2)), param(model_.p_b2));
    }
    embed_memo_.emplace(key, out);
    return out;
}

Var EmbedContext::link_score(NodeId i, NodeId j, double t) {
    return dot(node_embed(i, t), node_embed(j, t));
}

std::vector<Tensor> EmbedContext::parameter_gradients(const std::vector<Tensor>& adjoints) const {
    std::vector<Tensor> grads;
    grads.reserve(param_leaves_.size());
    for (std::size_t i = 0; i < param_leaves_.size(); ++i) {
        if (param_leaves_[i] >= 0) {
            grads.push_back(adjoints[static_cast<std::size_t>(param_leaves_[i])]);
        } else {
            grads.push_back(Tensor::zeros(model_.params().at(i).value.shape));
        }
    }
    return grads;
}

} // namespace ftm
