#include "ftm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "ftm/errors.hpp"

namespace ftm {

double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) {
        throw ContractViolation("average_precision: " + std::to_string(scores.size()) +
                                " scores for " + std::to_string(labels.size()) + " labels");
    }
    std::size_t positives = 0;
    for (int l : labels) positives += l != 0 ? 1 : 0;
    if (positives == 0) throw EvalError("average precision undefined without positive labels");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&scores](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double ap = 0.0;
    std::size_t hits = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (labels[order[rank]] != 0) {
            ++hits;
            ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
        }
    }
    return ap / static_cast<double>(positives);
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) {
        throw ContractViolation("roc_auc: " + std::to_string(scores.size()) + " scores for " +
                                std::to_string(labels.size()) + " labels");
    }
    std::size_t positives = 0;
    for (int l : labels) positives += l != 0 ? 1 : 0;
    std::size_t negatives = scores.size() - positives;
    if (positives == 0 || negatives == 0) {
        throw EvalError("AUC undefined with a single class");
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // midranks over tie groups, then the Mann-Whitney statistic
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            if (labels[order[k]] != 0) rank_sum_pos += midrank;
        i = j + 1;
    }
    double np = static_cast<double>(positives), nn = static_cast<double>(negatives);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

const char* to_string(EvalSetting setting) {
    return setting == EvalSetting::Transductive ? "transductive" : "inductive";
}

double link_prediction_ap(const FtmModel& model, const TemporalGraph& g,
                          const std::vector<std::size_t>& links,
                          const std::vector<NodeId>& negative_universe, std::uint64_t seed) {
    if (links.empty()) throw EvalError("no links to evaluate");
    RngStream rng(seed, /*stream=*/5);
    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(links.size() * 2);
    labels.reserve(links.size() * 2);
    for (std::size_t idx : links) {
        const TemporalLink& l = g.link(idx);
        NodeId q = sample_negatives(rng, negative_universe, l.dst, 1)[0];
        Tape tape;
        EmbedContext ctx(tape, model, g);
        scores.push_back(ctx.link_score(l.src, l.dst, l.timestamp).scalar());
        labels.push_back(1);
        scores.push_back(ctx.link_score(l.src, q, l.timestamp).scalar());
        labels.push_back(0);
    }
    return average_precision(scores, labels);
}

EvalReport eval_link_prediction(const FtmModel& model, const TemporalGraph& g,
                                const DatasetSplit& split, EvalSetting setting,
                                std::uint64_t seed) {
    std::vector<bool> observed(g.node_count(), false);
    for (std::size_t idx : split.train) {
        observed[g.link(idx).src] = true;
        observed[g.link(idx).dst] = true;
    }

    std::vector<std::size_t> eval_links;
    for (std::size_t idx : split.test) {
        const TemporalLink& l = g.link(idx);
        bool keep = setting == EvalSetting::Transductive
                        ? observed[l.src] && observed[l.dst]
                        : split.is_new_node(l.src) || split.is_new_node(l.dst);
        if (keep) eval_links.push_back(idx);
    }
    if (eval_links.empty()) {
        throw EvalError(std::string("no test links match the ") + to_string(setting) +
                        " setting");
    }

    std::vector<NodeId> universe;
    if (setting == EvalSetting::Transductive) {
        for (NodeId s : g.destination_nodes())
            if (observed[s]) universe.push_back(s);
    } else {
        universe = g.destination_nodes();
    }

    EvalReport report;
    report.task = "link_prediction";
    report.setting = to_string(setting);
    report.metric = "AP";
    report.seed = seed;
    report.value = link_prediction_ap(model, g, eval_links, universe, seed);
    return report;
}

namespace {

struct Instances {
    std::vector<std::vector<double>> x; // embeddings
    std::vector<int> y;
};

Instances embed_labeled_instances(const FtmModel& model, const TemporalGraph& g,
                                  std::size_t max_instances) {
    std::size_t first = 0;
    if (max_instances > 0 && g.link_count() > max_instances)
        first = g.link_count() - max_instances;
    Instances inst;
    for (std::size_t idx = first; idx < g.link_count(); ++idx) {
        const TemporalLink& l = g.link(idx);
        Tape tape;
        EmbedContext ctx(tape, model, g);
        inst.x.push_back(ctx.node_embed(l.src, l.timestamp).value().values);
        inst.y.push_back(l.label);
    }
    return inst;
}

bool both_classes(const std::vector<int>& y, std::size_t from, std::size_t to) {
    bool pos = false, neg = false;
    for (std::size_t i = from; i < to; ++i) (y[i] != 0 ? pos : neg) = true;
    return pos && neg;
}

} // namespace

FinetuneResult fit_affine_classifier(const std::vector<std::vector<double>>& embeddings,
                                     const std::vector<int>& labels, FinetuneOptions options) {
    if (embeddings.size() != labels.size()) {
        throw ContractViolation("classifier: one label per embedding required");
    }
    Instances inst;
    inst.x = embeddings;
    inst.y = labels;
    std::size_t m = inst.x.size();
    std::size_t n_train = static_cast<std::size_t>(options.train_fraction *
                                                   static_cast<double>(m));
    if (n_train == 0 || n_train >= m) {
        throw EvalError("node classification needs both a train and a test part");
    }
    if (!both_classes(inst.y, 0, m)) throw EvalError("labels are single-class");
    if (!both_classes(inst.y, 0, n_train)) {
        throw EvalError("training instances are single-class");
    }
    if (!both_classes(inst.y, n_train, m)) {
        throw EvalError("held-out instances are single-class");
    }

    std::size_t dim = inst.x[0].size();
    Tensor xtrain = Tensor::zeros({n_train, dim});
    Tensor ypos = Tensor::zeros({n_train, 1});
    Tensor yneg = Tensor::zeros({n_train, 1});
    for (std::size_t i = 0; i < n_train; ++i) {
        for (std::size_t d = 0; d < dim; ++d) xtrain.at(i, d) = inst.x[i][d];
        ypos.at(i, 0) = inst.y[i] != 0 ? 1.0 : 0.0;
        yneg.at(i, 0) = inst.y[i] != 0 ? 0.0 : 1.0;
    }

    ParameterStore clf;
    std::size_t pw = clf.add("clf.W", Tensor::zeros({dim, 1}));
    std::size_t pb = clf.add("clf.b", Tensor::zeros({1, 1}));
    Adam opt(clf, options.learning_rate);
    for (std::size_t iter = 0; iter < options.iterations; ++iter) {
        Tape tape;
        Var x = tape.leaf(xtrain);
        Var w = tape.leaf(clf.at(pw).value);
        Var b = tape.leaf(clf.at(pb).value);
        Var z = add_rowvec(matmul(x, w), b);
        Var ll = add(mul(tape.leaf(ypos), log(sigmoid(z))),
                     mul(tape.leaf(yneg), log(sigmoid(neg(z)))));
        Var loss = scale(mean_all(ll), -1.0);
        std::vector<Tensor> adj = tape.backward(loss);
        opt.step(clf, {adj[static_cast<std::size_t>(w.id)],
                       adj[static_cast<std::size_t>(b.id)]});
    }

    const Tensor& w = clf.at(pw).value;
    double b = clf.at(pb).value.values[0];
    std::vector<double> scores;
    std::vector<int> test_labels;
    for (std::size_t i = n_train; i < m; ++i) {
        double z = b;
        for (std::size_t d = 0; d < dim; ++d) z += inst.x[i][d] * w.values[d];
        scores.push_back(z);
        test_labels.push_back(inst.y[i]);
    }

    FinetuneResult result;
    result.auc = roc_auc(scores, test_labels);
    result.train_instances = n_train;
    result.test_instances = m - n_train;
    return result;
}

FinetuneResult finetune_node_classifier(const FtmModel& model, const TemporalGraph& g,
                                        std::uint64_t seed, FinetuneOptions options) {
    (void)seed; // embedding and fit are both deterministic
    if (g.link_count() == 0) throw EvalError("no labeled interactions");
    Instances inst = embed_labeled_instances(model, g, options.max_instances);
    return fit_affine_classifier(inst.x, inst.y, options);
}

AttackSweep attack_eval(const FtmModel& model, const TemporalGraph& g, AttackSweep sweep,
                        std::uint64_t seed, FinetuneOptions options) {
    if (sweep.intensities.empty()) throw ContractViolation("attack sweep has no intensities");
    if (sweep.repetitions < 1) throw ContractViolation("attack sweep needs repetitions >= 1");
    sweep.auc.clear();
    for (std::size_t ii = 0; ii < sweep.intensities.size(); ++ii) {
        double intensity = sweep.intensities[ii];
        if (intensity == 0.0) {
            sweep.auc.push_back(finetune_node_classifier(model, g, seed, options).auc);
            continue;
        }
        double sum = 0.0;
        for (std::size_t r = 0; r < sweep.repetitions; ++r) {
            std::uint64_t noise_seed = seed + 7919 * (ii * sweep.repetitions + r + 1);
            TemporalGraph noisy = inject_noise(g, intensity, noise_seed);
            sum += finetune_node_classifier(model, noisy, seed, options).auc;
        }
        sweep.auc.push_back(sum / static_cast<double>(sweep.repetitions));
    }
    return sweep;
}

TransferResult transfer_eval(const FtmModel& model, const TemporalGraph& target,
                             SplitRatios ratios, double new_node_fraction,
                             std::uint64_t split_seed, std::uint64_t eval_seed) {
    TransferResult result;
    result.source_dim = model.config().feature_dim;
    result.target_dim = target.feature_dim();

    const TemporalGraph* eval_graph = &target;
    TemporalGraph adapted;
    if (target.feature_dim() != model.config().feature_dim) {
        result.features_adapted = true;
        std::vector<TemporalLink> links = target.links();
        for (TemporalLink& l : links) l.features.resize(model.config().feature_dim, 0.0);
        adapted = TemporalGraph::from_links(std::move(links), target.node_count());
        eval_graph = &adapted;
    }

    DatasetSplit split = chronological_split(*eval_graph, ratios, new_node_fraction, split_seed);
    result.report = eval_link_prediction(model, *eval_graph, split,
                                         EvalSetting::Transductive, eval_seed);
    result.report.task = "transfer";
    return result;
}

StabilityResult embedding_stability(const FtmModel& model, const TemporalGraph& g,
                                    const std::vector<NodeId>& nodes) {
    std::vector<std::vector<double>> times;
    std::vector<NodeId> kept;
    for (NodeId s : nodes) {
        std::vector<double> ts = g.interaction_times(s);
        if (ts.size() >= 2) {
            kept.push_back(s);
            times.push_back(std::move(ts));
        }
    }
    return embedding_stability(model, g, kept, times);
}

StabilityResult embedding_stability(const FtmModel& model, const TemporalGraph& g,
                                    const std::vector<NodeId>& nodes,
                                    const std::vector<std::vector<double>>& times) {
    if (nodes.size() != times.size()) {
        throw ContractViolation("embedding_stability: one time list per node required");
    }
    StabilityResult result;
    double sum = 0.0;
    for (std::size_t ni = 0; ni < nodes.size(); ++ni) {
        if (times[ni].size() < 2) {
            throw ContractViolation("embedding_stability: need at least 2 times per node");
        }
        Tape tape;
        EmbedContext ctx(tape, model, g);
        std::vector<double> prev;
        for (double t : times[ni]) {
            std::vector<double> cur = ctx.node_embed(nodes[ni], t).value().values;
            if (!prev.empty()) {
                double dot = 0.0, na = 0.0, nb = 0.0;
                for (std::size_t d = 0; d < cur.size(); ++d) {
                    dot += prev[d] * cur[d];
                    na += prev[d] * prev[d];
                    nb += cur[d] * cur[d];
                }
                if (na == 0.0 || nb == 0.0) {
                    ++result.skipped;
                } else {
                    sum += dot / (std::sqrt(na) * std::sqrt(nb));
                    ++result.pairs;
                }
            }
            prev = std::move(cur);
        }
    }
    if (result.pairs == 0) throw EvalError("no successive embedding pairs to compare");
    result.mean_cosine = sum / static_cast<double>(result.pairs);
    return result;
}

std::vector<SweepPoint> case_study_sweep(
    SweepAxis axis, const TemporalGraph& g, const DatasetSplit& split, ModelConfig base,
    TrainConfig train, EvalSetting setting, std::uint64_t seed,
    const std::vector<std::pair<std::size_t, std::size_t>>& neighborhood_grid,
    const std::vector<double>& fraction_grid) {
    std::vector<SweepPoint> points;
    std::size_t grid_size = axis == SweepAxis::NeighborhoodScale ? neighborhood_grid.size()
                                                                 : fraction_grid.size();
    for (std::size_t gi = 0; gi < grid_size; ++gi) {
        SweepPoint point;
        ModelConfig cfg = base;
        DatasetSplit sub = split;
        if (axis == SweepAxis::NeighborhoodScale) {
            cfg.layers = neighborhood_grid[gi].first;
            cfg.frame_len = neighborhood_grid[gi].second;
            point.layers = cfg.layers;
            point.frame_len = cfg.frame_len;
        } else {
            double frac = fraction_grid[gi];
            point.fraction = frac;
            point.layers = cfg.layers;
            point.frame_len = cfg.frame_len;
            sub.train.resize(static_cast<std::size_t>(
                frac * static_cast<double>(split.train.size())));
            sub.validation.resize(static_cast<std::size_t>(
                frac * static_cast<double>(split.validation.size())));
        }
        point.train_links = sub.train.size();

        std::uint64_t point_seed = seed + 1000003ULL * (gi + 1);
        FtmModel model(cfg, point_seed);
        TrainConfig tc = train;
        tc.seed = point_seed;
        Trainer trainer(model, g, sub, tc);
        FitResult fit = trainer.fit();
        model.params() = fit.best_params;
        point.ap = eval_link_prediction(model, g, sub, setting, point_seed).value;
        points.push_back(point);
    }
    return points;
}

std::string sweep_table_text(SweepAxis axis, const std::vector<SweepPoint>& points) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    if (axis == SweepAxis::NeighborhoodScale) {
        static const char* kScaleNames[] = {"S", "M", "L", "XL"};
        os << std::setw(6) << "scale" << std::setw(8) << "layers" << std::setw(10)
           << "frame_len" << std::setw(10) << "AP" << "\n";
        for (std::size_t i = 0; i < points.size(); ++i) {
            const char* name = i < 4 ? kScaleNames[i] : "-";
            os << std::setw(6) << name << std::setw(8) << points[i].layers << std::setw(10)
               << points[i].frame_len << std::setw(10) << points[i].ap << "\n";
        }
    } else {
        os << std::setw(10) << "fraction" << std::setw(12) << "train_links" << std::setw(10)
           << "AP" << "\n";
        for (const SweepPoint& p : points) {
            os << std::setw(10) << p.fraction << std::setw(12) << p.train_links
               << std::setw(10) << p.ap << "\n";
        }
    }
    return os.str();
}

} // namespace ftm
