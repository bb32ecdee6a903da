#include "ftm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ftm/errors.hpp"
#include "json.hpp"

namespace ftm {

namespace {

double feature_norm(const std::vector<double>& f) {
    double s = 0.0;
    for (double v : f) s += v * v;
    return std::sqrt(s);
}

} // namespace

TemporalGraph TemporalGraph::from_links(std::vector<TemporalLink> links, std::size_t node_count) {
    TemporalGraph g;
    std::stable_sort(links.begin(), links.end(),
                     [](const TemporalLink& a, const TemporalLink& b) {
                         return a.timestamp < b.timestamp;
                     });
    for (std::size_t i = 0; i < links.size(); ++i) links[i].link_index = i;
    g.links_ = std::move(links);

    std::size_t max_node = 0;
    for (const TemporalLink& l : g.links_) {
        max_node = std::max({max_node, static_cast<std::size_t>(l.src),
                             static_cast<std::size_t>(l.dst)});
        if (l.timestamp < 0.0) throw ValidationError("negative timestamp in link list");
    }
    g.node_count_ = std::max(node_count, g.links_.empty() ? 0 : max_node + 1);
    g.feature_dim_ = g.links_.empty() ? 0 : g.links_[0].features.size();
    for (const TemporalLink& l : g.links_) {
        if (l.features.size() != g.feature_dim_) {
            throw ValidationError("inconsistent link feature dimensions");
        }
    }
    g.original_ids_.resize(g.node_count_);
    for (std::size_t i = 0; i < g.node_count_; ++i) g.original_ids_[i] = i;
    g.build_index();
    return g;
}

TemporalGraph TemporalGraph::load_csv(const std::string& path, bool has_header) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open dataset: " + path);

    struct Row {
        std::uint64_t src, dst;
        double timestamp;
        int label;
        std::vector<double> features;
    };
    std::vector<Row> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t feature_dim = 0;
    bool first_data_row = true;
    while (std::getline(is, line)) {
        ++line_no;
        if (line_no == 1 && has_header) continue;
        if (line.empty()) continue;
        Row row;
        std::size_t col = 0;
        std::size_t pos = 0;
        std::vector<double> nums;
        while (pos <= line.size()) {
            std::size_t comma = line.find(',', pos);
            std::string field = line.substr(pos, comma == std::string::npos ? std::string::npos
                                                                            : comma - pos);
            try {
                switch (col) {
                    case 0: row.src = std::stoull(field); break;
                    case 1: row.dst = std::stoull(field); break;
                    case 2: row.timestamp = std::stod(field); break;
                    case 3: row.label = std::stod(field) != 0.0 ? 1 : 0; break;
                    default: row.features.push_back(std::stod(field)); break;
                }
            } catch (const std::exception&) {
                std::ostringstream os;
                os << path << ":" << line_no << ": cannot parse field " << col + 1 << " '"
                   << field << "'";
                throw ParseError(os.str());
            }
            ++col;
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (col < 4) {
            std::ostringstream os;
            os << path << ":" << line_no << ": expected at least 4 columns, got " << col;
            throw ParseError(os.str());
        }
        if (row.timestamp < 0.0) {
            std::ostringstream os;
            os << path << ":" << line_no << ": negative timestamp " << row.timestamp;
            throw ValidationError(os.str());
        }
        if (first_data_row) {
            feature_dim = row.features.size();
            first_data_row = false;
        } else if (row.features.size() != feature_dim) {
            std::ostringstream os;
            os << path << ":" << line_no << ": ragged feature row, expected " << feature_dim
               << " features, got " << row.features.size();
            throw ParseError(os.str());
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ValidationError("dataset has no links: " + path);

    // stable sort by timestamp keeps input row order on ties
    std::vector<std::size_t> order(rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&rows](std::size_t a, std::size_t b) {
        return rows[a].timestamp < rows[b].timestamp;
    });

    TemporalGraph g;
    std::unordered_map<std::uint64_t, NodeId> remap;
    g.links_.reserve(rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        Row& row = rows[order[i]];
        auto dense = [&](std::uint64_t orig) {
            auto it = remap.find(orig);
            if (it != remap.end()) return it->second;
            NodeId id = static_cast<NodeId>(g.original_ids_.size());
            remap.emplace(orig, id);
            g.original_ids_.push_back(orig);
            return id;
        };
        TemporalLink l;
        l.src = dense(row.src);
        l.dst = dense(row.dst);
        l.timestamp = row.timestamp;
        l.label = row.label;
        l.features = std::move(row.features);
        l.link_index = i;
        g.links_.push_back(std::move(l));
    }
    g.node_count_ = g.original_ids_.size();
    g.feature_dim_ = feature_dim;
    g.build_index();
    return g;
}

void TemporalGraph::build_index() {
    adjacency_.assign(node_count_, {});
    for (std::size_t i = 0; i < links_.size(); ++i) {
        const TemporalLink& l = links_[i];
        adjacency_[l.src].push_back(i);
        if (l.dst != l.src) adjacency_[l.dst].push_back(i);
    }
    // links_ is chronological, so each adjacency list is already ascending by
    // (timestamp, link_index)
}

std::size_t TemporalGraph::node_feature_dim() const {
    return node_features_.empty() ? 0 : node_features_[0].size();
}

void TemporalGraph::set_node_features(std::vector<std::vector<double>> feats) {
    if (feats.size() != node_count_) {
        throw ValidationError("node feature table size mismatches node count");
    }
    node_features_ = std::move(feats);
}

std::vector<std::size_t> TemporalGraph::neighbors_before(NodeId s, double t,
                                                         std::size_t limit) const {
    if (s >= node_count_) {
        std::ostringstream os;
        os << "unknown node id " << s << " (graph has " << node_count_ << " nodes)";
        throw ContractViolation(os.str());
    }
    const std::vector<std::size_t>& adj = adjacency_[s];
    // first position with timestamp >= t
    auto it = std::lower_bound(adj.begin(), adj.end(), t, [this](std::size_t idx, double tt) {
        return links_[idx].timestamp < tt;
    });
    std::size_t count = static_cast<std::size_t>(it - adj.begin());
    std::size_t take = (limit > 0 && limit < count) ? limit : count;
    std::vector<std::size_t> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.push_back(adj[count - 1 - i]);
    return out;
}

std::size_t TemporalGraph::degree_before(NodeId s, double t) const {
    if (s >= node_count_) {
        std::ostringstream os;
        os << "unknown node id " << s << " (graph has " << node_count_ << " nodes)";
        throw ContractViolation(os.str());
    }
    const std::vector<std::size_t>& adj = adjacency_[s];
    auto it = std::lower_bound(adj.begin(), adj.end(), t, [this](std::size_t idx, double tt) {
        return links_[idx].timestamp < tt;
    });
    return static_cast<std::size_t>(it - adj.begin());
}

std::vector<double> TemporalGraph::interaction_times(NodeId s) const {
    std::vector<double> out;
    out.reserve(adjacency_[s].size());
    for (std::size_t idx : adjacency_[s]) out.push_back(links_[idx].timestamp);
    return out;
}

double TemporalGraph::max_feature_norm() const {
    double mx = 0.0;
    for (const TemporalLink& l : links_) mx = std::max(mx, feature_norm(l.features));
    return mx;
}

TemporalGraph TemporalGraph::prefix(std::size_t m) const {
    std::vector<TemporalLink> sub(links_.begin(),
                                  links_.begin() + static_cast<std::ptrdiff_t>(std::min(m, links_.size())));
    TemporalGraph g = from_links(std::move(sub), node_count_);
    g.original_ids_ = original_ids_;
    g.node_features_ = node_features_;
    return g;
}

TemporalGraph TemporalGraph::with_extra_link(TemporalLink extra) const {
    std::vector<TemporalLink> all = links_;
    all.push_back(std::move(extra));
    TemporalGraph g = from_links(std::move(all), node_count_);
    g.original_ids_ = original_ids_;
    if (g.node_count_ > g.original_ids_.size()) {
        for (std::size_t i = g.original_ids_.size(); i < g.node_count_; ++i)
            g.original_ids_.push_back(i);
    }
    g.node_features_ = node_features_;
    return g;
}

std::vector<NodeId> TemporalGraph::destination_nodes() const {
    std::vector<std::size_t> all(links_.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return destination_nodes(all);
}

std::vector<NodeId> TemporalGraph::destination_nodes(
    const std::vector<std::size_t>& link_subset) const {
    std::vector<bool> seen(node_count_, false);
    for (std::size_t idx : link_subset) seen[links_[idx].dst] = true;
    std::vector<NodeId> out;
    for (NodeId s = 0; s < node_count_; ++s)
        if (seen[s]) out.push_back(s);
    return out;
}

bool DatasetSplit::is_new_node(NodeId s) const {
    return std::binary_search(new_nodes.begin(), new_nodes.end(), s);
}

DatasetSplit chronological_split(const TemporalGraph& g, SplitRatios ratios,
                                 double new_node_fraction, std::uint64_t seed) {
    double sum = ratios.train + ratios.validation + ratios.test;
    if (std::abs(sum - 1.0) > 1e-9) {
        std::ostringstream os;
        os << "split ratios must sum to 1, got " << sum;
        throw ContractViolation(os.str());
    }
    std::size_t m = g.link_count();
    std::size_t n_train = static_cast<std::size_t>(ratios.train * static_cast<double>(m));
    std::size_t n_trainval =
        static_cast<std::size_t>((ratios.train + ratios.validation) * static_cast<double>(m));
    if (n_train == 0 || n_trainval <= n_train || n_trainval >= m) {
        std::ostringstream os;
        os << "split produces an empty partition (" << n_train << "/" << n_trainval - n_train
           << "/" << m - n_trainval << " of " << m << " links)";
        throw ValidationError(os.str());
    }

    DatasetSplit split;
    split.validation_start_time = g.link(n_train).timestamp;
    split.test_start_time = g.link(n_trainval).timestamp;

    // new nodes: a fraction of all nodes, drawn from nodes active in the test span
    std::vector<NodeId> test_nodes;
    {
        std::vector<bool> seen(g.node_count(), false);
        for (std::size_t i = n_trainval; i < m; ++i) {
            seen[g.link(i).src] = true;
            seen[g.link(i).dst] = true;
        }
        for (NodeId s = 0; s < g.node_count(); ++s)
            if (seen[s]) test_nodes.push_back(s);
    }
    std::size_t want = static_cast<std::size_t>(
        std::llround(new_node_fraction * static_cast<double>(g.node_count())));
    want = std::min(want, test_nodes.size());
    RngStream rng(seed, /*stream=*/1);
    for (std::size_t i = 0; i + 1 < test_nodes.size() && i < want; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(test_nodes.size() - i));
        std::swap(test_nodes[i], test_nodes[j]);
    }
    split.new_nodes.assign(test_nodes.begin(),
                           test_nodes.begin() + static_cast<std::ptrdiff_t>(want));
    std::sort(split.new_nodes.begin(), split.new_nodes.end());

    for (std::size_t i = 0; i < n_train; ++i) {
        const TemporalLink& l = g.link(i);
        if (split.is_new_node(l.src) || split.is_new_node(l.dst)) continue;
        split.train.push_back(i);
    }
    for (std::size_t i = n_train; i < n_trainval; ++i) split.validation.push_back(i);
    for (std::size_t i = n_trainval; i < m; ++i) split.test.push_back(i);
    if (split.train.empty()) throw ValidationError("split produces an empty training partition");
    return split;
}

std::string split_manifest_json(const TemporalGraph& g, const DatasetSplit& split) {
    nlohmann::json j;
    j["validation_start_time"] = split.validation_start_time;
    j["test_start_time"] = split.test_start_time;
    j["train_links"] = split.train.size();
    j["validation_links"] = split.validation.size();
    j["test_links"] = split.test.size();
    j["new_nodes"] = split.new_nodes;
    std::vector<std::uint64_t> orig;
    orig.reserve(split.new_nodes.size());
    for (NodeId s : split.new_nodes) orig.push_back(g.original_id(s));
    j["new_nodes_original"] = orig;
    return j.dump(2);
}

TemporalGraph inject_noise(const TemporalGraph& g, double intensity, std::uint64_t seed) {
    if (intensity < 0.0 || intensity > 0.5) {
        std::ostringstream os;
        os << "noise intensity must be in [0, 0.5], got " << intensity;
        throw ContractViolation(os.str());
    }
    if (intensity == 0.0) return g;

    double target = intensity * g.max_feature_norm();
    RngStream rng(seed, /*stream=*/2);
    std::vector<TemporalLink> noisy = g.links();
    for (TemporalLink& l : noisy) {
        std::vector<double> dir(l.features.size());
        double norm = 0.0;
        do {
            for (double& v : dir) v = rng.gaussian();
            norm = feature_norm(dir);
        } while (norm == 0.0);
        for (std::size_t i = 0; i < dir.size(); ++i) l.features[i] += dir[i] * (target / norm);
    }
    TemporalGraph out = TemporalGraph::from_links(std::move(noisy), g.node_count());
    return out;
}

SynthResult synth_generate(const SynthSpec& spec) {
    if (spec.users == 0 || spec.items == 0 || spec.links == 0 || spec.feature_dim == 0) {
        throw ValidationError("synthetic spec needs at least one user, item, link and feature");
    }
    RngStream rng(spec.seed, /*stream=*/3);

    // item signatures: unit-norm gaussian directions
    std::vector<std::vector<double>> signatures(spec.items, std::vector<double>(spec.feature_dim));
    for (auto& sig : signatures) {
        double norm = 0.0;
        do {
            for (double& v : sig) v = rng.gaussian();
            norm = feature_norm(sig);
        } while (norm == 0.0);
        for (double& v : sig) v /= norm;
    }

    std::vector<NodeId> preferred(spec.users);
    for (NodeId u = 0; u < spec.users; ++u)
        preferred[u] = spec.users + rng.below(spec.items);

    std::vector<TemporalLink> links;
    links.reserve(spec.links);
    double t = 0.0;
    for (std::size_t i = 0; i < spec.links; ++i) {
        t += rng.exponential(spec.rate);
        NodeId user = rng.below(spec.users);
        NodeId item;
        if (spec.items == 1 || rng.uniform01() < spec.p_preferred) {
            item = preferred[user];
        } else {
            // uniform over the items other than the preferred one
            std::uint64_t r = rng.below(spec.items - 1);
            NodeId candidate = spec.users + r;
            item = candidate >= preferred[user] ? candidate + 1 : candidate;
        }
        TemporalLink l;
        l.src = user;
        l.dst = item;
        l.timestamp = t;
        l.label = preferred[user] == spec.users ? 1 : 0; // user prefers item 0
        l.features.resize(spec.feature_dim);
        const std::vector<double>& sig = signatures[item - spec.users];
        for (std::size_t d = 0; d < spec.feature_dim; ++d)
            l.features[d] = sig[d] + spec.noise_sigma * rng.gaussian();
        links.push_back(std::move(l));
    }

    SynthResult result;
    result.graph = TemporalGraph::from_links(std::move(links), spec.users + spec.items);
    result.preferred = std::move(preferred);
    result.spec = spec;
    return result;
}

void write_csv(const TemporalGraph& g, const std::string& path, bool header) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw ParseError("cannot open output file: " + path);
    if (header) {
        os << "src,dst,timestamp,label";
        for (std::size_t d = 0; d < g.feature_dim(); ++d) os << ",f" << d;
        os << "\n";
    }
    char buf[32];
    for (const TemporalLink& l : g.links()) {
        os << g.original_id(l.src) << "," << g.original_id(l.dst) << ",";
        std::snprintf(buf, sizeof buf, "%.17g", l.timestamp);
        os << buf << "," << l.label;
        for (double f : l.features) {
            std::snprintf(buf, sizeof buf, "%.17g", f);
            os << "," << buf;
        }
        os << "\n";
    }
    if (!os) throw ParseError("write failed: " + path);
}

std::string synth_sidecar_json(const SynthResult& result) {
    nlohmann::json j;
    j["users"] = result.spec.users;
    j["items"] = result.spec.items;
    j["links"] = result.spec.links;
    j["feature_dim"] = result.spec.feature_dim;
    j["p_preferred"] = result.spec.p_preferred;
    j["seed"] = result.spec.seed;
    nlohmann::json pref = nlohmann::json::object();
    for (NodeId u = 0; u < result.preferred.size(); ++u)
        pref[std::to_string(u)] = result.preferred[u];
    j["preferred"] = pref;
    return j.dump(2);
}

} // namespace ftm
