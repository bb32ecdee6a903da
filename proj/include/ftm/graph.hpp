#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ftm/rng.hpp"

namespace ftm {

using NodeId = std::uint64_t;

/// One timestamped interaction between two nodes. Undirected semantics: the
/// link appears in both endpoints' adjacency.
struct TemporalLink {
    NodeId src = 0;
    NodeId dst = 0;
    double timestamp = 0.0;
    std::vector<double> features;
    int label = 0;          // binary state label from the data, 0 when absent
    std::size_t link_index = 0; // position in global chronological order
};

/// Immutable store of timestamped, feature-bearing links with per-node
/// chronological indices. Node ids are dense 0..n-1; the original ids from
/// the source file are kept for reporting.
class TemporalGraph {
public:
    /// Builds a graph from raw links. Links are stably sorted by timestamp
    /// (ties keep input order) and link_index is assigned in sorted order.
    /// Node ids must already be dense; node_count of 0 means "infer".
    static TemporalGraph from_links(std::vector<TemporalLink> links, std::size_t node_count = 0);

    /// Rows are `src,dst,timestamp,label,f1,...,fd`. Original node ids are
    /// remapped to dense ids in order of first appearance after sorting.
    static TemporalGraph load_csv(const std::string& path, bool has_header);

    std::size_t node_count() const { return node_count_; }
    std::size_t link_count() const { return links_.size(); }
    std::size_t feature_dim() const { return feature_dim_; }
    const std::vector<TemporalLink>& links() const { return links_; }
    const TemporalLink& link(std::size_t i) const { return links_[i]; }

    bool has_node_features() const { return !node_features_.empty(); }
    std::size_t node_feature_dim() const;
    const std::vector<double>& node_features(NodeId s) const { return node_features_[s]; }
    void set_node_features(std::vector<std::vector<double>> feats);

    /// Original id of a dense node id (identity when built from raw links).
    std::uint64_t original_id(NodeId dense) const { return original_ids_[dense]; }

    /// Links incident to s with timestamp strictly below t, most recent
    /// first; ties broken by higher link_index. Truncated to `limit` when
    /// limit > 0. Returns link indices into links().
    std::vector<std::size_t> neighbors_before(NodeId s, double t, std::size_t limit = 0) const;

    /// Number of links incident to s strictly before t.
    std::size_t degree_before(NodeId s, double t) const;

    /// All interaction timestamps of s in chronological order.
    std::vector<double> interaction_times(NodeId s) const;

    /// The endpoint of link i other than s (s itself for self-loops).
    NodeId other_endpoint(std::size_t i, NodeId s) const {
        const TemporalLink& l = links_[i];
        return l.src == s ? l.dst : l.src;
    }

    /// Largest Euclidean feature norm over all links.
    double max_feature_norm() const;

    /// Copy of this graph truncated to the first m links.
    TemporalGraph prefix(std::size_t m) const;

    /// Copy with one extra link appended (re-sorted; used by causality tests).
    TemporalGraph with_extra_link(TemporalLink extra) const;

    /// Distinct destination-side nodes, ascending. When `link_subset` is
    /// given only those links are scanned.
    std::vector<NodeId> destination_nodes() const;
    std::vector<NodeId> destination_nodes(const std::vector<std::size_t>& link_subset) const;

private:
    std::vector<TemporalLink> links_;
    std::vector<std::vector<std::size_t>> adjacency_; // ascending (timestamp, link_index)
    std::size_t node_count_ = 0;
    std::size_t feature_dim_ = 0;
    std::vector<std::vector<double>> node_features_;
    std::vector<std::uint64_t> original_ids_;

    void build_index();
};

struct DatasetSplit {
    std::vector<std::size_t> train; // link indices, chronological
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
    std::vector<NodeId> new_nodes;  // sorted, for inductive evaluation
    double validation_start_time = 0.0;
    double test_start_time = 0.0;

    bool is_new_node(NodeId s) const;
};

struct SplitRatios {
    double train = 0.70;
    double validation = 0.15;
    double test = 0.15;
};

/// Chronological split at the train/validation percentile boundaries.
/// `new_node_fraction` of all nodes are drawn (uniformly, seeded) from nodes
/// active in the test span; every link incident to them is removed from the
/// training set.
DatasetSplit chronological_split(const TemporalGraph& g, SplitRatios ratios = {},
                                 double new_node_fraction = 0.10, std::uint64_t seed = 0);

/// JSON manifest with boundary timestamps and new-node ids.
std::string split_manifest_json(const TemporalGraph& g, const DatasetSplit& split);

/// Adds one Gaussian direction per link, rescaled so each noise vector's
/// Euclidean norm is exactly intensity * max feature norm of g. Topology,
/// timestamps and labels are untouched; intensity 0 returns a bit-identical
/// copy.
TemporalGraph inject_noise(const TemporalGraph& g, double intensity, std::uint64_t seed);

/// Periodic-bipartite synthetic family: users interact with a preferred item
/// with probability p, with a uniformly random other item otherwise;
/// inter-arrival times are exponential. Link features are the item's
/// signature vector plus small Gaussian noise; the label marks users whose
/// preferred item is item 0 (a stable per-user state).
struct SynthSpec {
    std::size_t users = 20;
    std::size_t items = 5;
    std::size_t links = 400;
    std::size_t feature_dim = 8;
    double p_preferred = 0.9;
    double noise_sigma = 0.05;
    double rate = 1.0; // inter-arrival rate
    std::uint64_t seed = 0;
};

struct SynthResult {
    TemporalGraph graph;
    std::vector<NodeId> preferred; // user dense id -> item dense id
    SynthSpec spec;
};

SynthResult synth_generate(const SynthSpec& spec);

/// Writes graph links in the ingestion CSV format (17 significant digits).
void write_csv(const TemporalGraph& g, const std::string& path, bool header = true);

/// Ground-truth sidecar for a synthetic dataset.
std::string synth_sidecar_json(const SynthResult& result);

} // namespace ftm
