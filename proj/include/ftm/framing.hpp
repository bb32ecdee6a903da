#pragma once

#include <string>
#include <vector>

#include "ftm/graph.hpp"

namespace ftm {

/// One temporal neighborhood: the k most recent links of a node strictly
/// before ref_time. A frame is invalid when its reference time could not be
/// derived or it contains no links; invalid frames contribute zero vectors
/// downstream.
struct Frame {
    NodeId node = 0;
    double ref_time = 0.0;
    bool valid = false;
    std::vector<std::size_t> entries; // link indices, most recent first

    bool operator==(const Frame& other) const;
};

/// Ordered overlapping frames, oldest first; the last frame sits at the
/// query time. The reference-time recursion steps back by half a frame:
/// t_{j-1} is the timestamp of the (k/2)-th most recent link before t_j.
struct Timeline {
    NodeId node = 0;
    std::size_t target_length = 0;
    std::vector<Frame> frames; // size target_length, oldest first
    std::size_t valid_count = 0;

    bool operator==(const Timeline& other) const;
};

/// The min(k, history) most recent links of s strictly before t.
Frame extract_frame(const TemporalGraph& g, NodeId s, double t, std::size_t k);

/// Timeline of n frames ending at t. k must be even (the hop is k/2); the
/// recursion stops once fewer than k/2 links remain and the missing leading
/// frames stay invalid.
Timeline build_timeline(const TemporalGraph& g, NodeId s, double t, std::size_t k, std::size_t n);

/// Reference implementation of build_timeline using nothing but linear scans
/// over the raw link list. Test oracle; quadratic, do not use in hot paths.
Timeline oracle_timeline(const TemporalGraph& g, NodeId s, double t, std::size_t k,
                         std::size_t n);

/// JSON rendering for the inspect-timeline debug command.
std::string timeline_to_json(const TemporalGraph& g, const Timeline& tl);

} // namespace ftm
