#include "ftm/framing.hpp"

#include <algorithm>

#include "ftm/errors.hpp"
#include "json.hpp"

namespace ftm {

bool Frame::operator==(const Frame& other) const {
    if (node != other.node || valid != other.valid) return false;
    if (!valid) return true;
    return ref_time == other.ref_time && entries == other.entries;
}

bool Timeline::operator==(const Timeline& other) const {
    return node == other.node && target_length == other.target_length &&
           valid_count == other.valid_count && frames == other.frames;
}

Frame extract_frame(const TemporalGraph& g, NodeId s, double t, std::size_t k) {
    Frame f;
    f.node = s;
    f.ref_time = t;
    f.entries = g.neighbors_before(s, t, k);
    f.valid = !f.entries.empty();
    return f;
}

Timeline build_timeline(const TemporalGraph& g, NodeId s, double t, std::size_t k,
                        std::size_t n) {
    if (k < 2 || k % 2 != 0) {
        throw ConfigError("frame length must be even and at least 2, got " + std::to_string(k));
    }
    if (n < 1) throw ConfigError("timeline length must be at least 1");
    std::size_t hop = k / 2;

    Timeline tl;
    tl.node = s;
    tl.target_length = n;
    tl.frames.assign(n, Frame{s, 0.0, false, {}});

    double ref = t;
    for (std::size_t j = n; j-- > 0;) {
        tl.frames[j] = extract_frame(g, s, ref, k);
        if (j == 0) break;
        // t_{j-1} = timestamp of the (k/2)-th most recent link before t_j
        std::vector<std::size_t> recent = g.neighbors_before(s, ref, hop);
        if (recent.size() < hop) break; // history exhausted
        ref = g.link(recent[hop - 1]).timestamp;
    }
    for (const Frame& f : tl.frames)
        if (f.valid) ++tl.valid_count;
    return tl;
}

namespace {

// Most recent `limit` links of s strictly before t, by scanning every link.
std::vector<std::size_t> scan_neighbors(const TemporalGraph& g, NodeId s, double t,
                                        std::size_t limit) {
    std::vector<std::size_t> hits;
    for (std::size_t i = 0; i < g.link_count(); ++i) {
        const TemporalLink& l = g.link(i);
        if ((l.src == s || l.dst == s) && l.timestamp < t) hits.push_back(i);
    }
    std::sort(hits.begin(), hits.end(), [&g](std::size_t a, std::size_t b) {
        if (g.link(a).timestamp != g.link(b).timestamp)
            return g.link(a).timestamp > g.link(b).timestamp;
        return g.link(a).link_index > g.link(b).link_index;
    });
    if (limit > 0 && hits.size() > limit) hits.resize(limit);
    return hits;
}

} // namespace

Timeline oracle_timeline(const TemporalGraph& g, NodeId s, double t, std::size_t k,
                         std::size_t n) {
    if (k < 2 || k % 2 != 0) {
        throw ConfigError("frame length must be even and at least 2, got " + std::to_string(k));
    }
    if (n < 1) throw ConfigError("timeline length must be at least 1");
    std::size_t hop = k / 2;

    Timeline tl;
    tl.node = s;
    tl.target_length = n;
    tl.frames.assign(n, Frame{s, 0.0, false, {}});

    double ref = t;
    for (std::size_t j = n; j-- > 0;) {
        Frame f;
        f.node = s;
        f.ref_time = ref;
        f.entries = scan_neighbors(g, s, ref, k);
        f.valid = !f.entries.empty();
        tl.frames[j] = std::move(f);
        if (j == 0) break;
        std::vector<std::size_t> recent = scan_neighbors(g, s, ref, 0);
        if (recent.size() < hop) break;
        ref = g.link(recent[hop - 1]).timestamp;
    }
    for (const Frame& f : tl.frames)
        if (f.valid) ++tl.valid_count;
    return tl;
}

std::string timeline_to_json(const TemporalGraph& g, const Timeline& tl) {
    nlohmann::json j;
    j["node"] = tl.node;
    j["target_length"] = tl.target_length;
    j["valid_count"] = tl.valid_count;
    nlohmann::json frames = nlohmann::json::array();
    for (const Frame& f : tl.frames) {
        nlohmann::json jf;
        jf["valid"] = f.valid;
        if (f.valid) {
            jf["ref_time"] = f.ref_time;
            nlohmann::json entries = nlohmann::json::array();
            for (std::size_t idx : f.entries) {
                const TemporalLink& l = g.link(idx);
                entries.push_back({{"link_index", l.link_index},
                                   {"neighbor", g.other_endpoint(idx, f.node)},
                                   {"timestamp", l.timestamp}});
            }
            jf["entries"] = entries;
        }
        frames.push_back(jf);
    }
    j["frames"] = frames;
    return j.dump(2);
}

} // namespace ftm
