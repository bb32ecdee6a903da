#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "ftm/errors.hpp"
#include "ftm/graph.hpp"
#include "ftm/rng.hpp"

using namespace ftm;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    std::string path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream os(path, std::ios::trunc);
    os << content;
    return path;
}

TemporalLink make_link(NodeId src, NodeId dst, double t, std::vector<double> f = {0.0}) {
    TemporalLink l;
    l.src = src;
    l.dst = dst;
    l.timestamp = t;
    l.features = std::move(f);
    return l;
}

TemporalGraph random_graph(RngStream& rng, std::size_t max_nodes = 12,
                           std::size_t max_links = 200) {
    std::size_t nodes = 2 + rng.below(max_nodes - 1);
    std::size_t links = 1 + rng.below(max_links);
    std::vector<TemporalLink> ls;
    for (std::size_t i = 0; i < links; ++i) {
        NodeId a = rng.below(nodes);
        NodeId b = rng.below(nodes);
        // integer grid timestamps force plenty of ties
        double t = static_cast<double>(rng.below(40));
        ls.push_back(make_link(a, b, t, {rng.uniform(-1, 1), rng.uniform(-1, 1)}));
    }
    return TemporalGraph::from_links(std::move(ls), nodes);
}

// test-local reference for neighbors_before: filter + sort over raw links
std::vector<std::size_t> brute_neighbors(const TemporalGraph& g, NodeId s, double t,
                                         std::size_t limit) {
    std::vector<std::size_t> hits;
    for (std::size_t i = 0; i < g.link_count(); ++i) {
        const TemporalLink& l = g.link(i);
        if ((l.src == s || l.dst == s) && l.timestamp < t) hits.push_back(i);
    }
    std::sort(hits.begin(), hits.end(), [&](std::size_t a, std::size_t b) {
        if (g.link(a).timestamp != g.link(b).timestamp)
            return g.link(a).timestamp > g.link(b).timestamp;
        return a > b;
    });
    if (limit > 0 && hits.size() > limit) hits.resize(limit);
    return hits;
}

} // namespace

TEST_CASE("load_csv basics") {
    std::string path = write_temp("ftm_g1.csv",
                                  "src,dst,timestamp,label,f0,f1\n"
                                  "10,20,1.0,0,0.5,0.25\n"
                                  "10,30,2.0,1,0.1,0.2\n"
                                  "20,30,3.0,0,0.0,0.0\n");
    TemporalGraph g = TemporalGraph::load_csv(path, true);
    CHECK(g.link_count() == 3);
    CHECK(g.feature_dim() == 2);
    CHECK(g.node_count() == 3);
    CHECK(g.original_id(0) == 10);
    CHECK(g.link(1).label == 1);
    std::filesystem::remove(path);
}

TEST_CASE("load_csv sorts out-of-order rows and assigns link_index") {
    std::string path = write_temp("ftm_g2.csv",
                                  "1,2,5.0,0,1.0\n"
                                  "1,3,2.0,0,2.0\n"
                                  "2,3,9.0,0,3.0\n");
    TemporalGraph g = TemporalGraph::load_csv(path, false);
    REQUIRE(g.link_count() == 3);
    CHECK(g.link(0).timestamp == 2.0);
    CHECK(g.link(1).timestamp == 5.0);
    CHECK(g.link(2).timestamp == 9.0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(g.link(i).link_index == i);
    std::filesystem::remove(path);
}

TEST_CASE("load_csv rejects ragged rows with the line number") {
    std::string path = write_temp("ftm_g3.csv",
                                  "1,2,1.0,0,1.0,2.0\n"
                                  "1,3,2.0,0,1.0\n");
    try {
        TemporalGraph::load_csv(path, false);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("load_csv rejects negative timestamps") {
    std::string path = write_temp("ftm_g4.csv", "1,2,-1.0,0,1.0\n");
    CHECK_THROWS_AS(TemporalGraph::load_csv(path, false), ValidationError);
    std::filesystem::remove(path);
}

TEST_CASE("neighbors_before strict inequality and truncation") {
    std::vector<TemporalLink> ls{make_link(0, 1, 1.0), make_link(0, 2, 2.0),
                                 make_link(0, 3, 3.0)};
    TemporalGraph g = TemporalGraph::from_links(ls);
    auto at2 = g.neighbors_before(0, 2.0);
    REQUIRE(at2.size() == 1);
    CHECK(g.link(at2[0]).timestamp == 1.0);
    CHECK(g.neighbors_before(0, 0.0).empty());
    auto limited = g.neighbors_before(0, 10.0, 2);
    REQUIRE(limited.size() == 2);
    CHECK(g.link(limited[0]).timestamp == 3.0);
    CHECK(g.link(limited[1]).timestamp == 2.0);
    CHECK_THROWS_AS(g.neighbors_before(99, 1.0), ContractViolation);
}

TEST_CASE("neighbors_before equals the linear-scan reference on random graphs") {
    RngStream rng(101);
    for (int it = 0; it < 1000; ++it) {
        TemporalGraph g = random_graph(rng);
        NodeId s = rng.below(g.node_count());
        double t = static_cast<double>(rng.below(45));
        std::size_t limit = rng.below(6); // 0 = unlimited
        CHECK(g.neighbors_before(s, t, limit) == brute_neighbors(g, s, t, limit));
    }
}

TEST_CASE("chronological_split") {
    std::vector<TemporalLink> ls;
    for (int i = 0; i < 100; ++i)
        ls.push_back(make_link(static_cast<NodeId>(i % 10), static_cast<NodeId>(10 + i % 7),
                               static_cast<double>(i)));
    TemporalGraph g = TemporalGraph::from_links(ls);

    SUBCASE("without masking the boundaries are exact percentiles") {
        DatasetSplit split = chronological_split(g, {}, 0.0, 7);
        CHECK(split.train.size() == 70);
        CHECK(split.validation.size() == 15);
        CHECK(split.test.size() == 15);
        CHECK(split.new_nodes.empty());
        for (std::size_t i = 0; i < 70; ++i) CHECK(split.train[i] == i);
    }
    SUBCASE("new-node links are masked out of train") {
        DatasetSplit split = chronological_split(g, {}, 0.10, 7);
        CHECK(!split.new_nodes.empty());
        for (std::size_t idx : split.train) {
            CHECK(!split.is_new_node(g.link(idx).src));
            CHECK(!split.is_new_node(g.link(idx).dst));
        }
        // chronology invariant
        for (std::size_t idx : split.train)
            CHECK(g.link(idx).timestamp <= g.link(split.validation.front()).timestamp);
        CHECK(g.link(split.validation.back()).timestamp <=
              g.link(split.test.front()).timestamp);
        // partitions disjoint and covering except masked train links
        std::set<std::size_t> all(split.train.begin(), split.train.end());
        std::size_t masked = 70 - split.train.size();
        all.insert(split.validation.begin(), split.validation.end());
        all.insert(split.test.begin(), split.test.end());
        CHECK(all.size() == 100 - masked);
    }
    SUBCASE("fixed seed reproduces new node choice") {
        DatasetSplit a = chronological_split(g, {}, 0.10, 7);
        DatasetSplit b = chronological_split(g, {}, 0.10, 7);
        CHECK(a.new_nodes == b.new_nodes);
        DatasetSplit c = chronological_split(g, {}, 0.10, 8);
        CHECK(a.new_nodes != c.new_nodes); // overwhelmingly likely
    }
    SUBCASE("bad ratios and empty partitions rejected") {
        CHECK_THROWS_AS(chronological_split(g, {0.5, 0.1, 0.1}, 0.0, 1), ContractViolation);
        TemporalGraph tiny = TemporalGraph::from_links(
            {make_link(0, 1, 1.0), make_link(0, 1, 2.0)});
        CHECK_THROWS_AS(chronological_split(tiny, {}, 0.0, 1), ValidationError);
    }
}

TEST_CASE("inject_noise") {
    RngStream rng(55);
    TemporalGraph g = random_graph(rng, 8, 60);

    SUBCASE("intensity zero is bit-identical") {
        TemporalGraph noisy = inject_noise(g, 0.0, 9);
        for (std::size_t i = 0; i < g.link_count(); ++i)
            CHECK(noisy.link(i).features == g.link(i).features);
    }
    SUBCASE("noise vectors have the exact target norm") {
        double m = g.max_feature_norm();
        TemporalGraph noisy = inject_noise(g, 0.5, 9);
        REQUIRE(noisy.link_count() == g.link_count());
        for (std::size_t i = 0; i < g.link_count(); ++i) {
            double s = 0.0;
            for (std::size_t d = 0; d < g.feature_dim(); ++d) {
                double diff = noisy.link(i).features[d] - g.link(i).features[d];
                s += diff * diff;
            }
            CHECK(std::abs(std::sqrt(s) - 0.5 * m) <= 1e-9);
            CHECK(noisy.link(i).timestamp == g.link(i).timestamp);
            CHECK(noisy.link(i).src == g.link(i).src);
            CHECK(noisy.link(i).dst == g.link(i).dst);
            CHECK(noisy.link(i).label == g.link(i).label);
        }
    }
    SUBCASE("fixed seed reproduces the perturbation") {
        TemporalGraph a = inject_noise(g, 0.3, 13);
        TemporalGraph b = inject_noise(g, 0.3, 13);
        for (std::size_t i = 0; i < g.link_count(); ++i)
            CHECK(a.link(i).features == b.link(i).features);
    }
    SUBCASE("out-of-range intensity rejected") {
        CHECK_THROWS_AS(inject_noise(g, -0.1, 1), ContractViolation);
        CHECK_THROWS_AS(inject_noise(g, 0.6, 1), ContractViolation);
    }
}

TEST_CASE("synth_generate") {
    SUBCASE("preferred-item rate tracks p") {
        SynthSpec spec;
        spec.users = 20;
        spec.items = 5;
        spec.links = 400;
        spec.p_preferred = 0.9;
        spec.seed = 3;
        SynthResult r = synth_generate(spec);
        REQUIRE(r.graph.link_count() == 400);
        std::size_t hits = 0;
        for (const TemporalLink& l : r.graph.links())
            if (l.dst == r.preferred[l.src]) ++hits;
        double rate = static_cast<double>(hits) / 400.0;
        CHECK(rate > 0.85);
        CHECK(rate < 0.95);
    }
    SUBCASE("p=1 sends every link to the preferred item") {
        SynthSpec spec;
        spec.p_preferred = 1.0;
        spec.seed = 4;
        SynthResult r = synth_generate(spec);
        for (const TemporalLink& l : r.graph.links()) CHECK(l.dst == r.preferred[l.src]);
    }
    SUBCASE("same seed gives identical link lists") {
        SynthSpec spec;
        spec.seed = 11;
        SynthResult a = synth_generate(spec);
        SynthResult b = synth_generate(spec);
        REQUIRE(a.graph.link_count() == b.graph.link_count());
        for (std::size_t i = 0; i < a.graph.link_count(); ++i) {
            CHECK(a.graph.link(i).src == b.graph.link(i).src);
            CHECK(a.graph.link(i).dst == b.graph.link(i).dst);
            CHECK(a.graph.link(i).timestamp == b.graph.link(i).timestamp);
            CHECK(a.graph.link(i).features == b.graph.link(i).features);
        }
    }
    SUBCASE("infeasible spec rejected") {
        SynthSpec spec;
        spec.users = 0;
        CHECK_THROWS_AS(synth_generate(spec), ValidationError);
    }
}

TEST_CASE("csv round trip") {
    SynthSpec spec;
    spec.seed = 21;
    spec.links = 50;
    SynthResult r = synth_generate(spec);
    std::string path = (std::filesystem::temp_directory_path() / "ftm_synth.csv").string();
    write_csv(r.graph, path);
    TemporalGraph loaded = TemporalGraph::load_csv(path, true);
    REQUIRE(loaded.link_count() == r.graph.link_count());
    CHECK(loaded.feature_dim() == r.graph.feature_dim());
    for (std::size_t i = 0; i < loaded.link_count(); ++i) {
        CHECK(loaded.link(i).timestamp == r.graph.link(i).timestamp);
        CHECK(loaded.link(i).features == r.graph.link(i).features);
    }
    // same seed, byte-identical file
    std::string path2 = (std::filesystem::temp_directory_path() / "ftm_synth2.csv").string();
    write_csv(synth_generate(spec).graph, path2);
    std::ifstream f1(path), f2(path2);
    std::string c1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string c2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(c1 == c2);
    std::filesystem::remove(path);
    std::filesystem::remove(path2);
}
