#include <cmath>

#include "doctest.h"
#include "ftm/errors.hpp"
#include "ftm/evaluation.hpp"
#include "ftm/training.hpp"

using namespace ftm;

namespace {

ModelConfig tiny_config(std::size_t de) {
    ModelConfig cfg;
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.frame_len = 4;
    cfg.timeline_len = 2;
    cfg.hidden_dim = 8;
    cfg.time_dim = 8;
    cfg.feature_dim = de;
    return cfg;
}

SynthResult tiny_dataset(std::uint64_t seed, std::size_t links = 300) {
    SynthSpec spec;
    spec.users = 10;
    spec.items = 4;
    spec.links = links;
    spec.feature_dim = 4;
    spec.p_preferred = 0.9;
    spec.seed = seed;
    return synth_generate(spec);
}

} // namespace

TEST_CASE("sample_negatives") {
    SUBCASE("a two-node universe always yields the other node") {
        RngStream rng(1);
        std::vector<NodeId> universe{4, 9};
        for (int i = 0; i < 50; ++i) {
            auto q = sample_negatives(rng, universe, 9, 1);
            REQUIRE(q.size() == 1);
            CHECK(q[0] == 4);
        }
    }
    SUBCASE("returns exactly the requested count") {
        RngStream rng(2);
        std::vector<NodeId> universe{1, 2, 3, 4, 5};
        CHECK(sample_negatives(rng, universe, 3, 3).size() == 3);
    }
    SUBCASE("draws are uniform over the universe") {
        RngStream rng(3);
        std::vector<NodeId> universe;
        for (NodeId s = 0; s < 10; ++s) universe.push_back(s);
        const std::size_t draws = 100000;
        std::vector<std::size_t> counts(10, 0);
        for (std::size_t i = 0; i < draws; ++i) {
            // rotate the rejected destination so every slot stays reachable
            NodeId dst = 10; // outside the universe: nothing rejected
            ++counts[sample_negatives(rng, universe, dst, 1)[0]];
        }
        double expect = draws / 10.0;
        double sigma = std::sqrt(draws * 0.1 * 0.9);
        for (std::size_t s = 0; s < 10; ++s) {
            CHECK(std::abs(static_cast<double>(counts[s]) - expect) <= 3.0 * sigma);
        }
    }
    SUBCASE("universe of one node is a configuration error") {
        RngStream rng(4);
        std::vector<NodeId> universe{7};
        CHECK_THROWS_AS(sample_negatives(rng, universe, 7, 1), ConfigError);
    }
}

TEST_CASE("batch_loss") {
    SynthResult data = tiny_dataset(31, 60);
    ModelConfig cfg = tiny_config(data.graph.feature_dim());

    SUBCASE("zero scores give (1+Q) ln 2 per item") {
        FtmModel m(cfg, 5);
        for (std::size_t i = 0; i < m.params().size(); ++i)
            m.params().at(i).value = Tensor::zeros(m.params().at(i).value.shape);
        for (std::size_t q = 1; q <= 3; ++q) {
            Tape tape;
            EmbedContext ctx(tape, m, data.graph);
            std::vector<BatchItem> batch;
            for (std::size_t i = 40; i < 44; ++i) {
                BatchItem item;
                item.link = i;
                item.negatives.assign(q, (data.graph.link(i).dst + 1) % 14);
                batch.push_back(item);
            }
            double loss = batch_loss(ctx, batch).scalar();
            double expect = (1.0 + static_cast<double>(q)) * std::log(2.0);
            CHECK(std::abs(loss - expect) <= 1e-12);
        }
    }
    SUBCASE("matches a straight-line scalar recomputation") {
        FtmModel m(cfg, 6);
        Tape tape;
        EmbedContext ctx(tape, m, data.graph);
        std::vector<BatchItem> batch;
        for (std::size_t i = 50; i < 54; ++i) {
            BatchItem item;
            item.link = i;
            item.negatives = {(data.graph.link(i).dst + 1) % 14,
                              (data.graph.link(i).dst + 3) % 14};
            batch.push_back(item);
        }
        double loss = batch_loss(ctx, batch).scalar();

        auto sigma = [](double x) {
            return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
        };
        double ref = 0.0;
        for (const BatchItem& item : batch) {
            const TemporalLink& l = data.graph.link(item.link);
            Tape t2;
            EmbedContext c2(t2, m, data.graph);
            ref += -std::log(sigma(c2.link_score(l.src, l.dst, l.timestamp).scalar()));
            for (NodeId q : item.negatives)
                ref += -std::log(sigma(-c2.link_score(l.src, q, l.timestamp).scalar()));
        }
        ref /= static_cast<double>(batch.size());
        CHECK(std::abs(loss - ref) <= 1e-10);
    }
    SUBCASE("without negatives only the positive term remains") {
        FtmModel m(cfg, 7);
        Tape tape;
        EmbedContext ctx(tape, m, data.graph);
        BatchItem item;
        item.link = 55;
        const TemporalLink& l = data.graph.link(55);
        double loss = batch_loss(ctx, {item}).scalar();
        Tape t2;
        EmbedContext c2(t2, m, data.graph);
        double s = c2.link_score(l.src, l.dst, l.timestamp).scalar();
        double sig = s >= 0.0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
        CHECK(std::abs(loss - (-std::log(sig))) <= 1e-12);
    }
}

TEST_CASE("loss pushes positive scores up and negative scores down") {
    Tape tape;
    Var s_pos = tape.leaf(Tensor::scalar(0.37));
    Var s_neg = tape.leaf(Tensor::scalar(-0.82));
    Var loss = add(neg(log(sigmoid(s_pos))), neg(log(sigmoid(neg(s_neg)))));
    auto adj = tape.backward(loss);
    CHECK(adj[static_cast<std::size_t>(s_pos.id)].values[0] < 0.0);
    CHECK(adj[static_cast<std::size_t>(s_neg.id)].values[0] > 0.0);
}

TEST_CASE("training loop") {
    SynthResult data = tiny_dataset(41);
    ModelConfig cfg = tiny_config(data.graph.feature_dim());
    DatasetSplit split = chronological_split(data.graph, {}, 0.10, 17);

    SUBCASE("zero learning rate leaves parameters and loss unchanged") {
        FtmModel m(cfg, 8);
        std::vector<std::vector<double>> before;
        for (std::size_t i = 0; i < m.params().size(); ++i)
            before.push_back(m.params().at(i).value.values);
        TrainConfig tc;
        tc.learning_rate = 0.0;
        tc.epochs = 2;
        tc.batch_size = 50;
        tc.seed = 9;
        Trainer trainer(m, data.graph, split, tc);
        EpochStats e1 = trainer.train_epoch(1);
        EpochStats e2 = trainer.train_epoch(1); // same epoch index, same negatives
        CHECK(e1.train_loss == e2.train_loss);
        for (std::size_t i = 0; i < m.params().size(); ++i)
            CHECK(m.params().at(i).value.values == before[i]);
    }
    SUBCASE("fixed seed reproduces the loss trace") {
        TrainConfig tc;
        tc.learning_rate = 1e-3;
        tc.epochs = 3;
        tc.batch_size = 50;
        tc.patience = 10;
        tc.seed = 10;
        FtmModel m1(cfg, 11);
        Trainer t1(m1, data.graph, split, tc);
        FitResult r1 = t1.fit();
        FtmModel m2(cfg, 11);
        Trainer t2(m2, data.graph, split, tc);
        FitResult r2 = t2.fit();
        REQUIRE(r1.history.size() == r2.history.size());
        for (std::size_t i = 0; i < r1.history.size(); ++i) {
            CHECK(r1.history[i].train_loss == r2.history[i].train_loss);
            CHECK(r1.history[i].val_ap == r2.history[i].val_ap);
        }
    }
    SUBCASE("loss decreases over the first epochs") {
        TrainConfig tc;
        tc.learning_rate = 1e-3;
        tc.epochs = 3;
        tc.batch_size = 50;
        tc.patience = 10;
        tc.seed = 12;
        FtmModel m(cfg, 13);
        Trainer trainer(m, data.graph, split, tc);
        FitResult r = trainer.fit();
        REQUIRE(r.history.size() == 3);
        CHECK(r.history[1].train_loss < r.history[0].train_loss);
        CHECK(r.history[2].train_loss < r.history[1].train_loss);
    }
    SUBCASE("epochs=0 returns the initial parameters") {
        FtmModel m(cfg, 14);
        std::vector<std::vector<double>> before;
        for (std::size_t i = 0; i < m.params().size(); ++i)
            before.push_back(m.params().at(i).value.values);
        TrainConfig tc;
        tc.epochs = 0;
        tc.seed = 15;
        Trainer trainer(m, data.graph, split, tc);
        FitResult r = trainer.fit();
        REQUIRE(r.best_params.size() == m.params().size());
        for (std::size_t i = 0; i < m.params().size(); ++i)
            CHECK(r.best_params.at(i).value.values == before[i]);
        CHECK(r.history.empty());
    }
    SUBCASE("patience zero stops one epoch after the best") {
        TrainConfig tc;
        tc.learning_rate = 1e-3;
        tc.epochs = 12;
        tc.batch_size = 50;
        tc.patience = 0;
        tc.seed = 16;
        FtmModel m(cfg, 17);
        Trainer trainer(m, data.graph, split, tc);
        FitResult r = trainer.fit();
        if (r.history.size() < tc.epochs) {
            CHECK(r.history.size() == r.best_epoch + 1);
        } else {
            CHECK(r.best_epoch == tc.epochs);
        }
    }
}
