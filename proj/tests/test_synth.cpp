#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "shnn/hypergraph.hpp"
#include "shnn/synth.hpp"

using namespace shnn;

TEST_CASE("generate: every hyperedge has exactly beta class-0 members") {
    SynthConfig cfg;
    cfg.num_nodes = 500;
    cfg.num_hyperedges = 100;
    cfg.cardinality = 15;
    cfg.beta = 1;
    cfg.seed = 3;
    const Hypergraph h = generate(cfg);
    REQUIRE(h.labels.has_value());
    CHECK(cfg.alpha() == 1);
    for (const auto& e : h.hyperedges) {
        REQUIRE(static_cast<int>(e.size()) == 15);
        int c0 = 0;
        std::set<int> distinct(e.begin(), e.end());
        CHECK(distinct.size() == e.size());
        for (int v : e) c0 += (*h.labels)[v] == 0;
        CHECK(c0 == 1);
    }
}

TEST_CASE("alpha: min of beta and its complement") {
    SynthConfig cfg;
    cfg.beta = 7;
    CHECK(cfg.alpha() == 7);
    cfg.beta = 8;
    CHECK(cfg.alpha() == 7);
    cfg.beta = 1;
    CHECK(cfg.alpha() == 1);
}

TEST_CASE("generate: tiny configuration tallies per edge") {
    SynthConfig cfg;
    cfg.num_nodes = 6;
    cfg.num_hyperedges = 4;
    cfg.cardinality = 3;
    cfg.beta = 1;
    cfg.feature_dim = 2;
    cfg.seed = 11;
    const Hypergraph h = generate(cfg);
    CHECK(h.num_hyperedges() == 4);
    for (const auto& e : h.hyperedges) {
        int c0 = 0, c1 = 0;
        for (int v : e) ((*h.labels)[v] == 0 ? c0 : c1)++;
        CHECK(c0 == 1);
        CHECK(c1 == 2);
    }
    // First half class 0, second half class 1.
    for (int v = 0; v < 3; ++v) CHECK((*h.labels)[v] == 0);
    for (int v = 3; v < 6; ++v) CHECK((*h.labels)[v] == 1);
}

TEST_CASE("generate: empirical class means approach the configured separation") {
    SynthConfig cfg;
    cfg.num_nodes = 5000;
    cfg.num_hyperedges = 1;
    cfg.cardinality = 2;
    cfg.beta = 1;
    cfg.seed = 5;
    const Hypergraph h = generate(cfg);
    REQUIRE(h.features.has_value());
    const double bound = 5.0 * cfg.noise_std / std::sqrt(2500.0);
    for (int cls = 0; cls < 2; ++cls) {
        for (int c = 0; c < cfg.feature_dim; ++c) {
            double mean = 0.0;
            for (int v = cls * 2500; v < (cls + 1) * 2500; ++v) mean += (*h.features)(v, c);
            mean /= 2500.0;
            const double target = c == 0 ? (cls == 0 ? 0.5 : -0.5) * cfg.mean_separation : 0.0;
            CHECK(std::abs(mean - target) < bound);
        }
    }
}

TEST_CASE("generate: byte-identical serialization under equal configs") {
    SynthConfig cfg;
    cfg.num_nodes = 100;
    cfg.num_hyperedges = 20;
    cfg.cardinality = 5;
    cfg.beta = 2;
    cfg.seed = 77;
    std::ostringstream a, b;
    save_hypergraph(generate(cfg), a);
    save_hypergraph(generate(cfg), b);
    CHECK(a.str() == b.str());
}

TEST_CASE("generate: invalid configurations") {
    SynthConfig cfg;
    cfg.num_nodes = 7;  // odd
    CHECK_THROWS_AS(generate(cfg), ConfigError);
    cfg.num_nodes = 10;
    cfg.cardinality = 15;
    cfg.beta = 1;  // needs 14 class-1 nodes, only 5 available
    CHECK_THROWS_AS(generate(cfg), ConfigError);
}

TEST_CASE("split: exact fractions") {
    const Splits sp = split(8, 0.5, 0.25, 0.25, 1);
    CHECK(sp.train.size() == 4);
    CHECK(sp.val.size() == 2);
    CHECK(sp.test.size() == 2);
}

TEST_CASE("split: deterministic, disjoint, covering") {
    const Splits a = split(10, 0.5, 0.25, 0.25, 9);
    const Splits b = split(10, 0.5, 0.25, 0.25, 9);
    CHECK(a.train == b.train);
    CHECK(a.val == b.val);
    CHECK(a.test == b.test);
    CHECK(a.train.size() == 5);
    CHECK(a.val.size() == 2);
    CHECK(a.test.size() == 3);
    std::set<int> all;
    for (const auto* part : {&a.train, &a.val, &a.test}) all.insert(part->begin(), part->end());
    CHECK(all.size() == 10);
}

TEST_CASE("split: fractions must be positive and sum to one") {
    CHECK_THROWS_AS(split(10, 0.5, 0.25, 0.3, 0), ConfigError);
    CHECK_THROWS_AS(split(10, 0.5, 0.5, 0.0, 0), ConfigError);
}
