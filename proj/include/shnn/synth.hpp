// Contextual hypergraph stochastic block model generator and dataset splits.
#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "shnn/errors.hpp"
#include "shnn/hypergraph.hpp"
#include "shnn/rng.hpp"

namespace shnn {

struct SynthConfig {
    int num_nodes = 5000;        // even; first half class 0, second half class 1
    int num_hyperedges = 1000;
    int cardinality = 15;
    int beta = 1;                // class-0 nodes per hyperedge
    int feature_dim = 10;
    double mean_separation = 1.0;
    double noise_std = 1.0;
    std::uint64_t seed = 0;

    int alpha() const { return std::min(beta, cardinality - beta); }

    void validate() const {
        if (num_nodes <= 0 || num_nodes % 2 != 0) throw ConfigError("num_nodes must be even and positive");
        if (num_hyperedges <= 0) throw ConfigError("num_hyperedges must be positive");
        if (cardinality <= 0) throw ConfigError("cardinality must be positive");
        if (beta < 0 || beta > cardinality) throw ConfigError("beta must be in [0, cardinality]");
        if (beta > num_nodes / 2 || cardinality - beta > num_nodes / 2)
            throw ConfigError("per-class hyperedge composition exceeds class size");
        if (feature_dim <= 0) throw ConfigError("feature_dim must be positive");
        if (mean_separation <= 0.0) throw ConfigError("mean_separation must be positive");
        if (noise_std <= 0.0) throw ConfigError("noise_std must be positive");
    }
};

namespace detail {

// k distinct values from [lo, lo + count) by partial Fisher-Yates.
inline std::vector<int> sample_without_replacement(Rng& rng, int lo, int count, int k, std::vector<int>& scratch) {
    scratch.resize(count);
    std::iota(scratch.begin(), scratch.end(), lo);
    std::vector<int> out(k);
    for (int i = 0; i < k; ++i) {
        const int j = i + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(count - i)));
        std::swap(scratch[i], scratch[j]);
        out[i] = scratch[i];
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace detail

// Nodes [0, n/2) are class 0, [n/2, n) class 1. Each hyperedge draws beta
// distinct class-0 nodes and cardinality-beta distinct class-1 nodes.
// Features: x_v ~ Normal(mu_{label(v)}, noise_std^2 I) with
// mu_0 = +(mean_separation/2) e_1 and mu_1 = -(mean_separation/2) e_1.
inline Hypergraph generate(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    const int half = cfg.num_nodes / 2;
    std::vector<std::vector<int>> edges;
    edges.reserve(cfg.num_hyperedges);
    std::vector<int> scratch;
    for (int e = 0; e < cfg.num_hyperedges; ++e) {
        std::vector<int> members;
        if (cfg.beta > 0) {
            auto c0 = detail::sample_without_replacement(rng, 0, half, cfg.beta, scratch);
            members.insert(members.end(), c0.begin(), c0.end());
        }
        if (cfg.cardinality - cfg.beta > 0) {
            auto c1 = detail::sample_without_replacement(rng, half, half, cfg.cardinality - cfg.beta, scratch);
            members.insert(members.end(), c1.begin(), c1.end());
        }
        edges.push_back(std::move(members));
    }
    std::vector<int> labels(cfg.num_nodes);
    for (int v = half; v < cfg.num_nodes; ++v) labels[v] = 1;
    Matrix features(cfg.num_nodes, cfg.feature_dim);
    for (int v = 0; v < cfg.num_nodes; ++v) {
        const double mu0 = (labels[v] == 0 ? 0.5 : -0.5) * cfg.mean_separation;
        for (int c = 0; c < cfg.feature_dim; ++c) features(v, c) = (c == 0 ? mu0 : 0.0) + cfg.noise_std * rng.normal();
    }
    return make_hypergraph(cfg.num_nodes, std::move(edges), std::move(features), std::move(labels));
}

struct Splits {
    std::vector<int> train;
    std::vector<int> val;
    std::vector<int> test;
};

// Seeded uniform permutation cut at floor(n*train) and floor(n*val); the
// remainder is the test set.
inline Splits split(int n, double train_frac, double val_frac, double test_frac, std::uint64_t seed) {
    if (train_frac <= 0.0 || val_frac <= 0.0 || test_frac <= 0.0) throw ConfigError("split fractions must be positive");
    if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    rng.shuffle(perm);
    const int n_train = static_cast<int>(train_frac * n);
    const int n_val = static_cast<int>(val_frac * n);
    Splits sp;
    sp.train.assign(perm.begin(), perm.begin() + n_train);
    sp.val.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
    sp.test.assign(perm.begin() + n_train + n_val, perm.end());
    return sp;
}

}  // namespace shnn
