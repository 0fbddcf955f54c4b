#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "shnn/hypergraph.hpp"
#include "shnn/rng.hpp"
#include "shnn/sheaf.hpp"

using namespace shnn;

namespace {
const Hypergraph kH3 = make_hypergraph(3, {{0, 1, 2}});
}

TEST_CASE("trivial_sheaf: one unit map per incidence") {
    const Sheaf s = trivial_sheaf(kH3);
    CHECK(s.stalk_dim == 1);
    REQUIRE(s.params.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        const Matrix f = s.map(i);
        CHECK(f.rows() == 1);
        CHECK(f(0, 0) == 1.0);
    }
}

TEST_CASE("trivial_sheaf: no hyperedges gives empty params") {
    const Hypergraph h = make_hypergraph(4, {});
    CHECK(trivial_sheaf(h).params.empty());
}

TEST_CASE("random_sheaf: deterministic under seed, uniform on [-1,1]") {
    const Sheaf a = random_sheaf(kH3, 2, MapKind::diagonal(), 7);
    const Sheaf b = random_sheaf(kH3, 2, MapKind::diagonal(), 7);
    CHECK(a.params == b.params);
    for (const auto& p : a.params)
        for (double v : p) {
            CHECK(v >= -1.0);
            CHECK(v <= 1.0);
        }
    const Sheaf c = random_sheaf(kH3, 2, MapKind::diagonal(), 8);
    CHECK(a.params != c.params);
}

TEST_CASE("random_sheaf: parameter widths per kind") {
    CHECK(random_sheaf(kH3, 2, MapKind::general(), 7).params[0].size() == 4);
    CHECK(random_sheaf(kH3, 3, MapKind::low_rank(1), 1).params[0].size() == 9);
    CHECK(random_sheaf(kH3, 3, MapKind::diagonal(), 1).params[0].size() == 3);
}

TEST_CASE("materialize: diagonal") {
    const std::vector<double> p{2, 3};
    const Matrix f = materialize(p, 2, MapKind::diagonal());
    CHECK(f(0, 0) == 2.0);
    CHECK(f(0, 1) == 0.0);
    CHECK(f(1, 0) == 0.0);
    CHECK(f(1, 1) == 3.0);
}

TEST_CASE("materialize: low-rank A*B + diag(c)") {
    // A = [1,0]^T (d x r), B = [0,1] (r x d used transposed from storage), c = 0.
    const std::vector<double> p{1, 0, 0, 1, 0, 0};
    const Matrix f = materialize(p, 2, MapKind::low_rank(1));
    CHECK(f(0, 0) == 0.0);
    CHECK(f(0, 1) == 1.0);
    CHECK(f(1, 0) == 0.0);
    CHECK(f(1, 1) == 0.0);
}

TEST_CASE("materialize: general row-major") {
    const std::vector<double> p{1, 2, 3, 4};
    const Matrix f = materialize(p, 2, MapKind::general());
    CHECK(f(0, 0) == 1.0);
    CHECK(f(0, 1) == 2.0);
    CHECK(f(1, 0) == 3.0);
    CHECK(f(1, 1) == 4.0);
}

TEST_CASE("materialize: wrong width") {
    const std::vector<double> p{1, 2, 3};
    CHECK_THROWS_AS(materialize(p, 2, MapKind::general()), WidthError);
}

TEST_CASE("low-rank maps minus diagonal correction have rank <= r") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> p(9);
        for (double& v : p) v = rng.uniform(-1.0, 1.0);
        Matrix f = materialize(p, 3, MapKind::low_rank(1));
        for (int i = 0; i < 3; ++i) f(i, i) -= p[6 + i];
        // Rank <= 1 iff every 2x2 minor vanishes.
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j)
                for (int a = 0; a < 3; ++a)
                    for (int b = a + 1; b < 3; ++b)
                        CHECK(std::abs(f(i, a) * f(j, b) - f(i, b) * f(j, a)) < 1e-12);
    }
}

TEST_CASE("edge_feature_mean: arithmetic means") {
    Matrix x(3, 1);
    x(0, 0) = 0;
    x(1, 0) = 1;
    x(2, 0) = 5;
    CHECK(edge_feature_mean(kH3, x)(0, 0) == doctest::Approx(2.0));

    const Hypergraph h = make_hypergraph(3, {{0, 1}, {1, 2}});
    Matrix y(3, 1);
    y(0, 0) = 0;
    y(1, 0) = 2;
    y(2, 0) = 4;
    const Matrix he = edge_feature_mean(h, y);
    CHECK(he(0, 0) == doctest::Approx(1.0));
    CHECK(he(1, 0) == doctest::Approx(3.0));
}

TEST_CASE("edge_feature_mean: matches brute-force per-edge loop") {
    Rng rng(11);
    const Hypergraph h = make_hypergraph(6, {{0, 1, 2}, {2, 3, 4, 5}, {0, 5}});
    Matrix x(6, 3);
    for (double& v : x.data()) v = rng.normal();
    const Matrix he = edge_feature_mean(h, x);
    for (int e = 0; e < h.num_hyperedges(); ++e)
        for (int c = 0; c < 3; ++c) {
            double s = 0.0;
            for (int v : h.hyperedges[e]) s += x(v, c);
            CHECK(he(e, c) == doctest::Approx(s / h.hyperedges[e].size()).epsilon(1e-12));
        }
}

TEST_CASE("predict_sheaf: zero weights under tanh and sigmoid") {
    Matrix x(3, 2);
    x(0, 0) = 1.0;
    x(1, 1) = -2.0;
    x(2, 0) = 0.5;
    {
        const SheafPredictor p = SheafPredictor::zero(2, 2, MapKind::diagonal(), Squash::Tanh);
        const Sheaf s = predict_sheaf(kH3, x, p, 2, MapKind::diagonal());
        for (std::size_t i = 0; i < s.params.size(); ++i) CHECK(s.map(i).max_abs() == 0.0);
    }
    {
        const SheafPredictor p = SheafPredictor::zero(2, 2, MapKind::diagonal(), Squash::Sigmoid);
        const Sheaf s = predict_sheaf(kH3, x, p, 2, MapKind::diagonal());
        for (std::size_t i = 0; i < s.params.size(); ++i) {
            const Matrix f = s.map(i);
            CHECK(f(0, 0) == doctest::Approx(0.5));
            CHECK(f(1, 1) == doctest::Approx(0.5));
            CHECK(f(0, 1) == 0.0);
        }
    }
}

TEST_CASE("predict_sheaf: identical features give identical maps") {
    Matrix x(3, 2);
    for (int i = 0; i < 3; ++i) {
        x(i, 0) = 0.3;
        x(i, 1) = -0.7;
    }
    const SheafPredictor p = SheafPredictor::random(2, 2, MapKind::general(), Squash::Tanh,
                                                    EdgeFeatureMode::MeanOfInputs, 99);
    const Sheaf s = predict_sheaf(kH3, x, p, 2, MapKind::general());
    for (std::size_t i = 1; i < s.params.size(); ++i) CHECK(s.params[i] == s.params[0]);
}

TEST_CASE("predict_sheaf: squash bounds hold for random predictors") {
    Rng rng(123);
    Matrix x(4, 3);
    for (double& v : x.data()) v = 3.0 * rng.normal();
    const Hypergraph h = make_hypergraph(4, {{0, 1, 2}, {1, 3}});
    for (auto squash : {Squash::Tanh, Squash::Sigmoid}) {
        const SheafPredictor p =
            SheafPredictor::random(3, 2, MapKind::general(), squash, EdgeFeatureMode::MeanOfInputs, 7);
        const Sheaf s = predict_sheaf(h, x, p, 2, MapKind::general());
        for (const auto& row : s.params)
            for (double v : row) {
                if (squash == Squash::Tanh) {
                    CHECK(v > -1.0);
                    CHECK(v < 1.0);
                } else {
                    CHECK(v > 0.0);
                    CHECK(v < 1.0);
                }
            }
    }
}

TEST_CASE("predict_sheaf: equivariant under node relabeling") {
    // Relabel sigma = (0->2, 1->0, 2->1, 3->3).
    const std::vector<int> sigma{2, 0, 1, 3};
    const Hypergraph h = make_hypergraph(4, {{0, 1, 3}, {1, 2}});
    Rng rng(3);
    Matrix x(4, 2);
    for (double& v : x.data()) v = rng.normal();
    std::vector<std::vector<int>> redges;
    for (const auto& e : h.hyperedges) {
        std::vector<int> m;
        for (int v : e) m.push_back(sigma[v]);
        redges.push_back(std::move(m));
    }
    const Hypergraph hr = make_hypergraph(4, std::move(redges));
    Matrix xr(4, 2);
    for (int v = 0; v < 4; ++v)
        for (int c = 0; c < 2; ++c) xr(sigma[v], c) = x(v, c);

    const SheafPredictor p =
        SheafPredictor::random(2, 2, MapKind::diagonal(), Squash::Tanh, EdgeFeatureMode::MeanOfInputs, 21);
    const Sheaf s = predict_sheaf(h, x, p, 2, MapKind::diagonal());
    const Sheaf sr = predict_sheaf(hr, xr, p, 2, MapKind::diagonal());

    const auto pairs = incidence_pairs(h);
    const auto pairs_r = incidence_pairs(hr);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto [v, e] = pairs[i];
        const std::pair<int, int> want{sigma[v], e};
        const auto it = std::find(pairs_r.begin(), pairs_r.end(), want);
        REQUIRE(it != pairs_r.end());
        CHECK(sr.params[static_cast<std::size_t>(it - pairs_r.begin())] == s.params[i]);
    }
}

TEST_CASE("sheaf serialization round-trips") {
    const Sheaf s = random_sheaf(kH3, 3, MapKind::low_rank(2), 17);
    std::ostringstream out;
    save_sheaf(s, out);
    std::istringstream in(out.str());
    const Sheaf s2 = load_sheaf(in);
    CHECK(s2.stalk_dim == s.stalk_dim);
    CHECK(s2.kind.tag == s.kind.tag);
    CHECK(s2.kind.rank == s.kind.rank);
    CHECK(s2.params == s.params);
}

TEST_CASE("check_hosted: wrong param count is a HostMismatch") {
    Sheaf s = trivial_sheaf(kH3);
    s.params.pop_back();
    CHECK_THROWS_AS(check_hosted(kH3, s), HostMismatch);
}
