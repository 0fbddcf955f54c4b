// Cellular sheaf on a hypergraph: one d x d restriction map per incidence
// pair, stored as a parameter vector whose interpretation depends on the map
// kind (diagonal, low-rank, general).
#pragma once

#include <cmath>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "shnn/errors.hpp"
#include "shnn/hypergraph.hpp"
#include "shnn/matrix.hpp"
#include "shnn/rng.hpp"

namespace shnn {

enum class MapKindTag { Diagonal, LowRank, General };

struct MapKind {
    MapKindTag tag = MapKindTag::Diagonal;
    int rank = 0;  // LowRank only

    static MapKind diagonal() { return {MapKindTag::Diagonal, 0}; }
    static MapKind low_rank(int r) { return {MapKindTag::LowRank, r}; }
    static MapKind general() { return {MapKindTag::General, 0}; }

    int param_width(int d) const {
        switch (tag) {
            case MapKindTag::Diagonal: return d;
            case MapKindTag::LowRank: return 2 * d * rank + d;
            case MapKindTag::General: return d * d;
        }
        throw Error("unreachable");
    }

    void validate(int d) const {
        if (tag == MapKindTag::LowRank && (rank < 1 || rank > d)) throw ValidationError("LowRank rank must be in [1, d]");
    }

    std::string name() const {
        switch (tag) {
            case MapKindTag::Diagonal: return "diagonal";
            case MapKindTag::LowRank: return "low_rank";
            case MapKindTag::General: return "general";
        }
        return {};
    }
};

// Packing: Diagonal -> diag entries; LowRank(r) -> A (d x r) row-major, then
// B (r x d) row-major, then diagonal correction c; General -> row-major d x d.
// LowRank materializes as A * B + diag(c), B holding the transposed factor.
inline Matrix materialize(std::span<const double> params, int d, const MapKind& kind) {
    if (static_cast<int>(params.size()) != kind.param_width(d)) throw WidthError("parameter vector width mismatch");
    switch (kind.tag) {
        case MapKindTag::Diagonal: {
            Matrix m(d, d);
            for (int i = 0; i < d; ++i) m(i, i) = params[i];
            return m;
        }
        case MapKindTag::LowRank: {
            const int r = kind.rank;
            Matrix a(d, r, std::vector<double>(params.begin(), params.begin() + d * r));
            Matrix b(r, d, std::vector<double>(params.begin() + d * r, params.begin() + 2 * d * r));
            Matrix m = a * b;
            for (int i = 0; i < d; ++i) m(i, i) += params[2 * d * r + i];
            return m;
        }
        case MapKindTag::General:
            return Matrix(d, d, std::vector<double>(params.begin(), params.end()));
    }
    throw Error("unreachable");
}

struct Sheaf {
    int stalk_dim = 1;
    MapKind kind = MapKind::diagonal();
    // One parameter vector per incidence pair, canonical incidence order.
    std::vector<std::vector<double>> params;

    Matrix map(std::size_t pair_index) const { return materialize(params[pair_index], stalk_dim, kind); }
};

inline Sheaf trivial_sheaf(const Hypergraph& h) {
    Sheaf s;
    s.stalk_dim = 1;
    s.kind = MapKind::diagonal();
    s.params.assign(incidence_pairs(h).size(), {1.0});
    return s;
}

inline Sheaf random_sheaf(const Hypergraph& h, int d, const MapKind& kind, std::uint64_t seed) {
    if (d < 1) throw ValidationError("stalk dimension must be positive");
    kind.validate(d);
    Rng rng(seed);
    Sheaf s;
    s.stalk_dim = d;
    s.kind = kind;
    const int w = kind.param_width(d);
    const std::size_t np = incidence_pairs(h).size();
    s.params.resize(np);
    for (auto& p : s.params) {
        p.resize(w);
        for (double& x : p) x = rng.uniform(-1.0, 1.0);
    }
    return s;
}

inline void check_hosted(const Hypergraph& h, const Sheaf& s) {
    if (s.params.size() != incidence_pairs(h).size()) throw HostMismatch("sheaf parameter count != incidence pair count");
}

// Per-hyperedge arithmetic mean of the rows of x over the member nodes.
inline Matrix edge_feature_mean(const Hypergraph& h, const Matrix& x) {
    if (x.rows() != h.num_nodes) throw ShapeError("edge_feature_mean: x row count != num_nodes");
    Matrix out(h.num_hyperedges(), x.cols());
    for (int e = 0; e < h.num_hyperedges(); ++e) {
        const auto& mem = h.hyperedges[e];
        for (int v : mem)
            for (int c = 0; c < x.cols(); ++c) out(e, c) += x(v, c);
        for (int c = 0; c < x.cols(); ++c) out(e, c) /= static_cast<double>(mem.size());
    }
    return out;
}

enum class EdgeFeatureMode { MeanOfInputs, MeanOfHidden, MeanOfTransformed };
enum class Squash { Sigmoid, Tanh };

inline double apply_squash(Squash s, double x) {
    return s == Squash::Tanh ? std::tanh(x) : 1.0 / (1.0 + std::exp(-x));
}

// One-hidden-layer perceptron predicting restriction-map parameters from
// concatenated node and hyperedge features. Hidden width equals the output
// parameter width.
struct SheafPredictor {
    Matrix w_hidden;              // hidden x 2f
    std::vector<double> b_hidden;   // hidden
    Matrix w_out;                 // width x hidden
    std::vector<double> b_out;      // width
    Squash squash = Squash::Tanh;
    EdgeFeatureMode edge_mode = EdgeFeatureMode::MeanOfInputs;
    // Optional f x f transform feeding modes MeanOfHidden / MeanOfTransformed.
    Matrix edge_transform;

    static SheafPredictor random(int f, int d, const MapKind& kind, Squash squash, EdgeFeatureMode mode,
                                 std::uint64_t seed, double scale = 0.5) {
        const int w = kind.param_width(d);
        SheafPredictor p;
        p.squash = squash;
        p.edge_mode = mode;
        Rng rng(seed);
        auto fill = [&](Matrix& m, int r, int c) {
            m = Matrix(r, c);
            double a = scale / std::sqrt(static_cast<double>(c));
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j) m(i, j) = rng.uniform(-a, a);
        };
        fill(p.w_hidden, w, 2 * f);
        p.b_hidden.assign(w, 0.0);
        fill(p.w_out, w, w);
        p.b_out.assign(w, 0.0);
        if (mode != EdgeFeatureMode::MeanOfInputs) fill(p.edge_transform, f, f);
        return p;
    }

    static SheafPredictor zero(int f, int d, const MapKind& kind, Squash squash,
                               EdgeFeatureMode mode = EdgeFeatureMode::MeanOfInputs) {
        const int w = kind.param_width(d);
        SheafPredictor p;
        p.squash = squash;
        p.edge_mode = mode;
        p.w_hidden = Matrix(w, 2 * f);
        p.b_hidden.assign(w, 0.0);
        p.w_out = Matrix(w, w);
        p.b_out.assign(w, 0.0);
        if (mode != EdgeFeatureMode::MeanOfInputs) p.edge_transform = Matrix(f, f);
        return p;
    }

    // Raw (pre-squash) perceptron on one concatenated input row.
    std::vector<double> raw(const std::vector<double>& in) const {
        if (static_cast<int>(in.size()) != w_hidden.cols()) throw ShapeError("predictor input width mismatch");
        const int hw = w_hidden.rows();
        std::vector<double> hid(hw, 0.0);
        for (int i = 0; i < hw; ++i) {
            double s = b_hidden[i];
            for (int j = 0; j < w_hidden.cols(); ++j) s += w_hidden(i, j) * in[j];
            hid[i] = s > 0.0 ? s : 0.0;
        }
        std::vector<double> out(w_out.rows(), 0.0);
        for (int i = 0; i < w_out.rows(); ++i) {
            double s = b_out[i];
            for (int j = 0; j < hw; ++j) s += w_out(i, j) * hid[j];
            out[i] = s;
        }
        return out;
    }
};

// Node features for predictor input per edge-feature mode.
inline Matrix edge_feature_input(const Hypergraph& h, const Matrix& x, const SheafPredictor& p) {
    switch (p.edge_mode) {
        case EdgeFeatureMode::MeanOfInputs: return edge_feature_mean(h, x);
        case EdgeFeatureMode::MeanOfTransformed: return edge_feature_mean(h, x * p.edge_transform.transpose());
        case EdgeFeatureMode::MeanOfHidden: {
            Matrix t = x * p.edge_transform.transpose();
            for (double& v : t.data())
                if (v < 0.0) v = 0.0;
            return edge_feature_mean(h, t);
        }
    }
    throw Error("unreachable");
}

inline Sheaf predict_sheaf(const Hypergraph& h, const Matrix& x, const SheafPredictor& p, int d, const MapKind& kind) {
    if (x.rows() != h.num_nodes) throw ShapeError("predict_sheaf: x row count != num_nodes");
    kind.validate(d);
    const int w = kind.param_width(d);
    if (p.w_out.rows() != w) throw ShapeError("predictor output width != map parameter width");
    if (p.w_hidden.cols() != 2 * x.cols()) throw ShapeError("predictor input width != 2f");
    const Matrix he = edge_feature_input(h, x, p);
    Sheaf s;
    s.stalk_dim = d;
    s.kind = kind;
    const auto pairs = incidence_pairs(h);
    s.params.resize(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        auto [v, e] = pairs[i];
        std::vector<double> in(2 * x.cols());
        for (int c = 0; c < x.cols(); ++c) in[c] = x(v, c);
        for (int c = 0; c < x.cols(); ++c) in[x.cols() + c] = he(e, c);
        std::vector<double> out = p.raw(in);
        for (double& q : out) q = apply_squash(p.squash, q);
        s.params[i] = std::move(out);
    }
    return s;
}

inline void save_sheaf(const Sheaf& s, std::ostream& out) {
    nlohmann::ordered_json j;
    j["stalk_dim"] = s.stalk_dim;
    j["kind"] = s.kind.name();
    if (s.kind.tag == MapKindTag::LowRank) j["rank"] = s.kind.rank;
    j["params"] = s.params;
    out << j.dump();
}

inline Sheaf load_sheaf(std::istream& in) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
        Sheaf s;
        s.stalk_dim = j.at("stalk_dim").get<int>();
        std::string kind = j.at("kind").get<std::string>();
        if (kind == "diagonal") s.kind = MapKind::diagonal();
        else if (kind == "low_rank") s.kind = MapKind::low_rank(j.at("rank").get<int>());
        else if (kind == "general") s.kind = MapKind::general();
        else throw ParseError("unknown map kind: " + kind);
        s.params = j.at("params").get<std::vector<std::vector<double>>>();
        const int w = s.kind.param_width(s.stalk_dim);
        for (const auto& p : s.params)
            if (static_cast<int>(p.size()) != w) throw ValidationError("sheaf parameter width mismatch");
        return s;
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("malformed sheaf: ") + ex.what());
    }
}

}  // namespace shnn
