// SheafHyperGNN / SheafHyperGCN layers and the node-classification training
// loop (Adam, softmax cross-entropy, best-validation-epoch model selection).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "shnn/autograd.hpp"
#include "shnn/energy.hpp"
#include "shnn/errors.hpp"
#include "shnn/hypergraph.hpp"
#include "shnn/laplacian.hpp"
#include "shnn/matrix.hpp"
#include "shnn/rng.hpp"
#include "shnn/sheaf.hpp"
#include "shnn/synth.hpp"

namespace shnn {

enum class ModelVariant { SheafGNN, SheafGCN };
enum class SheafPolicy { FixedFirstLayer, RecomputeEachLayer };

struct ModelConfig {
    ModelVariant variant = ModelVariant::SheafGNN;
    int stalk_dim = 2;
    MapKind map_kind = MapKind::diagonal();
    int layers = 2;
    int hidden_channels = 16;
    bool learn_w1 = true;
    bool trivial_sheaf = false;  // d=1, constant unit maps; forces learn_w1 off
    SheafPolicy sheaf_policy = SheafPolicy::FixedFirstLayer;
    NormalizerMode norm_mode = NormalizerMode::Degree;
    NormalizerStyle norm_style = NormalizerStyle::Symmetric;
    double epsilon = 1e-6;
    bool mediators = false;  // sheaf_gcn only
    Squash squash = Squash::Tanh;
    double dropout = 0.0;
    double lr = 0.01;
    double weight_decay = 0.0;
    int epochs = 100;
    std::uint64_t seed = 0;

    void validate() const {
        if (stalk_dim < 1) throw ConfigError("stalk_dim must be >= 1");
        if (layers < 1) throw ConfigError("layers must be >= 1");
        if (hidden_channels < 1) throw ConfigError("hidden_channels must be >= 1");
        if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
        if (lr < 0.0 || weight_decay < 0.0) throw ConfigError("lr and weight_decay must be nonnegative");
        if (epochs < 0) throw ConfigError("epochs must be nonnegative");
        if (trivial_sheaf && stalk_dim != 1) throw ConfigError("trivial_sheaf requires stalk_dim 1");
        if (mediators && variant != ModelVariant::SheafGCN) throw ConfigError("mediators requires variant sheaf_gcn");
        kindofcheck();
    }

private:
    void kindofcheck() const { map_kind.validate(stalk_dim); }
};

// ---------------------------------------------------------------------------
// Plain (tape-free) forms of the two layer operations, as library primitives.

// Per-node linear projection X (n x f_in) -> n x (d*f), then row-major
// reshape to nd x f: node v, stalk row k, channel c reads coordinate k*f+c.
inline Matrix input_embed(const Matrix& x, int d, int f, const Matrix& proj) {
    if (proj.rows() != x.cols() || proj.cols() != d * f) throw ShapeError("input_embed: projection must be f_in x (d*f)");
    const Matrix p = x * proj;
    return Matrix(x.rows() * d, f, p.data());
}

// Y = ReLU((I - Delta)(I_n kron W1) Xt W2).
inline Matrix layer_forward(const Matrix& xt, const BlockMatrix& delta, const Matrix& w1, const Matrix& w2) {
    const int d = w1.rows();
    if (w1.cols() != d || xt.rows() % d != 0) throw ShapeError("layer_forward: W1 must be d x d with nd rows in Xt");
    if (w2.rows() != xt.cols() || w2.cols() != xt.cols()) throw ShapeError("layer_forward: W2 must be f x f");
    Matrix z = xt * w2;
    const int n = xt.rows() / d;
    for (int v = 0; v < n; ++v) z.set_rows_block(v * d, w1 * z.rows_block(v * d, d));
    Matrix y = z - delta.apply(z);
    for (double& e : y.data())
        if (e < 0.0) e = 0.0;
    return y;
}

// ---------------------------------------------------------------------------

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_acc = 0.0;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    double test_acc = 0.0;
    double dirichlet_probe = 0.0;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["epochs"] = nlohmann::ordered_json::array();
        for (const auto& r : epochs) {
            nlohmann::ordered_json e;
            e["epoch"] = r.epoch;
            e["train_loss"] = r.train_loss;
            e["val_acc"] = r.val_acc;
            j["epochs"].push_back(std::move(e));
        }
        j["test_acc"] = test_acc;
        j["dirichlet_probe"] = dirichlet_probe;
        return j;
    }
};

namespace detail {

struct ParamTensor {
    std::string name;
    Matrix value;
    Matrix m1, m2;  // Adam moments
};

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

}  // namespace detail

class SheafHyperModel {
public:
    struct ForwardResult {
        ad::Node* logits = nullptr;
        ad::Node* final_rep = nullptr;  // n x (d*f) flattened representation
    };

    SheafHyperModel(const Hypergraph& h, const ModelConfig& cfg) : h_(&h), cfg_(cfg) {
        cfg_.validate();
        if (!h.features) throw ConfigError("model requires node features");
        if (cfg_.trivial_sheaf) cfg_.learn_w1 = false;
        f_in_ = h.features->cols();
        const int d = cfg_.stalk_dim, f = cfg_.hidden_channels;
        classes_ = h.labels ? std::max(h.num_classes(), 2) : 2;
        Rng rng(cfg_.seed);
        add_param("proj", glorot(rng, f_in_, d * f));
        if (!cfg_.trivial_sheaf) {
            const int w = cfg_.map_kind.param_width(d);
            add_param("pred.w_hidden", glorot(rng, w, 2 * d * f));
            add_param("pred.b_hidden", Matrix(1, w));
            add_param("pred.w_out", glorot(rng, w, w));
            add_param("pred.b_out", Matrix(1, w));
        }
        for (int l = 0; l < cfg_.layers; ++l) {
            if (cfg_.learn_w1) add_param("w1." + std::to_string(l), glorot(rng, d, d));
            add_param("w2." + std::to_string(l), glorot(rng, f, f));
        }
        add_param("cls.w", glorot(rng, d * f, classes_));
        add_param("cls.b", Matrix(1, classes_));
    }

    std::vector<detail::ParamTensor>& params() { return params_; }
    const ModelConfig& config() const { return cfg_; }

    // Builds the full forward graph on the tape. `round` seeds the dropout
    // mask and the nonlinear tie-break streams for this pass.
    ForwardResult forward(ad::Tape& t, bool training, std::uint64_t round) {
        const Hypergraph& h = *h_;
        const int d = cfg_.stalk_dim, f = cfg_.hidden_channels, n = h.num_nodes;
        Rng drop_rng(detail::mix_seed(cfg_.seed ^ 0x5d10ff05ULL, round));
        last_selection_margin_ = std::numeric_limits<double>::infinity();

        std::vector<ad::Node*> leaves(params_.size());
        for (std::size_t i = 0; i < params_.size(); ++i) leaves[i] = t.leaf(params_[i].value);
        leaf_index_.clear();
        for (std::size_t i = 0; i < params_.size(); ++i) leaf_index_[params_[i].name] = leaves[i];

        ad::Node* x_in = t.leaf(*h.features, /*needs_grad=*/false);
        ad::Node* flat = ad::matmul(t, x_in, leaf("proj"));  // n x (d*f)
        ad::Node* xt = ad::reshape(t, flat, n * d, f);

        ad::Node* sheaf_params = nullptr;
        if (cfg_.trivial_sheaf) {
            const int pw = cfg_.map_kind.param_width(d);
            Matrix ones(static_cast<int>(incidence_pairs(h).size()), pw);
            for (double& e : ones.data()) e = 1.0;
            sheaf_params = t.leaf(std::move(ones), /*needs_grad=*/false);
        } else if (cfg_.sheaf_policy == SheafPolicy::FixedFirstLayer) {
            sheaf_params = predict_params(t, flat);
        }

        ad::Node* w1_const = nullptr;
        if (!cfg_.learn_w1) w1_const = t.leaf(Matrix::identity(d), /*needs_grad=*/false);

        for (int l = 0; l < cfg_.layers; ++l) {
            ad::Node* params_l = sheaf_params;
            if (!params_l) params_l = predict_params(t, ad::reshape(t, xt, n, d * f));
            ad::Node* z = ad::matmul(t, xt, leaf("w2." + std::to_string(l)));
            ad::Node* w1 = cfg_.learn_w1 ? leaf("w1." + std::to_string(l)) : w1_const;
            z = ad::kron_apply(t, w1, z, n, d);
            ctx_scratch_.push_back(std::make_unique<LayerCtx>());
            LayerCtx& lc = *ctx_scratch_.back();
            lc.selection = xt->val;
            ad::SheafApplyContext ctx;
            ctx.h = h_;
            ctx.d = d;
            ctx.kind = cfg_.map_kind;
            ctx.variant = cfg_.variant == ModelVariant::SheafGCN ? ad::LaplacianVariant::Nonlinear
                                                                 : ad::LaplacianVariant::Linear;
            ctx.mediators = cfg_.mediators;
            ctx.norm_mode = cfg_.norm_mode;
            ctx.norm_style = cfg_.norm_style;
            ctx.epsilon = cfg_.epsilon;
            ctx.pair_seed = detail::mix_seed(cfg_.seed ^ 0x70a1ULL, round * 64 + static_cast<std::uint64_t>(l));
            if (ctx.variant == ad::LaplacianVariant::Nonlinear) {
                ctx.selection_signal = &lc.selection;
                ctx.selection_margin = &last_selection_margin_;
            }
            ad::Node* dz = ad::sheaf_delta_apply(t, ctx, params_l, z);
            xt = ad::relu(t, ad::sub(t, z, dz));
            xt = ad::dropout(t, xt, cfg_.dropout, drop_rng, training);
        }

        ForwardResult r;
        r.final_rep = ad::reshape(t, xt, n, d * f);
        r.logits = ad::add_bias(t, ad::matmul(t, r.final_rep, leaf("cls.w")), leaf("cls.b"));
        return r;
    }

    // Smallest pair-selection margin seen during the most recent forward
    // (infinite for linear variants or when no selection ran). Near-zero
    // margins mean the tie-break stream decided a pair, so the forward map is
    // not locally constant in its selection at that point.
    double last_selection_margin() const { return last_selection_margin_; }

    // Gradients accumulated on the most recent tape's leaves, one matrix per
    // parameter in params() order. Untouched leaves read as zero.
    std::vector<Matrix> leaf_gradients() const {
        std::vector<Matrix> g;
        g.reserve(params_.size());
        for (const auto& p : params_) {
            const ad::Node* lf = leaf_index_.at(p.name);
            g.push_back(lf->grad.empty() ? Matrix(p.value.rows(), p.value.cols()) : lf->grad);
        }
        return g;
    }

    // Copies gradients accumulated on the current tape's leaves back into the
    // parameter tensors and applies one Adam step.
    void adam_step(double& t_counter) {
        t_counter += 1.0;
        const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        const double c1 = 1.0 - std::pow(b1, t_counter);
        const double c2 = 1.0 - std::pow(b2, t_counter);
        for (auto& p : params_) {
            ad::Node* lf = leaf_index_.at(p.name);
            Matrix g = lf->grad.empty() ? Matrix(p.value.rows(), p.value.cols()) : lf->grad;
            if (cfg_.weight_decay > 0.0)
                for (std::size_t i = 0; i < g.data().size(); ++i) g.data()[i] += cfg_.weight_decay * p.value.data()[i];
            if (p.m1.empty()) {
                p.m1 = Matrix(p.value.rows(), p.value.cols());
                p.m2 = Matrix(p.value.rows(), p.value.cols());
            }
            for (std::size_t i = 0; i < g.data().size(); ++i) {
                p.m1.data()[i] = b1 * p.m1.data()[i] + (1.0 - b1) * g.data()[i];
                p.m2.data()[i] = b2 * p.m2.data()[i] + (1.0 - b2) * g.data()[i] * g.data()[i];
                const double mhat = p.m1.data()[i] / c1;
                const double vhat = p.m2.data()[i] / c2;
                p.value.data()[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + eps);
            }
        }
    }

private:
    struct LayerCtx {
        Matrix selection;
    };

    static Matrix glorot(Rng& rng, int rows, int cols) {
        Matrix m(rows, cols);
        const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
        for (double& e : m.data()) e = rng.uniform(-s, s);
        return m;
    }

    void add_param(std::string name, Matrix v) {
        detail::ParamTensor p;
        p.name = std::move(name);
        p.value = std::move(v);
        params_.push_back(std::move(p));
    }

    ad::Node* leaf(const std::string& name) { return leaf_index_.at(name); }

    // One-hidden-layer perceptron over (x_v || h_e) per incidence pair,
    // squashed into the map parameter range.
    ad::Node* predict_params(ad::Tape& t, ad::Node* nodefeat) {
        const Hypergraph& h = *h_;
        ad::Node* he = ad::edge_mean(t, h, nodefeat);
        const auto pairs = incidence_pairs(h);
        std::vector<int> vi, ei;
        vi.reserve(pairs.size());
        ei.reserve(pairs.size());
        for (const auto& [v, e] : pairs) {
            ei.push_back(e);
            vi.push_back(v);
        }
        ad::Node* in = ad::concat_cols(t, ad::gather_rows(t, nodefeat, vi), ad::gather_rows(t, he, ei));
        ad::Node* hid = ad::relu(t, ad::add_bias(t, ad::matmul_nt(t, in, leaf("pred.w_hidden")), leaf("pred.b_hidden")));
        ad::Node* out = ad::add_bias(t, ad::matmul_nt(t, hid, leaf("pred.w_out")), leaf("pred.b_out"));
        return cfg_.squash == Squash::Tanh ? ad::tanh_op(t, out) : ad::sigmoid_op(t, out);
    }

    const Hypergraph* h_;
    ModelConfig cfg_;
    int f_in_ = 0;
    int classes_ = 2;
    std::vector<detail::ParamTensor> params_;
    std::map<std::string, ad::Node*> leaf_index_;
    std::vector<std::unique_ptr<LayerCtx>> ctx_scratch_;
    double last_selection_margin_ = std::numeric_limits<double>::infinity();
};

namespace detail {

inline double accuracy(const Matrix& logits, const std::vector<int>& labels, const std::vector<int>& idx) {
    if (idx.empty()) return 0.0;
    int hits = 0;
    for (int i : idx) {
        int best = 0;
        for (int j = 1; j < logits.cols(); ++j)
            if (logits(i, j) > logits(i, best)) best = j;
        if (best == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(idx.size());
}

}  // namespace detail

// Trivial-sheaf Dirichlet energy of a flattened node representation
// (n x k channels), measuring neighborhood uniformity.
inline double dirichlet_probe(const Hypergraph& h, const Matrix& rep) {
    Sheaf s = trivial_sheaf(h);
    const Normalizer nm = normalizer(h, s, NormalizerMode::Sheaf, NormalizerStyle::Symmetric, 1e-6);
    return dirichlet_energy(h, s, nm, rep).value;
}

inline TrainReport train_model(const Hypergraph& h, const Splits& splits, const ModelConfig& cfg) {
    if (!h.labels) throw ConfigError("train_model: hypergraph has no labels");
    if (!h.features) throw ConfigError("train_model: hypergraph has no features");
    {
        std::vector<char> seen(static_cast<std::size_t>(h.num_nodes), 0);
        for (const auto* part : {&splits.train, &splits.val, &splits.test})
            for (int i : *part) {
                if (i < 0 || i >= h.num_nodes) throw ConfigError("train_model: split index out of range");
                if (seen[static_cast<std::size_t>(i)]++) throw ConfigError("train_model: splits are not disjoint");
            }
        if (splits.train.empty()) throw ConfigError("train_model: empty training split");
    }

    SheafHyperModel model(h, cfg);
    TrainReport report;
    double adam_t = 0.0;
    double best_val = -1.0;
    std::vector<Matrix> best_params;
    for (const auto& p : model.params()) best_params.push_back(p.value);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double train_loss;
        {
            ad::Tape t;
            auto fr = model.forward(t, /*training=*/true, static_cast<std::uint64_t>(epoch));
            ad::Node* loss = ad::softmax_cross_entropy(t, fr.logits, *h.labels, splits.train);
            train_loss = loss->val(0, 0);
            t.backward(loss);
            model.adam_step(adam_t);
        }
        double val_acc;
        {
            ad::Tape t;
            auto fr = model.forward(t, /*training=*/false, 0);
            val_acc = detail::accuracy(fr.logits->val, *h.labels, splits.val);
        }
        report.epochs.push_back({epoch, train_loss, val_acc});
        if (val_acc > best_val) {
            best_val = val_acc;
            for (std::size_t i = 0; i < best_params.size(); ++i) best_params[i] = model.params()[i].value;
        }
    }

    for (std::size_t i = 0; i < best_params.size(); ++i) model.params()[i].value = best_params[i];
    ad::Tape t;
    auto fr = model.forward(t, /*training=*/false, 0);
    report.test_acc = detail::accuracy(fr.logits->val, *h.labels, splits.test);
    report.dirichlet_probe = dirichlet_probe(h, fr.final_rep->val);
    return report;
}

}  // namespace shnn
