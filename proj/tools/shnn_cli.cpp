// Command-line driver: dataset generation, Laplacian export, diffusion runs,
// property verification and model training.
//
// Exit codes: 0 success, 1 property failure, 2 usage error, 3 I/O error.
#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "shnn/diffusion.hpp"
#include "shnn/energy.hpp"
#include "shnn/hypergraph.hpp"
#include "shnn/laplacian.hpp"
#include "shnn/model.hpp"
#include "shnn/sheaf.hpp"
#include "shnn/synth.hpp"
#include "shnn/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPropertyFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

// Applies --config file values as defaults: any key present in the file and
// not given on the command line is appended as a flag, so explicit flags win.
std::vector<std::string> merge_config_file(const std::vector<std::string>& args) {
    std::string path;
    for (std::size_t i = 0; i + 1 < args.size(); ++i)
        if (args[i] == "--config") path = args[i + 1];
    if (path.empty()) return args;
    std::ifstream in(path);
    if (!in) throw shnn::IoError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw shnn::ParseError(std::string("config file: ") + e.what());
    }
    std::vector<std::string> merged = args;
    for (const auto& [key, value] : j.items()) {
        const std::string flag = "--" + key;
        bool given = false;
        for (const auto& a : args)
            if (a == flag) given = true;
        if (given) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) merged.push_back(flag);
        } else {
            merged.push_back(flag);
            merged.push_back(value.is_string() ? value.get<std::string>() : value.dump());
        }
    }
    return merged;
}

void echo_config(const std::string& cmd, const nlohmann::ordered_json& resolved) {
    std::cout << "resolved-config " << cmd << " " << resolved.dump() << "\n";
}

shnn::Hypergraph load_data(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw shnn::IoError("cannot open dataset: " + path);
    return shnn::load_hypergraph(in);
}

struct SheafFlags {
    int d = 1;
    std::string kind = "diag";
    int rank = 1;
    std::uint64_t seed = 0;
    bool trivial = false;

    shnn::MapKind map_kind() const {
        if (kind == "diag") return shnn::MapKind::diagonal();
        if (kind == "lowrank") return shnn::MapKind::low_rank(rank);
        if (kind == "general") return shnn::MapKind::general();
        throw shnn::ConfigError("unknown map kind: " + kind);
    }

    shnn::Sheaf build(const shnn::Hypergraph& h) const {
        if (trivial) return shnn::trivial_sheaf(h);
        return shnn::random_sheaf(h, d, map_kind(), seed);
    }
};

shnn::NormalizerMode parse_norm_mode(const std::string& s) {
    if (s == "sheaf") return shnn::NormalizerMode::Sheaf;
    if (s == "degree") return shnn::NormalizerMode::Degree;
    throw shnn::ConfigError("unknown normalization mode: " + s);
}

shnn::NormalizerStyle parse_norm_style(const std::string& s) {
    if (s == "symmetric") return shnn::NormalizerStyle::Symmetric;
    if (s == "asymmetric") return shnn::NormalizerStyle::Asymmetric;
    throw shnn::ConfigError("unknown normalization style: " + s);
}

int cmd_gen_synth(int num_nodes, int num_edges, int cardinality, std::optional<int> alpha, std::optional<int> beta,
                  int feature_dim, double mean_separation, double noise_std, std::uint64_t seed,
                  const std::string& out) {
    shnn::SynthConfig cfg;
    cfg.num_nodes = num_nodes;
    cfg.num_hyperedges = num_edges;
    cfg.cardinality = cardinality;
    cfg.feature_dim = feature_dim;
    cfg.mean_separation = mean_separation;
    cfg.noise_std = noise_std;
    cfg.seed = seed;
    if (alpha && beta) throw shnn::ConfigError("give either --alpha or --beta, not both");
    if (alpha) {
        if (*alpha < 1 || *alpha > cfg.cardinality / 2)
            throw shnn::ConfigError("--alpha must lie in 1..floor(cardinality/2)");
        cfg.beta = *alpha;
    } else if (beta) {
        if (*beta < 1 || *beta >= cfg.cardinality) throw shnn::ConfigError("--beta must lie in 1..cardinality-1");
        cfg.beta = *beta;
    } else {
        throw shnn::ConfigError("one of --alpha or --beta is required");
    }
    cfg.validate();

    nlohmann::ordered_json rc;
    rc["nodes"] = cfg.num_nodes;
    rc["edges"] = cfg.num_hyperedges;
    rc["cardinality"] = cfg.cardinality;
    rc["beta"] = cfg.beta;
    rc["alpha"] = cfg.alpha();
    rc["feature-dim"] = cfg.feature_dim;
    rc["mean-separation"] = cfg.mean_separation;
    rc["noise-std"] = cfg.noise_std;
    rc["seed"] = seed;
    rc["out"] = out;
    echo_config("gen-synth", rc);

    const shnn::Hypergraph h = shnn::generate(cfg);
    std::ofstream os(out);
    if (!os) throw shnn::IoError("cannot open output file: " + out);
    shnn::save_hypergraph(h, os);
    if (!os) throw shnn::IoError("write failed: " + out);

    int c0 = 0, c1 = 0;
    for (int l : *h.labels) (l == 0 ? c0 : c1)++;
    std::cout << "alpha " << cfg.alpha() << "\n";
    std::cout << "class-counts 0:" << c0 << " 1:" << c1 << "\n";
    return kExitOk;
}

int cmd_verify(int trials, std::uint64_t seed, int max_nodes, bool inject_asymmetry) {
    nlohmann::ordered_json rc;
    rc["trials"] = trials;
    rc["seed"] = seed;
    rc["max-nodes"] = max_nodes;
    rc["inject-asymmetry"] = inject_asymmetry;
    echo_config("verify", rc);

    shnn::verify::Options opt;
    opt.trials = trials;
    opt.seed = seed;
    opt.max_nodes = max_nodes;
    opt.inject_asymmetry = inject_asymmetry;
    bool all = true;
    for (const auto& r : shnn::verify::run_all(opt)) {
        std::cout << (r.pass ? "PASS" : "FAIL") << " " << r.name << " trials=" << r.trials << " worst=" << r.worst;
        if (!r.pass) std::cout << " (" << r.detail << ")";
        std::cout << "\n";
        all = all && r.pass;
    }
    return all ? kExitOk : kExitPropertyFailure;
}

int cmd_build_lap(const std::string& data, const SheafFlags& sf, const std::string& law, bool mediators,
                  const std::string& norm, const std::string& style, double epsilon, const std::string& out) {
    nlohmann::ordered_json rc;
    rc["data"] = data;
    rc["law"] = law;
    rc["trivial"] = sf.trivial;
    rc["d"] = sf.trivial ? 1 : sf.d;
    rc["kind"] = sf.kind;
    rc["rank"] = sf.rank;
    rc["mediators"] = mediators;
    rc["norm"] = norm;
    rc["style"] = style;
    rc["epsilon"] = epsilon;
    rc["seed"] = sf.seed;
    rc["out"] = out;
    echo_config("build-lap", rc);

    const shnn::Hypergraph h = load_data(data);
    const shnn::Sheaf s = sf.build(h);
    shnn::Normalizer nm = shnn::Normalizer::identity(h.num_nodes, s.stalk_dim);
    if (norm != "none")
        nm = shnn::normalizer(h, s, parse_norm_mode(norm), parse_norm_style(style), epsilon);

    shnn::BlockMatrix lap(h.num_nodes, s.stalk_dim);
    if (law == "linear") {
        lap = shnn::linear_laplacian(h, s);
    } else if (law == "nonlinear") {
        if (!h.features) throw shnn::ConfigError("nonlinear law needs node features as the signal");
        shnn::Matrix x(h.num_nodes * s.stalk_dim, 1);
        for (int v = 0; v < h.num_nodes; ++v)
            for (int k = 0; k < s.stalk_dim; ++k) x(v * s.stalk_dim + k, 0) = (*h.features)(v, k % h.features->cols());
        lap = shnn::nonlinear_laplacian(h, s, x, mediators, norm == "none" ? nullptr : &nm, sf.seed);
    } else {
        throw shnn::ConfigError("unknown law: " + law);
    }
    if (norm != "none") lap = shnn::normalize(lap, nm);

    std::ofstream os(out);
    if (!os) throw shnn::IoError("cannot open output file: " + out);
    lap.export_coordinates(os);
    if (!os) throw shnn::IoError("write failed: " + out);
    std::cout << "wrote " << out << "\n";
    return kExitOk;
}

int cmd_diffuse(const std::string& data, const SheafFlags& sf, const std::string& law, int steps, double eta,
                bool mediators, const std::string& norm, const std::string& style, double epsilon,
                const std::string& out) {
    nlohmann::ordered_json rc;
    rc["data"] = data;
    rc["law"] = law;
    rc["steps"] = steps;
    rc["eta"] = eta;
    rc["trivial"] = sf.trivial;
    rc["d"] = sf.d;
    rc["kind"] = sf.kind;
    rc["rank"] = sf.rank;
    rc["mediators"] = mediators;
    rc["norm"] = norm;
    rc["style"] = style;
    rc["epsilon"] = epsilon;
    rc["seed"] = sf.seed;
    rc["out"] = out;
    echo_config("diffuse", rc);

    const shnn::Hypergraph h = load_data(data);
    const shnn::Sheaf s = sf.build(h);
    const shnn::Normalizer nm =
        norm == "none" ? shnn::Normalizer::identity(h.num_nodes, s.stalk_dim)
                       : shnn::normalizer(h, s, parse_norm_mode(norm), parse_norm_style(style), epsilon);

    // Signal: node features tiled across the stalk, or a seeded normal signal.
    shnn::Matrix x(h.num_nodes * s.stalk_dim, h.features ? h.features->cols() : 1);
    if (h.features) {
        for (int v = 0; v < h.num_nodes; ++v)
            for (int k = 0; k < s.stalk_dim; ++k)
                for (int c = 0; c < h.features->cols(); ++c) x(v * s.stalk_dim + k, c) = (*h.features)(v, c);
    } else {
        shnn::Rng rng(sf.seed);
        for (double& v : x.data()) v = rng.normal();
    }

    shnn::EnergyTrace trace;
    if (law == "linear") {
        trace = shnn::diffuse_linear(h, s, nm, x, steps).second;
    } else if (law == "nonlinear") {
        trace = shnn::diffuse_nonlinear(h, s, nm, x, steps, eta, mediators, sf.seed).second;
    } else {
        throw shnn::ConfigError("unknown law: " + law);
    }

    std::ofstream os(out);
    if (!os) throw shnn::IoError("cannot open output file: " + out);
    shnn::write_trace_csv(trace, os);
    if (!os) throw shnn::IoError("write failed: " + out);
    std::cout << "wrote " << out << " (" << trace.steps.size() << " rows)\n";
    return kExitOk;
}

int cmd_train(const std::string& data, const std::string& variant, const SheafFlags& sf, int layers, int hidden,
              bool learn_w1, const std::string& policy, bool mediators, const std::string& norm,
              const std::string& style, double epsilon, const std::string& squash, double dropout, double lr,
              double weight_decay, int epochs, double train_frac, double val_frac, const std::string& out) {
    shnn::ModelConfig cfg;
    if (variant == "sheaf_gnn")
        cfg.variant = shnn::ModelVariant::SheafGNN;
    else if (variant == "sheaf_gcn")
        cfg.variant = shnn::ModelVariant::SheafGCN;
    else
        throw shnn::ConfigError("unknown variant: " + variant);
    cfg.stalk_dim = sf.trivial ? 1 : sf.d;
    cfg.map_kind = sf.trivial ? shnn::MapKind::diagonal() : sf.map_kind();
    cfg.trivial_sheaf = sf.trivial;
    cfg.layers = layers;
    cfg.hidden_channels = hidden;
    cfg.learn_w1 = learn_w1 && !sf.trivial;
    cfg.sheaf_policy = policy == "recompute_each_layer" ? shnn::SheafPolicy::RecomputeEachLayer
                                                        : shnn::SheafPolicy::FixedFirstLayer;
    if (policy != "fixed_first_layer" && policy != "recompute_each_layer")
        throw shnn::ConfigError("unknown sheaf policy: " + policy);
    cfg.mediators = mediators;
    cfg.norm_mode = parse_norm_mode(norm);
    cfg.norm_style = parse_norm_style(style);
    cfg.epsilon = epsilon;
    if (squash == "tanh")
        cfg.squash = shnn::Squash::Tanh;
    else if (squash == "sigmoid")
        cfg.squash = shnn::Squash::Sigmoid;
    else
        throw shnn::ConfigError("unknown squash: " + squash);
    cfg.dropout = dropout;
    cfg.lr = lr;
    cfg.weight_decay = weight_decay;
    cfg.epochs = epochs;
    cfg.seed = sf.seed;
    cfg.validate();

    nlohmann::ordered_json rc;
    rc["data"] = data;
    rc["variant"] = variant;
    rc["trivial"] = sf.trivial;
    rc["d"] = cfg.stalk_dim;
    rc["kind"] = sf.kind;
    rc["rank"] = sf.rank;
    rc["layers"] = layers;
    rc["hidden"] = hidden;
    rc["learn-w1"] = cfg.learn_w1;
    rc["policy"] = policy;
    rc["mediators"] = mediators;
    rc["norm"] = norm;
    rc["style"] = style;
    rc["epsilon"] = epsilon;
    rc["squash"] = squash;
    rc["dropout"] = dropout;
    rc["lr"] = lr;
    rc["weight-decay"] = weight_decay;
    rc["epochs"] = epochs;
    rc["train-frac"] = train_frac;
    rc["val-frac"] = val_frac;
    rc["seed"] = sf.seed;
    rc["out"] = out;
    echo_config("train", rc);

    const shnn::Hypergraph h = load_data(data);
    const shnn::Splits splits = shnn::split(h.num_nodes, train_frac, val_frac, 1.0 - train_frac - val_frac, sf.seed);
    const shnn::TrainReport report = shnn::train_model(h, splits, cfg);

    std::ofstream os(out);
    if (!os) throw shnn::IoError("cannot open output file: " + out);
    os << report.to_json().dump(2) << "\n";
    if (!os) throw shnn::IoError("write failed: " + out);
    std::cout << "test_acc " << shnn::format_double(report.test_acc) << "\n";
    std::cout << "dirichlet_probe " << shnn::format_double(report.dirichlet_probe) << "\n";
    std::cout << "wrote " << out << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        args = merge_config_file(args);
    } catch (const shnn::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const shnn::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    CLI::App app{"cellular sheaves on hypergraphs: generation, Laplacians, diffusion, verification, training"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file; explicit flags take precedence");

    // gen-synth
    auto* gen = app.add_subcommand("gen-synth", "generate a contextual hypergraph SBM dataset");
    int g_nodes = 5000, g_edges = 1000, g_card = 15, g_fdim = 10;
    std::optional<int> g_alpha, g_beta;
    double g_sep = 1.0, g_noise = 1.0;
    std::uint64_t g_seed = 0;
    std::string g_out;
    gen->add_option("--nodes", g_nodes, "number of nodes");
    gen->add_option("--edges", g_edges, "number of hyperedges");
    gen->add_option("--cardinality", g_card, "hyperedge cardinality");
    gen->add_option("--alpha", g_alpha, "heterophily level (1..floor(cardinality/2))");
    gen->add_option("--beta", g_beta, "class-0 members per hyperedge");
    gen->add_option("--feature-dim", g_fdim, "feature dimension");
    gen->add_option("--mean-separation", g_sep, "class mean separation");
    gen->add_option("--noise-std", g_noise, "feature noise standard deviation");
    gen->add_option("--seed", g_seed, "random seed");
    gen->add_option("--out", g_out, "output dataset path")->required();

    // verify
    auto* ver = app.add_subcommand("verify", "run the randomized property suites");
    int v_trials = 50, v_max_nodes = 8;
    std::uint64_t v_seed = 0;
    bool v_inject = false;
    ver->add_option("--trials", v_trials, "trials per property");
    ver->add_option("--seed", v_seed, "master seed");
    ver->add_option("--max-nodes", v_max_nodes, "largest random instance");
    ver->add_flag("--inject-asymmetry", v_inject, "test hook: corrupt a block and expect failure");

    // shared sheaf flags for build-lap / diffuse / train
    auto add_sheaf_flags = [](CLI::App* c, SheafFlags& sf) {
        c->add_option("--d", sf.d, "stalk dimension");
        c->add_option("--kind", sf.kind, "map kind: diag | lowrank | general");
        c->add_option("--rank", sf.rank, "rank for lowrank maps");
        c->add_option("--seed", sf.seed, "random seed");
        c->add_flag("--trivial", sf.trivial, "use the trivial sheaf (d=1, unit maps)");
    };

    // build-lap
    auto* bl = app.add_subcommand("build-lap", "build a Laplacian and export it as a coordinate list");
    std::string bl_data, bl_law = "linear", bl_norm = "none", bl_style = "symmetric", bl_out;
    bool bl_mediators = false;
    double bl_eps = 1e-6;
    SheafFlags bl_sf;
    bl->add_option("--data", bl_data, "dataset path")->required();
    bl->add_option("--law", bl_law, "linear | nonlinear");
    bl->add_flag("--mediators", bl_mediators, "mediators variant (nonlinear)");
    bl->add_option("--norm", bl_norm, "none | sheaf | degree");
    bl->add_option("--style", bl_style, "symmetric | asymmetric");
    bl->add_option("--epsilon", bl_eps, "normalizer epsilon");
    bl->add_option("--out", bl_out, "output path")->required();
    add_sheaf_flags(bl, bl_sf);

    // diffuse
    auto* df = app.add_subcommand("diffuse", "run diffusion and write the energy trace CSV");
    std::string df_data, df_law = "linear", df_norm = "sheaf", df_style = "symmetric", df_out;
    int df_steps = 10;
    double df_eta = 0.1, df_eps = 1e-6;
    bool df_mediators = false;
    SheafFlags df_sf;
    df->add_option("--data", df_data, "dataset path")->required();
    df->add_option("--law", df_law, "linear | nonlinear");
    df->add_option("--steps", df_steps, "diffusion steps");
    df->add_option("--eta", df_eta, "step size (nonlinear)");
    df->add_flag("--mediators", df_mediators, "mediators variant (nonlinear)");
    df->add_option("--norm", df_norm, "none | sheaf | degree");
    df->add_option("--style", df_style, "symmetric | asymmetric");
    df->add_option("--epsilon", df_eps, "normalizer epsilon");
    df->add_option("--out", df_out, "output CSV path")->required();
    add_sheaf_flags(df, df_sf);

    // train
    auto* tr = app.add_subcommand("train", "train a sheaf hypergraph model and write the report JSON");
    std::string tr_data, tr_variant = "sheaf_gnn", tr_policy = "fixed_first_layer";
    std::string tr_norm = "degree", tr_style = "symmetric", tr_squash = "tanh", tr_out = "report.json";
    int tr_layers = 2, tr_hidden = 16, tr_epochs = 100;
    bool tr_mediators = false, tr_no_w1 = false;
    double tr_eps = 1e-6, tr_dropout = 0.0, tr_lr = 0.01, tr_wd = 0.0, tr_train_frac = 0.5, tr_val_frac = 0.25;
    SheafFlags tr_sf;
    tr_sf.d = 2;
    tr->add_option("--data", tr_data, "dataset path")->required();
    tr->add_option("--variant", tr_variant, "sheaf_gnn | sheaf_gcn");
    tr->add_option("--layers", tr_layers, "number of layers");
    tr->add_option("--hidden", tr_hidden, "hidden channels per stalk row");
    tr->add_flag("--no-w1", tr_no_w1, "freeze W1 as the identity");
    tr->add_option("--policy", tr_policy, "fixed_first_layer | recompute_each_layer");
    tr->add_flag("--mediators", tr_mediators, "mediators variant (sheaf_gcn)");
    tr->add_option("--norm", tr_norm, "sheaf | degree");
    tr->add_option("--style", tr_style, "symmetric | asymmetric");
    tr->add_option("--epsilon", tr_eps, "normalizer epsilon");
    tr->add_option("--squash", tr_squash, "tanh | sigmoid");
    tr->add_option("--dropout", tr_dropout, "dropout rate in [0,1)");
    tr->add_option("--lr", tr_lr, "Adam learning rate");
    tr->add_option("--weight-decay", tr_wd, "L2 weight decay");
    tr->add_option("--epochs", tr_epochs, "training epochs");
    tr->add_option("--train-frac", tr_train_frac, "train split fraction");
    tr->add_option("--val-frac", tr_val_frac, "validation split fraction");
    tr->add_option("--out", tr_out, "report output path");
    add_sheaf_flags(tr, tr_sf);

    try {
        // CLI11's vector overload consumes arguments as a stack (reversed).
        std::vector<std::string> stack(args.rbegin(), args.rend());
        app.parse(stack);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (gen->parsed())
            return cmd_gen_synth(g_nodes, g_edges, g_card, g_alpha, g_beta, g_fdim, g_sep, g_noise, g_seed, g_out);
        if (ver->parsed()) return cmd_verify(v_trials, v_seed, v_max_nodes, v_inject);
        if (bl->parsed())
            return cmd_build_lap(bl_data, bl_sf, bl_law, bl_mediators, bl_norm, bl_style, bl_eps, bl_out);
        if (df->parsed())
            return cmd_diffuse(df_data, df_sf, df_law, df_steps, df_eta, df_mediators, df_norm, df_style, df_eps,
                               df_out);
        if (tr->parsed())
            return cmd_train(tr_data, tr_variant, tr_sf, tr_layers, tr_hidden, !tr_no_w1, tr_policy, tr_mediators,
                             tr_norm, tr_style, tr_eps, tr_squash, tr_dropout, tr_lr, tr_wd, tr_epochs, tr_train_frac,
                             tr_val_frac, tr_out);
    } catch (const shnn::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const shnn::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
