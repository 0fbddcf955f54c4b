// Linear and non-linear sheaf hypergraph Laplacians as block operators, with
// degree- and sheaf-based normalization and the mediators extension.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "shnn/block_matrix.hpp"
#include "shnn/errors.hpp"
#include "shnn/hypergraph.hpp"
#include "shnn/rng.hpp"
#include "shnn/sheaf.hpp"
#include "shnn/spectral.hpp"

namespace shnn {

// Row offset of each hyperedge's incidence run in canonical order, so the
// restriction map of (v in e) is params[offset[e] + position of v in e].
inline std::vector<int> incidence_offsets(const Hypergraph& h) {
    std::vector<int> off(h.num_hyperedges() + 1, 0);
    for (int e = 0; e < h.num_hyperedges(); ++e) off[e + 1] = off[e] + static_cast<int>(h.hyperedges[e].size());
    return off;
}

// One directed relation (e, v, u): node v receives (1/delta_e) F_v^T (F_v x_v - F_u x_u).
struct Relation {
    int edge;
    int v;
    int u;
};

// Full-clique relation list of the linear Laplacian: every ordered pair of
// distinct nodes inside every hyperedge, ascending (edge, v, u).
inline std::vector<Relation> linear_relations(const Hypergraph& h) {
    std::vector<Relation> rel;
    for (int e = 0; e < h.num_hyperedges(); ++e) {
        const auto& mem = h.hyperedges[e];
        for (int v : mem)
            for (int u : mem)
                if (u != v) rel.push_back({e, v, u});
    }
    return rel;
}

// Materialized restriction maps in canonical incidence order.
inline std::vector<Matrix> materialize_all(const Hypergraph& h, const Sheaf& s) {
    check_hosted(h, s);
    std::vector<Matrix> maps;
    maps.reserve(s.params.size());
    for (std::size_t i = 0; i < s.params.size(); ++i) maps.push_back(s.map(i));
    return maps;
}

namespace detail {

// Index of node u inside sorted hyperedge e.
inline int edge_position(const Hypergraph& h, int e, int u) {
    const auto& mem = h.hyperedges[e];
    auto it = std::lower_bound(mem.begin(), mem.end(), u);
    return static_cast<int>(it - mem.begin());
}

// Assembles blocks from a relation list. Per relation (e, v, u) with weight
// 1/delta_e: diagonal block v gains F_v^T F_v, off-diagonal (v, u) loses
// F_v^T F_u. The cross product is computed once per relation with a fixed
// inner summation order so that block(u,v) == block(v,u)^T holds exactly.
inline BlockMatrix assemble(const Hypergraph& h, const std::vector<Matrix>& maps, int d,
                            const std::vector<Relation>& rel) {
    BlockMatrix l(h.num_nodes, d);
    const auto off = incidence_offsets(h);
    for (const auto& r : rel) {
        const double w = 1.0 / static_cast<double>(h.hyperedges[r.edge].size());
        const Matrix& fv = maps[off[r.edge] + edge_position(h, r.edge, r.v)];
        const Matrix& fu = maps[off[r.edge] + edge_position(h, r.edge, r.u)];
        l.add_to_block(r.v, r.v, fv.transpose() * fv * w);
        l.add_to_block(r.v, r.u, fv.transpose() * fu * -w);
    }
    return l;
}

}  // namespace detail

inline BlockMatrix linear_laplacian(const Hypergraph& h, const Sheaf& s) {
    return detail::assemble(h, materialize_all(h, s), s.stalk_dim, linear_relations(h));
}

enum class NormalizerMode { Degree, Sheaf };
enum class NormalizerStyle { Symmetric, Asymmetric };

// Per-node normalization blocks: D_v and either D_v^{-1/2} (symmetric) or
// D_v^{-1} (asymmetric).
struct Normalizer {
    NormalizerMode mode = NormalizerMode::Sheaf;
    NormalizerStyle style = NormalizerStyle::Symmetric;
    double epsilon = 0.0;
    std::vector<Matrix> d_blocks;
    std::vector<Matrix> scale_blocks;  // inverse square roots or inverses

    static Normalizer identity(int n, int d) {
        Normalizer nm;
        nm.mode = NormalizerMode::Degree;
        nm.d_blocks.assign(n, Matrix::identity(d));
        nm.scale_blocks = nm.d_blocks;
        return nm;
    }
};

inline Normalizer normalizer(const Hypergraph& h, const Sheaf& s, NormalizerMode mode, NormalizerStyle style,
                             double epsilon = 1e-6) {
    if (epsilon < 0.0) throw ValidationError("epsilon must be nonnegative");
    const int d = s.stalk_dim;
    Normalizer nm;
    nm.mode = mode;
    nm.style = style;
    nm.epsilon = epsilon;
    nm.d_blocks.assign(h.num_nodes, Matrix::zeros(d, d));
    const auto pairs = incidence_pairs(h);
    if (mode == NormalizerMode::Sheaf) {
        check_hosted(h, s);
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const Matrix f = s.map(i);
            nm.d_blocks[pairs[i].first] += f.transpose() * f;
        }
        for (auto& b : nm.d_blocks)
            for (int i = 0; i < d; ++i) b(i, i) += epsilon;
    } else {
        const auto deg = degrees(h);
        for (int v = 0; v < h.num_nodes; ++v) {
            double dv = static_cast<double>(deg.node_degrees[v]);
            if (deg.node_degrees[v] == 0) dv = epsilon;
            for (int i = 0; i < d; ++i) nm.d_blocks[v](i, i) = dv;
        }
    }
    const bool inv_sqrt = style == NormalizerStyle::Symmetric;
    nm.scale_blocks.reserve(nm.d_blocks.size());
    for (const auto& b : nm.d_blocks) {
        bool diagonal = true;
        for (int i = 0; i < d && diagonal; ++i)
            for (int j = 0; j < d; ++j)
                if (i != j && b(i, j) != 0.0) {
                    diagonal = false;
                    break;
                }
        Matrix scale(d, d);
        if (diagonal) {
            for (int i = 0; i < d; ++i) {
                const double lam = b(i, i);
                if (lam < 1e-12) throw SingularBlock("normalizer block eigenvalue below 1e-12");
                scale(i, i) = inv_sqrt ? 1.0 / std::sqrt(lam) : 1.0 / lam;
            }
        } else {
            Matrix vecs;
            const std::vector<double> eig = eigen_sym(b, vecs);
            for (double lam : eig)
                if (lam < 1e-12) throw SingularBlock("normalizer block eigenvalue below 1e-12");
            // scale = V f(Lambda) V^T
            Matrix f(d, d);
            for (int i = 0; i < d; ++i) f(i, i) = inv_sqrt ? 1.0 / std::sqrt(eig[i]) : 1.0 / eig[i];
            scale = vecs * f * vecs.transpose();
            // Enforce exact symmetry of the inverse square root.
            for (int i = 0; i < d; ++i)
                for (int j = i + 1; j < d; ++j) scale(j, i) = scale(i, j);
        }
        nm.scale_blocks.push_back(std::move(scale));
    }
    return nm;
}

// Symmetric: Delta = D^{-1/2} L D^{-1/2}; asymmetric: Delta = D^{-1} L.
// For the symmetric style only the upper triangle (u <= v, and i <= j inside
// diagonal blocks) is computed; the rest is mirrored so block symmetry holds
// bit-exactly.
inline BlockMatrix normalize(const BlockMatrix& l, const Normalizer& nm) {
    const int d = l.block_dim();
    if (static_cast<int>(nm.scale_blocks.size()) != l.num_nodes() || (nm.scale_blocks.empty() ? d != 0 : nm.scale_blocks[0].rows() != d))
        throw ShapeError("normalize: normalizer and operator sizes disagree");
    BlockMatrix out(l.num_nodes(), d);
    if (nm.style == NormalizerStyle::Asymmetric) {
        for (const auto& [key, b] : l.blocks()) out.set_block(key.first, key.second, nm.scale_blocks[key.first] * b);
        return out;
    }
    for (const auto& [key, b] : l.blocks()) {
        const auto [u, v] = key;
        if (u > v) continue;
        Matrix m = nm.scale_blocks[u] * b * nm.scale_blocks[v];
        if (u == v) {
            for (int i = 0; i < d; ++i)
                for (int j = i + 1; j < d; ++j) m(j, i) = m(i, j);
            out.set_block(u, u, std::move(m));
        } else {
            out.set_block(v, u, m.transpose());
            out.set_block(u, v, std::move(m));
        }
    }
    return out;
}

// The hyperedge stalk image of node v's signal, F_v * (S_v * x_v) when a
// normalizer is supplied, F_v * x_v otherwise.
namespace detail {
inline Matrix stalk_image(const Matrix& f, const Normalizer* nm, int v, const Matrix& x, int d) {
    Matrix xv = x.rows_block(v * d, d);
    if (nm) xv = nm->scale_blocks[v] * xv;
    return f * xv;
}
}  // namespace detail

struct DiscrepantPair {
    int u = -1;
    int v = -1;
    std::vector<int> mediators;
    double dist2 = 0.0;
    // Gap between the winning squared distance and the runner-up; infinite
    // when the hyperedge admits only one candidate pair. A zero margin means
    // the selection was decided by the tie-break stream, i.e. the operator is
    // not locally constant in the signal at this point.
    double margin = std::numeric_limits<double>::infinity();
};

// Per hyperedge: the pair of members maximizing the squared hyperedge-stalk
// distance of the (optionally normalized) signal, Frobenius over channels.
// Ties are broken uniformly from the seeded generator.
inline std::vector<DiscrepantPair> discrepant_pairs(const Hypergraph& h, const Sheaf& s, const Matrix& x,
                                                    const Normalizer* nm, std::uint64_t seed) {
    check_hosted(h, s);
    const int d = s.stalk_dim;
    if (x.rows() != h.num_nodes * d) throw ShapeError("discrepant_pairs: signal row count != n*d");
    const auto off = incidence_offsets(h);
    Rng rng(seed);
    std::vector<DiscrepantPair> out;
    out.reserve(h.hyperedges.size());
    for (int e = 0; e < h.num_hyperedges(); ++e) {
        const auto& mem = h.hyperedges[e];
        std::vector<Matrix> img(mem.size());
        for (std::size_t i = 0; i < mem.size(); ++i)
            img[i] = detail::stalk_image(s.map(off[e] + static_cast<int>(i)), nm, mem[i], x, d);
        double best = -1.0;
        double runner_up = -std::numeric_limits<double>::infinity();
        std::vector<std::pair<int, int>> argmax;
        for (std::size_t i = 0; i < mem.size(); ++i)
            for (std::size_t j = i + 1; j < mem.size(); ++j) {
                Matrix diff = img[i] - img[j];
                const double d2 = diff.dot(diff);
                if (d2 > best) {
                    runner_up = best;
                    best = d2;
                    argmax.assign(1, {static_cast<int>(i), static_cast<int>(j)});
                } else if (d2 == best) {
                    runner_up = best;
                    argmax.emplace_back(static_cast<int>(i), static_cast<int>(j));
                } else if (d2 > runner_up) {
                    runner_up = d2;
                }
            }
        DiscrepantPair p;
        if (mem.size() == 1) {
            p.u = p.v = mem[0];
            p.dist2 = 0.0;
        } else {
            const auto [i, j] = argmax[rng.uniform_int(argmax.size())];
            p.u = mem[i];
            p.v = mem[j];
            p.dist2 = best;
            if (runner_up > -std::numeric_limits<double>::infinity()) p.margin = best - runner_up;
            for (int k : mem)
                if (k != p.u && k != p.v) p.mediators.push_back(k);
        }
        out.push_back(std::move(p));
    }
    return out;
}

// Relation list induced by the discrepant pairs: both directions of the pair
// edge and, with mediators, both directions of every (pair node, mediator)
// edge.
inline std::vector<Relation> nonlinear_relations(const Hypergraph& h, const std::vector<DiscrepantPair>& pairs,
                                                 bool mediators) {
    std::vector<Relation> rel;
    for (int e = 0; e < h.num_hyperedges(); ++e) {
        const auto& p = pairs[e];
        if (p.u == p.v) continue;  // singleton hyperedge contributes nothing
        rel.push_back({e, p.u, p.v});
        rel.push_back({e, p.v, p.u});
        if (mediators)
            for (int k : p.mediators) {
                rel.push_back({e, p.u, k});
                rel.push_back({e, k, p.u});
                rel.push_back({e, p.v, k});
                rel.push_back({e, k, p.v});
            }
    }
    return rel;
}

inline BlockMatrix nonlinear_laplacian(const Hypergraph& h, const Sheaf& s, const Matrix& x, bool mediators,
                                       const Normalizer* nm, std::uint64_t seed) {
    const auto pairs = discrepant_pairs(h, s, x, nm, seed);
    return detail::assemble(h, materialize_all(h, s), s.stalk_dim, nonlinear_relations(h, pairs, mediators));
}

}  // namespace shnn
