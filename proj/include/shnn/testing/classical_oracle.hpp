// Independently coded scalar (stalk-free) classical hypergraph operators:
// the clique-expansion HyperGNN Laplacian, the max-pair HyperGCN Laplacian
// with mediators, and a plain dense HyperGNN forward pass. Everything here
// works on n x n dense matrices with explicit scalar loops; it exists as an
// oracle for the trivial-sheaf reductions.
#pragma once

#include <cmath>
#include <vector>

#include "shnn/hypergraph.hpp"
#include "shnn/matrix.hpp"

namespace shnn::testing {

// Clique-expansion Laplacian: per hyperedge e of size delta, every ordered
// member pair (v, u) contributes 1/delta to L[v][v] and -1/delta to L[v][u].
inline Matrix classical_linear_laplacian(const Hypergraph& h) {
    Matrix l(h.num_nodes, h.num_nodes);
    for (int e = 0; e < h.num_hyperedges(); ++e) {
        const auto& mem = h.hyperedges[e];
        const double w = 1.0 / static_cast<double>(mem.size());
        for (int v : mem)
            for (int u : mem)
                if (u != v) {
                    l(v, v) += w;
                    l(v, u) -= w;
                }
    }
    return l;
}

// HyperGCN-style Laplacian: per hyperedge keep only the member pair with the
// largest squared signal distance (channels summed); with mediators every
// remaining member is wired to both pair nodes. x is n x c.
inline Matrix classical_nonlinear_laplacian(const Hypergraph& h, const Matrix& x, bool mediators) {
    Matrix l(h.num_nodes, h.num_nodes);
    for (int e = 0; e < h.num_hyperedges(); ++e) {
        const auto& mem = h.hyperedges[e];
        if (mem.size() < 2) continue;
        const double w = 1.0 / static_cast<double>(mem.size());
        int bu = -1, bv = -1;
        double best = -1.0;
        for (std::size_t i = 0; i < mem.size(); ++i)
            for (std::size_t j = i + 1; j < mem.size(); ++j) {
                double d2 = 0.0;
                for (int c = 0; c < x.cols(); ++c) {
                    const double diff = x(mem[i], c) - x(mem[j], c);
                    d2 += diff * diff;
                }
                if (d2 > best) {
                    best = d2;
                    bu = mem[i];
                    bv = mem[j];
                }
            }
        std::vector<std::pair<int, int>> arcs{{bu, bv}, {bv, bu}};
        if (mediators)
            for (int k : mem)
                if (k != bu && k != bv) {
                    arcs.push_back({bu, k});
                    arcs.push_back({k, bu});
                    arcs.push_back({bv, k});
                    arcs.push_back({k, bv});
                }
        for (const auto& [v, u] : arcs) {
            l(v, v) += w;
            l(v, u) -= w;
        }
    }
    return l;
}

// Degree normalization scale: 1/sqrt(deg) per node (epsilon for isolated
// nodes), as used by the symmetric degree-normalized Laplacian.
inline std::vector<double> classical_degree_scale(const Hypergraph& h, double epsilon) {
    std::vector<int> deg(h.num_nodes, 0);
    for (const auto& e : h.hyperedges)
        for (int v : e) ++deg[v];
    std::vector<double> s(h.num_nodes);
    for (int v = 0; v < h.num_nodes; ++v) {
        const double d = deg[v] == 0 ? epsilon : static_cast<double>(deg[v]);
        s[v] = 1.0 / std::sqrt(d);
    }
    return s;
}

// One classical HyperGNN layer: Y = ReLU(Z - S L (S Z)) with Z = X W and
// S = diag(scale). Scalar loops throughout.
inline Matrix classical_hypergnn_layer(const Hypergraph& h, const Matrix& x, const Matrix& w,
                                       const std::vector<double>& scale) {
    Matrix z(x.rows(), w.cols());
    for (int i = 0; i < x.rows(); ++i)
        for (int k = 0; k < x.cols(); ++k) {
            const double a = x(i, k);
            if (a == 0.0) continue;
            for (int j = 0; j < w.cols(); ++j) z(i, j) += a * w(k, j);
        }
    Matrix zh(z.rows(), z.cols());
    for (int v = 0; v < z.rows(); ++v)
        for (int c = 0; c < z.cols(); ++c) zh(v, c) = scale[v] * z(v, c);
    Matrix acc(z.rows(), z.cols());
    for (int e = 0; e < h.num_hyperedges(); ++e) {
        const auto& mem = h.hyperedges[e];
        const double w_e = 1.0 / static_cast<double>(mem.size());
        for (int v : mem)
            for (int u : mem)
                if (u != v)
                    for (int c = 0; c < z.cols(); ++c) acc(v, c) += (zh(v, c) - zh(u, c)) * w_e;
    }
    Matrix y(z.rows(), z.cols());
    for (int v = 0; v < z.rows(); ++v)
        for (int c = 0; c < z.cols(); ++c) {
            const double t = z(v, c) - scale[v] * acc(v, c);
            y(v, c) = t < 0.0 ? 0.0 : t;
        }
    return y;
}

}  // namespace shnn::testing
