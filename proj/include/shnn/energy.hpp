// Sheaf Dirichlet energy and sheaf total variation, computed directly from
// their defining sums, independently of the assembled Laplacians.
#pragma once

#include <vector>

#include "shnn/block_matrix.hpp"
#include "shnn/hypergraph.hpp"
#include "shnn/laplacian.hpp"
#include "shnn/sheaf.hpp"

namespace shnn {

enum class EnergyKind { Dirichlet, TotalVariation };

struct EnergyValue {
    double value = 0.0;
    EnergyKind kind = EnergyKind::Dirichlet;
};

namespace detail {

// Squared hyperedge-stalk distances of all member pairs of one hyperedge.
inline std::vector<double> edge_pair_distances(const Hypergraph& h, const Sheaf& s, const Normalizer& nm,
                                               const Matrix& x, int e, const std::vector<int>& offsets) {
    const int d = s.stalk_dim;
    const auto& mem = h.hyperedges[e];
    std::vector<Matrix> img(mem.size());
    for (std::size_t i = 0; i < mem.size(); ++i)
        img[i] = stalk_image(s.map(offsets[e] + static_cast<int>(i)), &nm, mem[i], x, d);
    std::vector<double> d2;
    d2.reserve(mem.size() * (mem.size() - 1) / 2);
    for (std::size_t i = 0; i < mem.size(); ++i)
        for (std::size_t j = i + 1; j < mem.size(); ++j) {
            Matrix diff = img[i] - img[j];
            d2.push_back(diff.dot(diff));
        }
    return d2;
}

}  // namespace detail

// E = 1/2 sum_e (1/delta_e) sum_{ordered u != v in e} ||F_v S_v x_v - F_u S_u x_u||^2,
// summed over channels. Each unordered pair appears twice inside the half.
inline EnergyValue dirichlet_energy(const Hypergraph& h, const Sheaf& s, const Normalizer& nm, const Matrix& x) {
    check_hosted(h, s);
    if (x.rows() != h.num_nodes * s.stalk_dim) throw ShapeError("dirichlet_energy: signal row count != n*d");
    const auto off = incidence_offsets(h);
    double total = 0.0;
    for (int e = 0; e < h.num_hyperedges(); ++e) {
        double edge_sum = 0.0;
        for (double d2 : detail::edge_pair_distances(h, s, nm, x, e, off)) edge_sum += 2.0 * d2;
        total += 0.5 * edge_sum / static_cast<double>(h.hyperedges[e].size());
    }
    return {total, EnergyKind::Dirichlet};
}

// TV = 1/2 sum_e (1/delta_e) max_{u,v in e} ||F_v S_v x_v - F_u S_u x_u||^2.
inline EnergyValue total_variation(const Hypergraph& h, const Sheaf& s, const Normalizer& nm, const Matrix& x) {
    check_hosted(h, s);
    if (x.rows() != h.num_nodes * s.stalk_dim) throw ShapeError("total_variation: signal row count != n*d");
    const auto off = incidence_offsets(h);
    double total = 0.0;
    for (int e = 0; e < h.num_hyperedges(); ++e) {
        double worst = 0.0;
        for (double d2 : detail::edge_pair_distances(h, s, nm, x, e, off)) worst = std::max(worst, d2);
        total += 0.5 * worst / static_cast<double>(h.hyperedges[e].size());
    }
    return {total, EnergyKind::TotalVariation};
}

// Sum over channels of x^T (M x).
inline double quadratic_form(const BlockMatrix& m, const Matrix& x) {
    return x.dot(m.apply(x));
}

}  // namespace shnn
