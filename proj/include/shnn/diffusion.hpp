// Linear and non-linear sheaf diffusion with per-step energy traces, plus the
// finite-difference check of the non-linear subgradient identity.
#pragma once

#include <cstdint>
#include <ostream>
#include <utility>
#include <vector>

#include "shnn/block_matrix.hpp"
#include "shnn/energy.hpp"
#include "shnn/laplacian.hpp"

namespace shnn {

enum class TraceLaw { LinearDirichlet, NonlinearTv };

struct TraceStep {
    int step = 0;
    double energy = 0.0;
    // FNV-1a fingerprint of the rebuilt-graph edge list (non-linear law only).
    std::uint64_t graph_fingerprint = 0;
};

struct EnergyTrace {
    TraceLaw law = TraceLaw::LinearDirichlet;
    double step_size = 1.0;
    std::vector<TraceStep> steps;
};

// One `step,energy` row per recorded step (no header), so a T-step trace is
// exactly T+1 lines.
inline void write_trace_csv(const EnergyTrace& t, std::ostream& out) {
    for (const auto& s : t.steps) out << s.step << ',' << format_double(s.energy) << '\n';
}

namespace detail {

inline std::uint64_t fingerprint_pairs(const std::vector<DiscrepantPair>& pairs) {
    std::uint64_t hsh = 1469598103934665603ull;
    auto mix = [&](std::uint64_t x) {
        hsh ^= x;
        hsh *= 1099511628211ull;
    };
    for (const auto& p : pairs) {
        mix(static_cast<std::uint64_t>(p.u));
        mix(static_cast<std::uint64_t>(p.v));
    }
    return hsh;
}

}  // namespace detail

// Iterates X <- (I - Delta) X for the normalized linear Laplacian, recording
// the Dirichlet energy at steps 0..T.
inline std::pair<Matrix, EnergyTrace> diffuse_linear(const Hypergraph& h, const Sheaf& s, const Normalizer& nm,
                                                     const Matrix& x0, int steps) {
    if (steps < 1) throw ValidationError("diffuse_linear: steps must be >= 1");
    const BlockMatrix delta = normalize(linear_laplacian(h, s), nm);
    Matrix x = x0;
    EnergyTrace trace;
    trace.law = TraceLaw::LinearDirichlet;
    trace.step_size = 1.0;
    trace.steps.push_back({0, dirichlet_energy(h, s, nm, x).value, 0});
    for (int k = 1; k <= steps; ++k) {
        x -= delta.apply(x);
        trace.steps.push_back({k, dirichlet_energy(h, s, nm, x).value, 0});
    }
    return {std::move(x), std::move(trace)};
}

// Iterates X <- X - eta * Delta(X) X, rebuilding the non-linear Laplacian at
// the current signal each step. Records the total variation at steps 0..T.
// Tie-break seeds per step come from a fresh stream of the run seed.
inline std::pair<Matrix, EnergyTrace> diffuse_nonlinear(const Hypergraph& h, const Sheaf& s, const Normalizer& nm,
                                                        const Matrix& x0, int steps, double eta, bool mediators,
                                                        std::uint64_t seed) {
    if (steps < 1) throw ValidationError("diffuse_nonlinear: steps must be >= 1");
    if (eta <= 0.0) throw ValidationError("diffuse_nonlinear: step size must be positive");
    Rng seeder(seed);
    Matrix x = x0;
    EnergyTrace trace;
    trace.law = TraceLaw::NonlinearTv;
    trace.step_size = eta;
    trace.steps.push_back({0, total_variation(h, s, nm, x).value, 0});
    for (int k = 1; k <= steps; ++k) {
        const auto pairs = discrepant_pairs(h, s, x, &nm, seeder.next_u64());
        const BlockMatrix delta =
            normalize(detail::assemble(h, materialize_all(h, s), s.stalk_dim, nonlinear_relations(h, pairs, mediators)), nm);
        x -= delta.apply(x) * eta;
        trace.steps.push_back({k, total_variation(h, s, nm, x).value, detail::fingerprint_pairs(pairs)});
    }
    return {std::move(x), std::move(trace)};
}

// Compares Delta(x) x against central finite differences of the total
// variation, coordinate-wise. Throws DegeneratePoint when some hyperedge's
// argmax pair is tied (or too close to flip within +-h). Relative error is
// measured against the gradient's max magnitude.
inline double subgradient_check(const Hypergraph& h, const Sheaf& s, const Normalizer& nm, const Matrix& x, double h_step) {
    check_hosted(h, s);
    const auto off = incidence_offsets(h);
    for (int e = 0; e < h.num_hyperedges(); ++e) {
        auto d2 = detail::edge_pair_distances(h, s, nm, x, e, off);
        if (d2.size() < 2) continue;
        std::sort(d2.begin(), d2.end());
        const double gap = d2.back() - d2[d2.size() - 2];
        if (gap <= 100.0 * h_step * (1.0 + d2.back())) throw DegeneratePoint("argmax pair not unique at this point");
    }
    const BlockMatrix delta = normalize(nonlinear_laplacian(h, s, x, /*mediators=*/false, &nm, /*seed=*/0), nm);
    const Matrix grad = delta.apply(x);
    const double scale = std::max(grad.max_abs(), 1e-12);
    double worst = 0.0;
    Matrix xp = x;
    for (int i = 0; i < x.rows(); ++i)
        for (int c = 0; c < x.cols(); ++c) {
            const double orig = x(i, c);
            xp(i, c) = orig + h_step;
            const double fp = total_variation(h, s, nm, xp).value;
            xp(i, c) = orig - h_step;
            const double fm = total_variation(h, s, nm, xp).value;
            xp(i, c) = orig;
            const double fd = (fp - fm) / (2.0 * h_step);
            worst = std::max(worst, std::abs(fd - grad(i, c)) / scale);
        }
    return worst;
}

}  // namespace shnn
