// Randomized property suites certifying the library invariants: the
// quadratic-form identity, the normalized spectrum bound, the diffusion
// contraction factor, the total-variation identity, the subgradient check
// and the trivial-sheaf reductions. Shared by the CLI `verify` command and
// the acceptance harness.
#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "shnn/diffusion.hpp"
#include "shnn/energy.hpp"
#include "shnn/hypergraph.hpp"
#include "shnn/laplacian.hpp"
#include "shnn/matrix.hpp"
#include "shnn/rng.hpp"
#include "shnn/sheaf.hpp"
#include "shnn/spectral.hpp"
#include "shnn/testing/classical_oracle.hpp"

namespace shnn::verify {

struct PropertyResult {
    std::string name;
    bool pass = true;
    int trials = 0;
    double worst = 0.0;  // worst observed discrepancy
    std::string detail;

    void record(double err, const std::string& what, double tol) {
        if (err > worst) worst = err;
        if (err > tol && pass) {
            pass = false;
            detail = what;
        }
    }
};

struct Options {
    int trials = 50;
    std::uint64_t seed = 0;
    int max_nodes = 8;
    bool inject_asymmetry = false;  // test hook: corrupt one block before checking
};

namespace detail {

struct Instance {
    Hypergraph h;
    Sheaf s;
    Matrix x;
};

inline MapKind pick_kind(Rng& rng, int d) {
    switch (rng.uniform_int(3)) {
        case 0: return MapKind::diagonal();
        case 1: return MapKind::low_rank(1 + static_cast<int>(rng.uniform_int(static_cast<std::size_t>(d))));
        default: return MapKind::general();
    }
}

inline Hypergraph random_hypergraph(Rng& rng, int max_nodes, int max_edges) {
    const int n = 2 + static_cast<int>(rng.uniform_int(static_cast<std::size_t>(max_nodes - 1)));
    const int m = 1 + static_cast<int>(rng.uniform_int(static_cast<std::size_t>(max_edges)));
    std::vector<std::vector<int>> edges;
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    for (int e = 0; e < m; ++e) {
        const int card = 2 + static_cast<int>(rng.uniform_int(static_cast<std::size_t>(std::min(n, 5) - 1)));
        rng.shuffle(pool);
        std::vector<int> mem(pool.begin(), pool.begin() + card);
        std::sort(mem.begin(), mem.end());
        edges.push_back(std::move(mem));
    }
    return make_hypergraph(n, std::move(edges));
}

inline Instance random_instance(Rng& rng, int max_nodes, int max_d = 3, int channels = 1) {
    Instance inst;
    inst.h = random_hypergraph(rng, max_nodes, 6);
    const int d = 1 + static_cast<int>(rng.uniform_int(static_cast<std::size_t>(max_d)));
    inst.s = random_sheaf(inst.h, d, pick_kind(rng, d), rng.next_u64());
    inst.x = Matrix(inst.h.num_nodes * d, channels);
    for (double& v : inst.x.data()) v = rng.normal();
    return inst;
}

// Sheaf-mode normalizer, regenerating the sheaf when a stalk block is
// numerically singular (possible for random low-rank maps).
inline Instance random_sheaf_mode_instance(Rng& rng, int max_nodes, Normalizer& nm, int channels = 1) {
    for (;;) {
        Instance inst = random_instance(rng, max_nodes, 3, channels);
        try {
            nm = normalizer(inst.h, inst.s, NormalizerMode::Sheaf, NormalizerStyle::Symmetric, 1e-6);
            return inst;
        } catch (const SingularBlock&) {
            continue;  // resample
        }
    }
}

}  // namespace detail

// Identity: dirichlet_energy(x) == x^T Delta x for the symmetric-normalized
// linear Laplacian, 1e-10 relative.
inline PropertyResult quadratic_form_identity(const Options& opt) {
    PropertyResult r;
    r.name = "quadratic-form-identity";
    Rng rng(opt.seed ^ 0x11d1ULL);
    for (int t = 0; t < opt.trials; ++t) {
        Normalizer nm;
        detail::Instance inst = detail::random_sheaf_mode_instance(rng, opt.max_nodes, nm);
        BlockMatrix delta = normalize(linear_laplacian(inst.h, inst.s), nm);
        if (opt.inject_asymmetry && inst.s.stalk_dim >= 1) {
            Matrix b = delta.block(0, 0);
            b(0, 0) += 0.5;
            delta.set_block(0, 0, b);
        }
        const double e = dirichlet_energy(inst.h, inst.s, nm, inst.x).value;
        const double q = quadratic_form(delta, inst.x);
        const double err = std::abs(e - q) / std::max(1.0, std::abs(e));
        std::ostringstream os;
        os << "trial " << t << ": energy " << e << " vs quadratic form " << q;
        r.record(err, os.str(), 1e-10);
        ++r.trials;
    }
    return r;
}

// Bound: eigenvalues of the sheaf-mode symmetric-normalized linear
// Laplacian lie in [-1e-9, 1 + 1e-9].
inline PropertyResult spectrum_bound(const Options& opt) {
    PropertyResult r;
    r.name = "spectrum-bound";
    Rng rng(opt.seed ^ 0x22d2ULL);
    for (int t = 0; t < opt.trials; ++t) {
        Normalizer nm;
        detail::Instance inst = detail::random_sheaf_mode_instance(rng, opt.max_nodes, nm);
        const Matrix dense = normalize(linear_laplacian(inst.h, inst.s), nm).to_dense();
        const Spectrum sp = eigenvalues_sym(dense);
        double err = 0.0;
        for (double lam : sp.eigenvalues) err = std::max(err, std::max(-lam, lam - 1.0));
        std::ostringstream os;
        os << "trial " << t << ": eigenvalue outside [0,1] by " << err;
        r.record(err, os.str(), 1e-9);
        ++r.trials;
    }
    return r;
}

// Contraction: per-step Dirichlet energy ratio of linear diffusion is at
// most lambda* (+1e-9), lambda* from the eigensolver.
inline PropertyResult contraction(const Options& opt, int steps = 10) {
    PropertyResult r;
    r.name = "contraction";
    Rng rng(opt.seed ^ 0x33d3ULL);
    for (int t = 0; t < opt.trials; ++t) {
        Normalizer nm;
        detail::Instance inst = detail::random_sheaf_mode_instance(rng, opt.max_nodes, nm);
        const BlockMatrix delta = normalize(linear_laplacian(inst.h, inst.s), nm);
        const Spectrum sp = eigenvalues_sym(delta.to_dense());
        double ls;
        try {
            ls = lambda_star(sp);
        } catch (const AllZeroSpectrum&) {
            continue;  // zero operator: no contraction statement to check
        }
        Matrix x = inst.x;
        const double e0 = dirichlet_energy(inst.h, inst.s, nm, x).value;
        double prev = e0;
        for (int k = 0; k < steps; ++k) {
            x = x - delta.apply(x);
            const double cur = dirichlet_energy(inst.h, inst.s, nm, x).value;
            // The summed distances behind the energy lose absolute accuracy
            // ~eps * x-scale to cancellation, so once the energy falls below
            // ~1e-12 of its starting value the ratio error exceeds 1e-9 and
            // the comparison is meaningless.
            if (prev > 1e-12 * e0 && prev > 0.0) {
                std::ostringstream os;
                os << "trial " << t << " step " << k << ": ratio " << cur / prev << " vs lambda* " << ls;
                r.record(cur / prev - ls, os.str(), 1e-9);
            }
            prev = cur;
        }
        ++r.trials;
    }
    return r;
}

// Identity: x^T NonlinearDelta(x) x == 2 * TV(x), no mediators.
inline PropertyResult tv_identity(const Options& opt) {
    PropertyResult r;
    r.name = "tv-identity";
    Rng rng(opt.seed ^ 0x44d4ULL);
    for (int t = 0; t < opt.trials; ++t) {
        Normalizer nm;
        detail::Instance inst = detail::random_sheaf_mode_instance(rng, opt.max_nodes, nm);
        const BlockMatrix delta =
            normalize(nonlinear_laplacian(inst.h, inst.s, inst.x, /*mediators=*/false, &nm, rng.next_u64()), nm);
        const double tv = total_variation(inst.h, inst.s, nm, inst.x).value;
        const double q = quadratic_form(delta, inst.x);
        const double err = std::abs(q - 2.0 * tv) / std::max(1.0, std::abs(q));
        std::ostringstream os;
        os << "trial " << t << ": quadratic form " << q << " vs 2*TV " << 2.0 * tv;
        r.record(err, os.str(), 1e-10);
        ++r.trials;
    }
    return r;
}

// Subgradient: the assembled non-linear Laplacian times x is a
// subgradient of TV at generic points (finite-difference check < 1e-4).
inline PropertyResult subgradient(const Options& opt) {
    PropertyResult r;
    r.name = "subgradient";
    Rng rng(opt.seed ^ 0x55d5ULL);
    int done = 0;
    int attempts = 0;
    while (done < opt.trials && attempts < opt.trials * 50) {
        ++attempts;
        Normalizer nm;
        detail::Instance inst = detail::random_sheaf_mode_instance(rng, opt.max_nodes, nm);
        try {
            const double err = subgradient_check(inst.h, inst.s, nm, inst.x, 1e-6);
            std::ostringstream os;
            os << "point " << done << ": finite-difference error " << err;
            r.record(err, os.str(), 1e-4);
            ++done;
            ++r.trials;
        } catch (const DegeneratePoint&) {
            continue;  // resample a generic point
        }
    }
    if (done < opt.trials) {
        r.pass = false;
        r.detail = "could not find enough generic points";
    }
    return r;
}

// Trivial-sheaf reduction: block Laplacians with d=1, unit maps equal the
// classical scalar clique/max-pair Laplacians bit for bit.
inline PropertyResult trivial_reduction(const Options& opt) {
    PropertyResult r;
    r.name = "trivial-reduction";
    Rng rng(opt.seed ^ 0x66d6ULL);
    for (int t = 0; t < opt.trials; ++t) {
        const Hypergraph h = detail::random_hypergraph(rng, opt.max_nodes, 6);
        const Sheaf s = trivial_sheaf(h);
        Matrix x(h.num_nodes, 1);
        for (double& v : x.data()) v = rng.normal();

        const Matrix lin = linear_laplacian(h, s).to_dense();
        const Matrix lin_oracle = testing::classical_linear_laplacian(h);
        double err = (lin - lin_oracle).max_abs();

        const Matrix nl = nonlinear_laplacian(h, s, x, /*mediators=*/true, nullptr, rng.next_u64()).to_dense();
        const Matrix nl_oracle = testing::classical_nonlinear_laplacian(h, x, /*mediators=*/true);
        err = std::max(err, (nl - nl_oracle).max_abs());

        std::ostringstream os;
        os << "trial " << t << ": max deviation from scalar oracle " << err;
        r.record(err, os.str(), 0.0);  // bit-for-bit
        ++r.trials;
    }
    return r;
}

inline std::vector<PropertyResult> run_all(const Options& opt) {
    return {quadratic_form_identity(opt), spectrum_bound(opt), contraction(opt),
            tv_identity(opt),             subgradient(opt),    trivial_reduction(opt)};
}

}  // namespace shnn::verify
