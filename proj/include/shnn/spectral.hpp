// Dense symmetric eigensolver (cyclic Jacobi) and the diffusion contraction
// factor lambda* = max over nonzero eigenvalues of (1 - lambda)^2.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "shnn/errors.hpp"
#include "shnn/matrix.hpp"

namespace shnn {

struct Spectrum {
    std::vector<double> eigenvalues;  // ascending
    double zero_tolerance = 1e-8;
};

namespace detail {

// Cyclic Jacobi sweeps on a copy of m until the off-diagonal Frobenius norm
// drops below 1e-12 * ||m||_F. Eigenvectors accumulate into v when non-null.
inline std::vector<double> jacobi_diagonalize(Matrix a, Matrix* v) {
    const int n = a.rows();
    if (v) *v = Matrix::identity(n);
    const double norm = a.frobenius_norm();
    if (norm == 0.0) return std::vector<double>(n, 0.0);
    const double target = 1e-12 * norm;
    auto off_norm = [&] {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
        return std::sqrt(s);
    };
    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps && off_norm() > target; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double app = a(p, p), aqq = a(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                if (v) {
                    for (int k = 0; k < n; ++k) {
                        const double vkp = (*v)(k, p), vkq = (*v)(k, q);
                        (*v)(k, p) = c * vkp - s * vkq;
                        (*v)(k, q) = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (int i = 0; i < n; ++i) eig[i] = a(i, i);
    return eig;
}

}  // namespace detail

inline void check_symmetric(const Matrix& m, double tol = 1e-9) {
    if (m.rows() != m.cols()) throw NotSymmetric("matrix is not square");
    for (int i = 0; i < m.rows(); ++i)
        for (int j = i + 1; j < m.cols(); ++j)
            if (std::abs(m(i, j) - m(j, i)) > tol) throw NotSymmetric("matrix asymmetry beyond tolerance");
}

inline Spectrum eigenvalues_sym(const Matrix& m, double zero_tolerance = 1e-8) {
    if (m.rows() > 2048) throw TooLarge("eigenvalues_sym: dimension exceeds 2048");
    check_symmetric(m);
    Spectrum s;
    s.zero_tolerance = zero_tolerance;
    s.eigenvalues = detail::jacobi_diagonalize(m, nullptr);
    std::sort(s.eigenvalues.begin(), s.eigenvalues.end());
    return s;
}

// Eigendecomposition m = v * diag(eig) * v^T, for the d x d normalizer blocks.
inline std::vector<double> eigen_sym(const Matrix& m, Matrix& v) {
    return detail::jacobi_diagonalize(m, &v);
}

inline double lambda_star(const Spectrum& s) {
    bool any = false;
    double best = 0.0;
    for (double lam : s.eigenvalues) {
        if (lam <= s.zero_tolerance) continue;
        any = true;
        const double c = (1.0 - lam) * (1.0 - lam);
        best = std::max(best, c);
    }
    if (!any) throw AllZeroSpectrum("no eigenvalue above zero tolerance");
    return best;
}

}  // namespace shnn
