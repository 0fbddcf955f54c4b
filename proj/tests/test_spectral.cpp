#include <doctest.h>

#include <cmath>

#include "shnn/hypergraph.hpp"
#include "shnn/laplacian.hpp"
#include "shnn/rng.hpp"
#include "shnn/sheaf.hpp"
#include "shnn/spectral.hpp"

using namespace shnn;

TEST_CASE("eigenvalues_sym: diagonal matrix sorted ascending") {
    Matrix m(3, 3);
    m(0, 0) = 3;
    m(1, 1) = 1;
    m(2, 2) = 2;
    const Spectrum s = eigenvalues_sym(m);
    REQUIRE(s.eigenvalues.size() == 3);
    CHECK(s.eigenvalues[0] == doctest::Approx(1.0));
    CHECK(s.eigenvalues[1] == doctest::Approx(2.0));
    CHECK(s.eigenvalues[2] == doctest::Approx(3.0));
}

TEST_CASE("eigenvalues_sym: H3 normalized Laplacian spectrum is [0,1,1]") {
    const Hypergraph h3 = make_hypergraph(3, {{0, 1, 2}});
    const Sheaf s = trivial_sheaf(h3);
    const Normalizer nm = normalizer(h3, s, NormalizerMode::Sheaf, NormalizerStyle::Symmetric, 0.0);
    const Spectrum sp = eigenvalues_sym(normalize(linear_laplacian(h3, s), nm).to_dense());
    CHECK(std::abs(sp.eigenvalues[0]) < 1e-12);
    CHECK(sp.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sp.eigenvalues[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("eigenvalues_sym: trace equals eigenvalue sum") {
    Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 4 + static_cast<int>(rng.uniform_int(8));
        Matrix m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j) {
                const double v = rng.normal();
                m(i, j) = v;
                m(j, i) = v;
            }
        const Spectrum s = eigenvalues_sym(m);
        double sum = 0.0;
        for (double lam : s.eigenvalues) sum += lam;
        CHECK(sum == doctest::Approx(m.trace()).epsilon(1e-9));
    }
}

TEST_CASE("eigenvalues_sym: rejects asymmetric and oversized input") {
    Matrix m(2, 2);
    m(0, 1) = 1.0;  // m(1,0) = 0: asymmetric beyond 1e-9
    CHECK_THROWS_AS(eigenvalues_sym(m), NotSymmetric);
    CHECK_THROWS_AS(eigenvalues_sym(Matrix(2049, 2049)), TooLarge);
}

TEST_CASE("lambda_star: worked spectra") {
    Spectrum s;
    s.eigenvalues = {0.0, 1.0, 1.0};
    CHECK(lambda_star(s) == doctest::Approx(0.0));
    s.eigenvalues = {0.0, 0.5, 1.0};
    CHECK(lambda_star(s) == doctest::Approx(0.25));
}

TEST_CASE("lambda_star: all-zero spectrum is an error") {
    Spectrum s;
    s.eigenvalues = {0.0, 1e-12};
    CHECK_THROWS_AS(lambda_star(s), AllZeroSpectrum);
}

TEST_CASE("spectrum bound: sheaf-mode normalized spectra lie in [0,1]; lambda* < 1") {
    Rng rng(9);
    const Hypergraph h = make_hypergraph(6, {{0, 1, 2}, {2, 3, 4, 5}, {1, 5}, {0, 3}});
    int done = 0;
    while (done < 30) {
        const int d = 1 + static_cast<int>(rng.uniform_int(3));
        const MapKind kind = (done % 3 == 0)   ? MapKind::diagonal()
                             : (done % 3 == 1) ? MapKind::low_rank(1)
                                               : MapKind::general();
        const Sheaf s = random_sheaf(h, d, kind, rng.next_u64());
        Normalizer nm;
        try {
            nm = normalizer(h, s, NormalizerMode::Sheaf, NormalizerStyle::Symmetric, 0.0);
        } catch (const SingularBlock&) {
            continue;
        }
        const Spectrum sp = eigenvalues_sym(normalize(linear_laplacian(h, s), nm).to_dense());
        for (double lam : sp.eigenvalues) {
            CHECK(lam >= -1e-9);
            CHECK(lam <= 1.0 + 1e-9);
        }
        try {
            CHECK(lambda_star(sp) < 1.0);
        } catch (const AllZeroSpectrum&) {
        }
        ++done;
    }
}
