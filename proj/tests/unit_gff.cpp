#include "clelab/gff.hpp"
#include "clelab/rng.hpp"
#include "clelab/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace clelab;

TEST_SUITE("gff") {

TEST_CASE("samples vanish on the boundary and outside the disk") {
    auto fact = make_gff_factorization(65, GffDomain::Disk);
    const GffSample s = fact->sample(123);
    const std::size_t n = fact->n();
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!fact->is_interior(i, j)) CHECK(s.value(i, j) == 0.0);
        }
    }
    CHECK(std::abs(s.value(n / 2, n / 2)) > 0.0);
}

TEST_CASE("empirical covariance matches the factorization column") {
    auto fact = make_gff_factorization(33, GffDomain::Square);
    const std::size_t n = fact->n();
    const std::size_t ci = n / 2, cj = n / 2;
    const std::vector<double> col = fact->covariance_column(ci, cj);
    const std::size_t probe = (cj + 4) * n + (ci + 3);

    const int reps = 20000;
    double acc = 0.0, acc2 = 0.0;
    for (int r = 0; r < reps; ++r) {
        const GffSample s = fact->sample(Rng::mix(1000, static_cast<std::uint64_t>(r)));
        const double prod = s.value(ci, cj) * s.values[probe];
        acc += prod;
        acc2 += prod * prod;
    }
    const double mean = acc / reps;
    const double se = std::sqrt((acc2 / reps - mean * mean) / reps);
    CHECK(std::abs(mean - col[probe]) < 4.0 * se);
}

TEST_CASE("circle average variance matches the exact value") {
    auto fact = make_gff_factorization(65, GffDomain::Disk);
    const Complex z(0.1, -0.2);
    const double eps = 0.3;
    const double exact = fact->circle_average_variance(z, eps);

    const int reps = 4000;
    double acc = 0.0, acc2 = 0.0;
    for (int r = 0; r < reps; ++r) {
        const GffSample s = fact->sample(Rng::mix(77, static_cast<std::uint64_t>(r)));
        const double a = circle_average(s, z, eps);
        acc += a;
        acc2 += a * a;
    }
    const double var = acc2 / reps - (acc / reps) * (acc / reps);
    const double se = exact * std::sqrt(2.0 / (reps - 1.0));
    CHECK(std::abs(var - exact) < 4.0 * se);
}

TEST_CASE("bilinear interpolation reproduces lattice values") {
    auto fact = make_gff_factorization(33, GffDomain::Square);
    const GffSample s = fact->sample(5);
    const double a = fact->spacing();
    const Complex z(-1.0 + 10 * a, -1.0 + 7 * a);
    CHECK(s.interpolate(z) == doctest::Approx(s.value(10, 7)).epsilon(1e-12));
}

TEST_CASE("markov decomposition splits the field exactly") {
    auto fact = make_gff_factorization(33, GffDomain::Square);
    const std::size_t n = fact->n();
    std::vector<unsigned char> umask(n * n, 0);
    for (std::size_t j = 8; j < 24; ++j)
        for (std::size_t i = 8; i < 24; ++i) umask[j * n + i] = 1;

    const GffSample s = fact->sample(9);
    const MarkovDecomposition dec = markov_decompose(s, umask);
    for (std::size_t v = 0; v < n * n; ++v) {
        CHECK(dec.zero_boundary[v] + dec.harmonic[v] ==
              doctest::Approx(s.values[v]).epsilon(1e-9));
        if (!umask[v]) {
            CHECK(dec.zero_boundary[v] == 0.0);
            CHECK(dec.harmonic[v] == doctest::Approx(s.values[v]).epsilon(1e-12));
        }
    }
    // the remainder is discrete harmonic strictly inside U
    for (std::size_t j = 9; j < 23; ++j) {
        for (std::size_t i = 9; i < 23; ++i) {
            const std::size_t v = j * n + i;
            const double lap = 4.0 * dec.harmonic[v] - dec.harmonic[v - 1] -
                               dec.harmonic[v + 1] - dec.harmonic[v - n] -
                               dec.harmonic[v + n];
            CHECK(std::abs(lap) < 1e-8);
        }
    }
}

TEST_CASE("masked Dirichlet solve satisfies the residual identity") {
    const std::size_t n = 25;
    std::vector<unsigned char> mask(n * n, 0);
    for (std::size_t j = 5; j < 20; ++j)
        for (std::size_t i = 3; i < 18; ++i) mask[j * n + i] = 1;
    LatticeDirichlet solver(n, mask);
    CHECK(solver.unknowns() == 15 * 15);

    std::vector<double> rhs(n * n, 0.0);
    rhs[12 * n + 10] = 1.0;
    rhs[7 * n + 5] = -0.25;
    const std::vector<double> u = solver.solve(rhs);
    for (std::size_t j = 1; j + 1 < n; ++j) {
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const std::size_t v = j * n + i;
            if (!mask[v]) {
                CHECK(u[v] == 0.0);
                continue;
            }
            const double lap =
                4.0 * u[v] - u[v - 1] - u[v + 1] - u[v - n] - u[v + n];
            CHECK(std::abs(lap - rhs[v]) < 1e-9);
        }
    }
}

TEST_CASE("conditioned radial path stays positive") {
    const std::vector<double> path = sample_wedge_radial(1.5, 1.0, 1e-3, 21, 0.1);
    REQUIRE(path.size() > 10);
    CHECK(path.front() == doctest::Approx(0.1));
    for (const double y : path) CHECK(y > 0.0);
}

} // TEST_SUITE
