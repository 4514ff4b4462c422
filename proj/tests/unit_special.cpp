#include "clelab/special.hpp"
#include "clelab/stats.hpp"
#include "clelab/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace clelab;

TEST_SUITE("special") {

TEST_CASE("Gegenbauer closed forms for low orders") {
    const double a = 0.75;
    for (double x = -1.0; x <= 1.0; x += 0.25) {
        CHECK(gegenbauer(0, a, x) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(gegenbauer(1, a, x) == doctest::Approx(2.0 * a * x).epsilon(1e-14));
        CHECK(gegenbauer(2, a, x) ==
              doctest::Approx(2.0 * a * (1.0 + a) * x * x - a).epsilon(1e-13));
    }
}

TEST_CASE("Gegenbauer orthogonality under the weight (1-u^2)^(a-1/2)") {
    const double a = 1.25;
    auto inner = [&](int n, int m) {
        // Simpson quadrature in u = cos(theta) via theta substitution
        const int N = 4000;
        double s = 0.0;
        for (int k = 0; k <= N; ++k) {
            const double th = M_PI * k / N;
            const double u = std::cos(th);
            const double w = (k == 0 || k == N) ? 1.0 : (k % 2 ? 4.0 : 2.0);
            // du = -sin(th) dth, weight (1-u^2)^(a-1/2) = sin^{2a-1}
            s += w * gegenbauer(n, a, u) * gegenbauer(m, a, u) *
                 std::pow(std::sin(th), 2.0 * a);
        }
        return s * M_PI / N / 3.0;
    };
    CHECK(std::abs(inner(2, 3)) < 1e-10);
    CHECK(std::abs(inner(1, 4)) < 1e-10);
    CHECK(inner(3, 3) > 0.0);
}

TEST_CASE("transition density is normalized and reversible") {
    BesselDensitySpec spec;
    spec.a = 0.6;
    spec.s = 0.4;
    const RadialBesselDensity p(spec);
    CHECK(p.truncation() > 2);

    const int N = 3000;
    const double x = 1.1;
    double integral = 0.0;
    for (int k = 0; k <= N; ++k) {
        const double y = std::clamp(M_PI * k / N, 1e-12, M_PI - 1e-12);
        const double w = (k == 0 || k == N) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        integral += w * p(x, y);
    }
    integral *= M_PI / N / 3.0;
    CHECK(std::abs(integral - 1.0) < 1e-8);

    // detailed balance under the stationary weight sin^{4a}
    const double y = 2.0;
    const double lhs = std::pow(std::sin(x), 4.0 * spec.a) * p(x, y);
    const double rhs = std::pow(std::sin(y), 4.0 * spec.a) * p(y, x);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
}

TEST_CASE("tabulated cdf is monotone from 0 to 1") {
    BesselDensitySpec spec;
    spec.a = 0.5;
    spec.s = 0.5;
    const RadialBesselDensity p(spec);
    std::vector<double> ys, cdf;
    p.tabulate_cdf(1.0, ys, cdf);
    REQUIRE(ys.size() == cdf.size());
    REQUIRE(ys.size() > 10);
    CHECK(cdf.front() < 1e-4);
    CHECK(cdf.back() == doctest::Approx(1.0).epsilon(1e-4));
    for (std::size_t k = 1; k < cdf.size(); ++k) CHECK(cdf[k] >= cdf[k - 1] - 1e-12);
}

TEST_CASE("simulated paths stay inside (0, pi)") {
    const auto ends = simulate_radial_bessel(0.75, 1.5, 0.3, 1e-4, 500, 6);
    REQUIRE(ends.size() == 500);
    for (const double th : ends) {
        CHECK(th > 0.0);
        CHECK(th < M_PI);
    }
}

TEST_CASE("angular ODE accepts its analytic solution") {
    std::vector<double> grid;
    for (double th = 0.05; th < M_PI - 0.05; th += 0.01) grid.push_back(th);
    CHECK(h_ode_residual(6.0, grid) < 1e-10);
    CHECK(h_ode_residual(3.2, grid) < 1e-10);
    CHECK(h_ode_integrate_vs_analytic(6.0, 0.2, M_PI - 0.2, 1e-4) < 1e-6);
}

} // TEST_SUITE

TEST_SUITE("stats") {

TEST_CASE("mean and variance of a known sample") {
    const MeanVar mv = mean_var({1.0, 2.0, 3.0, 4.0});
    CHECK(mv.mean == doctest::Approx(2.5));
    CHECK(mv.var == doctest::Approx(5.0 / 3.0));
    CHECK(mv.n == 4);
    CHECK(mv.stderr_mean() == doctest::Approx(std::sqrt(5.0 / 12.0)));
}

TEST_CASE("linear fit recovers an exact line") {
    std::vector<double> x, y;
    for (int k = 0; k < 20; ++k) {
        x.push_back(0.1 * k);
        y.push_back(3.0 - 0.7 * 0.1 * k);
    }
    const LinFit f = linear_fit(x, y);
    CHECK(f.slope == doctest::Approx(-0.7).epsilon(1e-12));
    CHECK(f.intercept == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(f.slope_stderr < 1e-10);
}

TEST_CASE("Pearson correlation of exact linear data is +-1") {
    std::vector<double> x, up, down;
    for (int k = 0; k < 30; ++k) {
        x.push_back(k);
        up.push_back(2.0 * k + 1.0);
        down.push_back(-0.5 * k);
    }
    CHECK(pearson_correlation(x, up) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pearson_correlation(x, down) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("two-sample KS accepts identical distributions") {
    Rng rng(13);
    std::vector<double> a, b;
    for (int k = 0; k < 600; ++k) {
        a.push_back(rng.gaussian());
        b.push_back(rng.gaussian());
    }
    const KsResult ks = ks_test_two_sample(a, b);
    CHECK(ks.p_value > 0.001);
    CHECK(ks.statistic < 0.1);
}

TEST_CASE("two-sample KS rejects a clear shift") {
    Rng rng(14);
    std::vector<double> a, b;
    for (int k = 0; k < 600; ++k) {
        a.push_back(rng.gaussian());
        b.push_back(rng.gaussian() + 2.0);
    }
    const KsResult ks = ks_test_two_sample(a, b);
    CHECK(ks.p_value < 1e-6);
}

TEST_CASE("one-sample KS against a uniform cdf") {
    Rng rng(15);
    std::vector<double> s;
    for (int k = 0; k < 1000; ++k) s.push_back(rng.uniform());
    const std::vector<double> xs = {0.0, 0.25, 0.5, 0.75, 1.0};
    const KsResult ks = ks_test_against_cdf(s, xs, xs);
    CHECK(ks.p_value > 0.001);
}

TEST_CASE("union-find merges chains") {
    UnionFind uf(6);
    uf.unite(0, 1);
    uf.unite(1, 2);
    uf.unite(4, 5);
    CHECK(uf.find(0) == uf.find(2));
    CHECK(uf.find(4) == uf.find(5));
    CHECK(uf.find(3) != uf.find(0));
    CHECK(uf.find(3) != uf.find(4));
}

} // TEST_SUITE
