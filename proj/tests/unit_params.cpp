#include "clelab/params.hpp"
#include "clelab/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using namespace clelab;

TEST_SUITE("params") {

TEST_CASE("derived quantities at kappa = 4") {
    const SleParams p = derive_params(4.0);
    CHECK(p.gamma == 2.0);
    CHECK(p.alpha == 1.0);
    CHECK(p.Q == 2.0);
    CHECK(p.d_carpet == 1.875);
    CHECK(p.d_curve == 1.5);
    CHECK(p.f_exponent == doctest::Approx(0.5 + 0.5 + 0.125).epsilon(1e-15));
    REQUIRE(p.soup_intensity.has_value());
    CHECK(*p.soup_intensity == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("gamma branch above kappa = 4") {
    const SleParams p = derive_params(6.0);
    CHECK(p.gamma == doctest::Approx(4.0 / std::sqrt(6.0)).epsilon(1e-15));
    CHECK(p.alpha_hat == 1.5);
    CHECK(p.d_curve == 1.75);
    CHECK_FALSE(p.soup_intensity.has_value());
}

TEST_CASE("domain errors outside (8/3, 8)") {
    CHECK_THROWS_AS(derive_params(8.0 / 3.0), std::domain_error);
    CHECK_THROWS_AS(derive_params(8.0), std::domain_error);
    CHECK_THROWS_AS(derive_params(-1.0), std::domain_error);
}

TEST_CASE("two closed forms of the carpet dimension agree") {
    Rng rng(99);
    for (int k = 0; k < 1000; ++k) {
        const double kappa = rng.uniform(8.0 / 3.0 + 1e-9, 8.0 - 1e-9);
        const double d1 = derive_params(kappa).d_carpet;
        const double d2 =
            2.0 - (3.0 * kappa - 8.0) * (8.0 - kappa) / (32.0 * kappa);
        CHECK(std::abs(d1 - d2) < 1e-12);
    }
}

TEST_CASE("soup intensity endpoints") {
    CHECK(loop_soup_intensity(4.0) == doctest::Approx(1.0).epsilon(1e-15));
    // the endpoint itself is outside the open domain; the limit is 0
    CHECK(loop_soup_intensity(8.0 / 3.0 + 1e-9) < 1e-6);
    CHECK_THROWS_AS(loop_soup_intensity(8.0 / 3.0), std::domain_error);
}

TEST_CASE("intensity inversion round trip") {
    Rng rng(7);
    for (int k = 0; k < 200; ++k) {
        const double kappa = rng.uniform(8.0 / 3.0 + 1e-6, 4.0);
        const double c = loop_soup_intensity(kappa);
        // the intensity is flat near kappa = 4, so compare intensities,
        // not kappas, where the inverse is ill-conditioned
        CHECK(loop_soup_intensity(kappa_from_intensity(c)) ==
              doctest::Approx(c).epsilon(1e-10));
    }
}

TEST_CASE("intensity inversion hits the endpoint exactly") {
    CHECK(kappa_from_intensity(1.0) == 4.0);
}

} // TEST_SUITE
