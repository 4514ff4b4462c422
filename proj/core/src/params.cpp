#include "clelab/params.hpp"

#include <cmath>
#include <stdexcept>

namespace clelab {

namespace {
constexpr double kKappaMin = 8.0 / 3.0;
constexpr double kKappaMax = 8.0;
} // namespace

SleParams derive_params(double kappa) {
    if (!(kappa > kKappaMin && kappa < kKappaMax))
        throw std::domain_error("derive_params: kappa must lie in (8/3, 8)");
    SleParams p;
    p.kappa = kappa;
    p.gamma = kappa <= 4.0 ? std::sqrt(kappa) : 4.0 / std::sqrt(kappa);
    p.alpha = 4.0 / kappa;
    p.alpha_hat = kappa / 4.0;
    p.Q = 2.0 / p.gamma + p.gamma / 2.0;
    p.d_carpet = 1.0 + 2.0 / kappa + 3.0 * kappa / 32.0;
    p.d_curve = std::min(2.0, 1.0 + kappa / 8.0);
    p.f_exponent = 0.5 + 2.0 / kappa + kappa / 32.0;
    if (kappa <= 4.0) p.soup_intensity = loop_soup_intensity(kappa);
    return p;
}

double loop_soup_intensity(double kappa) {
    if (!(kappa > kKappaMin))
        throw std::domain_error("loop_soup_intensity: kappa must exceed 8/3");
    if (kappa > 4.0)
        throw std::domain_error("loop_soup_intensity: kappa must be at most 4");
    return (3.0 * kappa - 8.0) * (6.0 - kappa) / (2.0 * kappa);
}

double kappa_from_intensity(double c) {
    if (!(c > 0.0 && c <= 1.0))
        throw std::domain_error("kappa_from_intensity: c must lie in (0, 1]");
    // The intensity has a critical point at kappa = 4, so bisection is
    // ill-conditioned near c = 1; return the endpoint exactly.
    if (c == 1.0) return 4.0;
    double lo = kKappaMin, hi = 4.0;
    // c(kappa) is strictly increasing on (8/3, 4]
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (loop_soup_intensity(mid) < c)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace clelab
