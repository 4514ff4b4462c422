#pragma once

#include <optional>

namespace clelab {

// Scalar parameter algebra shared by every sampler and estimator.
// kappa is the SLE parameter; all other quantities are derived from it.
struct SleParams {
    double kappa = 0.0;
    double gamma = 0.0;       // sqrt(kappa) for kappa <= 4, 4/sqrt(kappa) above
    double alpha = 0.0;       // 4/kappa
    double alpha_hat = 0.0;   // kappa/4, meaningful for kappa > 4
    double Q = 0.0;           // 2/gamma + gamma/2
    double d_carpet = 0.0;    // 1 + 2/kappa + 3 kappa/32
    double d_curve = 0.0;     // min(2, 1 + kappa/8)
    std::optional<double> soup_intensity; // defined for kappa <= 4
    double f_exponent = 0.0;  // 1/2 + 2/kappa + kappa/32
};

// Populates the full parameter set.  Throws std::domain_error outside (8/3, 8).
SleParams derive_params(double kappa);

// c = (3 kappa - 8)(6 - kappa) / (2 kappa); valid on (8/3, 4].
double loop_soup_intensity(double kappa);

// Inverse of loop_soup_intensity on (8/3, 4], bisection to 1e-12.
double kappa_from_intensity(double c);

} // namespace clelab
