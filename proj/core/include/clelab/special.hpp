#pragma once

#include <cstdint>
#include <vector>

namespace clelab {

// Gegenbauer polynomial C_n^{(index)}(x) by the three-term recurrence.
double gegenbauer(int n, double index, double x);

// Transition density kit for the diffusion on (0,pi) with drift 2a cot(theta)
// ("radial Bessel process of dimension 4a+1").  The density is a Gegenbauer
// series whose n-th term decays like exp(-(n/2)(n+4a)s).
struct BesselDensitySpec {
    double a = 0.5;          // 2/kappa
    double s = 1.0;          // elapsed time
    int truncation = 0;      // 0 = choose automatically from the tail bound
    int quadrature_order = 2048;
};

class RadialBesselDensity {
public:
    explicit RadialBesselDensity(const BesselDensitySpec& spec);

    double operator()(double x, double y) const;
    // Density with the elapsed time overridden (shared normalizations).
    double at_time(double s, double x, double y) const;

    int truncation() const { return n_terms_; }

    // cdf of y |-> p_s(x, y) tabulated on a uniform grid over (0, pi)
    void tabulate_cdf(double x, std::vector<double>& ys, std::vector<double>& cdf) const;

private:
    BesselDensitySpec spec_;
    int n_terms_ = 0;
    std::vector<double> norms_; // \int (1-u^2)^{2a-1/2} C_n(u)^2 du, by quadrature
};

// Euler-Maruyama endpoints of d Theta = 2a cot(Theta) ds + dW with a
// rejection guard that keeps paths inside (delta, pi - delta).
std::vector<double> simulate_radial_bessel(double a, double theta0, double s, double dt,
                                           int n_samples, std::uint64_t seed);

// Max residual of H(theta) = sin^{8/kappa - 1}(theta) in
// H'' + (2 - 8/kappa) cot(theta) H' + (8/kappa - 1) H = 0 over the grid.
double h_ode_residual(double kappa, const std::vector<double>& theta_grid);

// Fourth-order integration of the same ODE from (H, H') = (1, 0) at pi/2;
// returns the max deviation from the analytic solution on [lo, hi].
double h_ode_integrate_vs_analytic(double kappa, double lo, double hi, double dt);

} // namespace clelab
