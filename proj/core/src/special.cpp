#include "clelab/special.hpp"

#include "clelab/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace clelab {

double gegenbauer(int n, double index, double x) {
    if (n < 0) throw std::invalid_argument("gegenbauer: negative degree");
    if (n == 0) return 1.0;
    double cm2 = 1.0;
    double cm1 = 2.0 * index * x;
    for (int k = 2; k <= n; ++k) {
        const double c = (2.0 * x * (k + index - 1.0) * cm1 - (k + 2.0 * index - 2.0) * cm2) /
                         static_cast<double>(k);
        cm2 = cm1;
        cm1 = c;
    }
    return cm1;
}

namespace {

// \int_{-1}^{1} (1-u^2)^{2a-1/2} C_n(u)^2 du via u = cos(theta); the
// integrand becomes sin^{4a}(theta) C_n(cos theta)^2, smooth on [0,pi].
double gegenbauer_norm(int n, double a, int order) {
    if (order % 2 != 0) ++order;
    const double h = M_PI / order;
    double sum = 0.0;
    for (int k = 0; k <= order; ++k) {
        const double theta = k * h;
        const double c = gegenbauer(n, 2.0 * a, std::cos(theta));
        const double f = std::pow(std::sin(theta), 4.0 * a) * c * c;
        const double w = (k == 0 || k == order) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        sum += w * f;
    }
    return sum * h / 3.0;
}

} // namespace

RadialBesselDensity::RadialBesselDensity(const BesselDensitySpec& spec) : spec_(spec) {
    if (spec.a <= 0.0) throw std::domain_error("RadialBesselDensity: a must be positive");
    if (spec.s <= 0.0) throw std::domain_error("RadialBesselDensity: s must be positive");
    const double a = spec.a;
    int n_max = spec.truncation;
    if (n_max <= 0) {
        // |C_n(x)| <= C_n(1); stop when the dropped-term bound falls below 1e-13
        n_max = 1;
        for (int n = 1; n <= 400; ++n) {
            const double cn1 = gegenbauer(n, 2.0 * a, 1.0);
            const double norm = gegenbauer_norm(n, a, 256);
            const double bound = cn1 * cn1 / norm *
                std::exp(-0.5 * n * (n + 4.0 * a) * spec.s);
            n_max = n;
            if (bound < 1e-13) break;
        }
    }
    n_terms_ = n_max + 1;
    norms_.resize(n_terms_);
    for (int n = 0; n < n_terms_; ++n)
        norms_[n] = gegenbauer_norm(n, a, spec.quadrature_order);
}

double RadialBesselDensity::at_time(double s, double x, double y) const {
    if (s <= 0.0) throw std::domain_error("RadialBesselDensity: s must be positive");
    const double a = spec_.a;
    const double siny4a = std::pow(std::sin(y), 4.0 * a);
    const double cx = std::cos(x), cy = std::cos(y);
    double sum = 0.0;
    for (int n = 0; n < n_terms_; ++n) {
        sum += siny4a * gegenbauer(n, 2.0 * a, cx) * gegenbauer(n, 2.0 * a, cy) / norms_[n] *
               std::exp(-0.5 * n * (n + 4.0 * a) * s);
    }
    return sum;
}

double RadialBesselDensity::operator()(double x, double y) const {
    return at_time(spec_.s, x, y);
}

void RadialBesselDensity::tabulate_cdf(double x, std::vector<double>& ys,
                                       std::vector<double>& cdf) const {
    const int m = 2000;
    ys.resize(m + 1);
    cdf.resize(m + 1);
    const double h = M_PI / m;
    double acc = 0.0;
    double prev = 0.0;
    for (int k = 0; k <= m; ++k) {
        const double y = k * h;
        const double p = (k == 0 || k == m) ? 0.0 : (*this)(x, y);
        if (k > 0) acc += 0.5 * (prev + p) * h;
        prev = p;
        ys[k] = y;
        cdf[k] = acc;
    }
    for (auto& v : cdf) v /= acc; // normalize out truncation residue
}

std::vector<double> simulate_radial_bessel(double a, double theta0, double s, double dt,
                                           int n_samples, std::uint64_t seed) {
    if (!(theta0 > 0.0 && theta0 < M_PI))
        throw std::domain_error("simulate_radial_bessel: theta0 outside (0, pi)");
    if (dt > 1e-3 * s) throw std::domain_error("simulate_radial_bessel: dt too large");
    constexpr double kGuard = 1e-4;
    constexpr int kBudget = 10000;
    const auto n_steps = static_cast<std::size_t>(std::llround(s / dt));
    std::vector<double> out(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        Rng rng = Rng::child(seed, static_cast<std::uint64_t>(i));
        double theta = theta0;
        for (std::size_t k = 0; k < n_steps; ++k) {
            const double drift = 2.0 * a / std::tan(theta) * dt;
            const double sd = std::sqrt(dt);
            double next = theta;
            int tries = 0;
            do {
                next = theta + drift + sd * rng.gaussian();
                if (++tries > kBudget)
                    throw std::runtime_error(
                        "simulate_radial_bessel: rejection budget exceeded, reduce dt");
            } while (next <= kGuard || next >= M_PI - kGuard);
            theta = next;
        }
        out[i] = theta;
    }
    return out;
}

double h_ode_residual(double kappa, const std::vector<double>& theta_grid) {
    const double b = 8.0 / kappa - 1.0;
    double worst = 0.0;
    for (double th : theta_grid) {
        const double s = std::sin(th), c = std::cos(th);
        const double H = std::pow(s, b);
        const double Hp = b * std::pow(s, b - 1.0) * c;
        const double Hpp = b * (b - 1.0) * std::pow(s, b - 2.0) * c * c - b * std::pow(s, b);
        const double res = Hpp + (2.0 - 8.0 / kappa) * (c / s) * Hp + (8.0 / kappa - 1.0) * H;
        worst = std::max(worst, std::abs(res));
    }
    return worst;
}

namespace {

struct OdeState {
    double H, Hp;
};

OdeState ode_rhs(double kappa, double theta, OdeState y) {
    const double cot = std::cos(theta) / std::sin(theta);
    return {y.Hp, -(2.0 - 8.0 / kappa) * cot * y.Hp - (8.0 / kappa - 1.0) * y.H};
}

} // namespace

double h_ode_integrate_vs_analytic(double kappa, double lo, double hi, double dt) {
    const double b = 8.0 / kappa - 1.0;
    double worst = 0.0;
    for (const double dir : {1.0, -1.0}) {
        double theta = M_PI / 2.0;
        OdeState y{1.0, 0.0};
        const double target = dir > 0 ? hi : lo;
        while (dir * (target - theta) > 1e-14) {
            double h = dir * dt;
            if (dir * (theta + h - target) > 0) h = target - theta;
            const OdeState k1 = ode_rhs(kappa, theta, y);
            const OdeState k2 = ode_rhs(kappa, theta + h / 2,
                                        {y.H + h / 2 * k1.H, y.Hp + h / 2 * k1.Hp});
            const OdeState k3 = ode_rhs(kappa, theta + h / 2,
                                        {y.H + h / 2 * k2.H, y.Hp + h / 2 * k2.Hp});
            const OdeState k4 = ode_rhs(kappa, theta + h, {y.H + h * k3.H, y.Hp + h * k3.Hp});
            y.H += h / 6 * (k1.H + 2 * k2.H + 2 * k3.H + k4.H);
            y.Hp += h / 6 * (k1.Hp + 2 * k2.Hp + 2 * k3.Hp + k4.Hp);
            theta += h;
            worst = std::max(worst, std::abs(y.H - std::pow(std::sin(theta), b)));
        }
    }
    return worst;
}

} // namespace clelab
