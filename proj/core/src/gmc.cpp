#include "clelab/gmc.hpp"

#include "clelab/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace clelab {

double GmcMeasure::total() const {
    double s = 0.0;
    for (double m : cell_masses.data()) s += m;
    return s;
}

double CurveLengthMeasure::total() const {
    double s = 0.0;
    for (double m : segment_masses) s += m;
    return s;
}

GmcNormalizer::GmcNormalizer(const GffFactorization& fact, double eps) : eps_(eps) {
    if (eps < 2.0 * fact.spacing())
        throw std::domain_error("GmcNormalizer: eps below 2 grid spacings");
    var0_ = fact.circle_average_variance(Complex(0.0, 0.0), eps);
    log_r0_ = std::log(GffFactorization::center_conformal_radius(fact.domain()));
}

double GmcNormalizer::area_constant(double gamma) const {
    return std::exp(0.5 * gamma * gamma * (log_r0_ + std::log(1.0 / eps_) - var0_));
}

double GmcNormalizer::length_constant(double gamma) const {
    return std::exp(0.125 * gamma * gamma * (log_r0_ + std::log(1.0 / eps_) - var0_));
}

GffSample shifted_field(const GffSample& field, double c) {
    GffSample out = field;
    for (double& v : out.values) v += c;
    return out;
}

double circle_average_extended(const GffSample& field, Complex z, double eps) {
    const std::size_t n = field.n();
    const double a = 2.0 / static_cast<double>(n - 1);
    const auto npts = std::max<std::size_t>(
        16, static_cast<std::size_t>(std::ceil(2.0 * M_PI * eps / a)));
    double s = 0.0;
    for (std::size_t k = 0; k < npts; ++k) {
        const double phi = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(npts);
        const Complex p = z + eps * Complex(std::cos(phi), std::sin(phi));
        if (p.real() <= -1.0 || p.real() >= 1.0 || p.imag() <= -1.0 || p.imag() >= 1.0)
            continue; // zero extension
        s += field.interpolate(p);
    }
    return s / static_cast<double>(npts);
}

GmcMeasure gmc_area(const GffSample& field, const GmcNormalizer& norm, double gamma,
                    double eps, std::size_t cells) {
    if (!(gamma >= 0.0 && gamma < 2.0)) throw std::domain_error("gmc_area: gamma outside [0,2)");
    if (eps < 2.0 * field.fact->spacing())
        throw std::domain_error("gmc_area: eps below 2 grid spacings");
    GmcMeasure out;
    out.gamma = gamma;
    out.eps = eps;
    out.field_seed = field.seed;
    out.cell_masses = MassGrid::unit_disk_box(cells);
    const double pref = norm.area_constant(gamma) * std::pow(eps, 0.5 * gamma * gamma);
    const double area = out.cell_masses.cell_area();
    const bool disk = field.fact->domain() == GffDomain::Disk;
    for (std::size_t iy = 0; iy < cells; ++iy) {
        for (std::size_t ix = 0; ix < cells; ++ix) {
            const Complex z = out.cell_masses.center(ix, iy);
            if (disk && std::abs(z) >= 1.0) continue;
            const double h = gamma == 0.0 ? 0.0 : circle_average_extended(field, z, eps);
            out.cell_masses.at(ix, iy) = pref * std::exp(gamma * h) * area;
        }
    }
    return out;
}

CurveLengthMeasure quantum_curve_length(const GffSample& field, const GmcNormalizer& norm,
                                        const std::vector<Complex>& polyline, double gamma,
                                        double eps) {
    if (polyline.size() < 2)
        throw std::invalid_argument("quantum_curve_length: need >= 2 points");
    const double a = field.fact->spacing();
    const bool disk = field.fact->domain() == GffDomain::Disk;
    CurveLengthMeasure out;
    out.gamma = gamma;
    out.eps = eps;
    const double pref = norm.length_constant(gamma) * std::pow(eps, 0.25 * gamma * gamma);
    out.segment_masses.reserve(polyline.size() - 1);
    for (std::size_t k = 0; k + 1 < polyline.size(); ++k) {
        const Complex mid = 0.5 * (polyline[k] + polyline[k + 1]);
        const bool clear = disk ? std::abs(mid) + eps < 1.0 - a
                                : std::max(std::abs(mid.real()), std::abs(mid.imag())) + eps <
                                      1.0 - a;
        if (!clear)
            throw std::domain_error("quantum_curve_length: segment " + std::to_string(k) +
                                    " violates the eps clearance");
        const double len = std::abs(polyline[k + 1] - polyline[k]);
        const double h = gamma == 0.0 ? 0.0 : circle_average_extended(field, mid, eps);
        out.segment_masses.push_back(pref * std::exp(0.5 * gamma * h) * len);
    }
    return out;
}

LoopLengths loop_quantum_lengths(const GffSample& field, const GmcNormalizer& norm,
                                 const std::vector<std::vector<Complex>>& loops, double gamma,
                                 double eps) {
    const double a = field.fact->spacing();
    const bool disk = field.fact->domain() == GffDomain::Disk;
    LoopLengths out;
    out.lengths.assign(loops.size(), 0.0);
    out.boundary_adjacent.assign(loops.size(), 0);
    for (std::size_t li = 0; li < loops.size(); ++li) {
        bool clear = loops[li].size() >= 2;
        for (const Complex& z : loops[li]) {
            const bool ok = disk ? std::abs(z) + eps < 1.0 - a
                                 : std::max(std::abs(z.real()), std::abs(z.imag())) + eps <
                                       1.0 - a;
            if (!ok) {
                clear = false;
                break;
            }
        }
        if (!clear) {
            out.boundary_adjacent[li] = 1;
            ++out.n_excluded;
            continue;
        }
        out.lengths[li] =
            quantum_curve_length(field, norm, loops[li], gamma, eps).total();
    }
    return out;
}

StableJumpRecord sample_stable_jumps(double alpha_hat, double T, double floor, double C,
                                     std::uint64_t seed) {
    if (!(alpha_hat > 1.0 && alpha_hat < 2.0))
        throw std::domain_error("sample_stable_jumps: alpha_hat outside (1,2)");
    if (!(floor > 0.0)) throw std::domain_error("sample_stable_jumps: floor must be positive");
    StableJumpRecord rec;
    rec.alpha_hat = alpha_hat;
    rec.horizon = T;
    rec.floor = floor;
    if (T <= 0.0) return rec;
    const double mean = C * T * std::pow(floor, -alpha_hat) / alpha_hat;
    Rng rng(seed);
    const long count = rng.poisson(mean);
    rec.sizes.reserve(static_cast<std::size_t>(count));
    for (long k = 0; k < count; ++k)
        rec.sizes.push_back(floor * std::pow(rng.uniform(), -1.0 / alpha_hat));
    return rec;
}

double stable_jump_band_mean(double alpha_hat, double T, double C, double lo, double hi) {
    // integral of C y^{-alpha_hat - 1} over [lo, hi)
    return C * T / alpha_hat * (std::pow(lo, -alpha_hat) - std::pow(hi, -alpha_hat));
}

} // namespace clelab
