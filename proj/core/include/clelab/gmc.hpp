#pragma once

#include "clelab/gff.hpp"
#include "clelab/grid.hpp"

#include <cstdint>
#include <vector>

namespace clelab {

// Renormalized area measure eps^{gamma^2/2} e^{gamma h_eps(z)} dz on a cell
// grid over [-1,1]^2.  A lattice constant (estimated from the discrete Green
// oracle at the domain center) absorbs the lattice-vs-continuum mismatch.
struct GmcMeasure {
    MassGrid cell_masses;
    double gamma = 0.0;
    double eps = 0.0;
    std::uint64_t field_seed = 0;
    double total() const;
};

struct CurveLengthMeasure {
    std::vector<double> segment_masses;
    double gamma = 0.0;
    double eps = 0.0;
    double total() const;
};

struct LoopLengths {
    std::vector<double> lengths;                // per loop; 0 when excluded
    std::vector<unsigned char> boundary_adjacent; // excluded loops
    std::size_t n_excluded = 0;
};

struct StableJumpRecord {
    double alpha_hat = 0.0; // in (1,2)
    double horizon = 0.0;
    double floor = 0.0;
    std::vector<double> sizes;
};

// Per-(factorization, eps) normalization constants.
class GmcNormalizer {
public:
    GmcNormalizer(const GffFactorization& fact, double eps);
    double area_constant(double gamma) const;   // multiplies area masses
    double length_constant(double gamma) const; // multiplies length masses
    double center_variance() const { return var0_; }

private:
    double eps_;
    double var0_;      // Var h_eps(center), exact from the factorization
    double log_r0_;    // log conformal radius at the center
};

// Field shifted by a constant everywhere (test pathway for the exact
// scaling identities; the result is no longer zero-boundary).
GffSample shifted_field(const GffSample& field, double c);

GmcMeasure gmc_area(const GffSample& field, const GmcNormalizer& norm, double gamma,
                    double eps, std::size_t cells);

CurveLengthMeasure quantum_curve_length(const GffSample& field, const GmcNormalizer& norm,
                                        const std::vector<Complex>& polyline, double gamma,
                                        double eps);

// quantum_curve_length per closed loop; loops violating the eps clearance
// are flagged boundary-adjacent and excluded.
LoopLengths loop_quantum_lengths(const GffSample& field, const GmcNormalizer& norm,
                                 const std::vector<std::vector<Complex>>& loops, double gamma,
                                 double eps);

// Circle average where exterior lattice points contribute zero (the field's
// zero extension); never throws for interior-or-not points.
double circle_average_extended(const GffSample& field, Complex z, double eps);

// Jumps of size >= floor of a stable process run for time T: Poisson count
// with mean C T floor^{-alpha_hat} / alpha_hat, Pareto(alpha_hat) sizes.
StableJumpRecord sample_stable_jumps(double alpha_hat, double T, double floor, double C,
                                     std::uint64_t seed);

// Mean number of jumps with size in [lo, hi) (the Levy-integral oracle).
double stable_jump_band_mean(double alpha_hat, double T, double C, double lo, double hi);

} // namespace clelab
