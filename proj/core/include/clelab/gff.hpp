#pragma once

#include "clelab/grid.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace clelab {

enum class GffDomain { Disk, Square };

class GffFactorization;

// One sample of the discrete zero-boundary GFF on an n x n vertex lattice
// over [-1,1]^2.  Boundary (and exterior, for the disk) vertices are zero.
struct GffSample {
    std::shared_ptr<const GffFactorization> fact;
    std::vector<double> values; // n*n, row-major over vertices
    std::uint64_t seed = 0;
    double normalization = 0.0; // field scale applied on top of Laplacian^{-1/2}

    double value(std::size_t i, std::size_t j) const;
    // Bilinear interpolation at a point of [-1,1]^2.
    double interpolate(Complex z) const;
    std::size_t n() const;
};

// Sparse Cholesky of the 5-point Dirichlet Laplacian, shared across samples.
class GffFactorization : public std::enable_shared_from_this<GffFactorization> {
public:
    GffFactorization(std::size_t n, GffDomain domain);
    ~GffFactorization();

    GffSample sample(std::uint64_t seed) const;

    std::size_t n() const { return n_; }
    GffDomain domain() const { return domain_; }
    double spacing() const { return 2.0 / static_cast<double>(n_ - 1); }
    double normalization() const { return normalization_; }
    bool is_interior(std::size_t i, std::size_t j) const;

    // Field covariance Cov(h(x_k), h(.)) for vertex k, exact per the
    // factorization (independent Green oracle for tests).
    std::vector<double> covariance_column(std::size_t i, std::size_t j) const;

    // Exact variance of the circle average at (z, eps).
    double circle_average_variance(Complex z, double eps) const;

    // Conformal radius of the continuum domain seen from its center.
    static double center_conformal_radius(GffDomain domain);

private:
    struct Impl;
    std::size_t n_;
    GffDomain domain_;
    double normalization_ = 1.0;
    std::unique_ptr<Impl> impl_;
};

std::shared_ptr<const GffFactorization> make_gff_factorization(std::size_t n, GffDomain domain);

// Mean of the interpolated field over >= max(16, 2 pi eps / a) circle points.
double circle_average(const GffSample& field, Complex z, double eps);

// Splits the field into (zero-boundary part on U, harmonic remainder).
// U is given as a vertex mask (n*n, nonzero = in U), strictly interior.
struct MarkovDecomposition {
    std::vector<double> zero_boundary; // zero outside U
    std::vector<double> harmonic;      // equals field outside U
};
MarkovDecomposition markov_decompose(const GffSample& field,
                                     const std::vector<unsigned char>& u_mask);

// Discrete path of Y_t = B_{2t} + (gamma - 2/gamma) t conditioned (by
// rejection over the horizon) to stay positive, started at s0.
std::vector<double> sample_wedge_radial(double gamma, double t_max, double dt,
                                        std::uint64_t seed, double s0 = 0.1);

// General Dirichlet solve on a masked subgraph of the n x n lattice:
// (4 u - sum of neighbors) = rhs on masked cells, u = 0 outside.
class LatticeDirichlet {
public:
    LatticeDirichlet(std::size_t n, const std::vector<unsigned char>& mask);
    ~LatticeDirichlet();
    std::vector<double> solve(const std::vector<double>& rhs) const; // full-lattice rhs
    std::size_t unknowns() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace clelab
