#pragma once

#include "clelab/gff.hpp"
#include "clelab/gmc.hpp"
#include "clelab/grid.hpp"
#include "clelab/loewner.hpp"
#include "clelab/params.hpp"

#include <cstdint>
#include <vector>

namespace clelab {

// Grid estimate of an intensity measure with a per-cell standard error
// computed across traces (or replicas).
struct MeasureEstimate {
    MassGrid mass;
    MassGrid stderr_grid;
    std::size_t n_traces = 0;
    std::size_t n_fields = 0;
    double kappa = 0.0;
    double eps = 0.0;
    std::size_t n_traces_without_bubbles = 0;
};

// Complementary component pinched off by a self-touching trace, read off a
// cell grid: the enclosed cells, the traced boundary polyline, and the cell
// where the trace closed the pocket.
struct Bubble {
    std::vector<Complex> boundary; // closed polyline
    Complex pinch;
    std::size_t n_cells = 0;
};

// Grid-level bubble detection on a polyline: every `batch` segments, empty
// cells no longer reachable from the frame of the working window form new
// bubbles.  The pinch point is the adjacent trace cell visited last.
std::vector<Bubble> detect_bubbles(const std::vector<Complex>& trace, const Box& window,
                                   std::size_t grid_n, std::size_t batch = 256);

struct Mu0Config {
    std::size_t fields_per_trace = 50;
    double eps = 0.05;          // quantum-length band [eps, 2 eps)
    std::size_t grid_n = 128;   // estimate grid over `window`
    Box window{-1.0, 0.0, 2.0, 2.0}; // field lives on the inscribed disk B(i,1)
    std::size_t field_n = 129;  // GFF lattice
    double circle_eps = 0.0;    // 0 → 4 lattice spacings
    std::size_t detect_n = 256; // bubble-detection resolution
    std::uint64_t seed = 1;
    bool apply_f = true;        // multiply by the conformal-radius weight
};

// Intensity of the trace measure: for each trace, bubbles are detected once;
// for each independent field the bubbles with quantum boundary length in
// [eps, 2 eps) deposit eps^{kappa/4} at their pinch point; deposits are
// averaged over fields, weighted by r(z)^{-2/gamma^2} for the field's disk,
// and aggregated over traces with a per-cell standard error.
MeasureEstimate estimate_mu0(const std::vector<LoewnerTrace>& traces, const SleParams& params,
                             const Mu0Config& cfg);

// Reference intensity density of the trace measure in the upper half-plane,
// up to constant: sin^{8/kappa - 1}(arg z) * Im(z)^{d_curve - 2}.
double trace_intensity_density(Complex z, double kappa);
// Its integral over a box by tensor Simpson quadrature.
double trace_intensity_box_integral(const Box& b, double kappa, std::size_t order = 256);

// r^{d-2} Area(r-neighborhood) extrapolated linearly to r = 0 on the grid.
struct MinkowskiResult {
    double content = 0.0;
    std::vector<double> per_radius;
    bool clipped = false; // neighborhood ran into the grid frame
};
MinkowskiResult minkowski_content(const BoolGrid& mask, double d,
                                  const std::vector<double>& radii);

// Euclidean distance (in physical units) from each cell center to the set.
std::vector<double> distance_transform(const BoolGrid& mask);

// Least-squares box-counting dimension over dyadic scales (cells per box).
struct DimensionEstimate {
    double dimension = 0.0;
    double stderr_slope = 0.0;
};
DimensionEstimate box_dimension(const BoolGrid& mask, const std::vector<std::size_t>& scales);

// Compares `base` pushed through z -> b z with weight b^exponent against an
// estimate rebuilt from rescaled inputs; z-scores per probe box plus totals.
struct ScalingReport {
    double b = 1.0;
    double exponent = 0.0;
    std::vector<double> box_z;
    double total_pushed = 0.0;
    double total_rescaled = 0.0;
    double total_z = 0.0;
};
ScalingReport scaling_covariance_check(const MeasureEstimate& base,
                                       const MeasureEstimate& rescaled, double b,
                                       double exponent, const std::vector<Box>& probes);

} // namespace clelab
