#pragma once

#include "clelab/grid.hpp"

#include <cstdint>
#include <vector>

namespace clelab {

// One Brownian loop: a closed polyline (last point repeats the first),
// rooted at `root`, of lifetime `duration`.  `mark` is a uniform level used
// for monotone thinning between intensities.
struct BrownianLoop {
    std::vector<Complex> points;
    Complex root;
    double duration = 0.0;
    double mark = 0.0;
};

// Loops of the soup restricted to the unit disk (loops exiting the disk are
// discarded, they belong to the complement of the restriction).
struct LoopSoup {
    std::vector<BrownianLoop> loops;
    double intensity = 0.0;
    double t_min = 0.0;
    double t_cap = 0.0;
    std::uint64_t seed = 0;
};

// Mean number of loop roots in a region of the given area before the
// stay-in-domain restriction, for lifetimes in [t_min, t_cap].
double expected_root_count(double intensity, double area, double t_min, double t_cap);

// Soup of intensity c in the unit disk.  Roots are uniform, lifetimes have
// density proportional to t^{-2} on [t_min, t_cap], loops are Brownian
// bridges with `bridge_steps` segments.  Each loop carries an independent
// uniform mark for thinning.
LoopSoup sample_loop_soup(double intensity, double t_min, double t_cap,
                          std::size_t bridge_steps, std::uint64_t seed);

// Sub-soup of the given (smaller) intensity: keeps exactly the loops whose
// mark is below intensity / soup.intensity.  Monotone in `intensity`.
LoopSoup thin_soup(const LoopSoup& soup, double intensity);

// Cluster id per loop; loops are in one cluster iff connected by a chain of
// pairwise-intersecting loops.  bucket_n controls the candidate-pair grid.
std::vector<std::size_t> cluster_loops(const LoopSoup& soup, std::size_t bucket_n = 128);

// CLE-type sample read off the soup clusters at cell resolution grid_n:
// `loops` are the traced outer boundaries of the filled clusters and
// `carpet` marks the cells not strictly enclosed by any cluster (boundary
// cells of a cluster stay in the carpet).
struct CleSample {
    std::vector<std::vector<Complex>> loops;
    BoolGrid carpet;
    std::vector<std::size_t> cluster_sizes; // loops per cluster, loop-aligned order
};

CleSample carpet_from_clusters(const LoopSoup& soup,
                               const std::vector<std::size_t>& cluster_of,
                               std::size_t grid_n);

} // namespace clelab
