#pragma once

#include "clelab/gff.hpp"
#include "clelab/gmc.hpp"
#include "clelab/grid.hpp"
#include "clelab/loopsoup.hpp"
#include "clelab/params.hpp"
#include "clelab/stats.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace clelab {

// Grid measure carried by a CLE carpet; intensity is per unit area.
struct CarpetMeasure {
    MassGrid mass;
    double kappa = 0.0;
    double eps = 0.0;    // loop quantum-length threshold
    std::size_t n_fields = 0;
    std::uint64_t seed = 0;
    double raw_total = 0.0; // pre-weight deposit total (scaling diagnostics)
    double total() const;
};

struct XiConfig {
    std::size_t n_fields = 1;
    double eps = 0.02;        // smallest loop quantum length that carries a point
    std::size_t grid_n = 128; // measure resolution over [-1,1]^2
    double circle_eps = 0.0;  // 0 → 4 lattice spacings
    std::uint64_t seed = 1;
    double field_shift = 0.0; // constant added to every field (scaling test hook)
    bool apply_f = true;      // conformal-radius weight r_D(z)^{-f_exponent}
    bool keep_replicas = false; // xi_ensemble: retain per-replica grids
};

// Carpet measure of one CLE sample: per field, every traced loop with
// quantum length >= eps deposits eps^{alpha + 1/2} at a point drawn
// uniformly by quantum length along it; deposits are averaged over fields
// and weighted by r_D(z)^{-(1/2 + 2/kappa + kappa/32)}.  Zero outside the
// disk and on the outermost cell ring.
// Restricts the estimator to a subdomain V of the disk: each sampled field
// is replaced by its zero-boundary part on V (harmonic remainder removed),
// loops not lying in V are skipped, and the conformal-radius weight uses
// r_V instead of 1-|z|^2 so the estimate is intrinsic to V.
struct XiRestriction {
    std::vector<unsigned char> vertex_mask; // field-grid vertices inside V
    BoolGrid cell_mask;                     // measure-grid cells inside V
    MassGrid r_v;                           // per-cell conformal radius of V
};

CarpetMeasure estimate_xi(const CleSample& cle, const SleParams& params,
                          std::shared_ptr<const GffFactorization> fact, const XiConfig& cfg,
                          const XiRestriction* restriction = nullptr);

// Mean intensity, per-cell standard error and per-replica totals across
// independent CLE samples (soup -> clusters -> carpet -> measure per seed).
struct XiEnsemble {
    MassGrid mean;
    MassGrid stderr_grid;
    std::vector<double> totals;
    std::vector<MassGrid> replica_mass; // filled when XiConfig::keep_replicas
    double kappa = 0.0;
    std::size_t n_replicas = 0;
};
struct SoupConfig {
    double t_min = 1e-4;
    double t_cap = 1.0;
    std::size_t bridge_steps = 512;
    std::size_t cluster_bucket_n = 128;
    std::size_t carpet_n = 256;
};
XiEnsemble xi_ensemble(std::size_t n_replicas, const SleParams& params,
                       const SoupConfig& soup_cfg, const XiConfig& xi_cfg,
                       std::shared_ptr<const GffFactorization> fact, std::uint64_t seed);

// Mass relocation through the disk automorphism w -> e^{i rot} (w - z0) /
// (1 - conj(z0) w), each cell weighted by |phi'|^d.
CarpetMeasure pushforward_covariant(const CarpetMeasure& measure, Complex z0, double rotation,
                                    double d);

// |phi'(w)| for the automorphism above.
double mobius_derivative_abs(Complex w, Complex z0);

// Reference intensity C (1 - |z|^2)^{d-2}; domain error outside the disk.
double disk_intensity_reference(Complex z, double d, double C);

// Discrete Green's function of a masked sub-domain with pole at the probe
// cell; u ~ -log|phi| for the uniformizing map phi sending probe -> 0.
std::vector<double> masked_green(std::size_t n, const std::vector<unsigned char>& mask,
                                 std::size_t pole_i, std::size_t pole_j);

struct MarkovTestConfig {
    std::size_t n_replicas = 400;
    std::size_t gff_n = 129;
    // When set, the restricted branch re-estimates intrinsically on V
    // (zero-boundary field part, r_V weight) instead of restricting the
    // disk-wide estimate.
    bool intrinsic = false;
    Complex probe{0.0, 0.5};  // inside the upper half-disk U
    SoupConfig soup;
    XiConfig xi;
    std::uint64_t seed = 1;
};
struct MarkovTestReport {
    KsResult ks;
    std::size_t n_skipped = 0;       // probe swallowed
    std::vector<double> pushed_totals;
    std::vector<double> fresh_totals;
    double component_correlation = 0.0; // Xi totals of two disjoint components
    double component_correlation_z = 0.0;
    std::size_t n_component_pairs = 0;
};
// Definition-level Markov check: remove closures of loops crossing the
// boundary of the upper half-disk, uniformize the component V of the probe
// point, push Xi|_V forward with weight |phi'|^d and compare the totals
// against fresh unit-disk runs by a two-sample KS test.
MarkovTestReport markov_restriction_test(const SleParams& params, const MarkovTestConfig& cfg);

struct CouplingLevel {
    double c = 0.0;
    double kappa = 0.0;
    double d_carpet = 0.0;
    std::size_t n_loops = 0;
    double xi_total = 0.0;
    BoolGrid carpet;
};
struct CouplingReport {
    std::vector<CouplingLevel> levels;
    bool carpets_nested = true; // cellwise decreasing along increasing c
    CarpetMeasure last;         // the c = 1 (kappa = 4) estimate
};
// One soup at c = 1 thinned to each level of an increasing c-sequence
// ending at 1; shared randomness makes the carpets monotone.
CouplingReport cle4_measure_via_coupling(const std::vector<double>& c_sequence,
                                         const SoupConfig& soup_cfg, const XiConfig& xi_cfg,
                                         std::shared_ptr<const GffFactorization> fact,
                                         std::uint64_t seed);

struct LoopMassReport {
    std::vector<double> radii;
    std::vector<double> mean_mass;   // Xi mass within r of the reference loop
    double slope = 0.0;              // log mass vs log r
    double slope_ci_half_width = 0.0; // 95% jackknife interval half width
    double control_slope = 0.0;      // arc-length measure in place of Xi
    bool defined = true;
};
// Lemma-level check that the measure puts no mass on individual loops: the
// r-neighborhood mass of the largest loop must vanish as r -> 0 (positive
// log-log slope), while the arc-length control stays flat.
LoopMassReport loop_mass_vanishing_test(const SleParams& params, std::size_t n_replicas,
                                        const std::vector<double>& radii,
                                        const SoupConfig& soup_cfg, const XiConfig& xi_cfg,
                                        std::shared_ptr<const GffFactorization> fact,
                                        std::uint64_t seed);

// Per-box z-scores for the equality of two unit-normalized intensities.
std::vector<double> uniqueness_normalization_check(const XiEnsemble& a, const XiEnsemble& b,
                                                   const std::vector<Box>& probes);

} // namespace clelab
