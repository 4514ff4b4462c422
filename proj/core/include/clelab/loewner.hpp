#pragma once

#include "clelab/grid.hpp"
#include "clelab/params.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace clelab {

// Discretized driving function W on a uniform capacity-time grid
// (hcap(K_t) = 2t).  Values between knots are linearly interpolated.
struct DrivingFunction {
    std::vector<double> times;   // strictly increasing, times[0] = 0
    std::vector<double> values;  // W at the knots
    double kappa = 0.0;
    std::optional<double> stopped_at_threshold;

    double horizon() const { return times.empty() ? 0.0 : times.back(); }
    double value_at(double t) const;
};

struct LoewnerTrace {
    std::vector<Complex> points;
    std::vector<double> times;
    double kappa = 0.0;
};

struct ForcePointState {
    std::vector<Complex> positions;
    std::vector<double> weights;
};

struct ForwardResult {
    bool swallowed = false;
    Complex value;        // g_t(z) when not swallowed
    double swallow_time = 0.0;
};

// Integrates dg/dt = 2 / (g - W(t)), g_0 = z, up to time t with adaptive
// steps.  A point is declared swallowed when Im(g) < 1e-6 max(1, |z|).
ForwardResult solve_forward(const DrivingFunction& driving, Complex z, double t);

// Centered reverse flow df = -2/f dt - dW, f_0 = z (Im z > 0).
Complex solve_reverse(const DrivingFunction& driving, Complex z, double t);

DrivingFunction sample_sle_driving(const SleParams& params, double dt, std::size_t n_steps,
                                   std::uint64_t seed);
DrivingFunction sample_sle_driving(double kappa, double dt, std::size_t n_steps,
                                   std::uint64_t seed);

// Euler-Maruyama for the SLE_kappa(rho) system.  Integration stops with
// stopped_at_threshold set when the weights of collided force points sum
// to <= -2 (the continuation threshold).
std::pair<DrivingFunction, ForcePointState> sample_sle_kappa_rho_driving(
    const SleParams& params, const std::vector<double>& rhos,
    const std::vector<Complex>& force_points, double dt, std::size_t n_steps,
    std::uint64_t seed);

// Trace tips by composing per-step tilted-slit maps.  Far from the slit
// singularity each map is replaced by a midpoint step of the backward
// Loewner flow, which is what makes 1e5-step traces tractable.
LoewnerTrace trace_from_driving(const DrivingFunction& driving);

// Tips only every `stride` driver steps (same accuracy, fewer outputs).
LoewnerTrace trace_from_driving(const DrivingFunction& driving, std::size_t stride);

} // namespace clelab
