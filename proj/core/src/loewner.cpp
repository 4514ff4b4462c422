#include "clelab/loewner.hpp"

#include "clelab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace clelab {

double DrivingFunction::value_at(double t) const {
    if (times.empty()) throw std::runtime_error("DrivingFunction: empty driver");
    if (t <= times.front()) return values.front();
    if (t >= times.back()) return values.back();
    auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - times.begin());
    const double u = (t - times[i - 1]) / (times[i] - times[i - 1]);
    return values[i - 1] + u * (values[i] - values[i - 1]);
}

ForwardResult solve_forward(const DrivingFunction& driving, Complex z, double t) {
    if (t > driving.horizon() + 1e-12)
        throw std::out_of_range("solve_forward: t beyond driver horizon");
    const double swallow_tol = 1e-6 * std::max(1.0, std::abs(z));
    const double sqrt_kappa = std::sqrt(std::max(driving.kappa, 0.0));
    Complex g = z;
    double s = 0.0;
    while (s < t) {
        const double w = driving.value_at(s);
        const Complex dz = g - w;
        if (g.imag() < swallow_tol && std::abs(dz) < 1e3 * swallow_tol) {
            ForwardResult r;
            r.swallowed = true;
            r.swallow_time = s;
            return r;
        }
        double h = std::min(t - s, 0.02 * std::norm(dz));
        // the 2/(g-W) term stiffens near the tip; halve until comfortably resolved
        while (std::abs(dz) < 10.0 * h * std::max(sqrt_kappa, 1.0) && h > 1e-15) h *= 0.5;
        if (h < 1e-15) {
            ForwardResult r;
            r.swallowed = true;
            r.swallow_time = s;
            return r;
        }
        auto rhs = [&](double tau, Complex y) { return 2.0 / (y - driving.value_at(tau)); };
        const Complex k1 = rhs(s, g);
        const Complex k2 = rhs(s + h / 2, g + h / 2 * k1);
        const Complex k3 = rhs(s + h / 2, g + h / 2 * k2);
        const Complex k4 = rhs(s + h, g + h * k3);
        g += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        s += h;
        if (g.imag() < 0.0) g = Complex(g.real(), 0.0);
    }
    if (g.imag() < swallow_tol && std::abs(g - driving.value_at(t)) < 1e3 * swallow_tol) {
        ForwardResult r;
        r.swallowed = true;
        r.swallow_time = t;
        return r;
    }
    ForwardResult r;
    r.value = g;
    return r;
}

namespace {

// sqrt branch mapping H to H
inline Complex sqrt_upper(Complex w) {
    Complex r = std::sqrt(w);
    if (r.imag() < 0.0) r = -r;
    return r;
}

} // namespace

Complex solve_reverse(const DrivingFunction& driving, Complex z, double t) {
    if (!(z.imag() > 0.0)) throw std::domain_error("solve_reverse: need Im(z) > 0");
    if (t > driving.horizon() + 1e-12)
        throw std::out_of_range("solve_reverse: t beyond driver horizon");
    // splitting: exact drift f -> sqrt(f^2 - 4 dt), then the driving jump
    Complex f = z;
    double s = 0.0;
    std::size_t j = 0;
    while (s < t - 1e-15) {
        const double s_next = std::min(t, j + 1 < driving.times.size()
                                              ? driving.times[j + 1]
                                              : t);
        const double dt = s_next - s;
        if (dt > 0.0) {
            const double dw = driving.value_at(s_next) - driving.value_at(s);
            f = sqrt_upper(f * f - 4.0 * dt);
            f -= dw;
        }
        s = s_next;
        ++j;
        if (j > driving.times.size() + 2) break;
    }
    return f;
}

DrivingFunction sample_sle_driving(const SleParams& params, double dt, std::size_t n_steps,
                                   std::uint64_t seed) {
    return sample_sle_driving(params.kappa, dt, n_steps, seed);
}

DrivingFunction sample_sle_driving(double kappa, double dt, std::size_t n_steps,
                                   std::uint64_t seed) {
    if (!(dt > 0.0) || n_steps < 1)
        throw std::invalid_argument("sample_sle_driving: need dt > 0, n_steps >= 1");
    DrivingFunction d;
    d.kappa = kappa;
    d.times.resize(n_steps + 1);
    d.values.resize(n_steps + 1);
    d.times[0] = 0.0;
    d.values[0] = 0.0;
    Rng rng(seed);
    const double sd = std::sqrt(kappa * dt);
    for (std::size_t k = 1; k <= n_steps; ++k) {
        d.times[k] = static_cast<double>(k) * dt;
        d.values[k] = d.values[k - 1] + sd * rng.gaussian();
    }
    return d;
}

std::pair<DrivingFunction, ForcePointState> sample_sle_kappa_rho_driving(
    const SleParams& params, const std::vector<double>& rhos,
    const std::vector<Complex>& force_points, double dt, std::size_t n_steps,
    std::uint64_t seed) {
    if (rhos.size() != force_points.size())
        throw std::invalid_argument("sample_sle_kappa_rho_driving: mismatched rho/force sizes");
    if (!(dt > 0.0) || n_steps < 1)
        throw std::invalid_argument("sample_sle_kappa_rho_driving: need dt > 0, n_steps >= 1");
    for (const Complex& v : force_points)
        if (v.imag() < 0.0)
            throw std::invalid_argument("sample_sle_kappa_rho_driving: force point below R");

    const double kappa = params.kappa;
    const std::size_t m = rhos.size();
    ForcePointState st;
    st.positions = force_points;
    st.weights = rhos;
    std::vector<bool> collided(m, false);
    std::vector<int> side(m, 0);
    const double col_tol = std::max(1e-9, 1e-3 * std::sqrt(dt));

    DrivingFunction d;
    d.kappa = kappa;
    d.times = {0.0};
    d.values = {0.0};

    auto colliding_sum = [&]() {
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j)
            if (collided[j]) s += rhos[j];
        return s;
    };

    double w = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        if (std::abs(st.positions[j] - Complex(w, 0.0)) < col_tol && st.positions[j].imag() == 0.0)
            collided[j] = true;
        side[j] = st.positions[j].real() >= w ? 1 : -1;
    }
    if (colliding_sum() <= -2.0) {
        d.stopped_at_threshold = 0.0;
        return {d, st};
    }

    Rng rng(seed);
    const double sd = std::sqrt(kappa * dt);
    for (std::size_t k = 1; k <= n_steps; ++k) {
        double drift = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (collided[j]) continue;
            Complex dz = Complex(w, 0.0) - st.positions[j];
            double r = std::abs(dz);
            if (r < col_tol) dz = Complex(side[j] == 1 ? -col_tol : col_tol, 0.0);
            drift += (rhos[j] / dz).real();
        }
        const double w_new = w + drift * dt + sd * rng.gaussian();
        for (std::size_t j = 0; j < m; ++j) {
            if (collided[j]) {
                st.positions[j] = Complex(w_new, 0.0);
                continue;
            }
            Complex dz = st.positions[j] - Complex(w, 0.0);
            if (std::abs(dz) < col_tol)
                dz = Complex(side[j] * col_tol, 0.0);
            st.positions[j] += 2.0 / dz * dt;
            // a real force point may not cross the driving point: snap on crossing
            if (st.positions[j].imag() == 0.0) {
                const int s_now = st.positions[j].real() >= w_new ? 1 : -1;
                if (s_now != side[j] ||
                    std::abs(st.positions[j].real() - w_new) < col_tol) {
                    st.positions[j] = Complex(w_new, 0.0);
                    collided[j] = true;
                }
            }
        }
        w = w_new;
        d.times.push_back(static_cast<double>(k) * dt);
        d.values.push_back(w);
        if (colliding_sum() <= -2.0) {
            d.stopped_at_threshold = d.times.back();
            break;
        }
    }
    return {d, st};
}

namespace {

// Per-step tilted-slit map data.  The inverse incremental map is
//   F(w) = (w - W1 + p)^(1-alpha) (w - W1 - q)^alpha + W0
// with alpha fixed by dW/sqrt(dt) and p + q by the capacity.
struct SlitStep {
    double w0, w1;      // driving at the step ends
    double alpha, p, q;
    double dt;
    double im_exact;    // use the exact map below this height
};

SlitStep make_step(double w0, double w1, double dt) {
    SlitStep st;
    st.w0 = w0;
    st.w1 = w1;
    st.dt = dt;
    const double dw = w1 - w0;
    if (dt <= 0.0) {
        st.alpha = 0.5;
        st.p = st.q = 0.0;
        st.im_exact = 0.0;
        return st;
    }
    const double r = dw / (2.0 * std::sqrt(dt));
    const double s = r * r;
    st.alpha = 0.5 * (1.0 - (dw >= 0 ? 1.0 : -1.0) * std::sqrt(s / (s + 4.0)));
    const double u = 2.0 * std::sqrt(dt / (st.alpha * (1.0 - st.alpha)));
    st.p = (1.0 - st.alpha) * u;
    st.q = st.alpha * u;
    st.im_exact = 6.0 * std::sqrt(dt) + 0.75 * std::abs(dw);
    return st;
}

inline Complex apply_exact(const SlitStep& st, Complex z) {
    const Complex w = z - st.w1;
    const Complex l = (1.0 - st.alpha) * std::log(w + st.p) + st.alpha * std::log(w - st.q);
    Complex r = std::exp(l);
    if (r.imag() < 0.0) r = Complex(r.real(), 0.0);
    return r + st.w0;
}

// Midpoint step of the backward flow dz/ds = -2/(z - W(t1 - s)); valid
// once the point is well above the slit.
inline Complex apply_fast(const SlitStep& st, Complex z) {
    const Complex zmid = z - st.dt / (z - st.w1);
    return z - 2.0 * st.dt / (zmid - 0.5 * (st.w0 + st.w1));
}

} // namespace

LoewnerTrace trace_from_driving(const DrivingFunction& driving, std::size_t stride) {
    if (driving.times.size() < 2)
        throw std::invalid_argument("trace_from_driving: driver is empty");
    if (stride == 0) stride = 1;
    const std::size_t n = driving.times.size() - 1;
    std::vector<SlitStep> steps(n);
    for (std::size_t j = 0; j < n; ++j)
        steps[j] = make_step(driving.values[j], driving.values[j + 1],
                             driving.times[j + 1] - driving.times[j]);

    LoewnerTrace tr;
    tr.kappa = driving.kappa;
    tr.points.push_back(Complex(driving.values[0], 0.0));
    tr.times.push_back(driving.times[0]);
    for (std::size_t k = 1; k <= n; ++k) {
        if (k % stride != 0 && k != n) continue;
        const SlitStep& last = steps[k - 1];
        // tip of the k-th slit in pre-step coordinates
        Complex z = std::pow(last.p, 1.0 - last.alpha) * std::pow(last.q, last.alpha) *
                        std::exp(Complex(0.0, last.alpha * M_PI)) +
                    last.w0;
        for (std::size_t j = k - 1; j-- > 0;) {
            const SlitStep& st = steps[j];
            if (z.imag() > st.im_exact)
                z = apply_fast(st, z);
            else
                z = apply_exact(st, z);
        }
        if (z.imag() < 0.0) z = Complex(z.real(), 0.0);
        tr.points.push_back(z);
        tr.times.push_back(driving.times[k]);
    }
    return tr;
}

LoewnerTrace trace_from_driving(const DrivingFunction& driving) {
    return trace_from_driving(driving, 1);
}

} // namespace clelab
