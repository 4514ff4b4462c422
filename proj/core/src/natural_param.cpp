#include "clelab/natural_param.hpp"

#include "clelab/rng.hpp"
#include "clelab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace clelab {

std::vector<Bubble> detect_bubbles(const std::vector<Complex>& trace, const Box& window,
                                   std::size_t grid_n, std::size_t batch) {
    if (trace.size() < 2) return {};
    const int n = static_cast<int>(grid_n);
    BoolGrid geom(grid_n, grid_n, window.x0, window.y0, window.w, window.h);

    // epoch of the last visit per cell (-1 = never), pocket membership flag
    std::vector<long> last(grid_n * grid_n, -1);
    std::vector<unsigned char> pocket(grid_n * grid_n, 0);
    std::vector<long> reach_stamp(grid_n * grid_n, -1);
    std::vector<Bubble> out;
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    std::vector<std::pair<int, int>> stack;

    auto idx = [&](int x, int y) { return static_cast<std::size_t>(y) * grid_n + x; };

    long sweep_id = 0;
    auto sweep = [&]() {
        // Everything reachable from the top/left/right frame through never
        // visited, un-pocketed cells is outside; the bottom edge is a wall
        // (the trace lives in the upper half-plane above it).
        ++sweep_id;
        stack.clear();
        auto push = [&](int x, int y) {
            if (x < 0 || y < 0 || x >= n || y >= n) return;
            const std::size_t k = idx(x, y);
            if (last[k] >= 0 || pocket[k] || reach_stamp[k] == sweep_id) return;
            reach_stamp[k] = sweep_id;
            stack.emplace_back(x, y);
        };
        for (int x = 0; x < n; ++x) push(x, n - 1);
        for (int y = 0; y < n; ++y) {
            push(0, y);
            push(n - 1, y);
        }
        while (!stack.empty()) {
            auto [x, y] = stack.back();
            stack.pop_back();
            push(x + 1, y);
            push(x - 1, y);
            push(x, y + 1);
            push(x, y - 1);
        }

        // unreached empty cells form the new pockets
        for (int y0 = 0; y0 < n; ++y0) {
            for (int x0 = 0; x0 < n; ++x0) {
                const std::size_t k0 = idx(x0, y0);
                if (last[k0] >= 0 || pocket[k0] || reach_stamp[k0] == sweep_id) continue;

                std::vector<std::pair<int, int>> comp;
                stack.clear();
                stack.emplace_back(x0, y0);
                pocket[k0] = 1;
                while (!stack.empty()) {
                    auto [x, y] = stack.back();
                    stack.pop_back();
                    comp.emplace_back(x, y);
                    for (auto [ddx, ddy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
                        const int nx = x + ddx, ny = y + ddy;
                        if (nx < 0 || ny < 0 || nx >= n || ny >= n) continue;
                        const std::size_t k = idx(nx, ny);
                        if (last[k] >= 0 || pocket[k] || reach_stamp[k] == sweep_id) continue;
                        pocket[k] = 1;
                        stack.emplace_back(nx, ny);
                    }
                }

                // pinch = the adjacent trace cell written last
                long best = -1;
                int px = x0, py = y0;
                int bx0 = n, by0 = n, bx1 = -1, by1 = -1;
                for (auto [x, y] : comp) {
                    bx0 = std::min(bx0, x);
                    bx1 = std::max(bx1, x);
                    by0 = std::min(by0, y);
                    by1 = std::max(by1, y);
                    for (int ddy = -1; ddy <= 1; ++ddy) {
                        for (int ddx = -1; ddx <= 1; ++ddx) {
                            const int nx = x + ddx, ny = y + ddy;
                            if (nx < 0 || ny < 0 || nx >= n || ny >= n) continue;
                            const long v = last[idx(nx, ny)];
                            if (v > best) {
                                best = v;
                                px = nx;
                                py = ny;
                            }
                        }
                    }
                }

                const int W = bx1 - bx0 + 1, H = by1 - by0 + 1;
                std::vector<unsigned char> local(static_cast<std::size_t>(W) * H, 0);
                for (auto [x, y] : comp)
                    local[static_cast<std::size_t>(y - by0) * W + (x - bx0)] = 1;
                const auto path = moore_boundary(local, W, H);

                Bubble b;
                b.n_cells = comp.size();
                b.pinch = geom.center(static_cast<std::size_t>(px), static_cast<std::size_t>(py));
                b.boundary.reserve(path.size() + 1);
                for (auto [x, y] : path)
                    b.boundary.push_back(geom.center(static_cast<std::size_t>(bx0 + x),
                                                     static_cast<std::size_t>(by0 + y)));
                if (!b.boundary.empty()) b.boundary.push_back(b.boundary.front());
                if (b.boundary.size() >= 3) out.push_back(std::move(b));
            }
        }
    };

    for (std::size_t j = 0; j + 1 < trace.size(); ++j) {
        rasterize_segment(geom, trace[j], trace[j + 1], cells);
        for (auto [ix, iy] : cells) {
            const std::size_t k = iy * grid_n + ix;
            if (!pocket[k]) last[k] = static_cast<long>(j);
        }
        if ((j + 1) % batch == 0) sweep();
    }
    sweep();
    return out;
}

MeasureEstimate estimate_mu0(const std::vector<LoewnerTrace>& traces, const SleParams& params,
                             const Mu0Config& cfg) {
    if (cfg.fields_per_trace == 0)
        throw std::invalid_argument("estimate_mu0: fields_per_trace must be positive");
    if (!(params.kappa > 4.0 && params.kappa < 8.0))
        throw std::domain_error("estimate_mu0: kappa must lie in (4, 8)");
    if (traces.empty()) throw std::invalid_argument("estimate_mu0: no traces");

    const double gamma = params.gamma;
    const double alpha_hat = params.alpha_hat;
    const Complex field_center(cfg.window.x0 + 0.5 * cfg.window.w,
                               cfg.window.y0 + 0.5 * cfg.window.h);
    const double field_radius = 0.5 * std::min(cfg.window.w, cfg.window.h);

    auto fact = make_gff_factorization(cfg.field_n, GffDomain::Disk);
    const double ce = cfg.circle_eps > 0.0 ? cfg.circle_eps : 4.0 * fact->spacing();
    GmcNormalizer norm(*fact, ce);
    std::vector<GffSample> fields;
    fields.reserve(cfg.fields_per_trace);
    for (std::size_t f = 0; f < cfg.fields_per_trace; ++f)
        fields.push_back(fact->sample(Rng::mix(cfg.seed, 0x0f1e1d0000ULL + f)));

    MeasureEstimate est;
    est.mass = MassGrid(cfg.grid_n, cfg.grid_n, cfg.window.x0, cfg.window.y0, cfg.window.w,
                        cfg.window.h);
    est.stderr_grid = est.mass;
    est.kappa = params.kappa;
    est.eps = cfg.eps;
    est.n_fields = cfg.fields_per_trace;

    MassGrid m2 = est.mass;    // accumulates per-cell sum of squares (Welford)
    MassGrid per_trace = est.mass;
    const double deposit = std::pow(cfg.eps, alpha_hat);
    const double margin = fact->spacing();
    const double map_scale = 1.0 / field_radius; // physical window disk -> GFF unit disk

    for (std::size_t ti = 0; ti < traces.size(); ++ti) {
        const auto& tr = traces[ti];
        double xlo = std::numeric_limits<double>::max(), xhi = -xlo, yhi = 0.0;
        for (const Complex& z : tr.points) {
            xlo = std::min(xlo, z.real());
            xhi = std::max(xhi, z.real());
            yhi = std::max(yhi, z.imag());
        }
        Box detect{std::min(xlo, cfg.window.x0) - 0.2, 0.0, 0.0, 0.0};
        detect.w = std::max(xhi, cfg.window.x0 + cfg.window.w) + 0.2 - detect.x0;
        detect.h = std::max(yhi, cfg.window.y0 + cfg.window.h) + 0.2;
        const auto bubbles = detect_bubbles(tr.points, detect, cfg.detect_n);

        // map measurable bubble boundaries into field coordinates once
        std::vector<std::vector<Complex>> polys;
        std::vector<Complex> pinches;
        for (const Bubble& b : bubbles) {
            bool ok = true;
            std::vector<Complex> poly;
            poly.reserve(b.boundary.size());
            for (const Complex& z : b.boundary) {
                const Complex w = (z - field_center) * map_scale;
                if (std::abs(w) + ce >= 1.0 - margin) {
                    ok = false;
                    break;
                }
                poly.push_back(w);
            }
            if (ok && est.mass.contains(b.pinch.real(), b.pinch.imag())) {
                polys.push_back(std::move(poly));
                pinches.push_back(b.pinch);
            }
        }

        std::fill(per_trace.data().begin(), per_trace.data().end(), 0.0);
        if (polys.empty()) ++est.n_traces_without_bubbles;
        for (const GffSample& field : fields) {
            for (std::size_t bi = 0; bi < polys.size(); ++bi) {
                const double q =
                    quantum_curve_length(field, norm, polys[bi], gamma, ce).total() *
                    field_radius; // undo the window rescaling at gamma = 0 scale
                if (q >= cfg.eps && q < 2.0 * cfg.eps) {
                    const std::size_t ix = per_trace.ix_of(pinches[bi].real());
                    const std::size_t iy = per_trace.iy_of(pinches[bi].imag());
                    per_trace.at(ix, iy) += deposit;
                }
            }
        }
        const double inv_fields = 1.0 / static_cast<double>(cfg.fields_per_trace);
        const double inv_area = 1.0 / per_trace.cell_area();
        for (std::size_t iy = 0; iy < cfg.grid_n; ++iy) {
            for (std::size_t ix = 0; ix < cfg.grid_n; ++ix) {
                double v = per_trace.at(ix, iy) * inv_fields * inv_area;
                if (v != 0.0 && cfg.apply_f) {
                    const Complex z = per_trace.center(ix, iy);
                    const double r =
                        field_radius - std::norm(z - field_center) / field_radius;
                    v = r > 0.0 ? v * std::pow(r, -2.0 / (gamma * gamma)) : 0.0;
                }
                est.mass.at(ix, iy) += v;
                m2.at(ix, iy) += v * v;
            }
        }
    }

    est.n_traces = traces.size();
    const double nt = static_cast<double>(traces.size());
    for (std::size_t k = 0; k < est.mass.data().size(); ++k) {
        const double mean = est.mass.data()[k] / nt;
        est.mass.data()[k] = mean;
        est.stderr_grid.data()[k] =
            nt > 1.0
                ? std::sqrt(std::max(0.0, (m2.data()[k] / nt - mean * mean) / (nt - 1.0)))
                : 0.0;
    }
    return est;
}

double trace_intensity_density(Complex z, double kappa) {
    const double y = z.imag();
    if (y <= 0.0) return 0.0;
    const double d = 1.0 + kappa / 8.0;
    return std::pow(std::sin(std::arg(z)), 8.0 / kappa - 1.0) * std::pow(y, d - 2.0);
}

double trace_intensity_box_integral(const Box& b, double kappa, std::size_t order) {
    if (order % 2 == 1) ++order;
    const double hx = b.w / static_cast<double>(order);
    const double hy = b.h / static_cast<double>(order);
    auto simpson_w = [&](std::size_t i) {
        if (i == 0 || i == order) return 1.0;
        return i % 2 == 1 ? 4.0 : 2.0;
    };
    double s = 0.0;
    for (std::size_t j = 0; j <= order; ++j) {
        const double y = b.y0 + hy * static_cast<double>(j);
        double row = 0.0;
        for (std::size_t i = 0; i <= order; ++i) {
            const double x = b.x0 + hx * static_cast<double>(i);
            row += simpson_w(i) * trace_intensity_density(Complex(x, y), kappa);
        }
        s += simpson_w(j) * row;
    }
    return s * hx * hy / 9.0;
}

namespace {

// Felzenszwalb-Huttenlocher 1D squared distance transform.
void dt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
           std::vector<double>& zbounds) {
    const int n = static_cast<int>(f.size());
    d.assign(f.size(), 0.0);
    v.assign(f.size(), 0);
    zbounds.assign(f.size() + 1, 0.0);
    int k = 0;
    v[0] = 0;
    zbounds[0] = -std::numeric_limits<double>::infinity();
    zbounds[1] = std::numeric_limits<double>::infinity();
    for (int q = 1; q < n; ++q) {
        double s;
        while (true) {
            const int p = v[k];
            s = ((f[q] + q * double(q)) - (f[p] + p * double(p))) / (2.0 * (q - p));
            if (s > zbounds[k]) break;
            --k;
        }
        ++k;
        v[k] = q;
        zbounds[k] = s;
        zbounds[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (zbounds[k + 1] < q) ++k;
        const double dq = q - double(v[k]);
        d[q] = dq * dq + f[v[k]];
    }
}

} // namespace

std::vector<double> distance_transform(const BoolGrid& mask) {
    const std::size_t nx = mask.nx(), ny = mask.ny();
    const double inf = 1e18;
    std::vector<double> sq(nx * ny);
    for (std::size_t iy = 0; iy < ny; ++iy)
        for (std::size_t ix = 0; ix < nx; ++ix)
            sq[iy * nx + ix] = mask.at(ix, iy) ? 0.0 : inf;

    std::vector<double> col(ny), dcol, row(nx), drow, zb;
    std::vector<int> v;
    for (std::size_t ix = 0; ix < nx; ++ix) {
        for (std::size_t iy = 0; iy < ny; ++iy) col[iy] = sq[iy * nx + ix];
        dt_1d(col, dcol, v, zb);
        for (std::size_t iy = 0; iy < ny; ++iy) sq[iy * nx + ix] = dcol[iy];
    }
    for (std::size_t iy = 0; iy < ny; ++iy) {
        for (std::size_t ix = 0; ix < nx; ++ix) row[ix] = sq[iy * nx + ix];
        dt_1d(row, drow, v, zb);
        for (std::size_t ix = 0; ix < nx; ++ix) sq[iy * nx + ix] = drow[ix];
    }
    const double a = mask.dx();
    std::vector<double> out(nx * ny);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = a * std::sqrt(sq[k]);
    return out;
}

MinkowskiResult minkowski_content(const BoolGrid& mask, double d,
                                  const std::vector<double>& radii) {
    if (radii.size() < 3)
        throw std::invalid_argument("minkowski_content: need >= 3 radii");
    MinkowskiResult res;
    bool empty = true;
    for (const unsigned char c : mask.data())
        if (c) empty = false;
    if (empty) {
        res.per_radius.assign(radii.size(), 0.0);
        return res;
    }

    const auto dist = distance_transform(mask);
    const double r_max = *std::max_element(radii.begin(), radii.end());
    const std::size_t nx = mask.nx(), ny = mask.ny();
    for (std::size_t iy = 0; iy < ny && !res.clipped; ++iy)
        for (std::size_t ix = 0; ix < nx && !res.clipped; ++ix)
            if ((ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1) &&
                dist[iy * nx + ix] <= r_max)
                res.clipped = true;

    std::vector<double> rs, vals;
    for (const double r : radii) {
        std::size_t count = 0;
        for (const double dd : dist)
            if (dd <= r) ++count;
        const double val =
            std::pow(r, d - 2.0) * static_cast<double>(count) * mask.cell_area();
        res.per_radius.push_back(val);
        rs.push_back(r);
        vals.push_back(val);
    }
    res.content = linear_fit(rs, vals).intercept;
    return res;
}

DimensionEstimate box_dimension(const BoolGrid& mask, const std::vector<std::size_t>& scales) {
    if (scales.size() < 2) throw std::invalid_argument("box_dimension: need >= 2 scales");
    std::vector<double> xs, ys;
    for (const std::size_t s : scales) {
        const std::size_t c = box_count(mask, s);
        if (c == 0) return {0.0, 0.0};
        xs.push_back(std::log(1.0 / (static_cast<double>(s) * mask.dx())));
        ys.push_back(std::log(static_cast<double>(c)));
    }
    const LinFit fit = linear_fit(xs, ys);
    return {fit.slope, fit.slope_stderr};
}

ScalingReport scaling_covariance_check(const MeasureEstimate& base,
                                       const MeasureEstimate& rescaled, double b,
                                       double exponent, const std::vector<Box>& probes) {
    if (!(b >= 0.5 && b <= 2.0))
        throw std::domain_error("scaling_covariance_check: b outside [1/2, 2]");
    ScalingReport rep;
    rep.b = b;
    rep.exponent = exponent;
    const double w = std::pow(b, exponent);

    // pushforward through z -> b z as a measure: pushed(A) = w * base(A / b);
    // intensities are per unit area, so box masses carry the cell area.
    auto shrink = [&](const Box& A) { return Box{A.x0 / b, A.y0 / b, A.w / b, A.h / b}; };
    for (const Box& A : probes) {
        const Box Ab = shrink(A);
        const double m1 = w * mass_in_box(base.mass, Ab) * base.mass.cell_area();
        const double s1 = w * stderr_in_box(base.stderr_grid, Ab) * base.mass.cell_area();
        const double m2 = mass_in_box(rescaled.mass, A) * rescaled.mass.cell_area();
        const double s2 = stderr_in_box(rescaled.stderr_grid, A) * rescaled.mass.cell_area();
        const double se = std::sqrt(s1 * s1 + s2 * s2);
        rep.box_z.push_back(se > 0.0 ? (m1 - m2) / se : (m1 == m2 ? 0.0 : 1e9));
    }

    double t1 = 0.0, v1 = 0.0, t2 = 0.0, v2 = 0.0;
    for (std::size_t k = 0; k < base.mass.data().size(); ++k) {
        t1 += base.mass.data()[k];
        v1 += base.stderr_grid.data()[k] * base.stderr_grid.data()[k];
    }
    for (std::size_t k = 0; k < rescaled.mass.data().size(); ++k) {
        t2 += rescaled.mass.data()[k];
        v2 += rescaled.stderr_grid.data()[k] * rescaled.stderr_grid.data()[k];
    }
    // totals of the intensity integrated over their own grids
    rep.total_pushed = w * t1 * base.mass.cell_area();
    rep.total_rescaled = t2 * rescaled.mass.cell_area();
    const double se = std::sqrt(w * w * v1 * base.mass.cell_area() * base.mass.cell_area() +
                                v2 * rescaled.mass.cell_area() * rescaled.mass.cell_area());
    rep.total_z = se > 0.0 ? (rep.total_pushed - rep.total_rescaled) / se
                           : (rep.total_pushed == rep.total_rescaled ? 0.0 : 1e9);
    return rep;
}

} // namespace clelab
