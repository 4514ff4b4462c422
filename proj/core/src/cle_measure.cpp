#include "clelab/cle_measure.hpp"

#include "clelab/gff.hpp"
#include "clelab/natural_param.hpp"
#include "clelab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace clelab {

double CarpetMeasure::total() const {
    double s = 0.0;
    for (const double v : mass.data()) s += v;
    return s * mass.cell_area();
}

namespace {

// Point at mass-fraction u along a polyline with per-segment masses.
Complex point_by_mass(const std::vector<Complex>& poly, const std::vector<double>& seg,
                      double u) {
    double total = 0.0;
    for (const double m : seg) total += m;
    double target = u * total;
    for (std::size_t k = 0; k < seg.size(); ++k) {
        if (target <= seg[k] || k + 1 == seg.size()) {
            const double f = seg[k] > 0.0 ? std::clamp(target / seg[k], 0.0, 1.0) : 0.5;
            return poly[k] + f * (poly[k + 1] - poly[k]);
        }
        target -= seg[k];
    }
    return poly.front();
}

} // namespace

CarpetMeasure estimate_xi(const CleSample& cle, const SleParams& params,
                          std::shared_ptr<const GffFactorization> fact, const XiConfig& cfg,
                          const XiRestriction* restriction) {
    if (cfg.n_fields == 0) throw std::invalid_argument("estimate_xi: n_fields must be positive");
    if (!(params.kappa > 8.0 / 3.0 && params.kappa <= 4.0))
        throw std::domain_error("estimate_xi: kappa must lie in (8/3, 4]");

    // One Dirichlet solver per restriction, reused across the fields.
    std::vector<unsigned char> eff;
    std::unique_ptr<LatticeDirichlet> vsolver;
    if (restriction) {
        const std::size_t fn = fact->n();
        if (restriction->vertex_mask.size() != fn * fn)
            throw std::invalid_argument("estimate_xi: restriction vertex mask size");
        eff.assign(fn * fn, 0);
        bool any = false;
        for (std::size_t v = 0; v < fn * fn; ++v) {
            if (restriction->vertex_mask[v] && fact->is_interior(v % fn, v / fn)) {
                eff[v] = 1;
                any = true;
            }
        }
        if (any) vsolver = std::make_unique<LatticeDirichlet>(fn, eff);
    }

    const double gamma = params.gamma;
    const double ce = cfg.circle_eps > 0.0 ? cfg.circle_eps : 4.0 * fact->spacing();
    GmcNormalizer norm(*fact, ce);
    const double deposit = std::pow(cfg.eps, params.alpha + 0.5);

    CarpetMeasure out;
    out.mass = MassGrid::unit_disk_box(cfg.grid_n);
    out.kappa = params.kappa;
    out.eps = cfg.eps;
    out.n_fields = cfg.n_fields;
    out.seed = cfg.seed;

    for (std::size_t f = 0; f < cfg.n_fields; ++f) {
        GffSample field = fact->sample(Rng::mix(cfg.seed, 0xF1E1D0000ULL + f));
        if (cfg.field_shift != 0.0) field = shifted_field(field, cfg.field_shift);
        if (vsolver) {
            // zero-boundary part of the field on V: subtract the discrete
            // harmonic extension of the surrounding values
            const std::size_t fn = fact->n();
            std::vector<double> rhs(fn * fn, 0.0);
            for (std::size_t v = 0; v < fn * fn; ++v) {
                if (!eff[v]) continue;
                for (const std::size_t nb : {v - 1, v + 1, v - fn, v + fn})
                    if (!eff[nb]) rhs[v] += field.values[nb];
            }
            const std::vector<double> ext = vsolver->solve(rhs);
            for (std::size_t v = 0; v < fn * fn; ++v)
                field.values[v] = eff[v] ? field.values[v] - ext[v] : 0.0;
        }
        const LoopLengths lengths =
            loop_quantum_lengths(field, norm, cle.loops, gamma, ce);
        for (std::size_t li = 0; li < cle.loops.size(); ++li) {
            if (lengths.boundary_adjacent[li] || lengths.lengths[li] < cfg.eps) continue;
            if (restriction) {
                // keep only loops lying in V (majority vote tolerates the
                // one-cell raster band around the removed loops)
                std::size_t in = 0, total = 0;
                for (const Complex& z : cle.loops[li]) {
                    ++total;
                    if (restriction->cell_mask.contains(z.real(), z.imag()) &&
                        restriction->cell_mask.at(restriction->cell_mask.ix_of(z.real()),
                                                  restriction->cell_mask.iy_of(z.imag())))
                        ++in;
                }
                if (2 * in < total) continue;
            }
            const auto seg =
                quantum_curve_length(field, norm, cle.loops[li], gamma, ce).segment_masses;
            Rng rng = Rng::child(cfg.seed, 0xD4A700000ULL + f * 1000003ULL + li);
            const Complex z = point_by_mass(cle.loops[li], seg, rng.uniform());
            if (!out.mass.contains(z.real(), z.imag())) continue;
            out.mass.at(out.mass.ix_of(z.real()), out.mass.iy_of(z.imag())) += deposit;
            out.raw_total += deposit;
        }
    }

    const double scale = 1.0 / (static_cast<double>(cfg.n_fields) * out.mass.cell_area());
    for (std::size_t iy = 0; iy < cfg.grid_n; ++iy) {
        for (std::size_t ix = 0; ix < cfg.grid_n; ++ix) {
            double v = out.mass.at(ix, iy) * scale;
            const Complex z = out.mass.center(ix, iy);
            double r = 1.0 - std::norm(z);
            if (restriction) {
                r = restriction->r_v.at(ix, iy);
                if (r <= 0.0) {
                    // deposit in the raster band next to V: use the largest
                    // neighbouring radius rather than dropping the mass
                    for (int dj = -1; dj <= 1; ++dj) {
                        for (int di = -1; di <= 1; ++di) {
                            const std::size_t ii = ix + di, jj = iy + dj;
                            if (ii < cfg.grid_n && jj < cfg.grid_n)
                                r = std::max(r, restriction->r_v.at(ii, jj));
                        }
                    }
                }
            }
            const bool ring = ix == 0 || iy == 0 || ix + 1 == cfg.grid_n || iy + 1 == cfg.grid_n;
            if (r <= 0.0 || ring)
                v = 0.0;
            else if (cfg.apply_f && v != 0.0)
                v *= std::pow(r, -params.f_exponent);
            out.mass.at(ix, iy) = v;
        }
    }
    return out;
}

XiEnsemble xi_ensemble(std::size_t n_replicas, const SleParams& params,
                       const SoupConfig& soup_cfg, const XiConfig& xi_cfg,
                       std::shared_ptr<const GffFactorization> fact, std::uint64_t seed) {
    if (n_replicas == 0) throw std::invalid_argument("xi_ensemble: n_replicas must be positive");
    if (!params.soup_intensity)
        throw std::domain_error("xi_ensemble: kappa has no loop-soup intensity");
    XiEnsemble ens;
    ens.kappa = params.kappa;
    ens.n_replicas = n_replicas;
    ens.mean = MassGrid::unit_disk_box(xi_cfg.grid_n);
    ens.stderr_grid = ens.mean;
    MassGrid m2 = ens.mean;

    for (std::size_t rep = 0; rep < n_replicas; ++rep) {
        const std::uint64_t s = Rng::mix(seed, rep);
        const LoopSoup soup = sample_loop_soup(*params.soup_intensity, soup_cfg.t_min,
                                               soup_cfg.t_cap, soup_cfg.bridge_steps, s);
        const auto clusters = cluster_loops(soup, soup_cfg.cluster_bucket_n);
        const CleSample cle = carpet_from_clusters(soup, clusters, soup_cfg.carpet_n);
        XiConfig cfg = xi_cfg;
        cfg.seed = Rng::mix(seed, 0xBEEF0000ULL + rep);
        const CarpetMeasure xi = estimate_xi(cle, params, fact, cfg);
        ens.totals.push_back(xi.total());
        if (xi_cfg.keep_replicas) ens.replica_mass.push_back(xi.mass);
        for (std::size_t k = 0; k < ens.mean.data().size(); ++k) {
            ens.mean.data()[k] += xi.mass.data()[k];
            m2.data()[k] += xi.mass.data()[k] * xi.mass.data()[k];
        }
    }
    const double n = static_cast<double>(n_replicas);
    for (std::size_t k = 0; k < ens.mean.data().size(); ++k) {
        const double mean = ens.mean.data()[k] / n;
        ens.mean.data()[k] = mean;
        ens.stderr_grid.data()[k] =
            n > 1.0 ? std::sqrt(std::max(0.0, (m2.data()[k] / n - mean * mean) / (n - 1.0)))
                    : 0.0;
    }
    return ens;
}

double mobius_derivative_abs(Complex w, Complex z0) {
    return (1.0 - std::norm(z0)) / std::norm(1.0 - std::conj(z0) * w);
}

CarpetMeasure pushforward_covariant(const CarpetMeasure& measure, Complex z0, double rotation,
                                    double d) {
    CarpetMeasure out;
    out.mass = MassGrid(measure.mass.nx(), measure.mass.ny(), measure.mass.x0(),
                        measure.mass.y0(), measure.mass.width(), measure.mass.height());
    out.kappa = measure.kappa;
    out.eps = measure.eps;
    out.n_fields = measure.n_fields;
    out.seed = measure.seed;
    out.raw_total = measure.raw_total;
    const Complex rot = std::polar(1.0, rotation);
    for (std::size_t iy = 0; iy < measure.mass.ny(); ++iy) {
        for (std::size_t ix = 0; ix < measure.mass.nx(); ++ix) {
            const double v = measure.mass.at(ix, iy);
            if (v == 0.0) continue;
            const Complex w = measure.mass.center(ix, iy);
            const Complex target = rot * (w - z0) / (1.0 - std::conj(z0) * w);
            if (!out.mass.contains(target.real(), target.imag())) continue;
            const double jac = std::pow(mobius_derivative_abs(w, z0), d);
            out.mass.at(out.mass.ix_of(target.real()), out.mass.iy_of(target.imag())) +=
                v * jac;
        }
    }
    return out;
}

double disk_intensity_reference(Complex z, double d, double C) {
    const double r = 1.0 - std::norm(z);
    if (r <= 0.0) throw std::domain_error("disk_intensity_reference: point outside the disk");
    return C * std::pow(r, d - 2.0);
}

std::vector<double> masked_green(std::size_t n, const std::vector<unsigned char>& mask,
                                 std::size_t pole_i, std::size_t pole_j) {
    if (mask.size() != n * n) throw std::invalid_argument("masked_green: mask size mismatch");
    if (!mask[pole_j * n + pole_i])
        throw std::invalid_argument("masked_green: pole outside the mask");
    LatticeDirichlet solver(n, mask);
    std::vector<double> rhs(n * n, 0.0);
    rhs[pole_j * n + pole_i] = 2.0 * M_PI;
    return solver.solve(rhs);
}

namespace {

// Cells of the unit-disk grid covered by the closure (boundary + interior)
// of a closed polyline, OR-ed into `removed`.
void remove_loop_closure(const std::vector<Complex>& loop, BoolGrid& removed) {
    const std::size_t n = removed.nx();
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    int x0 = static_cast<int>(n), y0 = x0, x1 = -1, y1 = -1;
    std::vector<std::pair<std::size_t, std::size_t>> contour;
    for (std::size_t j = 0; j + 1 < loop.size(); ++j) {
        rasterize_segment(removed, loop[j], loop[j + 1], cells);
        for (auto [ix, iy] : cells) {
            contour.emplace_back(ix, iy);
            x0 = std::min(x0, static_cast<int>(ix));
            x1 = std::max(x1, static_cast<int>(ix));
            y0 = std::min(y0, static_cast<int>(iy));
            y1 = std::max(y1, static_cast<int>(iy));
        }
    }
    if (x1 < 0) return;
    x0 = std::max(0, x0 - 1);
    y0 = std::max(0, y0 - 1);
    x1 = std::min(static_cast<int>(n) - 1, x1 + 1);
    y1 = std::min(static_cast<int>(n) - 1, y1 + 1);
    const int W = x1 - x0 + 1, H = y1 - y0 + 1;
    std::vector<unsigned char> local(static_cast<std::size_t>(W) * H, 0);
    for (auto [ix, iy] : contour)
        local[static_cast<std::size_t>(iy - y0) * W + (ix - x0)] = 1;
    std::vector<std::pair<int, int>> stack;
    auto push = [&](int x, int y) {
        if (x < 0 || y < 0 || x >= W || y >= H) return;
        auto& v = local[static_cast<std::size_t>(y) * W + x];
        if (v == 0) {
            v = 2;
            stack.emplace_back(x, y);
        }
    };
    for (int x = 0; x < W; ++x) {
        push(x, 0);
        push(x, H - 1);
    }
    for (int y = 0; y < H; ++y) {
        push(0, y);
        push(W - 1, y);
    }
    while (!stack.empty()) {
        auto [x, y] = stack.back();
        stack.pop_back();
        push(x + 1, y);
        push(x - 1, y);
        push(x, y + 1);
        push(x, y - 1);
    }
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            if (local[static_cast<std::size_t>(y) * W + x] != 2)
                removed.at(static_cast<std::size_t>(x0 + x), static_cast<std::size_t>(y0 + y)) =
                    1;
}

// Connected components (4-adjacency) of nonzero mask cells; returns labels
// (0 = background) and the component sizes indexed by label - 1.
std::vector<std::size_t> label_components(const std::vector<unsigned char>& mask,
                                          std::size_t n, std::vector<std::size_t>& sizes) {
    std::vector<std::size_t> label(n * n, 0);
    sizes.clear();
    std::vector<std::pair<std::size_t, std::size_t>> stack;
    for (std::size_t j0 = 0; j0 < n; ++j0) {
        for (std::size_t i0 = 0; i0 < n; ++i0) {
            if (!mask[j0 * n + i0] || label[j0 * n + i0]) continue;
            const std::size_t id = sizes.size() + 1;
            sizes.push_back(0);
            stack.emplace_back(i0, j0);
            label[j0 * n + i0] = id;
            while (!stack.empty()) {
                auto [i, j] = stack.back();
                stack.pop_back();
                ++sizes[id - 1];
                auto visit = [&](std::size_t ni, std::size_t nj) {
                    if (ni >= n || nj >= n) return;
                    if (!mask[nj * n + ni] || label[nj * n + ni]) return;
                    label[nj * n + ni] = id;
                    stack.emplace_back(ni, nj);
                };
                if (i + 1 < n) visit(i + 1, j);
                if (i > 0) visit(i - 1, j);
                if (j + 1 < n) visit(i, j + 1);
                if (j > 0) visit(i, j - 1);
            }
        }
    }
    return label;
}

} // namespace

MarkovTestReport markov_restriction_test(const SleParams& params, const MarkovTestConfig& cfg) {
    if (!params.soup_intensity)
        throw std::domain_error("markov_restriction_test: kappa has no loop-soup intensity");
    MarkovTestReport rep;
    const std::size_t gn = cfg.xi.grid_n;
    auto fact = make_gff_factorization(cfg.gff_n, GffDomain::Disk);
    const double d = params.d_carpet;
    std::vector<double> comp1, comp2;

    for (std::size_t r = 0; r < cfg.n_replicas; ++r) {
        // fresh-disk branch
        {
            const std::uint64_t s = Rng::mix(cfg.seed, 2 * r + 1);
            const LoopSoup soup = sample_loop_soup(*params.soup_intensity, cfg.soup.t_min,
                                                   cfg.soup.t_cap, cfg.soup.bridge_steps, s);
            const auto clusters = cluster_loops(soup, cfg.soup.cluster_bucket_n);
            const CleSample cle = carpet_from_clusters(soup, clusters, cfg.soup.carpet_n);
            XiConfig xcfg = cfg.xi;
            xcfg.seed = Rng::mix(cfg.seed, 0xFEED0000ULL + r);
            rep.fresh_totals.push_back(estimate_xi(cle, params, fact, xcfg).total());
        }

        // restricted branch
        const std::uint64_t s = Rng::mix(cfg.seed, 2 * r);
        const LoopSoup soup = sample_loop_soup(*params.soup_intensity, cfg.soup.t_min,
                                               cfg.soup.t_cap, cfg.soup.bridge_steps, s);
        const auto clusters = cluster_loops(soup, cfg.soup.cluster_bucket_n);
        const CleSample cle = carpet_from_clusters(soup, clusters, cfg.soup.carpet_n);

        // U* = upper half-disk minus closures of loops crossing its boundary
        BoolGrid removed = BoolGrid::unit_disk_box(gn);
        for (const auto& loop : cle.loops) {
            double lo = std::numeric_limits<double>::max(), hi = -lo;
            bool in_disk = true;
            for (const Complex& z : loop) {
                lo = std::min(lo, z.imag());
                hi = std::max(hi, z.imag());
                if (std::abs(z) >= 1.0) in_disk = false;
            }
            if (in_disk && lo < 0.0 && hi > 0.0) remove_loop_closure(loop, removed);
        }
        std::vector<unsigned char> ustar(gn * gn, 0);
        for (std::size_t iy = 0; iy < gn; ++iy) {
            for (std::size_t ix = 0; ix < gn; ++ix) {
                const Complex z = removed.center(ix, iy);
                ustar[iy * gn + ix] =
                    (z.imag() > 0.0 && std::abs(z) < 1.0 && !removed.at(ix, iy)) ? 1 : 0;
            }
        }
        std::vector<std::size_t> sizes;
        const auto label = label_components(ustar, gn, sizes);
        const std::size_t pi = removed.ix_of(cfg.probe.real());
        const std::size_t pj = removed.iy_of(cfg.probe.imag());
        const std::size_t probe_label = label[pj * gn + pi];
        if (probe_label == 0) {
            ++rep.n_skipped;
            continue;
        }

        std::vector<unsigned char> vmask(gn * gn, 0);
        for (std::size_t k = 0; k < label.size(); ++k) vmask[k] = label[k] == probe_label;
        const auto green = masked_green(gn, vmask, pi, pj);
        const double spacing = removed.dx();
        auto gval = [&](std::size_t i, std::size_t j) {
            return i < gn && j < gn && vmask[j * gn + i] ? green[j * gn + i] : 0.0;
        };

        // intrinsic estimate on V: zero-boundary field part, loops in V,
        // conformal radius r_V(z) = (1 - |phi|^2)/|phi'| from the Green data
        XiRestriction restriction;
        restriction.cell_mask = BoolGrid(gn, gn, removed.x0(), removed.y0(), removed.width(),
                                         removed.height());
        restriction.r_v = MassGrid(gn, gn, removed.x0(), removed.y0(), removed.width(),
                                   removed.height());
        BoolGrid outside(gn, gn, removed.x0(), removed.y0(), removed.width(), removed.height());
        for (std::size_t j = 0; j < gn; ++j)
            for (std::size_t i = 0; i < gn; ++i)
                if (!vmask[j * gn + i]) outside.at(i, j) = 1;
        const std::vector<double> vdist = distance_transform(outside);
        for (std::size_t j = 0; j < gn; ++j) {
            for (std::size_t i = 0; i < gn; ++i) {
                if (!vmask[j * gn + i]) continue;
                restriction.cell_mask.at(i, j) = 1;
                const double g = green[j * gn + i];
                const double gx = (gval(i + 1, j) - gval(i - 1, j)) / (2.0 * spacing);
                const double gy = (gval(i, j + 1) - gval(i, j - 1)) / (2.0 * spacing);
                const double dphi = std::exp(-g) * std::hypot(gx, gy);
                const Complex z = removed.center(i, j);
                double rv = dphi > 0.0 ? (1.0 - std::exp(-2.0 * g)) / dphi : 0.0;
                // Koebe quarter theorem: dist <= r_V <= 4 dist; clamping kills
                // lattice noise in the Green gradient near the pole and the
                // jagged component boundary
                const double dist = vdist[j * gn + i];
                rv = std::clamp(rv, dist, 4.0 * dist);
                restriction.r_v.at(i, j) = std::min(rv, 1.0 - std::norm(z));
            }
        }
        const std::size_t fn = fact->n();
        restriction.vertex_mask.assign(fn * fn, 0);
        const double fsp = fact->spacing();
        for (std::size_t vj = 0; vj < fn; ++vj) {
            for (std::size_t vi = 0; vi < fn; ++vi) {
                const Complex z(-1.0 + fsp * static_cast<double>(vi),
                                -1.0 + fsp * static_cast<double>(vj));
                if (restriction.cell_mask.contains(z.real(), z.imag()) &&
                    restriction.cell_mask.at(restriction.cell_mask.ix_of(z.real()),
                                             restriction.cell_mask.iy_of(z.imag())))
                    restriction.vertex_mask[vj * fn + vi] = 1;
            }
        }
        XiConfig xcfg = cfg.xi;
        xcfg.seed = Rng::mix(cfg.seed, 0xFACE0000ULL + r);
        const CarpetMeasure xi =
            estimate_xi(cle, params, fact, xcfg, cfg.intrinsic ? &restriction : nullptr);

        double pushed = 0.0;
        for (std::size_t j = 0; j < gn; ++j) {
            for (std::size_t i = 0; i < gn; ++i) {
                if (!vmask[j * gn + i]) continue;
                const double m = xi.mass.at(i, j) * xi.mass.cell_area();
                if (m == 0.0) continue;
                const double g = green[j * gn + i];
                const double gx = (gval(i + 1, j) - gval(i - 1, j)) / (2.0 * spacing);
                const double gy = (gval(i, j + 1) - gval(i, j - 1)) / (2.0 * spacing);
                const double dphi = std::exp(-g) * std::hypot(gx, gy);
                pushed += m * std::pow(dphi, d);
            }
        }
        // Deposits on the rasterized band of a removed loop sit in cells
        // flagged outside V even when the depositing loop lies in V; credit
        // them using the conformal derivative of the nearest V cell.
        for (std::size_t j = 0; j < gn; ++j) {
            for (std::size_t i = 0; i < gn; ++i) {
                if (vmask[j * gn + i]) continue;
                const Complex z = removed.center(i, j);
                if (!(z.imag() > 0.0 && std::abs(z) < 1.0)) continue;
                const double m = xi.mass.at(i, j) * xi.mass.cell_area();
                if (m == 0.0) continue;
                double best = 0.0;
                for (int dj = -1; dj <= 1; ++dj) {
                    for (int di = -1; di <= 1; ++di) {
                        const std::size_t ii = i + di, jj = j + dj;
                        if (ii >= gn || jj >= gn || !vmask[jj * gn + ii]) continue;
                        const double g = green[jj * gn + ii];
                        const double gx = (gval(ii + 1, jj) - gval(ii - 1, jj)) / (2.0 * spacing);
                        const double gy = (gval(ii, jj + 1) - gval(ii, jj - 1)) / (2.0 * spacing);
                        best = std::max(best, std::exp(-g) * std::hypot(gx, gy));
                    }
                }
                if (best > 0.0) pushed += m * std::pow(best, d);
            }
        }
        rep.pushed_totals.push_back(pushed);

        // independence of disjoint components: Xi totals of the two largest
        if (sizes.size() >= 2) {
            std::size_t a = 0, b = 1;
            if (sizes[b] > sizes[a]) std::swap(a, b);
            for (std::size_t k = 2; k < sizes.size(); ++k) {
                if (sizes[k] > sizes[a]) {
                    b = a;
                    a = k;
                } else if (sizes[k] > sizes[b]) {
                    b = k;
                }
            }
            double ta = 0.0, tb = 0.0;
            for (std::size_t k = 0; k < label.size(); ++k) {
                if (label[k] == a + 1) ta += xi.mass.data()[k];
                if (label[k] == b + 1) tb += xi.mass.data()[k];
            }
            comp1.push_back(ta * xi.mass.cell_area());
            comp2.push_back(tb * xi.mass.cell_area());
        }
    }

    rep.ks = ks_test_two_sample(rep.pushed_totals, rep.fresh_totals);
    rep.n_component_pairs = comp1.size();
    if (comp1.size() >= 8) {
        const double corr = pearson_correlation(comp1, comp2);
        rep.component_correlation = corr;
        rep.component_correlation_z =
            corr * std::sqrt(static_cast<double>(comp1.size() - 3)) /
            std::sqrt(std::max(1e-12, 1.0 - corr * corr));
    }
    return rep;
}

CouplingReport cle4_measure_via_coupling(const std::vector<double>& c_sequence,
                                         const SoupConfig& soup_cfg, const XiConfig& xi_cfg,
                                         std::shared_ptr<const GffFactorization> fact,
                                         std::uint64_t seed) {
    if (c_sequence.empty()) throw std::domain_error("cle4_measure_via_coupling: empty sequence");
    for (std::size_t k = 0; k < c_sequence.size(); ++k) {
        if (!(c_sequence[k] > 0.0 && c_sequence[k] <= 1.0))
            throw std::domain_error("cle4_measure_via_coupling: c outside (0, 1]");
        if (k > 0 && c_sequence[k] <= c_sequence[k - 1])
            throw std::domain_error("cle4_measure_via_coupling: sequence not increasing");
    }
    if (std::abs(c_sequence.back() - 1.0) > 1e-12)
        throw std::domain_error("cle4_measure_via_coupling: sequence must end at 1");

    CouplingReport rep;
    const LoopSoup full =
        sample_loop_soup(1.0, soup_cfg.t_min, soup_cfg.t_cap, soup_cfg.bridge_steps, seed);
    for (const double c : c_sequence) {
        const LoopSoup soup = thin_soup(full, c);
        const double kappa = kappa_from_intensity(c);
        const SleParams params = derive_params(kappa);
        const auto clusters = cluster_loops(soup, soup_cfg.cluster_bucket_n);
        const CleSample cle = carpet_from_clusters(soup, clusters, soup_cfg.carpet_n);
        const CarpetMeasure xi = estimate_xi(cle, params, fact, xi_cfg);

        CouplingLevel level;
        level.c = c;
        level.kappa = kappa;
        level.d_carpet = params.d_carpet;
        level.n_loops = soup.loops.size();
        level.xi_total = xi.total();
        level.carpet = cle.carpet;
        if (!rep.levels.empty()) {
            const BoolGrid& prev = rep.levels.back().carpet;
            for (std::size_t k = 0; k < prev.data().size(); ++k)
                if (level.carpet.data()[k] && !prev.data()[k]) rep.carpets_nested = false;
        }
        rep.levels.push_back(std::move(level));
        if (std::abs(c - 1.0) <= 1e-12) rep.last = xi;
    }
    return rep;
}

LoopMassReport loop_mass_vanishing_test(const SleParams& params, std::size_t n_replicas,
                                        const std::vector<double>& radii,
                                        const SoupConfig& soup_cfg, const XiConfig& xi_cfg,
                                        std::shared_ptr<const GffFactorization> fact,
                                        std::uint64_t seed) {
    if (!params.soup_intensity)
        throw std::domain_error("loop_mass_vanishing_test: kappa has no loop-soup intensity");
    for (std::size_t k = 1; k < radii.size(); ++k)
        if (radii[k] >= radii[k - 1])
            throw std::invalid_argument("loop_mass_vanishing_test: radii must decrease");

    LoopMassReport rep;
    rep.radii = radii;
    std::vector<std::vector<double>> per_replica(radii.size());
    std::vector<std::vector<double>> control(radii.size());

    for (std::size_t r = 0; r < n_replicas; ++r) {
        const std::uint64_t s = Rng::mix(seed, r);
        const LoopSoup soup = sample_loop_soup(*params.soup_intensity, soup_cfg.t_min,
                                               soup_cfg.t_cap, soup_cfg.bridge_steps, s);
        const auto clusters = cluster_loops(soup, soup_cfg.cluster_bucket_n);
        CleSample cle = carpet_from_clusters(soup, clusters, soup_cfg.carpet_n);
        if (cle.loops.empty()) continue;

        // reference loop: largest Euclidean perimeter
        std::size_t ref = 0;
        double best = -1.0;
        for (std::size_t li = 0; li < cle.loops.size(); ++li) {
            double per = 0.0;
            for (std::size_t j = 0; j + 1 < cle.loops[li].size(); ++j)
                per += std::abs(cle.loops[li][j + 1] - cle.loops[li][j]);
            if (per > best) {
                best = per;
                ref = li;
            }
        }
        const std::vector<Complex> ref_loop = cle.loops[ref];
        cle.loops.erase(cle.loops.begin() + static_cast<long>(ref));

        XiConfig xcfg = xi_cfg;
        xcfg.seed = Rng::mix(seed, 0xFACE0000ULL + r);
        const CarpetMeasure xi = estimate_xi(cle, params, fact, xcfg);

        BoolGrid loop_mask(xi.mass.nx(), xi.mass.ny(), -1.0, -1.0, 2.0, 2.0);
        std::vector<std::pair<std::size_t, std::size_t>> cells;
        double arc = 0.0;
        for (std::size_t j = 0; j + 1 < ref_loop.size(); ++j) {
            rasterize_segment(loop_mask, ref_loop[j], ref_loop[j + 1], cells);
            for (auto [ix, iy] : cells) loop_mask.at(ix, iy) = 1;
            arc += std::abs(ref_loop[j + 1] - ref_loop[j]);
        }
        const auto dist = distance_transform(loop_mask);
        for (std::size_t ri = 0; ri < radii.size(); ++ri) {
            double m = 0.0;
            for (std::size_t k = 0; k < dist.size(); ++k)
                if (dist[k] <= radii[ri]) m += xi.mass.data()[k];
            per_replica[ri].push_back(m * xi.mass.cell_area());
            control[ri].push_back(arc); // arc-length measure sits on the loop itself
        }
    }

    const std::size_t nrep = per_replica.empty() ? 0 : per_replica[0].size();
    if (nrep == 0) {
        rep.defined = false;
        return rep;
    }
    std::vector<double> logr, logm, logc;
    rep.mean_mass.resize(radii.size());
    for (std::size_t ri = 0; ri < radii.size(); ++ri) {
        rep.mean_mass[ri] = mean_var(per_replica[ri]).mean;
        if (rep.mean_mass[ri] <= 0.0) {
            rep.defined = false;
            return rep;
        }
        logr.push_back(std::log(radii[ri]));
        logm.push_back(std::log(rep.mean_mass[ri]));
        logc.push_back(std::log(mean_var(control[ri]).mean));
    }
    rep.slope = linear_fit(logr, logm).slope;
    rep.control_slope = linear_fit(logr, logc).slope;

    // jackknife over replicas
    std::vector<double> jack;
    for (std::size_t drop = 0; drop < nrep; ++drop) {
        std::vector<double> lm;
        bool ok = true;
        for (std::size_t ri = 0; ri < radii.size(); ++ri) {
            double s = 0.0;
            for (std::size_t q = 0; q < nrep; ++q)
                if (q != drop) s += per_replica[ri][q];
            s /= static_cast<double>(nrep - 1);
            if (s <= 0.0) ok = false;
            lm.push_back(std::log(std::max(s, 1e-300)));
        }
        if (ok) jack.push_back(linear_fit(logr, lm).slope);
    }
    if (jack.size() >= 2) {
        const MeanVar mv = mean_var(jack);
        const double var =
            mv.var * static_cast<double>(jack.size() - 1) * static_cast<double>(jack.size() - 1) /
            static_cast<double>(jack.size());
        rep.slope_ci_half_width = 1.96 * std::sqrt(var / static_cast<double>(jack.size() - 1));
    }
    return rep;
}

std::vector<double> uniqueness_normalization_check(const XiEnsemble& a, const XiEnsemble& b,
                                                   const std::vector<Box>& probes) {
    auto total = [](const XiEnsemble& e) {
        double t = 0.0;
        for (const double v : e.mean.data()) t += v;
        return t * e.mean.cell_area();
    };
    const double ta = total(a), tb = total(b);
    if (!(ta > 0.0) || !(tb > 0.0))
        throw std::domain_error("uniqueness_normalization_check: zero-total run");

    // Replica-resolved path: normalized box fractions per replica with a
    // Welch z. The per-cell standard-error grids do not see the strong
    // intra-box correlation of cluster-structured mass, so they are used
    // only when replica grids were not retained.
    if (!a.replica_mass.empty() && !b.replica_mass.empty()) {
        auto fractions = [](const XiEnsemble& e, const Box& box) {
            std::vector<double> fr;
            for (const MassGrid& g : e.replica_mass) {
                double tot = 0.0;
                for (const double v : g.data()) tot += v;
                if (tot > 0.0) fr.push_back(mass_in_box(g, box) / tot);
            }
            return fr;
        };
        std::vector<double> zr;
        for (const Box& box : probes) {
            const std::vector<double> fa = fractions(a, box);
            const std::vector<double> fb = fractions(b, box);
            if (fa.size() < 2 || fb.size() < 2)
                throw std::domain_error(
                    "uniqueness_normalization_check: too few usable replicas");
            const MeanVar ma = mean_var(fa), mb = mean_var(fb);
            const double se = std::sqrt(ma.var / static_cast<double>(fa.size()) +
                                        mb.var / static_cast<double>(fb.size()));
            zr.push_back(se > 0.0 ? (ma.mean - mb.mean) / se
                                  : (ma.mean == mb.mean ? 0.0 : 1e9));
        }
        return zr;
    }

    std::vector<double> zs;
    for (const Box& box : probes) {
        const double ma = mass_in_box(a.mean, box) * a.mean.cell_area() / ta;
        const double sa = stderr_in_box(a.stderr_grid, box) * a.mean.cell_area() / ta;
        const double mb = mass_in_box(b.mean, box) * b.mean.cell_area() / tb;
        const double sb = stderr_in_box(b.stderr_grid, box) * b.mean.cell_area() / tb;
        const double se = std::sqrt(sa * sa + sb * sb);
        zs.push_back(se > 0.0 ? (ma - mb) / se : (ma == mb ? 0.0 : 1e9));
    }
    return zs;
}

} // namespace clelab
