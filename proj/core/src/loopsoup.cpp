#include "clelab/loopsoup.hpp"

#include "clelab/rng.hpp"
#include "clelab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>

namespace clelab {

double expected_root_count(double intensity, double area, double t_min, double t_cap) {
    return intensity * area * (1.0 / t_min - 1.0 / t_cap) / (2.0 * M_PI);
}

LoopSoup sample_loop_soup(double intensity, double t_min, double t_cap,
                          std::size_t bridge_steps, std::uint64_t seed) {
    if (!(intensity > 0.0)) throw std::domain_error("sample_loop_soup: intensity must be > 0");
    if (!(t_min > 0.0 && t_min < t_cap))
        throw std::domain_error("sample_loop_soup: need 0 < t_min < t_cap");
    if (bridge_steps < 8) throw std::domain_error("sample_loop_soup: bridge_steps < 8");
    LoopSoup soup;
    soup.intensity = intensity;
    soup.t_min = t_min;
    soup.t_cap = t_cap;
    soup.seed = seed;

    const double mean = expected_root_count(intensity, M_PI, t_min, t_cap);
    Rng master(seed);
    const long count = master.poisson(mean);
    soup.loops.reserve(static_cast<std::size_t>(count) / 2);
    std::vector<double> bx, by;
    for (long k = 0; k < count; ++k) {
        Rng rng = Rng::child(seed, static_cast<std::uint64_t>(k));
        const double r = std::sqrt(rng.uniform());
        const double phi = 2.0 * M_PI * rng.uniform();
        const Complex root(r * std::cos(phi), r * std::sin(phi));
        // lifetime density ~ t^{-2} on [t_min, t_cap]
        const double t =
            1.0 / (1.0 / t_min - rng.uniform() * (1.0 / t_min - 1.0 / t_cap));
        const double mark = rng.uniform();

        // short loops need fewer bridge points for cell-level accuracy
        const auto m = std::clamp<std::size_t>(
            static_cast<std::size_t>(std::ceil(
                static_cast<double>(bridge_steps) * std::sqrt(t / t_cap))),
            8, bridge_steps);
        bx.assign(m + 1, 0.0);
        by.assign(m + 1, 0.0);
        const double sd = std::sqrt(t / static_cast<double>(m));
        for (std::size_t j = 1; j <= m; ++j) {
            bx[j] = bx[j - 1] + sd * rng.gaussian();
            by[j] = by[j - 1] + sd * rng.gaussian();
        }
        BrownianLoop loop;
        loop.root = root;
        loop.duration = t;
        loop.mark = mark;
        loop.points.resize(m + 1);
        bool inside = true;
        for (std::size_t j = 0; j <= m; ++j) {
            const double f = static_cast<double>(j) / static_cast<double>(m);
            const Complex z = root + Complex(bx[j] - f * bx[m], by[j] - f * by[m]);
            loop.points[j] = z;
            if (std::abs(z) >= 1.0) {
                inside = false;
                break;
            }
        }
        loop.points.back() = loop.points.front();
        if (inside) soup.loops.push_back(std::move(loop));
    }
    return soup;
}

LoopSoup thin_soup(const LoopSoup& soup, double intensity) {
    if (!(intensity > 0.0 && intensity <= soup.intensity))
        throw std::domain_error("thin_soup: target intensity outside (0, sampled intensity]");
    LoopSoup out;
    out.intensity = intensity;
    out.t_min = soup.t_min;
    out.t_cap = soup.t_cap;
    out.seed = soup.seed;
    const double keep = intensity / soup.intensity;
    for (const BrownianLoop& l : soup.loops)
        if (l.mark <= keep) out.loops.push_back(l);
    return out;
}

std::vector<std::size_t> cluster_loops(const LoopSoup& soup, std::size_t bucket_n) {
    struct Seg {
        Complex a, b;
        std::uint32_t loop;
    };
    std::vector<Seg> segs;
    for (std::size_t li = 0; li < soup.loops.size(); ++li) {
        const auto& pts = soup.loops[li].points;
        for (std::size_t j = 0; j + 1 < pts.size(); ++j)
            segs.push_back({pts[j], pts[j + 1], static_cast<std::uint32_t>(li)});
    }

    const BoolGrid geom = BoolGrid::unit_disk_box(bucket_n);
    std::vector<std::vector<std::uint32_t>> buckets(bucket_n * bucket_n);
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (std::size_t si = 0; si < segs.size(); ++si) {
        rasterize_segment(geom, segs[si].a, segs[si].b, cells);
        for (auto [ix, iy] : cells)
            buckets[iy * bucket_n + ix].push_back(static_cast<std::uint32_t>(si));
    }

    UnionFind uf(soup.loops.size());
    for (const auto& bucket : buckets) {
        for (std::size_t i = 0; i < bucket.size(); ++i) {
            const Seg& s = segs[bucket[i]];
            for (std::size_t j = i + 1; j < bucket.size(); ++j) {
                const Seg& t = segs[bucket[j]];
                if (s.loop == t.loop || uf.find(s.loop) == uf.find(t.loop)) continue;
                if (segments_intersect(s.a, s.b, t.a, t.b)) uf.unite(s.loop, t.loop);
            }
        }
    }

    std::vector<std::size_t> out(soup.loops.size());
    for (std::size_t li = 0; li < soup.loops.size(); ++li) out[li] = uf.find(li);
    return out;
}

CleSample carpet_from_clusters(const LoopSoup& soup,
                               const std::vector<std::size_t>& cluster_of,
                               std::size_t grid_n) {
    if (cluster_of.size() != soup.loops.size())
        throw std::invalid_argument("carpet_from_clusters: cluster map size mismatch");
    CleSample out;
    out.carpet = BoolGrid::unit_disk_box(grid_n);
    for (std::size_t iy = 0; iy < grid_n; ++iy)
        for (std::size_t ix = 0; ix < grid_n; ++ix)
            out.carpet.at(ix, iy) = std::abs(out.carpet.center(ix, iy)) < 1.0 ? 1 : 0;

    // group loops by cluster representative
    std::vector<std::size_t> order(soup.loops.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return cluster_of[a] < cluster_of[b];
    });

    std::vector<std::pair<std::size_t, std::size_t>> cells;
    const int n = static_cast<int>(grid_n);
    std::size_t pos = 0;
    while (pos < order.size()) {
        std::size_t end = pos;
        while (end < order.size() && cluster_of[order[end]] == cluster_of[order[pos]]) ++end;

        // contour cells of every loop in the cluster, with bounding box
        std::vector<std::pair<std::size_t, std::size_t>> contour;
        int x0 = n, y0 = n, x1 = -1, y1 = -1;
        for (std::size_t q = pos; q < end; ++q) {
            const auto& pts = soup.loops[order[q]].points;
            for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
                rasterize_segment(out.carpet, pts[j], pts[j + 1], cells);
                for (auto [ix, iy] : cells) {
                    contour.emplace_back(ix, iy);
                    x0 = std::min(x0, static_cast<int>(ix));
                    x1 = std::max(x1, static_cast<int>(ix));
                    y0 = std::min(y0, static_cast<int>(iy));
                    y1 = std::max(y1, static_cast<int>(iy));
                }
            }
        }
        if (x1 < 0) {
            pos = end;
            continue;
        }
        x0 = std::max(0, x0 - 1);
        y0 = std::max(0, y0 - 1);
        x1 = std::min(n - 1, x1 + 1);
        y1 = std::min(n - 1, y1 + 1);
        const int W = x1 - x0 + 1, H = y1 - y0 + 1;

        // 0 empty, 1 contour, 2 reachable from the bbox frame
        std::vector<unsigned char> local(static_cast<std::size_t>(W) * H, 0);
        for (auto [ix, iy] : contour)
            local[(iy - y0) * static_cast<std::size_t>(W) + (ix - x0)] = 1;
        std::vector<std::pair<int, int>> stack;
        auto push_empty = [&](int x, int y) {
            if (x < 0 || y < 0 || x >= W || y >= H) return;
            auto& v = local[static_cast<std::size_t>(y) * W + x];
            if (v == 0) {
                v = 2;
                stack.emplace_back(x, y);
            }
        };
        for (int x = 0; x < W; ++x) {
            push_empty(x, 0);
            push_empty(x, H - 1);
        }
        for (int y = 0; y < H; ++y) {
            push_empty(0, y);
            push_empty(W - 1, y);
        }
        while (!stack.empty()) {
            auto [x, y] = stack.back();
            stack.pop_back();
            push_empty(x + 1, y);
            push_empty(x - 1, y);
            push_empty(x, y + 1);
            push_empty(x, y - 1);
        }

        // Cells surrounded by the cluster leave the carpet.  The cluster's
        // outer-boundary cells (filled, touching the outside) stay carpet,
        // which keeps the measure deposits on carpet cells and makes the
        // carpets of thinned soups exactly nested: outsides only shrink as
        // loops are added, so outside-adjacency can only be lost.
        std::vector<unsigned char> fill(static_cast<std::size_t>(W) * H, 0);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                if (local[static_cast<std::size_t>(y) * W + x] != 2)
                    fill[static_cast<std::size_t>(y) * W + x] = 1;
        auto outside = [&](int x, int y) {
            if (x < 0 || y < 0 || x >= W || y >= H) return true;
            return local[static_cast<std::size_t>(y) * W + x] == 2;
        };
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                if (!fill[static_cast<std::size_t>(y) * W + x]) continue;
                bool touches = false;
                for (int ddy = -1; ddy <= 1 && !touches; ++ddy)
                    for (int ddx = -1; ddx <= 1 && !touches; ++ddx)
                        touches = outside(x + ddx, y + ddy);
                if (!touches)
                    out.carpet.at(static_cast<std::size_t>(x0 + x),
                                  static_cast<std::size_t>(y0 + y)) = 0;
            }
        }

        const auto path = moore_boundary(fill, W, H);
        if (!path.empty()) {
            std::vector<Complex> poly;
            poly.reserve(path.size() + 1);
            for (auto [x, y] : path)
                poly.push_back(out.carpet.center(static_cast<std::size_t>(x0 + x),
                                                 static_cast<std::size_t>(y0 + y)));
            poly.push_back(poly.front());
            out.loops.push_back(std::move(poly));
            out.cluster_sizes.push_back(end - pos);
        }
        pos = end;
    }
    return out;
}

} // namespace clelab
