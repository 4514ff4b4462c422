#include "clelab/grid.hpp"

#include <algorithm>

namespace clelab {

void rasterize_segment(const BoolGrid& geom, Complex a, Complex b,
                       std::vector<std::pair<std::size_t, std::size_t>>& out) {
    out.clear();
    const double dx = geom.dx(), dy = geom.dy();
    const double len = std::abs(b - a);
    const auto steps = static_cast<std::size_t>(std::ceil(len / (0.5 * std::min(dx, dy)))) + 1;
    std::size_t last_ix = static_cast<std::size_t>(-1), last_iy = static_cast<std::size_t>(-1);
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(steps);
        const Complex z = a + t * (b - a);
        if (!geom.contains(z.real(), z.imag())) continue;
        const std::size_t ix = geom.ix_of(z.real());
        const std::size_t iy = geom.iy_of(z.imag());
        if (ix != last_ix || iy != last_iy) {
            out.emplace_back(ix, iy);
            last_ix = ix;
            last_iy = iy;
        }
    }
}

namespace {
int orient(Complex a, Complex b, Complex c) {
    const double v = (b.real() - a.real()) * (c.imag() - a.imag()) -
                     (b.imag() - a.imag()) * (c.real() - a.real());
    if (v > 0) return 1;
    if (v < 0) return -1;
    return 0;
}
bool on_segment(Complex a, Complex b, Complex p) {
    return std::min(a.real(), b.real()) <= p.real() && p.real() <= std::max(a.real(), b.real()) &&
           std::min(a.imag(), b.imag()) <= p.imag() && p.imag() <= std::max(a.imag(), b.imag());
}
} // namespace

bool segments_intersect(Complex p1, Complex p2, Complex q1, Complex q2) {
    const int o1 = orient(p1, p2, q1);
    const int o2 = orient(p1, p2, q2);
    const int o3 = orient(q1, q2, p1);
    const int o4 = orient(q1, q2, p2);
    if (o1 != o2 && o3 != o4) return true;
    // collinear / touching cases count as intersecting
    if (o1 == 0 && on_segment(p1, p2, q1)) return true;
    if (o2 == 0 && on_segment(p1, p2, q2)) return true;
    if (o3 == 0 && on_segment(q1, q2, p1)) return true;
    if (o4 == 0 && on_segment(q1, q2, p2)) return true;
    return false;
}

bool point_in_polygon(const std::vector<Complex>& poly, Complex z) {
    bool inside = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const double yi = poly[i].imag(), yj = poly[j].imag();
        if ((yi > z.imag()) != (yj > z.imag())) {
            const double xcross = poly[j].real() +
                (z.imag() - yj) / (yi - yj) * (poly[i].real() - poly[j].real());
            if (z.real() < xcross) inside = !inside;
        }
    }
    return inside;
}

std::vector<std::pair<int, int>> moore_boundary(const std::vector<unsigned char>& mask, int W,
                                                int H) {
    auto filled = [&](int x, int y) {
        return x >= 0 && y >= 0 && x < W && y < H &&
               mask[static_cast<std::size_t>(y) * W + x] != 0;
    };
    int sx = -1, sy = -1;
    for (int y = 0; y < H && sx < 0; ++y)
        for (int x = 0; x < W; ++x)
            if (mask[static_cast<std::size_t>(y) * W + x]) {
                sx = x;
                sy = y;
                break;
            }
    if (sx < 0) return {};
    static const int dx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
    static const int dy[8] = {0, 1, 1, 1, 0, -1, -1, -1};
    auto dir_index = [&](int ddx, int ddy) {
        for (int d = 0; d < 8; ++d)
            if (dx[d] == ddx && dy[d] == ddy) return d;
        return 0;
    };

    std::vector<std::pair<int, int>> out;
    out.emplace_back(sx, sy);
    int cx = sx, cy = sy;
    int bx = sx - 1, by = sy; // empty by the start-cell scan order
    const int bx0 = bx, by0 = by;
    long filled_count = 0;
    for (const unsigned char v : mask) filled_count += v ? 1 : 0;
    const long cap = 4 * filled_count + 32;
    for (long step = 0; step < cap; ++step) {
        const int b = dir_index(bx - cx, by - cy);
        int found = -1;
        for (int k = 1; k <= 8; ++k) {
            const int d = (b + k) % 8;
            if (filled(cx + dx[d], cy + dy[d])) {
                found = d;
                bx = cx + dx[(b + k - 1) % 8];
                by = cy + dy[(b + k - 1) % 8];
                break;
            }
        }
        if (found < 0) break; // isolated cell
        cx += dx[found];
        cy += dy[found];
        if (cx == sx && cy == sy && bx == bx0 && by == by0) break;
        out.emplace_back(cx, cy);
    }
    return out;
}

} // namespace clelab
