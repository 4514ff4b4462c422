#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace clelab {

using Complex = std::complex<double>;

// Square raster over an axis-aligned box, cell centered.  Index (ix, iy)
// maps to the point (x0 + (ix+1/2) dx, y0 + (iy+1/2) dy).
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(std::size_t nx, std::size_t ny, double x0, double y0, double w, double h, T fill = T())
        : nx_(nx), ny_(ny), x0_(x0), y0_(y0), w_(w), h_(h), data_(nx * ny, fill) {
        if (nx == 0 || ny == 0) throw std::invalid_argument("Grid: zero size");
    }

    static Grid unit_disk_box(std::size_t n, T fill = T()) {
        return Grid(n, n, -1.0, -1.0, 2.0, 2.0, fill);
    }

    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }
    double x0() const { return x0_; }
    double y0() const { return y0_; }
    double width() const { return w_; }
    double height() const { return h_; }
    double dx() const { return w_ / static_cast<double>(nx_); }
    double dy() const { return h_ / static_cast<double>(ny_); }
    double cell_area() const { return dx() * dy(); }

    T& at(std::size_t ix, std::size_t iy) { return data_[iy * nx_ + ix]; }
    const T& at(std::size_t ix, std::size_t iy) const { return data_[iy * nx_ + ix]; }

    Complex center(std::size_t ix, std::size_t iy) const {
        return {x0_ + (static_cast<double>(ix) + 0.5) * dx(),
                y0_ + (static_cast<double>(iy) + 0.5) * dy()};
    }

    bool contains(double x, double y) const {
        return x >= x0_ && x < x0_ + w_ && y >= y0_ && y < y0_ + h_;
    }

    // Cell indices of a point; caller must check contains() first.
    std::size_t ix_of(double x) const {
        auto i = static_cast<long>(std::floor((x - x0_) / dx()));
        if (i < 0) i = 0;
        if (i >= static_cast<long>(nx_)) i = static_cast<long>(nx_) - 1;
        return static_cast<std::size_t>(i);
    }
    std::size_t iy_of(double y) const {
        auto i = static_cast<long>(std::floor((y - y0_) / dy()));
        if (i < 0) i = 0;
        if (i >= static_cast<long>(ny_)) i = static_cast<long>(ny_) - 1;
        return static_cast<std::size_t>(i);
    }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

private:
    std::size_t nx_ = 0, ny_ = 0;
    double x0_ = 0, y0_ = 0, w_ = 0, h_ = 0;
    std::vector<T> data_;
};

using BoolGrid = Grid<unsigned char>;
using MassGrid = Grid<double>;

// Axis-aligned probe box.
struct Box {
    double x0 = 0, y0 = 0, w = 0, h = 0;
    bool contains(Complex z) const {
        return z.real() >= x0 && z.real() < x0 + w && z.imag() >= y0 && z.imag() < y0 + h;
    }
};

// Sum of cell masses whose centers lie in the box.
inline double mass_in_box(const MassGrid& g, const Box& b) {
    double s = 0.0;
    for (std::size_t iy = 0; iy < g.ny(); ++iy)
        for (std::size_t ix = 0; ix < g.nx(); ++ix)
            if (b.contains(g.center(ix, iy))) s += g.at(ix, iy);
    return s;
}

// Root-sum-square of per-cell standard errors over the box (independent cells).
inline double stderr_in_box(const MassGrid& se, const Box& b) {
    double s = 0.0;
    for (std::size_t iy = 0; iy < se.ny(); ++iy)
        for (std::size_t ix = 0; ix < se.nx(); ++ix)
            if (b.contains(se.center(ix, iy))) s += se.at(ix, iy) * se.at(ix, iy);
    return std::sqrt(s);
}

// Number of side-s blocks (in cells) containing at least one set cell.
inline std::size_t box_count(const BoolGrid& mask, std::size_t s) {
    std::size_t count = 0;
    for (std::size_t by = 0; by < mask.ny(); by += s) {
        for (std::size_t bx = 0; bx < mask.nx(); bx += s) {
            bool hit = false;
            for (std::size_t iy = by; iy < std::min(by + s, mask.ny()) && !hit; ++iy)
                for (std::size_t ix = bx; ix < std::min(bx + s, mask.nx()) && !hit; ++ix)
                    hit = mask.at(ix, iy) != 0;
            if (hit) ++count;
        }
    }
    return count;
}

// Rasterize the segment [a,b] into cell indices (supercover walk); `out` is
// cleared first so it can be reused across calls.
void rasterize_segment(const BoolGrid& geom, Complex a, Complex b,
                       std::vector<std::pair<std::size_t, std::size_t>>& out);

// Proper or touching intersection of closed segments.
bool segments_intersect(Complex p1, Complex p2, Complex q1, Complex q2);

// Even-odd winding point-in-polygon on a closed polyline.
bool point_in_polygon(const std::vector<Complex>& poly, Complex z);

// Moore-neighbor trace of the outer boundary of a filled cell set (row-major
// W x H mask), as (x, y) cell indices in traversal order; empty mask → {}.
std::vector<std::pair<int, int>> moore_boundary(const std::vector<unsigned char>& mask, int W,
                                                int H);

} // namespace clelab
