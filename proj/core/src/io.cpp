#include "clelab/io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace clelab::io {

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("write_text_atomic: cannot open " + tmp);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("write_text_atomic: write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("write_text_atomic: rename failed for " + path);
}

std::string csv_from_grid(const MassGrid& g) {
    std::ostringstream os;
    os.precision(12);
    os << "x,y,value\n";
    for (std::size_t iy = 0; iy < g.ny(); ++iy) {
        for (std::size_t ix = 0; ix < g.nx(); ++ix) {
            const Complex c = g.center(ix, iy);
            os << c.real() << ',' << c.imag() << ',' << g.at(ix, iy) << '\n';
        }
    }
    return os.str();
}

std::string csv_from_points(const std::vector<Complex>& points) {
    std::ostringstream os;
    os.precision(17);
    os << "x,y\n";
    for (const Complex& p : points) os << p.real() << ',' << p.imag() << '\n';
    return os.str();
}

std::string pgm_from_grid(const MassGrid& g) {
    double hi = 0.0;
    for (const double v : g.data()) hi = std::max(hi, v);
    std::ostringstream os;
    os << "P5\n" << g.nx() << ' ' << g.ny() << "\n255\n";
    for (std::size_t row = 0; row < g.ny(); ++row) {
        const std::size_t iy = g.ny() - 1 - row; // image rows top-down
        for (std::size_t ix = 0; ix < g.nx(); ++ix) {
            const double v = hi > 0.0 ? g.at(ix, iy) / hi : 0.0;
            os.put(static_cast<char>(static_cast<unsigned char>(
                std::clamp(v * 255.0, 0.0, 255.0))));
        }
    }
    return os.str();
}

namespace {

struct Frame {
    double x0, y0, w, h;
};

Frame bounds(const std::vector<Complex>& pts) {
    double x0 = std::numeric_limits<double>::max(), y0 = x0, x1 = -x0, y1 = -x0;
    for (const Complex& p : pts) {
        x0 = std::min(x0, p.real());
        x1 = std::max(x1, p.real());
        y0 = std::min(y0, p.imag());
        y1 = std::max(y1, p.imag());
    }
    if (pts.empty()) return {0, 0, 1, 1};
    const double pad = 0.05 * std::max({x1 - x0, y1 - y0, 1e-9});
    return {x0 - pad, y0 - pad, x1 - x0 + 2 * pad, y1 - y0 + 2 * pad};
}

} // namespace

std::string svg_scatter(const std::vector<Complex>& points, double px) {
    const Frame f = bounds(points);
    const double s = px / std::max(f.w, f.h);
    std::ostringstream os;
    os.precision(8);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.w * s << "\" height=\""
       << f.h * s << "\">\n";
    for (const Complex& p : points)
        os << "<circle cx=\"" << (p.real() - f.x0) * s << "\" cy=\""
           << (f.y0 + f.h - p.imag()) * s << "\" r=\"1\" fill=\"black\"/>\n";
    os << "</svg>\n";
    return os.str();
}

std::string svg_heatmap(const MassGrid& g, double px) {
    double hi = 0.0;
    for (const double v : g.data()) hi = std::max(hi, v);
    const double cw = px / static_cast<double>(g.nx());
    const double ch = px / static_cast<double>(g.ny());
    std::ostringstream os;
    os.precision(8);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px << "\" height=\"" << px
       << "\">\n";
    for (std::size_t iy = 0; iy < g.ny(); ++iy) {
        for (std::size_t ix = 0; ix < g.nx(); ++ix) {
            const double v = hi > 0.0 ? g.at(ix, iy) / hi : 0.0;
            if (v <= 0.0) continue;
            const int gray = static_cast<int>(std::clamp(255.0 * (1.0 - v), 0.0, 255.0));
            os << "<rect x=\"" << static_cast<double>(ix) * cw << "\" y=\""
               << static_cast<double>(g.ny() - 1 - iy) * ch << "\" width=\"" << cw
               << "\" height=\"" << ch << "\" fill=\"rgb(" << gray << ',' << gray << ','
               << gray << ")\"/>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace clelab::io
