#pragma once

#include "clelab/grid.hpp"

#include <string>
#include <vector>

namespace clelab::io {

// Write-to-temp-then-rename so readers never observe a partial file.
void write_text_atomic(const std::string& path, const std::string& content);

// CSV with an "x,y,value" header, one row per cell, centers in physical
// coordinates.
std::string csv_from_grid(const MassGrid& g);
std::string csv_from_points(const std::vector<Complex>& points);

// 8-bit binary PGM, values scaled to the grid maximum.
std::string pgm_from_grid(const MassGrid& g);

// Minimal standalone SVGs: a point scatter and a grayscale cell heatmap.
std::string svg_scatter(const std::vector<Complex>& points, double px = 640.0);
std::string svg_heatmap(const MassGrid& g, double px = 640.0);

// FNV-1a 64-bit hex digest of a byte string (artifact checksums).
std::string fnv1a_hex(const std::string& bytes);

} // namespace clelab::io
