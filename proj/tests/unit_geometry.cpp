#include "clelab/grid.hpp"
#include "clelab/loopsoup.hpp"
#include "clelab/natural_param.hpp"
#include "clelab/params.hpp"

#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

using namespace clelab;

namespace {

// level-`depth` middle-ninth carpet on a 3^depth x 3^depth grid
BoolGrid sierpinski_carpet(int depth) {
    std::size_t n = 1;
    for (int k = 0; k < depth; ++k) n *= 3;
    BoolGrid g(n, n, 0.0, 0.0, 1.0, 1.0, 1);
    for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t x = 0; x < n; ++x) {
            std::size_t a = x, b = y;
            for (int k = 0; k < depth; ++k) {
                if (a % 3 == 1 && b % 3 == 1) {
                    g.at(x, y) = 0;
                    break;
                }
                a /= 3;
                b /= 3;
            }
        }
    }
    return g;
}

std::vector<Complex> square_loop(double cx, double cy, double r, int per_side) {
    std::vector<Complex> pts;
    const double corners[5][2] = {{cx - r, cy - r}, {cx + r, cy - r}, {cx + r, cy + r},
                                  {cx - r, cy + r}, {cx - r, cy - r}};
    for (int s = 0; s < 4; ++s)
        for (int k = 0; k < per_side; ++k) {
            const double f = static_cast<double>(k) / per_side;
            pts.emplace_back(corners[s][0] + f * (corners[s + 1][0] - corners[s][0]),
                             corners[s][1] + f * (corners[s + 1][1] - corners[s][1]));
        }
    pts.push_back(pts.front());
    return pts;
}

} // namespace

TEST_SUITE("geometry") {

TEST_CASE("box dimension of a full square is 2") {
    BoolGrid g(256, 256, 0.0, 0.0, 1.0, 1.0, 1);
    const DimensionEstimate est = box_dimension(g, {1, 2, 4, 8, 16, 32});
    CHECK(est.dimension == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("box dimension of the middle-ninth carpet is log8/log3") {
    const BoolGrid g = sierpinski_carpet(6); // 729 x 729
    const DimensionEstimate est = box_dimension(g, {1, 3, 9, 27, 81});
    CHECK(std::abs(est.dimension - std::log(8.0) / std::log(3.0)) < 1e-9);
}

TEST_CASE("box dimension of a straight line is 1") {
    BoolGrid g(256, 256, 0.0, 0.0, 1.0, 1.0, 0);
    for (std::size_t x = 0; x < 256; ++x) g.at(x, 100) = 1;
    const DimensionEstimate est = box_dimension(g, {1, 2, 4, 8, 16, 32});
    CHECK(std::abs(est.dimension - 1.0) < 1e-9);
}

TEST_CASE("Minkowski content of a unit segment with d = 1 is 2") {
    BoolGrid g(512, 512, -1.0, -1.0, 2.0, 2.0, 0);
    for (std::size_t x = 0; x < 512; ++x) {
        const double px = g.center(x, 0).real();
        if (px >= -0.5 && px <= 0.5) g.at(x, 256) = 1;
    }
    const MinkowskiResult r = minkowski_content(g, 1.0, {0.04, 0.06, 0.09, 0.13});
    CHECK_FALSE(r.clipped);
    CHECK(std::abs(r.content - 2.0) < 0.1);
}

TEST_CASE("distance transform is Euclidean to a point") {
    BoolGrid g(64, 64, 0.0, 0.0, 1.0, 1.0, 0);
    g.at(32, 32) = 1;
    const std::vector<double> dist = distance_transform(g);
    const Complex p = g.center(32, 32);
    const double cell = g.dx();
    for (std::size_t iy = 0; iy < 64; iy += 7) {
        for (std::size_t ix = 0; ix < 64; ix += 7) {
            const double exact = std::abs(g.center(ix, iy) - p);
            CHECK(std::abs(dist[iy * 64 + ix] - exact) < 2.0 * cell);
        }
    }
}

TEST_CASE("supercover rasterization covers both endpoints and is cleared") {
    BoolGrid g(32, 32, 0.0, 0.0, 1.0, 1.0);
    std::vector<std::pair<std::size_t, std::size_t>> cells = {{99, 99}};
    rasterize_segment(g, Complex(0.1, 0.1), Complex(0.8, 0.65), cells);
    REQUIRE_FALSE(cells.empty());
    std::set<std::pair<std::size_t, std::size_t>> got(cells.begin(), cells.end());
    CHECK(got.count({g.ix_of(0.1), g.iy_of(0.1)}) == 1);
    CHECK(got.count({g.ix_of(0.8), g.iy_of(0.65)}) == 1);
    CHECK(got.count({99, 99}) == 0); // output vector was cleared first
    // connected chain: consecutive cells are at most one step apart per axis
    for (std::size_t k = 0; k + 1 < cells.size(); ++k) {
        const auto [x0, y0] = cells[k];
        const auto [x1, y1] = cells[k + 1];
        CHECK((x0 > x1 ? x0 - x1 : x1 - x0) <= 1);
        CHECK((y0 > y1 ? y0 - y1 : y1 - y0) <= 1);
    }
}

TEST_CASE("segment intersection predicate") {
    CHECK(segments_intersect({0, 0}, {1, 1}, {0, 1}, {1, 0}));
    CHECK(segments_intersect({0, 0}, {1, 0}, {1, 0}, {2, 1})); // touching
    CHECK_FALSE(segments_intersect({0, 0}, {1, 0}, {0, 1}, {1, 1}));
}

TEST_CASE("point in polygon on a square") {
    const auto sq = square_loop(0.0, 0.0, 0.5, 8);
    CHECK(point_in_polygon(sq, {0.0, 0.0}));
    CHECK(point_in_polygon(sq, {0.4, -0.4}));
    CHECK_FALSE(point_in_polygon(sq, {0.9, 0.0}));
    CHECK_FALSE(point_in_polygon(sq, {-2.0, 3.0}));
}

TEST_CASE("Moore boundary of a filled block") {
    const int W = 8, H = 8;
    std::vector<unsigned char> mask(W * H, 0);
    for (int y = 2; y <= 4; ++y)
        for (int x = 3; x <= 5; ++x) mask[y * W + x] = 1;
    const auto boundary = moore_boundary(mask, W, H);
    // a 3x3 block has 8 boundary cells, traced without repeats
    std::set<std::pair<int, int>> uniq(boundary.begin(), boundary.end());
    CHECK(uniq.size() == 8);
    CHECK(uniq.count({4, 3}) == 0); // the center is not on the boundary
}

TEST_CASE("Moore boundary of an empty mask is empty") {
    CHECK(moore_boundary(std::vector<unsigned char>(16, 0), 4, 4).empty());
}

TEST_CASE("thinning keeps exactly the loops below the mark ratio") {
    const LoopSoup soup = sample_loop_soup(1.0, 5e-3, 1.0, 64, 77);
    REQUIRE(soup.loops.size() > 10);
    const LoopSoup half = thin_soup(soup, 0.5);
    const LoopSoup quarter = thin_soup(soup, 0.25);
    CHECK(half.intensity == 0.5);
    for (const BrownianLoop& l : half.loops) CHECK(l.mark < 0.5);
    // monotone nesting: thinning further only removes loops
    std::set<double> half_marks, quarter_marks;
    for (const auto& l : half.loops) half_marks.insert(l.mark);
    for (const auto& l : quarter.loops) quarter_marks.insert(l.mark);
    for (const double m : quarter_marks) CHECK(half_marks.count(m) == 1);
    // thinning to the full intensity is the identity
    CHECK(thin_soup(soup, 1.0).loops.size() == soup.loops.size());
}

TEST_CASE("expected root count is additive over lifetime bands") {
    const double a = expected_root_count(1.0, M_PI, 1e-3, 1e-2);
    const double b = expected_root_count(1.0, M_PI, 1e-2, 1.0);
    const double ab = expected_root_count(1.0, M_PI, 1e-3, 1.0);
    CHECK(a + b == doctest::Approx(ab).epsilon(1e-12));
    CHECK(expected_root_count(2.0, M_PI, 1e-3, 1.0) == doctest::Approx(2.0 * ab));
}

TEST_CASE("loops are closed and stay in the disk") {
    const LoopSoup soup = sample_loop_soup(1.0, 1e-2, 1.0, 128, 5);
    for (const BrownianLoop& l : soup.loops) {
        REQUIRE(l.points.size() >= 3);
        CHECK(std::abs(l.points.front() - l.points.back()) < 1e-12);
        for (const Complex& z : l.points) CHECK(std::abs(z) < 1.0);
    }
}

TEST_CASE("clustering joins chains of intersecting loops") {
    LoopSoup soup;
    soup.intensity = 1.0;
    auto add = [&](double cx, double cy, double r) {
        BrownianLoop l;
        l.points = square_loop(cx, cy, r, 16);
        l.root = {cx, cy};
        l.duration = r * r;
        l.mark = 0.5;
        soup.loops.push_back(l);
    };
    add(0.0, 0.0, 0.2);
    add(0.25, 0.0, 0.2);  // overlaps the first
    add(0.5, 0.0, 0.2);   // overlaps the second, not the first
    add(-0.6, -0.6, 0.1); // isolated
    const auto cl = cluster_loops(soup, 32);
    REQUIRE(cl.size() == 4);
    CHECK(cl[0] == cl[1]);
    CHECK(cl[1] == cl[2]);
    CHECK(cl[3] != cl[0]);
}

TEST_CASE("carpet excludes enclosed cells but keeps cluster boundaries") {
    LoopSoup soup;
    soup.intensity = 1.0;
    BrownianLoop l;
    l.points = square_loop(0.0, 0.0, 0.4, 64);
    l.root = {0.0, 0.0};
    l.duration = 0.1;
    l.mark = 0.1;
    soup.loops.push_back(l);
    const CleSample cle = carpet_from_clusters(soup, {0}, 64);
    REQUIRE(cle.loops.size() == 1);
    const BoolGrid& c = cle.carpet;
    CHECK(c.at(c.ix_of(0.0), c.iy_of(0.0)) == 0);   // enclosed
    CHECK(c.at(c.ix_of(0.0), c.iy_of(0.75)) == 1);  // outside the cluster
    CHECK(c.at(c.ix_of(0.0), c.iy_of(0.4)) == 1);   // on the traced boundary
    // the traced outer boundary encloses the loop's interior
    CHECK(point_in_polygon(cle.loops[0], {0.0, 0.0}));
}

TEST_CASE("carpets are nested under thinning of one soup") {
    const LoopSoup soup = sample_loop_soup(1.0, 2e-3, 1.0, 128, 99);
    const LoopSoup thin = thin_soup(soup, 0.5);
    const CleSample big = carpet_from_clusters(soup, cluster_loops(soup, 64), 128);
    const CleSample small = carpet_from_clusters(thin, cluster_loops(thin, 64), 128);
    // higher intensity removes more: big.carpet <= small.carpet cellwise
    for (std::size_t k = 0; k < big.carpet.data().size(); ++k)
        CHECK(big.carpet.data()[k] <= small.carpet.data()[k]);
}

} // TEST_SUITE
