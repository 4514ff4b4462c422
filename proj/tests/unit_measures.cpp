#include "clelab/cle_measure.hpp"
#include "clelab/io.hpp"
#include "clelab/natural_param.hpp"
#include "clelab/params.hpp"
#include "clelab/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

using namespace clelab;

namespace {

CleSample small_cle(std::uint64_t seed) {
    const LoopSoup soup = sample_loop_soup(1.0, 2e-3, 1.0, 128, seed);
    return carpet_from_clusters(soup, cluster_loops(soup, 64), 128);
}

} // namespace

TEST_SUITE("measures") {

TEST_CASE("Mobius derivative matches a finite difference") {
    const Complex z0(0.3, -0.2);
    auto phi = [&](Complex w) { return (w - z0) / (1.0 - std::conj(z0) * w); };
    for (const Complex w : {Complex(0.1, 0.4), Complex(-0.5, 0.1), Complex(0.0, 0.0)}) {
        const double h = 1e-6;
        const double fd = std::abs(phi(w + h) - phi(w)) / h;
        CHECK(mobius_derivative_abs(w, z0) == doctest::Approx(fd).epsilon(1e-4));
    }
}

TEST_CASE("rotation pushforward preserves total mass") {
    CarpetMeasure m;
    m.mass = MassGrid::unit_disk_box(64);
    Rng rng(3);
    for (int k = 0; k < 200; ++k) {
        const std::size_t ix = 8 + static_cast<std::size_t>(rng.uniform() * 48);
        const std::size_t iy = 8 + static_cast<std::size_t>(rng.uniform() * 48);
        if (std::abs(m.mass.center(ix, iy)) < 0.8) m.mass.at(ix, iy) += rng.uniform();
    }
    const CarpetMeasure rot = pushforward_covariant(m, Complex(0.0, 0.0), 0.7, 1.8);
    CHECK(rot.total() == doctest::Approx(m.total()).epsilon(1e-12));
}

TEST_CASE("masked Green function approximates -log|z| on the disk") {
    const std::size_t n = 129;
    std::vector<unsigned char> mask(n * n, 0);
    MassGrid geom = MassGrid::unit_disk_box(n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i)
            if (std::abs(geom.center(i, j)) < 1.0) mask[j * n + i] = 1;
    const std::vector<double> g = masked_green(n, mask, n / 2, n / 2);
    for (const double r : {0.3, 0.5, 0.7}) {
        const std::size_t i = geom.ix_of(r), j = geom.iy_of(0.0);
        CHECK(std::abs(g[j * n + i] - (-std::log(std::abs(geom.center(i, j))))) < 0.05);
    }
}

TEST_CASE("reference disk intensity rejects points outside") {
    CHECK_THROWS_AS(disk_intensity_reference(Complex(1.2, 0.0), 1.875, 1.0),
                    std::domain_error);
    const double v = disk_intensity_reference(Complex(0.5, 0.0), 1.875, 2.0);
    CHECK(v == doctest::Approx(2.0 * std::pow(0.75, -0.125)).epsilon(1e-12));
}

TEST_CASE("carpet-measure estimate is deterministic in the seed") {
    const SleParams p = derive_params(3.5);
    auto fact = make_gff_factorization(65, GffDomain::Disk);
    const CleSample cle = small_cle(8);
    XiConfig cfg;
    cfg.n_fields = 2;
    cfg.seed = 5;
    const CarpetMeasure a = estimate_xi(cle, p, fact, cfg);
    const CarpetMeasure b = estimate_xi(cle, p, fact, cfg);
    CHECK(a.mass.data() == b.mass.data());
    CHECK(a.total() > 0.0);
    for (const double v : a.mass.data()) CHECK(v >= 0.0);
}

TEST_CASE("restricting to the whole disk reproduces the plain estimate") {
    const SleParams p = derive_params(3.5);
    auto fact = make_gff_factorization(65, GffDomain::Disk);
    const CleSample cle = small_cle(12);
    XiConfig cfg;
    cfg.n_fields = 2;
    cfg.seed = 7;
    const CarpetMeasure plain = estimate_xi(cle, p, fact, cfg);

    XiRestriction full;
    full.vertex_mask.assign(fact->n() * fact->n(), 1);
    full.cell_mask = BoolGrid::unit_disk_box(cfg.grid_n, 1);
    full.r_v = MassGrid::unit_disk_box(cfg.grid_n);
    for (std::size_t iy = 0; iy < cfg.grid_n; ++iy)
        for (std::size_t ix = 0; ix < cfg.grid_n; ++ix)
            full.r_v.at(ix, iy) =
                std::max(0.0, 1.0 - std::norm(full.r_v.center(ix, iy)));
    const CarpetMeasure restricted = estimate_xi(cle, p, fact, cfg, &full);
    REQUIRE(plain.mass.data().size() == restricted.mass.data().size());
    for (std::size_t k = 0; k < plain.mass.data().size(); ++k)
        CHECK(restricted.mass.data()[k] ==
              doctest::Approx(plain.mass.data()[k]).epsilon(1e-9));
}

TEST_CASE("unit-normalized agreement of an ensemble with itself is exact") {
    XiEnsemble e;
    e.mean = MassGrid::unit_disk_box(32, 1.0);
    e.stderr_grid = MassGrid::unit_disk_box(32, 0.1);
    e.totals = {1.0, 1.1, 0.9};
    e.n_replicas = 3;
    const auto zs = uniqueness_normalization_check(e, e, {Box{-0.4, -0.4, 0.4, 0.4}});
    REQUIRE_FALSE(zs.empty());
    for (const double z : zs) CHECK(std::abs(z) < 1e-12);
}

TEST_CASE("replica-resolved agreement uses per-replica box fractions") {
    // two ensembles whose replica grids share the same normalized shape but
    // different totals -> z must vanish; a shape shift must be detected
    auto make = [](double left_weight, double scale_jitter) {
        XiEnsemble e;
        e.mean = MassGrid::unit_disk_box(16, 1.0);
        e.stderr_grid = MassGrid::unit_disk_box(16, 0.1);
        for (int r = 0; r < 8; ++r) {
            MassGrid g = MassGrid::unit_disk_box(16, 1.0);
            const double s = 1.0 + scale_jitter * r;
            const double w = left_weight + 0.01 * (r % 2 ? 1.0 : -1.0);
            for (std::size_t iy = 0; iy < g.ny(); ++iy)
                for (std::size_t ix = 0; ix < g.nx(); ++ix)
                    g.at(ix, iy) = s * (g.center(ix, iy).real() < 0.0 ? w : 1.0);
            e.replica_mass.push_back(g);
            e.totals.push_back(0.0);
        }
        e.n_replicas = e.replica_mass.size();
        return e;
    };
    const Box left{-0.9, -0.9, 0.8, 1.8};
    const XiEnsemble a = make(2.0, 0.05), b = make(2.0, 0.11);
    for (const double z : uniqueness_normalization_check(a, b, {left}))
        CHECK(std::abs(z) < 1e-9); // totals differ, fractions identical
    const XiEnsemble c = make(3.0, 0.07);
    for (const double z : uniqueness_normalization_check(a, c, {left}))
        CHECK(std::abs(z) > 10.0); // genuine shape difference
}

TEST_CASE("bubble detection finds an enclosed pocket") {
    std::vector<Complex> trace;
    for (int k = 0; k <= 200; ++k) {
        const double th = 2.0 * M_PI * k / 200.0;
        trace.emplace_back(0.3 * std::cos(th), 0.8 + 0.3 * std::sin(th));
    }
    trace.emplace_back(0.31, 0.8); // continue past the closure
    const auto bubbles = detect_bubbles(trace, Box{-1.0, 0.0, 2.0, 2.0}, 128, 64);
    REQUIRE_FALSE(bubbles.empty());
    const Bubble& b = bubbles.front();
    CHECK(b.n_cells > 50);
    CHECK(std::abs(b.pinch - Complex(0.0, 0.8)) < 0.45);
    CHECK(point_in_polygon(b.boundary, Complex(0.0, 0.8)));
}

TEST_CASE("reference trace density integrates consistently over splits") {
    const double kappa = 6.0;
    const Box whole{-0.2, 0.5, 0.4, 0.4};
    const Box left{-0.2, 0.5, 0.2, 0.4};
    const Box right{0.0, 0.5, 0.2, 0.4};
    const double w = trace_intensity_box_integral(whole, kappa, 512);
    const double lr = trace_intensity_box_integral(left, kappa, 512) +
                      trace_intensity_box_integral(right, kappa, 512);
    CHECK(w == doctest::Approx(lr).epsilon(1e-8));
    const Complex z(0.1, 0.7);
    const SleParams p = derive_params(kappa);
    CHECK(trace_intensity_density(z, kappa) ==
          doctest::Approx(std::pow(std::sin(std::arg(z)), 8.0 / kappa - 1.0) *
                          std::pow(z.imag(), p.d_curve - 2.0))
              .epsilon(1e-12));
}

TEST_CASE("identity rescaling yields zero z-scores") {
    MeasureEstimate base;
    base.mass = MassGrid(64, 64, -1.0, 0.0, 2.0, 2.0, 1.0);
    base.stderr_grid = MassGrid(64, 64, -1.0, 0.0, 2.0, 2.0, 0.01);
    const ScalingReport rep = scaling_covariance_check(
        base, base, 1.0, 2.0, {Box{-0.4, 0.2, 0.4, 0.4}});
    for (const double z : rep.box_z) CHECK(std::abs(z) < 1e-12);
    CHECK(rep.total_pushed == doctest::Approx(rep.total_rescaled).epsilon(1e-12));
}

} // TEST_SUITE

TEST_SUITE("io") {

TEST_CASE("FNV-1a digests of known strings") {
    CHECK(io::fnv1a_hex("") == "cbf29ce484222325");
    CHECK(io::fnv1a_hex("a") == "af63dc4c8601ec8c");
    CHECK(io::fnv1a_hex("hello") == io::fnv1a_hex("hello"));
    CHECK(io::fnv1a_hex("hello") != io::fnv1a_hex("hellp"));
}

TEST_CASE("grid CSV has a header and one row per cell") {
    MassGrid g(3, 2, 0.0, 0.0, 3.0, 2.0);
    g.at(1, 0) = 2.5;
    const std::string csv = io::csv_from_grid(g);
    CHECK(csv.rfind("x,y,value\n", 0) == 0);
    std::size_t rows = 0;
    for (const char ch : csv)
        if (ch == '\n') ++rows;
    CHECK(rows == 1 + 3 * 2);
    CHECK(csv.find("2.5") != std::string::npos);
}

TEST_CASE("PGM output is binary 8-bit with correct dimensions") {
    MassGrid g(4, 3, 0.0, 0.0, 1.0, 1.0);
    g.at(0, 0) = 1.0;
    const std::string pgm = io::pgm_from_grid(g);
    CHECK(pgm.rfind("P5", 0) == 0);
    CHECK(pgm.find("4 3") != std::string::npos);
}

TEST_CASE("SVG writers emit well-formed documents") {
    const std::string sc = io::svg_scatter({Complex(0.1, 0.2), Complex(-0.4, 0.9)});
    CHECK(sc.find("<svg") != std::string::npos);
    CHECK(sc.rfind("</svg>") != std::string::npos);
    MassGrid g(8, 8, -1.0, -1.0, 2.0, 2.0, 0.5);
    const std::string hm = io::svg_heatmap(g);
    CHECK(hm.find("<svg") != std::string::npos);
}

TEST_CASE("atomic text write round trip") {
    const std::string path = "unit_io_roundtrip.txt";
    io::write_text_atomic(path, "payload\n");
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "payload");
    in.close();
    std::remove(path.c_str());
}

} // TEST_SUITE
