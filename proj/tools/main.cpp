// Batch front door: every estimator pipeline behind one subcommand each,
// with a JSON config file, flag overrides (flags win), explicit seeds and a
// run manifest per output directory.
//
// Exit codes: 0 pass, 2 config error, 3 statistical failure, 4 internal.

#include "clelab/cle_measure.hpp"
#include "clelab/gff.hpp"
#include "clelab/gmc.hpp"
#include "clelab/io.hpp"
#include "clelab/loewner.hpp"
#include "clelab/loopsoup.hpp"
#include "clelab/natural_param.hpp"
#include "clelab/params.hpp"
#include "clelab/rng.hpp"
#include "clelab/special.hpp"
#include "clelab/stats.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using nlohmann::json;
using namespace clelab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitStatistical = 3;
constexpr int kExitInternal = 4;

struct Run {
    std::string name;
    std::string outdir = "out";
    bool svg = false;
    json config;
    json report;
    json checks = json::array();
    std::map<std::string, std::string> artifacts; // name -> checksum
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    std::map<std::string, double> stage_seconds;

    void write(const std::string& filename, const std::string& bytes) {
        std::filesystem::create_directories(outdir);
        const std::string path = outdir + "/" + filename;
        io::write_text_atomic(path, bytes);
        artifacts[filename] = io::fnv1a_hex(bytes);
    }

    bool check(const std::string& what, double value, double threshold, bool pass) {
        checks.push_back(
            {{"name", what}, {"value", value}, {"threshold", threshold}, {"pass", pass}});
        return pass;
    }

    int finish(const SleParams* params = nullptr) {
        bool all = true;
        for (const auto& c : checks) all = all && c["pass"].get<bool>();
        json manifest;
        manifest["subcommand"] = name;
        manifest["config"] = config;
        if (params) {
            manifest["params"] = {{"kappa", params->kappa},
                                  {"gamma", params->gamma},
                                  {"alpha", params->alpha},
                                  {"alpha_hat", params->alpha_hat},
                                  {"Q", params->Q},
                                  {"d_carpet", params->d_carpet},
                                  {"d_curve", params->d_curve},
                                  {"f_exponent", params->f_exponent}};
            if (params->soup_intensity)
                manifest["params"]["soup_intensity"] = *params->soup_intensity;
        }
        manifest["report"] = report;
        manifest["checks"] = checks;
        manifest["artifacts"] = artifacts;
        manifest["wall_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        manifest["stage_seconds"] = stage_seconds;
        manifest["all_checks_pass"] = all;
        write("manifest.json", manifest.dump(2) + "\n");
        std::cout << manifest.dump(2) << std::endl;
        return all ? kExitOk : kExitStatistical;
    }
};

class Stage {
public:
    Stage(Run& run, std::string name)
        : run_(run), name_(std::move(name)), t0_(std::chrono::steady_clock::now()) {}
    ~Stage() {
        run_.stage_seconds[name_] +=
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    Run& run_;
    std::string name_;
    std::chrono::steady_clock::time_point t0_;
};

// Tokens derived from a JSON config file, inserted before the user's flags
// so that explicitly passed flags win.
std::vector<std::string> config_tokens(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
    json cfg;
    in >> cfg;
    if (!cfg.is_object()) throw CLI::ValidationError("--config", "expected a JSON object");
    std::vector<std::string> tokens;
    for (const auto& [key, value] : cfg.items()) {
        tokens.push_back("--" + key);
        if (value.is_boolean()) {
            if (!value.get<bool>()) tokens.pop_back();
            continue;
        }
        tokens.push_back(value.is_string() ? value.get<std::string>() : value.dump());
    }
    return tokens;
}

std::vector<Box> default_probe_boxes() {
    return {Box{-0.55, -0.15, 0.3, 0.3}, Box{0.25, -0.15, 0.3, 0.3},
            Box{-0.15, 0.25, 0.3, 0.3},  Box{-0.15, -0.55, 0.3, 0.3},
            Box{-0.65, -0.65, 0.4, 0.4}, Box{0.25, 0.25, 0.4, 0.4}};
}

LoewnerTrace make_trace(double kappa, std::size_t steps, double dt, std::size_t stride,
                        std::uint64_t seed) {
    const DrivingFunction w = sample_sle_driving(kappa, dt, steps, seed);
    return trace_from_driving(w, stride);
}

BoolGrid rasterize_polyline(const std::vector<Complex>& pts, const Box& window,
                            std::size_t n) {
    BoolGrid g(n, n, window.x0, window.y0, window.w, window.h);
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
        rasterize_segment(g, pts[j], pts[j + 1], cells);
        for (auto [ix, iy] : cells) g.at(ix, iy) = 1;
    }
    return g;
}

std::vector<std::size_t> dyadic_scales(std::size_t n) {
    std::vector<std::size_t> s;
    for (std::size_t k = 1; k <= n / 8; k *= 2) s.push_back(k);
    return s;
}

// --- subcommand bodies ----------------------------------------------------

int cmd_params(Run& run, double kappa) {
    const SleParams p = derive_params(kappa);
    run.report = {{"kappa", p.kappa},       {"gamma", p.gamma},
                  {"alpha", p.alpha},       {"alpha_hat", p.alpha_hat},
                  {"Q", p.Q},               {"d_carpet", p.d_carpet},
                  {"d_curve", p.d_curve},   {"f_exponent", p.f_exponent}};
    if (p.soup_intensity) run.report["soup_intensity"] = *p.soup_intensity;
    return run.finish(&p);
}

int cmd_sle_trace(Run& run, double kappa, std::size_t steps, double dt, std::size_t stride,
                  std::uint64_t seed) {
    if (!(kappa > 0.0)) throw std::domain_error("sle-trace: kappa must be positive");
    LoewnerTrace tr;
    {
        Stage st(run, "trace");
        tr = make_trace(kappa, steps, dt, stride, seed);
    }
    run.write("trace.csv", io::csv_from_points(tr.points));
    if (run.svg) run.write("trace.svg", io::svg_scatter(tr.points));
    run.report = {{"points", tr.points.size()}, {"horizon", tr.times.back()}};
    return run.finish();
}

int cmd_dim_est(Run& run, double kappa, std::size_t steps, double dt, std::size_t grid_n,
                std::uint64_t seed, double tol) {
    if (!(kappa > 0.0)) throw std::domain_error("dim-est: kappa must be positive");
    LoewnerTrace tr;
    {
        Stage st(run, "trace");
        tr = make_trace(kappa, steps, dt, 1, seed);
    }
    double xlo = 1e9, xhi = -1e9, yhi = 0;
    for (const Complex& z : tr.points) {
        xlo = std::min(xlo, z.real());
        xhi = std::max(xhi, z.real());
        yhi = std::max(yhi, z.imag());
    }
    const Box window{xlo - 0.05, 0.0, xhi - xlo + 0.1, yhi + 0.05};
    const BoolGrid mask = rasterize_polyline(tr.points, window, grid_n);
    const DimensionEstimate est = box_dimension(mask, dyadic_scales(grid_n));
    const double target = std::min(2.0, 1.0 + kappa / 8.0);
    run.report = {{"dimension", est.dimension},
                  {"stderr", est.stderr_slope},
                  {"target", target}};
    run.check("box dimension near 1 + kappa/8", est.dimension - target, tol,
              std::abs(est.dimension - target) < tol);
    return run.finish();
}

int cmd_loop_soup(Run& run, double kappa, double t_min, double t_cap, std::size_t bridge,
                  std::uint64_t seed) {
    const SleParams p = derive_params(kappa);
    if (!p.soup_intensity) throw CLI::ValidationError("--kappa", "no loop-soup intensity");
    LoopSoup soup;
    {
        Stage st(run, "soup");
        soup = sample_loop_soup(*p.soup_intensity, t_min, t_cap, bridge, seed);
    }
    std::vector<Complex> roots;
    for (const auto& l : soup.loops) roots.push_back(l.root);
    run.write("roots.csv", io::csv_from_points(roots));
    if (run.svg) run.write("roots.svg", io::svg_scatter(roots));
    run.report = {{"loops_kept", soup.loops.size()},
                  {"expected_roots_before_restriction",
                   expected_root_count(*p.soup_intensity, M_PI, t_min, t_cap)}};
    return run.finish(&p);
}

int cmd_carpet(Run& run, double kappa, double t_min, double t_cap, std::size_t bridge,
               std::size_t grid_n, std::uint64_t seed, double tol) {
    const SleParams p = derive_params(kappa);
    if (!p.soup_intensity) throw CLI::ValidationError("--kappa", "no loop-soup intensity");
    CleSample cle;
    {
        Stage st(run, "carpet");
        const LoopSoup soup =
            sample_loop_soup(*p.soup_intensity, t_min, t_cap, bridge, seed);
        const auto clusters = cluster_loops(soup, std::max<std::size_t>(grid_n / 4, 64));
        cle = carpet_from_clusters(soup, clusters, grid_n);
    }
    MassGrid img = MassGrid::unit_disk_box(grid_n);
    for (std::size_t k = 0; k < img.data().size(); ++k)
        img.data()[k] = cle.carpet.data()[k];
    run.write("carpet.pgm", io::pgm_from_grid(img));
    const DimensionEstimate est = box_dimension(cle.carpet, dyadic_scales(grid_n));
    run.report = {{"cle_loops", cle.loops.size()},
                  {"dimension", est.dimension},
                  {"target", p.d_carpet}};
    run.check("carpet box dimension near 1 + 2/kappa + 3 kappa/32",
              est.dimension - p.d_carpet, tol, std::abs(est.dimension - p.d_carpet) < tol);
    return run.finish(&p);
}

int cmd_xi_estimate(Run& run, double kappa, std::size_t replicas, std::size_t fields,
                    double eps, std::size_t grid_n, std::uint64_t seed) {
    const SleParams p = derive_params(kappa);
    auto fact = make_gff_factorization(129, GffDomain::Disk);
    SoupConfig soup;
    soup.carpet_n = grid_n;
    XiConfig xi;
    xi.n_fields = fields;
    xi.eps = eps;
    xi.grid_n = grid_n;
    XiEnsemble ens;
    {
        Stage st(run, "ensemble");
        ens = xi_ensemble(replicas, p, soup, xi, fact, seed);
    }
    run.write("intensity.csv", io::csv_from_grid(ens.mean));
    if (run.svg) run.write("intensity.svg", io::svg_heatmap(ens.mean));
    const MeanVar mv = mean_var(ens.totals);
    run.report = {{"replicas", replicas},
                  {"mean_total", mv.mean},
                  {"stderr_total", mv.stderr_mean()}};
    return run.finish(&p);
}

int cmd_mu0_estimate(Run& run, double kappa, std::size_t n_traces, std::size_t fields,
                     std::size_t steps, double dt, double eps, std::size_t grid_n,
                     std::uint64_t seed, double tol, bool check_shape) {
    const SleParams p = derive_params(kappa);
    std::vector<LoewnerTrace> traces;
    {
        Stage st(run, "traces");
        for (std::size_t t = 0; t < n_traces; ++t)
            traces.push_back(make_trace(kappa, steps, dt, 1, Rng::mix(seed, t)));
    }
    Mu0Config cfg;
    cfg.fields_per_trace = fields;
    cfg.eps = eps;
    cfg.grid_n = grid_n;
    cfg.seed = seed;
    MeasureEstimate est;
    {
        Stage st(run, "estimate");
        est = estimate_mu0(traces, p, cfg);
    }
    run.write("intensity.csv", io::csv_from_grid(est.mass));
    if (run.svg) run.write("intensity.svg", io::svg_heatmap(est.mass));
    run.report = {{"traces", est.n_traces},
                  {"traces_without_bubbles", est.n_traces_without_bubbles}};
    if (check_shape) {
        const Box a{-0.45, 0.75, 0.5, 0.5}, b{-0.05, 0.75, 0.5, 0.5};
        const double ma = mass_in_box(est.mass, a) * est.mass.cell_area();
        const double mb = mass_in_box(est.mass, b) * est.mass.cell_area();
        const double ra = trace_intensity_box_integral(a, kappa);
        const double rb = trace_intensity_box_integral(b, kappa);
        const double rel = mb > 0 && rb > 0 ? (ma / mb) / (ra / rb) - 1.0 : 1e9;
        run.report["box_ratio_vs_reference"] = rel;
        run.check("probe-box ratio vs reference density", rel, tol, std::abs(rel) < tol);
    }
    return run.finish(&p);
}

int cmd_covariance_check(Run& run, double b) {
    // Lebesgue stand-in (the gamma = 0 degenerate case): intensity 1 on a
    // window, rescaled copy estimated on the same window; the measure of a
    // box must scale exactly like b^2.
    MeasureEstimate base;
    base.mass = MassGrid(128, 128, -1.0, 0.0, 2.0, 2.0, 1.0);
    base.stderr_grid = MassGrid(128, 128, -1.0, 0.0, 2.0, 2.0, 0.0);
    const MeasureEstimate rescaled = base;
    const std::vector<Box> probes = {Box{-0.4, 0.2, 0.4, 0.4}, Box{0.0, 0.6, 0.6, 0.6}};
    const ScalingReport identity = scaling_covariance_check(base, base, 1.0, 2.0, probes);
    double max_z = 0.0;
    for (const double z : identity.box_z) max_z = std::max(max_z, std::abs(z));
    run.check("b = 1 z-scores vanish", max_z, 1e-12, max_z < 1e-12);

    const ScalingReport rep = scaling_covariance_check(base, rescaled, b, 2.0, probes);
    // exact area scaling: pushed box mass = b^2 * (box/b area) = box area
    double worst = 0.0;
    for (std::size_t k = 0; k < probes.size(); ++k) {
        const Box& A = probes[k];
        const double expect = A.w * A.h;
        const double got =
            std::pow(b, 2.0) * mass_in_box(base.mass, Box{A.x0 / b, A.y0 / b, A.w / b, A.h / b}) *
            base.mass.cell_area();
        worst = std::max(worst, std::abs(got / expect - 1.0));
    }
    run.report = {{"b", b}, {"max_area_scaling_error", worst}};
    run.check("degenerate run scales areas by b^2", worst, 0.05, worst < 0.05);
    return run.finish();
}

int cmd_markov_test(Run& run, double kappa, std::size_t replicas, std::size_t fields,
                    std::size_t grid_n, double t_min, double eps, std::size_t gff_n,
                    std::uint64_t seed, double significance) {
    const SleParams p = derive_params(kappa);
    MarkovTestConfig cfg;
    cfg.n_replicas = replicas;
    cfg.xi.grid_n = grid_n;
    cfg.xi.n_fields = fields;
    cfg.soup.t_min = t_min;
    cfg.xi.eps = eps;
    cfg.gff_n = gff_n;
    cfg.seed = seed;
    MarkovTestReport rep;
    {
        Stage st(run, "replicas");
        rep = markov_restriction_test(p, cfg);
    }
    {
        std::string csv = "pushed,fresh\n";
        const std::size_t rows = std::max(rep.pushed_totals.size(), rep.fresh_totals.size());
        for (std::size_t i = 0; i < rows; ++i) {
            if (i < rep.pushed_totals.size()) csv += std::to_string(rep.pushed_totals[i]);
            csv += ',';
            if (i < rep.fresh_totals.size()) csv += std::to_string(rep.fresh_totals[i]);
            csv += '\n';
        }
        run.write("totals.csv", csv);
    }
    run.report = {{"ks_statistic", rep.ks.statistic},
                  {"ks_p_value", rep.ks.p_value},
                  {"skipped", rep.n_skipped},
                  {"component_correlation", rep.component_correlation},
                  {"component_correlation_z", rep.component_correlation_z},
                  {"component_pairs", rep.n_component_pairs}};
    run.check("restriction KS", rep.ks.p_value, significance, rep.ks.p_value > significance);
    run.check("disjoint components uncorrelated", rep.component_correlation_z, 3.0,
              std::abs(rep.component_correlation_z) < 3.0);
    return run.finish(&p);
}

int cmd_cle4_coupling(Run& run, const std::vector<double>& cs, std::size_t fields,
                      std::uint64_t seed) {
    auto fact = make_gff_factorization(129, GffDomain::Disk);
    SoupConfig soup;
    XiConfig xi;
    xi.n_fields = fields;
    CouplingReport rep;
    {
        Stage st(run, "levels");
        rep = cle4_measure_via_coupling(cs, soup, xi, fact, seed);
    }
    json levels = json::array();
    for (const auto& l : rep.levels)
        levels.push_back({{"c", l.c},
                          {"kappa", l.kappa},
                          {"d_carpet", l.d_carpet},
                          {"loops", l.n_loops},
                          {"xi_total", l.xi_total}});
    run.report = {{"levels", levels}, {"carpets_nested", rep.carpets_nested}};
    run.check("carpet masks cellwise decreasing", rep.carpets_nested ? 1.0 : 0.0, 1.0,
              rep.carpets_nested);
    const double d_end = rep.levels.back().d_carpet;
    run.check("endpoint dimension 15/8", d_end, 1e-12, std::abs(d_end - 1.875) < 1e-12);
    return run.finish();
}

int cmd_ode_check(Run& run, double kappa) {
    std::vector<double> grid;
    for (double th = 0.01; th < M_PI - 0.01; th += 0.005) grid.push_back(th);
    const double residual = h_ode_residual(kappa, grid);
    const double rk = h_ode_integrate_vs_analytic(kappa, 0.1, M_PI - 0.1, 1e-4);
    run.report = {{"max_residual", residual}, {"integration_vs_analytic", rk}};
    run.check("analytic solution residual", residual, 1e-10, residual < 1e-10);
    run.check("fourth-order integration agreement", rk, 1e-6, rk < 1e-6);
    return run.finish();
}

int cmd_bessel_check(Run& run, double a, double s, std::size_t n_samples,
                     std::uint64_t seed) {
    BesselDensitySpec spec;
    spec.a = a;
    spec.s = s;
    const RadialBesselDensity density(spec);

    // probability normalization by Simpson quadrature
    const int m = 2000;
    double integral = 0.0;
    const double x0 = M_PI / 3.0;
    for (int k = 0; k <= m; ++k) {
        const double y = M_PI * static_cast<double>(k) / m;
        const double w = (k == 0 || k == m) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        integral += w * density(x0, std::clamp(y, 1e-12, M_PI - 1e-12));
    }
    integral *= M_PI / m / 3.0;
    run.check("density integrates to one", std::abs(integral - 1.0), 1e-6,
              std::abs(integral - 1.0) < 1e-6);

    std::vector<double> endpoints;
    {
        Stage st(run, "simulate");
        endpoints = simulate_radial_bessel(a, x0, s, std::min(1e-3 * s, 1e-3),
                                           static_cast<int>(n_samples), seed);
    }
    std::vector<double> ys, cdf;
    density.tabulate_cdf(x0, ys, cdf);
    const KsResult ks = ks_test_against_cdf(endpoints, ys, cdf);
    run.report = {{"integral", integral},
                  {"truncation", density.truncation()},
                  {"ks_statistic", ks.statistic},
                  {"ks_p_value", ks.p_value}};
    run.check("SDE endpoints match the series density", ks.p_value, 0.01, ks.p_value > 0.01);
    return run.finish();
}

int cmd_stable_scaling(Run& run, double alpha_hat, double T, std::size_t n_runs,
                       std::uint64_t seed) {
    const std::vector<double> epsilons = {1e-2, 1e-3, 1e-4};
    json rows = json::array();
    bool ok = true;
    double worst = 0.0;
    for (const double eps : epsilons) {
        std::vector<double> scaled;
        for (std::size_t r = 0; r < n_runs; ++r) {
            const StableJumpRecord rec =
                sample_stable_jumps(alpha_hat, T, eps, 1.0, Rng::mix(seed, r));
            scaled.push_back(std::pow(eps, alpha_hat) *
                             static_cast<double>(rec.sizes.size()));
        }
        const MeanVar mv = mean_var(scaled);
        const double oracle = T / alpha_hat; // eps^a * C T eps^-a / a
        const double z = (mv.mean - oracle) / mv.stderr_mean();
        worst = std::max(worst, std::abs(z));
        ok = ok && std::abs(z) < 3.0;
        rows.push_back({{"eps", eps}, {"mean", mv.mean}, {"oracle", oracle}, {"z", z}});
    }
    run.report = {{"bands", rows}};
    run.check("eps^alpha E[N_eps] constant (|z| < 3)", worst, 3.0, ok);
    return run.finish();
}

int cmd_uniqueness_check(Run& run, double kappa, std::size_t replicas, double eps,
                         std::uint64_t seed) {
    const SleParams p = derive_params(kappa);
    auto fact = make_gff_factorization(129, GffDomain::Disk);
    SoupConfig soup;
    XiConfig xa;
    xa.eps = eps;
    xa.keep_replicas = true;
    XiConfig xb;
    xb.eps = eps / 2.0;
    xb.keep_replicas = true;
    XiEnsemble a, b;
    {
        Stage st(run, "ensembles");
        a = xi_ensemble(replicas, p, soup, xa, fact, Rng::mix(seed, 11));
        b = xi_ensemble(replicas, p, soup, xb, fact, Rng::mix(seed, 22));
    }
    const auto zs = uniqueness_normalization_check(a, b, default_probe_boxes());
    double worst = 0.0;
    for (const double z : zs) worst = std::max(worst, std::abs(z));
    run.report = {{"z_scores", zs}};
    run.check("unit-normalized intensities agree (|z| < 3)", worst, 3.0, worst < 3.0);
    return run.finish(&p);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical laboratory for SLE/CLE traces, loop soups, multiplicative-chaos "
                 "measures and their covariance checks"};
    app.require_subcommand(1);

    std::string config_path, outdir = "out";
    bool svg = false;
    std::size_t workers = 1;
    app.add_option("--config", config_path, "JSON config file; flags override its values");
    app.add_option("--out", outdir, "output directory for artifacts + manifest");
    app.add_flag("--svg", svg, "also write SVG renderings");
    app.add_option("--workers", workers, "worker pool size for independent replicas");

    double kappa = 4.0, dt = 1e-4, t_min = 1e-4, t_cap = 1.0, eps = 0.02, tol = 0.1, b = 2.0;
    double a_param = 0.5, s_param = 0.5, alpha_hat = 1.5, horizon = 1.0, significance = 0.01;
    std::size_t steps = 10000, stride = 1, grid_n = 256, bridge = 512, replicas = 50;
    std::size_t gff_n = 129;
    std::size_t fields = 1, n_traces = 20, n_runs = 200, n_samples = 10000;
    std::uint64_t seed = 1;
    std::vector<double> c_sequence = {0.5, 0.8, 1.0};
    bool check_shape = false;

    auto add_common = [&](CLI::App* sub, bool with_kappa = true) {
        sub->fallthrough(); // global --out/--svg/... may follow the subcommand
        sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        if (with_kappa) sub->add_option("--kappa", kappa, "SLE parameter");
        sub->add_option("--seed", seed, "deterministic base seed");
    };

    auto* sc_params = app.add_subcommand("params", "derived parameter set as JSON");
    add_common(sc_params);

    auto* sc_trace = app.add_subcommand("sle-trace", "sample one SLE trace");
    add_common(sc_trace);
    sc_trace->add_option("--steps", steps);
    sc_trace->add_option("--dt", dt);
    sc_trace->add_option("--stride", stride);

    auto* sc_dim = app.add_subcommand("dim-est", "box dimension of a trace");
    add_common(sc_dim);
    sc_dim->add_option("--steps", steps);
    sc_dim->add_option("--dt", dt);
    sc_dim->add_option("--grid", grid_n);
    sc_dim->add_option("--tol", tol);

    auto* sc_soup = app.add_subcommand("loop-soup", "Brownian loop soup in the disk");
    add_common(sc_soup);
    sc_soup->add_option("--tmin", t_min);
    sc_soup->add_option("--tcap", t_cap);
    sc_soup->add_option("--bridge", bridge);

    auto* sc_carpet = app.add_subcommand("carpet", "loop-soup cluster carpet + dimension");
    add_common(sc_carpet);
    sc_carpet->add_option("--tmin", t_min);
    sc_carpet->add_option("--tcap", t_cap);
    sc_carpet->add_option("--bridge", bridge);
    sc_carpet->add_option("--grid", grid_n);
    sc_carpet->add_option("--tol", tol);

    auto* sc_xi = app.add_subcommand("xi-estimate", "carpet measure intensity ensemble");
    add_common(sc_xi);
    sc_xi->add_option("--replicas", replicas);
    sc_xi->add_option("--fields", fields);
    sc_xi->add_option("--eps", eps);
    sc_xi->add_option("--grid", grid_n);

    auto* sc_mu0 = app.add_subcommand("mu0-estimate", "trace measure intensity");
    add_common(sc_mu0);
    sc_mu0->add_option("--traces", n_traces);
    sc_mu0->add_option("--fields", fields);
    sc_mu0->add_option("--steps", steps);
    sc_mu0->add_option("--dt", dt);
    sc_mu0->add_option("--eps", eps);
    sc_mu0->add_option("--grid", grid_n);
    sc_mu0->add_option("--tol", tol);
    sc_mu0->add_flag("--check-shape", check_shape, "compare probe boxes to the reference density");

    auto* sc_cov = app.add_subcommand("covariance-check", "dilation covariance sanity checks");
    add_common(sc_cov, false);
    sc_cov->add_option("--b", b);

    auto* sc_markov = app.add_subcommand("markov-test", "restriction / Markov property shadow");
    add_common(sc_markov);
    sc_markov->add_option("--replicas", replicas);
    sc_markov->add_option("--significance", significance);
    sc_markov->add_option("--grid", grid_n);
    sc_markov->add_option("--fields", fields);
    sc_markov->add_option("--t-min", t_min);
    sc_markov->add_option("--eps", eps);
    sc_markov->add_option("--gff-n", gff_n);

    auto* sc_cle4 = app.add_subcommand("cle4-coupling", "monotone thinning to intensity 1");
    add_common(sc_cle4, false);
    sc_cle4->add_option("--c-sequence", c_sequence)
        ->delimiter(',')
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    sc_cle4->add_option("--fields", fields);

    auto* sc_ode = app.add_subcommand("ode-check", "angular ODE residuals");
    add_common(sc_ode);

    auto* sc_bessel = app.add_subcommand("bessel-check", "transition density vs SDE");
    add_common(sc_bessel, false);
    sc_bessel->add_option("--a", a_param);
    sc_bessel->add_option("--s", s_param);
    sc_bessel->add_option("--samples", n_samples);

    auto* sc_stable = app.add_subcommand("stable-scaling", "jump-count normalization");
    add_common(sc_stable, false);
    sc_stable->add_option("--alpha-hat", alpha_hat);
    sc_stable->add_option("--horizon", horizon);
    sc_stable->add_option("--runs", n_runs);

    auto* sc_uni = app.add_subcommand("uniqueness-check", "two estimators, unit-normalized");
    add_common(sc_uni);
    sc_uni->add_option("--replicas", replicas);
    sc_uni->add_option("--eps", eps);

    // pre-scan for --config so its tokens are parsed before (= weaker than)
    // the command line; they are spliced in right after the subcommand name
    std::vector<std::string> args(argv + 1, argv + argc);
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
        if (args[i] != "--config") continue;
        try {
            const auto extra = config_tokens(args[i + 1]);
            std::size_t at = args.size();
            for (std::size_t j = 0; j < args.size(); ++j) {
                if (app.get_subcommand_no_throw(args[j]) != nullptr) {
                    at = j + 1;
                    break;
                }
            }
            if (at > args.size()) at = args.size();
            args.insert(args.begin() + static_cast<long>(at), extra.begin(), extra.end());
        } catch (const std::exception& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return kExitConfig;
        }
        break;
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    Run run;
    run.outdir = outdir;
    run.svg = svg;
    json cfgecho;
    cfgecho["seed"] = seed;
    cfgecho["workers"] = workers;

    try {
        CLI::App* sub = app.get_subcommands().front();
        run.name = sub->get_name();
        run.config = cfgecho;
        if (run.outdir == "out") run.outdir = "out/" + run.name;

        if (sub == sc_params) return cmd_params(run, kappa);
        if (sub == sc_trace) return cmd_sle_trace(run, kappa, steps, dt, stride, seed);
        if (sub == sc_dim) return cmd_dim_est(run, kappa, steps, dt, grid_n, seed, tol);
        if (sub == sc_soup) return cmd_loop_soup(run, kappa, t_min, t_cap, bridge, seed);
        if (sub == sc_carpet)
            return cmd_carpet(run, kappa, t_min, t_cap, bridge, grid_n, seed, tol);
        if (sub == sc_xi) return cmd_xi_estimate(run, kappa, replicas, fields, eps, grid_n, seed);
        if (sub == sc_mu0)
            return cmd_mu0_estimate(run, kappa, n_traces, fields, steps, dt, eps, grid_n, seed,
                                    tol, check_shape);
        if (sub == sc_cov) return cmd_covariance_check(run, b);
        if (sub == sc_markov)
            return cmd_markov_test(run, kappa, replicas, fields, grid_n, t_min, eps, gff_n, seed,
                                   significance);
        if (sub == sc_cle4) return cmd_cle4_coupling(run, c_sequence, fields, seed);
        if (sub == sc_ode) return cmd_ode_check(run, kappa);
        if (sub == sc_bessel) return cmd_bessel_check(run, a_param, s_param, n_samples, seed);
        if (sub == sc_stable) return cmd_stable_scaling(run, alpha_hat, horizon, n_runs, seed);
        if (sub == sc_uni) return cmd_uniqueness_check(run, kappa, replicas, eps, seed);
        std::cerr << "unknown subcommand\n";
        return kExitConfig;
    } catch (const std::domain_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
