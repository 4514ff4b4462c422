#include "clelab/gff.hpp"

#include "clelab/rng.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <stdexcept>

namespace clelab {

namespace {

constexpr std::size_t kMaxLatticeSize = 1025; // memory guard

// vertex (i, j) -> point of [-1,1]^2, i = column (x), j = row (y)
inline Complex vertex_point(std::size_t n, std::size_t i, std::size_t j) {
    const double a = 2.0 / static_cast<double>(n - 1);
    return {-1.0 + a * static_cast<double>(i), -1.0 + a * static_cast<double>(j)};
}

} // namespace

struct GffFactorization::Impl {
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;
    std::vector<long> vertex_to_dof; // -1 for boundary/exterior
    std::vector<std::pair<std::size_t, std::size_t>> dof_to_vertex;
};

GffFactorization::GffFactorization(std::size_t n, GffDomain domain)
    : n_(n), domain_(domain), impl_(std::make_unique<Impl>()) {
    if (n < 8) throw std::invalid_argument("GffFactorization: n must be >= 8");
    if (n > kMaxLatticeSize) throw std::invalid_argument("GffFactorization: n beyond cap");
    impl_->vertex_to_dof.assign(n * n, -1);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            bool interior;
            if (domain == GffDomain::Square) {
                interior = i > 0 && i + 1 < n && j > 0 && j + 1 < n;
            } else {
                const Complex z = vertex_point(n, i, j);
                interior = std::abs(z) < 1.0 - 0.5 * spacing();
            }
            if (interior) {
                impl_->vertex_to_dof[j * n + i] = static_cast<long>(impl_->dof_to_vertex.size());
                impl_->dof_to_vertex.emplace_back(i, j);
            }
        }
    }
    const std::size_t m = impl_->dof_to_vertex.size();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(5 * m);
    for (std::size_t k = 0; k < m; ++k) {
        const auto [i, j] = impl_->dof_to_vertex[k];
        trips.emplace_back(static_cast<int>(k), static_cast<int>(k), 4.0);
        const long nb[4] = {
            impl_->vertex_to_dof[j * n + (i - 1)], impl_->vertex_to_dof[j * n + (i + 1)],
            impl_->vertex_to_dof[(j - 1) * n + i], impl_->vertex_to_dof[(j + 1) * n + i]};
        for (long d : nb)
            if (d >= 0) trips.emplace_back(static_cast<int>(k), static_cast<int>(d), -1.0);
    }
    Eigen::SparseMatrix<double> A(static_cast<int>(m), static_cast<int>(m));
    A.setFromTriplets(trips.begin(), trips.end());
    impl_->llt.compute(A);
    if (impl_->llt.info() != Eigen::Success)
        throw std::runtime_error("GffFactorization: Cholesky failed");

    // Continuum normalization: scale the field so that the variance of the
    // circle average at the center matches log(1/eps) + log r_D(0).
    normalization_ = 1.0;
    const double eps_ref = 0.15;
    const double raw = circle_average_variance(Complex(0.0, 0.0), eps_ref);
    const double target = std::log(1.0 / eps_ref) + std::log(center_conformal_radius(domain));
    normalization_ = std::sqrt(target / raw);
}

GffFactorization::~GffFactorization() = default;

bool GffFactorization::is_interior(std::size_t i, std::size_t j) const {
    return impl_->vertex_to_dof[j * n_ + i] >= 0;
}

double GffFactorization::center_conformal_radius(GffDomain domain) {
    if (domain == GffDomain::Disk) return 1.0;
    // square [-1,1]^2: sqrt(2) / int_0^1 dt / sqrt(1 - t^4)
    const int m = 1 << 16;
    double k = 0.0;
    for (int i = 0; i < m; ++i) {
        // substitute t = sin^(1/2)... plain midpoint with the mild endpoint
        // singularity handled by u = 1 - t
        const double t = (i + 0.5) / m;
        k += 1.0 / std::sqrt(1.0 - t * t * t * t) / m;
    }
    return std::sqrt(2.0) / k;
}

GffSample GffFactorization::sample(std::uint64_t seed) const {
    const std::size_t m = impl_->dof_to_vertex.size();
    Eigen::VectorXd z(m);
    Rng rng(seed);
    for (std::size_t k = 0; k < m; ++k) z[static_cast<long>(k)] = rng.gaussian();
    // x = Pinv U^{-1} z has covariance A^{-1}
    Eigen::VectorXd y = impl_->llt.matrixU().solve(z);
    Eigen::VectorXd x = impl_->llt.permutationPinv() * y;
    GffSample s;
    s.fact = shared_from_this();
    s.seed = seed;
    s.normalization = normalization_;
    s.values.assign(n_ * n_, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        const auto [i, j] = impl_->dof_to_vertex[k];
        s.values[j * n_ + i] = normalization_ * x[static_cast<long>(k)];
    }
    return s;
}

std::vector<double> GffFactorization::covariance_column(std::size_t i, std::size_t j) const {
    const long dof = impl_->vertex_to_dof[j * n_ + i];
    if (dof < 0) throw std::invalid_argument("covariance_column: vertex not interior");
    const std::size_t m = impl_->dof_to_vertex.size();
    Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<long>(m));
    e[dof] = 1.0;
    Eigen::VectorXd g = impl_->llt.solve(e);
    std::vector<double> out(n_ * n_, 0.0);
    const double s2 = normalization_ * normalization_;
    for (std::size_t k = 0; k < m; ++k) {
        const auto [ii, jj] = impl_->dof_to_vertex[k];
        out[jj * n_ + ii] = s2 * g[static_cast<long>(k)];
    }
    return out;
}

namespace {

// Bilinear interpolation weights of z over the vertex lattice.
void interp_weights(std::size_t n, Complex z,
                    std::vector<std::pair<std::size_t, double>>& out) {
    const double a = 2.0 / static_cast<double>(n - 1);
    const double fx = (z.real() + 1.0) / a;
    const double fy = (z.imag() + 1.0) / a;
    const auto i0 = static_cast<long>(std::floor(fx));
    const auto j0 = static_cast<long>(std::floor(fy));
    if (i0 < 0 || j0 < 0 || i0 + 1 >= static_cast<long>(n) || j0 + 1 >= static_cast<long>(n))
        throw std::domain_error("gff interpolation: point outside lattice");
    const double tx = fx - static_cast<double>(i0);
    const double ty = fy - static_cast<double>(j0);
    out.clear();
    out.emplace_back(static_cast<std::size_t>(j0) * n + static_cast<std::size_t>(i0),
                     (1 - tx) * (1 - ty));
    out.emplace_back(static_cast<std::size_t>(j0) * n + static_cast<std::size_t>(i0 + 1),
                     tx * (1 - ty));
    out.emplace_back(static_cast<std::size_t>(j0 + 1) * n + static_cast<std::size_t>(i0),
                     (1 - tx) * ty);
    out.emplace_back(static_cast<std::size_t>(j0 + 1) * n + static_cast<std::size_t>(i0 + 1),
                     tx * ty);
}

std::size_t circle_point_count(double eps, double spacing) {
    return std::max<std::size_t>(16, static_cast<std::size_t>(
                                        std::ceil(2.0 * M_PI * eps / spacing)));
}

} // namespace

double GffFactorization::circle_average_variance(Complex z, double eps) const {
    const std::size_t m = impl_->dof_to_vertex.size();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<long>(m));
    const std::size_t npts = circle_point_count(eps, spacing());
    std::vector<std::pair<std::size_t, double>> wts;
    for (std::size_t k = 0; k < npts; ++k) {
        const double phi = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(npts);
        const Complex p = z + eps * Complex(std::cos(phi), std::sin(phi));
        interp_weights(n_, p, wts);
        for (auto [v, wt] : wts) {
            const long dof = impl_->vertex_to_dof[v];
            if (dof >= 0) w[dof] += wt / static_cast<double>(npts);
        }
    }
    const Eigen::VectorXd g = impl_->llt.solve(w);
    return normalization_ * normalization_ * w.dot(g);
}

std::shared_ptr<const GffFactorization> make_gff_factorization(std::size_t n, GffDomain domain) {
    return std::make_shared<const GffFactorization>(n, domain);
}

double GffSample::value(std::size_t i, std::size_t j) const { return values[j * n() + i]; }

std::size_t GffSample::n() const { return fact->n(); }

double GffSample::interpolate(Complex z) const {
    std::vector<std::pair<std::size_t, double>> wts;
    interp_weights(n(), z, wts);
    double v = 0.0;
    for (auto [idx, w] : wts) v += w * values[idx];
    return v;
}

double circle_average(const GffSample& field, Complex z, double eps) {
    const auto& fact = *field.fact;
    const double a = fact.spacing();
    if (eps < 2.0 * a) throw std::domain_error("circle_average: eps below 2 grid spacings");
    if (fact.domain() == GffDomain::Disk) {
        if (std::abs(z) + eps >= 1.0 - a)
            throw std::domain_error("circle_average: circle leaves the domain");
    } else {
        if (std::max(std::abs(z.real()), std::abs(z.imag())) + eps >= 1.0 - a)
            throw std::domain_error("circle_average: circle leaves the domain");
    }
    const std::size_t npts = circle_point_count(eps, a);
    double s = 0.0;
    for (std::size_t k = 0; k < npts; ++k) {
        const double phi = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(npts);
        s += field.interpolate(z + eps * Complex(std::cos(phi), std::sin(phi)));
    }
    return s / static_cast<double>(npts);
}

struct LatticeDirichlet::Impl {
    std::size_t n;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;
    std::vector<long> vertex_to_dof;
    std::vector<std::size_t> dof_to_vertex;
};

LatticeDirichlet::LatticeDirichlet(std::size_t n, const std::vector<unsigned char>& mask)
    : impl_(std::make_unique<Impl>()) {
    if (mask.size() != n * n) throw std::invalid_argument("LatticeDirichlet: mask size");
    impl_->n = n;
    impl_->vertex_to_dof.assign(n * n, -1);
    for (std::size_t v = 0; v < n * n; ++v) {
        const std::size_t i = v % n, j = v / n;
        if (mask[v] && i > 0 && i + 1 < n && j > 0 && j + 1 < n) {
            impl_->vertex_to_dof[v] = static_cast<long>(impl_->dof_to_vertex.size());
            impl_->dof_to_vertex.push_back(v);
        }
    }
    const std::size_t m = impl_->dof_to_vertex.size();
    if (m == 0) throw std::invalid_argument("LatticeDirichlet: empty mask");
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(5 * m);
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t v = impl_->dof_to_vertex[k];
        trips.emplace_back(static_cast<int>(k), static_cast<int>(k), 4.0);
        for (const long d : {impl_->vertex_to_dof[v - 1], impl_->vertex_to_dof[v + 1],
                             impl_->vertex_to_dof[v - n], impl_->vertex_to_dof[v + n]})
            if (d >= 0) trips.emplace_back(static_cast<int>(k), static_cast<int>(d), -1.0);
    }
    Eigen::SparseMatrix<double> A(static_cast<int>(m), static_cast<int>(m));
    A.setFromTriplets(trips.begin(), trips.end());
    impl_->llt.compute(A);
    if (impl_->llt.info() != Eigen::Success)
        throw std::runtime_error("LatticeDirichlet: Cholesky failed");
}

LatticeDirichlet::~LatticeDirichlet() = default;

std::size_t LatticeDirichlet::unknowns() const { return impl_->dof_to_vertex.size(); }

std::vector<double> LatticeDirichlet::solve(const std::vector<double>& rhs) const {
    const std::size_t n = impl_->n;
    const std::size_t m = impl_->dof_to_vertex.size();
    Eigen::VectorXd b(static_cast<long>(m));
    for (std::size_t k = 0; k < m; ++k) b[static_cast<long>(k)] = rhs[impl_->dof_to_vertex[k]];
    const Eigen::VectorXd x = impl_->llt.solve(b);
    std::vector<double> out(n * n, 0.0);
    for (std::size_t k = 0; k < m; ++k)
        out[impl_->dof_to_vertex[k]] = x[static_cast<long>(k)];
    return out;
}

MarkovDecomposition markov_decompose(const GffSample& field,
                                     const std::vector<unsigned char>& u_mask) {
    const std::size_t n = field.n();
    if (u_mask.size() != n * n) throw std::invalid_argument("markov_decompose: mask size");
    MarkovDecomposition out;
    out.harmonic = field.values;
    out.zero_boundary.assign(n * n, 0.0);
    bool empty = true;
    std::vector<unsigned char> eff(n * n, 0);
    for (std::size_t v = 0; v < n * n; ++v) {
        const std::size_t i = v % n, j = v / n;
        if (u_mask[v] && field.fact->is_interior(i, j)) {
            eff[v] = 1;
            empty = false;
        }
    }
    if (empty) return out; // (zero, field)

    // harmonic extension: solve Laplace on U with boundary data from the field
    LatticeDirichlet solver(n, eff);
    std::vector<double> rhs(n * n, 0.0);
    for (std::size_t v = 0; v < n * n; ++v) {
        if (!eff[v]) continue;
        for (const std::size_t nb : {v - 1, v + 1, v - n, v + n})
            if (!eff[nb]) rhs[v] += field.values[nb];
    }
    const std::vector<double> ext = solver.solve(rhs);
    for (std::size_t v = 0; v < n * n; ++v) {
        if (!eff[v]) continue;
        out.harmonic[v] = ext[v];
        out.zero_boundary[v] = field.values[v] - ext[v];
    }
    return out;
}

std::vector<double> sample_wedge_radial(double gamma, double t_max, double dt,
                                        std::uint64_t seed, double s0) {
    if (!(gamma > std::sqrt(2.0) && gamma < 2.0))
        throw std::domain_error("sample_wedge_radial: gamma must lie in (sqrt 2, 2)");
    if (!(dt > 0.0 && t_max > dt)) throw std::invalid_argument("sample_wedge_radial: bad grid");
    const double drift = (gamma - 2.0 / gamma) * dt;
    const double sd = std::sqrt(2.0 * dt);
    const auto n_steps = static_cast<std::size_t>(std::llround(t_max / dt));
    constexpr int kBudget = 100000;
    for (int attempt = 0; attempt < kBudget; ++attempt) {
        Rng rng = Rng::child(seed, static_cast<std::uint64_t>(attempt));
        std::vector<double> path(n_steps + 1);
        path[0] = s0;
        bool ok = true;
        for (std::size_t k = 1; k <= n_steps; ++k) {
            path[k] = path[k - 1] + drift + sd * rng.gaussian();
            if (path[k] <= 0.0) {
                ok = false;
                break;
            }
        }
        if (ok) return path;
    }
    throw std::runtime_error(
        "sample_wedge_radial: rejection budget exceeded; increase s0 or shorten the horizon");
}

} // namespace clelab
