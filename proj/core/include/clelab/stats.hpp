#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

namespace clelab {

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;   // unbiased sample variance
    std::size_t n = 0;
    double stderr_mean() const;
};

MeanVar mean_var(const std::vector<double>& xs);

struct LinFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
};

// Least squares y = a + b x with the usual residual-based slope error.
LinFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

// One-sample KS against a cdf given as sorted (x, F(x)) pairs.
KsResult ks_test_against_cdf(std::vector<double> samples,
                             const std::vector<double>& cdf_x,
                             const std::vector<double>& cdf_y);

KsResult ks_test_two_sample(std::vector<double> a, std::vector<double> b);

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }
    std::size_t find(std::size_t x);
    void unite(std::size_t a, std::size_t b);

private:
    std::vector<std::size_t> parent_;
    std::vector<unsigned> rank_;
};

} // namespace clelab
