#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>

#include "uqnn/marginal.hpp"
#include "uqnn/network.hpp"

namespace uqnn {

/// Monte Carlo ensemble of network outputs.
struct Ensemble {
    Matrix samples; // n x n_y, row k = forward(mu + z_k)
    std::uint64_t seed = 0;
    double beta = 0.0;
    std::string net_fingerprint;

    std::size_t size() const { return samples.rows(); }
};

/// n x n_x matrix of i.i.d. U[-beta, beta] draws. Row k depends only on
/// (seed, k), so sharded generation reproduces the serial rows exactly.
Matrix sample_perturbations(std::size_t n_x, double beta, std::size_t n, std::uint64_t seed);
Matrix sample_perturbations_serial(std::size_t n_x, double beta, std::size_t n,
                                   std::uint64_t seed);

Ensemble push_forward(const FeedForwardNet& net, const Vector& mu, const Matrix& perturbations);
Ensemble push_forward_serial(const FeedForwardNet& net, const Vector& mu,
                             const Matrix& perturbations);

/// Unbiased sample mean/covariance plus the derived correlation.
/// Requires at least two rows.
MomentSummary empirical_moments(const Matrix& samples);

struct Curve {
    Vector x;
    Vector y;
};

/// Normalized histogram at bin centers. bins = 0 selects the
/// Freedman-Diaconis width with a floor of 40 bins.
Curve histogram_pdf(const Vector& samples, std::size_t bins = 0);

/// Integral of |a - b| over the shared abscissae by trapezoid.
double l1_distance(const Curve& a, const Curve& b);

/// sup |F_empirical - F| over the sample points.
double ks_statistic(const Vector& samples, const std::function<double(double)>& cdf);

/// One-percent-level Kolmogorov-Smirnov critical band, 1.63 / sqrt(n).
inline double ks_band_1pct(std::size_t n) {
    return 1.63 / std::sqrt(static_cast<double>(n));
}

void save_ensemble_csv(const Ensemble& ens, const std::string& path);
Ensemble load_ensemble_csv(const std::string& path);

} // namespace uqnn
