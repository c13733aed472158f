#pragma once

#include <cstdint>

#include "uqnn/linearize.hpp"

namespace uqnn {

/// Exact linearization-error recursion. The perturbation z_n carried into
/// layer n is propagated exactly; layer_residuals[n] is the local kink
/// residual at layer n and accumulated_residual is the total deviation of
/// the last activation from its fully linearized value, so that
///   forward(mu + z) = linear_predict(z) + A * accumulated_residual
/// holds to rounding for every z.
struct ErrorTrace {
    std::vector<Vector> preactivations;        // unperturbed h_n
    std::vector<Vector> perturbations;         // z_n, with z_1 = z
    std::vector<Vector> layer_residuals;       // local residual per layer
    std::vector<std::vector<std::size_t>> flip_sets;
    Vector accumulated_residual;               // deviation at the last layer
    Vector output_error;                       // |A * accumulated_residual|

    bool flips_empty() const {
        for (const auto& s : flip_sets)
            if (!s.empty()) return false;
        return true;
    }
};

/// Run the error recursion for an MLP at perturbation z around mu.
ErrorTrace exact_error(const FeedForwardNet& net, const Vector& mu, const Vector& z);

/// Worst-case output error bound for component i at amplitude beta:
/// (1-alpha) sqrt(N_x) ||A_i|| ||W_L|| prod(lambda_n) beta, with the
/// lambda product empty for a single layer.
double deterministic_bound(const FeedForwardNet& net, const Vector& mu, double beta,
                           std::size_t i);

/// Dimensionless Bernstein coefficient: N_x/3 + sqrt(8 N_x ln(1/delta)/45)
/// + (2/3) ln(1/delta). Multiplied by beta^2 it bounds ||z||^2 with
/// probability at least 1 - delta.
double bernstein_coefficient(std::size_t n_x, double delta);

/// High-probability threshold on ||z||^2.
double bernstein_z2_threshold(std::size_t n_x, double beta, double delta);

/// Probabilistic error bound K beta sqrt(coefficient). K is the
/// deterministic prefactor, i.e. deterministic_bound / (sqrt(N_x) beta);
/// for one layer the single-layer prefactor is used.
double bernstein_bound(std::size_t n_x, double beta, double delta, double k_coeff);

struct ErrorStats {
    Vector max_error;      // per component
    Vector mean_error;
    Vector bound;          // deterministic bound per component
    std::size_t bound_violations = 0;
    std::size_t samples = 0;
    Matrix histogram;      // n_y x bins, densities over [0, bound_i]
    std::size_t bins = 0;
};

/// Sample n perturbations, run the exact recursion for each, and gather
/// per-component histograms, maxima, and means. Sharded across threads
/// with order-independent merging; deterministic in the seed.
ErrorStats error_statistics(const FeedForwardNet& net, const Vector& mu, double beta,
                            std::size_t n, std::uint64_t seed);
ErrorStats error_statistics_serial(const FeedForwardNet& net, const Vector& mu, double beta,
                                   std::size_t n, std::uint64_t seed);

/// JSON report {per-component max/mean, bounds, violations} plus a CSV of
/// histogram rows (component, bin_center, density).
void save_error_report(const ErrorStats& stats, const std::string& json_path,
                       const std::string& csv_path,
                       const std::string& metadata_json = "{}");

} // namespace uqnn
