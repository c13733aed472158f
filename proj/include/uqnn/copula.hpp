#pragma once

#include <cstdint>

#include "uqnn/marginal.hpp"

namespace uqnn {

double std_normal_cdf(double x);

/// Inverse standard normal CDF; u must lie strictly inside (0,1).
double std_normal_quantile(double u);

/// Physicists' Gauss-Hermite rule (weight exp(-x^2)) with 64 nodes,
/// built once via Golub-Welsch.
struct GaussHermiteRule {
    Vector nodes;
    Vector weights;
};
const GaussHermiteRule& gauss_hermite_64();

/// Gaussian copula density at a vector of probabilities u in (0,1)^n:
/// det(R)^{-1/2} exp( z (I - R^{-1}) z^T / 2 ) with z the normal quantiles.
double copula_density(const Matrix& correlation, const Vector& u);

/// E{ g_i g_j } under the Gaussian pair copula with the given marginals,
/// by a 64x64 tensor Gauss-Hermite rule in the latent normal variables.
double pair_moment(const MarginalLaw& law_i, const MarginalLaw& law_j, double rho);

struct RhoFit {
    double rho = 0.0;
    bool clipped = false; // target fell outside the attainable range
};

/// Solve for the pair correlation reproducing the target second moment.
/// Bracketed 1D minimization of the residual on [-0.999, 0.999],
/// initialized at the analytic Pearson correlation.
RhoFit fit_rho(const MarginalLaw& law_i, const MarginalLaw& law_j, double target_moment);

/// Gaussian-copula surrogate of the joint output law. Immutable after
/// construction; sampling takes independent per-call seeds.
struct CopulaModel {
    Matrix correlation;               // unit diagonal, PSD after repair
    Matrix cholesky_factor;           // cached lower factor
    std::vector<MarginalLaw> marginals;
    std::vector<std::uint8_t> degenerate; // per-component point-mass flag
    std::vector<std::pair<std::size_t, std::size_t>> clipped_pairs;

    std::size_t dim() const { return marginals.size(); }
};

/// Fit every pairwise rho to the analytic second moments of the model,
/// assemble R, repair it to a correlation matrix, and cache its Cholesky
/// factor. Throws DegenerateLawError when fewer than two components carry
/// positive variance.
CopulaModel build_copula(const SensitivityModel& model);

/// Draw n joint samples (rows). Deterministic in the seed and identical
/// between the OpenMP and serial paths.
Matrix sample(const CopulaModel& copula, std::size_t n, std::uint64_t seed);
Matrix sample_serial(const CopulaModel& copula, std::size_t n, std::uint64_t seed);

/// Joint density: copula density at the marginal CDF images times the
/// product of marginal densities; zero outside the support box.
double joint_density(const CopulaModel& copula, const Vector& g);

void save_copula(const CopulaModel& copula, const std::string& path,
                 const std::string& metadata_json = "{}");
CopulaModel load_copula(const std::string& path);

} // namespace uqnn
