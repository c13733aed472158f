#pragma once

#include "uqnn/linearize.hpp"

namespace uqnn {

/// Analytic law of one output component under the linearized surrogate:
/// g_j = m_j + q_j . z with z uniform, i.e. a shifted sum of independent
/// uniform terms with half-widths w_n = beta_n |q_jn|.
///
/// Construction precomputes a 4096-point CDF grid over the support;
/// afterwards every query is read-only and thread-safe.
class MarginalLaw {
  public:
    MarginalLaw(double center, const Vector& coeffs, const Vector& beta,
                bool parallel_build = true);
    MarginalLaw(double center, const Vector& coeffs, double beta, bool parallel_build = true);

    double center() const { return center_; }
    double support_radius() const { return radius_; }
    std::size_t active_terms() const { return half_widths_.size(); }
    const Vector& half_widths() const { return half_widths_; }

    /// All coefficients vanish: the law is a point mass at the center and
    /// pdf/cdf/quantile queries throw DegenerateLawError.
    bool degenerate() const { return half_widths_.empty(); }

    /// Characteristic function: product of sinc(a w_n) over active terms.
    double characteristic(double a) const;

    /// Density by truncated-trapezoid inversion of the characteristic
    /// function. Zero outside the support without quadrature; exact for a
    /// single active term.
    double pdf(double g) const;

    /// Density at many abscissae in one pass: the characteristic-function
    /// samples are shared across evaluation points, which is what makes
    /// CDF grids and curve exports cheap. Same definition as pdf().
    Vector pdf_many(const Vector& gs, bool parallel = true) const;

    /// Direct evaluation of the iterated rectangle convolution (signed
    /// power form). Limited to 20 active terms (2^K expansion).
    double pdf_rect_convolution(double g) const;

    double cdf(double g) const;

    /// Inverse CDF; u must lie in [0,1].
    double quantile(double u) const;

    /// Analytic variance: sum of w_n^2 / 3.
    double variance() const;

  private:
    void build_cdf_grid(bool parallel);
    double pdf_eta(double eta_abs) const;

    double center_ = 0.0;
    Vector half_widths_; // positive, descending
    double radius_ = 0.0;

    Vector grid_g_;      // uniform over the support
    Vector grid_cdf_;    // normalized cumulative trapezoid
    Vector grid_slope_;  // Fritsch-Carlson limited slopes for the interpolant
};

struct MomentSummary {
    Vector mean;
    Matrix covariance;  // n_y x n_y
    Matrix correlation; // unit diagonal where variance > 0
};

/// Closed-form moments of the linearized output: mean m,
/// Cov(g_i, g_j) = (1/3) sum_n beta_n^2 q_in q_jn.
MomentSummary analytic_moments(const SensitivityModel& model);

/// Marginal law of output component j.
MarginalLaw make_marginal(const SensitivityModel& model, std::size_t j,
                          bool parallel_build = true);

} // namespace uqnn
