#include "uqnn/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace uqnn {

namespace {

constexpr std::size_t kCdfGridSize = 4096;
constexpr std::size_t kMaxRectTerms = 20;
constexpr double kPointBudget = 3e6; // hard cap on trapezoid terms per eval

inline double sinc(double x) {
    if (std::fabs(x) < 1e-8) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

} // namespace

MarginalLaw::MarginalLaw(double center, const Vector& coeffs, double beta, bool parallel_build)
    : MarginalLaw(center, coeffs, Vector(coeffs.size(), beta), parallel_build) {}

MarginalLaw::MarginalLaw(double center, const Vector& coeffs, const Vector& beta,
                         bool parallel_build)
    : center_(center) {
    if (coeffs.size() != beta.size())
        throw DimensionError("MarginalLaw: coefficient/amplitude length mismatch");
    double max_abs = 0.0;
    for (double q : coeffs) max_abs = std::max(max_abs, std::fabs(q));
    // Coefficients below 1e-13 of the largest are treated as exact zeros.
    const double cutoff = 1e-13 * max_abs;
    for (std::size_t n = 0; n < coeffs.size(); ++n) {
        const double w = beta[n] * std::fabs(coeffs[n]);
        if (!(beta[n] >= 0.0)) throw ValidationError("MarginalLaw: negative amplitude");
        if (std::fabs(coeffs[n]) > cutoff && w > 0.0) half_widths_.push_back(w);
    }
    std::sort(half_widths_.begin(), half_widths_.end(), std::greater<double>());
    for (double w : half_widths_) radius_ += w;
    if (!degenerate()) build_cdf_grid(parallel_build);
}

double MarginalLaw::characteristic(double a) const {
    double prod = 1.0;
    for (double w : half_widths_) prod *= sinc(a * w);
    return prod;
}

double MarginalLaw::variance() const {
    double acc = 0.0;
    for (double w : half_widths_) acc += w * w;
    return acc / 3.0;
}

// Inversion integral p = (1/pi) * integral of cos(a eta) * prod sinc(w_n a)
// over a >= 0. The integrand is band-limited (it is the Fourier transform
// of a compactly supported density), so a trapezoid step of
// pi / (8 (s + |eta|)) introduces no discretization error at all; the only
// error is truncation. Truncation stops at whichever comes first:
//   - certified: the decreasing envelope prod min(1, 1/(w_n a)) integrates
//     to < 1e-9 beyond A (needs at least two factors past their first lobe),
//   - observed: three consecutive doublings of A each moved the result by
//     less than 5e-8,
//   - a hard budget of 3e6 terms.
double MarginalLaw::pdf_eta(double eta_abs) const {
    const std::size_t k_terms = half_widths_.size();
    if (k_terms == 1) return 0.5 / half_widths_[0];

    const double da = M_PI / (8.0 * (radius_ + eta_abs));
    const double w_max = half_widths_.front();

    double sum = 0.5; // k = 0 term: cos(0) * prod sinc(0) = 1
    double a_target = 16.0 / w_max;
    std::size_t k = 1;
    double prev_value = 0.0;
    int quiet_doublings = 0;

    while (true) {
        for (; static_cast<double>(k) * da <= a_target; ++k) {
            const double a = static_cast<double>(k) * da;
            double f = std::cos(a * eta_abs);
            for (double w : half_widths_) f *= sinc(a * w);
            sum += f;
        }
        const double value = sum * da / M_PI;
        const double a_reached = static_cast<double>(k) * da;

        // Certified envelope tail.
        std::size_t past_lobe = 0;
        double env = 1.0;
        for (double w : half_widths_) {
            if (w * a_reached > 1.0) {
                ++past_lobe;
                env /= w * a_reached;
            }
        }
        if (past_lobe >= 2 &&
            env * a_reached / (M_PI * static_cast<double>(past_lobe - 1)) < 1e-9)
            return std::max(value, 0.0);

        // Observed convergence; only trusted once well past the first lobes.
        if (a_reached * w_max >= 64.0) {
            if (std::fabs(value - prev_value) < 5e-8) {
                if (++quiet_doublings >= 3) return std::max(value, 0.0);
            } else {
                quiet_doublings = 0;
            }
        }
        prev_value = value;

        if (static_cast<double>(k) > kPointBudget) return std::max(value, 0.0);
        a_target *= 2.0;
    }
}

double MarginalLaw::pdf(double g) const {
    if (degenerate())
        throw DegenerateLawError("pdf: all coefficients vanish (point mass at " +
                                 std::to_string(center_) + ")");
    const double eta = std::fabs(g - center_);
    if (eta >= radius_) return 0.0;
    return pdf_eta(eta);
}

// Shared-sample variant: one characteristic-function stream serves every
// abscissa, and the per-point cosines advance by a three-term rotation
// recurrence re-anchored each block to keep rounding drift negligible.
Vector MarginalLaw::pdf_many(const Vector& gs, bool parallel) const {
    if (degenerate())
        throw DegenerateLawError("pdf_many: all coefficients vanish (point mass at " +
                                 std::to_string(center_) + ")");
    const std::size_t n_pts = gs.size();
    Vector out(n_pts, 0.0);
    if (n_pts == 0) return out;

    std::vector<std::size_t> active;
    Vector etas;
    double eta_max = 0.0;
    for (std::size_t i = 0; i < n_pts; ++i) {
        const double eta = std::fabs(gs[i] - center_);
        if (eta >= radius_) continue;
        active.push_back(i);
        etas.push_back(eta);
        eta_max = std::max(eta_max, eta);
    }
    if (active.empty()) return out;
    if (half_widths_.size() == 1) {
        for (std::size_t i : active) out[i] = 0.5 / half_widths_[0];
        return out;
    }

    const double da = M_PI / (8.0 * (radius_ + eta_max));
    const double w_max = half_widths_.front();

    const std::size_t n_active = active.size();
    Vector sums(n_active, 0.5), prev(n_active, 0.0);
    constexpr std::size_t kBlock = 4096;
    Vector phi(kBlock);

    double a_target = 16.0 / w_max;
    std::size_t k = 1;
    int quiet_doublings = 0;
    bool done = false;
    while (!done) {
        while (static_cast<double>(k) * da <= a_target) {
            const std::size_t block = std::min<std::size_t>(
                kBlock,
                static_cast<std::size_t>(a_target / da) - k + 1);
            for (std::size_t b = 0; b < block; ++b) {
                const double a = static_cast<double>(k + b) * da;
                double f = 1.0;
                for (double w : half_widths_) f *= sinc(a * w);
                phi[b] = f;
            }
#pragma omp parallel for schedule(static) if (parallel && n_active >= 64)
            for (long long ii = 0; ii < static_cast<long long>(n_active); ++ii) {
                const double theta = etas[ii] * da;
                const double two_cos = 2.0 * std::cos(theta);
                double c_prev = std::cos(static_cast<double>(k - 1) * theta);
                double c_cur = std::cos(static_cast<double>(k) * theta);
                double acc = 0.0;
                for (std::size_t b = 0; b < block; ++b) {
                    acc += phi[b] * c_cur;
                    const double c_next = two_cos * c_cur - c_prev;
                    c_prev = c_cur;
                    c_cur = c_next;
                }
                sums[ii] += acc;
            }
            k += block;
        }
        const double a_reached = static_cast<double>(k) * da;

        std::size_t past_lobe = 0;
        double env = 1.0;
        for (double w : half_widths_) {
            if (w * a_reached > 1.0) {
                ++past_lobe;
                env /= w * a_reached;
            }
        }
        if (past_lobe >= 2 &&
            env * a_reached / (M_PI * static_cast<double>(past_lobe - 1)) < 1e-9) {
            done = true;
        } else if (a_reached * w_max >= 64.0) {
            double worst = 0.0;
            for (std::size_t ii = 0; ii < n_active; ++ii)
                worst = std::max(worst, std::fabs(sums[ii] - prev[ii]) * da / M_PI);
            if (worst < 5e-8) {
                if (++quiet_doublings >= 3) done = true;
            } else {
                quiet_doublings = 0;
            }
        }
        prev = sums;
        if (static_cast<double>(k) > kPointBudget) done = true;
        a_target *= 2.0;
    }

    for (std::size_t ii = 0; ii < n_active; ++ii)
        out[active[ii]] = std::max(sums[ii] * da / M_PI, 0.0);
    return out;
}

double MarginalLaw::pdf_rect_convolution(double g) const {
    if (degenerate())
        throw DegenerateLawError("pdf_rect_convolution: all coefficients vanish");
    const std::size_t k_terms = half_widths_.size();
    if (k_terms > kMaxRectTerms)
        throw CapabilityError("pdf_rect_convolution: " + std::to_string(k_terms) +
                              " active terms exceed the 2^K expansion limit of " +
                              std::to_string(kMaxRectTerms));
    const double eta = g - center_;
    if (std::fabs(eta) >= radius_) return 0.0;

    // p(eta) = [ (K-1)! 2^K prod w ]^{-1} sum over sign vectors of
    //          (prod sigma) (eta + sum sigma w)_+^{K-1}
    double prefactor = 1.0;
    for (std::size_t i = 2; i < k_terms; ++i) prefactor *= static_cast<double>(i); // (K-1)!
    for (double w : half_widths_) prefactor *= 2.0 * w;

    double acc = 0.0;
    const std::size_t combos = std::size_t{1} << k_terms;
    for (std::size_t mask = 0; mask < combos; ++mask) {
        double shifted = eta;
        bool negative_parity = false;
        for (std::size_t n = 0; n < k_terms; ++n) {
            if (mask & (std::size_t{1} << n)) {
                shifted -= half_widths_[n];
                negative_parity = !negative_parity;
            } else {
                shifted += half_widths_[n];
            }
        }
        if (shifted <= 0.0) continue;
        double term = 1.0;
        for (std::size_t p = 1; p < k_terms; ++p) term *= shifted;
        acc += negative_parity ? -term : term;
    }
    return acc / prefactor;
}

void MarginalLaw::build_cdf_grid(bool parallel) {
    grid_g_.resize(kCdfGridSize);
    const double lo = center_ - radius_;
    const double step = 2.0 * radius_ / static_cast<double>(kCdfGridSize - 1);
    for (std::size_t i = 0; i < kCdfGridSize; ++i)
        grid_g_[i] = lo + step * static_cast<double>(i);
    grid_g_.back() = center_ + radius_;

    const Vector density = pdf_many(grid_g_, parallel);

    grid_cdf_.assign(kCdfGridSize, 0.0);
    for (std::size_t i = 1; i < kCdfGridSize; ++i)
        grid_cdf_[i] = grid_cdf_[i - 1] + 0.5 * step * (density[i - 1] + density[i]);
    const double total = grid_cdf_.back();
    if (!(total > 0.0)) throw DegenerateLawError("cdf grid: zero total mass");
    for (auto& c : grid_cdf_) c /= total;
    grid_cdf_.back() = 1.0;

    // Hermite slopes are the (normalized) density values, limited per
    // Fritsch-Carlson so the interpolant is monotone.
    grid_slope_.resize(kCdfGridSize);
    for (std::size_t i = 0; i < kCdfGridSize; ++i) grid_slope_[i] = density[i] / total;
    for (std::size_t i = 0; i + 1 < kCdfGridSize; ++i) {
        const double delta = (grid_cdf_[i + 1] - grid_cdf_[i]) / step;
        const double cap = 3.0 * delta;
        grid_slope_[i] = std::min(grid_slope_[i], cap);
        grid_slope_[i + 1] = std::min(grid_slope_[i + 1], cap);
    }
}

namespace {

// Cubic Hermite on [x0, x1] with values y0,y1 and slopes d0,d1.
double hermite(double x, double x0, double h, double y0, double y1, double d0, double d1) {
    const double t = (x - x0) / h;
    const double t2 = t * t, t3 = t2 * t;
    return y0 * (2 * t3 - 3 * t2 + 1) + h * d0 * (t3 - 2 * t2 + t) + y1 * (-2 * t3 + 3 * t2) +
           h * d1 * (t3 - t2);
}

} // namespace

double MarginalLaw::cdf(double g) const {
    if (degenerate()) throw DegenerateLawError("cdf: point mass");
    if (g <= grid_g_.front()) return 0.0;
    if (g >= grid_g_.back()) return 1.0;
    const auto it = std::upper_bound(grid_g_.begin(), grid_g_.end(), g);
    const std::size_t j = static_cast<std::size_t>(it - grid_g_.begin()) - 1;
    const double h = grid_g_[j + 1] - grid_g_[j];
    const double v = hermite(g, grid_g_[j], h, grid_cdf_[j], grid_cdf_[j + 1], grid_slope_[j],
                             grid_slope_[j + 1]);
    return std::clamp(v, 0.0, 1.0);
}

double MarginalLaw::quantile(double u) const {
    if (degenerate()) throw DegenerateLawError("quantile: point mass");
    if (!(u >= 0.0 && u <= 1.0))
        throw ValidationError("quantile: u = " + std::to_string(u) + " outside [0,1]");
    if (u <= 0.0) return grid_g_.front();
    if (u >= 1.0) return grid_g_.back();

    const auto it = std::upper_bound(grid_cdf_.begin(), grid_cdf_.end(), u);
    std::size_t j = static_cast<std::size_t>(it - grid_cdf_.begin());
    j = (j == 0) ? 0 : j - 1;
    while (j + 2 < grid_cdf_.size() && grid_cdf_[j + 1] <= u) ++j;

    double lo = grid_g_[j], hi = grid_g_[j + 1];
    const double h = hi - lo;
    for (int it2 = 0; it2 < 200; ++it2) {
        const double mid = 0.5 * (lo + hi);
        const double v = hermite(mid, grid_g_[j], h, grid_cdf_[j], grid_cdf_[j + 1],
                                 grid_slope_[j], grid_slope_[j + 1]);
        if (v < u) lo = mid;
        else hi = mid;
        if (hi - lo < 1e-10 * std::max(1.0, std::fabs(hi))) break;
    }
    return 0.5 * (lo + hi);
}

MomentSummary analytic_moments(const SensitivityModel& model) {
    const std::size_t n_y = model.n_y();
    const std::size_t n_x = model.n_x();
    MomentSummary out;
    out.mean = model.center;
    out.covariance = Matrix(n_y, n_y, 0.0);
    for (std::size_t i = 0; i < n_y; ++i) {
        for (std::size_t j = i; j < n_y; ++j) {
            double acc = 0.0;
            for (std::size_t n = 0; n < n_x; ++n)
                acc += model.beta[n] * model.beta[n] * model.coefficients(i, n) *
                       model.coefficients(j, n);
            out.covariance(i, j) = acc / 3.0;
            out.covariance(j, i) = out.covariance(i, j);
        }
    }
    out.correlation = Matrix(n_y, n_y, 0.0);
    for (std::size_t i = 0; i < n_y; ++i) {
        const double vi = out.covariance(i, i);
        if (vi <= 0.0) {
            out.correlation(i, i) = 1.0; // degenerate component pinned to e_i
            continue;
        }
        out.correlation(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n_y; ++j) {
            const double vj = out.covariance(j, j);
            if (vj <= 0.0) continue;
            const double r = out.covariance(i, j) / std::sqrt(vi * vj);
            out.correlation(i, j) = r;
            out.correlation(j, i) = r;
        }
    }
    return out;
}

MarginalLaw make_marginal(const SensitivityModel& model, std::size_t j, bool parallel_build) {
    if (j >= model.n_y())
        throw ValidationError("make_marginal: component " + std::to_string(j) + " out of range");
    return MarginalLaw(model.center[j], model.coefficients.row_vector(j), model.beta,
                       parallel_build);
}

} // namespace uqnn
