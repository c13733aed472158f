#include "uqnn/copula.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

#include "uqnn/jsonio.hpp"
#include "uqnn/rng.hpp"

namespace uqnn {

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

namespace {

// Acklam's rational approximation, accurate to ~1.15e-9; one Halley step
// against erfc brings it to full double precision.
double normal_quantile_acklam(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    double q, r, x;
    if (p < p_low) {
        q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        q = p - 0.5;
        r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    return x;
}

} // namespace

double std_normal_quantile(double u) {
    if (!(u > 0.0 && u < 1.0))
        throw ValidationError("std_normal_quantile: u = " + std::to_string(u) +
                              " outside (0,1)");
    double x = normal_quantile_acklam(u);
    // Halley refinement.
    const double e = std_normal_cdf(x) - u;
    const double f = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    x -= f / (1.0 + 0.5 * x * f);
    return x;
}

const GaussHermiteRule& gauss_hermite_64() {
    static const GaussHermiteRule rule = [] {
        constexpr std::size_t n = 64;
        Matrix jacobi(n, n, 0.0);
        for (std::size_t k = 1; k < n; ++k) {
            const double off = std::sqrt(static_cast<double>(k) / 2.0);
            jacobi(k - 1, k) = off;
            jacobi(k, k - 1) = off;
        }
        const EigResult eig = sym_eig(jacobi);
        GaussHermiteRule out;
        out.nodes = eig.values;
        out.weights.resize(n);
        const double mu0 = std::sqrt(M_PI);
        for (std::size_t k = 0; k < n; ++k)
            out.weights[k] = mu0 * eig.vectors(0, k) * eig.vectors(0, k);
        return out;
    }();
    return rule;
}

double copula_density(const Matrix& correlation, const Vector& u) {
    const std::size_t n = correlation.rows();
    if (u.size() != n) throw DimensionError("copula_density: u length mismatch");
    Vector z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = std_normal_quantile(u[i]);

    const Matrix chol = cholesky(correlation); // throws FactorizationError if singular
    // Solve R x = z through the factor.
    Vector y(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = z[i];
        for (std::size_t k = 0; k < i; ++k) acc -= chol(i, k) * y[k];
        y[i] = acc / chol(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        double acc = y[i];
        for (std::size_t k = i + 1; k < n; ++k) acc -= chol(k, i) * x[k];
        x[i] = acc / chol(i, i);
    }
    double log_det = 0.0;
    for (std::size_t i = 0; i < n; ++i) log_det += 2.0 * std::log(chol(i, i));
    double quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) quad += z[i] * (z[i] - x[i]);
    return std::exp(0.5 * quad - 0.5 * log_det);
}

double pair_moment(const MarginalLaw& law_i, const MarginalLaw& law_j, double rho) {
    if (!(std::fabs(rho) < 1.0))
        throw ValidationError("pair_moment: |rho| must be < 1, got " + std::to_string(rho));
    const GaussHermiteRule& gh = gauss_hermite_64();
    const std::size_t n = gh.nodes.size();
    const double mix = std::sqrt(1.0 - rho * rho);

    // First factor depends on the outer node only.
    Vector outer(n);
    for (std::size_t k = 0; k < n; ++k)
        outer[k] = law_i.quantile(std_normal_cdf(M_SQRT2 * gh.nodes[k]));

    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double inner = 0.0;
        for (std::size_t l = 0; l < n; ++l) {
            const double latent = M_SQRT2 * (rho * gh.nodes[k] + mix * gh.nodes[l]);
            inner += gh.weights[l] * law_j.quantile(std_normal_cdf(latent));
        }
        acc += gh.weights[k] * outer[k] * inner;
    }
    return acc / M_PI;
}

namespace {

constexpr double kRhoCap = 0.999;

// Golden-section search refined with parabolic steps (Brent) for the
// minimum of f on [lo, hi].
template <typename F>
double brent_minimize(F f, double lo, double hi, double init, double tol) {
    const double golden = 0.3819660112501051;
    double x = std::clamp(init, lo, hi), w = x, v = x;
    double fx = f(x), fw = fx, fv = fx;
    double d = 0.0, e = 0.0;
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double tol1 = tol * std::fabs(x) + 1e-12;
        if (std::fabs(x - mid) <= 2.0 * tol1 - 0.5 * (hi - lo)) break;
        bool parabolic_ok = false;
        if (std::fabs(e) > tol1) {
            const double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::fabs(q);
            const double e_old = e;
            e = d;
            if (std::fabs(p) < std::fabs(0.5 * q * e_old) && p > q * (lo - x) &&
                p < q * (hi - x)) {
                d = p / q;
                parabolic_ok = true;
            }
        }
        if (!parabolic_ok) {
            e = (x >= mid) ? lo - x : hi - x;
            d = golden * e;
        }
        const double u = (std::fabs(d) >= tol1) ? x + d : x + (d > 0 ? tol1 : -tol1);
        const double fu = f(u);
        if (fu <= fx) {
            if (u >= x) lo = x;
            else hi = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
        } else {
            if (u < x) lo = u;
            else hi = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }
    return x;
}

} // namespace

RhoFit fit_rho(const MarginalLaw& law_i, const MarginalLaw& law_j, double target_moment) {
    RhoFit fit;
    const double lo_val = pair_moment(law_i, law_j, -kRhoCap);
    const double hi_val = pair_moment(law_i, law_j, kRhoCap);
    if (target_moment <= std::min(lo_val, hi_val)) {
        fit.rho = lo_val <= hi_val ? -kRhoCap : kRhoCap;
        fit.clipped = true;
        return fit;
    }
    if (target_moment >= std::max(lo_val, hi_val)) {
        fit.rho = hi_val >= lo_val ? kRhoCap : -kRhoCap;
        fit.clipped = true;
        return fit;
    }
    const double sig_i = std::sqrt(law_i.variance());
    const double sig_j = std::sqrt(law_j.variance());
    const double cov = target_moment - law_i.center() * law_j.center();
    const double pearson = std::clamp(cov / (sig_i * sig_j), -kRhoCap, kRhoCap);

    auto residual = [&](double rho) {
        return std::fabs(pair_moment(law_i, law_j, rho) - target_moment);
    };
    fit.rho = brent_minimize(residual, -kRhoCap, kRhoCap, pearson, 1e-7);
    return fit;
}

CopulaModel build_copula(const SensitivityModel& model) {
    const std::size_t n = model.n_y();
    CopulaModel copula;
    copula.degenerate.assign(n, 0);
    copula.marginals.reserve(n);
    std::size_t live = 0;
    for (std::size_t j = 0; j < n; ++j) {
        copula.marginals.push_back(make_marginal(model, j));
        if (copula.marginals.back().degenerate()) copula.degenerate[j] = 1;
        else ++live;
    }
    if (live < 2)
        throw DegenerateLawError("build_copula: fewer than two components carry variance");

    const MomentSummary moments = analytic_moments(model);

    // Fit each upper-triangle pair independently; they are decoupled, so
    // the loop parallelizes with a deterministic assembly order.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (!copula.degenerate[i] && !copula.degenerate[j]) pairs.emplace_back(i, j);

    Matrix r = Matrix::identity(n);
    std::vector<std::uint8_t> clipped(pairs.size(), 0);
#pragma omp parallel for schedule(dynamic)
    for (long long p = 0; p < static_cast<long long>(pairs.size()); ++p) {
        const auto [i, j] = pairs[p];
        const double target =
            moments.mean[i] * moments.mean[j] + moments.covariance(i, j);
        const RhoFit fit = fit_rho(copula.marginals[i], copula.marginals[j], target);
        r(i, j) = fit.rho;
        r(j, i) = fit.rho;
        clipped[p] = fit.clipped ? 1 : 0;
    }
    for (std::size_t p = 0; p < pairs.size(); ++p)
        if (clipped[p]) copula.clipped_pairs.push_back(pairs[p]);

    copula.correlation = nearest_correlation(r);
    try {
        copula.cholesky_factor = cholesky(copula.correlation);
    } catch (const FactorizationError&) {
        // Repair may leave exact zero eigenvalues; a tiny ridge restores
        // strict positive definiteness.
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                copula.correlation(i, j) = (i == j)
                    ? 1.0
                    : copula.correlation(i, j) * (1.0 - 1e-10);
        copula.cholesky_factor = cholesky(copula.correlation);
    }
    return copula;
}

namespace {

Matrix sample_impl(const CopulaModel& copula, std::size_t n, std::uint64_t seed, bool parallel) {
    if (n < 1) throw ValidationError("sample: n must be >= 1");
    const std::size_t dim = copula.dim();
    Matrix out(n, dim);
    const CounterRng rng(seed);
#pragma omp parallel for schedule(static) if (parallel)
    for (long long k = 0; k < static_cast<long long>(n); ++k) {
        Vector h(dim);
        const std::uint64_t base = static_cast<std::uint64_t>(k) * dim;
        for (std::size_t i = 0; i < dim; ++i) h[i] = rng.normal(base + i);
        double* row = out.row(k);
        for (std::size_t i = 0; i < dim; ++i) {
            if (copula.degenerate[i]) {
                row[i] = copula.marginals[i].center();
                continue;
            }
            double s = 0.0;
            for (std::size_t j = 0; j <= i; ++j) s += copula.cholesky_factor(i, j) * h[j];
            row[i] = copula.marginals[i].quantile(std_normal_cdf(s));
        }
    }
    return out;
}

} // namespace

Matrix sample(const CopulaModel& copula, std::size_t n, std::uint64_t seed) {
    return sample_impl(copula, n, seed, true);
}

Matrix sample_serial(const CopulaModel& copula, std::size_t n, std::uint64_t seed) {
    return sample_impl(copula, n, seed, false);
}

double joint_density(const CopulaModel& copula, const Vector& g) {
    const std::size_t n = copula.dim();
    if (g.size() != n) throw DimensionError("joint_density: dimension mismatch");
    for (std::size_t i = 0; i < n; ++i)
        if (copula.degenerate[i])
            throw DegenerateLawError("joint_density: component " + std::to_string(i) +
                                     " is a point mass");
    Vector u(n);
    double marginal_product = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = copula.marginals[i].pdf(g[i]);
        if (p <= 0.0) return 0.0;
        marginal_product *= p;
        u[i] = copula.marginals[i].cdf(g[i]);
        if (u[i] <= 0.0 || u[i] >= 1.0) return 0.0;
    }

    // Same expression as copula_density but through the cached factor.
    Vector z(n), y(n), x(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = std_normal_quantile(u[i]);
    const Matrix& l = copula.cholesky_factor;
    for (std::size_t i = 0; i < n; ++i) {
        double acc = z[i];
        for (std::size_t k = 0; k < i; ++k) acc -= l(i, k) * y[k];
        y[i] = acc / l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        double acc = y[i];
        for (std::size_t k = i + 1; k < n; ++k) acc -= l(k, i) * x[k];
        x[i] = acc / l(i, i);
    }
    double log_det = 0.0, quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        log_det += 2.0 * std::log(l(i, i));
        quad += z[i] * (z[i] - x[i]);
    }
    return std::exp(0.5 * quad - 0.5 * log_det) * marginal_product;
}

void save_copula(const CopulaModel& copula, const std::string& path,
                 const std::string& metadata_json) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + path);
    out << "{\n  \"R\": ";
    write_json_matrix(out, copula.correlation);
    out << ",\n  \"rho_flags\": {\"clipped_pairs\": [";
    for (std::size_t p = 0; p < copula.clipped_pairs.size(); ++p) {
        if (p) out << ',';
        out << '[' << copula.clipped_pairs[p].first << ',' << copula.clipped_pairs[p].second
            << ']';
    }
    out << "]},\n  \"marginals\": [\n";
    for (std::size_t j = 0; j < copula.dim(); ++j) {
        const auto& law = copula.marginals[j];
        out << "    {\"center\": " << format_double(law.center()) << ", \"half_widths\": ";
        write_json_vector(out, law.half_widths());
        out << (j + 1 < copula.dim() ? "},\n" : "}\n");
    }
    out << "  ],\n  \"fit\": {\"quadrature\": \"gauss-hermite-64x64\", \"optimizer\": "
           "\"brent-golden-parabolic\", \"rho_tolerance\": 1e-7, \"rho_cap\": 0.999},\n"
           "  \"metadata\": " << metadata_json << "\n}\n";
}

CopulaModel load_copula(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const std::exception& e) {
        throw ParseError(path + ": bad JSON: " + e.what());
    }
    CopulaModel copula;
    try {
        const auto& r = j.at("R");
        const std::size_t n = r.size();
        copula.correlation = Matrix(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) copula.correlation(i, k) = r[i][k].get<double>();
        for (const auto& pair_json : j.at("rho_flags").at("clipped_pairs"))
            copula.clipped_pairs.emplace_back(pair_json[0].get<std::size_t>(),
                                              pair_json[1].get<std::size_t>());
        for (const auto& m : j.at("marginals")) {
            const double center = m.at("center").get<double>();
            const Vector widths = m.at("half_widths").get<Vector>();
            copula.marginals.emplace_back(center, widths, Vector(widths.size(), 1.0));
            copula.degenerate.push_back(copula.marginals.back().degenerate() ? 1 : 0);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    if (copula.correlation.rows() != copula.dim())
        throw ParseError(path + ": R size disagrees with marginal count");
    copula.cholesky_factor = cholesky(copula.correlation);
    return copula;
}

} // namespace uqnn
