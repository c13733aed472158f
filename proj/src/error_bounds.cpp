#include "uqnn/error_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "uqnn/jsonio.hpp"
#include "uqnn/rng.hpp"

namespace uqnn {

ErrorTrace exact_error(const FeedForwardNet& net, const Vector& mu, const Vector& z) {
    if (net.arch != Arch::Mlp)
        throw ValidationError("exact_error: recursion is defined for the MLP architecture");
    if (mu.size() != net.n_x() || z.size() != net.n_x())
        throw DimensionError("exact_error: mu/z length mismatch");

    const ForwardTrace trace = forward_trace(net, mu);
    const double alpha = net.alpha;
    const std::size_t depth = net.depth();

    ErrorTrace et;
    et.preactivations = trace.preactivations;
    et.perturbations.reserve(depth);
    et.layer_residuals.reserve(depth);
    et.flip_sets.resize(depth);

    Vector z_n = z;        // exact perturbation entering layer n
    Vector deviation;      // accumulated deviation from the linearized path
    for (std::size_t l = 0; l < depth; ++l) {
        const Vector& h = trace.preactivations[l];
        const Matrix& w = net.layers[l].weights;
        et.perturbations.push_back(z_n);

        const Vector wz = matvec(w, z_n);
        Vector residual(h.size(), 0.0);
        Vector z_next(h.size());
        for (std::size_t i = 0; i < h.size(); ++i) {
            const double perturbed = h[i] + wz[i];
            const double slope_unp = leaky_relu_prime(h[i], alpha);
            const double slope_pert = leaky_relu_prime(perturbed, alpha);
            if (slope_pert != slope_unp) {
                et.flip_sets[l].push_back(i);
                residual[i] = (slope_pert - slope_unp) * perturbed;
            }
            z_next[i] = slope_unp * wz[i] + residual[i];
        }

        if (l == 0) {
            deviation = residual;
        } else {
            // deviation_n = phi'(h_n) o (W_n deviation_{n-1}) + residual_n
            const Vector wd = matvec(w, deviation);
            deviation.assign(h.size(), 0.0);
            for (std::size_t i = 0; i < h.size(); ++i)
                deviation[i] = leaky_relu_prime(h[i], alpha) * wd[i] + residual[i];
        }
        et.layer_residuals.push_back(std::move(residual));
        z_n = std::move(z_next);
    }

    et.accumulated_residual = deviation;
    et.output_error = matvec(net.output_matrix, deviation);
    for (auto& e : et.output_error) e = std::fabs(e);
    return et;
}

double deterministic_bound(const FeedForwardNet& net, const Vector& mu, double beta,
                           std::size_t i) {
    if (i >= net.n_y()) throw ValidationError("deterministic_bound: output index out of range");
    if (beta < 0.0) throw ValidationError("deterministic_bound: beta must be >= 0");

    const double alpha = net.alpha;
    const std::size_t depth = net.depth();
    const ForwardTrace trace = forward_trace(net, mu);

    double a_row = 0.0;
    for (std::size_t j = 0; j < net.output_matrix.cols(); ++j)
        a_row += net.output_matrix(i, j) * net.output_matrix(i, j);
    a_row = std::sqrt(a_row);

    double bound = (1.0 - alpha) * std::sqrt(static_cast<double>(net.n_x())) * a_row *
                   spectral_norm(net.layers[depth - 1].weights) * beta;
    for (std::size_t l = 0; l + 1 < depth; ++l) {
        // ||phi'(h_n)||_inf is 1 as soon as any component is nonnegative.
        double slope_max = alpha;
        for (double h : trace.preactivations[l])
            if (h >= 0.0) {
                slope_max = 1.0;
                break;
            }
        bound *= (slope_max + (1.0 - alpha)) * spectral_norm(net.layers[l].weights);
    }
    return bound;
}

double bernstein_coefficient(std::size_t n_x, double delta) {
    if (!(delta > 0.0 && delta < 1.0))
        throw ValidationError("bernstein_coefficient: delta must lie in (0,1)");
    const double nx = static_cast<double>(n_x);
    const double log_term = std::log(1.0 / delta);
    return nx / 3.0 + std::sqrt(8.0 * nx * log_term / 45.0) + (2.0 / 3.0) * log_term;
}

double bernstein_z2_threshold(std::size_t n_x, double beta, double delta) {
    return beta * beta * bernstein_coefficient(n_x, delta);
}

double bernstein_bound(std::size_t n_x, double beta, double delta, double k_coeff) {
    return k_coeff * beta * std::sqrt(bernstein_coefficient(n_x, delta));
}

namespace {

constexpr std::size_t kHistBins = 64;
constexpr std::size_t kShardSize = 2048;

ErrorStats error_statistics_impl(const FeedForwardNet& net, const Vector& mu, double beta,
                                 std::size_t n, std::uint64_t seed, bool parallel) {
    if (n < 1) throw ValidationError("error_statistics: n must be >= 1");
    const std::size_t n_x = net.n_x();
    const std::size_t n_y = net.n_y();

    ErrorStats stats;
    stats.samples = n;
    stats.bins = kHistBins;
    stats.bound.resize(n_y);
    for (std::size_t i = 0; i < n_y; ++i) stats.bound[i] = deterministic_bound(net, mu, beta, i);

    const std::size_t n_shards = (n + kShardSize - 1) / kShardSize;
    std::vector<Vector> shard_max(n_shards), shard_sum(n_shards);
    std::vector<std::vector<std::size_t>> shard_hist(n_shards);
    std::vector<std::size_t> shard_violations(n_shards, 0);

    const CounterRng rng(seed);
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (long long s = 0; s < static_cast<long long>(n_shards); ++s) {
        Vector vmax(n_y, 0.0), vsum(n_y, 0.0);
        std::vector<std::size_t> hist(n_y * kHistBins, 0);
        std::size_t violations = 0;
        const std::size_t begin = static_cast<std::size_t>(s) * kShardSize;
        const std::size_t end = std::min(begin + kShardSize, n);
        Vector z(n_x);
        for (std::size_t k = begin; k < end; ++k) {
            const std::uint64_t base = static_cast<std::uint64_t>(k) * n_x;
            for (std::size_t i = 0; i < n_x; ++i) z[i] = rng.uniform_sym(base + i, beta);
            const ErrorTrace et = exact_error(net, mu, z);
            for (std::size_t i = 0; i < n_y; ++i) {
                const double e = et.output_error[i];
                vmax[i] = std::max(vmax[i], e);
                vsum[i] += e;
                if (e > stats.bound[i] * (1.0 + 1e-12) + 1e-300) ++violations;
                const double denom = stats.bound[i] > 0.0 ? stats.bound[i] : 1.0;
                const auto bin = std::min<std::size_t>(
                    kHistBins - 1,
                    static_cast<std::size_t>(e / denom * static_cast<double>(kHistBins)));
                ++hist[i * kHistBins + bin];
            }
        }
        shard_max[s] = std::move(vmax);
        shard_sum[s] = std::move(vsum);
        shard_hist[s] = std::move(hist);
        shard_violations[s] = violations;
    }

    stats.max_error.assign(n_y, 0.0);
    stats.mean_error.assign(n_y, 0.0);
    std::vector<std::size_t> counts(n_y * kHistBins, 0);
    for (std::size_t s = 0; s < n_shards; ++s) {
        for (std::size_t i = 0; i < n_y; ++i) {
            stats.max_error[i] = std::max(stats.max_error[i], shard_max[s][i]);
            stats.mean_error[i] += shard_sum[s][i];
        }
        for (std::size_t b = 0; b < counts.size(); ++b) counts[b] += shard_hist[s][b];
        stats.bound_violations += shard_violations[s];
    }
    for (auto& m : stats.mean_error) m /= static_cast<double>(n);

    stats.histogram = Matrix(n_y, kHistBins, 0.0);
    for (std::size_t i = 0; i < n_y; ++i) {
        const double denom = stats.bound[i] > 0.0 ? stats.bound[i] : 1.0;
        const double bin_width = denom / static_cast<double>(kHistBins);
        for (std::size_t b = 0; b < kHistBins; ++b)
            stats.histogram(i, b) = static_cast<double>(counts[i * kHistBins + b]) /
                                    (static_cast<double>(n) * bin_width);
    }
    return stats;
}

} // namespace

ErrorStats error_statistics(const FeedForwardNet& net, const Vector& mu, double beta,
                            std::size_t n, std::uint64_t seed) {
    return error_statistics_impl(net, mu, beta, n, seed, true);
}

ErrorStats error_statistics_serial(const FeedForwardNet& net, const Vector& mu, double beta,
                                   std::size_t n, std::uint64_t seed) {
    return error_statistics_impl(net, mu, beta, n, seed, false);
}

void save_error_report(const ErrorStats& stats, const std::string& json_path,
                       const std::string& csv_path, const std::string& metadata_json) {
    {
        std::ofstream out(json_path, std::ios::binary);
        if (!out) throw ParseError("cannot write file: " + json_path);
        out << "{\n  \"samples\": " << stats.samples << ",\n  \"max_error\": ";
        write_json_vector(out, stats.max_error);
        out << ",\n  \"mean_error\": ";
        write_json_vector(out, stats.mean_error);
        out << ",\n  \"deterministic_bound\": ";
        write_json_vector(out, stats.bound);
        out << ",\n  \"bound_violations\": " << stats.bound_violations
            << ",\n  \"metadata\": " << metadata_json << "\n}\n";
    }
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw ParseError("cannot write file: " + csv_path);
    csv << "component,bin_center,density\n";
    for (std::size_t i = 0; i < stats.histogram.rows(); ++i) {
        const double denom = stats.bound[i] > 0.0 ? stats.bound[i] : 1.0;
        const double bin_width = denom / static_cast<double>(stats.bins);
        for (std::size_t b = 0; b < stats.bins; ++b)
            csv << i << ',' << format_double((static_cast<double>(b) + 0.5) * bin_width) << ','
                << format_double(stats.histogram(i, b)) << '\n';
    }
}

} // namespace uqnn
