#include "uqnn/mc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "uqnn/jsonio.hpp"
#include "uqnn/rng.hpp"

namespace uqnn {

namespace {

Matrix sample_perturbations_impl(std::size_t n_x, double beta, std::size_t n,
                                 std::uint64_t seed, bool parallel) {
    if (n < 1) throw ValidationError("sample_perturbations: n must be >= 1");
    if (beta < 0.0) throw ValidationError("sample_perturbations: beta must be >= 0");
    Matrix z(n, n_x);
    const CounterRng rng(seed);
#pragma omp parallel for schedule(static) if (parallel)
    for (long long k = 0; k < static_cast<long long>(n); ++k) {
        double* row = z.row(k);
        const std::uint64_t base = static_cast<std::uint64_t>(k) * n_x;
        for (std::size_t i = 0; i < n_x; ++i) row[i] = rng.uniform_sym(base + i, beta);
    }
    return z;
}

Ensemble push_forward_impl(const FeedForwardNet& net, const Vector& mu,
                           const Matrix& perturbations, bool parallel) {
    if (perturbations.cols() != net.n_x() || mu.size() != net.n_x())
        throw DimensionError("push_forward: perturbation width or mu length mismatch");
    Ensemble ens;
    ens.samples = Matrix(perturbations.rows(), net.n_y());
    ens.net_fingerprint = network_fingerprint(net);
#pragma omp parallel for schedule(static) if (parallel)
    for (long long k = 0; k < static_cast<long long>(perturbations.rows()); ++k) {
        Vector f(mu);
        const double* zrow = perturbations.row(k);
        for (std::size_t i = 0; i < f.size(); ++i) f[i] += zrow[i];
        const Vector g = forward(net, f);
        std::copy(g.begin(), g.end(), ens.samples.row(k));
    }
    return ens;
}

constexpr std::size_t kMomentShard = 4096;

} // namespace

Matrix sample_perturbations(std::size_t n_x, double beta, std::size_t n, std::uint64_t seed) {
    return sample_perturbations_impl(n_x, beta, n, seed, true);
}

Matrix sample_perturbations_serial(std::size_t n_x, double beta, std::size_t n,
                                   std::uint64_t seed) {
    return sample_perturbations_impl(n_x, beta, n, seed, false);
}

Ensemble push_forward(const FeedForwardNet& net, const Vector& mu, const Matrix& perturbations) {
    return push_forward_impl(net, mu, perturbations, true);
}

Ensemble push_forward_serial(const FeedForwardNet& net, const Vector& mu,
                             const Matrix& perturbations) {
    return push_forward_impl(net, mu, perturbations, false);
}

MomentSummary empirical_moments(const Matrix& samples) {
    const std::size_t n = samples.rows();
    const std::size_t d = samples.cols();
    if (n < 2) throw ValidationError("empirical_moments: need at least 2 samples");

    // Two-pass estimate with fixed-size shards merged in index order, so
    // the result does not depend on the thread count.
    const std::size_t n_shards = (n + kMomentShard - 1) / kMomentShard;
    std::vector<Vector> shard_mean(n_shards);
#pragma omp parallel for schedule(static)
    for (long long s = 0; s < static_cast<long long>(n_shards); ++s) {
        Vector acc(d, 0.0);
        const std::size_t begin = static_cast<std::size_t>(s) * kMomentShard;
        const std::size_t end = std::min(begin + kMomentShard, n);
        for (std::size_t k = begin; k < end; ++k) {
            const double* row = samples.row(k);
            for (std::size_t j = 0; j < d; ++j) acc[j] += row[j];
        }
        shard_mean[s] = std::move(acc);
    }
    MomentSummary out;
    out.mean.assign(d, 0.0);
    for (std::size_t s = 0; s < n_shards; ++s)
        for (std::size_t j = 0; j < d; ++j) out.mean[j] += shard_mean[s][j];
    for (auto& m : out.mean) m /= static_cast<double>(n);

    std::vector<Matrix> shard_cov(n_shards);
#pragma omp parallel for schedule(static)
    for (long long s = 0; s < static_cast<long long>(n_shards); ++s) {
        Matrix acc(d, d, 0.0);
        const std::size_t begin = static_cast<std::size_t>(s) * kMomentShard;
        const std::size_t end = std::min(begin + kMomentShard, n);
        Vector c(d);
        for (std::size_t k = begin; k < end; ++k) {
            const double* row = samples.row(k);
            for (std::size_t j = 0; j < d; ++j) c[j] = row[j] - out.mean[j];
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = i; j < d; ++j) acc(i, j) += c[i] * c[j];
        }
        shard_cov[s] = std::move(acc);
    }
    out.covariance = Matrix(d, d, 0.0);
    for (std::size_t s = 0; s < n_shards; ++s)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i; j < d; ++j) out.covariance(i, j) += shard_cov[s](i, j);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            out.covariance(i, j) /= static_cast<double>(n - 1);
            out.covariance(j, i) = out.covariance(i, j);
        }

    out.correlation = Matrix(d, d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        const double vi = out.covariance(i, i);
        out.correlation(i, i) = 1.0;
        if (vi <= 0.0) continue;
        for (std::size_t j = i + 1; j < d; ++j) {
            const double vj = out.covariance(j, j);
            if (vj <= 0.0) continue;
            const double r = out.covariance(i, j) / std::sqrt(vi * vj);
            out.correlation(i, j) = r;
            out.correlation(j, i) = r;
        }
    }
    return out;
}

Curve histogram_pdf(const Vector& samples, std::size_t bins) {
    if (samples.empty()) throw ValidationError("histogram_pdf: empty sample set");
    Vector sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted.front();
    const double hi = sorted.back();
    const double range = hi - lo;

    if (bins == 0) {
        // Freedman-Diaconis width, floored at 40 bins.
        const double q1 = sorted[sorted.size() / 4];
        const double q3 = sorted[(sorted.size() * 3) / 4];
        const double iqr = q3 - q1;
        const double width = 2.0 * iqr / std::cbrt(static_cast<double>(sorted.size()));
        bins = 40;
        if (width > 0.0 && range > 0.0)
            bins = std::max<std::size_t>(40, static_cast<std::size_t>(std::ceil(range / width)));
        bins = std::min<std::size_t>(bins, 100000);
    }

    Curve curve;
    curve.x.resize(bins);
    curve.y.assign(bins, 0.0);
    if (range <= 0.0) {
        // Point mass: single spike bin, still normalized.
        for (std::size_t b = 0; b < bins; ++b) curve.x[b] = lo + static_cast<double>(b);
        curve.y[0] = 1.0;
        return curve;
    }
    const double bin_width = range / static_cast<double>(bins);
    for (std::size_t b = 0; b < bins; ++b)
        curve.x[b] = lo + (static_cast<double>(b) + 0.5) * bin_width;
    std::vector<std::size_t> counts(bins, 0);
    for (double v : sorted) {
        auto b = static_cast<std::size_t>((v - lo) / bin_width);
        if (b >= bins) b = bins - 1;
        ++counts[b];
    }
    const double norm = 1.0 / (static_cast<double>(samples.size()) * bin_width);
    for (std::size_t b = 0; b < bins; ++b) curve.y[b] = static_cast<double>(counts[b]) * norm;
    return curve;
}

double l1_distance(const Curve& a, const Curve& b) {
    if (a.x.size() != b.x.size()) throw ValidationError("l1_distance: abscissae count mismatch");
    for (std::size_t i = 0; i < a.x.size(); ++i)
        if (std::fabs(a.x[i] - b.x[i]) > 1e-12 * std::max(1.0, std::fabs(a.x[i])))
            throw ValidationError("l1_distance: abscissae differ at index " + std::to_string(i));
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < a.x.size(); ++i) {
        const double f0 = std::fabs(a.y[i] - b.y[i]);
        const double f1 = std::fabs(a.y[i + 1] - b.y[i + 1]);
        acc += 0.5 * (f0 + f1) * (a.x[i + 1] - a.x[i]);
    }
    return acc;
}

double ks_statistic(const Vector& samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw ValidationError("ks_statistic: empty sample set");
    Vector sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
        d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

void save_ensemble_csv(const Ensemble& ens, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + path);
    out << "# seed = " << ens.seed << "\n# beta = " << format_double(ens.beta)
        << "\n# net_fingerprint = " << ens.net_fingerprint << "\n# rng = " << kRngName << "\n";
    for (std::size_t k = 0; k < ens.samples.rows(); ++k)
        write_csv_row(out, ens.samples.row_vector(k));
}

Ensemble load_ensemble_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    Ensemble ens;
    std::vector<Vector> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = line.substr(1, eq - 1);
            const std::string value = line.substr(eq + 1);
            auto trim = [](std::string s) {
                s.erase(0, s.find_first_not_of(" \t"));
                s.erase(s.find_last_not_of(" \t\r") + 1);
                return s;
            };
            const std::string k = trim(key), v = trim(value);
            if (k == "seed") ens.seed = std::stoull(v);
            else if (k == "beta") ens.beta = std::stod(v);
            else if (k == "net_fingerprint") ens.net_fingerprint = v;
            continue;
        }
        rows.push_back(parse_csv_row(line, line_no));
        if (rows.size() > 1 && rows.back().size() != rows.front().size())
            throw ParseError(path + " line " + std::to_string(line_no) + ": ragged row");
    }
    if (rows.empty()) throw ParseError(path + ": no sample rows");
    ens.samples = Matrix(rows.size(), rows.front().size());
    for (std::size_t k = 0; k < rows.size(); ++k) ens.samples.set_row(k, rows[k]);
    return ens;
}

} // namespace uqnn
