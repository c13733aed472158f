#include <doctest.h>

#include <cmath>

#include "uqnn/marginal.hpp"
#include "uqnn/mc.hpp"
#include "uqnn/rng.hpp"

using namespace uqnn;

namespace {

Vector random_coeffs(std::size_t k, std::uint64_t seed) {
    Vector q(k);
    const CounterRng rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
        const double magnitude = 0.4 + 1.6 * rng.uniform(2 * i);
        q[i] = rng.uniform(2 * i + 1) < 0.5 ? -magnitude : magnitude;
    }
    return q;
}

// Direct simulation of the law: m + sum q_n z_n with z uniform.
Vector sample_law(double center, const Vector& q, double beta, std::size_t n,
                  std::uint64_t seed) {
    Vector out(n);
    const CounterRng rng(seed);
    std::uint64_t c = 0;
    for (std::size_t s = 0; s < n; ++s) {
        double acc = center;
        for (double qn : q) acc += qn * rng.uniform_sym(c++, beta);
        out[s] = acc;
    }
    return out;
}

} // namespace

TEST_CASE("characteristic function basics") {
    const MarginalLaw one(0.0, Vector{1.0}, 1.0);
    CHECK(one.characteristic(0.0) == 1.0);
    CHECK(std::fabs(one.characteristic(M_PI)) < 1e-15);

    const MarginalLaw two(0.0, Vector{1.0, 2.0}, 0.5);
    const double expected = (std::sin(0.5) / 0.5) * std::sin(1.0);
    CHECK(std::fabs(two.characteristic(1.0) - expected) < 1e-15);

    // Zero coefficients contribute unit factors.
    const MarginalLaw padded(0.0, Vector{1.0, 2.0, 0.0}, 0.5);
    CHECK(padded.characteristic(1.0) == two.characteristic(1.0));
}

TEST_CASE("single-term law is the exact uniform density") {
    const MarginalLaw law(3.0, Vector{1.0}, 1.0);
    CHECK(law.pdf(3.0) == 0.5);
    CHECK(law.pdf(3.9) == 0.5);
    CHECK(law.pdf(4.1) == 0.0);
    CHECK(law.pdf_rect_convolution(3.0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("two equal terms form the triangular density") {
    const MarginalLaw law(0.0, Vector{1.0, 1.0}, 1.0);
    // Apex 1/2 at the center; exact-DC tail makes this the slowest case.
    CHECK(law.pdf(0.0) == doctest::Approx(0.5).epsilon(2e-6));
    CHECK(law.pdf_rect_convolution(0.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(law.pdf_rect_convolution(1.0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(law.pdf(2.5) == 0.0);
}

TEST_CASE("three equal terms: rect-convolution oracle against Monte Carlo") {
    const MarginalLaw law(0.0, Vector{1.0, 1.0, 1.0}, 1.0);
    // Closed form gives 3/8 at the center.
    CHECK(law.pdf_rect_convolution(0.0) == doctest::Approx(0.375).epsilon(1e-12));

    // Frequency of |g| < half_bin against the oracle density.
    const std::size_t n = 2000000;
    const Vector draws = sample_law(0.0, Vector{1.0, 1.0, 1.0}, 1.0, n, 99);
    const double half_bin = 0.05;
    std::size_t hits = 0;
    for (double d : draws)
        if (std::fabs(d) < half_bin) ++hits;
    const double p_bin = static_cast<double>(hits) / (static_cast<double>(n) * 2.0 * half_bin);
    const double se = std::sqrt(0.375 / (static_cast<double>(n) * 2.0 * half_bin));
    CHECK(std::fabs(p_bin - 0.375) < 3.0 * se + 1e-3);
}

TEST_CASE("rect-convolution oracle rejects more than 20 terms") {
    CHECK_THROWS_AS(MarginalLaw(0.0, Vector(21, 1.0), 1.0).pdf_rect_convolution(0.0),
                    CapabilityError);
}

TEST_CASE("quadrature matches the rect-convolution oracle across K") {
    for (std::size_t k : {2u, 3u, 5u, 8u, 12u}) {
        const Vector q = random_coeffs(k, 7000 + k);
        const MarginalLaw law(1.5, q, 0.75);
        const double s = law.support_radius();
        for (int i = 0; i < 50; ++i) {
            const double g = 1.5 - s + (2.0 * s) * (static_cast<double>(i) + 0.5) / 50.0;
            CHECK(std::fabs(law.pdf(g) - law.pdf_rect_convolution(g)) < 1e-6);
        }
    }
}

TEST_CASE("density normalizes, is symmetric, and vanishes outside the support") {
    const Vector q = random_coeffs(5, 31);
    const MarginalLaw law(-2.0, q, 1.0);
    const double s = law.support_radius();

    // Independent normalization check on a fresh trapezoid grid.
    const std::size_t m = 8192;
    double mass = 0.0, var = 0.0;
    const double step = 2.0 * s / static_cast<double>(m);
    for (std::size_t i = 0; i <= m; ++i) {
        const double g = -2.0 - s + step * static_cast<double>(i);
        const double weight = (i == 0 || i == m) ? 0.5 : 1.0;
        const double p = law.pdf(g);
        mass += weight * p * step;
        var += weight * (g + 2.0) * (g + 2.0) * p * step;
    }
    CHECK(std::fabs(mass - 1.0) < 1e-6);
    CHECK(std::fabs(var - law.variance()) / law.variance() < 1e-4);

    for (double t : {0.1, 0.5, 1.2}) {
        CHECK(std::fabs(law.pdf(-2.0 + t) - law.pdf(-2.0 - t)) < 1e-10);
    }
    CHECK(law.pdf(-2.0 + s + 1e-9) == 0.0);
    CHECK(law.pdf(-2.0 - s - 1e-9) == 0.0);
}

TEST_CASE("zero coefficients leave the density unchanged bitwise") {
    const Vector q = random_coeffs(4, 55);
    Vector padded = q;
    padded.push_back(0.0);
    padded.insert(padded.begin(), 0.0);
    const MarginalLaw a(0.3, q, 0.8);
    const MarginalLaw b(0.3, padded, 0.8);
    for (double g : {0.3, 0.9, -0.4, 1.7}) CHECK(a.pdf(g) == b.pdf(g));
}

TEST_CASE("degenerate law throws on density queries") {
    const MarginalLaw law(1.0, Vector{0.0, 0.0}, 1.0);
    CHECK(law.degenerate());
    CHECK_THROWS_AS(law.pdf(1.0), DegenerateLawError);
    CHECK_THROWS_AS(law.cdf(1.0), DegenerateLawError);
    // beta = 0 collapses the same way.
    CHECK(MarginalLaw(1.0, Vector{1.0, 2.0}, 0.0).degenerate());
}

TEST_CASE("cdf endpoints, symmetry, and quantile round-trip") {
    const Vector q = random_coeffs(6, 77);
    const MarginalLaw law(0.5, q, 0.6);
    const double s = law.support_radius();
    CHECK(law.cdf(0.5 - s) == 0.0);
    CHECK(law.cdf(0.5 + s) == 1.0);
    CHECK(law.quantile(0.5) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK_THROWS_AS(law.quantile(-0.01), ValidationError);
    CHECK_THROWS_AS(law.quantile(1.01), ValidationError);

    for (double u : {0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99}) {
        const double g = law.quantile(u);
        CHECK(std::fabs(law.quantile(law.cdf(g)) - g) < 1e-8 * (1.0 + std::fabs(g)));
        CHECK(std::fabs(law.cdf(g) - u) < 1e-8);
    }
}

TEST_CASE("cdf agrees with the empirical distribution of simulated draws") {
    const Vector q = random_coeffs(4, 88);
    const double beta = 0.9;
    const MarginalLaw law(-1.0, q, beta);
    const std::size_t n = 1000000;
    const Vector draws = sample_law(-1.0, q, beta, n, 123);
    const double ks = ks_statistic(draws, [&](double g) { return law.cdf(g); });
    CHECK(ks < 0.002);
}

TEST_CASE("analytic moments of a sensitivity model") {
    SensitivityModel model;
    model.center = {1.0, -2.0};
    model.coefficients = Matrix(2, 3, 0.0);
    model.coefficients(0, 0) = 1.0; // q_1 = e_1
    model.coefficients(1, 1) = 2.0;
    model.coefficients(1, 2) = -1.0;
    model.beta = Vector(3, 1.0);
    const MomentSummary m = analytic_moments(model);
    CHECK(m.mean == model.center);
    CHECK(m.covariance(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(m.covariance(1, 1) == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
    CHECK(m.covariance(0, 1) == 0.0);
    CHECK(m.correlation(0, 0) == 1.0);
    CHECK(m.correlation(0, 1) == 0.0);

    model.beta = Vector(3, 0.0);
    const MomentSummary z = analytic_moments(model);
    CHECK(z.covariance(0, 0) == 0.0);
    CHECK(z.covariance(1, 1) == 0.0);
    CHECK(z.mean == model.center);
}

TEST_CASE("analytic variance tracks Monte Carlo through a random net") {
    // Random net with bias offsets chosen so no point of the beta-box can
    // flip a preactivation sign (verified below by interval propagation);
    // the linearized law is then exact and the comparison isolates the
    // moment formulas against the sampling chain.
    FeedForwardNet net = init_net(8, 6, 16, 3, 0.01, Arch::Mlp, 321);
    {
        const CounterRng rng(900);
        std::uint64_t c = 0;
        for (auto& layer : net.layers) {
            double* w = layer.weights.data();
            for (std::size_t i = 0; i < layer.weights.rows() * layer.weights.cols(); ++i)
                w[i] *= 0.4;
            for (auto& b : layer.bias) {
                b = (rng.uniform(c) < 0.5 ? -1.0 : 1.0) * (1.5 + rng.uniform(c + 1));
                c += 2;
            }
        }
    }
    const Vector mu = [&] {
        Vector v(8);
        const CounterRng rng(5);
        for (std::size_t i = 0; i < 8; ++i) v[i] = 0.3 * rng.normal(i);
        return v;
    }();
    const double beta = 0.1;

    {
        const ForwardTrace trace = forward_trace(net, mu);
        Vector reach(8, beta); // worst-case |perturbation| entering layer 1
        for (std::size_t l = 0; l < net.depth(); ++l) {
            const Matrix& w = net.layers[l].weights;
            Vector next(w.rows(), 0.0);
            for (std::size_t i = 0; i < w.rows(); ++i)
                for (std::size_t j = 0; j < w.cols(); ++j)
                    next[i] += std::fabs(w(i, j)) * reach[j];
            for (std::size_t i = 0; i < w.rows(); ++i) {
                REQUIRE(std::fabs(trace.preactivations[l][i]) > next[i]);
                next[i] *= 1.0; // slope magnitude never exceeds 1
            }
            reach = std::move(next);
        }
    }
    const SensitivityModel model = sensitivity(net, mu, beta);
    const MomentSummary analytic = analytic_moments(model);

    const Matrix z = sample_perturbations(8, beta, 1000000, 42);
    const Ensemble ens = push_forward(net, mu, z);
    const MomentSummary mc = empirical_moments(ens.samples);
    for (std::size_t j = 0; j < 6; ++j) {
        const double rel =
            std::fabs(analytic.covariance(j, j) - mc.covariance(j, j)) / mc.covariance(j, j);
        CHECK(rel < 0.01);
    }
}

TEST_CASE("parallel and serial cdf-grid builds are bit-identical") {
    const Vector q = random_coeffs(6, 99);
    const MarginalLaw parallel(0.0, q, 0.7, true);
    const MarginalLaw serial(0.0, q, 0.7, false);
    for (double u : {0.05, 0.25, 0.5, 0.75, 0.95})
        CHECK(parallel.quantile(u) == serial.quantile(u));
    for (double g : {-0.5, 0.0, 0.8}) CHECK(parallel.cdf(g) == serial.cdf(g));
}

TEST_CASE("batched and single-point densities agree") {
    for (std::size_t k : {2u, 4u, 9u}) {
        const Vector q = random_coeffs(k, 200 + k);
        const MarginalLaw law(0.4, q, 0.8);
        const double s = law.support_radius();
        Vector gs;
        for (int i = 0; i < 40; ++i)
            gs.push_back(0.4 - 1.1 * s + 2.2 * s * static_cast<double>(i) / 39.0);
        const Vector batched = law.pdf_many(gs);
        const Vector batched_serial = law.pdf_many(gs, false);
        CHECK(batched == batched_serial);
        for (std::size_t i = 0; i < gs.size(); ++i)
            CHECK(std::fabs(batched[i] - law.pdf(gs[i])) < 5e-7);
    }
}
