#include <doctest.h>

#include <cmath>

#include "uqnn/grid.hpp"

using namespace uqnn;

TEST_CASE("three-point Lobatto rule") {
    const GllGrid g = gll_grid(3);
    REQUIRE(g.n == 3);
    CHECK(g.nodes[0] == doctest::Approx(-1.0));
    CHECK(g.nodes[1] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(g.nodes[2] == doctest::Approx(1.0));
    CHECK(g.quad_weights[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(g.quad_weights[1] == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
    CHECK(g.quad_weights[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("two-point rule is the trapezoid on the endpoints") {
    const GllGrid g = gll_grid(2);
    CHECK(g.nodes[0] == -1.0);
    CHECK(g.nodes[1] == 1.0);
    CHECK(g.quad_weights[0] == doctest::Approx(1.0));
    CHECK(g.quad_weights[1] == doctest::Approx(1.0));
}

TEST_CASE("grid construction rejects n < 2") {
    CHECK_THROWS_AS(gll_grid(1), ValidationError);
}

TEST_CASE("node and weight structure") {
    for (std::size_t n : {5u, 16u, 31u, 64u}) {
        const GllGrid g = gll_grid(n);
        CHECK(g.nodes.front() == -1.0);
        CHECK(g.nodes.back() == 1.0);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(g.quad_weights[i] > 0.0);
            sum += g.quad_weights[i];
            if (i) CHECK(g.nodes[i] > g.nodes[i - 1]);
        }
        CHECK(sum == doctest::Approx(2.0).epsilon(1e-12));
    }
}

TEST_CASE("31-point rule integrates x^4 exactly") {
    const GllGrid g = gll_grid(31);
    Vector f(g.n);
    for (std::size_t i = 0; i < g.n; ++i) f[i] = std::pow(g.nodes[i], 4);
    CHECK(gll_integrate(g, f) == doctest::Approx(2.0 / 5.0).epsilon(1e-12));
}

TEST_CASE("Lobatto quadrature is exact for polynomials up to degree 2n-3") {
    for (std::size_t n : {4u, 9u, 31u}) {
        const GllGrid g = gll_grid(n);
        for (std::size_t k = 0; k <= 2 * n - 3; ++k) {
            Vector f(g.n);
            for (std::size_t i = 0; i < g.n; ++i) f[i] = std::pow(g.nodes[i], k);
            const double exact = (k % 2 == 0) ? 2.0 / static_cast<double>(k + 1) : 0.0;
            CHECK(std::fabs(gll_integrate(g, f) - exact) < 1e-12);
        }
    }
}

TEST_CASE("differentiation matrix reproduces monomial derivatives") {
    const GllGrid g = gll_grid(12);
    for (std::size_t k = 0; k < g.n; ++k) {
        Vector f(g.n), expected(g.n);
        for (std::size_t i = 0; i < g.n; ++i) {
            f[i] = std::pow(g.nodes[i], k);
            expected[i] = k == 0 ? 0.0 : static_cast<double>(k) * std::pow(g.nodes[i], k - 1);
        }
        const Vector df = matvec(g.diff_matrix, f);
        for (std::size_t i = 0; i < g.n; ++i) CHECK(std::fabs(df[i] - expected[i]) < 1e-8);
    }
}

TEST_CASE("differentiation matrix annihilates constants") {
    const GllGrid g = gll_grid(31);
    const Vector df = matvec(g.diff_matrix, Vector(g.n, 1.0));
    for (double v : df) CHECK(std::fabs(v) < 1e-10);
}

TEST_CASE("quadrature rejects mismatched value lengths") {
    const GllGrid g = gll_grid(5);
    CHECK_THROWS_AS(gll_integrate(g, Vector(4, 1.0)), DimensionError);
}
