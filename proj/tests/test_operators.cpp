#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "uqnn/jsonio.hpp"
#include "uqnn/operators.hpp"
#include "uqnn/rng.hpp"

using namespace uqnn;

namespace {

// Dense composite-Simpson oracle on the continuous integrand, independent
// of the collocation grid and differentiation matrix. Takes polynomial
// coefficients so f' is analytic.
double simpson_output(const Vector& poly, double y, bool nonlinear, std::size_t panels = 2000) {
    auto eval = [&](double x) {
        double p = 0.0;
        for (std::size_t k = poly.size(); k-- > 0;) p = p * x + poly[k];
        return p;
    };
    auto eval_deriv = [&](double x) {
        double d = 0.0;
        for (std::size_t k = poly.size(); k-- > 1;) d = d * x + static_cast<double>(k) * poly[k];
        return d;
    };
    auto integrand = [&](double x) {
        const double f = eval(x);
        const double df = eval_deriv(x);
        return f * y + (nonlinear ? f * df : df) * std::sin(M_PI * y * y) * std::cos(x);
    };
    const double h = 2.0 / static_cast<double>(panels);
    double acc = integrand(-1.0) + integrand(1.0);
    for (std::size_t i = 1; i < panels; ++i)
        acc += integrand(-1.0 + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

Vector sample_poly_on_grid(const Vector& poly, const GllGrid& grid) {
    Vector f(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) {
        double p = 0.0;
        for (std::size_t k = poly.size(); k-- > 0;) p = p * grid.nodes[i] + poly[k];
        f[i] = p;
    }
    return f;
}

} // namespace

TEST_CASE("linear operator on f = 1 gives g(y) = 2y") {
    const GllGrid grid = gll_grid(31);
    const Vector g = apply_linear_operator(Vector(grid.n, 1.0), grid, grid.nodes);
    for (std::size_t j = 0; j < grid.n; ++j)
        CHECK(std::fabs(g[j] - 2.0 * grid.nodes[j]) < 1e-12);
}

TEST_CASE("linear operator on f = x gives 2 sin(1) sin(pi y^2)") {
    const GllGrid grid = gll_grid(31);
    Vector f(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) f[i] = grid.nodes[i];
    const Vector g = apply_linear_operator(f, grid, grid.nodes);
    for (std::size_t j = 0; j < grid.n; ++j) {
        const double y = grid.nodes[j];
        CHECK(std::fabs(g[j] - 2.0 * std::sin(1.0) * std::sin(M_PI * y * y)) < 1e-10);
    }
}

TEST_CASE("linear operator on f = x^2 matches the dense Simpson oracle") {
    const GllGrid grid = gll_grid(31);
    const Vector poly = {0.0, 0.0, 1.0};
    const Vector g = apply_linear_operator(sample_poly_on_grid(poly, grid), grid, grid.nodes);
    for (std::size_t j = 0; j < grid.n; ++j)
        CHECK(std::fabs(g[j] - simpson_output(poly, grid.nodes[j], false)) < 1e-8);
}

TEST_CASE("nonlinear operator on constants gives g(y) = 2cy") {
    const GllGrid grid = gll_grid(31);
    const double c = -1.7;
    const Vector g = apply_nonlinear_operator(Vector(grid.n, c), grid, grid.nodes);
    for (std::size_t j = 0; j < grid.n; ++j)
        CHECK(std::fabs(g[j] - 2.0 * c * grid.nodes[j]) < 1e-12);
}

TEST_CASE("nonlinear operator on f = x vanishes by parity") {
    const GllGrid grid = gll_grid(31);
    Vector f(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) f[i] = grid.nodes[i];
    const Vector g = apply_nonlinear_operator(f, grid, grid.nodes);
    for (std::size_t j = 0; j < grid.n; ++j) CHECK(std::fabs(g[j]) < 1e-12);
}

TEST_CASE("nonlinear operator on f = 1 + x matches the dense Simpson oracle") {
    const GllGrid grid = gll_grid(31);
    const Vector poly = {1.0, 1.0};
    const Vector g = apply_nonlinear_operator(sample_poly_on_grid(poly, grid), grid, grid.nodes);
    for (std::size_t j = 0; j < grid.n; ++j)
        CHECK(std::fabs(g[j] - simpson_output(poly, grid.nodes[j], true)) < 1e-8);
}

TEST_CASE("both operators track the Simpson oracle for random degree-6 polynomials") {
    const GllGrid grid = gll_grid(31);
    const CounterRng rng(5);
    std::uint64_t c = 0;
    for (int trial = 0; trial < 4; ++trial) {
        Vector poly(7);
        for (auto& p : poly) p = rng.uniform_sym(c++, 1.0);
        const Vector f = sample_poly_on_grid(poly, grid);
        for (bool nonlinear : {false, true}) {
            const Vector g = nonlinear ? apply_nonlinear_operator(f, grid, grid.nodes)
                                       : apply_linear_operator(f, grid, grid.nodes);
            for (std::size_t j = 0; j < grid.n; j += 5)
                CHECK(std::fabs(g[j] - simpson_output(poly, grid.nodes[j], nonlinear)) < 1e-8);
        }
    }
}

TEST_CASE("operators reject mismatched input lengths") {
    const GllGrid grid = gll_grid(8);
    CHECK_THROWS_AS(apply_linear_operator(Vector(7, 0.0), grid, grid.nodes), DimensionError);
}

TEST_CASE("dataset generation is deterministic and satisfies the operator identity") {
    const GllGrid grid = gll_grid(9);
    const Dataset a = generate_dataset(1000, OperatorTag::Nonlinear, grid, grid.nodes, 99);
    const Dataset b = generate_dataset(1000, OperatorTag::Nonlinear, grid, grid.nodes, 99);
    REQUIRE(a.size() == 1000);
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a.inputs[k] == b.inputs[k]);
        const Vector expected = apply_nonlinear_operator(a.inputs[k], grid, grid.nodes);
        for (std::size_t j = 0; j < expected.size(); ++j)
            CHECK(std::fabs(a.outputs[k][j] - expected[j]) < 1e-10);
    }
}

TEST_CASE("dataset generation rejects count = 0") {
    const GllGrid grid = gll_grid(4);
    CHECK_THROWS_AS(generate_dataset(0, OperatorTag::Linear, grid, grid.nodes, 1),
                    ValidationError);
}

TEST_CASE("unknown operator tag is rejected") {
    CHECK_THROWS_AS(parse_operator_tag("cubic"), ValidationError);
}

TEST_CASE("dataset file round-trip") {
    const GllGrid grid = gll_grid(6);
    const Dataset ds = generate_dataset(25, OperatorTag::Linear, grid, grid.nodes, 3, 0.5);
    const auto path = std::filesystem::temp_directory_path() / "uqnn_test_dataset.csv";
    save_dataset(ds, path.string());
    const Dataset back = load_dataset(path.string());
    REQUIRE(back.size() == ds.size());
    CHECK(back.operator_tag == ds.operator_tag);
    CHECK(back.seed == ds.seed);
    CHECK(back.amplitude == ds.amplitude);
    for (std::size_t k = 0; k < ds.size(); ++k) {
        CHECK(back.inputs[k] == ds.inputs[k]);
        CHECK(back.outputs[k] == ds.outputs[k]);
    }
    std::filesystem::remove(path);
}

TEST_CASE("dataset loader reports malformed rows") {
    const auto path = std::filesystem::temp_directory_path() / "uqnn_bad_dataset.csv";
    {
        std::FILE* f = std::fopen(path.string().c_str(), "w");
        std::fputs("{\"operator_tag\":\"linear\",\"n_x\":2,\"n_y\":2,\"count\":1,\"seed\":0}\n",
                   f);
        std::fputs("1.0,2.0\n", f);
        std::fputs("3.0\n", f); // wrong column count
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_dataset(path.string()), ParseError);
    std::filesystem::remove(path);
}
