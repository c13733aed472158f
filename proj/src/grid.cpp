#include "uqnn/grid.hpp"

#include <cmath>
#include <string>

namespace uqnn {

namespace {

// Legendre P_N(x) and P'_N(x) via the three-term recurrence.
void legendre(std::size_t deg, double x, double& p, double& dp) {
    double p_prev = 1.0, p_cur = x;
    if (deg == 0) {
        p = 1.0;
        dp = 0.0;
        return;
    }
    for (std::size_t k = 2; k <= deg; ++k) {
        const double p_next =
            ((2.0 * k - 1.0) * x * p_cur - (k - 1.0) * p_prev) / static_cast<double>(k);
        p_prev = p_cur;
        p_cur = p_next;
    }
    p = p_cur;
    if (x == 1.0 || x == -1.0) {
        // P'_N(+-1) = (+-1)^{N-1} N(N+1)/2
        const double sign = (x > 0.0 || deg % 2 == 1) ? 1.0 : -1.0;
        dp = sign * 0.5 * static_cast<double>(deg) * (static_cast<double>(deg) + 1.0);
    } else {
        dp = static_cast<double>(deg) * (x * p_cur - p_prev) / (x * x - 1.0);
    }
}

} // namespace

GllGrid gll_grid(std::size_t n_points) {
    if (n_points < 2)
        throw ValidationError("gll_grid: need at least 2 points, got " + std::to_string(n_points));

    const std::size_t deg = n_points - 1; // polynomial degree N
    GllGrid grid;
    grid.n = n_points;
    grid.nodes.assign(n_points, 0.0);
    grid.nodes.front() = -1.0;
    grid.nodes.back() = 1.0;

    // Interior nodes: Newton on P'_N, seeded at Chebyshev-Lobatto points.
    // P''_N from the Legendre ODE: (1-x^2) P'' = 2x P' - N(N+1) P.
    const double nn1 = static_cast<double>(deg) * (static_cast<double>(deg) + 1.0);
    for (std::size_t k = 1; k + 1 < n_points; ++k) {
        double x = -std::cos(M_PI * static_cast<double>(k) / static_cast<double>(deg));
        for (int it = 0; it < 100; ++it) {
            double p, dp;
            legendre(deg, x, p, dp);
            const double d2p = (2.0 * x * dp - nn1 * p) / (1.0 - x * x);
            const double step = dp / d2p;
            x -= step;
            if (std::fabs(step) < 1e-14) break;
        }
        grid.nodes[k] = x;
    }

    // Lobatto weights w_j = 2 / (N(N+1) P_N(x_j)^2).
    grid.quad_weights.assign(n_points, 0.0);
    for (std::size_t j = 0; j < n_points; ++j) {
        double p, dp;
        legendre(deg, grid.nodes[j], p, dp);
        grid.quad_weights[j] = 2.0 / (nn1 * p * p);
    }

    // Differentiation matrix in barycentric form; the negative-sum trick
    // makes rows annihilate constants to rounding.
    Vector bary(n_points, 1.0);
    for (std::size_t j = 0; j < n_points; ++j) {
        for (std::size_t k = 0; k < n_points; ++k)
            if (k != j) bary[j] *= grid.nodes[j] - grid.nodes[k];
        bary[j] = 1.0 / bary[j];
    }
    grid.diff_matrix = Matrix(n_points, n_points, 0.0);
    for (std::size_t i = 0; i < n_points; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < n_points; ++j) {
            if (i == j) continue;
            const double dij = (bary[j] / bary[i]) / (grid.nodes[i] - grid.nodes[j]);
            grid.diff_matrix(i, j) = dij;
            row_sum += dij;
        }
        grid.diff_matrix(i, i) = -row_sum;
    }
    return grid;
}

double gll_integrate(const GllGrid& grid, const Vector& f) {
    if (f.size() != grid.n)
        throw DimensionError("gll_integrate: values length " + std::to_string(f.size()) +
                             " vs grid size " + std::to_string(grid.n));
    double acc = 0.0;
    for (std::size_t i = 0; i < grid.n; ++i) acc += grid.quad_weights[i] * f[i];
    return acc;
}

} // namespace uqnn
