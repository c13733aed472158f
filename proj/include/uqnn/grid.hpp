#pragma once

#include "uqnn/linalg.hpp"

namespace uqnn {

/// Gauss-Legendre-Lobatto collocation grid on [-1,1]: nodes, quadrature
/// weights, and the Lagrange differentiation matrix.
struct GllGrid {
    std::size_t n = 0;
    Vector nodes;        // ascending, includes both endpoints
    Vector quad_weights; // positive, summing to 2
    Matrix diff_matrix;  // n x n, exact on polynomials of degree <= n-1
};

/// Build the n-point GLL grid. Interior nodes are the roots of P'_{n-1},
/// found by Newton iteration seeded at Chebyshev-Lobatto points.
/// Throws ValidationError for n < 2.
GllGrid gll_grid(std::size_t n_points);

/// Quadrature of nodal values: sum_i w_i f_i.
double gll_integrate(const GllGrid& grid, const Vector& f);

} // namespace uqnn
