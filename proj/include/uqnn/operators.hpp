#pragma once

#include <cstdint>
#include <string>

#include "uqnn/grid.hpp"
#include "uqnn/linalg.hpp"

namespace uqnn {

enum class OperatorTag { Linear, Nonlinear };

const char* to_string(OperatorTag tag);
OperatorTag parse_operator_tag(const std::string& s);

/// g(y_j) = integral of f(x) y_j + f'(x) sin(pi y_j^2) cos(x) over [-1,1],
/// with f' from the grid differentiation matrix and the integral from the
/// Lobatto weights.
Vector apply_linear_operator(const Vector& f, const GllGrid& grid, const Vector& y_nodes);

/// g(y_j) = integral of f(x) y_j + f(x) f'(x) sin(pi y_j^2) cos(x).
Vector apply_nonlinear_operator(const Vector& f, const GllGrid& grid, const Vector& y_nodes);

Vector apply_operator(OperatorTag tag, const Vector& f, const GllGrid& grid,
                      const Vector& y_nodes);

/// Input-output pairs for operator learning.
struct Dataset {
    std::vector<Vector> inputs;  // each of length n_x
    std::vector<Vector> outputs; // each of length n_y
    OperatorTag operator_tag = OperatorTag::Linear;
    std::uint64_t seed = 0;
    std::size_t n_x = 0;
    std::size_t n_y = 0;
    double amplitude = 1.0; // std dev of the Gaussian input sampler

    std::size_t size() const { return inputs.size(); }
};

/// Draw `count` inputs with i.i.d. N(0, amplitude^2) components on the
/// x-grid and push each through the chosen operator. Sample k depends
/// only on (seed, k), so sharded generation matches serial output.
Dataset generate_dataset(std::size_t count, OperatorTag tag, const GllGrid& grid,
                         const Vector& y_nodes, std::uint64_t seed, double amplitude = 1.0);

/// File format: one JSON header line, then per sample one CSV input row
/// (n_x columns) followed by one CSV output row (n_y columns).
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

} // namespace uqnn
