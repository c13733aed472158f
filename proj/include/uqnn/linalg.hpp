#pragma once

#include <cstddef>
#include <vector>

#include "uqnn/error.hpp"

namespace uqnn {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. Sized for the small systems this
/// library works with (tens of rows), not for general BLAS workloads.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    Vector row_vector(std::size_t i) const;
    void set_row(std::size_t i, const Vector& v);

    bool operator==(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct EigResult {
    Vector values;   // ascending
    Matrix vectors;  // columns are eigenvectors, same order
};

// Elementwise / BLAS-1 style helpers.
double dot(const Vector& a, const Vector& b);
double norm2(const Vector& v);
Vector add(const Vector& a, const Vector& b);
Vector sub(const Vector& a, const Vector& b);
Vector scale(const Vector& v, double s);

Vector matvec(const Matrix& m, const Vector& v);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
double frobenius_norm(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);

/// Row-wise Kronecker product of two matrices with equal row counts:
/// row i of the result is kron(row i of X, row i of Y), an m x (n*p) matrix.
Matrix face_split(const Matrix& x, const Matrix& y);

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Converges when the off-diagonal Frobenius norm drops below
/// 1e-13 * ||S||_F. Throws ValidationError if S deviates from symmetry
/// by more than 1e-12.
EigResult sym_eig(const Matrix& s);

/// Cholesky factor L (lower triangular, positive diagonal) of an SPD
/// matrix. Throws FactorizationError naming the failing pivot index.
Matrix cholesky(const Matrix& r);

/// Nearest-correlation repair: clip negative eigenvalues to zero, then
/// rescale to unit diagonal. Rows whose repaired variance collapses below
/// 1e-10 are pinned to the corresponding unit vector.
Matrix nearest_correlation(const Matrix& r);

/// Largest singular value. Uses sym_eig of W^T W for widths up to 64 and
/// power iteration beyond that.
double spectral_norm(const Matrix& w);

} // namespace uqnn
