#include "uqnn/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace uqnn {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Vector Matrix::row_vector(std::size_t i) const {
    return Vector(row(i), row(i) + cols_);
}

void Matrix::set_row(std::size_t i, const Vector& v) {
    if (v.size() != cols_) throw DimensionError("set_row: length " + std::to_string(v.size()) +
                                                " vs cols " + std::to_string(cols_));
    std::copy(v.begin(), v.end(), row(i));
}

double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size())
        throw DimensionError("dot: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

Vector add(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw DimensionError("add: length mismatch");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Vector sub(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw DimensionError("sub: length mismatch");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

Vector scale(const Vector& v, double s) {
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * s;
    return out;
}

Vector matvec(const Matrix& m, const Vector& v) {
    if (m.cols() != v.size())
        throw DimensionError("matvec: " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                             " times length " + std::to_string(v.size()));
    Vector out(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* r = m.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) acc += r[j] * v[j];
        out[i] = acc;
    }
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw DimensionError("matmul: inner dims " + std::to_string(a.cols()) + " vs " +
                             std::to_string(b.rows()));
    Matrix out(a.rows(), b.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* brow = b.row(k);
            double* orow = out.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
    return out;
}

double frobenius_norm(const Matrix& m) {
    double acc = 0.0;
    const double* p = m.data();
    for (std::size_t i = 0; i < m.rows() * m.cols(); ++i) acc += p[i] * p[i];
    return std::sqrt(acc);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows() * a.cols(); ++i)
        m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
    return m;
}

Matrix face_split(const Matrix& x, const Matrix& y) {
    if (x.rows() != y.rows())
        throw DimensionError("face_split: row counts " + std::to_string(x.rows()) + " vs " +
                             std::to_string(y.rows()));
    Matrix out(x.rows(), x.cols() * y.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* xr = x.row(i);
        const double* yr = y.row(i);
        double* orow = out.row(i);
        for (std::size_t a = 0; a < x.cols(); ++a)
            for (std::size_t b = 0; b < y.cols(); ++b) orow[a * y.cols() + b] = xr[a] * yr[b];
    }
    return out;
}

namespace {

double off_diagonal_norm(const Matrix& s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s.rows(); ++i)
        for (std::size_t j = 0; j < s.cols(); ++j)
            if (i != j) acc += s(i, j) * s(i, j);
    return std::sqrt(acc);
}

} // namespace

EigResult sym_eig(const Matrix& s) {
    const std::size_t n = s.rows();
    if (s.cols() != n) throw DimensionError("sym_eig: matrix not square");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::fabs(s(i, j) - s(j, i)) > 1e-12)
                throw ValidationError("sym_eig: input not symmetric at (" + std::to_string(i) +
                                      "," + std::to_string(j) + ")");

    Matrix a = s;
    Matrix v = Matrix::identity(n);
    const double stop = 1e-13 * std::max(frobenius_norm(s), 1e-300);

    // Cyclic Jacobi sweeps over the upper triangle.
    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        if (off_diagonal_norm(a) < stop) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::fabs(apq) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
        }
    }

    // Sort ascending, permuting eigenvector columns along.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

    EigResult res;
    res.values.resize(n);
    res.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        res.values[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) res.vectors(i, j) = v(i, order[j]);
    }
    return res;
}

Matrix cholesky(const Matrix& r) {
    const std::size_t n = r.rows();
    if (r.cols() != n) throw DimensionError("cholesky: matrix not square");
    Matrix l(n, n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double diag = r(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (diag <= 0.0)
            throw FactorizationError("cholesky: non-positive pivot at index " + std::to_string(j), j);
        l(j, j) = std::sqrt(diag);
        for (std::size_t i = j + 1; i < n; ++i) {
            double acc = r(i, j);
            for (std::size_t k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
            l(i, j) = acc / l(j, j);
        }
    }
    return l;
}

Matrix nearest_correlation(const Matrix& r) {
    const std::size_t n = r.rows();
    EigResult eig = sym_eig(r);

    // Clip negative eigenvalues and reassemble V * max(L,0) * V^T.
    Matrix repaired(n, n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double lam = std::max(eig.values[k], 0.0);
        if (lam == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) {
            const double vik = eig.vectors(i, k) * lam;
            for (std::size_t j = 0; j < n; ++j) repaired(i, j) += vik * eig.vectors(j, k);
        }
    }

    // Clipping can disturb the unit diagonal a copula correlation needs;
    // rescale, pinning rows whose variance collapsed.
    Vector d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = repaired(i, i);
    Matrix out(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (d[i] < 1e-10) {
            out(i, i) = 1.0;
            continue;
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (d[j] < 1e-10) continue;
            out(i, j) = repaired(i, j) / std::sqrt(d[i] * d[j]);
        }
        out(i, i) = 1.0;
    }
    // Re-symmetrize against rounding drift.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double m = 0.5 * (out(i, j) + out(j, i));
            out(i, j) = m;
            out(j, i) = m;
        }
    return out;
}

double spectral_norm(const Matrix& w) {
    const std::size_t n = w.cols();
    Matrix g = matmul(transpose(w), w);
    if (n <= 64) {
        EigResult eig = sym_eig(g);
        return std::sqrt(std::max(eig.values.back(), 0.0));
    }
    // Power iteration fallback for wide matrices.
    Vector x(n, 1.0 / std::sqrt(static_cast<double>(n)));
    double lam = 0.0;
    for (int it = 0; it < 500; ++it) {
        Vector y = matvec(g, x);
        const double ny = norm2(y);
        if (ny == 0.0) return 0.0;
        for (auto& e : y) e /= ny;
        const double lam_new = dot(y, matvec(g, y));
        x = std::move(y);
        if (std::fabs(lam_new - lam) < 1e-13 * std::max(1.0, std::fabs(lam_new)) && it > 3) {
            lam = lam_new;
            break;
        }
        lam = lam_new;
    }
    return std::sqrt(std::max(lam, 0.0));
}

} // namespace uqnn
