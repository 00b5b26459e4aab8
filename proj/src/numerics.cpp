#include "numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace karst {

DenseMatrix::DenseMatrix(index_t r, index_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
    if (static_cast<index_t>(data.size()) != r * c) {
        throw std::invalid_argument("DenseMatrix: got " + std::to_string(data.size()) +
                                    " values for shape " + std::to_string(r) + "x" +
                                    std::to_string(c));
    }
}

std::string DenseMatrix::shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

double SeededRng::next_uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double SeededRng::next_gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * next_uniform() - 1.0;
        v = 2.0 * next_uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * factor;
    has_spare_ = true;
    return u * factor;
}

std::uint64_t SeededRng::next_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("SeededRng::next_below: n must be > 0");
    // Rejection sampling over the largest multiple of n.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

DenseMatrix zeros(index_t rows, index_t cols) { return DenseMatrix(rows, cols); }

DenseVector zeros_vec(index_t len) { return DenseVector(len); }

DenseMatrix identity(index_t n) {
    DenseMatrix m(n, n);
    for (index_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix gaussian_matrix(SeededRng& rng, index_t rows, index_t cols, double std) {
    if (!(std > 0.0)) {
        throw std::invalid_argument("gaussian_matrix: std must be > 0, got " +
                                    std::to_string(std));
    }
    DenseMatrix m(rows, cols);
    for (double& v : m.data) v = std * rng.next_gaussian();
    return m;
}

DenseVector gaussian_vector(SeededRng& rng, index_t len, double std) {
    if (!(std > 0.0)) {
        throw std::invalid_argument("gaussian_vector: std must be > 0, got " +
                                    std::to_string(std));
    }
    DenseVector v(len);
    for (double& x : v.data) x = std * rng.next_gaussian();
    return v;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows) {
        throw std::invalid_argument("matmul: incompatible shapes " + a.shape_str() + " * " +
                                    b.shape_str());
    }
    DenseMatrix out(a.rows, b.cols);
    // i-k-j order keeps both b and out row access contiguous.
    for (index_t i = 0; i < a.rows; ++i) {
        double* out_row = &out.data[static_cast<std::size_t>(i * out.cols)];
        for (index_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* b_row = &b.data[static_cast<std::size_t>(k * b.cols)];
            for (index_t j = 0; j < b.cols; ++j) out_row[j] += aik * b_row[j];
        }
    }
    return out;
}

DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix out(a.cols, a.rows);
    for (index_t i = 0; i < a.rows; ++i)
        for (index_t j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
    return out;
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument("add: incompatible shapes " + a.shape_str() + " + " +
                                    b.shape_str());
    }
    DenseMatrix out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument("sub: incompatible shapes " + a.shape_str() + " - " +
                                    b.shape_str());
    }
    DenseMatrix out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
    return out;
}

DenseMatrix scale(const DenseMatrix& a, double factor) {
    DenseMatrix out = a;
    for (double& v : out.data) v *= factor;
    return out;
}

DenseVector matvec_t(const DenseMatrix& a, const DenseVector& x) {
    if (x.len() != a.rows) {
        throw std::invalid_argument("matvec_t: vector length " + std::to_string(x.len()) +
                                    " does not match matrix " + a.shape_str());
    }
    DenseVector y(a.cols);
    for (index_t i = 0; i < a.rows; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        const double* row = &a.data[static_cast<std::size_t>(i * a.cols)];
        for (index_t j = 0; j < a.cols; ++j) y[j] += xi * row[j];
    }
    return y;
}

DenseVector matvec(const DenseMatrix& a, const DenseVector& x) {
    if (x.len() != a.cols) {
        throw std::invalid_argument("matvec: vector length " + std::to_string(x.len()) +
                                    " does not match matrix " + a.shape_str());
    }
    DenseVector y(a.rows);
    for (index_t i = 0; i < a.rows; ++i) {
        const double* row = &a.data[static_cast<std::size_t>(i * a.cols)];
        double acc = 0.0;
        for (index_t j = 0; j < a.cols; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
    return y;
}

DenseVector add(const DenseVector& a, const DenseVector& b) {
    if (a.len() != b.len()) {
        throw std::invalid_argument("add: vector lengths " + std::to_string(a.len()) + " vs " +
                                    std::to_string(b.len()));
    }
    DenseVector out = a;
    for (index_t i = 0; i < out.len(); ++i) out[i] += b[i];
    return out;
}

DenseVector sub(const DenseVector& a, const DenseVector& b) {
    if (a.len() != b.len()) {
        throw std::invalid_argument("sub: vector lengths " + std::to_string(a.len()) + " vs " +
                                    std::to_string(b.len()));
    }
    DenseVector out = a;
    for (index_t i = 0; i < out.len(); ++i) out[i] -= b[i];
    return out;
}

DenseVector scale(const DenseVector& a, double factor) {
    DenseVector out = a;
    for (double& v : out.data) v *= factor;
    return out;
}

double frobenius_norm(const DenseMatrix& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return std::sqrt(s);
}

double norm2(const DenseVector& v) {
    double s = 0.0;
    for (double x : v.data) s += x * x;
    return std::sqrt(s);
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument("max_abs_diff: incompatible shapes " + a.shape_str() +
                                    " vs " + b.shape_str());
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

double max_abs_diff(const DenseVector& a, const DenseVector& b) {
    if (a.len() != b.len()) {
        throw std::invalid_argument("max_abs_diff: vector lengths " + std::to_string(a.len()) +
                                    " vs " + std::to_string(b.len()));
    }
    double m = 0.0;
    for (index_t i = 0; i < a.len(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double rel_error(const DenseMatrix& a, const DenseMatrix& b) {
    const double denom = std::max(frobenius_norm(b), 1e-300);
    return frobenius_norm(sub(a, b)) / denom;
}

double rel_error(const DenseVector& a, const DenseVector& b) {
    const double denom = std::max(norm2(b), 1e-300);
    return norm2(sub(a, b)) / denom;
}

bool all_finite(const DenseMatrix& a) {
    for (double v : a.data)
        if (!std::isfinite(v)) return false;
    return true;
}

bool all_finite(const DenseVector& v) {
    for (double x : v.data)
        if (!std::isfinite(x)) return false;
    return true;
}

std::vector<double> singular_values(const DenseMatrix& a) {
    if (a.rows == 0 || a.cols == 0) return {};
    // One-sided Jacobi on the tall orientation: rotate column pairs of U until
    // all columns are mutually orthogonal; the singular values are then the
    // column norms. Quadratic convergence, plenty for the small matrices here.
    DenseMatrix u = (a.rows >= a.cols) ? a : transpose(a);
    const index_t n = u.cols;
    const index_t mrows = u.rows;
    const int max_sweeps = 60;
    const double tol = 1e-14;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (index_t p = 0; p < n - 1; ++p) {
            for (index_t q = p + 1; q < n; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (index_t i = 0; i < mrows; ++i) {
                    const double up = u(i, p), uq = u(i, q);
                    alpha += up * up;
                    beta += uq * uq;
                    gamma += up * uq;
                }
                if (std::abs(gamma) <= tol * std::sqrt(alpha * beta) || gamma == 0.0) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = ((zeta >= 0.0) ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (index_t i = 0; i < mrows; ++i) {
                    const double up = u(i, p), uq = u(i, q);
                    u(i, p) = c * up - s * uq;
                    u(i, q) = s * up + c * uq;
                }
            }
        }
        if (!rotated) break;
    }
    std::vector<double> sv(static_cast<std::size_t>(n));
    for (index_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (index_t i = 0; i < mrows; ++i) acc += u(i, j) * u(i, j);
        sv[static_cast<std::size_t>(j)] = std::sqrt(acc);
    }
    std::sort(sv.begin(), sv.end(), std::greater<double>());
    return sv;
}

}  // namespace karst
