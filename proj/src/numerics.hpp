#pragma once

// Dense row-major matrix/vector arithmetic and the seeded RNG used by every
// other module. Everything is double precision; merge/gradient tolerances
// elsewhere in the project are not reachable in float.

#include <cassert>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace karst {

using index_t = std::int64_t;

struct DenseMatrix {
    index_t rows = 0;
    index_t cols = 0;
    std::vector<double> data;  // row-major, rows*cols entries

    DenseMatrix() = default;
    DenseMatrix(index_t r, index_t c)
        : rows(r), cols(c), data(static_cast<std::size_t>(r * c), 0.0) {
        assert(r >= 0 && c >= 0);
    }
    DenseMatrix(index_t r, index_t c, std::vector<double> values);

    double& operator()(index_t i, index_t j) {
        assert(i >= 0 && i < rows && j >= 0 && j < cols);
        return data[static_cast<std::size_t>(i * cols + j)];
    }
    double operator()(index_t i, index_t j) const {
        assert(i >= 0 && i < rows && j >= 0 && j < cols);
        return data[static_cast<std::size_t>(i * cols + j)];
    }

    bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }
    std::string shape_str() const;
};

struct DenseVector {
    std::vector<double> data;

    DenseVector() = default;
    explicit DenseVector(index_t n) : data(static_cast<std::size_t>(n), 0.0) { assert(n >= 0); }
    explicit DenseVector(std::vector<double> values) : data(std::move(values)) {}

    index_t len() const { return static_cast<index_t>(data.size()); }
    double& operator[](index_t i) {
        assert(i >= 0 && i < len());
        return data[static_cast<std::size_t>(i)];
    }
    double operator[](index_t i) const {
        assert(i >= 0 && i < len());
        return data[static_cast<std::size_t>(i)];
    }
};

// Deterministic generator for all randomness in the project. The engine is
// std::mt19937_64, whose output sequence is pinned down by the standard, so
// equal seeds give equal streams on every platform. Uniform and Gaussian
// conversion is done here rather than through std distributions, whose
// output is implementation-defined.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double next_uniform();
    // Standard normal via the Marsaglia polar method (second deviate cached).
    double next_gaussian();
    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// -- constructors ------------------------------------------------------------

DenseMatrix zeros(index_t rows, index_t cols);
DenseVector zeros_vec(index_t len);
DenseMatrix identity(index_t n);

// i.i.d. N(0, std^2) entries drawn from rng in row-major order. std must be > 0.
DenseMatrix gaussian_matrix(SeededRng& rng, index_t rows, index_t cols, double std);
DenseVector gaussian_vector(SeededRng& rng, index_t len, double std);

// -- arithmetic --------------------------------------------------------------

// Standard product, (a.rows x b.cols). Throws std::invalid_argument naming
// both shapes when a.cols != b.rows.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix transpose(const DenseMatrix& a);
DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scale(const DenseMatrix& a, double factor);

// y = A^T x (length a.cols). The layer convention throughout the project:
// weights are stored (d_in x d_out) and act on column inputs from the left
// as W^T x.
DenseVector matvec_t(const DenseMatrix& a, const DenseVector& x);
// y = A x (length a.rows).
DenseVector matvec(const DenseMatrix& a, const DenseVector& x);

DenseVector add(const DenseVector& a, const DenseVector& b);
DenseVector sub(const DenseVector& a, const DenseVector& b);
DenseVector scale(const DenseVector& a, double factor);

double frobenius_norm(const DenseMatrix& a);
double norm2(const DenseVector& v);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);
double max_abs_diff(const DenseVector& a, const DenseVector& b);
// ||a - b||_F / max(||b||_F, floor). Used all over the test and verify code.
double rel_error(const DenseMatrix& a, const DenseMatrix& b);
double rel_error(const DenseVector& a, const DenseVector& b);

bool all_finite(const DenseMatrix& a);
bool all_finite(const DenseVector& v);

// Singular values in descending order, via one-sided Jacobi orthogonalization.
// Intended for the small factor matrices that appear in rank checks.
std::vector<double> singular_values(const DenseMatrix& a);

}  // namespace karst
