#include "kron.hpp"

#include <stdexcept>
#include <string>

namespace karst {

DenseVector vec(const DenseMatrix& x) {
    DenseVector out(x.rows * x.cols);
    for (index_t j = 0; j < x.cols; ++j)
        for (index_t i = 0; i < x.rows; ++i) out[i + j * x.rows] = x(i, j);
    return out;
}

DenseMatrix unvec(const DenseVector& x, index_t rows, index_t cols) {
    if (x.len() != rows * cols) {
        throw std::invalid_argument("unvec: vector length " + std::to_string(x.len()) +
                                    " does not factor as " + std::to_string(rows) + "*" +
                                    std::to_string(cols));
    }
    DenseMatrix out(rows, cols);
    for (index_t j = 0; j < cols; ++j)
        for (index_t i = 0; i < rows; ++i) out(i, j) = x[i + j * rows];
    return out;
}

DenseMatrix kron_materialize(const KronPair& k) {
    const DenseMatrix& c = k.c;
    const DenseMatrix& d = k.d;
    DenseMatrix out(c.rows * d.rows, c.cols * d.cols);
    for (index_t i = 0; i < c.rows; ++i) {
        for (index_t j = 0; j < c.cols; ++j) {
            const double cij = c(i, j);
            if (cij == 0.0) continue;
            for (index_t u = 0; u < d.rows; ++u)
                for (index_t v = 0; v < d.cols; ++v)
                    out(i * d.rows + u, j * d.cols + v) = cij * d(u, v);
        }
    }
    return out;
}

namespace {

void check_apply_len(const DenseVector& x, index_t outer, index_t inner, const char* op) {
    if (x.len() != outer * inner) {
        throw std::invalid_argument(std::string(op) + ": vector length " +
                                    std::to_string(x.len()) + " does not factor as " +
                                    std::to_string(outer) + "*" + std::to_string(inner));
    }
}

}  // namespace

DenseVector kron_matvec_t(const KronPair& k, const DenseVector& x) {
    check_apply_len(x, k.c.rows, k.d.rows, "kron_matvec_t");
    // vec(d^T X c) with X = unvec(x), shape (p2 x p1).
    const DenseMatrix xm = unvec(x, k.d.rows, k.c.rows);
    return vec(matmul(matmul(transpose(k.d), xm), k.c));
}

DenseVector kron_matvec(const KronPair& k, const DenseVector& v) {
    check_apply_len(v, k.c.cols, k.d.cols, "kron_matvec");
    // vec(d V c^T) with V = unvec(v), shape (q2 x q1).
    const DenseMatrix vm = unvec(v, k.d.cols, k.c.cols);
    return vec(matmul(matmul(k.d, vm), transpose(k.c)));
}

DenseVector kron_matvec_t_lowrank(const DenseMatrix& c, const DenseMatrix& a,
                                  const DenseMatrix& b, const DenseVector& x) {
    if (a.cols != b.rows) {
        throw std::invalid_argument("kron_matvec_t_lowrank: factor shapes " + a.shape_str() +
                                    " * " + b.shape_str());
    }
    check_apply_len(x, c.rows, a.rows, "kron_matvec_t_lowrank");
    // d^T X = b^T (a^T X), two skinny products instead of one dense one.
    const DenseMatrix xm = unvec(x, a.rows, c.rows);
    const DenseMatrix inner = matmul(transpose(a), xm);              // r x p1
    return vec(matmul(matmul(transpose(b), inner), c));              // q2 x q1
}

DenseVector kron_matvec_lowrank(const DenseMatrix& c, const DenseMatrix& a,
                                const DenseMatrix& b, const DenseVector& v) {
    if (a.cols != b.rows) {
        throw std::invalid_argument("kron_matvec_lowrank: factor shapes " + a.shape_str() +
                                    " * " + b.shape_str());
    }
    check_apply_len(v, c.cols, b.cols, "kron_matvec_lowrank");
    const DenseMatrix vm = unvec(v, b.cols, c.cols);
    const DenseMatrix inner = matmul(b, vm);                         // r x q1
    return vec(matmul(matmul(a, inner), transpose(c)));              // p2 x p1
}

std::int64_t kron_flops(const KronPair& k, std::optional<index_t> low_rank_r) {
    const index_t p1 = k.c.rows, q1 = k.c.cols;
    const index_t p2 = k.d.rows, q2 = k.d.cols;
    const std::int64_t outer = q2 * p1 * q1;  // (d^T X) * c
    if (!low_rank_r) return q2 * p2 * p1 + outer;
    const index_t r = *low_rank_r;
    return r * p2 * p1 + q2 * r * p1 + outer;
}

std::int64_t kron_flops_materialized(const KronPair& k) {
    return (k.c.rows * k.d.rows) * (k.c.cols * k.d.cols);
}

index_t rank_of(const DenseMatrix& mat, double tol) {
    if (!(tol > 0.0)) {
        throw std::invalid_argument("rank_of: tol must be > 0, got " + std::to_string(tol));
    }
    if (mat.rows == 0 || mat.cols == 0) return 0;
    const std::vector<double> sv = singular_values(mat);
    if (sv.empty() || sv.front() == 0.0) return 0;
    const double cutoff = tol * sv.front();
    index_t rank = 0;
    for (double s : sv)
        if (s > cutoff) ++rank;
    return rank;
}

}  // namespace karst
