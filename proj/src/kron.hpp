#pragma once

// Kronecker product construction and structure-exploiting application.
//
// A KronPair (c, d) stands for the block matrix kron(c, d): block (i, j)
// equals c(i,j) * d, so the product has shape (p1*p2 x q1*q2) for
// c: p1 x q1 and d: p2 x q2. Products are applied to vectors without ever
// forming that matrix, through the vec identity
//
//     kron(c, d) * vec(V) = vec(d * V * c^T)
//
// with COLUMN-MAJOR vec throughout: vec stacks columns, so a vector of
// length rows*cols unvecs to a (rows x cols) matrix with
// x[i + j*rows] = X(i, j). The transpose form used by the layer convention
// (weights act as W^T x) is kron(c, d)^T x = vec(d^T * X * c) with
// X = unvec(x) of shape (p2 x p1).

#include <cstdint>
#include <optional>

#include "numerics.hpp"

namespace karst {

struct KronPair {
    DenseMatrix c;  // p1 x q1
    DenseMatrix d;  // p2 x q2
};

// Column-major vec / unvec. unvec throws if x.len() != rows*cols.
DenseVector vec(const DenseMatrix& x);
DenseMatrix unvec(const DenseVector& x, index_t rows, index_t cols);

// The explicit block matrix, shape (p1*p2 x q1*q2).
DenseMatrix kron_materialize(const KronPair& k);

// y = kron(c, d)^T x. Input length p1*p2, output length q1*q2. This is the
// layer-orientation apply: with delta-W stored (d_in x d_out), the forward
// contribution is delta-W^T x.
DenseVector kron_matvec_t(const KronPair& k, const DenseVector& x);

// y = kron(c, d) v. Input length q1*q2, output length p1*p2. Used by the
// backward pass to push gradients to the layer input.
DenseVector kron_matvec(const KronPair& k, const DenseVector& v);

// Same two operations with d given in factored form d = a*b (a: p2 x r,
// b: r x q2); d is never formed, the inner step runs as b^T (a^T X).
DenseVector kron_matvec_t_lowrank(const DenseMatrix& c, const DenseMatrix& a,
                                  const DenseMatrix& b, const DenseVector& x);
DenseVector kron_matvec_lowrank(const DenseMatrix& c, const DenseMatrix& a,
                                const DenseMatrix& b, const DenseVector& v);

// Exact multiply count of kron_matvec_t. Without low_rank_r this is the
// dense-d path q2*p2*p1 + q2*p1*q1; with it, the factored path
// r*p2*p1 + q2*r*p1 + q2*p1*q1. Additions are not counted.
std::int64_t kron_flops(const KronPair& k, std::optional<index_t> low_rank_r = std::nullopt);

// Multiply count of applying the materialized product: (p1*p2)*(q1*q2).
std::int64_t kron_flops_materialized(const KronPair& k);

// Numerical rank: number of singular values > tol * sigma_max. tol must be
// > 0; the empty matrix has rank 0.
index_t rank_of(const DenseMatrix& mat, double tol = 1e-10);

}  // namespace karst
