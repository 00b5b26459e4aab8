#pragma once

// Multi-kernel Kronecker adapter. A weight update delta-W of shape
// (d_in x d_out) is held as the sum of N kernels
//
//     delta-W = sum_i  kron(c_i, a_i * b_i)
//
// with c_i: m x m, a_i: (d_in/m) x r, b_i: r x (d_out/m). The stacking
// dimension m must divide both layer dimensions. Initialization draws c and
// a from N(0, std^2) and zeroes b, so a fresh adapter contributes exactly
// nothing to the forward pass. No alpha/r output scaling is applied; the
// decomposition carries no scaling coefficient of its own.

#include <cstdint>
#include <optional>
#include <vector>

#include "kron.hpp"
#include "numerics.hpp"
#include "rescale.hpp"

namespace karst {

struct KronKernel {
    DenseMatrix c;  // m x m
    DenseMatrix a;  // d_in/m x r
    DenseMatrix b;  // r x d_out/m
};

class KarstAdapter {
public:
    // Takes ownership of pre-built kernels; validates that every kernel has
    // the shapes implied by (d_in, d_out, m, r).
    KarstAdapter(index_t d_in, index_t d_out, index_t m, index_t r,
                 std::vector<KronKernel> kernels, std::uint64_t init_seed = 0);

    // Gaussian c and a, zero b. Throws when m does not divide d_in and d_out,
    // naming all three.
    static KarstAdapter init(SeededRng& rng, index_t d_in, index_t d_out, index_t m,
                             index_t r, index_t n_kernels, double std);

    index_t d_in() const { return d_in_; }
    index_t d_out() const { return d_out_; }
    index_t m() const { return m_; }
    index_t r() const { return r_; }
    index_t kernel_count() const { return static_cast<index_t>(kernels_.size()); }
    std::uint64_t init_seed() const { return init_seed_; }

    const std::vector<KronKernel>& kernels() const { return kernels_; }
    std::vector<KronKernel>& kernels() { return kernels_; }

    // delta-W^T x without materializing delta-W: each kernel runs the
    // factored vec-trick path, outputs are summed in kernel order.
    DenseVector apply(const DenseVector& x) const;

    // delta-W g (the untransposed product), for gradient propagation.
    DenseVector apply_untransposed(const DenseVector& g) const;

    // sum_i kron(c_i, a_i b_i), shape (d_in x d_out).
    DenseMatrix materialize() const;

    // Trainable scalar count: N * (m^2 + r*d_in/m + r*d_out/m).
    index_t param_count() const;

private:
    index_t d_in_, d_out_, m_, r_;
    std::vector<KronKernel> kernels_;
    std::uint64_t init_seed_;
};

// A frozen affine layer plus its trainable adapter and rescale. The base
// weight and bias are reachable only by const reference; nothing in the API
// can change them after construction.
class AdaptedLinear {
public:
    AdaptedLinear(DenseMatrix w0, std::optional<DenseVector> bias0, KarstAdapter adapter,
                  RescaleParams rescale);

    const DenseMatrix& w0() const { return w0_; }
    const std::optional<DenseVector>& bias0() const { return bias0_; }
    const KarstAdapter& adapter() const { return adapter_; }
    KarstAdapter& adapter() { return adapter_; }
    const RescaleParams& rescale() const { return rescale_; }
    RescaleParams& rescale() { return rescale_; }

    index_t d_in() const { return w0_.rows; }
    index_t d_out() const { return w0_.cols; }

    // Pre-rescale affine output z = (w0 + delta-W)^T x + bias0.
    DenseVector forward_affine(const DenseVector& x) const;
    // Full training-time path y = (1 + s1) .* z + s2.
    DenseVector forward(const DenseVector& x) const;

private:
    DenseMatrix w0_;
    std::optional<DenseVector> bias0_;
    KarstAdapter adapter_;
    RescaleParams rescale_;
};

struct MergedAffine {
    DenseMatrix w;
    std::optional<DenseVector> bias;

    DenseVector forward(const DenseVector& x) const;
};

// Re-parameterization: a single affine (w, bias) whose plain forward
// w^T x + bias equals layer.forward(x) for every x. Column j of w is
// (1 + s1[j]) times column j of (w0 + delta-W); the bias is
// (1 + s1) .* bias0 + s2, present whenever the layer has a bias or s2 is
// nonzero.
MergedAffine merge(const AdaptedLinear& layer);

// Adapter plus rescale scalars: N*(m^2 + r*d_in/m + r*d_out/m) + 2*d_out.
// Frozen parameters are not counted.
index_t param_count(const AdaptedLinear& layer);

// All factors Gaussian, b included, so the adapter carries a nonzero
// delta-W. For benchmarks and equivalence checks that need a trained-looking
// adapter instead of a zero-contribution one.
KarstAdapter random_adapter(SeededRng& rng, index_t d_in, index_t d_out, index_t m,
                            index_t r, index_t n_kernels, double std);
RescaleParams random_rescale(SeededRng& rng, index_t d_out, double std);

}  // namespace karst
