#pragma once

// Re-scaling transmission: the channel-wise affine y = (1 + s1) .* z + s2
// applied to a layer's pre-activation output. Both parameter vectors start
// at zero so a fresh layer computes exactly the base function, and the whole
// transform folds into the preceding linear weights for inference.

#include <optional>

#include "numerics.hpp"

namespace karst {

struct RescaleParams {
    DenseVector s1;  // scale offsets, length d_out
    DenseVector s2;  // shifts, length d_out

    RescaleParams() = default;
    explicit RescaleParams(index_t d_out) : s1(d_out), s2(d_out) {}
    RescaleParams(DenseVector scale_offsets, DenseVector shifts);

    index_t d_out() const { return s1.len(); }
    bool is_zero() const;
};

// y[j] = (1 + s1[j]) * z[j] + s2[j]. z must have length d_out.
DenseVector rescale_apply(const RescaleParams& p, const DenseVector& z);

struct FoldedAffine {
    DenseMatrix w;     // w * diag(1 + s1)
    DenseVector bias;  // (1 + s1) .* bias + s2
};

// Folds the rescale into an affine layer so that for every x
//   folded.w^T x + folded.bias == rescale_apply(p, w^T x + bias).
// An absent bias is treated as zero, so the folded bias is then just s2.
FoldedAffine rescale_fold(const RescaleParams& p, const DenseMatrix& w,
                          const std::optional<DenseVector>& bias);

}  // namespace karst
