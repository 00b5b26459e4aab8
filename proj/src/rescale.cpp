#include "rescale.hpp"

#include <stdexcept>
#include <string>

namespace karst {

RescaleParams::RescaleParams(DenseVector scale_offsets, DenseVector shifts)
    : s1(std::move(scale_offsets)), s2(std::move(shifts)) {
    if (s1.len() != s2.len()) {
        throw std::invalid_argument("RescaleParams: s1 length " + std::to_string(s1.len()) +
                                    " vs s2 length " + std::to_string(s2.len()));
    }
}

bool RescaleParams::is_zero() const {
    for (double v : s1.data)
        if (v != 0.0) return false;
    for (double v : s2.data)
        if (v != 0.0) return false;
    return true;
}

DenseVector rescale_apply(const RescaleParams& p, const DenseVector& z) {
    if (z.len() != p.d_out()) {
        throw std::invalid_argument("rescale_apply: input length " + std::to_string(z.len()) +
                                    " vs parameter length " + std::to_string(p.d_out()));
    }
    DenseVector y(z.len());
    for (index_t j = 0; j < z.len(); ++j) y[j] = (1.0 + p.s1[j]) * z[j] + p.s2[j];
    return y;
}

FoldedAffine rescale_fold(const RescaleParams& p, const DenseMatrix& w,
                          const std::optional<DenseVector>& bias) {
    if (w.cols != p.d_out()) {
        throw std::invalid_argument("rescale_fold: weight shape " + w.shape_str() +
                                    " vs parameter length " + std::to_string(p.d_out()));
    }
    if (bias && bias->len() != p.d_out()) {
        throw std::invalid_argument("rescale_fold: bias length " + std::to_string(bias->len()) +
                                    " vs parameter length " + std::to_string(p.d_out()));
    }
    FoldedAffine out{w, DenseVector(p.d_out())};
    for (index_t i = 0; i < w.rows; ++i)
        for (index_t j = 0; j < w.cols; ++j) out.w(i, j) = w(i, j) * (1.0 + p.s1[j]);
    for (index_t j = 0; j < p.d_out(); ++j) {
        const double b = bias ? (*bias)[j] : 0.0;
        out.bias[j] = (1.0 + p.s1[j]) * b + p.s2[j];
    }
    return out;
}

}  // namespace karst
