#include "adapter.hpp"

#include <stdexcept>
#include <string>

namespace karst {

namespace {

void check_divisibility(index_t d_in, index_t d_out, index_t m) {
    if (m < 1 || d_in % m != 0 || d_out % m != 0) {
        throw std::invalid_argument("adapter: stacking dimension m=" + std::to_string(m) +
                                    " must divide d_in=" + std::to_string(d_in) +
                                    " and d_out=" + std::to_string(d_out));
    }
}

}  // namespace

KarstAdapter::KarstAdapter(index_t d_in, index_t d_out, index_t m, index_t r,
                           std::vector<KronKernel> kernels, std::uint64_t init_seed)
    : d_in_(d_in), d_out_(d_out), m_(m), r_(r), kernels_(std::move(kernels)),
      init_seed_(init_seed) {
    check_divisibility(d_in, d_out, m);
    if (r < 1) throw std::invalid_argument("adapter: rank r must be >= 1, got " + std::to_string(r));
    if (kernels_.empty()) throw std::invalid_argument("adapter: needs at least one kernel");
    const index_t block_rows = d_in / m, block_cols = d_out / m;
    for (const KronKernel& k : kernels_) {
        if (k.c.rows != m || k.c.cols != m || k.a.rows != block_rows || k.a.cols != r ||
            k.b.rows != r || k.b.cols != block_cols) {
            throw std::invalid_argument("adapter: kernel shapes c=" + k.c.shape_str() + " a=" +
                                        k.a.shape_str() + " b=" + k.b.shape_str() +
                                        " inconsistent with (d_in=" + std::to_string(d_in) +
                                        ", d_out=" + std::to_string(d_out) + ", m=" +
                                        std::to_string(m) + ", r=" + std::to_string(r) + ")");
        }
    }
}

KarstAdapter KarstAdapter::init(SeededRng& rng, index_t d_in, index_t d_out, index_t m,
                                index_t r, index_t n_kernels, double std) {
    check_divisibility(d_in, d_out, m);
    if (r < 1) throw std::invalid_argument("adapter: rank r must be >= 1, got " + std::to_string(r));
    if (n_kernels < 1) {
        throw std::invalid_argument("adapter: kernel count must be >= 1, got " +
                                    std::to_string(n_kernels));
    }
    std::vector<KronKernel> kernels;
    kernels.reserve(static_cast<std::size_t>(n_kernels));
    for (index_t i = 0; i < n_kernels; ++i) {
        KronKernel k;
        k.c = gaussian_matrix(rng, m, m, std);
        k.a = gaussian_matrix(rng, d_in / m, r, std);
        k.b = zeros(r, d_out / m);  // zero b forces delta-W == 0 at start
        kernels.push_back(std::move(k));
    }
    return KarstAdapter(d_in, d_out, m, r, std::move(kernels), rng.seed());
}

DenseVector KarstAdapter::apply(const DenseVector& x) const {
    if (x.len() != d_in_) {
        throw std::invalid_argument("adapter apply: input length " + std::to_string(x.len()) +
                                    " vs d_in " + std::to_string(d_in_));
    }
    DenseVector out(d_out_);
    for (const KronKernel& k : kernels_) {
        const DenseVector part = kron_matvec_t_lowrank(k.c, k.a, k.b, x);
        for (index_t j = 0; j < d_out_; ++j) out[j] += part[j];
    }
    return out;
}

DenseVector KarstAdapter::apply_untransposed(const DenseVector& g) const {
    if (g.len() != d_out_) {
        throw std::invalid_argument("adapter apply_untransposed: input length " +
                                    std::to_string(g.len()) + " vs d_out " +
                                    std::to_string(d_out_));
    }
    DenseVector out(d_in_);
    for (const KronKernel& k : kernels_) {
        const DenseVector part = kron_matvec_lowrank(k.c, k.a, k.b, g);
        for (index_t i = 0; i < d_in_; ++i) out[i] += part[i];
    }
    return out;
}

DenseMatrix KarstAdapter::materialize() const {
    DenseMatrix out(d_in_, d_out_);
    for (const KronKernel& k : kernels_) {
        const DenseMatrix block = matmul(k.a, k.b);
        const DenseMatrix term = kron_materialize(KronPair{k.c, block});
        for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += term.data[i];
    }
    return out;
}

index_t KarstAdapter::param_count() const {
    const index_t per_kernel = m_ * m_ + r_ * (d_in_ / m_) + r_ * (d_out_ / m_);
    return kernel_count() * per_kernel;
}

AdaptedLinear::AdaptedLinear(DenseMatrix w0, std::optional<DenseVector> bias0,
                             KarstAdapter adapter, RescaleParams rescale)
    : w0_(std::move(w0)), bias0_(std::move(bias0)), adapter_(std::move(adapter)),
      rescale_(std::move(rescale)) {
    if (adapter_.d_in() != w0_.rows || adapter_.d_out() != w0_.cols) {
        throw std::invalid_argument("AdaptedLinear: adapter (" + std::to_string(adapter_.d_in()) +
                                    "x" + std::to_string(adapter_.d_out()) +
                                    ") vs base weight " + w0_.shape_str());
    }
    if (bias0_ && bias0_->len() != w0_.cols) {
        throw std::invalid_argument("AdaptedLinear: bias length " + std::to_string(bias0_->len()) +
                                    " vs base weight " + w0_.shape_str());
    }
    if (rescale_.d_out() != w0_.cols) {
        throw std::invalid_argument("AdaptedLinear: rescale length " +
                                    std::to_string(rescale_.d_out()) + " vs base weight " +
                                    w0_.shape_str());
    }
}

DenseVector AdaptedLinear::forward_affine(const DenseVector& x) const {
    DenseVector z = matvec_t(w0_, x);
    const DenseVector delta = adapter_.apply(x);
    for (index_t j = 0; j < z.len(); ++j) z[j] += delta[j];
    if (bias0_)
        for (index_t j = 0; j < z.len(); ++j) z[j] += (*bias0_)[j];
    return z;
}

DenseVector AdaptedLinear::forward(const DenseVector& x) const {
    return rescale_apply(rescale_, forward_affine(x));
}

DenseVector MergedAffine::forward(const DenseVector& x) const {
    DenseVector y = matvec_t(w, x);
    if (bias)
        for (index_t j = 0; j < y.len(); ++j) y[j] += (*bias)[j];
    return y;
}

MergedAffine merge(const AdaptedLinear& layer) {
    const DenseMatrix w_t = add(layer.w0(), layer.adapter().materialize());
    const FoldedAffine folded = rescale_fold(layer.rescale(), w_t, layer.bias0());
    MergedAffine out;
    out.w = folded.w;
    bool keep_bias = layer.bias0().has_value();
    if (!keep_bias) {
        for (double v : folded.bias.data)
            if (v != 0.0) keep_bias = true;
    }
    if (keep_bias) out.bias = folded.bias;
    return out;
}

index_t param_count(const AdaptedLinear& layer) {
    return layer.adapter().param_count() + 2 * layer.d_out();
}

KarstAdapter random_adapter(SeededRng& rng, index_t d_in, index_t d_out, index_t m,
                            index_t r, index_t n_kernels, double std) {
    KarstAdapter adapter = KarstAdapter::init(rng, d_in, d_out, m, r, n_kernels, std);
    for (KronKernel& k : adapter.kernels()) k.b = gaussian_matrix(rng, r, d_out / m, std);
    return adapter;
}

RescaleParams random_rescale(SeededRng& rng, index_t d_out, double std) {
    return RescaleParams(gaussian_vector(rng, d_out, std), gaussian_vector(rng, d_out, std));
}

}  // namespace karst
