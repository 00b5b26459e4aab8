#include "training.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "errors.hpp"
#include "tasks.hpp"

namespace karst {

namespace {

DenseVector row_of(const DenseMatrix& m, index_t i) {
    DenseVector v(m.cols);
    for (index_t j = 0; j < m.cols; ++j) v[j] = m(i, j);
    return v;
}

void set_row(DenseMatrix& m, index_t i, const DenseVector& v) {
    for (index_t j = 0; j < m.cols; ++j) m(i, j) = v[j];
}

void check_labels(const std::vector<int>& labels, index_t batch, index_t classes) {
    if (static_cast<index_t>(labels.size()) != batch) {
        throw std::invalid_argument("label count " + std::to_string(labels.size()) +
                                    " does not match batch size " + std::to_string(batch));
    }
    for (int lbl : labels) {
        if (lbl < 0 || lbl >= classes) {
            throw std::invalid_argument("label " + std::to_string(lbl) + " outside [0, " +
                                        std::to_string(classes) + ")");
        }
    }
}

// Walks every trainable tensor of the model in a fixed order, pairing it with
// the matching gradient buffer. Used by the optimizers so parameter layout
// and moment-state indexing stay in sync by construction.
void for_each_trainable(ToyModel& model, const GradientSet& grads,
                        const std::function<void(std::vector<double>&, const std::vector<double>&)>& fn) {
    if (grads.layers.size() != static_cast<std::size_t>(model.layer_count())) {
        throw std::invalid_argument("gradient set has " + std::to_string(grads.layers.size()) +
                                    " layers, model has " + std::to_string(model.layer_count()));
    }
    for (index_t l = 0; l < model.layer_count(); ++l) {
        AdaptedLinear& layer = model.layer(l);
        const LayerGrads& lg = grads.layers[static_cast<std::size_t>(l)];
        auto& kernels = layer.adapter().kernels();
        if (lg.kernels.size() != kernels.size()) {
            throw std::invalid_argument("gradient kernel count mismatch in layer " +
                                        std::to_string(l));
        }
        for (std::size_t k = 0; k < kernels.size(); ++k) {
            fn(kernels[k].c.data, lg.kernels[k].c.data);
            fn(kernels[k].a.data, lg.kernels[k].a.data);
            fn(kernels[k].b.data, lg.kernels[k].b.data);
        }
        fn(layer.rescale().s1.data, lg.s1.data);
        fn(layer.rescale().s2.data, lg.s2.data);
    }
}

}  // namespace

ToyModel::ToyModel(std::vector<AdaptedLinear> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw std::invalid_argument("model needs at least one layer");
    for (std::size_t i = 1; i < layers_.size(); ++i) {
        if (layers_[i].d_in() != layers_[i - 1].d_out()) {
            throw std::invalid_argument("layer " + std::to_string(i) + " expects input dim " +
                                        std::to_string(layers_[i].d_in()) + " but layer " +
                                        std::to_string(i - 1) + " produces " +
                                        std::to_string(layers_[i - 1].d_out()));
        }
    }
}

ToyModel ToyModel::create(SeededRng& rng, const std::vector<index_t>& dims, index_t m, index_t r,
                          index_t n_kernels, double init_std) {
    if (dims.size() < 2) throw std::invalid_argument("need at least [input_dim, output_dim]");
    std::vector<AdaptedLinear> layers;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        index_t d_in = dims[i], d_out = dims[i + 1];
        DenseMatrix w0 = gaussian_matrix(rng, d_in, d_out, 1.0 / std::sqrt(static_cast<double>(d_in)));
        layers.emplace_back(std::move(w0), DenseVector(d_out),
                            KarstAdapter::init(rng, d_in, d_out, m, r, n_kernels, init_std),
                            RescaleParams(d_out));
    }
    return ToyModel(std::move(layers));
}

index_t ToyModel::trainable_param_count() const {
    index_t total = 0;
    for (const auto& layer : layers_) total += param_count(layer);
    return total;
}

ForwardCache ToyModel::forward(const DenseMatrix& x_batch) const {
    if (x_batch.cols != input_dim()) {
        throw std::invalid_argument("batch has " + std::to_string(x_batch.cols) +
                                    " features, model expects " + std::to_string(input_dim()));
    }
    ForwardCache cache;
    cache.layers.reserve(layers_.size());
    DenseMatrix x = x_batch;
    const index_t batch = x_batch.rows;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const AdaptedLinear& layer = layers_[l];
        DenseMatrix z(batch, layer.d_out());
        DenseMatrix y(batch, layer.d_out());
        for (index_t i = 0; i < batch; ++i) {
            DenseVector zi = layer.forward_affine(row_of(x, i));
            DenseVector yi = rescale_apply(layer.rescale(), zi);
            set_row(z, i, zi);
            set_row(y, i, yi);
        }
        cache.layers.push_back({std::move(x), std::move(z), y});
        if (l + 1 < layers_.size()) {
            x = DenseMatrix(batch, layer.d_out());
            for (index_t i = 0; i < batch; ++i)
                for (index_t j = 0; j < layer.d_out(); ++j) x(i, j) = std::tanh(y(i, j));
        } else {
            cache.logits = std::move(y);
        }
    }
    return cache;
}

DenseMatrix ToyModel::forward_logits(const DenseMatrix& x_batch) const {
    return forward(x_batch).logits;
}

GradientSet ToyModel::backward(const ForwardCache& cache, const std::vector<int>& labels) const {
    const index_t batch = cache.logits.rows;
    check_labels(labels, batch, output_dim());
    // Mean cross-entropy through softmax: g = (softmax - onehot) / batch.
    DenseMatrix g = softmax_rows(cache.logits);
    for (index_t i = 0; i < batch; ++i) g(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
    const double inv_batch = 1.0 / static_cast<double>(batch);
    for (double& v : g.data) v *= inv_batch;
    return backward_from_output_grad(cache, g);
}

GradientSet ToyModel::backward_from_output_grad(const ForwardCache& cache,
                                                const DenseMatrix& logit_grad) const {
    if (cache.layers.size() != layers_.size()) {
        throw std::invalid_argument("cache has " + std::to_string(cache.layers.size()) +
                                    " layers, model has " + std::to_string(layers_.size()));
    }
    if (logit_grad.rows != cache.logits.rows || logit_grad.cols != cache.logits.cols) {
        throw std::invalid_argument("output gradient shape " + logit_grad.shape_str() +
                                    " does not match logits " + cache.logits.shape_str());
    }
    const index_t batch = cache.logits.rows;

    GradientSet grads;
    grads.layers.resize(layers_.size());
    DenseMatrix gy = logit_grad;  // dL/dy of the current layer

    for (std::size_t li = layers_.size(); li-- > 0;) {
        const AdaptedLinear& layer = layers_[li];
        const LayerCache& lc = cache.layers[li];
        if (lc.x.rows != batch || lc.x.cols != layer.d_in() || lc.z.cols != layer.d_out()) {
            throw std::invalid_argument("cached activations for layer " + std::to_string(li) +
                                        " do not match the model shapes");
        }
        if (li + 1 < layers_.size()) {
            // y fed tanh; the next layer cached tanh(y) as its input.
            const DenseMatrix& h = cache.layers[li + 1].x;
            for (index_t i = 0; i < batch; ++i)
                for (index_t j = 0; j < layer.d_out(); ++j) gy(i, j) *= 1.0 - h(i, j) * h(i, j);
        }

        LayerGrads& lg = grads.layers[li];
        lg.s1 = DenseVector(layer.d_out());
        lg.s2 = DenseVector(layer.d_out());
        const DenseVector& s1 = layer.rescale().s1;
        DenseMatrix gz(batch, layer.d_out());
        for (index_t i = 0; i < batch; ++i) {
            for (index_t j = 0; j < layer.d_out(); ++j) {
                lg.s1[j] += gy(i, j) * lc.z(i, j);
                lg.s2[j] += gy(i, j);
                gz(i, j) = gy(i, j) * (1.0 + s1[j]);
            }
        }

        // Weight-space gradient G = sum_i x_i gz_i^T, same (d_in x d_out)
        // layout as the stored weights. Every factor gradient is a
        // contraction of G against the other factors of its kernel.
        DenseMatrix G = matmul(transpose(lc.x), gz);
        const KarstAdapter& ad = layer.adapter();
        const index_t m = ad.m();
        const index_t p2 = layer.d_in() / m, q2 = layer.d_out() / m;
        lg.kernels.reserve(ad.kernels().size());
        for (const KronKernel& ker : ad.kernels()) {
            KernelGrads kg{zeros(m, m), zeros(p2, ad.r()), zeros(ad.r(), q2)};
            DenseMatrix d = matmul(ker.a, ker.b);  // p2 x q2
            DenseMatrix gd = zeros(p2, q2);
            for (index_t p = 0; p < m; ++p) {
                for (index_t q = 0; q < m; ++q) {
                    double dot = 0.0;
                    const double cpq = ker.c(p, q);
                    for (index_t u = 0; u < p2; ++u) {
                        for (index_t v = 0; v < q2; ++v) {
                            const double gpq = G(p * p2 + u, q * q2 + v);
                            dot += gpq * d(u, v);
                            gd(u, v) += cpq * gpq;
                        }
                    }
                    kg.c(p, q) = dot;
                }
            }
            kg.a = matmul(gd, transpose(ker.b));
            kg.b = matmul(transpose(ker.a), gd);
            lg.kernels.push_back(std::move(kg));
        }

        if (li > 0) {
            // dL/dx_i = (W0 + delta) gz_i, both terms via structured paths.
            DenseMatrix gx(batch, layer.d_in());
            for (index_t i = 0; i < batch; ++i) {
                DenseVector gzi = row_of(gz, i);
                DenseVector gxi = matvec(layer.w0(), gzi);
                DenseVector gdelta = ad.apply_untransposed(gzi);
                for (index_t j = 0; j < layer.d_in(); ++j) gxi[j] += gdelta[j];
                set_row(gx, i, gxi);
            }
            gy = std::move(gx);
        }
    }
    return grads;
}

// -- loss and metrics --------------------------------------------------------

DenseMatrix softmax_rows(const DenseMatrix& logits) {
    DenseMatrix out(logits.rows, logits.cols);
    for (index_t i = 0; i < logits.rows; ++i) {
        double mx = logits(i, 0);
        for (index_t j = 1; j < logits.cols; ++j) mx = std::max(mx, logits(i, j));
        double sum = 0.0;
        for (index_t j = 0; j < logits.cols; ++j) {
            out(i, j) = std::exp(logits(i, j) - mx);
            sum += out(i, j);
        }
        for (index_t j = 0; j < logits.cols; ++j) out(i, j) /= sum;
    }
    return out;
}

double softmax_cross_entropy(const DenseMatrix& logits, const std::vector<int>& labels) {
    check_labels(labels, logits.rows, logits.cols);
    if (logits.rows == 0) throw std::invalid_argument("cross-entropy of an empty batch");
    double total = 0.0;
    for (index_t i = 0; i < logits.rows; ++i) {
        double mx = logits(i, 0);
        for (index_t j = 1; j < logits.cols; ++j) mx = std::max(mx, logits(i, j));
        double sum = 0.0;
        for (index_t j = 0; j < logits.cols; ++j) sum += std::exp(logits(i, j) - mx);
        total += mx + std::log(sum) - logits(i, labels[static_cast<std::size_t>(i)]);
    }
    return total / static_cast<double>(logits.rows);
}

std::vector<int> argmax_rows(const DenseMatrix& logits) {
    std::vector<int> out(static_cast<std::size_t>(logits.rows));
    for (index_t i = 0; i < logits.rows; ++i) {
        index_t best = 0;
        for (index_t j = 1; j < logits.cols; ++j)
            if (logits(i, j) > logits(i, best)) best = j;
        out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return out;
}

double accuracy(const DenseMatrix& logits, const std::vector<int>& labels) {
    check_labels(labels, logits.rows, logits.cols);
    if (logits.rows == 0) throw std::invalid_argument("accuracy of an empty batch");
    std::vector<int> pred = argmax_rows(logits);
    index_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(logits.rows);
}

// -- optimizers --------------------------------------------------------------

namespace {

class SgdOptimizer final : public Optimizer {
public:
    explicit SgdOptimizer(double lr) : lr_(lr) {}
    void step(ToyModel& model, const GradientSet& grads) override {
        for_each_trainable(model, grads, [this](std::vector<double>& p, const std::vector<double>& g) {
            for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr_ * g[i];
        });
    }

private:
    double lr_;
};

class AdamOptimizer final : public Optimizer {
public:
    explicit AdamOptimizer(double lr) : lr_(lr) {}
    void step(ToyModel& model, const GradientSet& grads) override {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        std::size_t slot = 0;
        for_each_trainable(model, grads, [&](std::vector<double>& p, const std::vector<double>& g) {
            if (slot == m_.size()) {
                m_.emplace_back(p.size(), 0.0);
                v_.emplace_back(p.size(), 0.0);
            }
            std::vector<double>& m = m_[slot];
            std::vector<double>& v = v_[slot];
            ++slot;
            for (std::size_t i = 0; i < p.size(); ++i) {
                m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
                v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
                p[i] -= lr_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
            }
        });
    }

private:
    static constexpr double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    double lr_;
    std::int64_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;  // per-tensor moments, walk order
};

}  // namespace

std::unique_ptr<Optimizer> make_sgd(double learning_rate) {
    return std::make_unique<SgdOptimizer>(learning_rate);
}

std::unique_ptr<Optimizer> make_adam(double learning_rate) {
    return std::make_unique<AdamOptimizer>(learning_rate);
}

std::unique_ptr<Optimizer> make_optimizer(const std::string& id, double learning_rate) {
    if (id == "sgd") return make_sgd(learning_rate);
    if (id == "adam") return make_adam(learning_rate);
    throw std::invalid_argument("unknown optimizer \"" + id + "\" (choices: sgd, adam)");
}

// -- training loop -----------------------------------------------------------

void mask_gradients(GradientSet& grads, const TrainConfig& cfg) {
    for (LayerGrads& lg : grads.layers) {
        if (!cfg.update_adapter) {
            for (KernelGrads& kg : lg.kernels) {
                std::fill(kg.c.data.begin(), kg.c.data.end(), 0.0);
                std::fill(kg.a.data.begin(), kg.a.data.end(), 0.0);
                std::fill(kg.b.data.begin(), kg.b.data.end(), 0.0);
            }
        }
        if (!cfg.update_rescale) {
            std::fill(lg.s1.data.begin(), lg.s1.data.end(), 0.0);
            std::fill(lg.s2.data.begin(), lg.s2.data.end(), 0.0);
        }
    }
}

namespace {

DenseMatrix slice_rows(const DenseMatrix& m, index_t begin, index_t end) {
    DenseMatrix out(end - begin, m.cols);
    for (index_t i = begin; i < end; ++i)
        for (index_t j = 0; j < m.cols; ++j) out(i - begin, j) = m(i, j);
    return out;
}

}  // namespace

TrainResult train(ToyModel& model, const SyntheticTask& task, const TrainConfig& cfg) {
    if (cfg.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
    if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    std::unique_ptr<Optimizer> opt = make_optimizer(cfg.optimizer, cfg.learning_rate);

    const index_t n_train = task.train_x.rows;
    TrainResult result;
    {
        DenseMatrix logits = model.forward_logits(task.train_x);
        result.initial_loss = softmax_cross_entropy(logits, task.train_labels);
        result.initial_train_acc = accuracy(logits, task.train_labels);
    }

    for (index_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        for (index_t start = 0; start < n_train; start += cfg.batch_size) {
            const index_t stop = std::min(n_train, start + cfg.batch_size);
            DenseMatrix xb = slice_rows(task.train_x, start, stop);
            std::vector<int> yb(task.train_labels.begin() + start, task.train_labels.begin() + stop);
            ForwardCache cache = model.forward(xb);
            GradientSet grads = model.backward(cache, yb);
            mask_gradients(grads, cfg);
            opt->step(model, grads);
        }
        DenseMatrix train_logits = model.forward_logits(task.train_x);
        const double train_loss = softmax_cross_entropy(train_logits, task.train_labels);
        if (!std::isfinite(train_loss)) {
            throw NumericError("training diverged: loss is not finite at epoch " +
                                     std::to_string(epoch));
        }
        DenseMatrix test_logits = model.forward_logits(task.test_x);
        result.history.push_back({epoch, train_loss, accuracy(train_logits, task.train_labels),
                                  accuracy(test_logits, task.test_labels)});
    }
    return result;
}

// -- gradient checking -------------------------------------------------------

namespace {

double fd_loss(ToyModel& model, const DenseMatrix& x, const std::vector<int>& labels) {
    return softmax_cross_entropy(model.forward_logits(x), labels);
}

GradcheckEntry check_tensor(ToyModel& model, const DenseMatrix& x, const std::vector<int>& labels,
                            std::vector<double>& param, const std::vector<double>& analytic,
                            const std::string& name, double step, double tolerance) {
    double worst = 0.0;
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double saved = param[i];
        param[i] = saved + step;
        const double up = fd_loss(model, x, labels);
        param[i] = saved - step;
        const double down = fd_loss(model, x, labels);
        param[i] = saved;
        const double fd = (up - down) / (2.0 * step);
        const double a = analytic[i];
        const double denom = std::max({std::abs(a), std::abs(fd), 1e-6});
        worst = std::max(worst, std::abs(a - fd) / denom);
    }
    return {name, worst, worst <= tolerance};
}

}  // namespace

GradcheckReport gradcheck_against(ToyModel& model, const DenseMatrix& x,
                                  const std::vector<int>& labels, const GradientSet& analytic,
                                  double step, double tolerance) {
    if (step <= 0.0) throw std::invalid_argument("gradcheck step must be positive");
    GradcheckReport report{step, tolerance, {}, true, 0.0};
    for (index_t l = 0; l < model.layer_count(); ++l) {
        AdaptedLinear& layer = model.layer(l);
        const LayerGrads& lg = analytic.layers.at(static_cast<std::size_t>(l));
        auto& kernels = layer.adapter().kernels();
        const std::string prefix = "layer" + std::to_string(l) + ".";
        for (std::size_t k = 0; k < kernels.size(); ++k) {
            const std::string kp = prefix + "kernel" + std::to_string(k) + ".";
            report.entries.push_back(check_tensor(model, x, labels, kernels[k].c.data,
                                                  lg.kernels.at(k).c.data, kp + "c", step, tolerance));
            report.entries.push_back(check_tensor(model, x, labels, kernels[k].a.data,
                                                  lg.kernels.at(k).a.data, kp + "a", step, tolerance));
            report.entries.push_back(check_tensor(model, x, labels, kernels[k].b.data,
                                                  lg.kernels.at(k).b.data, kp + "b", step, tolerance));
        }
        report.entries.push_back(check_tensor(model, x, labels, layer.rescale().s1.data, lg.s1.data,
                                              prefix + "s1", step, tolerance));
        report.entries.push_back(check_tensor(model, x, labels, layer.rescale().s2.data, lg.s2.data,
                                              prefix + "s2", step, tolerance));
    }
    for (const GradcheckEntry& e : report.entries) {
        report.worst = std::max(report.worst, e.max_rel_err);
        report.all_pass = report.all_pass && e.pass;
    }
    return report;
}

GradcheckReport gradcheck(ToyModel& model, const DenseMatrix& x, const std::vector<int>& labels,
                          double step, double tolerance) {
    ForwardCache cache = model.forward(x);
    GradientSet analytic = model.backward(cache, labels);
    return gradcheck_against(model, x, labels, analytic, step, tolerance);
}

// -- merged inference --------------------------------------------------------

DenseMatrix MergedModel::forward_logits(const DenseMatrix& x_batch) const {
    DenseMatrix x = x_batch;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const MergedAffine& layer = layers[l];
        DenseMatrix y(x.rows, layer.w.cols);
        for (index_t i = 0; i < x.rows; ++i) {
            DenseVector yi = layer.forward(row_of(x, i));
            set_row(y, i, yi);
        }
        if (l + 1 < layers.size()) {
            for (double& v : y.data) v = std::tanh(v);
        }
        x = std::move(y);
    }
    return x;
}

MergedModel merge_model(const ToyModel& model) {
    MergedModel merged;
    for (const AdaptedLinear& layer : model.layers()) merged.layers.push_back(merge(layer));
    return merged;
}

}  // namespace karst
