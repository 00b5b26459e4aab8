#pragma once

// Desk-scale supervised training of adapted layers: a small tanh MLP whose
// linear layers are AdaptedLinear, softmax cross-entropy on top, analytic
// gradients for every trainable tensor (c, a, b per kernel plus s1, s2 per
// layer), SGD and Adam, and a finite-difference gradient checker. The frozen
// base weights receive no gradients and are unreachable for update by
// construction.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "adapter.hpp"
#include "numerics.hpp"

namespace karst {

struct KernelGrads {
    DenseMatrix c, a, b;
};

struct LayerGrads {
    std::vector<KernelGrads> kernels;
    DenseVector s1, s2;
};

struct GradientSet {
    std::vector<LayerGrads> layers;
};

// Per-layer activations kept by the forward pass for backward:
// x: layer input, z: pre-rescale affine output, y: post-rescale output.
// The next layer's x is tanh(y), so the tanh derivative is recovered from it.
struct LayerCache {
    DenseMatrix x, z, y;
};

struct ForwardCache {
    std::vector<LayerCache> layers;
    DenseMatrix logits;
};

class ToyModel {
public:
    explicit ToyModel(std::vector<AdaptedLinear> layers);

    // Random Gaussian frozen base (std 1/sqrt(d_in) per layer, zero bias)
    // with fresh zero-contribution adapters everywhere.
    static ToyModel create(SeededRng& rng, const std::vector<index_t>& dims, index_t m,
                           index_t r, index_t n_kernels, double init_std);

    index_t layer_count() const { return static_cast<index_t>(layers_.size()); }
    const AdaptedLinear& layer(index_t i) const { return layers_[static_cast<std::size_t>(i)]; }
    AdaptedLinear& layer(index_t i) { return layers_[static_cast<std::size_t>(i)]; }
    const std::vector<AdaptedLinear>& layers() const { return layers_; }

    index_t input_dim() const { return layers_.front().d_in(); }
    index_t output_dim() const { return layers_.back().d_out(); }
    index_t trainable_param_count() const;

    // x_batch rows are samples. tanh between layers, none after the last.
    ForwardCache forward(const DenseMatrix& x_batch) const;
    DenseMatrix forward_logits(const DenseMatrix& x_batch) const;

    // Gradients of mean softmax cross-entropy w.r.t. every trainable tensor.
    GradientSet backward(const ForwardCache& cache, const std::vector<int>& labels) const;
    // Reverse pass from an arbitrary upstream gradient on the logits.
    GradientSet backward_from_output_grad(const ForwardCache& cache,
                                          const DenseMatrix& logit_grad) const;

private:
    std::vector<AdaptedLinear> layers_;
};

// -- loss and metrics --------------------------------------------------------

DenseMatrix softmax_rows(const DenseMatrix& logits);
// Mean over the batch; labels must lie in [0, logits.cols).
double softmax_cross_entropy(const DenseMatrix& logits, const std::vector<int>& labels);
std::vector<int> argmax_rows(const DenseMatrix& logits);
double accuracy(const DenseMatrix& logits, const std::vector<int>& labels);

// -- optimizers --------------------------------------------------------------

class Optimizer {
public:
    virtual ~Optimizer() = default;
    virtual void step(ToyModel& model, const GradientSet& grads) = 0;
};

// Plain SGD: theta -= lr * g.
std::unique_ptr<Optimizer> make_sgd(double learning_rate);
// Adam with beta1=0.9, beta2=0.999, eps=1e-8 and bias correction.
std::unique_ptr<Optimizer> make_adam(double learning_rate);
// id is "sgd" or "adam"; anything else throws listing the choices.
std::unique_ptr<Optimizer> make_optimizer(const std::string& id, double learning_rate);

// -- training loop -----------------------------------------------------------

struct TrainConfig {
    index_t m = 8;
    index_t r = 8;
    index_t n_kernels = 2;
    double init_std = 0.02;
    std::string optimizer = "adam";
    double learning_rate = 1e-3;
    index_t epochs = 200;
    index_t batch_size = 32;
    std::uint64_t seed = 42;
    // Which parameter groups the optimizer may touch. Both off trains
    // nothing (the frozen-base baseline).
    bool update_adapter = true;
    bool update_rescale = true;
};

struct EpochMetrics {
    index_t epoch;  // 1-based
    double train_loss;
    double train_acc;
    double test_acc;
};

struct TrainResult {
    double initial_loss;  // before any update
    double initial_train_acc;
    std::vector<EpochMetrics> history;

    double final_loss() const { return history.empty() ? initial_loss : history.back().train_loss; }
};

struct SyntheticTask;  // tasks.hpp

// Deterministic full-batch-order loop: batches are visited in sample-index
// order, no shuffling. Metrics are evaluated on the full train and test
// splits after each epoch. Throws on NaN loss.
TrainResult train(ToyModel& model, const SyntheticTask& task, const TrainConfig& cfg);

// Zeroes the gradient groups disabled by the config.
void mask_gradients(GradientSet& grads, const TrainConfig& cfg);

// -- gradient checking -------------------------------------------------------

struct GradcheckEntry {
    std::string tensor;  // e.g. "layer0.kernel1.a", "layer1.s1"
    double max_rel_err;
    bool pass;
};

struct GradcheckReport {
    double step;
    double tolerance;
    std::vector<GradcheckEntry> entries;
    bool all_pass;
    double worst;
};

// Central differences (loss at theta +/- step) against a supplied analytic
// gradient set. Relative error per scalar is |a - f| / max(|a|, |f|, 1e-6).
GradcheckReport gradcheck_against(ToyModel& model, const DenseMatrix& x,
                                  const std::vector<int>& labels, const GradientSet& analytic,
                                  double step, double tolerance);
// Convenience: runs forward/backward itself.
GradcheckReport gradcheck(ToyModel& model, const DenseMatrix& x,
                          const std::vector<int>& labels, double step = 1e-5,
                          double tolerance = 1e-4);

// -- merged inference --------------------------------------------------------

struct MergedModel {
    std::vector<MergedAffine> layers;

    DenseMatrix forward_logits(const DenseMatrix& x_batch) const;
};

// Re-parameterizes every layer; the result has no adapter or rescale state.
MergedModel merge_model(const ToyModel& model);

}  // namespace karst
