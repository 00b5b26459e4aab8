#include "tasks.hpp"

#include <cmath>
#include <stdexcept>

#include "adapter.hpp"

namespace karst {

namespace {

void validate_common(const TaskSpec& spec) {
    if (spec.input_dim < 1) throw std::invalid_argument("input_dim must be >= 1");
    if (spec.classes < 2) throw std::invalid_argument("classes must be >= 2");
    if (spec.train_samples < 1 || spec.test_samples < 1) {
        throw std::invalid_argument("train_samples and test_samples must be >= 1");
    }
    if (spec.noise_std < 0.0) throw std::invalid_argument("noise_std must be >= 0");
}

DenseMatrix sample_inputs(SeededRng& rng, index_t n, index_t dim) {
    return gaussian_matrix(rng, n, dim, 1.0);
}

// Label = argmax over columns of (1+s1) .* (W_t^T x) + s2 + noise.
std::vector<int> teacher_labels(SeededRng& rng, const DenseMatrix& x, const DenseMatrix& w_teacher,
                                const RescaleParams& rescale, double noise_std) {
    std::vector<int> labels;
    labels.reserve(static_cast<std::size_t>(x.rows));
    for (index_t i = 0; i < x.rows; ++i) {
        DenseVector xi(x.cols);
        for (index_t j = 0; j < x.cols; ++j) xi[j] = x(i, j);
        DenseVector logits = rescale_apply(rescale, matvec_t(w_teacher, xi));
        if (noise_std > 0.0) {
            for (index_t j = 0; j < logits.len(); ++j)
                logits[j] += noise_std * rng.next_gaussian();
        }
        index_t best = 0;
        for (index_t j = 1; j < logits.len(); ++j)
            if (logits[j] > logits[best]) best = j;
        labels.push_back(static_cast<int>(best));
    }
    return labels;
}

SyntheticTask make_blobs(const TaskSpec& spec, std::uint64_t seed) {
    SeededRng rng(seed);
    // Means at blob_separation times a random unit direction per class.
    std::vector<DenseVector> means;
    for (index_t c = 0; c < spec.classes; ++c) {
        DenseVector dir = gaussian_vector(rng, spec.input_dim, 1.0);
        const double n = norm2(dir);
        for (index_t j = 0; j < spec.input_dim; ++j) dir[j] *= spec.blob_separation / n;
        means.push_back(std::move(dir));
    }
    auto fill_split = [&](index_t count, DenseMatrix& x, std::vector<int>& labels) {
        x = DenseMatrix(count, spec.input_dim);
        labels.resize(static_cast<std::size_t>(count));
        for (index_t i = 0; i < count; ++i) {
            const index_t c = i % spec.classes;  // balanced, deterministic
            labels[static_cast<std::size_t>(i)] = static_cast<int>(c);
            const DenseVector& mu = means[static_cast<std::size_t>(c)];
            for (index_t j = 0; j < spec.input_dim; ++j)
                x(i, j) = mu[j] + spec.noise_std * rng.next_gaussian();
        }
    };
    SyntheticTask task;
    task.recipe = spec.recipe;
    task.seed = seed;
    task.classes = spec.classes;
    fill_split(spec.train_samples, task.train_x, task.train_labels);
    fill_split(spec.test_samples, task.test_x, task.test_labels);
    return task;
}

SyntheticTask make_low_rank_shift(const TaskSpec& spec, std::uint64_t seed) {
    if (spec.shift_kernels < 1 || spec.shift_m < 1 || spec.shift_r < 1) {
        throw std::invalid_argument("shift_kernels, shift_m and shift_r must be >= 1");
    }
    SeededRng rng(seed);
    DenseMatrix w0 =
        gaussian_matrix(rng, spec.input_dim, spec.classes, 1.0 / std::sqrt(static_cast<double>(spec.input_dim)));
    // Draw a structured shift, then rescale its b factors (the shift is
    // linear in them) to pin ||shift||_F = shift_scale * ||W0||_F.
    KarstAdapter shift = random_adapter(rng, spec.input_dim, spec.classes, spec.shift_m,
                                        spec.shift_r, spec.shift_kernels, 0.5);
    DenseMatrix delta = shift.materialize();
    const double dn = frobenius_norm(delta);
    if (dn == 0.0) throw std::runtime_error("degenerate zero teacher shift");
    const double gain = spec.shift_scale * frobenius_norm(w0) / dn;
    for (KronKernel& k : shift.kernels())
        for (double& v : k.b.data) v *= gain;
    DenseMatrix w_teacher = add(w0, shift.materialize());

    RescaleParams teacher_rescale(spec.classes);
    if (spec.teacher_rescale_std > 0.0) {
        teacher_rescale.s1 = gaussian_vector(rng, spec.classes, spec.teacher_rescale_std);
        teacher_rescale.s2 = gaussian_vector(rng, spec.classes, spec.teacher_rescale_std);
    }

    SyntheticTask task;
    task.recipe = spec.recipe;
    task.seed = seed;
    task.classes = spec.classes;
    task.train_x = sample_inputs(rng, spec.train_samples, spec.input_dim);
    task.test_x = sample_inputs(rng, spec.test_samples, spec.input_dim);
    task.train_labels = teacher_labels(rng, task.train_x, w_teacher, teacher_rescale, spec.noise_std);
    task.test_labels = teacher_labels(rng, task.test_x, w_teacher, teacher_rescale, spec.noise_std);
    task.base_w0 = std::move(w0);
    return task;
}

// Orthonormalizes 2*planes Gaussian columns (modified Gram-Schmidt), then
// applies a Givens-style rotation by `angle` inside each consecutive pair.
// R - I has rank at most 2*planes.
DenseMatrix random_rotation(SeededRng& rng, index_t dim, index_t planes, double angle) {
    if (2 * planes > dim) {
        throw std::invalid_argument("rotation needs 2*rotation_planes <= classes, got planes=" +
                                    std::to_string(planes) + " with classes=" + std::to_string(dim));
    }
    DenseMatrix basis = gaussian_matrix(rng, dim, 2 * planes, 1.0);
    for (index_t c = 0; c < basis.cols; ++c) {
        for (index_t prev = 0; prev < c; ++prev) {
            double dot = 0.0;
            for (index_t i = 0; i < dim; ++i) dot += basis(i, c) * basis(i, prev);
            for (index_t i = 0; i < dim; ++i) basis(i, c) -= dot * basis(i, prev);
        }
        double n = 0.0;
        for (index_t i = 0; i < dim; ++i) n += basis(i, c) * basis(i, c);
        n = std::sqrt(n);
        if (n < 1e-12) throw std::runtime_error("degenerate rotation basis draw");
        for (index_t i = 0; i < dim; ++i) basis(i, c) /= n;
    }
    DenseMatrix rot = identity(dim);
    const double cs = std::cos(angle), sn = std::sin(angle);
    for (index_t p = 0; p < planes; ++p) {
        // Plane spanned by u = column 2p, v = column 2p+1:
        // G = I + (cos-1)(uu^T + vv^T) + sin(vu^T - uv^T).
        DenseMatrix g = identity(dim);
        for (index_t i = 0; i < dim; ++i) {
            const double ui = basis(i, 2 * p), vi = basis(i, 2 * p + 1);
            for (index_t j = 0; j < dim; ++j) {
                const double uj = basis(j, 2 * p), vj = basis(j, 2 * p + 1);
                g(i, j) += (cs - 1.0) * (ui * uj + vi * vj) + sn * (vi * uj - ui * vj);
            }
        }
        rot = matmul(rot, g);
    }
    return rot;
}

SyntheticTask make_rotated_base(const TaskSpec& spec, std::uint64_t seed) {
    if (spec.rotation_planes < 1) throw std::invalid_argument("rotation_planes must be >= 1");
    SeededRng rng(seed);
    DenseMatrix w0 =
        gaussian_matrix(rng, spec.input_dim, spec.classes, 1.0 / std::sqrt(static_cast<double>(spec.input_dim)));
    DenseMatrix rot = random_rotation(rng, spec.classes, spec.rotation_planes, spec.rotation_angle);
    DenseMatrix w_teacher = matmul(w0, rot);

    SyntheticTask task;
    task.recipe = spec.recipe;
    task.seed = seed;
    task.classes = spec.classes;
    task.train_x = sample_inputs(rng, spec.train_samples, spec.input_dim);
    task.test_x = sample_inputs(rng, spec.test_samples, spec.input_dim);
    RescaleParams no_rescale(spec.classes);
    task.train_labels = teacher_labels(rng, task.train_x, w_teacher, no_rescale, spec.noise_std);
    task.test_labels = teacher_labels(rng, task.test_x, w_teacher, no_rescale, spec.noise_std);
    task.base_w0 = std::move(w0);
    return task;
}

}  // namespace

std::vector<std::string> task_recipes() {
    return {"gaussian-blobs", "low-rank-shift", "rotated-base"};
}

SyntheticTask make_task(const TaskSpec& spec, std::uint64_t seed) {
    validate_common(spec);
    if (spec.recipe == "gaussian-blobs") return make_blobs(spec, seed);
    if (spec.recipe == "low-rank-shift") return make_low_rank_shift(spec, seed);
    if (spec.recipe == "rotated-base") return make_rotated_base(spec, seed);
    std::string msg = "unknown task recipe \"" + spec.recipe + "\" (choices:";
    for (const std::string& r : task_recipes()) msg += " " + r;
    msg += ")";
    throw std::invalid_argument(msg);
}

}  // namespace karst
