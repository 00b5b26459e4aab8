#pragma once

// Synthetic classification tasks for the training harness. Three recipes:
//
//   gaussian-blobs   class-conditional Gaussians around separated means;
//                    no teacher weights, adapters start from a random base.
//   low-rank-shift   labels come from a teacher that is a frozen base W0
//                    plus a Kronecker-structured additive shift (and an
//                    optional small output rescale); the base W0 travels
//                    with the task so a student adapts exactly the part the
//                    teacher changed.
//   rotated-base     teacher is W0 composed with a rotation acting in a few
//                    random output planes, so the discrepancy W0 (R - I) has
//                    rank at most 2 * planes.
//
// Everything is a pure function of (spec, seed): equal inputs give
// bit-identical datasets.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "numerics.hpp"
#include "rescale.hpp"

namespace karst {

struct TaskSpec {
    std::string recipe = "gaussian-blobs";
    index_t input_dim = 16;
    index_t classes = 4;
    index_t train_samples = 256;
    index_t test_samples = 128;
    // Standard deviation of Gaussian noise added to teacher logits before
    // argmax (shift recipes) or to the blob samples around their means.
    double noise_std = 1.0;

    // gaussian-blobs: distance scale of the class means.
    double blob_separation = 6.0;

    // low-rank-shift: structure of the teacher's additive update.
    index_t shift_kernels = 2;
    index_t shift_m = 2;
    index_t shift_r = 2;
    // Frobenius norm of the shift relative to ||W0||_F.
    double shift_scale = 1.0;
    // Std of the teacher's output rescale (0 disables it).
    double teacher_rescale_std = 0.0;

    // rotated-base
    index_t rotation_planes = 2;
    double rotation_angle = 0.7;  // radians
};

struct SyntheticTask {
    std::string recipe;
    std::uint64_t seed = 0;
    index_t classes = 0;
    DenseMatrix train_x, test_x;  // rows are samples
    std::vector<int> train_labels, test_labels;
    // The teacher's frozen base, present for the shift recipes. A model that
    // starts from this base only has to learn the teacher's modification.
    std::optional<DenseMatrix> base_w0;
};

// Builds the dataset for spec.recipe. Unknown recipe names throw an error
// listing the available ones.
SyntheticTask make_task(const TaskSpec& spec, std::uint64_t seed);

std::vector<std::string> task_recipes();

}  // namespace karst
