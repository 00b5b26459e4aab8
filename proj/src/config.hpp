#pragma once

// Experiment configuration: a strict JSON schema with defaults. Unknown keys
// are rejected with their full path ("train.learning_rat") instead of being
// ignored, and every run's outputs embed the fully-resolved config so a file
// on disk always records what produced it.
//
// Schema (all keys optional, defaults shown):
//
// {
//   "task": {
//     "recipe": "gaussian-blobs",        gaussian-blobs | low-rank-shift | rotated-base
//     "input_dim": 16, "classes": 4,
//     "train_samples": 256, "test_samples": 128,
//     "noise_std": 1.0,
//     "blob_separation": 6.0,
//     "shift_kernels": 2, "shift_m": 2, "shift_r": 2,
//     "shift_scale": 1.0, "teacher_rescale_std": 0.0,
//     "rotation_planes": 2, "rotation_angle": 0.7
//   },
//   "model": {
//     "hidden_dims": [],                 extra tanh layers between input and classes
//     "use_task_base": true              start from the task's teacher base when it has one
//   },
//   "adapter": {
//     "m": 8, "r": 8, "kernels": 2, "init_std": 0.02
//   },
//   "train": {
//     "optimizer": "adam", "learning_rate": 0.001,
//     "epochs": 200, "batch_size": 32, "seed": 42,
//     "update_adapter": true, "update_rescale": true
//   },
//   "output": { "dir": "out" }
// }
//
// When "adapter.m" is left at its default it is scaled down automatically to
// the largest value <= 8 dividing every layer dimension. An explicitly set m
// is passed through untouched, so indivisible choices fail in the adapter
// with its divisibility error.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tasks.hpp"
#include "training.hpp"

namespace karst {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ExperimentConfig {
    TaskSpec task;
    std::vector<index_t> hidden_dims;
    bool use_task_base = true;
    TrainConfig train;
    std::string out_dir = "out";

    // Layer dimension chain [input_dim, hidden..., classes].
    std::vector<index_t> model_dims() const;
    // The config as it will actually run, defaults and resolved m included.
    nlohmann::json resolved() const;
};

ExperimentConfig parse_config(const nlohmann::json& root);
ExperimentConfig load_config_file(const std::string& path);

}  // namespace karst
