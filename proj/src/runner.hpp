#pragma once

// Runs one experiment end to end: task generation, model construction,
// training, and the output files. Outputs are deterministic functions of the
// config (17-significant-digit floats, no timestamps), so rerunning a config
// reproduces them byte for byte.
//
// Files written under the output directory:
//   metrics.csv    "# config <json>" comment line, then
//                  epoch,train_loss,train_acc,test_acc,param_count,seed
//   metrics.jsonl  a "config" record followed by one "epoch" record per epoch
//   model.karst    the trained model with its embedded config

#include <string>

#include "config.hpp"
#include "serialize.hpp"
#include "tasks.hpp"
#include "training.hpp"

namespace karst {

struct RunArtifacts {
    ExperimentConfig config;
    TrainResult result;
    index_t param_count = 0;
    std::string csv_path, jsonl_path, model_path;
};

// Fresh model for the config: random frozen bases, zero-contribution
// adapters, zero rescales. A single-layer model takes the task's teacher
// base as its frozen weight when use_task_base is on and the task has one.
ToyModel build_model(const ExperimentConfig& cfg, const SyntheticTask& task);

// Trains and writes all three files into cfg.out_dir (created on demand).
RunArtifacts run_experiment(const ExperimentConfig& cfg);

// Shortest-width fixed formatting used in the CSV: %.17g round-trips doubles.
std::string format_float(double v);

}  // namespace karst
