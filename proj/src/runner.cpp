#include "runner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "errors.hpp"

namespace karst {

namespace {

// Offset so the model's parameter draws never replay the task's stream even
// though both derive from the run seed.
constexpr std::uint64_t kModelStreamTag = 0x9e3779b97f4a7c15ull;

}  // namespace

std::string format_float(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

ToyModel build_model(const ExperimentConfig& cfg, const SyntheticTask& task) {
    SeededRng rng(cfg.train.seed ^ kModelStreamTag);
    const std::vector<index_t> dims = cfg.model_dims();
    ToyModel model = ToyModel::create(rng, dims, cfg.train.m, cfg.train.r, cfg.train.n_kernels,
                                      cfg.train.init_std);
    if (cfg.use_task_base && task.base_w0 && dims.size() == 2) {
        // Single-layer student on top of the teacher's frozen base: rebuild
        // the layer around the task weight, keeping the fresh adapter state.
        const AdaptedLinear& drafted = model.layer(0);
        std::vector<AdaptedLinear> layers;
        layers.emplace_back(*task.base_w0, drafted.bias0(), drafted.adapter(), drafted.rescale());
        return ToyModel(std::move(layers));
    }
    return model;
}

RunArtifacts run_experiment(const ExperimentConfig& cfg) {
    SyntheticTask task = make_task(cfg.task, cfg.train.seed);
    ToyModel model = build_model(cfg, task);

    RunArtifacts out;
    out.config = cfg;
    out.result = train(model, task, cfg.train);
    out.param_count = model.trainable_param_count();

    const std::string config_json = cfg.resolved().dump();
    std::filesystem::create_directories(cfg.out_dir);
    out.csv_path = cfg.out_dir + "/metrics.csv";
    out.jsonl_path = cfg.out_dir + "/metrics.jsonl";
    out.model_path = cfg.out_dir + "/model.karst";

    {
        std::ofstream csv(out.csv_path, std::ios::binary);  // binary: stable newlines
        if (!csv) throw IoError("cannot write " + out.csv_path);
        csv << "# config " << config_json << "\n";
        csv << "epoch,train_loss,train_acc,test_acc,param_count,seed\n";
        for (const EpochMetrics& e : out.result.history) {
            csv << e.epoch << ',' << format_float(e.train_loss) << ',' << format_float(e.train_acc)
                << ',' << format_float(e.test_acc) << ',' << out.param_count << ','
                << cfg.train.seed << "\n";
        }
    }
    {
        std::ofstream jsonl(out.jsonl_path, std::ios::binary);
        if (!jsonl) throw IoError("cannot write " + out.jsonl_path);
        nlohmann::json head = {{"record", "config"}};
        head["config"] = cfg.resolved();
        head["param_count"] = out.param_count;
        head["initial_train_loss"] = out.result.initial_loss;
        jsonl << head.dump() << "\n";
        for (const EpochMetrics& e : out.result.history) {
            nlohmann::json row = {{"record", "epoch"},
                                  {"epoch", e.epoch},
                                  {"train_loss", e.train_loss},
                                  {"train_acc", e.train_acc},
                                  {"test_acc", e.test_acc}};
            jsonl << row.dump() << "\n";
        }
    }
    save_model(out.model_path, to_model_data(model, config_json, cfg.train.seed));
    return out;
}

}  // namespace karst
