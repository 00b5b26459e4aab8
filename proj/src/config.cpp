#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

namespace karst {

namespace {

using nlohmann::json;

// One object section of the schema: checks key membership up front so typos
// are reported with their full path, then hands out typed values.
class Section {
public:
    Section(const json& j, std::string path, std::set<std::string> allowed)
        : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ConfigError("config key \"" + path_ + "\" must be an object");
        }
        for (const auto& item : j_.items()) {
            if (!allowed.count(item.key())) {
                throw ConfigError("unknown config key \"" + join(item.key()) + "\"");
            }
        }
    }

    bool has(const char* key) const { return j_.contains(key); }
    const json& raw(const char* key) const { return j_.at(key); }

    void number(const char* key, double& out) const {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_number()) throw ConfigError("config key \"" + join(key) + "\" must be a number");
        out = v.get<double>();
    }

    void integer(const char* key, index_t& out, index_t min_value) const {
        if (!has(key)) return;
        out = as_integer(j_.at(key), key, min_value);
    }

    void unsigned64(const char* key, std::uint64_t& out) const {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            throw ConfigError("config key \"" + join(key) + "\" must be a non-negative integer");
        }
        out = v.get<std::uint64_t>();
    }

    void boolean(const char* key, bool& out) const {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError("config key \"" + join(key) + "\" must be a boolean");
        out = v.get<bool>();
    }

    void string(const char* key, std::string& out) const {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_string()) throw ConfigError("config key \"" + join(key) + "\" must be a string");
        out = v.get<std::string>();
    }

    void int_list(const char* key, std::vector<index_t>& out, index_t min_value) const {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_array()) {
            throw ConfigError("config key \"" + join(key) + "\" must be an array of integers");
        }
        out.clear();
        for (const json& e : v) out.push_back(as_integer(e, key, min_value));
    }

    std::string join(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

private:
    index_t as_integer(const json& v, const char* key, index_t min_value) const {
        if (!v.is_number_integer() && !v.is_number_unsigned()) {
            throw ConfigError("config key \"" + join(key) + "\" must be an integer");
        }
        const index_t value = v.get<index_t>();
        if (value < min_value) {
            throw ConfigError("config key \"" + join(key) + "\" must be >= " +
                              std::to_string(min_value) + ", got " + std::to_string(value));
        }
        return value;
    }

    const json& j_;
    std::string path_;
};

const json kEmptyObject = json::object();

const json& child_or_empty(const json& root, const char* key) {
    return root.contains(key) ? root.at(key) : kEmptyObject;
}

index_t resolve_m(index_t requested, const std::vector<index_t>& dims) {
    index_t g = 0;
    for (index_t d : dims) g = std::gcd(g, d);
    for (index_t m = std::min(requested, g); m >= 2; --m) {
        if (g % m == 0) return m;
    }
    return 1;
}

}  // namespace

std::vector<index_t> ExperimentConfig::model_dims() const {
    std::vector<index_t> dims;
    dims.push_back(task.input_dim);
    dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
    dims.push_back(task.classes);
    return dims;
}

ExperimentConfig parse_config(const nlohmann::json& root) {
    ExperimentConfig cfg;
    Section top(root, "", {"task", "model", "adapter", "train", "output"});

    {
        Section s(child_or_empty(root, "task"), "task",
                  {"recipe", "input_dim", "classes", "train_samples", "test_samples", "noise_std",
                   "blob_separation", "shift_kernels", "shift_m", "shift_r", "shift_scale",
                   "teacher_rescale_std", "rotation_planes", "rotation_angle"});
        s.string("recipe", cfg.task.recipe);
        const auto known = task_recipes();
        if (std::find(known.begin(), known.end(), cfg.task.recipe) == known.end()) {
            std::string msg = "config key \"task.recipe\": unknown recipe \"" + cfg.task.recipe +
                              "\" (choices:";
            for (const std::string& r : known) msg += " " + r;
            throw ConfigError(msg + ")");
        }
        s.integer("input_dim", cfg.task.input_dim, 1);
        s.integer("classes", cfg.task.classes, 2);
        s.integer("train_samples", cfg.task.train_samples, 1);
        s.integer("test_samples", cfg.task.test_samples, 1);
        s.number("noise_std", cfg.task.noise_std);
        if (cfg.task.noise_std < 0.0) throw ConfigError("config key \"task.noise_std\" must be >= 0");
        s.number("blob_separation", cfg.task.blob_separation);
        s.integer("shift_kernels", cfg.task.shift_kernels, 1);
        s.integer("shift_m", cfg.task.shift_m, 1);
        s.integer("shift_r", cfg.task.shift_r, 1);
        s.number("shift_scale", cfg.task.shift_scale);
        s.number("teacher_rescale_std", cfg.task.teacher_rescale_std);
        s.integer("rotation_planes", cfg.task.rotation_planes, 1);
        s.number("rotation_angle", cfg.task.rotation_angle);
    }
    {
        Section s(child_or_empty(root, "model"), "model", {"hidden_dims", "use_task_base"});
        s.int_list("hidden_dims", cfg.hidden_dims, 1);
        s.boolean("use_task_base", cfg.use_task_base);
    }
    bool m_explicit = false;
    {
        Section s(child_or_empty(root, "adapter"), "adapter", {"m", "r", "kernels", "init_std"});
        m_explicit = s.has("m");
        s.integer("m", cfg.train.m, 1);
        s.integer("r", cfg.train.r, 1);
        s.integer("kernels", cfg.train.n_kernels, 1);
        s.number("init_std", cfg.train.init_std);
        if (cfg.train.init_std <= 0.0) {
            throw ConfigError("config key \"adapter.init_std\" must be > 0");
        }
    }
    {
        Section s(child_or_empty(root, "train"), "train",
                  {"optimizer", "learning_rate", "epochs", "batch_size", "seed", "update_adapter",
                   "update_rescale"});
        s.string("optimizer", cfg.train.optimizer);
        if (cfg.train.optimizer != "sgd" && cfg.train.optimizer != "adam") {
            throw ConfigError("config key \"train.optimizer\" must be \"sgd\" or \"adam\", got \"" +
                              cfg.train.optimizer + "\"");
        }
        s.number("learning_rate", cfg.train.learning_rate);
        if (cfg.train.learning_rate < 0.0) {
            throw ConfigError("config key \"train.learning_rate\" must be >= 0");
        }
        s.integer("epochs", cfg.train.epochs, 0);
        s.integer("batch_size", cfg.train.batch_size, 1);
        s.unsigned64("seed", cfg.train.seed);
        s.boolean("update_adapter", cfg.train.update_adapter);
        s.boolean("update_rescale", cfg.train.update_rescale);
    }
    {
        Section s(child_or_empty(root, "output"), "output", {"dir"});
        s.string("dir", cfg.out_dir);
    }

    if (!m_explicit) cfg.train.m = resolve_m(cfg.train.m, cfg.model_dims());
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
    return parse_config(root);
}

nlohmann::json ExperimentConfig::resolved() const {
    nlohmann::json j;
    j["task"] = {{"recipe", task.recipe},
                 {"input_dim", task.input_dim},
                 {"classes", task.classes},
                 {"train_samples", task.train_samples},
                 {"test_samples", task.test_samples},
                 {"noise_std", task.noise_std}};
    if (task.recipe == "gaussian-blobs") {
        j["task"]["blob_separation"] = task.blob_separation;
    } else if (task.recipe == "low-rank-shift") {
        j["task"]["shift_kernels"] = task.shift_kernels;
        j["task"]["shift_m"] = task.shift_m;
        j["task"]["shift_r"] = task.shift_r;
        j["task"]["shift_scale"] = task.shift_scale;
        j["task"]["teacher_rescale_std"] = task.teacher_rescale_std;
    } else if (task.recipe == "rotated-base") {
        j["task"]["rotation_planes"] = task.rotation_planes;
        j["task"]["rotation_angle"] = task.rotation_angle;
    }
    j["model"] = {{"hidden_dims", hidden_dims}, {"use_task_base", use_task_base}};
    j["adapter"] = {{"m", train.m},
                    {"r", train.r},
                    {"kernels", train.n_kernels},
                    {"init_std", train.init_std}};
    j["train"] = {{"optimizer", train.optimizer},
                  {"learning_rate", train.learning_rate},
                  {"epochs", train.epochs},
                  {"batch_size", train.batch_size},
                  {"seed", train.seed},
                  {"update_adapter", train.update_adapter},
                  {"update_rescale", train.update_rescale}};
    j["output"] = {{"dir", out_dir}};
    return j;
}

}  // namespace karst
