#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "config.hpp"
#include "errors.hpp"
#include "runner.hpp"
#include "serialize.hpp"

using namespace karst;
namespace fs = std::filesystem;

namespace {

// Scratch space wiped per test.
struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("karst_test_" + std::to_string(::getpid()))) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const char* name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

ExperimentConfig tiny_config(const TempDir& dir) {
    nlohmann::json j = {
        {"task",
         {{"recipe", "low-rank-shift"},
          {"input_dim", 8},
          {"classes", 4},
          {"train_samples", 32},
          {"test_samples", 16}}},
        {"adapter", {{"m", 2}, {"r", 2}, {"kernels", 2}}},
        {"train", {{"epochs", 3}, {"batch_size", 8}, {"seed", 11}}},
        {"output", {{"dir", dir.file("run")}}},
    };
    return parse_config(j);
}

}  // namespace

// -- config -------------------------------------------------------------------

TEST_CASE("empty config parses to the documented defaults") {
    ExperimentConfig cfg = parse_config(nlohmann::json::object());
    CHECK(cfg.task.recipe == "gaussian-blobs");
    CHECK(cfg.task.input_dim == 16);
    CHECK(cfg.task.classes == 4);
    CHECK(cfg.train.r == 8);
    CHECK(cfg.train.n_kernels == 2);
    CHECK(cfg.train.optimizer == "adam");
    CHECK(cfg.train.learning_rate == 0.001);
    CHECK(cfg.train.epochs == 200);
    CHECK(cfg.train.batch_size == 32);
    CHECK(cfg.train.seed == 42);
    CHECK(cfg.train.update_adapter);
    CHECK(cfg.train.update_rescale);
    CHECK(cfg.use_task_base);
    CHECK(cfg.hidden_dims.empty());
    // m defaulted, so it auto-scales to divide gcd(16, 4) = 4.
    CHECK(cfg.train.m == 4);
}

TEST_CASE("defaulted m scales down to divide every layer dimension") {
    nlohmann::json j = {{"task", {{"input_dim", 6}, {"classes", 4}}}};
    CHECK(parse_config(j).train.m == 2);  // gcd(6,4) = 2

    nlohmann::json hidden = {{"task", {{"input_dim", 24}, {"classes", 8}}},
                             {"model", {{"hidden_dims", {16}}}}};
    CHECK(parse_config(hidden).train.m == 8);  // gcd(24,16,8) = 8

    nlohmann::json coprime = {{"task", {{"input_dim", 7}, {"classes", 3}}}};
    CHECK(parse_config(coprime).train.m == 1);
}

TEST_CASE("explicit m is honored verbatim even when it cannot divide the dims") {
    nlohmann::json j = {{"task", {{"input_dim", 6}, {"classes", 4}}}, {"adapter", {{"m", 4}}}};
    ExperimentConfig cfg = parse_config(j);
    CHECK(cfg.train.m == 4);  // passed through; the adapter rejects it later
    SyntheticTask task = make_task(cfg.task, cfg.train.seed);
    CHECK_THROWS_WITH_AS(build_model(cfg, task),
                         "adapter: stacking dimension m=4 must divide d_in=6 and d_out=4",
                         std::invalid_argument);
}

TEST_CASE("unknown config keys are rejected with their full path") {
    CHECK_THROWS_WITH_AS(parse_config({{"trian", nlohmann::json::object()}}),
                         "unknown config key \"trian\"", ConfigError);
    CHECK_THROWS_WITH_AS(parse_config({{"train", {{"learning_rat", 0.1}}}}),
                         "unknown config key \"train.learning_rat\"", ConfigError);
    CHECK_THROWS_WITH_AS(parse_config({{"task", {{"bogus", 1}}}}),
                         "unknown config key \"task.bogus\"", ConfigError);
    CHECK_THROWS_WITH_AS(parse_config({{"adapter", {{"alpha", 16}}}}),
                         "unknown config key \"adapter.alpha\"", ConfigError);
}

TEST_CASE("config type and range violations name the offending key") {
    CHECK_THROWS_WITH_AS(parse_config({{"train", {{"epochs", "many"}}}}),
                         "config key \"train.epochs\" must be an integer", ConfigError);
    CHECK_THROWS_WITH_AS(parse_config({{"train", {{"epochs", 2.5}}}}),
                         "config key \"train.epochs\" must be an integer", ConfigError);
    CHECK_THROWS_WITH_AS(parse_config({{"train", {{"batch_size", 0}}}}),
                         "config key \"train.batch_size\" must be >= 1, got 0", ConfigError);
    CHECK_THROWS_WITH_AS(parse_config({{"train", {{"optimizer", "lbfgs"}}}}),
                         "config key \"train.optimizer\" must be \"sgd\" or \"adam\", got \"lbfgs\"",
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config({{"train", {{"learning_rate", -1.0}}}}),
                         "config key \"train.learning_rate\" must be >= 0", ConfigError);
    CHECK_THROWS_WITH_AS(parse_config({{"train", {{"seed", -4}}}}),
                         "config key \"train.seed\" must be a non-negative integer", ConfigError);
    CHECK_THROWS_WITH_AS(parse_config({{"task", {{"recipe", "mnist"}}}}),
                         "config key \"task.recipe\": unknown recipe \"mnist\" (choices: "
                         "gaussian-blobs low-rank-shift rotated-base)",
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config({{"model", {{"hidden_dims", {8, 0}}}}}),
                         "config key \"model.hidden_dims\" must be >= 1, got 0", ConfigError);
    CHECK_THROWS_AS(parse_config({{"model", {{"hidden_dims", "wide"}}}}), ConfigError);
    CHECK_THROWS_AS(parse_config(nlohmann::json::array({1, 2})), ConfigError);
}

TEST_CASE("config files load, echo resolved values, and reject bad JSON") {
    TempDir dir;
    {
        std::ofstream out(dir.file("cfg.json"));
        out << R"({"task": {"recipe": "rotated-base", "input_dim": 8, "classes": 4},
                   "train": {"epochs": 7}})";
    }
    ExperimentConfig cfg = load_config_file(dir.file("cfg.json"));
    CHECK(cfg.task.recipe == "rotated-base");
    CHECK(cfg.train.epochs == 7);

    nlohmann::json echo = cfg.resolved();
    CHECK(echo["train"]["epochs"] == 7);
    CHECK(echo["adapter"]["m"] == 4);  // resolved, not the requested default 8
    CHECK(echo["task"].contains("rotation_angle"));
    CHECK_FALSE(echo["task"].contains("shift_kernels"));  // other recipes' knobs stay out
    // The echo itself passes the strict parser and reproduces itself.
    ExperimentConfig again = parse_config(echo);
    CHECK(again.resolved() == echo);

    {
        std::ofstream out(dir.file("broken.json"));
        out << "{ not json";
    }
    CHECK_THROWS_AS(load_config_file(dir.file("broken.json")), ConfigError);
    CHECK_THROWS_AS(load_config_file(dir.file("missing.json")), ConfigError);
}

// -- serialization ------------------------------------------------------------

TEST_CASE("adapter files round-trip bit-exactly") {
    TempDir dir;
    SeededRng rng(101);
    KarstAdapter adapter = random_adapter(rng, 12, 8, 2, 3, 2, 0.3);
    save_adapter(dir.file("a.karst"), adapter);
    KarstAdapter loaded = load_adapter(dir.file("a.karst"));

    CHECK(loaded.d_in() == 12);
    CHECK(loaded.d_out() == 8);
    CHECK(loaded.m() == 2);
    CHECK(loaded.r() == 3);
    CHECK(loaded.kernel_count() == 2);
    CHECK(loaded.init_seed() == adapter.init_seed());
    for (index_t k = 0; k < 2; ++k) {
        CHECK(loaded.kernels()[k].c.data == adapter.kernels()[k].c.data);
        CHECK(loaded.kernels()[k].a.data == adapter.kernels()[k].a.data);
        CHECK(loaded.kernels()[k].b.data == adapter.kernels()[k].b.data);
    }
    // Saving the loaded copy reproduces the file byte for byte.
    save_adapter(dir.file("b.karst"), loaded);
    CHECK(slurp(dir.file("a.karst")) == slurp(dir.file("b.karst")));
}

TEST_CASE("model files round-trip bit-exactly with bias and state flags") {
    TempDir dir;
    SeededRng rng(103);
    std::vector<AdaptedLinear> layers;
    layers.emplace_back(gaussian_matrix(rng, 6, 4, 0.5), gaussian_vector(rng, 4, 0.5),
                        random_adapter(rng, 6, 4, 2, 2, 2, 0.3), random_rescale(rng, 4, 0.2));
    layers.emplace_back(gaussian_matrix(rng, 4, 2, 0.5), std::nullopt,
                        random_adapter(rng, 4, 2, 2, 1, 1, 0.3), random_rescale(rng, 2, 0.2));
    ToyModel model(std::move(layers));

    ModelData data = to_model_data(model, "{\"hello\":1}", 77);
    save_model(dir.file("m.karst"), data);
    ModelData loaded = load_model(dir.file("m.karst"));

    CHECK(loaded.seed == 77);
    CHECK(loaded.config_json == "{\"hello\":1}");
    REQUIRE(loaded.layers.size() == 2);
    CHECK(loaded.layers[0].w0.data == data.layers[0].w0.data);
    CHECK(loaded.layers[0].bias0->data == data.layers[0].bias0->data);
    CHECK_FALSE(loaded.layers[1].bias0.has_value());
    CHECK(loaded.layers[1].adapter->kernels()[0].b.data ==
          data.layers[1].adapter->kernels()[0].b.data);
    CHECK(loaded.layers[0].rescale->s1.data == data.layers[0].rescale->s1.data);

    save_model(dir.file("m2.karst"), loaded);
    CHECK(slurp(dir.file("m.karst")) == slurp(dir.file("m2.karst")));

    // The reopened model computes exactly what the original did.
    ToyModel reopened = from_model_data(loaded);
    DenseMatrix x = gaussian_matrix(rng, 3, 6, 1.0);
    CHECK(max_abs_diff(reopened.forward_logits(x), model.forward_logits(x)) == 0.0);
}

TEST_CASE("merged model files drop adapter state and preserve the function") {
    TempDir dir;
    SeededRng rng(107);
    std::vector<AdaptedLinear> layers;
    layers.emplace_back(gaussian_matrix(rng, 6, 4, 0.5), gaussian_vector(rng, 4, 0.5),
                        random_adapter(rng, 6, 4, 2, 2, 2, 0.3), random_rescale(rng, 4, 0.2));
    ToyModel model(std::move(layers));
    ModelData data = to_model_data(model, "", 1);

    ModelData merged = merge_model_data(data);
    REQUIRE(merged.layers.size() == 1);
    CHECK_FALSE(merged.layers[0].adapter.has_value());
    CHECK_FALSE(merged.layers[0].rescale.has_value());

    save_model(dir.file("merged.karst"), merged);
    ModelData reloaded = load_model(dir.file("merged.karst"));
    CHECK_FALSE(reloaded.layers[0].adapter.has_value());

    DenseMatrix x = gaussian_matrix(rng, 4, 6, 1.0);
    CHECK(rel_error(merged_view(reloaded).forward_logits(x), model.forward_logits(x)) < 1e-12);

    // A merged file cannot be reopened for training, and cannot merge again.
    CHECK_THROWS_AS(from_model_data(reloaded), std::invalid_argument);
    CHECK_THROWS_AS(merge_model_data(reloaded), std::invalid_argument);
}

TEST_CASE("corrupt model files are rejected with the path in the message") {
    TempDir dir;
    SeededRng rng(109);
    KarstAdapter adapter = random_adapter(rng, 4, 4, 2, 1, 1, 0.3);
    save_adapter(dir.file("ok.karst"), adapter);

    CHECK_THROWS_AS(load_adapter(dir.file("absent.karst")), IoError);

    {
        std::string bytes = slurp(dir.file("ok.karst"));
        bytes[0] = 'X';
        std::ofstream out(dir.file("badmagic.karst"), std::ios::binary);
        out << bytes;
    }
    CHECK_THROWS_AS(load_adapter(dir.file("badmagic.karst")), IoError);

    {
        std::string bytes = slurp(dir.file("ok.karst"));
        std::ofstream out(dir.file("short.karst"), std::ios::binary);
        out << bytes.substr(0, bytes.size() - 9);
    }
    CHECK_THROWS_AS(load_adapter(dir.file("short.karst")), IoError);

    {
        std::string bytes = slurp(dir.file("ok.karst"));
        std::ofstream out(dir.file("long.karst"), std::ios::binary);
        out << bytes << "extra";
    }
    CHECK_THROWS_AS(load_adapter(dir.file("long.karst")), IoError);

    // A model loader pointed at an adapter file refuses it (wrong magic).
    CHECK_THROWS_AS(load_model(dir.file("ok.karst")), IoError);

    try {
        load_adapter(dir.file("badmagic.karst"));
        FAIL("expected a throw");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("badmagic.karst") != std::string::npos);
    }
}

// -- runner -------------------------------------------------------------------

TEST_CASE("run_experiment writes csv, jsonl and model with the config embedded") {
    TempDir dir;
    ExperimentConfig cfg = tiny_config(dir);
    RunArtifacts run = run_experiment(cfg);

    CHECK(fs::exists(run.csv_path));
    CHECK(fs::exists(run.jsonl_path));
    CHECK(fs::exists(run.model_path));
    CHECK(static_cast<index_t>(run.result.history.size()) == 3);

    const std::string csv = slurp(run.csv_path);
    CHECK(csv.rfind("# config {", 0) == 0);
    CHECK(csv.find("epoch,train_loss,train_acc,test_acc,param_count,seed\n") != std::string::npos);
    // header comment + column header + one row per epoch
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    CHECK(csv.find(",11\n") != std::string::npos);  // seed column

    // The embedded comment and the model file both carry the resolved config.
    const std::string expected_json = cfg.resolved().dump();
    CHECK(csv.find(expected_json) != std::string::npos);
    ModelData model = load_model(run.model_path);
    CHECK(model.config_json == expected_json);
    CHECK(model.seed == 11);

    // First jsonl record is the config, the rest are epochs.
    std::ifstream jsonl(run.jsonl_path);
    std::string line;
    REQUIRE(std::getline(jsonl, line));
    nlohmann::json head = nlohmann::json::parse(line);
    CHECK(head["record"] == "config");
    CHECK(head["config"] == cfg.resolved());
    CHECK(head["param_count"] == run.param_count);
    int epochs = 0;
    while (std::getline(jsonl, line)) {
        nlohmann::json row = nlohmann::json::parse(line);
        CHECK(row["record"] == "epoch");
        ++epochs;
    }
    CHECK(epochs == 3);
}

TEST_CASE("rerunning a config reproduces every output byte for byte") {
    TempDir dir;
    ExperimentConfig cfg = tiny_config(dir);
    RunArtifacts first = run_experiment(cfg);
    const std::string csv1 = slurp(first.csv_path);
    const std::string jsonl1 = slurp(first.jsonl_path);
    const std::string model1 = slurp(first.model_path);

    RunArtifacts second = run_experiment(cfg);
    CHECK(slurp(second.csv_path) == csv1);
    CHECK(slurp(second.jsonl_path) == jsonl1);
    CHECK(slurp(second.model_path) == model1);
}

TEST_CASE("single-layer students on shift tasks adopt the teacher's base") {
    TempDir dir;
    ExperimentConfig cfg = tiny_config(dir);
    SyntheticTask task = make_task(cfg.task, cfg.train.seed);
    ToyModel model = build_model(cfg, task);
    REQUIRE(task.base_w0.has_value());
    CHECK(model.layer(0).w0().data == task.base_w0->data);

    // With the flag off the base is drawn fresh instead.
    cfg.use_task_base = false;
    ToyModel fresh = build_model(cfg, task);
    CHECK(fresh.layer(0).w0().data != task.base_w0->data);

    // Hidden layers change the shapes, so the task base cannot be used.
    cfg.use_task_base = true;
    cfg.hidden_dims = {8};
    ToyModel deep = build_model(cfg, task);
    CHECK(deep.layer_count() == 2);
    CHECK(deep.layer(0).w0().data != task.base_w0->data);
}

TEST_CASE("trained model file merges into an equivalent plain model") {
    TempDir dir;
    ExperimentConfig cfg = tiny_config(dir);
    RunArtifacts run = run_experiment(cfg);

    ModelData trained = load_model(run.model_path);
    ModelData merged = merge_model_data(trained);
    save_model(dir.file("merged.karst"), merged);

    ToyModel model = from_model_data(trained);
    SyntheticTask task = make_task(cfg.task, cfg.train.seed);
    DenseMatrix direct = model.forward_logits(task.test_x);
    DenseMatrix folded = merged_view(load_model(dir.file("merged.karst"))).forward_logits(task.test_x);
    CHECK(rel_error(folded, direct) < 1e-10);
}

TEST_CASE("float formatting is value-preserving") {
    for (double v : {0.1, 1.0 / 3.0, 2.718281828459045, 1e-17, 123456.789, 0.0, -0.25}) {
        CHECK(std::stod(format_float(v)) == v);
    }
}
