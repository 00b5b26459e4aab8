// Exercises the shared-library C interface end to end: handle lifecycle,
// buffer contracts, status-code mapping, and the train/merge/verify/bench
// entry points. Reference values come from the core library directly.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "adapter.hpp"
#include "karst.h"
#include "numerics.hpp"
#include "serialize.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("karst_capi_" + std::to_string(::getpid()))) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const char* name) const { return (path / name).string(); }
};

struct AdapterHandle {
    karst_adapter* ptr = nullptr;
    ~AdapterHandle() { karst_adapter_free(ptr); }
};

}  // namespace

TEST_CASE("status values have stable names") {
    CHECK(std::string(karst_status_name(KARST_OK)) == "KARST_OK");
    CHECK(std::string(karst_status_name(KARST_ERR_CONFIG)) == "KARST_ERR_CONFIG");
    CHECK(std::string(karst_status_name(KARST_ERR_IO)) == "KARST_ERR_IO");
    CHECK(std::string(karst_status_name(static_cast<karst_status>(999))) == "KARST_ERR_UNKNOWN");
}

TEST_CASE("adapter handles create, apply and materialize like the core") {
    AdapterHandle h;
    REQUIRE(karst_adapter_create(12, 8, 2, 3, 2, 0.02, 7, &h.ptr) == KARST_OK);
    REQUIRE(h.ptr != nullptr);

    int64_t params = 0;
    CHECK(karst_adapter_param_count(h.ptr, &params) == KARST_OK);
    karst::SeededRng rng(7);
    karst::KarstAdapter reference = karst::KarstAdapter::init(rng, 12, 8, 2, 3, 2, 0.02);
    CHECK(params == reference.param_count());

    // Same seed, same draws: the handle is the core adapter behind a wall.
    std::vector<double> delta(12 * 8);
    CHECK(karst_adapter_materialize(h.ptr, delta.data(), delta.size()) == KARST_OK);
    CHECK(delta == reference.materialize().data);

    std::vector<double> x(12), y(8, 99.0);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.1 * static_cast<double>(i) - 0.5;
    CHECK(karst_adapter_apply(h.ptr, x.data(), x.size(), y.data(), y.size()) == KARST_OK);
    karst::DenseVector want = reference.apply(karst::DenseVector(x));
    for (std::size_t j = 0; j < y.size(); ++j) CHECK(y[j] == want[static_cast<karst::index_t>(j)]);
}

TEST_CASE("buffer and argument violations surface as invalid-argument with a message") {
    AdapterHandle h;
    REQUIRE(karst_adapter_create(4, 4, 2, 1, 1, 0.02, 1, &h.ptr) == KARST_OK);

    std::vector<double> x(4), y(4);
    CHECK(karst_adapter_apply(h.ptr, x.data(), 3, y.data(), 4) == KARST_ERR_INVALID_ARGUMENT);
    CHECK(std::strlen(karst_last_error()) > 0);
    CHECK(karst_adapter_apply(nullptr, x.data(), 4, y.data(), 4) == KARST_ERR_INVALID_ARGUMENT);
    CHECK(karst_adapter_materialize(h.ptr, y.data(), 5) == KARST_ERR_INVALID_ARGUMENT);

    karst_adapter* out = nullptr;
    CHECK(karst_adapter_create(6, 4, 4, 1, 1, 0.02, 1, &out) == KARST_ERR_INVALID_ARGUMENT);
    CHECK(out == nullptr);  // untouched on failure
    std::string msg = karst_last_error();
    CHECK(msg.find("m=4") != std::string::npos);
    CHECK(karst_adapter_create(4, 4, 2, 1, 1, -0.5, 1, &out) == KARST_ERR_INVALID_ARGUMENT);
    CHECK(karst_adapter_create(4, 4, 2, 1, 1, 0.02, 1, nullptr) == KARST_ERR_INVALID_ARGUMENT);
}

TEST_CASE("adapter files written through the api reload bit-exactly") {
    TempDir dir;
    AdapterHandle h;
    REQUIRE(karst_adapter_create(8, 6, 2, 2, 2, 0.05, 21, &h.ptr) == KARST_OK);
    REQUIRE(karst_adapter_save(h.ptr, dir.file("a.karst").c_str()) == KARST_OK);

    AdapterHandle back;
    REQUIRE(karst_adapter_load(dir.file("a.karst").c_str(), &back.ptr) == KARST_OK);
    std::vector<double> d1(8 * 6), d2(8 * 6);
    CHECK(karst_adapter_materialize(h.ptr, d1.data(), d1.size()) == KARST_OK);
    CHECK(karst_adapter_materialize(back.ptr, d2.data(), d2.size()) == KARST_OK);
    CHECK(d1 == d2);

    karst_adapter* missing = nullptr;
    CHECK(karst_adapter_load(dir.file("absent.karst").c_str(), &missing) == KARST_ERR_IO);
    CHECK(std::string(karst_last_error()).find("absent.karst") != std::string::npos);
}

TEST_CASE("train entry point runs a config file and honors the seed override") {
    TempDir dir;
    const std::string cfg_path = dir.file("cfg.json");
    {
        std::ofstream out(cfg_path);
        out << R"({
  "task": {"recipe": "low-rank-shift", "input_dim": 8, "classes": 4,
           "train_samples": 32, "test_samples": 16},
  "adapter": {"m": 2, "r": 2, "kernels": 1},
  "train": {"epochs": 2, "batch_size": 8, "seed": 5},
  "output": {"dir": ")" << dir.file("run") << R"("}
})";
    }

    char* summary = nullptr;
    REQUIRE(karst_train_file(cfg_path.c_str(), nullptr, &summary) == KARST_OK);
    REQUIRE(summary != nullptr);
    CHECK(std::string(summary).find("low-rank-shift") != std::string::npos);
    CHECK(std::string(summary).find("seed 5") != std::string::npos);
    karst_string_free(summary);
    CHECK(fs::exists(dir.file("run") + std::string("/metrics.csv")));

    const uint64_t seed = 123;
    REQUIRE(karst_train_file(cfg_path.c_str(), &seed, nullptr) == KARST_OK);
    karst::ModelData model = karst::load_model(dir.file("run") + std::string("/model.karst"));
    CHECK(model.seed == 123);

    CHECK(karst_train_file(dir.file("none.json").c_str(), nullptr, nullptr) == KARST_ERR_CONFIG);
    {
        std::ofstream out(dir.file("bad.json"));
        out << R"({"train": {"learning_rat": 0.1}})";
    }
    CHECK(karst_train_file(dir.file("bad.json").c_str(), nullptr, nullptr) == KARST_ERR_CONFIG);
    CHECK(std::string(karst_last_error()).find("learning_rat") != std::string::npos);
}

TEST_CASE("merge entry point folds a trained file and rejects double merges") {
    TempDir dir;
    const std::string cfg_path = dir.file("cfg.json");
    {
        std::ofstream out(cfg_path);
        out << R"({
  "task": {"recipe": "gaussian-blobs", "input_dim": 6, "classes": 2,
           "train_samples": 16, "test_samples": 8},
  "adapter": {"m": 2, "r": 2, "kernels": 1},
  "train": {"epochs": 1, "batch_size": 8},
  "output": {"dir": ")" << dir.file("run") << R"("}
})";
    }
    REQUIRE(karst_train_file(cfg_path.c_str(), nullptr, nullptr) == KARST_OK);

    const std::string model_path = dir.file("run") + std::string("/model.karst");
    const std::string merged_path = dir.file("merged.karst");
    REQUIRE(karst_merge_file(model_path.c_str(), merged_path.c_str()) == KARST_OK);

    karst::ModelData merged = karst::load_model(merged_path);
    for (const karst::ModelLayerData& l : merged.layers) {
        CHECK_FALSE(l.adapter.has_value());
        CHECK_FALSE(l.rescale.has_value());
    }
    CHECK(karst_merge_file(merged_path.c_str(), dir.file("again.karst").c_str()) ==
          KARST_ERR_INVALID_ARGUMENT);
    CHECK(karst_merge_file(dir.file("ghost.karst").c_str(), merged_path.c_str()) == KARST_ERR_IO);
}

TEST_CASE("verify entry point reports a full pass") {
    char* report = nullptr;
    CHECK(karst_verify(&report) == KARST_OK);
    REQUIRE(report != nullptr);
    std::string text = report;
    karst_string_free(report);
    CHECK(text.find("PASS  gradcheck") != std::string::npos);
    CHECK(text.find("FAIL") == std::string::npos);
    CHECK(text.find("all properties hold") != std::string::npos);
}

TEST_CASE("bench entry point produces a table and csv for small dims") {
    char* table = nullptr;
    char* csv = nullptr;
    REQUIRE(karst_bench(64, 64, 4, 2, 2, &table, &csv) == KARST_OK);
    REQUIRE(table != nullptr);
    REQUIRE(csv != nullptr);
    std::string t = table, c = csv;
    karst_string_free(table);
    karst_string_free(csv);
    CHECK(t.find("structured-delta") != std::string::npos);
    CHECK(c.rfind("path,median_us,multiplies\n", 0) == 0);
    CHECK(c.find("merged,") != std::string::npos);

    CHECK(karst_bench(64, 64, 5, 2, 2, nullptr, nullptr) == KARST_ERR_INVALID_ARGUMENT);
    CHECK(karst_bench(-1, 64, 4, 2, 2, nullptr, nullptr) == KARST_ERR_INVALID_ARGUMENT);
}
