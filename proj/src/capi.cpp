#include "karst.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "adapter.hpp"
#include "bench.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "runner.hpp"
#include "serialize.hpp"
#include "verify.hpp"

// The C boundary: every entry point funnels through guarded(), which turns
// the core's typed exceptions into status codes and parks the message in a
// thread-local slot for karst_last_error().

namespace {

thread_local std::string g_last_error;

template <typename Fn>
karst_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const karst::ConfigError& e) {
        g_last_error = e.what();
        return KARST_ERR_CONFIG;
    } catch (const karst::IoError& e) {
        g_last_error = e.what();
        return KARST_ERR_IO;
    } catch (const karst::NumericError& e) {
        g_last_error = e.what();
        return KARST_ERR_NUMERIC;
    } catch (const std::invalid_argument& e) {
        g_last_error = e.what();
        return KARST_ERR_INVALID_ARGUMENT;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return KARST_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return KARST_ERR_INTERNAL;
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

karst_status require(bool ok, const char* msg) {
    if (ok) return KARST_OK;
    g_last_error = msg;
    return KARST_ERR_INVALID_ARGUMENT;
}

}  // namespace

struct karst_adapter {
    karst::KarstAdapter impl;
};

extern "C" {

const char* karst_status_name(karst_status status) {
    switch (status) {
        case KARST_OK: return "KARST_OK";
        case KARST_ERR_INVALID_ARGUMENT: return "KARST_ERR_INVALID_ARGUMENT";
        case KARST_ERR_CONFIG: return "KARST_ERR_CONFIG";
        case KARST_ERR_IO: return "KARST_ERR_IO";
        case KARST_ERR_NUMERIC: return "KARST_ERR_NUMERIC";
        case KARST_ERR_VERIFY: return "KARST_ERR_VERIFY";
        case KARST_ERR_INTERNAL: return "KARST_ERR_INTERNAL";
    }
    return "KARST_ERR_UNKNOWN";
}

const char* karst_last_error(void) { return g_last_error.c_str(); }

void karst_string_free(char* s) { std::free(s); }

karst_status karst_adapter_create(int64_t d_in, int64_t d_out, int64_t m, int64_t r,
                                  int64_t n_kernels, double init_std, uint64_t seed,
                                  karst_adapter** out) {
    if (karst_status st = require(out != nullptr, "out must not be NULL")) return st;
    return guarded([&] {
        karst::SeededRng rng(seed);
        auto impl = karst::KarstAdapter::init(rng, d_in, d_out, m, r, n_kernels, init_std);
        *out = new karst_adapter{std::move(impl)};
        return KARST_OK;
    });
}

void karst_adapter_free(karst_adapter* adapter) { delete adapter; }

karst_status karst_adapter_apply(const karst_adapter* adapter, const double* x, size_t x_len,
                                 double* y, size_t y_len) {
    if (karst_status st = require(adapter && x && y, "adapter, x and y must not be NULL")) return st;
    return guarded([&] {
        const karst::KarstAdapter& a = adapter->impl;
        if (x_len != static_cast<size_t>(a.d_in()) || y_len != static_cast<size_t>(a.d_out())) {
            throw std::invalid_argument(
                "buffer lengths (" + std::to_string(x_len) + ", " + std::to_string(y_len) +
                ") do not match adapter dims (" + std::to_string(a.d_in()) + ", " +
                std::to_string(a.d_out()) + ")");
        }
        karst::DenseVector in(std::vector<double>(x, x + x_len));
        karst::DenseVector result = a.apply(in);
        std::memcpy(y, result.data.data(), y_len * sizeof(double));
        return KARST_OK;
    });
}

karst_status karst_adapter_materialize(const karst_adapter* adapter, double* out, size_t out_len) {
    if (karst_status st = require(adapter && out, "adapter and out must not be NULL")) return st;
    return guarded([&] {
        const karst::KarstAdapter& a = adapter->impl;
        const size_t need = static_cast<size_t>(a.d_in()) * static_cast<size_t>(a.d_out());
        if (out_len != need) {
            throw std::invalid_argument("out_len " + std::to_string(out_len) + " != d_in*d_out = " +
                                        std::to_string(need));
        }
        karst::DenseMatrix full = a.materialize();
        std::memcpy(out, full.data.data(), need * sizeof(double));
        return KARST_OK;
    });
}

karst_status karst_adapter_param_count(const karst_adapter* adapter, int64_t* out) {
    if (karst_status st = require(adapter && out, "adapter and out must not be NULL")) return st;
    *out = adapter->impl.param_count();
    return KARST_OK;
}

karst_status karst_adapter_save(const karst_adapter* adapter, const char* path) {
    if (karst_status st = require(adapter && path, "adapter and path must not be NULL")) return st;
    return guarded([&] {
        karst::save_adapter(path, adapter->impl);
        return KARST_OK;
    });
}

karst_status karst_adapter_load(const char* path, karst_adapter** out) {
    if (karst_status st = require(path && out, "path and out must not be NULL")) return st;
    return guarded([&] {
        *out = new karst_adapter{karst::load_adapter(path)};
        return KARST_OK;
    });
}

karst_status karst_train_file(const char* config_path, const uint64_t* seed_override,
                              char** summary) {
    if (karst_status st = require(config_path != nullptr, "config_path must not be NULL")) return st;
    return guarded([&] {
        karst::ExperimentConfig cfg = karst::load_config_file(config_path);
        if (seed_override) cfg.train.seed = *seed_override;
        karst::RunArtifacts run = karst::run_experiment(cfg);
        if (summary) {
            std::string text = "task " + cfg.task.recipe + ", seed " +
                               std::to_string(cfg.train.seed) + ", " +
                               std::to_string(run.param_count) + " trainable params\n";
            text += "initial train loss " + karst::format_float(run.result.initial_loss) + "\n";
            if (!run.result.history.empty()) {
                const karst::EpochMetrics& last = run.result.history.back();
                text += "epoch " + std::to_string(last.epoch) + ": train loss " +
                        karst::format_float(last.train_loss) + ", train acc " +
                        karst::format_float(last.train_acc) + ", test acc " +
                        karst::format_float(last.test_acc) + "\n";
            }
            text += "wrote " + run.csv_path + ", " + run.jsonl_path + ", " + run.model_path + "\n";
            *summary = dup_string(text);
        }
        return KARST_OK;
    });
}

karst_status karst_merge_file(const char* model_path, const char* out_path) {
    if (karst_status st = require(model_path && out_path, "model_path and out_path must not be NULL"))
        return st;
    return guarded([&] {
        karst::ModelData model = karst::load_model(model_path);
        karst::save_model(out_path, karst::merge_model_data(model));
        return KARST_OK;
    });
}

karst_status karst_verify(char** report) {
    return guarded([&] {
        karst::VerifyReport result = karst::run_verification();
        if (report) *report = dup_string(result.table());
        if (!result.all_pass) {
            g_last_error = "verification found failing properties";
            return KARST_ERR_VERIFY;
        }
        return KARST_OK;
    });
}

karst_status karst_bench(int64_t d_in, int64_t d_out, int64_t m, int64_t r, int64_t n_kernels,
                         char** table, char** csv) {
    return guarded([&] {
        karst::BenchOptions opts;
        opts.d_in = d_in;
        opts.d_out = d_out;
        opts.m = m;
        opts.r = r;
        opts.n_kernels = n_kernels;
        karst::BenchReport report = karst::run_bench(opts);
        if (table) *table = dup_string(report.table());
        if (csv) *csv = dup_string(report.csv());
        return KARST_OK;
    });
}

}  // extern "C"
