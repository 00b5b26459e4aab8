// Command-line front end over the karst C API.
//
//   karst train --config cfg.json [--seed N]   run an experiment
//   karst merge --model in.karst --out out.karst
//   karst verify                               built-in property checks
//   karst bench [--d-in ...]                   apply-path timings
//
// Exit codes: 0 success, 1 run or verification failure, 2 usage/config error.

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "karst.h"

namespace {

void print_error(karst_status status) {
    std::fprintf(stderr, "error [%s]: %s\n", karst_status_name(status), karst_last_error());
}

int exit_code_for(karst_status status) {
    switch (status) {
        case KARST_OK:
            return 0;
        case KARST_ERR_CONFIG:
        case KARST_ERR_INVALID_ARGUMENT:
            return 2;
        default:
            return 1;
    }
}

int finish(karst_status status) {
    if (status != KARST_OK) print_error(status);
    return exit_code_for(status);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kronecker-factored weight adaptation toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    CLI::App* train = app.add_subcommand("train", "run a training experiment from a JSON config");
    train->add_option("--config", config_path, "config file path")->required();
    train->add_option("--seed", seed, "override the config seed");

    std::string model_path, out_path;
    CLI::App* merge = app.add_subcommand("merge", "fold a trained model into plain affine layers");
    merge->add_option("--model", model_path, "trained model file")->required();
    merge->add_option("--out", out_path, "merged output file")->required();

    CLI::App* verify = app.add_subcommand("verify", "run the built-in property checks");

    std::int64_t d_in = 768, d_out = 768, m = 8, r = 8, kernels = 2;
    CLI::App* bench = app.add_subcommand("bench", "time the apply paths of one adapted layer");
    bench->add_option("--d-in", d_in, "layer input dim");
    bench->add_option("--d-out", d_out, "layer output dim");
    bench->add_option("--m", m, "Kronecker stacking factor");
    bench->add_option("--r", r, "low-rank factor width");
    bench->add_option("--n,--kernels", kernels, "kernel count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (train->parsed()) {
        char* summary = nullptr;
        const bool seed_set = train->count("--seed") > 0;
        const karst_status st =
            karst_train_file(config_path.c_str(), seed_set ? &seed : nullptr, &summary);
        if (summary) {
            std::fputs(summary, stdout);
            karst_string_free(summary);
        }
        return finish(st);
    }
    if (merge->parsed()) {
        const karst_status st = karst_merge_file(model_path.c_str(), out_path.c_str());
        if (st == KARST_OK) std::printf("merged %s -> %s\n", model_path.c_str(), out_path.c_str());
        return finish(st);
    }
    if (verify->parsed()) {
        char* report = nullptr;
        const karst_status st = karst_verify(&report);
        if (report) {
            std::fputs(report, stdout);
            karst_string_free(report);
        }
        if (st == KARST_ERR_VERIFY) return 1;  // table already says what failed
        return finish(st);
    }
    if (bench->parsed()) {
        char* table = nullptr;
        const karst_status st = karst_bench(d_in, d_out, m, r, kernels, &table, nullptr);
        if (table) {
            std::fputs(table, stdout);
            karst_string_free(table);
        }
        return finish(st);
    }
    return 2;
}
