#pragma once

// Binary on-disk formats. Both files are little-endian with a magic tag and
// a format version up front; doubles are written as raw IEEE-754 bytes so a
// save/load round trip is bit-exact.
//
// model file ("KARSTMD", version 1):
//   magic[7] version:u32 seed:u64
//   config_len:u64 config_json[config_len]          resolved run config, may be empty
//   n_layers:u32
//   per layer:
//     d_in:u64 d_out:u64 flags:u8                   1=bias, 2=adapter, 4=rescale
//     w0: d_in*d_out doubles
//     [bias: d_out doubles]
//     [adapter: m:u64 r:u64 n_kernels:u64 init_seed:u64
//               per kernel: c (m*m), a (d_in/m*r), b (r*d_out/m) doubles]
//     [rescale: s1 (d_out), s2 (d_out) doubles]
//
// A merged model simply has the adapter and rescale flags clear, so the file
// holds nothing but plain affine layers.
//
// adapter file ("KARSTAD", version 1):
//   magic[7] version:u32
//   d_in:u64 d_out:u64 m:u64 r:u64 n_kernels:u64 init_seed:u64
//   per kernel: c, a, b doubles as above

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adapter.hpp"
#include "training.hpp"

namespace karst {

struct ModelLayerData {
    DenseMatrix w0;
    std::optional<DenseVector> bias0;
    std::optional<KarstAdapter> adapter;
    std::optional<RescaleParams> rescale;
};

struct ModelData {
    std::uint64_t seed = 0;
    std::string config_json;  // resolved config echo, empty when unknown
    std::vector<ModelLayerData> layers;
};

void save_model(const std::string& path, const ModelData& model);
// Throws std::runtime_error naming the path on missing files, bad magic,
// unsupported versions, or truncation.
ModelData load_model(const std::string& path);

void save_adapter(const std::string& path, const KarstAdapter& adapter);
KarstAdapter load_adapter(const std::string& path);

// Bridges to the training model. from_model_data requires adapter and
// rescale state on every layer (i.e. not a merged file).
ModelData to_model_data(const ToyModel& model, const std::string& config_json, std::uint64_t seed);
ToyModel from_model_data(const ModelData& data);

// Merges every layer of a loadable training model into plain affine form.
ModelData merge_model_data(const ModelData& data);
// Evaluates a merged (or training) model file layer stack on one input.
MergedModel merged_view(const ModelData& data);

}  // namespace karst
