#include "serialize.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "errors.hpp"

namespace karst {

namespace {

constexpr char kModelMagic[8] = "KARSTMD";    // 7 chars + NUL, NUL not written
constexpr char kAdapterMagic[8] = "KARSTAD";
constexpr std::uint32_t kFormatVersion = 1;

constexpr std::uint8_t kFlagBias = 1;
constexpr std::uint8_t kFlagAdapter = 2;
constexpr std::uint8_t kFlagRescale = 4;

class Writer {
public:
    explicit Writer(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot open " + path + " for writing");
    }

    void bytes(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v) { bytes(&v, sizeof v); }
    void u64(std::uint64_t v) { bytes(&v, sizeof v); }
    void doubles(const std::vector<double>& v) { bytes(v.data(), v.size() * sizeof(double)); }
    void str(const std::string& s) {
        u64(s.size());
        bytes(s.data(), s.size());
    }

    void finish() {
        out_.flush();
        if (!out_) throw IoError("write to " + path_ + " failed");
    }

private:
    std::string path_;
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw IoError("cannot open " + path + " for reading");
    }

    void bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw IoError("truncated file " + path_);
        }
    }
    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, sizeof v);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        bytes(&v, sizeof v);
        return v;
    }
    // Dimensions come from the file; cap them so a corrupt header cannot
    // request an absurd allocation.
    index_t dim(const char* what) {
        const std::uint64_t v = u64();
        if (v > (1ull << 32)) {
            throw IoError("corrupt " + path_ + ": implausible " + std::string(what) +
                                     " " + std::to_string(v));
        }
        return static_cast<index_t>(v);
    }
    std::vector<double> doubles(std::size_t n) {
        std::vector<double> v(n);
        bytes(v.data(), n * sizeof(double));
        return v;
    }
    std::string str() {
        const std::uint64_t n = u64();
        if (n > (1ull << 26)) throw IoError("corrupt " + path_ + ": oversized string");
        std::string s(static_cast<std::size_t>(n), '\0');
        bytes(s.data(), s.size());
        return s;
    }
    void expect_magic(const char* magic) {
        char buf[7];
        bytes(buf, 7);
        if (std::memcmp(buf, magic, 7) != 0) {
            throw IoError(path_ + " is not a " + std::string(magic) + " file");
        }
        const std::uint32_t version = u32();
        if (version != kFormatVersion) {
            throw IoError(path_ + ": unsupported format version " +
                                     std::to_string(version));
        }
    }
    void expect_eof() {
        in_.peek();
        if (!in_.eof()) throw IoError(path_ + " has trailing bytes");
    }

    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ifstream in_;
};

void write_adapter_body(Writer& w, const KarstAdapter& a) {
    w.u64(static_cast<std::uint64_t>(a.m()));
    w.u64(static_cast<std::uint64_t>(a.r()));
    w.u64(static_cast<std::uint64_t>(a.kernel_count()));
    w.u64(a.init_seed());
    for (const KronKernel& k : a.kernels()) {
        w.doubles(k.c.data);
        w.doubles(k.a.data);
        w.doubles(k.b.data);
    }
}

KarstAdapter read_adapter_body(Reader& rd, index_t d_in, index_t d_out) {
    const index_t m = rd.dim("m");
    const index_t r = rd.dim("r");
    const index_t n_kernels = rd.dim("kernel count");
    const std::uint64_t init_seed = rd.u64();
    if (m < 1 || r < 1 || n_kernels < 1 || d_in % m != 0 || d_out % m != 0) {
        throw IoError("corrupt " + rd.path() + ": invalid adapter header");
    }
    const index_t p2 = d_in / m, q2 = d_out / m;
    std::vector<KronKernel> kernels;
    for (index_t i = 0; i < n_kernels; ++i) {
        KronKernel k;
        k.c = DenseMatrix(m, m, rd.doubles(static_cast<std::size_t>(m * m)));
        k.a = DenseMatrix(p2, r, rd.doubles(static_cast<std::size_t>(p2 * r)));
        k.b = DenseMatrix(r, q2, rd.doubles(static_cast<std::size_t>(r * q2)));
        kernels.push_back(std::move(k));
    }
    return KarstAdapter(d_in, d_out, m, r, std::move(kernels), init_seed);
}

}  // namespace

void save_model(const std::string& path, const ModelData& model) {
    Writer w(path);
    w.bytes(kModelMagic, 7);
    w.u32(kFormatVersion);
    w.u64(model.seed);
    w.str(model.config_json);
    w.u32(static_cast<std::uint32_t>(model.layers.size()));
    for (const ModelLayerData& layer : model.layers) {
        w.u64(static_cast<std::uint64_t>(layer.w0.rows));
        w.u64(static_cast<std::uint64_t>(layer.w0.cols));
        std::uint8_t flags = 0;
        if (layer.bias0) flags |= kFlagBias;
        if (layer.adapter) flags |= kFlagAdapter;
        if (layer.rescale) flags |= kFlagRescale;
        w.u8(flags);
        w.doubles(layer.w0.data);
        if (layer.bias0) w.doubles(layer.bias0->data);
        if (layer.adapter) write_adapter_body(w, *layer.adapter);
        if (layer.rescale) {
            w.doubles(layer.rescale->s1.data);
            w.doubles(layer.rescale->s2.data);
        }
    }
    w.finish();
}

ModelData load_model(const std::string& path) {
    Reader rd(path);
    rd.expect_magic(kModelMagic);
    ModelData model;
    model.seed = rd.u64();
    model.config_json = rd.str();
    const std::uint32_t n_layers = rd.u32();
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        ModelLayerData layer;
        const index_t d_in = rd.dim("d_in");
        const index_t d_out = rd.dim("d_out");
        const std::uint8_t flags = rd.u8();
        layer.w0 = DenseMatrix(d_in, d_out, rd.doubles(static_cast<std::size_t>(d_in * d_out)));
        if (flags & kFlagBias) layer.bias0 = DenseVector(rd.doubles(static_cast<std::size_t>(d_out)));
        if (flags & kFlagAdapter) layer.adapter = read_adapter_body(rd, d_in, d_out);
        if (flags & kFlagRescale) {
            DenseVector s1(rd.doubles(static_cast<std::size_t>(d_out)));
            DenseVector s2(rd.doubles(static_cast<std::size_t>(d_out)));
            layer.rescale = RescaleParams(std::move(s1), std::move(s2));
        }
        model.layers.push_back(std::move(layer));
    }
    rd.expect_eof();
    return model;
}

void save_adapter(const std::string& path, const KarstAdapter& adapter) {
    Writer w(path);
    w.bytes(kAdapterMagic, 7);
    w.u32(kFormatVersion);
    w.u64(static_cast<std::uint64_t>(adapter.d_in()));
    w.u64(static_cast<std::uint64_t>(adapter.d_out()));
    write_adapter_body(w, adapter);
    w.finish();
}

KarstAdapter load_adapter(const std::string& path) {
    Reader rd(path);
    rd.expect_magic(kAdapterMagic);
    const index_t d_in = rd.dim("d_in");
    const index_t d_out = rd.dim("d_out");
    KarstAdapter a = read_adapter_body(rd, d_in, d_out);
    rd.expect_eof();
    return a;
}

ModelData to_model_data(const ToyModel& model, const std::string& config_json, std::uint64_t seed) {
    ModelData data;
    data.seed = seed;
    data.config_json = config_json;
    for (const AdaptedLinear& layer : model.layers()) {
        data.layers.push_back({layer.w0(), layer.bias0(), layer.adapter(), layer.rescale()});
    }
    return data;
}

ToyModel from_model_data(const ModelData& data) {
    std::vector<AdaptedLinear> layers;
    for (std::size_t i = 0; i < data.layers.size(); ++i) {
        const ModelLayerData& l = data.layers[i];
        if (!l.adapter || !l.rescale) {
            throw std::invalid_argument("layer " + std::to_string(i) +
                                     " has no adapter/rescale state; a merged model cannot be "
                                     "reopened for training");
        }
        layers.emplace_back(l.w0, l.bias0, *l.adapter, *l.rescale);
    }
    return ToyModel(std::move(layers));
}

ModelData merge_model_data(const ModelData& data) {
    ModelData merged;
    merged.seed = data.seed;
    merged.config_json = data.config_json;
    for (const ModelLayerData& l : data.layers) {
        if (!l.adapter || !l.rescale) {
            throw std::invalid_argument("model is already merged; nothing to fold");
        }
        AdaptedLinear layer(l.w0, l.bias0, *l.adapter, *l.rescale);
        MergedAffine folded = merge(layer);
        merged.layers.push_back({std::move(folded.w), std::move(folded.bias), std::nullopt, std::nullopt});
    }
    return merged;
}

namespace {

KarstAdapter zero_adapter(index_t d_in, index_t d_out) {
    std::vector<KronKernel> kernels(1);
    kernels[0].c = DenseMatrix(1, 1);
    kernels[0].a = DenseMatrix(d_in, 1);
    kernels[0].b = DenseMatrix(1, d_out);
    return KarstAdapter(d_in, d_out, 1, 1, std::move(kernels));
}

}  // namespace

MergedModel merged_view(const ModelData& data) {
    MergedModel view;
    for (const ModelLayerData& l : data.layers) {
        if (l.adapter || l.rescale) {
            AdaptedLinear layer(l.w0, l.bias0,
                                l.adapter ? *l.adapter : zero_adapter(l.w0.rows, l.w0.cols),
                                l.rescale ? *l.rescale : RescaleParams(l.w0.cols));
            view.layers.push_back(merge(layer));
        } else {
            view.layers.push_back({l.w0, l.bias0});
        }
    }
    return view;
}

}  // namespace karst
