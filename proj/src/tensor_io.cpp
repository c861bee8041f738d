#include "graphleap/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace graphleap {

namespace {

constexpr char kTensorMagic[4] = {'G', 'L', 'P', 'T'};
constexpr char kBundleMagic[4] = {'G', 'L', 'P', 'W'};
constexpr uint32_t kVersion = 1;

void put_bytes(std::ostream& s, const void* p, size_t n) {
    s.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!s) throw IoError("write failed");
}

void put_u8(std::ostream& s, uint8_t v) { put_bytes(s, &v, 1); }

void put_u16(std::ostream& s, uint16_t v) {
    uint8_t b[2] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8)};
    put_bytes(s, b, 2);
}

void put_u32(std::ostream& s, uint32_t v) {
    uint8_t b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<uint8_t>(v >> (8 * i));
    put_bytes(s, b, 4);
}

void put_u64(std::ostream& s, uint64_t v) {
    uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<uint8_t>(v >> (8 * i));
    put_bytes(s, b, 8);
}

void put_f32(std::ostream& s, float v) { put_u32(s, std::bit_cast<uint32_t>(v)); }

bool try_bytes(std::istream& s, void* p, size_t n) {
    s.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    return static_cast<size_t>(s.gcount()) == n;
}

uint8_t get_u8(std::istream& s) {
    uint8_t v;
    if (!try_bytes(s, &v, 1)) throw TruncatedPayload("unexpected end of stream");
    return v;
}

uint16_t get_u16(std::istream& s) {
    uint8_t b[2];
    if (!try_bytes(s, b, 2)) throw TruncatedPayload("unexpected end of stream");
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

uint32_t get_u32(std::istream& s) {
    uint8_t b[4];
    if (!try_bytes(s, b, 4)) throw TruncatedPayload("unexpected end of stream");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}

uint64_t get_u64(std::istream& s) {
    uint8_t b[8];
    if (!try_bytes(s, b, 8)) throw TruncatedPayload("unexpected end of stream");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

float get_f32(std::istream& s) { return std::bit_cast<float>(get_u32(s)); }

}  // namespace

uint64_t StoredTensor::numel() const {
    uint64_t n = 1;
    for (uint64_t d : dims) n *= d;
    return n;
}

size_t write_stored(const StoredTensor& t, std::ostream& sink) {
    if (t.dims.empty() || t.dims.size() > 255) throw IoError("tensor rank out of range");
    for (uint64_t d : t.dims)
        if (d == 0) throw IoError("zero-sized dimension");
    const uint64_t n = t.numel();
    if ((t.dtype == 0 && t.f32.size() != n) || (t.dtype == 1 && t.u32.size() != n))
        throw IoError("payload size does not match dims");

    put_bytes(sink, kTensorMagic, 4);
    put_u32(sink, kVersion);
    put_u8(sink, t.dtype);
    put_u8(sink, static_cast<uint8_t>(t.dims.size()));
    for (uint64_t d : t.dims) put_u64(sink, d);
    if (t.dtype == 0) {
        for (float v : t.f32) put_f32(sink, v);
    } else {
        for (uint32_t v : t.u32) put_u32(sink, v);
    }
    return 10 + 8 * t.dims.size() + 4 * static_cast<size_t>(n);
}

StoredTensor read_stored(std::istream& source) {
    char magic[4];
    if (!try_bytes(source, magic, 4) || std::memcmp(magic, kTensorMagic, 4) != 0)
        throw BadMagic("bad tensor magic");
    const uint32_t version = get_u32(source);
    if (version != kVersion) throw UnsupportedVersion("unsupported tensor version " + std::to_string(version));
    StoredTensor t;
    t.dtype = get_u8(source);
    if (t.dtype > 1) throw IoError("unknown dtype " + std::to_string(t.dtype));
    const uint8_t rank = get_u8(source);
    if (rank == 0) throw IoError("rank 0 tensor");
    t.dims.resize(rank);
    uint64_t n = 1;
    for (auto& d : t.dims) {
        d = get_u64(source);
        if (d == 0 || d > (1ULL << 32)) throw IoError("dimension out of range");
        n *= d;
        if (n > (1ULL << 34)) throw IoError("tensor too large");
    }
    if (t.dtype == 0) {
        t.f32.resize(n);
        for (auto& v : t.f32) {
            v = get_f32(source);
            if (!std::isfinite(v)) throw NonFiniteValue("non-finite value in tensor payload");
        }
    } else {
        t.u32.resize(n);
        for (auto& v : t.u32) v = get_u32(source);
    }
    return t;
}

size_t write_tensor(const FeatureMatrix& t, std::ostream& sink) {
    StoredTensor st;
    st.dtype = 0;
    st.dims = {static_cast<uint64_t>(t.rows), static_cast<uint64_t>(t.cols)};
    st.f32 = t.data;
    return write_stored(st, sink);
}

FeatureMatrix read_tensor(std::istream& source) {
    StoredTensor st = read_stored(source);
    if (st.dtype != 0 || st.dims.size() != 2) throw IoError("expected a rank-2 f32 tensor");
    FeatureMatrix m(static_cast<int32_t>(st.dims[0]), static_cast<int32_t>(st.dims[1]));
    m.data = std::move(st.f32);
    return m;
}

size_t write_graph(const GraphTopology& g, std::ostream& sink) {
    StoredTensor st;
    st.dtype = 1;
    st.dims = {static_cast<uint64_t>(g.num_nodes), static_cast<uint64_t>(g.k)};
    st.u32 = g.neighbors;
    return write_stored(st, sink);
}

GraphTopology read_graph(std::istream& source) {
    StoredTensor st = read_stored(source);
    if (st.dtype != 1 || st.dims.size() != 2) throw IoError("expected a rank-2 u32 graph");
    GraphTopology g(static_cast<int32_t>(st.dims[0]), static_cast<int32_t>(st.dims[1]));
    g.neighbors = std::move(st.u32);
    for (uint32_t idx : g.neighbors)
        if (idx >= static_cast<uint32_t>(g.num_nodes)) throw IoError("neighbor index out of range");
    return g;
}

size_t write_image(const ImageTensor& img, std::ostream& sink) {
    StoredTensor st;
    st.dtype = 0;
    st.dims = {3, static_cast<uint64_t>(img.height), static_cast<uint64_t>(img.width)};
    st.f32 = img.data;
    return write_stored(st, sink);
}

ImageTensor read_image(std::istream& source) {
    StoredTensor st = read_stored(source);
    if (st.dtype != 0 || st.dims.size() != 3 || st.dims[0] != 3)
        throw IoError("expected a rank-3 f32 image [3,H,W]");
    ImageTensor img(static_cast<int32_t>(st.dims[1]), static_cast<int32_t>(st.dims[2]));
    img.data = std::move(st.f32);
    return img;
}

namespace {

StoredTensor stored_vector(const std::vector<float>& v) {
    StoredTensor st;
    st.dtype = 0;
    st.dims = {v.size()};
    st.f32 = v;
    return st;
}

StoredTensor stored_matrix(const FeatureMatrix& m) {
    StoredTensor st;
    st.dtype = 0;
    st.dims = {static_cast<uint64_t>(m.rows), static_cast<uint64_t>(m.cols)};
    st.f32 = m.data;
    return st;
}

StoredTensor stored_per_head(const PerHeadWeight& w) {
    StoredTensor st;
    st.dtype = 0;
    st.dims = {static_cast<uint64_t>(w.heads), static_cast<uint64_t>(w.dim_per_head),
               static_cast<uint64_t>(w.dim_per_head)};
    st.f32 = w.data;
    return st;
}

std::vector<std::pair<std::string, StoredTensor>> bundle_entries(const ModelWeights& w) {
    std::vector<std::pair<std::string, StoredTensor>> e;
    e.emplace_back("stem.proj", stored_matrix(w.stem.proj));
    e.emplace_back("stem.bn_gain", stored_vector(w.stem.bn_gain));
    e.emplace_back("stem.bn_bias", stored_vector(w.stem.bn_bias));
    e.emplace_back("stem.bn_mean", stored_vector(w.stem.bn_mean));
    e.emplace_back("stem.bn_var", stored_vector(w.stem.bn_var));
    e.emplace_back("pos", stored_matrix(w.pos_table));
    for (size_t b = 0; b < w.blocks.size(); ++b) {
        const std::string p = "block" + std::to_string(b) + ".";
        const BlockWeights& bw = w.blocks[b];
        e.emplace_back(p + "w_in", stored_matrix(bw.w_in));
        e.emplace_back(p + "w_x", stored_per_head(bw.w_x));
        e.emplace_back(p + "w_m", stored_per_head(bw.w_m));
        e.emplace_back(p + "w_out", stored_matrix(bw.w_out));
        e.emplace_back(p + "w1", stored_matrix(bw.w1));
        e.emplace_back(p + "w2", stored_matrix(bw.w2));
        e.emplace_back(p + "norm1_gain", stored_vector(bw.norm1_gain));
        e.emplace_back(p + "norm1_bias", stored_vector(bw.norm1_bias));
        e.emplace_back(p + "norm2_gain", stored_vector(bw.norm2_gain));
        e.emplace_back(p + "norm2_bias", stored_vector(bw.norm2_bias));
    }
    for (size_t t = 0; t < w.transitions.size(); ++t)
        e.emplace_back("trans" + std::to_string(t), stored_matrix(w.transitions[t]));
    e.emplace_back("head", stored_matrix(w.head));
    return e;
}

}  // namespace

size_t write_weights(const ModelWeights& w, std::ostream& sink) {
    const auto entries = bundle_entries(w);

    std::vector<std::string> blobs;
    blobs.reserve(entries.size());
    for (const auto& [name, st] : entries) {
        std::ostringstream os(std::ios::binary);
        write_stored(st, os);
        blobs.push_back(std::move(os).str());
    }

    size_t header = 4 + 4 + 4;
    for (const auto& [name, _] : entries) header += 2 + name.size() + 8 + 8;

    put_bytes(sink, kBundleMagic, 4);
    put_u32(sink, kVersion);
    put_u32(sink, static_cast<uint32_t>(entries.size()));
    uint64_t offset = header;
    size_t total = header;
    for (size_t i = 0; i < entries.size(); ++i) {
        const std::string& name = entries[i].first;
        put_u16(sink, static_cast<uint16_t>(name.size()));
        put_bytes(sink, name.data(), name.size());
        put_u64(sink, offset);
        put_u64(sink, blobs[i].size());
        offset += blobs[i].size();
        total += blobs[i].size();
    }
    for (const auto& blob : blobs) put_bytes(sink, blob.data(), blob.size());
    return total;
}

namespace {

struct BundleReader {
    std::map<std::string, StoredTensor> tensors;

    const StoredTensor& get(const std::string& name) const {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw IoError("weight bundle is missing tensor \"" + name + "\"");
        return it->second;
    }

    FeatureMatrix matrix(const std::string& name, int32_t rows, int32_t cols) const {
        const StoredTensor& st = get(name);
        if (st.dtype != 0 || st.dims.size() != 2 || st.dims[0] != static_cast<uint64_t>(rows) ||
            st.dims[1] != static_cast<uint64_t>(cols))
            throw ShapeMismatch("bundle tensor \"" + name + "\" has wrong shape (want " +
                                std::to_string(rows) + "x" + std::to_string(cols) + ")");
        FeatureMatrix m(rows, cols);
        m.data = st.f32;
        return m;
    }

    std::vector<float> vec(const std::string& name, int32_t len) const {
        const StoredTensor& st = get(name);
        if (st.dtype != 0 || st.dims.size() != 1 || st.dims[0] != static_cast<uint64_t>(len))
            throw ShapeMismatch("bundle tensor \"" + name + "\" has wrong length (want " +
                                std::to_string(len) + ")");
        return st.f32;
    }

    PerHeadWeight per_head(const std::string& name, int32_t heads, int32_t dh) const {
        const StoredTensor& st = get(name);
        if (st.dtype != 0 || st.dims.size() != 3 || st.dims[0] != static_cast<uint64_t>(heads) ||
            st.dims[1] != static_cast<uint64_t>(dh) || st.dims[2] != static_cast<uint64_t>(dh))
            throw ShapeMismatch("bundle tensor \"" + name + "\" has wrong head layout");
        PerHeadWeight w(heads, dh);
        w.data = st.f32;
        return w;
    }
};

}  // namespace

ModelWeights read_weights(std::istream& source, const ModelSpec& spec, int32_t heads_base) {
    char magic[4];
    if (!try_bytes(source, magic, 4) || std::memcmp(magic, kBundleMagic, 4) != 0)
        throw BadMagic("bad weight bundle magic");
    const uint32_t version = get_u32(source);
    if (version != kVersion) throw UnsupportedVersion("unsupported bundle version");
    const uint32_t count = get_u32(source);
    if (count > 100000) throw IoError("implausible bundle entry count");

    std::vector<std::pair<std::string, std::pair<uint64_t, uint64_t>>> index;
    for (uint32_t i = 0; i < count; ++i) {
        const uint16_t len = get_u16(source);
        std::string name(len, '\0');
        if (!try_bytes(source, name.data(), len)) throw TruncatedPayload("truncated bundle index");
        const uint64_t off = get_u64(source);
        const uint64_t sz = get_u64(source);
        index.emplace_back(std::move(name), std::make_pair(off, sz));
    }

    // Blobs follow the index in order; offsets are informative (they allow
    // random access) but we read sequentially and verify.
    BundleReader reader;
    for (auto& [name, loc] : index) {
        source.seekg(static_cast<std::streamoff>(loc.first));
        if (!source) throw TruncatedPayload("bad offset for \"" + name + "\"");
        reader.tensors[name] = read_stored(source);
    }

    const auto layout = stage_layout(spec, heads_base);
    ModelWeights w;
    const int32_t d0 = layout[0].dim;
    const int32_t patch_len = 3 * spec.patch_size * spec.patch_size;
    w.stem.proj = reader.matrix("stem.proj", patch_len, d0);
    w.stem.bn_gain = reader.vec("stem.bn_gain", d0);
    w.stem.bn_bias = reader.vec("stem.bn_bias", d0);
    w.stem.bn_mean = reader.vec("stem.bn_mean", d0);
    w.stem.bn_var = reader.vec("stem.bn_var", d0);
    w.pos_table = reader.matrix("pos", layout[0].nodes, d0);

    int32_t block = 0;
    for (const auto& st : layout) {
        for (int32_t b = 0; b < st.num_blocks; ++b, ++block) {
            const std::string p = "block" + std::to_string(block) + ".";
            BlockWeights bw;
            bw.w_in = reader.matrix(p + "w_in", st.dim, st.dim);
            bw.w_x = reader.per_head(p + "w_x", st.heads, st.dim / st.heads);
            bw.w_m = reader.per_head(p + "w_m", st.heads, st.dim / st.heads);
            bw.w_out = reader.matrix(p + "w_out", st.dim, st.dim);
            bw.w1 = reader.matrix(p + "w1", st.dim, 4 * st.dim);
            bw.w2 = reader.matrix(p + "w2", 4 * st.dim, st.dim);
            bw.norm1_gain = reader.vec(p + "norm1_gain", st.dim);
            bw.norm1_bias = reader.vec(p + "norm1_bias", st.dim);
            bw.norm2_gain = reader.vec(p + "norm2_gain", st.dim);
            bw.norm2_bias = reader.vec(p + "norm2_bias", st.dim);
            w.blocks.push_back(std::move(bw));
        }
    }
    for (size_t t = 0; t + 1 < layout.size(); ++t)
        w.transitions.push_back(
            reader.matrix("trans" + std::to_string(t), layout[t].dim, layout[t + 1].dim));
    w.head = reader.matrix("head", layout.back().dim, spec.num_classes);
    return w;
}

namespace {

FeatureMatrix random_matrix(int32_t rows, int32_t cols, int32_t fan_in, uint64_t seed,
                            const std::string& name) {
    SplitMix64 rng(stream_seed(seed, name));
    const float scale = 1.0f / std::sqrt(static_cast<float>(fan_in));
    FeatureMatrix m(rows, cols);
    for (float& v : m.data) v = scale * rng.next_signed_unit();
    return m;
}

PerHeadWeight random_per_head(int32_t heads, int32_t dh, uint64_t seed, const std::string& name) {
    SplitMix64 rng(stream_seed(seed, name));
    const float scale = 1.0f / std::sqrt(static_cast<float>(dh));
    PerHeadWeight w(heads, dh);
    for (float& v : w.data) v = scale * rng.next_signed_unit();
    return w;
}

}  // namespace

std::vector<BlockWeights> init_weights(const ModelSpec& spec, uint64_t seed, int32_t heads_base) {
    const auto layout = stage_layout(spec, heads_base);
    std::vector<BlockWeights> blocks;
    int32_t block = 0;
    for (const auto& st : layout) {
        const int32_t d = st.dim;
        for (int32_t b = 0; b < st.num_blocks; ++b, ++block) {
            const std::string p = "block" + std::to_string(block) + ".";
            BlockWeights bw;
            bw.w_in = random_matrix(d, d, d, seed, p + "w_in");
            bw.w_x = random_per_head(st.heads, d / st.heads, seed, p + "w_x");
            bw.w_m = random_per_head(st.heads, d / st.heads, seed, p + "w_m");
            bw.w_out = random_matrix(d, d, d, seed, p + "w_out");
            bw.w1 = random_matrix(d, 4 * d, d, seed, p + "w1");
            bw.w2 = random_matrix(4 * d, d, 4 * d, seed, p + "w2");
            bw.norm1_gain.assign(d, 1.0f);
            bw.norm1_bias.assign(d, 0.0f);
            bw.norm2_gain.assign(d, 1.0f);
            bw.norm2_bias.assign(d, 0.0f);
            blocks.push_back(std::move(bw));
        }
    }
    return blocks;
}

ModelWeights init_model_weights(const ModelSpec& spec, uint64_t seed, int32_t heads_base) {
    const auto layout = stage_layout(spec, heads_base);
    ModelWeights w;
    const int32_t d0 = layout[0].dim;
    const int32_t patch_len = 3 * spec.patch_size * spec.patch_size;
    w.stem.proj = random_matrix(patch_len, d0, patch_len, seed, "stem.proj");
    w.stem.bn_gain.assign(d0, 1.0f);
    w.stem.bn_bias.assign(d0, 0.0f);
    w.stem.bn_mean.assign(d0, 0.0f);
    w.stem.bn_var.assign(d0, 1.0f);
    w.pos_table = random_matrix(layout[0].nodes, d0, d0, seed, "pos");
    w.blocks = init_weights(spec, seed, heads_base);
    for (size_t t = 0; t + 1 < layout.size(); ++t)
        w.transitions.push_back(random_matrix(layout[t].dim, layout[t + 1].dim, layout[t].dim, seed,
                                              "trans" + std::to_string(t)));
    w.head = random_matrix(layout.back().dim, spec.num_classes, layout.back().dim, seed, "head");
    return w;
}

ImageTensor random_image(int32_t size, uint64_t seed) {
    SplitMix64 rng(stream_seed(seed, "image"));
    ImageTensor img(size, size);
    for (float& v : img.data) v = rng.next_unit();
    return img;
}

void save_file(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open \"" + path + "\" for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write to \"" + path + "\" failed");
}

std::string load_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open \"" + path + "\"");
    std::ostringstream ss;
    ss << f.rdbuf();
    return std::move(ss).str();
}

}  // namespace graphleap
