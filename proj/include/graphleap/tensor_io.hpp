#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "graphleap/config.hpp"
#include "graphleap/stages.hpp"
#include "graphleap/tensor.hpp"

namespace graphleap {

// Container header shared by .glpt (f32 tensors) and .glpg (u32 graphs):
//   magic "GLPT" | version u32=1 | dtype u8 (0=f32, 1=u32) | rank u8 |
//   dims u64 x rank | payload, everything little-endian.
// Total bytes = 10 + 8*rank + payload.

struct StoredTensor {
    uint8_t dtype = 0;
    std::vector<uint64_t> dims;
    std::vector<float> f32;
    std::vector<uint32_t> u32;

    uint64_t numel() const;
};

size_t write_stored(const StoredTensor& t, std::ostream& sink);
StoredTensor read_stored(std::istream& source);

// Rank-2 f32 convenience wrappers (the FeatureMatrix on-disk form).
size_t write_tensor(const FeatureMatrix& t, std::ostream& sink);
FeatureMatrix read_tensor(std::istream& source);  // rejects non-finite values

// Graphs: dtype 1, dims [N, k].
size_t write_graph(const GraphTopology& g, std::ostream& sink);
GraphTopology read_graph(std::istream& source);

// Images: dtype 0, dims [3, H, W].
size_t write_image(const ImageTensor& img, std::ostream& sink);
ImageTensor read_image(std::istream& source);

// Everything the model needs beyond the per-block weights.
struct ModelWeights {
    StemWeights stem;
    FeatureMatrix pos_table;                  // stage-0 N x D
    std::vector<BlockWeights> blocks;         // total_blocks entries
    std::vector<FeatureMatrix> transitions;   // D_s x D_{s+1}, one per stage boundary
    FeatureMatrix head;                       // D_last x num_classes

    bool operator==(const ModelWeights&) const = default;
};

// Weight bundle (.glpw): "GLPW" | version u32=1 | entry count u32 |
// index table {name_len u16, name, offset u64, byte_len u64} | blobs,
// each blob a complete tensor stream as above.
size_t write_weights(const ModelWeights& w, std::ostream& sink);
ModelWeights read_weights(std::istream& source, const ModelSpec& spec, int32_t heads_base = 16);

// Deterministic initialization: same (spec, seed) gives bitwise-identical
// values on any platform. Matrices are uniform in [-s, s) with
// s = 1/sqrt(fan_in); norm gains are 1, biases 0, BatchNorm statistics
// identity.
std::vector<BlockWeights> init_weights(const ModelSpec& spec, uint64_t seed, int32_t heads_base = 16);
ModelWeights init_model_weights(const ModelSpec& spec, uint64_t seed, int32_t heads_base = 16);

// Uniform [0,1) image, deterministic by seed.
ImageTensor random_image(int32_t size, uint64_t seed);

// File helpers (throw IoError on open failure).
void save_file(const std::string& path, const std::string& bytes);
std::string load_file(const std::string& path);

}  // namespace graphleap
