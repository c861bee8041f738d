#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "graphleap/tensor.hpp"

namespace graphleap {

enum class Activation { GeluPwl, GeluExact, Relu };

// Piecewise-linear GELU: 64 uniform segments on [-8, 8] with frozen knot
// values, exactly 0 below -8 and exactly x above 8. Max absolute error vs
// exact GELU is under 1e-2.
float gelu_pwl(float x);

// erf-based reference GELU.
float gelu_exact(float x);

float relu(float x);

float apply_activation(Activation act, float x);
void apply_activation_inplace(Activation act, FeatureMatrix& m);

// Node features spread over H banks by token index (row i lives in bank
// i mod H). Banking never changes functional results; it only produces the
// serialized-round counts consumed by the perf reports.
class BankedFeatureStore {
  public:
    BankedFeatureStore(const FeatureMatrix& features, int32_t num_banks);

    struct GatherResult {
        std::vector<std::vector<float>> features;  // in request order
        int32_t rounds = 0;                        // max per-bank requests this call
    };

    // Fetches the requested rows; rounds = max over banks of requests that
    // landed in the same bank (the serialization cost of one gather burst).
    GatherResult gather(std::span<const uint32_t> indices) const;

    int32_t num_banks() const { return num_banks_; }
    int32_t rows() const { return rows_; }

    // Total rounds across all gather calls on this instance.
    uint64_t accumulated_rounds() const { return accumulated_rounds_; }

  private:
    std::vector<std::vector<float>> banks_;  // bank b holds rows i with i % H == b, in row order
    int32_t num_banks_ = 0;
    int32_t rows_ = 0;
    int32_t cols_ = 0;
    mutable uint64_t accumulated_rounds_ = 0;
};

// Max-relative aggregation: m_i[c] = max_{j in N(i)} (x_j[c] - x_i[c]).
// With self-loops present every entry is >= 0.
FeatureMatrix mrconv_aggregate(const FeatureMatrix& x, const GraphTopology& g);

// Per-head fused update y_h = x_h * W_x,h + m_h * W_m,h, concatenated over
// heads. Algebraically identical to [x, m] * vstack(diag(W_x), diag(W_m))
// without materializing the concatenation.
FeatureMatrix fused_update(const FeatureMatrix& x, const FeatureMatrix& m, const PerHeadWeight& w_x,
                           const PerHeadWeight& w_m);

// Per-row normalization: (x - mean) / sqrt(var + 1e-6) * gain + bias.
FeatureMatrix layer_norm(const FeatureMatrix& x, std::span<const float> gain, std::span<const float> bias);

struct BlockOptions {
    bool layer_norm = true;  // normalize block input and FFN input
    Activation act = Activation::GeluPwl;
};

// Grapher: U = X*W_in, M = mrconv(U), Y = act(fused(U, M)) * W_out + X.
// When opts.layer_norm is set the input projection sees the normalized X;
// the residual always adds the raw X.
FeatureMatrix grapher_block(const FeatureMatrix& x_in, const GraphTopology& g, const BlockWeights& w,
                            const BlockOptions& opts = {});

// Same, but with the projected features U supplied by the caller (the
// scheduler computes U once and reuses it for graph construction).
FeatureMatrix grapher_block_with_projected(const FeatureMatrix& x_in, const FeatureMatrix& u,
                                           const GraphTopology& g, const BlockWeights& w,
                                           const BlockOptions& opts = {});

// Input projection as the Grapher sees it: LayerNorm (when enabled) then W_in.
FeatureMatrix projected_input(const FeatureMatrix& x_in, const BlockWeights& w, const BlockOptions& opts);

// FFN: X' = act(Y*W1) * W2 + Y, with the optional pre-norm on the MLP path.
FeatureMatrix ffn_block(const FeatureMatrix& y, const BlockWeights& w, const BlockOptions& opts = {});

}  // namespace graphleap
