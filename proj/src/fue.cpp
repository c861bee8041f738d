#include "graphleap/fue.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace graphleap {

namespace {

// GELU sampled every 0.25 on [-8, 8]; values frozen so results never depend
// on the host libm.
constexpr float kGeluKnots[65] = {
    -4.88498131e-15f, -3.5707548e-14f,  -2.3939184e-13f,  -1.51081925e-12f, -8.95866714e-12f,
    -4.9897711e-11f,  -2.61039912e-10f, -1.28266464e-09f, -5.91952576e-09f, -2.56574921e-08f,
    -1.04442591e-07f, -3.99260415e-07f, -1.43325781e-06f, -4.83114536e-06f, -1.52895282e-05f,
    -4.54262336e-05f, -0.000126684972f, -0.000331564806f, -0.000814201776f, -0.00187533139f,
    -0.00404969417f,  -0.00819434877f,  -0.0155241629f,   -0.0275050644f,   -0.0455002636f,
    -0.0701035261f,   -0.100210801f,    -0.132062212f,    -0.158655256f,    -0.169970512f,
    -0.154268771f,    -0.100323416f,    0.0f,             0.149676576f,     0.345731229f,
    0.580029488f,     0.841344774f,     1.1179378f,       1.39978921f,      1.67989647f,
    1.95449972f,      2.22249484f,      2.48447585f,      2.74180555f,      2.99595022f,
    3.2481246f,       3.4991858f,       3.74966836f,      3.9998734f,       4.2499547f,
    4.49998474f,      4.74999523f,      4.99999857f,      5.24999952f,      5.5f,
    5.75f,            6.0f,             6.25f,            6.5f,             6.75f,
    7.0f,             7.25f,            7.5f,             7.75f,            8.0f,
};

}  // namespace

float gelu_pwl(float x) {
    if (x <= -8.0f) return 0.0f;
    if (x >= 8.0f) return x;
    const float t = (x + 8.0f) * 4.0f;  // segment width 0.25
    int32_t i = static_cast<int32_t>(t);
    if (i > 63) i = 63;
    const float x0 = -8.0f + 0.25f * static_cast<float>(i);
    return kGeluKnots[i] + (x - x0) * (kGeluKnots[i + 1] - kGeluKnots[i]) * 4.0f;
}

float gelu_exact(float x) {
    return 0.5f * x * (1.0f + std::erf(x * 0.70710678118654752440f));
}

float relu(float x) { return x > 0.0f ? x : 0.0f; }

float apply_activation(Activation act, float x) {
    switch (act) {
        case Activation::GeluPwl: return gelu_pwl(x);
        case Activation::GeluExact: return gelu_exact(x);
        case Activation::Relu: return relu(x);
    }
    return x;
}

void apply_activation_inplace(Activation act, FeatureMatrix& m) {
    for (float& v : m.data) v = apply_activation(act, v);
}

BankedFeatureStore::BankedFeatureStore(const FeatureMatrix& features, int32_t num_banks)
    : num_banks_(std::max(1, num_banks)), rows_(features.rows), cols_(features.cols) {
    banks_.resize(num_banks_);
    for (int32_t i = 0; i < rows_; ++i) {
        auto& bank = banks_[i % num_banks_];
        bank.insert(bank.end(), features.row(i).begin(), features.row(i).end());
    }
}

BankedFeatureStore::GatherResult BankedFeatureStore::gather(std::span<const uint32_t> indices) const {
    GatherResult res;
    res.features.reserve(indices.size());
    std::vector<int32_t> per_bank(num_banks_, 0);
    for (uint32_t idx : indices) {
        if (idx >= static_cast<uint32_t>(rows_))
            throw IndexOutOfRange("gather: index " + std::to_string(idx) + " out of range (N=" +
                                  std::to_string(rows_) + ")");
        const int32_t bank = static_cast<int32_t>(idx) % num_banks_;
        const int32_t slot = static_cast<int32_t>(idx) / num_banks_;
        ++per_bank[bank];
        const float* src = banks_[bank].data() + static_cast<size_t>(slot) * cols_;
        res.features.emplace_back(src, src + cols_);
    }
    res.rounds = indices.empty() ? 0 : *std::max_element(per_bank.begin(), per_bank.end());
    accumulated_rounds_ += static_cast<uint64_t>(res.rounds);
    return res;
}

FeatureMatrix mrconv_aggregate(const FeatureMatrix& x, const GraphTopology& g) {
    if (g.num_nodes != x.rows)
        throw TopologyMismatch("mrconv: graph has " + std::to_string(g.num_nodes) + " nodes, features have " +
                               std::to_string(x.rows));
    FeatureMatrix m(x.rows, x.cols, 0.0f);
    for (int32_t i = 0; i < x.rows; ++i) {
        const float* xi = x.data.data() + static_cast<size_t>(i) * x.cols;
        float* mi = m.data.data() + static_cast<size_t>(i) * x.cols;
        bool first = true;
        for (uint32_t j : g.row(i)) {
            if (j >= static_cast<uint32_t>(x.rows)) throw TopologyMismatch("mrconv: neighbor index out of range");
            const float* xj = x.data.data() + static_cast<size_t>(j) * x.cols;
            if (first) {
                for (int32_t c = 0; c < x.cols; ++c) mi[c] = xj[c] - xi[c];
                first = false;
            } else {
                for (int32_t c = 0; c < x.cols; ++c) mi[c] = std::max(mi[c], xj[c] - xi[c]);
            }
        }
    }
    return m;
}

FeatureMatrix fused_update(const FeatureMatrix& x, const FeatureMatrix& m, const PerHeadWeight& w_x,
                           const PerHeadWeight& w_m) {
    if (!x.same_shape(m)) throw ShapeMismatch("fused_update: x and m shapes differ");
    if (w_x.heads != w_m.heads || w_x.dim_per_head != w_m.dim_per_head)
        throw ShapeMismatch("fused_update: w_x and w_m head layouts differ");
    if (w_x.dim() != x.cols)
        throw ShapeMismatch("fused_update: weights cover " + std::to_string(w_x.dim()) + " channels, features have " +
                            std::to_string(x.cols));

    const int32_t heads = w_x.heads, dh = w_x.dim_per_head;
    FeatureMatrix y(x.rows, x.cols, 0.0f);
    for (int32_t i = 0; i < x.rows; ++i) {
        const float* xi = x.data.data() + static_cast<size_t>(i) * x.cols;
        const float* mi = m.data.data() + static_cast<size_t>(i) * x.cols;
        float* yi = y.data.data() + static_cast<size_t>(i) * x.cols;
        for (int32_t h = 0; h < heads; ++h) {
            const int32_t base = h * dh;
            for (int32_t j = 0; j < dh; ++j) {
                // x-part then m-part, matching the row order of the stacked
                // reference matrix [diag(W_x); diag(W_m)].
                float acc = 0.0f;
                for (int32_t c = 0; c < dh; ++c) acc += xi[base + c] * w_x.at(h, c, j);
                for (int32_t c = 0; c < dh; ++c) acc += mi[base + c] * w_m.at(h, c, j);
                yi[base + j] = acc;
            }
        }
    }
    return y;
}

FeatureMatrix layer_norm(const FeatureMatrix& x, std::span<const float> gain, std::span<const float> bias) {
    if (gain.size() != static_cast<size_t>(x.cols) || bias.size() != static_cast<size_t>(x.cols))
        throw ShapeMismatch("layer_norm: gain/bias length must equal D");
    constexpr float kEps = 1e-6f;
    FeatureMatrix out(x.rows, x.cols);
    for (int32_t i = 0; i < x.rows; ++i) {
        const float* xi = x.data.data() + static_cast<size_t>(i) * x.cols;
        float* oi = out.data.data() + static_cast<size_t>(i) * x.cols;
        float mean = 0.0f;
        for (int32_t c = 0; c < x.cols; ++c) mean += xi[c];
        mean /= static_cast<float>(x.cols);
        float var = 0.0f;
        for (int32_t c = 0; c < x.cols; ++c) {
            const float d = xi[c] - mean;
            var += d * d;
        }
        var /= static_cast<float>(x.cols);
        const float inv = 1.0f / std::sqrt(var + kEps);
        for (int32_t c = 0; c < x.cols; ++c) oi[c] = (xi[c] - mean) * inv * gain[c] + bias[c];
    }
    return out;
}

FeatureMatrix projected_input(const FeatureMatrix& x_in, const BlockWeights& w, const BlockOptions& opts) {
    if (opts.layer_norm) return matmul(layer_norm(x_in, w.norm1_gain, w.norm1_bias), w.w_in);
    return matmul(x_in, w.w_in);
}

FeatureMatrix grapher_block_with_projected(const FeatureMatrix& x_in, const FeatureMatrix& u,
                                           const GraphTopology& g, const BlockWeights& w,
                                           const BlockOptions& opts) {
    const FeatureMatrix m = mrconv_aggregate(u, g);
    FeatureMatrix y = fused_update(u, m, w.w_x, w.w_m);
    apply_activation_inplace(opts.act, y);
    y = matmul(y, w.w_out);
    return add(y, x_in);
}

FeatureMatrix grapher_block(const FeatureMatrix& x_in, const GraphTopology& g, const BlockWeights& w,
                            const BlockOptions& opts) {
    return grapher_block_with_projected(x_in, projected_input(x_in, w, opts), g, w, opts);
}

FeatureMatrix ffn_block(const FeatureMatrix& y, const BlockWeights& w, const BlockOptions& opts) {
    if (w.w1.rows != y.cols || w.w2.cols != y.cols || w.w1.cols != w.w2.rows)
        throw ShapeMismatch("ffn_block: weight shapes inconsistent with input D=" + std::to_string(y.cols));
    FeatureMatrix h = opts.layer_norm ? matmul(layer_norm(y, w.norm2_gain, w.norm2_bias), w.w1)
                                      : matmul(y, w.w1);
    apply_activation_inplace(opts.act, h);
    h = matmul(h, w.w2);
    return add(h, y);
}

}  // namespace graphleap
