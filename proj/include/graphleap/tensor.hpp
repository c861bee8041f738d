#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "graphleap/errors.hpp"
#include "graphleap/rng.hpp"

namespace graphleap {

// Row-major N x D matrix of f32 node features (row = patch token).
// Also used for plain weight matrices.
struct FeatureMatrix {
    int32_t rows = 0;
    int32_t cols = 0;
    std::vector<float> data;

    FeatureMatrix() = default;
    FeatureMatrix(int32_t r, int32_t c, float fill = 0.0f)
        : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

    float& at(int32_t i, int32_t j) { return data[static_cast<size_t>(i) * cols + j]; }
    float at(int32_t i, int32_t j) const { return data[static_cast<size_t>(i) * cols + j]; }

    std::span<float> row(int32_t i) { return {data.data() + static_cast<size_t>(i) * cols, static_cast<size_t>(cols)}; }
    std::span<const float> row(int32_t i) const {
        return {data.data() + static_cast<size_t>(i) * cols, static_cast<size_t>(cols)};
    }

    bool same_shape(const FeatureMatrix& o) const { return rows == o.rows && cols == o.cols; }
    bool operator==(const FeatureMatrix& o) const = default;
};

// Throws NonFiniteValue if any entry is NaN/Inf.
void require_finite(const FeatureMatrix& m, const char* what);

// Per-node neighbor lists of a dilated kNN graph. Row i always contains i
// itself (self-loop); indices within a row are distinct and in [0, N).
struct GraphTopology {
    int32_t num_nodes = 0;
    int32_t k = 0;
    std::vector<uint32_t> neighbors;  // num_nodes x k, row-major

    GraphTopology() = default;
    GraphTopology(int32_t n, int32_t kk) : num_nodes(n), k(kk), neighbors(static_cast<size_t>(n) * kk, 0) {}

    std::span<uint32_t> row(int32_t i) { return {neighbors.data() + static_cast<size_t>(i) * k, static_cast<size_t>(k)}; }
    std::span<const uint32_t> row(int32_t i) const {
        return {neighbors.data() + static_cast<size_t>(i) * k, static_cast<size_t>(k)};
    }

    bool operator==(const GraphTopology& o) const = default;

    uint64_t hash() const {
        uint64_t h = fnv1a(&num_nodes, sizeof(num_nodes));
        h = fnv1a(&k, sizeof(k), h);
        return fnv1a(neighbors.data(), neighbors.size() * sizeof(uint32_t), h);
    }
};

// H independent (D/H)x(D/H) weight blocks sitting on the diagonal of a
// logical DxD matrix. This is how W_x / W_m are stored.
struct PerHeadWeight {
    int32_t heads = 0;
    int32_t dim_per_head = 0;
    std::vector<float> data;  // heads x dim_per_head x dim_per_head

    PerHeadWeight() = default;
    PerHeadWeight(int32_t h, int32_t dh)
        : heads(h), dim_per_head(dh), data(static_cast<size_t>(h) * dh * dh, 0.0f) {}

    int32_t dim() const { return heads * dim_per_head; }

    float& at(int32_t h, int32_t i, int32_t j) {
        return data[(static_cast<size_t>(h) * dim_per_head + i) * dim_per_head + j];
    }
    float at(int32_t h, int32_t i, int32_t j) const {
        return data[(static_cast<size_t>(h) * dim_per_head + i) * dim_per_head + j];
    }

    bool operator==(const PerHeadWeight& o) const = default;

    // Expands the diagonal blocks into a dense DxD matrix (reference path).
    FeatureMatrix to_dense() const;

    static PerHeadWeight identity(int32_t heads, int32_t dim_per_head);
};

// All learned parameters of one ViG block. Biases are omitted throughout;
// the two norm parameter pairs feed the pre-Grapher and pre-FFN LayerNorms.
struct BlockWeights {
    FeatureMatrix w_in;    // D x D
    PerHeadWeight w_x;     // H blocks of (D/H)^2
    PerHeadWeight w_m;     // H blocks of (D/H)^2
    FeatureMatrix w_out;   // D x D
    FeatureMatrix w1;      // D x 4D
    FeatureMatrix w2;      // 4D x D
    std::vector<float> norm1_gain, norm1_bias;  // length D
    std::vector<float> norm2_gain, norm2_bias;  // length D

    bool operator==(const BlockWeights& o) const = default;
};

// C = A * B with a fixed accumulation order (ascending k per output element);
// the order is part of the determinism contract.
FeatureMatrix matmul(const FeatureMatrix& a, const FeatureMatrix& b);

// C = A + B elementwise.
FeatureMatrix add(const FeatureMatrix& a, const FeatureMatrix& b);

FeatureMatrix identity_matrix(int32_t n);

}  // namespace graphleap
