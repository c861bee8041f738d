#pragma once

#include <cstdint>
#include <vector>

#include "graphleap/tensor.hpp"

namespace graphleap {

// Raw image, channel-major (C=3, then rows, then columns), values in [0,1].
struct ImageTensor {
    int32_t channels = 3;
    int32_t height = 0;
    int32_t width = 0;
    std::vector<float> data;  // channels * height * width

    ImageTensor() = default;
    ImageTensor(int32_t h, int32_t w)
        : height(h), width(w), data(static_cast<size_t>(3) * h * w, 0.0f) {}

    float at(int32_t c, int32_t y, int32_t x) const {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }
    float& at(int32_t c, int32_t y, int32_t x) {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }
};

// Patch embedding stem: one strided linear projection of each flattened
// patch followed by inference-mode batch normalization.
struct StemWeights {
    FeatureMatrix proj;  // (3 * patch^2) x D
    std::vector<float> bn_gain, bn_bias, bn_mean, bn_var;  // length D

    bool operator==(const StemWeights&) const = default;
};

// Flattens non-overlapping patches (channel-major within a patch, patches in
// row-major grid order), projects to D, applies BatchNorm with the stored
// statistics. Output is N x D with N = (image/patch)^2.
FeatureMatrix patch_embed(const ImageTensor& img, const StemWeights& stem, int32_t patch_size);

// Elementwise X + table.
FeatureMatrix add_positional(const FeatureMatrix& x, const FeatureMatrix& table);

// 2x2 window max per channel over the token grid (rows laid out h x w,
// row-major). Output grid is (h/2) x (w/2).
FeatureMatrix downsample_maxpool(const FeatureMatrix& x, int32_t grid_h, int32_t grid_w);

// Global mean over nodes, then a linear map to class scores.
std::vector<float> classify_head(const FeatureMatrix& x, const FeatureMatrix& head_weights);

}  // namespace graphleap
