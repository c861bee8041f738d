#include "graphleap/stages.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace graphleap {

FeatureMatrix patch_embed(const ImageTensor& img, const StemWeights& stem, int32_t patch_size) {
    if (img.channels != 3) throw SizeMismatch("patch_embed: expected 3 channels");
    if (img.height != img.width) throw SizeMismatch("patch_embed: image must be square");
    if (patch_size <= 0 || img.height % patch_size != 0)
        throw SizeMismatch("patch_embed: image size " + std::to_string(img.height) +
                           " not divisible by patch size " + std::to_string(patch_size));
    const int32_t patch_len = 3 * patch_size * patch_size;
    if (stem.proj.rows != patch_len)
        throw SizeMismatch("patch_embed: projection expects " + std::to_string(stem.proj.rows) +
                           " inputs, patch has " + std::to_string(patch_len));
    const int32_t d = stem.proj.cols;
    if (stem.bn_gain.size() != static_cast<size_t>(d) || stem.bn_bias.size() != static_cast<size_t>(d) ||
        stem.bn_mean.size() != static_cast<size_t>(d) || stem.bn_var.size() != static_cast<size_t>(d))
        throw SizeMismatch("patch_embed: batch-norm parameter length must equal D");

    const int32_t side = img.height / patch_size;
    FeatureMatrix patches(side * side, patch_len);
    std::vector<float> flat(patch_len);
    for (int32_t py = 0; py < side; ++py) {
        for (int32_t px = 0; px < side; ++px) {
            int32_t o = 0;
            for (int32_t c = 0; c < 3; ++c)
                for (int32_t dy = 0; dy < patch_size; ++dy)
                    for (int32_t dx = 0; dx < patch_size; ++dx)
                        flat[o++] = img.at(c, py * patch_size + dy, px * patch_size + dx);
            std::copy(flat.begin(), flat.end(), patches.row(py * side + px).begin());
        }
    }

    FeatureMatrix out = matmul(patches, stem.proj);
    // Inference-mode BatchNorm: affine transform with stored statistics.
    constexpr float kBnEps = 1e-5f;
    for (int32_t i = 0; i < out.rows; ++i) {
        float* row = out.data.data() + static_cast<size_t>(i) * d;
        for (int32_t c = 0; c < d; ++c)
            row[c] = (row[c] - stem.bn_mean[c]) / std::sqrt(stem.bn_var[c] + kBnEps) * stem.bn_gain[c] +
                     stem.bn_bias[c];
    }
    return out;
}

FeatureMatrix add_positional(const FeatureMatrix& x, const FeatureMatrix& table) {
    if (!x.same_shape(table))
        throw ShapeMismatch("add_positional: table is " + std::to_string(table.rows) + "x" +
                            std::to_string(table.cols) + ", features are " + std::to_string(x.rows) + "x" +
                            std::to_string(x.cols));
    return add(x, table);
}

FeatureMatrix downsample_maxpool(const FeatureMatrix& x, int32_t grid_h, int32_t grid_w) {
    if (static_cast<int64_t>(grid_h) * grid_w != x.rows)
        throw ShapeMismatch("maxpool: grid does not match node count");
    if (grid_h % 2 != 0 || grid_w % 2 != 0)
        throw OddGrid("maxpool: grid " + std::to_string(grid_h) + "x" + std::to_string(grid_w) +
                      " has odd side");
    const int32_t oh = grid_h / 2, ow = grid_w / 2, d = x.cols;
    FeatureMatrix out(oh * ow, d);
    for (int32_t y = 0; y < oh; ++y) {
        for (int32_t xx = 0; xx < ow; ++xx) {
            float* orow = out.data.data() + (static_cast<size_t>(y) * ow + xx) * d;
            const float* r00 = x.row((2 * y) * grid_w + 2 * xx).data();
            const float* r01 = x.row((2 * y) * grid_w + 2 * xx + 1).data();
            const float* r10 = x.row((2 * y + 1) * grid_w + 2 * xx).data();
            const float* r11 = x.row((2 * y + 1) * grid_w + 2 * xx + 1).data();
            for (int32_t c = 0; c < d; ++c)
                orow[c] = std::max(std::max(r00[c], r01[c]), std::max(r10[c], r11[c]));
        }
    }
    return out;
}

std::vector<float> classify_head(const FeatureMatrix& x, const FeatureMatrix& head_weights) {
    if (head_weights.rows != x.cols)
        throw ShapeMismatch("classify_head: weights expect D=" + std::to_string(head_weights.rows) +
                            ", features have D=" + std::to_string(x.cols));
    FeatureMatrix mean(1, x.cols, 0.0f);
    for (int32_t i = 0; i < x.rows; ++i) {
        const float* row = x.data.data() + static_cast<size_t>(i) * x.cols;
        for (int32_t c = 0; c < x.cols; ++c) mean.data[c] += row[c];
    }
    for (float& v : mean.data) v /= static_cast<float>(x.rows);
    FeatureMatrix scores = matmul(mean, head_weights);
    return scores.data;
}

}  // namespace graphleap
