// Independent reference implementations used to freeze expected values.
// Everything here is deliberately naive (full sorts, dense matmuls, double
// accumulation) and never shares code with the library paths it checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "graphleap/config.hpp"
#include "graphleap/rng.hpp"
#include "graphleap/tensor.hpp"

namespace oracle {

using graphleap::FeatureMatrix;
using graphleap::GraphTopology;

// Untiled squared distances, double accumulation.
inline FeatureMatrix pairwise_sq_distances(const FeatureMatrix& x) {
    FeatureMatrix d(x.rows, x.rows, 0.0f);
    for (int32_t i = 0; i < x.rows; ++i) {
        for (int32_t j = 0; j < x.rows; ++j) {
            double acc = 0.0;
            for (int32_t c = 0; c < x.cols; ++c) {
                const double diff = static_cast<double>(x.at(i, c)) - x.at(j, c);
                acc += diff * diff;
            }
            d.at(i, j) = static_cast<float>(acc);
        }
    }
    return d;
}

// Full-sort dilated kNN row: sort all candidates by (distance, index) with
// the node itself pinned first, then take every dilation-th entry.
inline std::vector<uint32_t> topk_row(const std::vector<float>& dist, uint32_t self, int32_t k,
                                      int32_t dilation) {
    std::vector<std::pair<float, uint32_t>> cand;
    for (uint32_t j = 0; j < dist.size(); ++j)
        if (j != self) cand.emplace_back(dist[j], j);
    std::sort(cand.begin(), cand.end());
    std::vector<uint32_t> out;
    for (int32_t r = 0; r < k; ++r) {
        const int64_t pos = static_cast<int64_t>(r) * dilation;
        out.push_back(pos == 0 ? self : cand[pos - 1].second);
    }
    return out;
}

// Brute-force graph: float distances identical to the engine's tile order do
// not matter here because selection only compares ranks; distances are
// computed in plain single-pass float to mirror the accumulate-then-rank
// behaviour. Ties resolve by index exactly as in topk_row.
inline GraphTopology knn_graph(const FeatureMatrix& x, int32_t k, int32_t dilation) {
    GraphTopology g(x.rows, k);
    for (int32_t i = 0; i < x.rows; ++i) {
        std::vector<float> dist(x.rows);
        for (int32_t j = 0; j < x.rows; ++j) {
            float acc = 0.0f;
            for (int32_t c = 0; c < x.cols; ++c) {
                const float diff = x.at(i, c) - x.at(j, c);
                acc += diff * diff;
            }
            dist[j] = acc;
        }
        dist[i] = 0.0f;
        const auto row = topk_row(dist, static_cast<uint32_t>(i), k, dilation);
        std::copy(row.begin(), row.end(), g.row(i).begin());
    }
    return g;
}

// Dense reference for the fused update: y = [x, m] * vstack(Wx_dense, Wm_dense).
inline FeatureMatrix concat_update(const FeatureMatrix& x, const FeatureMatrix& m,
                                   const FeatureMatrix& wx_dense, const FeatureMatrix& wm_dense) {
    const int32_t d = x.cols;
    FeatureMatrix stacked(2 * d, d, 0.0f);
    for (int32_t i = 0; i < d; ++i)
        for (int32_t j = 0; j < d; ++j) {
            stacked.at(i, j) = wx_dense.at(i, j);
            stacked.at(d + i, j) = wm_dense.at(i, j);
        }
    FeatureMatrix concat(x.rows, 2 * d);
    for (int32_t i = 0; i < x.rows; ++i)
        for (int32_t c = 0; c < d; ++c) {
            concat.at(i, c) = x.at(i, c);
            concat.at(i, d + c) = m.at(i, c);
        }
    return graphleap::matmul(concat, stacked);
}

// erf-based GELU at double precision.
inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

inline FeatureMatrix random_matrix(int32_t rows, int32_t cols, uint64_t seed, float scale = 1.0f) {
    graphleap::SplitMix64 rng(seed);
    FeatureMatrix m(rows, cols);
    for (float& v : m.data) v = scale * rng.next_signed_unit();
    return m;
}

inline bool rel_close(float a, float b, double tol) {
    const double da = a, db = b;
    const double diff = std::abs(da - db);
    return diff <= tol * std::max({std::abs(da), std::abs(db), 1.0}) + 1e-12;
}

inline bool rel_close_all(const FeatureMatrix& a, const FeatureMatrix& b, double tol) {
    if (a.rows != b.rows || a.cols != b.cols) return false;
    for (size_t i = 0; i < a.data.size(); ++i)
        if (!rel_close(a.data[i], b.data[i], tol)) return false;
    return true;
}

}  // namespace oracle
