#include "graphleap/gce.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace graphleap {

DistanceTilePlan DistanceTilePlan::for_matrix(int32_t n, int32_t d, int32_t p_n, int32_t p_d) {
    if (n < 1 || d < 1 || p_n < 1 || p_d < 1)
        throw DimensionMismatch("tile plan: all dimensions must be positive");
    DistanceTilePlan plan;
    plan.p_n = p_n;
    plan.p_d = p_d;
    plan.num_tiles = (d + p_d - 1) / p_d;
    plan.nodes_per_pe = (n + p_n - 1) / p_n;
    return plan;
}

NeighborHeap::NeighborHeap(size_t capacity) : capacity_(capacity) { entries_.reserve(capacity + 1); }

namespace {
// Max-heap order: the root is the worst remaining candidate.
constexpr auto heap_less = [](const std::pair<float, uint32_t>& a, const std::pair<float, uint32_t>& b) {
    return a < b;
};
}  // namespace

void NeighborHeap::insert(float distance, uint32_t index) {
    if (capacity_ == 0) return;
    if (entries_.size() < capacity_) {
        entries_.emplace_back(distance, index);
        std::push_heap(entries_.begin(), entries_.end(), heap_less);
        return;
    }
    if (std::pair(distance, index) < entries_.front()) {
        std::pop_heap(entries_.begin(), entries_.end(), heap_less);
        entries_.back() = {distance, index};
        std::push_heap(entries_.begin(), entries_.end(), heap_less);
    }
}

std::vector<std::pair<float, uint32_t>> NeighborHeap::extract_sorted() {
    std::sort_heap(entries_.begin(), entries_.end(), heap_less);
    return std::move(entries_);
}

FeatureMatrix pairwise_distances_tiled(const FeatureMatrix& x, const DistanceTilePlan& plan) {
    const int32_t n = x.rows, d = x.cols;
    if (static_cast<int64_t>(plan.num_tiles) * plan.p_d < d ||
        static_cast<int64_t>(plan.nodes_per_pe) * plan.p_n < n)
        throw DimensionMismatch("tile plan does not cover the matrix (" + std::to_string(n) + "x" +
                                std::to_string(d) + ")");

    FeatureMatrix dist(n, n, 0.0f);
    for (int32_t i = 0; i < n; ++i) {
        const float* xi = x.data.data() + static_cast<size_t>(i) * d;
        for (int32_t j = i + 1; j < n; ++j) {
            const float* xj = x.data.data() + static_cast<size_t>(j) * d;
            float acc = 0.0f;
            for (int32_t t = 0; t < plan.num_tiles; ++t) {
                const int32_t c0 = t * plan.p_d;
                const int32_t c1 = std::min(c0 + plan.p_d, d);  // zero padding past d contributes nothing
                float partial = 0.0f;
                for (int32_t c = c0; c < c1; ++c) {
                    const float diff = xi[c] - xj[c];
                    partial += diff * diff;
                }
                acc += partial;
            }
            dist.at(i, j) = acc;
            dist.at(j, i) = acc;  // mirrored, exact symmetry by construction
        }
    }
    return dist;
}

FeatureMatrix true_distances(const FeatureMatrix& x, const DistanceTilePlan& plan) {
    FeatureMatrix d = pairwise_distances_tiled(x, plan);
    for (float& v : d.data) v = std::sqrt(v);
    return d;
}

std::vector<uint32_t> topk_dilated(std::span<const float> dist_row, uint32_t self_index, int32_t k,
                                   int32_t dilation) {
    const int64_t n = static_cast<int64_t>(dist_row.size());
    if (k < 1 || dilation < 1) throw DilationTooLarge("k and dilation must be >= 1");
    if (static_cast<int64_t>(k) * dilation > n)
        throw DilationTooLarge("k*dilation = " + std::to_string(static_cast<int64_t>(k) * dilation) +
                               " exceeds N = " + std::to_string(n));
    if (self_index >= n) throw IndexOutOfRange("self index out of range");

    // The node itself is pinned to the front (it is its own nearest neighbor
    // even when other candidates tie at distance zero); the heap ranks the
    // remaining candidates by (distance, index).
    NeighborHeap heap(static_cast<size_t>(k) * dilation - 1);
    for (int64_t j = 0; j < n; ++j) {
        if (static_cast<uint32_t>(j) == self_index) continue;
        heap.insert(dist_row[j], static_cast<uint32_t>(j));
    }
    const auto sorted = heap.extract_sorted();

    std::vector<uint32_t> out;
    out.reserve(k);
    for (int32_t r = 0; r < k; ++r) {
        const int64_t pos = static_cast<int64_t>(r) * dilation;  // stride phase 0 keeps self
        out.push_back(pos == 0 ? self_index : sorted[pos - 1].second);
    }
    return out;
}

GraphTopology build_graph(const FeatureMatrix& x, int32_t k, int32_t dilation,
                          const DistanceTilePlan& plan) {
    const FeatureMatrix dist = pairwise_distances_tiled(x, plan);
    GraphTopology g(x.rows, k);
    for (int32_t i = 0; i < x.rows; ++i) {
        const auto row = topk_dilated(dist.row(i), static_cast<uint32_t>(i), k, dilation);
        std::copy(row.begin(), row.end(), g.row(i).begin());
    }
    return g;
}

void stream_edges(const GraphTopology& g, EdgeQueue& sink) {
    for (int32_t i = 0; i < g.num_nodes; ++i) {
        EdgeMessage msg;
        msg.node = i;
        msg.indices.assign(g.row(i).begin(), g.row(i).end());
        sink.push(std::move(msg));
    }
    EdgeMessage end;
    end.end_of_graph = true;
    sink.push(std::move(end));
}

}  // namespace graphleap
