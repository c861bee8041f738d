#pragma once

#include <cstdint>
#include <vector>

#include "graphleap/queue.hpp"
#include "graphleap/tensor.hpp"

namespace graphleap {

// Tiling of the distance computation: features are consumed in channel tiles
// of width p_d and nodes are spread over p_n processing rows.
struct DistanceTilePlan {
    int32_t p_n = 32;
    int32_t p_d = 32;
    int32_t num_tiles = 0;     // ceil(D / p_d), last tile zero-padded
    int32_t nodes_per_pe = 0;  // ceil(N / p_n)

    static DistanceTilePlan for_matrix(int32_t n, int32_t d, int32_t p_n = 32, int32_t p_d = 32);
};

// Bounded max-heap over (distance, index) keeping the `capacity` smallest
// entries; ordering is lexicographic so equal distances prefer the lower
// index. Mirrors the fixed-size selection units of the construction engine.
class NeighborHeap {
  public:
    explicit NeighborHeap(size_t capacity);

    void insert(float distance, uint32_t index);
    size_t size() const { return entries_.size(); }
    size_t capacity() const { return capacity_; }

    // Ascending (distance, index); consumes the heap.
    std::vector<std::pair<float, uint32_t>> extract_sorted();

  private:
    size_t capacity_;
    std::vector<std::pair<float, uint32_t>> entries_;  // max-heap on (distance, index)
};

// Full N x N matrix of squared distances, accumulated channel-tile by
// channel-tile. Each pair is computed once (i < j) and mirrored, so the
// result is exactly symmetric; the diagonal is exactly zero.
FeatureMatrix pairwise_distances_tiled(const FeatureMatrix& x, const DistanceTilePlan& plan);

// Debug path: elementwise sqrt of the squared distances (rank-preserving,
// never used for selection).
FeatureMatrix true_distances(const FeatureMatrix& x, const DistanceTilePlan& plan);

// Dilated top-k over one distance row: keeps the k*d nearest candidates,
// sorts ascending by (distance, index) with the node itself pinned first,
// and returns every d-th entry. The first returned index is always
// self_index.
std::vector<uint32_t> topk_dilated(std::span<const float> dist_row, uint32_t self_index, int32_t k,
                                   int32_t dilation);

// Dilated kNN graph over all rows of X.
GraphTopology build_graph(const FeatureMatrix& x, int32_t k, int32_t dilation,
                          const DistanceTilePlan& plan);

inline GraphTopology build_graph(const FeatureMatrix& x, int32_t k, int32_t dilation) {
    return build_graph(x, k, dilation, DistanceTilePlan::for_matrix(x.rows, x.cols));
}

// One message of the edge stream: a neighbor row, or the end-of-graph marker.
struct EdgeMessage {
    int32_t node = -1;
    std::vector<uint32_t> indices;
    bool end_of_graph = false;
};

using EdgeQueue = BoundedQueue<EdgeMessage>;

// Streams neighbor rows in node order followed by an end marker. Blocks on a
// full queue; throws QueueClosed if the consumer dropped.
void stream_edges(const GraphTopology& g, EdgeQueue& sink);

}  // namespace graphleap
