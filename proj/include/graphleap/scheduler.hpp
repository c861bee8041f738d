#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "graphleap/config.hpp"
#include "graphleap/fue.hpp"
#include "graphleap/gce.hpp"
#include "graphleap/queue.hpp"
#include "graphleap/stages.hpp"
#include "graphleap/tensor_io.hpp"

namespace graphleap {

struct EngineOptions {
    BlockOptions block;       // normalization + activation choice
    int32_t heads_base = 16;  // HardwareParams.H
    int32_t n_buf = 2;        // look-ahead buffer stages (overlapped runs)

    static EngineOptions from_hardware(const HardwareParams& hw) {
        EngineOptions o;
        o.heads_base = hw.heads;
        o.n_buf = hw.n_buf;
        return o;
    }
};

// Per-block state of the sequential drivers: block input X, the projected
// features cached for the next block's graph, and the graph consumed here.
struct LayerState {
    int32_t layer = -1;
    FeatureMatrix x;
    FeatureMatrix u_cache;
    GraphTopology g_hat;
};

struct BlockTrace {
    int32_t layer = -1;
    uint64_t graph_hash = 0;
    // Retained only while the stage has <= 1024 nodes; larger graphs keep
    // just the hash.
    std::optional<GraphTopology> graph;
};

// Wall-clock telemetry of one overlapped run (monotonic ns from run start).
struct LayerTiming {
    int32_t layer = -1;
    int64_t gce_start_ns = 0;
    int64_t gce_end_ns = 0;
    int64_t fue_start_ns = 0;
    int64_t fue_end_ns = 0;
    int64_t gce_stall_ns = 0;  // producer wait: snapshot + queue slot
    int64_t fue_stall_ns = 0;  // consumer wait for the graph
};

struct WallTimeline {
    std::vector<LayerTiming> layers;
    int64_t total_ns = 0;
    size_t queue_high_water = 0;
};

struct RunResult {
    std::vector<float> logits;
    std::vector<BlockTrace> blocks;
    std::optional<WallTimeline> timeline;  // overlapped runs only
};

// (layer, topology) messages flowing from the construction engine to the
// feature update engine.
struct ProducedGraph {
    int32_t layer = -1;
    GraphTopology graph;
};
using GraphQueue = BoundedQueue<ProducedGraph>;

// Standard ViG: every block builds its graph from its own projected
// features; strictly serialized.
RunResult run_standard(const ImageTensor& img, const ModelWeights& w, const ModelSpec& spec,
                       const EngineOptions& opts = {});

// GraphLeap semantics on one thread: block l consumes the graph built from
// the previous block's projected features; the first block of every stage
// bootstraps with the standard construction.
RunResult run_graphleap_sequential(const ImageTensor& img, const ModelWeights& w, const ModelSpec& spec,
                                   const EngineOptions& opts = {});

// GraphLeap with a real producer/consumer pipeline: a graph-construction
// worker runs ahead over feature snapshots while the feature-update worker
// consumes graphs from a bounded queue of depth n_buf. Logits are bitwise
// identical to the sequential GraphLeap run.
RunResult run_graphleap_overlapped(const ImageTensor& img, const ModelWeights& w, const ModelSpec& spec,
                                   const EngineOptions& opts = {});

// Staleness measurement: per-block mean Jaccard overlap between the
// leap-ahead graph actually consumed and the same-layer construction, plus
// the final logit distance between the two modes.
struct DivergenceReport {
    std::vector<double> jaccard;       // one entry per block
    std::vector<uint64_t> used_hash;   // leap-ahead graph hashes
    std::vector<uint64_t> fresh_hash;  // same-layer graph hashes
    double logit_l2 = 0.0;
};

DivergenceReport compare_modes(const ImageTensor& img, const ModelWeights& w, const ModelSpec& spec,
                               const EngineOptions& opts = {});

// Mean over nodes of |row_a inter row_b| / |row_a union row_b|.
double topology_jaccard(const GraphTopology& a, const GraphTopology& b);

}  // namespace graphleap
