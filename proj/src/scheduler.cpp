#include "graphleap/scheduler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_set>

namespace graphleap {

namespace {

constexpr int32_t kGraphRetainLimit = 1024;

int64_t now_ns(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0)
        .count();
}

void check_weights(const ModelWeights& w, const ModelSpec& spec,
                   const std::vector<StageLayout>& layout) {
    if (w.blocks.size() != static_cast<size_t>(spec.total_blocks()))
        throw ShapeMismatch("weights carry " + std::to_string(w.blocks.size()) + " blocks, model has " +
                            std::to_string(spec.total_blocks()));
    if (w.transitions.size() + 1 != layout.size())
        throw ShapeMismatch("weights carry " + std::to_string(w.transitions.size()) +
                            " stage transitions, model needs " + std::to_string(layout.size() - 1));
}

FeatureMatrix stem_and_position(const ImageTensor& img, const ModelWeights& w, const ModelSpec& spec) {
    if (img.height != spec.image_size || img.width != spec.image_size)
        throw SizeMismatch("input image is " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                           ", model expects " + std::to_string(spec.image_size));
    FeatureMatrix x = patch_embed(img, w.stem, spec.patch_size);
    return add_positional(x, w.pos_table);
}

FeatureMatrix stage_transition(FeatureMatrix x, const StageLayout& from, const FeatureMatrix& proj) {
    x = downsample_maxpool(x, from.grid_h, from.grid_w);
    return matmul(x, proj);
}

void record_trace(std::vector<BlockTrace>& trace, int32_t layer, const GraphTopology& g) {
    BlockTrace t;
    t.layer = layer;
    t.graph_hash = g.hash();
    if (g.num_nodes <= kGraphRetainLimit) t.graph = g;
    trace.push_back(std::move(t));
}

enum class GraphPolicy { SameLayer, LeapAhead };

// Single-threaded driver shared by the standard and sequential-GraphLeap
// paths; they differ only in which features feed the graph construction.
RunResult run_serial(const ImageTensor& img, const ModelWeights& w, const ModelSpec& spec,
                     const EngineOptions& opts, GraphPolicy policy) {
    const auto layout = stage_layout(spec, opts.heads_base);
    check_weights(w, spec, layout);

    RunResult res;
    LayerState state;
    state.x = stem_and_position(img, w, spec);

    for (size_t s = 0; s < layout.size(); ++s) {
        const StageLayout& st = layout[s];
        for (int32_t b = 0; b < st.num_blocks; ++b) {
            const int32_t l = st.first_block + b;
            const BlockWeights& bw = w.blocks[l];
            const int32_t dil = spec.dilation_schedule[l];

            FeatureMatrix u = projected_input(state.x, bw, opts.block);
            // Leap-ahead uses the previous block's cached projection; the
            // first block of a stage has none and bootstraps from its own.
            const bool bootstrap = (policy == GraphPolicy::SameLayer) || b == 0;
            state.g_hat = build_graph(bootstrap ? u : state.u_cache, spec.k, dil);
            record_trace(res.blocks, l, state.g_hat);

            FeatureMatrix y = grapher_block_with_projected(state.x, u, state.g_hat, bw, opts.block);
            state.x = ffn_block(y, bw, opts.block);
            state.u_cache = std::move(u);
            state.layer = l;
        }
        if (s + 1 < layout.size()) state.x = stage_transition(std::move(state.x), st, w.transitions[s]);
    }

    res.logits = classify_head(state.x, w.head);
    return res;
}

struct SnapshotMsg {
    int32_t layer = -1;  // block whose input this is
    FeatureMatrix x;
};

}  // namespace

RunResult run_standard(const ImageTensor& img, const ModelWeights& w, const ModelSpec& spec,
                       const EngineOptions& opts) {
    return run_serial(img, w, spec, opts, GraphPolicy::SameLayer);
}

RunResult run_graphleap_sequential(const ImageTensor& img, const ModelWeights& w, const ModelSpec& spec,
                                   const EngineOptions& opts) {
    return run_serial(img, w, spec, opts, GraphPolicy::LeapAhead);
}

RunResult run_graphleap_overlapped(const ImageTensor& img, const ModelWeights& w, const ModelSpec& spec,
                                   const EngineOptions& opts) {
    const auto layout = stage_layout(spec, opts.heads_base);
    check_weights(w, spec, layout);
    const int32_t total_blocks = spec.total_blocks();

    GraphQueue graphs(static_cast<size_t>(std::max(1, opts.n_buf)));
    // Snapshot channel is sized so the consumer never blocks handing over.
    BoundedQueue<SnapshotMsg> snapshots(static_cast<size_t>(total_blocks) + layout.size() + 1);

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<LayerTiming> timings(static_cast<size_t>(total_blocks));
    for (int32_t l = 0; l < total_blocks; ++l) timings[l].layer = l;
    std::mutex timing_mutex;  // producer and consumer fill disjoint fields

    std::exception_ptr producer_error;

    // Graph producer: walks the same stage structure as the consumer, one
    // block ahead. Per stage it receives the stage-input snapshot, emits the
    // bootstrap graph and (from the same projection) the second block's
    // graph, then one graph per subsequent snapshot.
    auto producer_fn = [&] {
        try {
            for (const StageLayout& st : layout) {
                const int32_t f = st.first_block;
                const int32_t last = f + st.num_blocks - 1;

                int64_t wait_begin = now_ns(t0);
                auto snap = snapshots.pop();
                if (!snap) throw QueueClosed("snapshot channel closed before stage input");
                if (snap->layer != f) throw SpecMismatch("snapshot layer out of order");
                int64_t wait_end = now_ns(t0);

                FeatureMatrix u = projected_input(snap->x, w.blocks[f], opts.block);
                {
                    const int64_t start = wait_end;
                    GraphTopology g = build_graph(u, spec.k, spec.dilation_schedule[f]);
                    const int64_t end = now_ns(t0);
                    {
                        std::lock_guard lk(timing_mutex);
                        timings[f].gce_start_ns = start;
                        timings[f].gce_end_ns = end;
                        timings[f].gce_stall_ns = wait_end - wait_begin;
                    }
                    graphs.push({f, std::move(g)});
                }
                if (st.num_blocks >= 2) {
                    const int64_t start = now_ns(t0);
                    GraphTopology g = build_graph(u, spec.k, spec.dilation_schedule[f + 1]);
                    const int64_t end = now_ns(t0);
                    {
                        std::lock_guard lk(timing_mutex);
                        timings[f + 1].gce_start_ns = start;
                        timings[f + 1].gce_end_ns = end;
                    }
                    graphs.push({f + 1, std::move(g)});
                }
                for (int32_t l = f + 1; l <= last - 1; ++l) {
                    wait_begin = now_ns(t0);
                    snap = snapshots.pop();
                    if (!snap) throw QueueClosed("snapshot channel closed mid-stage");
                    if (snap->layer != l) throw SpecMismatch("snapshot layer out of order");
                    wait_end = now_ns(t0);

                    u = projected_input(snap->x, w.blocks[l], opts.block);
                    GraphTopology g = build_graph(u, spec.k, spec.dilation_schedule[l + 1]);
                    const int64_t end = now_ns(t0);
                    {
                        std::lock_guard lk(timing_mutex);
                        timings[l + 1].gce_start_ns = wait_end;
                        timings[l + 1].gce_end_ns = end;
                        timings[l + 1].gce_stall_ns = wait_end - wait_begin;
                    }
                    graphs.push({l + 1, std::move(g)});
                }
            }
            graphs.finish();
        } catch (...) {
            producer_error = std::current_exception();
            graphs.finish();  // unblock a waiting consumer
        }
    };

    RunResult res;
    std::thread producer(producer_fn);
    try {
        FeatureMatrix x = stem_and_position(img, w, spec);
        for (size_t s = 0; s < layout.size(); ++s) {
            const StageLayout& st = layout[s];
            snapshots.push({st.first_block, x});
            for (int32_t b = 0; b < st.num_blocks; ++b) {
                const int32_t l = st.first_block + b;
                const BlockWeights& bw = w.blocks[l];

                const int64_t wait_begin = now_ns(t0);
                auto msg = graphs.pop();
                if (!msg) {
                    if (producer_error) std::rethrow_exception(producer_error);
                    throw QueueClosed("graph queue ended early");
                }
                if (msg->layer != l) throw SpecMismatch("graph layer out of order");
                const int64_t wait_end = now_ns(t0);

                record_trace(res.blocks, l, msg->graph);

                FeatureMatrix u = projected_input(x, bw, opts.block);
                FeatureMatrix y = grapher_block_with_projected(x, u, msg->graph, bw, opts.block);
                x = ffn_block(y, bw, opts.block);
                const int64_t done = now_ns(t0);
                {
                    std::lock_guard lk(timing_mutex);
                    timings[l].fue_start_ns = wait_end;
                    timings[l].fue_end_ns = done;
                    timings[l].fue_stall_ns = wait_end - wait_begin;
                }
                // Hand the next block's input over while it is still fresh.
                if (b < st.num_blocks - 2) snapshots.push({l + 1, x});
            }
            if (s + 1 < layout.size()) x = stage_transition(std::move(x), st, w.transitions[s]);
        }
        snapshots.finish();
        producer.join();
        if (producer_error) std::rethrow_exception(producer_error);
        res.logits = classify_head(x, w.head);
    } catch (const QueueClosed&) {
        // The stream broke under us: the producer's own error (if any) is the
        // root cause and wins.
        snapshots.close();
        graphs.close();
        if (producer.joinable()) producer.join();
        if (producer_error) std::rethrow_exception(producer_error);
        throw;
    } catch (...) {
        // Consumer-side failure: tear down both channels so the producer
        // cannot block forever, then surface the consumer error.
        snapshots.close();
        graphs.close();
        if (producer.joinable()) producer.join();
        throw;
    }

    WallTimeline tl;
    tl.layers = std::move(timings);
    tl.total_ns = now_ns(t0);
    tl.queue_high_water = graphs.high_water();
    res.timeline = std::move(tl);
    return res;
}

double topology_jaccard(const GraphTopology& a, const GraphTopology& b) {
    if (a.num_nodes != b.num_nodes) throw TopologyMismatch("jaccard: node counts differ");
    double acc = 0.0;
    std::unordered_set<uint32_t> sa, sb;
    for (int32_t i = 0; i < a.num_nodes; ++i) {
        sa.clear();
        sb.clear();
        sa.insert(a.row(i).begin(), a.row(i).end());
        sb.insert(b.row(i).begin(), b.row(i).end());
        size_t inter = 0;
        for (uint32_t v : sb)
            if (sa.count(v)) ++inter;
        const size_t uni = sa.size() + sb.size() - inter;
        acc += static_cast<double>(inter) / static_cast<double>(uni);
    }
    return acc / static_cast<double>(a.num_nodes);
}

DivergenceReport compare_modes(const ImageTensor& img, const ModelWeights& w, const ModelSpec& spec,
                               const EngineOptions& opts) {
    const auto layout = stage_layout(spec, opts.heads_base);
    check_weights(w, spec, layout);

    DivergenceReport rep;

    // Walk the GraphLeap trajectory and, at every block, also build the
    // same-layer graph it would have used under standard ViG.
    LayerState state;
    state.x = stem_and_position(img, w, spec);
    for (size_t s = 0; s < layout.size(); ++s) {
        const StageLayout& st = layout[s];
        for (int32_t b = 0; b < st.num_blocks; ++b) {
            const int32_t l = st.first_block + b;
            const BlockWeights& bw = w.blocks[l];
            const int32_t dil = spec.dilation_schedule[l];

            FeatureMatrix u = projected_input(state.x, bw, opts.block);
            GraphTopology fresh = build_graph(u, spec.k, dil);
            GraphTopology used = (b == 0) ? fresh : build_graph(state.u_cache, spec.k, dil);

            rep.jaccard.push_back(topology_jaccard(used, fresh));
            rep.used_hash.push_back(used.hash());
            rep.fresh_hash.push_back(fresh.hash());

            FeatureMatrix y = grapher_block_with_projected(state.x, u, used, bw, opts.block);
            state.x = ffn_block(y, bw, opts.block);
            state.u_cache = std::move(u);
        }
        if (s + 1 < layout.size()) state.x = stage_transition(std::move(state.x), st, w.transitions[s]);
    }
    const std::vector<float> leap_logits = classify_head(state.x, w.head);

    const RunResult std_run = run_standard(img, w, spec, opts);
    double l2 = 0.0;
    for (size_t i = 0; i < leap_logits.size(); ++i) {
        const double d = static_cast<double>(leap_logits[i]) - static_cast<double>(std_run.logits[i]);
        l2 += d * d;
    }
    rep.logit_l2 = std::sqrt(l2);
    return rep;
}

}  // namespace graphleap
