#include "graphleap/perf.hpp"

#include <algorithm>
#include <string>

namespace graphleap {

namespace {

uint64_t ceil_div(uint64_t a, uint64_t b) { return (a + b - 1) / b; }

void require_positive(int64_t v, const char* name) {
    if (v <= 0) throw DimensionMismatch(std::string(name) + " must be positive");
}

}  // namespace

uint64_t gce_cycles(int64_t n, int64_t d, int64_t k, const HardwareParams& hw) {
    require_positive(n, "N");
    require_positive(d, "D");
    require_positive(k, "k");
    const uint64_t rows = ceil_div(n, hw.p_n);
    return rows * rows * ceil_div(d, hw.p_d) + ceil_div(static_cast<uint64_t>(n) * k, hw.p_n);
}

uint64_t grapher_cycles(int64_t n, int64_t d, int64_t k, const HardwareParams& hw) {
    require_positive(n, "N");
    require_positive(d, "D");
    require_positive(k, "k");
    const uint64_t rows = ceil_div(n, hw.p_n);
    const uint64_t tiles = ceil_div(d, hw.p_d);
    return 3 * (rows * tiles * static_cast<uint64_t>(d)) + rows * ceil_div(k, hw.heads) * tiles +
           static_cast<uint64_t>(hw.l_fused);
}

uint64_t ffn_cycles(int64_t n, int64_t d, const HardwareParams& hw) {
    require_positive(n, "N");
    require_positive(d, "D");
    const uint64_t macs = 8ULL * n * d * d;
    return ceil_div(macs, static_cast<uint64_t>(hw.p_n) * hw.p_d) + static_cast<uint64_t>(hw.l_fused);
}

LayerCost layer_cost(int64_t n, int64_t d, int64_t k, const HardwareParams& hw) {
    LayerCost c;
    c.t_gce = gce_cycles(n, d, k, hw);
    c.t_grapher = grapher_cycles(n, d, k, hw);
    c.t_ffn = ffn_cycles(n, d, hw);
    c.t_sync = static_cast<uint64_t>(hw.t_sync);
    return c;
}

std::vector<LayerCost> model_layer_costs(const ModelSpec& spec, const HardwareParams& hw) {
    std::vector<LayerCost> costs;
    for (const StageSpec& st : spec.stages)
        for (int32_t b = 0; b < st.num_blocks; ++b) costs.push_back(layer_cost(st.nodes, st.dim, spec.k, hw));
    return costs;
}

namespace {

std::vector<int32_t> stage_first_blocks(const ModelSpec& spec) {
    std::vector<int32_t> firsts;
    int32_t acc = 0;
    for (const StageSpec& st : spec.stages) {
        firsts.push_back(acc);
        acc += st.num_blocks;
    }
    return firsts;
}

PipelineTimeline simulate_sequential(const std::vector<LayerCost>& costs, const HardwareParams& hw) {
    PipelineTimeline tl;
    tl.schedule = Schedule::Sequential;
    uint64_t t = 0;
    for (size_t l = 0; l < costs.size(); ++l) {
        TimelineEntry e;
        e.layer = static_cast<int32_t>(l);
        e.gce_start = t;
        e.gce_end = t + costs[l].t_gce;
        e.fue_start = e.gce_end;
        e.fue_end = e.fue_start + costs[l].t_fue();
        t = e.fue_end + costs[l].t_sync;
        tl.layers.push_back(e);
    }
    tl.total_cycles = t;
    tl.total_seconds = static_cast<double>(t) / hw.f_clk + hw.t_pcie;
    return tl;
}

// Event-driven schedule of the two engines. Dependencies:
//  - the FUE processes layers in order and needs layer l's graph first;
//  - the GCE builds layer l's graph from the features cached one block
//    earlier, so it waits on fue_end(l-2); the first two graphs of a stage
//    both derive from the stage input (fue_end of the previous stage);
//  - the graph buffer holds at most n_buf graphs (a slot is occupied from
//    construction start and freed when the FUE starts consuming).
// T_sync is a per-layer commit barrier that freezes both engines; it is
// applied by rigidly shifting every event after the k-th FUE completion by
// k*T_sync, which leaves the relative schedule unchanged.
PipelineTimeline simulate_overlapped(const std::vector<LayerCost>& costs,
                                     const std::vector<int32_t>& stage_firsts, const HardwareParams& hw) {
    const size_t total = costs.size();
    PipelineTimeline tl;
    tl.schedule = Schedule::Overlapped;

    std::vector<uint64_t> gce_start(total), gce_end(total), fue_start(total), fue_end(total);
    const int64_t n_buf = std::max(1, hw.n_buf);

    size_t stage = 0;
    uint64_t prev_stage_end = 0;
    for (size_t l = 0; l < total; ++l) {
        if (stage + 1 < stage_firsts.size() && static_cast<int32_t>(l) == stage_firsts[stage + 1]) {
            ++stage;
            prev_stage_end = fue_end[l - 1];
        }
        const int32_t first = stage_firsts[stage];
        const bool from_stage_input = static_cast<int32_t>(l) <= first + 1;

        const uint64_t data_ready = from_stage_input ? prev_stage_end : fue_end[l - 2];
        const uint64_t engine_free = (l == 0) ? 0 : gce_end[l - 1];
        const uint64_t slot_free =
            (static_cast<int64_t>(l) - n_buf >= 0) ? fue_start[l - n_buf] : 0;
        gce_start[l] = std::max({data_ready, engine_free, slot_free});
        gce_end[l] = gce_start[l] + costs[l].t_gce;
        fue_start[l] = std::max(gce_end[l], l == 0 ? 0 : fue_end[l - 1]);
        fue_end[l] = fue_start[l] + costs[l].t_fue();
    }

    // Commit barriers: every core event is shifted by t_sync for each FUE
    // completion at or before it (strictly before, for end events).
    const uint64_t sync = static_cast<uint64_t>(hw.t_sync);
    auto shift = [&](uint64_t t, bool is_start) {
        if (sync == 0) return t;
        uint64_t k = 0;
        for (size_t j = 0; j < total; ++j) {
            if (is_start ? fue_end[j] <= t : fue_end[j] < t) ++k;
        }
        return t + k * sync;
    };

    for (size_t l = 0; l < total; ++l) {
        TimelineEntry e;
        e.layer = static_cast<int32_t>(l);
        e.gce_start = shift(gce_start[l], true);
        e.gce_end = shift(gce_end[l], false);
        e.fue_start = shift(fue_start[l], true);
        e.fue_end = shift(fue_end[l], false);
        e.gce_stall = e.gce_start - (l == 0 ? 0 : shift(gce_end[l - 1], false));
        e.fue_stall = e.fue_start - (l == 0 ? 0 : shift(fue_end[l - 1], false));
        tl.layers.push_back(e);
    }
    tl.total_cycles = fue_end[total - 1] + sync * static_cast<uint64_t>(total);
    tl.total_seconds = static_cast<double>(tl.total_cycles) / hw.f_clk + hw.t_pcie;
    return tl;
}

}  // namespace

PipelineTimeline total_latency(const ModelSpec& spec, const HardwareParams& hw, Schedule schedule) {
    const auto costs = model_layer_costs(spec, hw);
    if (schedule == Schedule::Sequential) return simulate_sequential(costs, hw);
    return simulate_overlapped(costs, stage_first_blocks(spec), hw);
}

uint64_t closed_form_overlapped_cycles(const ModelSpec& spec, const HardwareParams& hw) {
    const auto costs = model_layer_costs(spec, hw);
    const auto firsts = stage_first_blocks(spec);
    uint64_t total = 0;
    size_t l = 0;
    for (size_t s = 0; s < spec.stages.size(); ++s) {
        const size_t count = static_cast<size_t>(spec.stages[s].num_blocks);
        total += costs[l].t_gce;
        for (size_t b = 0; b + 1 < count; ++b)
            total += std::max(costs[l + b + 1].t_gce, costs[l + b].t_fue());
        total += costs[l + count - 1].t_fue();
        l += count;
    }
    total += static_cast<uint64_t>(hw.t_sync) * static_cast<uint64_t>(costs.size());
    return total;
}

ResourceEstimate resource_estimate(const ModelSpec& spec, const HardwareParams& hw) {
    ResourceEstimate r;
    const double omega = static_cast<double>(hw.p_n) * hw.p_d;
    r.dsp = hw.c1 * omega;
    r.lut = hw.c2 * omega;
    for (const StageSpec& st : spec.stages) {
        const uint64_t bytes = 4ULL * (2ULL * st.nodes * st.dim) + 4ULL * st.nodes * spec.k;
        r.bytes_onchip = std::max(r.bytes_onchip, bytes);
    }
    return r;
}

MeasuredVsModel measured_vs_model(const WallTimeline& measured, const PipelineTimeline& model) {
    if (measured.layers.size() != model.layers.size())
        throw SpecMismatch("measured run has " + std::to_string(measured.layers.size()) +
                           " layers, model has " + std::to_string(model.layers.size()));
    MeasuredVsModel out;
    for (size_t l = 0; l < measured.layers.size(); ++l) {
        const LayerTiming& m = measured.layers[l];
        const TimelineEntry& p = model.layers[l];
        StallRow row;
        row.layer = m.layer;
        row.measured_gce_ns = m.gce_end_ns - m.gce_start_ns;
        row.measured_fue_ns = m.fue_end_ns - m.fue_start_ns;
        row.measured_gce_stall_ns = m.gce_stall_ns;
        row.measured_fue_stall_ns = m.fue_stall_ns;
        row.model_gce_cycles = p.gce_end - p.gce_start;
        row.model_fue_cycles = p.fue_end - p.fue_start;
        row.model_fue_stall_cycles = p.fue_stall;
        const double busy = static_cast<double>(row.measured_fue_ns);
        const double stall = static_cast<double>(row.measured_fue_stall_ns);
        row.measured_stall_ratio = (busy + stall) > 0 ? stall / (busy + stall) : 0.0;
        // The graph must exist before the update consumes it, and the update
        // engine is serial; violations indicate a broken trace.
        if (m.fue_start_ns < m.gce_end_ns) ++out.ordering_violations;
        if (l > 0 && m.fue_start_ns < measured.layers[l - 1].fue_end_ns) ++out.ordering_violations;
        out.rows.push_back(row);
    }
    return out;
}

}  // namespace graphleap
