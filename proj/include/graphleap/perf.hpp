#pragma once

#include <cstdint>
#include <vector>

#include "graphleap/config.hpp"
#include "graphleap/scheduler.hpp"

namespace graphleap {

// Per-layer cycle costs of the two engines.
struct LayerCost {
    uint64_t t_gce = 0;
    uint64_t t_grapher = 0;
    uint64_t t_ffn = 0;
    uint64_t t_sync = 0;

    uint64_t t_fue() const { return t_grapher + t_ffn; }
};

struct TimelineEntry {
    int32_t layer = -1;
    uint64_t gce_start = 0, gce_end = 0;
    uint64_t fue_start = 0, fue_end = 0;
    uint64_t gce_stall = 0;  // engine idle before starting this layer
    uint64_t fue_stall = 0;
};

struct PipelineTimeline {
    Schedule schedule = Schedule::Sequential;
    std::vector<TimelineEntry> layers;
    uint64_t total_cycles = 0;
    double total_seconds = 0.0;  // total_cycles / f_clk + T_pcie
};

// Distance evaluation + sorted selection:
//   ceil(N/p_N)^2 * ceil(D/p_D) + ceil(N*k/p_N)
uint64_t gce_cycles(int64_t n, int64_t d, int64_t k, const HardwareParams& hw);

// Projections + fused per-head convolution:
//   3*(ceil(N/p_N) * ceil(D/p_D) * D) + ceil(N/p_N)*ceil(k/H)*ceil(D/p_D) + L_fused
uint64_t grapher_cycles(int64_t n, int64_t d, int64_t k, const HardwareParams& hw);

// Two-layer MLP:  ceil(8*N*D^2 / (p_N*p_D)) + L_fused
uint64_t ffn_cycles(int64_t n, int64_t d, const HardwareParams& hw);

LayerCost layer_cost(int64_t n, int64_t d, int64_t k, const HardwareParams& hw);

// One LayerCost per block, in block order.
std::vector<LayerCost> model_layer_costs(const ModelSpec& spec, const HardwareParams& hw);

// Sequential: sum of per-layer costs. Overlapped: discrete-event simulation
// of the two engines with a graph buffer of depth N_buf and stage-boundary
// resynchronization.
PipelineTimeline total_latency(const ModelSpec& spec, const HardwareParams& hw, Schedule schedule);

// Closed-form overlapped total, per stage:
//   t_gce(first) + sum max(t_gce(l+1), t_fue(l)) + t_fue(last),
// plus one t_sync per layer. The event simulation must match this exactly
// for any N_buf >= 1.
uint64_t closed_form_overlapped_cycles(const ModelSpec& spec, const HardwareParams& hw);

struct ResourceEstimate {
    double dsp = 0.0;          // c1 * p_N * p_D
    double lut = 0.0;          // c2 * p_N * p_D
    uint64_t bytes_onchip = 0; // 4*(2*N*D) + 4*(N*k) at the largest stage
};

ResourceEstimate resource_estimate(const ModelSpec& spec, const HardwareParams& hw);

// Alignment of a functional overlapped run against the model's prediction.
struct StallRow {
    int32_t layer = -1;
    int64_t measured_gce_ns = 0;
    int64_t measured_fue_ns = 0;
    int64_t measured_gce_stall_ns = 0;
    int64_t measured_fue_stall_ns = 0;
    uint64_t model_gce_cycles = 0;
    uint64_t model_fue_cycles = 0;
    uint64_t model_fue_stall_cycles = 0;
    double measured_stall_ratio = 0.0;  // stall / (stall + busy) of the FUE
};

struct MeasuredVsModel {
    std::vector<StallRow> rows;
    int32_t ordering_violations = 0;
};

MeasuredVsModel measured_vs_model(const WallTimeline& measured, const PipelineTimeline& model);

}  // namespace graphleap
