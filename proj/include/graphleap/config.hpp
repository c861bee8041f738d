#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graphleap/errors.hpp"

namespace graphleap {

enum class Structure { Isotropic, Pyramidal };

struct StageSpec {
    int32_t num_blocks = 0;
    int32_t dim = 0;    // channels D
    int32_t nodes = 0;  // tokens N at this stage (derived from image/patch)

    bool operator==(const StageSpec&) const = default;
};

struct ModelSpec {
    Structure structure = Structure::Isotropic;
    std::vector<StageSpec> stages;
    int32_t patch_size = 16;
    int32_t image_size = 224;
    int32_t num_classes = 1000;
    int32_t k = 9;
    std::vector<int32_t> dilation_schedule;  // one entry per block

    int32_t total_blocks() const {
        int32_t n = 0;
        for (const auto& s : stages) n += s.num_blocks;
        return n;
    }
    // Stage owning global block index l.
    int32_t stage_of_block(int32_t l) const;

    bool operator==(const ModelSpec&) const = default;
};

struct HardwareParams {
    int32_t p_n = 32;        // node-level parallelism
    int32_t p_d = 32;        // channel-level parallelism
    int32_t heads = 16;      // H
    int32_t l_fused = 14;    // fused norm/activation pipeline depth, cycles
    double f_clk = 3.0e8;    // Hz
    int32_t n_buf = 2;       // look-ahead buffer stages
    double c1 = 1.0;         // DSP per MAC
    double c2 = 0.0;         // LUT per MAC (no reference value; off by default)
    int32_t t_sync = 0;      // cycles
    double t_pcie = 0.0;     // seconds, constant transfer model

    bool operator==(const HardwareParams&) const = default;
};

enum class Mode { StandardViG, GraphLeap };
enum class Schedule { Sequential, Overlapped };
enum class WeightSource { RandomSeeded, File };

struct RunConfig {
    Mode mode = Mode::GraphLeap;
    Schedule schedule = Schedule::Sequential;
    uint64_t seed = 0;
    WeightSource weight_source = WeightSource::RandomSeeded;
    std::string weight_path;  // set when weight_source == File
    double numeric_tolerance = 1e-5;

    bool operator==(const RunConfig&) const = default;
};

struct Config {
    ModelSpec model;
    HardwareParams hardware;
    RunConfig run;

    bool operator==(const Config&) const = default;
};

// Known preset names: ViG-Ti, ViG-S, ViG-B, ViG-Py-Ti, ViG-Py-S, ViG-Py-M, ViG-Py-B.
ModelSpec preset(const std::string& name);
const std::vector<std::string>& preset_names();

// Parses and fully validates a JSON configuration document. Top-level keys:
// "model" (preset name or explicit spec; required), "hardware" (optional),
// "run" (required). Unknown keys anywhere are a ValidationError.
Config load_config(const std::string& text);

// Inverse of load_config for round-tripping (always emits the explicit form).
std::string to_document(const Config& cfg);

// Default dilation schedule: d(l) = clamp(l/4 + 1, 1, N_stage/k).
std::vector<int32_t> default_dilation_schedule(const ModelSpec& spec);

// Re-derives per-stage node counts from image/patch size and re-checks every
// invariant; throws ValidationError. Called by load_config and by anything
// that builds a ModelSpec by hand.
void validate_model(ModelSpec& spec);

void validate_run(const RunConfig& run);

// Multi-head width rule: hw value when it divides D, otherwise the largest
// divisor of D not exceeding it.
int32_t resolve_heads(int32_t dim, int32_t heads_base);

// Flattened per-stage geometry used by the engines.
struct StageLayout {
    int32_t first_block = 0;
    int32_t num_blocks = 0;
    int32_t nodes = 0;
    int32_t dim = 0;
    int32_t grid_h = 0;  // nodes laid out as grid_h x grid_w
    int32_t grid_w = 0;
    int32_t heads = 0;
};
std::vector<StageLayout> stage_layout(const ModelSpec& spec, int32_t heads_base);

}  // namespace graphleap
