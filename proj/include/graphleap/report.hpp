#pragma once

#include <optional>
#include <string>
#include <vector>

#include "graphleap/config.hpp"
#include "graphleap/perf.hpp"
#include "graphleap/scheduler.hpp"

namespace graphleap {

// Everything a run emits. All fields except wall-clock time are a pure
// function of (config, seed, build); the formatter keeps the volatile timing
// fields in a separate trailing section so the deterministic part can be
// compared byte-for-byte.
struct RunReport {
    Config config;
    std::vector<std::pair<int32_t, float>> top_logits;  // top-5 (index, value)
    std::vector<uint64_t> graph_hashes;
    double predicted_sequential_ms = 0.0;
    double predicted_overlapped_ms = 0.0;
    std::optional<DivergenceReport> divergence;
    double wall_ms = 0.0;            // volatile
    std::optional<WallTimeline> timeline;  // volatile

    static std::vector<std::pair<int32_t, float>> digest(const std::vector<float>& logits);
};

// Tab-delimited key/value lines; the volatile section starts at the line
// "# timing (volatile)".
std::string format_run_report(const RunReport& rep);

// Deterministic prefix of a formatted report (everything above the volatile
// marker).
std::string deterministic_part(const std::string& formatted);

std::string format_divergence_table(const DivergenceReport& rep);

struct PerfRow {
    std::string model;
    int32_t resolution = 0;
    double sequential_ms = 0.0;
    double overlapped_ms = 0.0;
    double speedup = 0.0;
};

std::string format_perf_table(const std::vector<PerfRow>& rows);

std::string format_measured_vs_model(const MeasuredVsModel& cmp);

}  // namespace graphleap
