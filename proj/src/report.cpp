#include "graphleap/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace graphleap {

namespace {

std::string fmt_f(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string fmt_hex(uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

std::vector<std::pair<int32_t, float>> RunReport::digest(const std::vector<float>& logits) {
    std::vector<int32_t> idx(logits.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int32_t>(i);
    std::sort(idx.begin(), idx.end(), [&](int32_t a, int32_t b) {
        if (logits[a] != logits[b]) return logits[a] > logits[b];
        return a < b;
    });
    std::vector<std::pair<int32_t, float>> top;
    for (size_t i = 0; i < idx.size() && i < 5; ++i) top.emplace_back(idx[i], logits[idx[i]]);
    return top;
}

std::string format_run_report(const RunReport& rep) {
    std::ostringstream os;
    os << "# graphleap run report\n";
    // Compact one-line config echo keeps the format line-oriented.
    std::string cfg = to_document(rep.config);
    std::erase(cfg, '\n');
    std::erase(cfg, ' ');
    os << "config\t" << cfg << "\n";
    os << "mode\t" << (rep.config.run.mode == Mode::StandardViG ? "standard" : "graphleap") << "\n";
    os << "schedule\t" << (rep.config.run.schedule == Schedule::Sequential ? "sequential" : "overlapped")
       << "\n";
    os << "seed\t" << rep.config.run.seed << "\n";
    os << "logits.top";
    for (const auto& [i, v] : rep.top_logits) os << "\t" << i << ":" << fmt_f(v);
    os << "\n";
    os << "graph.count\t" << rep.graph_hashes.size() << "\n";
    for (size_t l = 0; l < rep.graph_hashes.size(); ++l)
        os << "graph.hash\t" << l << "\t" << fmt_hex(rep.graph_hashes[l]) << "\n";
    os << "predicted.sequential_ms\t" << fmt_f(rep.predicted_sequential_ms) << "\n";
    os << "predicted.overlapped_ms\t" << fmt_f(rep.predicted_overlapped_ms) << "\n";
    if (rep.divergence) {
        const DivergenceReport& d = *rep.divergence;
        for (size_t l = 0; l < d.jaccard.size(); ++l)
            os << "divergence.jaccard\t" << l << "\t" << fmt_f(d.jaccard[l]) << "\n";
        os << "divergence.logit_l2\t" << fmt_f(d.logit_l2) << "\n";
    } else {
        os << "divergence\tabsent\n";
    }
    os << "# timing (volatile)\n";
    os << "wall_ms\t" << fmt_f(rep.wall_ms) << "\n";
    if (rep.timeline) {
        os << "queue.high_water\t" << rep.timeline->queue_high_water << "\n";
        int64_t gce_stall = 0, fue_stall = 0;
        for (const auto& t : rep.timeline->layers) {
            gce_stall += t.gce_stall_ns;
            fue_stall += t.fue_stall_ns;
        }
        os << "stall.gce_ns\t" << gce_stall << "\n";
        os << "stall.fue_ns\t" << fue_stall << "\n";
    }
    return os.str();
}

std::string deterministic_part(const std::string& formatted) {
    const auto pos = formatted.find("# timing (volatile)");
    return pos == std::string::npos ? formatted : formatted.substr(0, pos);
}

std::string format_divergence_table(const DivergenceReport& rep) {
    std::ostringstream os;
    os << "block\tjaccard\tused_hash\tfresh_hash\n";
    for (size_t l = 0; l < rep.jaccard.size(); ++l)
        os << l << "\t" << fmt_f(rep.jaccard[l]) << "\t" << fmt_hex(rep.used_hash[l]) << "\t"
           << fmt_hex(rep.fresh_hash[l]) << "\n";
    os << "logit_l2\t" << fmt_f(rep.logit_l2) << "\n";
    return os.str();
}

std::string format_perf_table(const std::vector<PerfRow>& rows) {
    std::ostringstream os;
    os << "model\tresolution\tsequential_ms\toverlapped_ms\tspeedup\n";
    for (const auto& r : rows)
        os << r.model << "\t" << r.resolution << "\t" << fmt_f(r.sequential_ms) << "\t"
           << fmt_f(r.overlapped_ms) << "\t" << fmt_f(r.speedup) << "\n";
    return os.str();
}

std::string format_measured_vs_model(const MeasuredVsModel& cmp) {
    std::ostringstream os;
    os << "layer\tmeas_gce_ns\tmeas_fue_ns\tmeas_gce_stall_ns\tmeas_fue_stall_ns\tmodel_gce_cyc\t"
          "model_fue_cyc\tmodel_fue_stall_cyc\tstall_ratio\n";
    for (const auto& r : cmp.rows)
        os << r.layer << "\t" << r.measured_gce_ns << "\t" << r.measured_fue_ns << "\t"
           << r.measured_gce_stall_ns << "\t" << r.measured_fue_stall_ns << "\t" << r.model_gce_cycles
           << "\t" << r.model_fue_cycles << "\t" << r.model_fue_stall_cycles << "\t"
           << fmt_f(r.measured_stall_ratio) << "\n";
    os << "ordering_violations\t" << cmp.ordering_violations << "\n";
    return os.str();
}

}  // namespace graphleap
