// Acceptance suite: runs every release criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exits nonzero if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "graphleap/perf.hpp"
#include "graphleap/scheduler.hpp"
#include "oracles.hpp"

using namespace graphleap;

namespace {

struct Criterion {
    std::string name;
    std::function<bool(std::string&)> run;
};

bool bitwise_equal(const std::vector<float>& a, const std::vector<float>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

ModelSpec random_isotropic(SplitMix64& rng) {
    ModelSpec spec;
    spec.structure = Structure::Isotropic;
    const int32_t patch = rng.next_below(2) ? 8 : 16;
    const int32_t mult = 2 + static_cast<int32_t>(rng.next_below(3));  // side 2..4 patches
    spec.image_size = patch * mult;
    spec.patch_size = patch;
    spec.num_classes = 3 + static_cast<int32_t>(rng.next_below(6));
    const int32_t n = mult * mult;  // 4..16 tokens
    spec.k = 2 + static_cast<int32_t>(rng.next_below(std::min(3, n - 2)));
    const int32_t dims[] = {8, 16, 24, 32};
    spec.stages = {{2 + static_cast<int32_t>(rng.next_below(4)), dims[rng.next_below(4)], 0}};
    validate_model(spec);
    return spec;
}

// Preset block/dim structure at a reduced image size (k shrunk so the last
// 4-token stage stays valid).
ModelSpec reduced_pyramid(const std::string& name) {
    ModelSpec spec = preset(name);
    spec.image_size = 64;
    spec.k = 3;
    spec.num_classes = 10;
    spec.dilation_schedule.clear();
    validate_model(spec);
    return spec;
}

// --- criteria -------------------------------------------------------------

bool c1_knn_oracle(std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    SplitMix64 rng(20260810);
    int exact = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int32_t n = 2 + static_cast<int32_t>(rng.next_below(127));
        const int32_t d = 1 + static_cast<int32_t>(rng.next_below(64));
        int32_t k = 1 + static_cast<int32_t>(rng.next_below(16));
        int32_t dil = 1 + static_cast<int32_t>(rng.next_below(4));
        while (static_cast<int64_t>(k) * dil > n) (dil > 1 ? --dil : --k);
        const FeatureMatrix x = oracle::random_matrix(n, d, rng.next_u64());
        if (build_graph(x, k, dil) == oracle::knn_graph(x, k, dil)) ++exact;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%d/200 instances exact, %.2fs", exact, secs);
    detail = buf;
    return exact == 200 && secs < 10.0;
}

bool c2_tiling_transparency(std::string& detail) {
    SplitMix64 rng(2);
    int ok = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const int32_t n = 2 + static_cast<int32_t>(rng.next_below(40));
        const int32_t d = 1 + static_cast<int32_t>(rng.next_below(64));
        const FeatureMatrix x = oracle::random_matrix(n, d, rng.next_u64(), 2.0f);
        const int32_t widths[] = {1, 7, 32, d};
        std::vector<FeatureMatrix> results;
        for (int32_t pd : widths)
            results.push_back(pairwise_distances_tiled(x, DistanceTilePlan::for_matrix(n, d, 32, pd)));
        bool all = true;
        for (size_t a = 1; a < results.size(); ++a)
            if (!oracle::rel_close_all(results[0], results[a], 1e-5)) all = false;
        if (all) ++ok;
    }
    detail = std::to_string(ok) + "/50 matrices agree across p_D {1,7,32,D} at 1e-5";
    return ok == 50;
}

bool c3_fused_identity(std::string& detail) {
    SplitMix64 rng(3);
    int ok = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int32_t heads_pool[] = {1, 2, 3, 4, 8, 16};
        const int32_t heads = heads_pool[rng.next_below(6)];
        const int32_t dh = 1 + static_cast<int32_t>(rng.next_below(8));
        const int32_t d = heads * dh;
        const int32_t n = 1 + static_cast<int32_t>(rng.next_below(12));
        const FeatureMatrix x = oracle::random_matrix(n, d, rng.next_u64());
        const FeatureMatrix m = oracle::random_matrix(n, d, rng.next_u64());
        PerHeadWeight wx(heads, dh), wm(heads, dh);
        for (float& v : wx.data) v = rng.next_signed_unit();
        for (float& v : wm.data) v = rng.next_signed_unit();
        if (oracle::rel_close_all(fused_update(x, m, wx, wm),
                                  oracle::concat_update(x, m, wx.to_dense(), wm.to_dense()), 1e-5))
            ++ok;
    }
    detail = std::to_string(ok) + "/100 shapes match the concat reference at 1e-5";
    return ok == 100;
}

bool c4_overlap_determinism(std::string& detail) {
    SplitMix64 rng(4);
    std::vector<std::pair<ModelSpec, uint64_t>> pairs;
    for (int i = 0; i < 44; ++i) pairs.emplace_back(random_isotropic(rng), rng.next_u64());
    for (const char* name : {"ViG-Py-Ti", "ViG-Py-S", "ViG-Py-M"}) {
        pairs.emplace_back(reduced_pyramid(name), rng.next_u64());
        pairs.emplace_back(reduced_pyramid(name), rng.next_u64());
    }

    int ok = 0;
    for (const auto& [spec, seed] : pairs) {
        const ModelWeights w = init_model_weights(spec, seed);
        const ImageTensor img = random_image(spec.image_size, seed ^ 0x5555555555555555ULL);
        const auto seq = run_graphleap_sequential(img, w, spec);
        bool all = true;
        for (int32_t n_buf : {1, 2}) {
            EngineOptions opts;
            opts.n_buf = n_buf;
            const auto ovl = run_graphleap_overlapped(img, w, spec, opts);
            if (!bitwise_equal(seq.logits, ovl.logits)) all = false;
            for (size_t l = 0; l < seq.blocks.size(); ++l)
                if (seq.blocks[l].graph_hash != ovl.blocks[l].graph_hash) all = false;
        }
        if (all) ++ok;
    }
    detail = std::to_string(ok) + "/" + std::to_string(pairs.size()) +
             " (spec, seed) pairs bitwise-equal for N_buf in {1,2}";
    return ok == static_cast<int>(pairs.size());
}

bool c5_frozen_equivalence(std::string& detail) {
    SplitMix64 rng(5);
    int ok = 0, total = 0;
    std::vector<ModelSpec> specs;
    for (int i = 0; i < 6; ++i) specs.push_back(random_isotropic(rng));
    specs.push_back(reduced_pyramid("ViG-Py-Ti"));
    for (const ModelSpec& spec : specs) {
        ++total;
        ModelWeights w = init_model_weights(spec, rng.next_u64());
        const auto layout = stage_layout(spec, 16);
        int32_t block = 0;
        for (const auto& st : layout)
            for (int32_t b = 0; b < st.num_blocks; ++b, ++block) {
                BlockWeights& bw = w.blocks[block];
                bw.w_in = identity_matrix(st.dim);
                bw.w_x = PerHeadWeight(st.heads, st.dim / st.heads);
                bw.w_m = PerHeadWeight(st.heads, st.dim / st.heads);
                bw.w_out = FeatureMatrix(st.dim, st.dim, 0.0f);
                bw.w1 = FeatureMatrix(st.dim, 4 * st.dim, 0.0f);
                bw.w2 = FeatureMatrix(4 * st.dim, st.dim, 0.0f);
            }
        const ImageTensor img = random_image(spec.image_size, rng.next_u64());
        const auto s = run_standard(img, w, spec);
        const auto g = run_graphleap_sequential(img, w, spec);
        const auto o = run_graphleap_overlapped(img, w, spec);
        if (bitwise_equal(s.logits, g.logits) && bitwise_equal(s.logits, o.logits)) ++ok;
    }
    detail = std::to_string(ok) + "/" + std::to_string(total) + " frozen-feature models bitwise-equal";
    return ok == total;
}

bool c6_residual_identities(std::string& detail) {
    SplitMix64 rng(6);
    int ok = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const int32_t heads = 1 + static_cast<int32_t>(rng.next_below(4));
        const int32_t d = heads * (2 + static_cast<int32_t>(rng.next_below(6)));
        const int32_t n = 2 + static_cast<int32_t>(rng.next_below(14));
        const FeatureMatrix x = oracle::random_matrix(n, d, rng.next_u64(), 2.0f);
        const auto g = build_graph(x, std::min(3, n - 1), 1);

        BlockWeights w;
        w.w_in = oracle::random_matrix(d, d, rng.next_u64());
        w.w_x = PerHeadWeight(heads, d / heads);
        w.w_m = PerHeadWeight(heads, d / heads);
        SplitMix64 wr(rng.next_u64());
        for (float& v : w.w_x.data) v = wr.next_signed_unit();
        for (float& v : w.w_m.data) v = wr.next_signed_unit();
        w.w_out = FeatureMatrix(d, d, 0.0f);  // zero projection
        w.w1 = FeatureMatrix(d, 4 * d, 0.0f);
        w.w2 = FeatureMatrix(4 * d, d, 0.0f);
        w.norm1_gain.assign(d, 1.0f);
        w.norm1_bias.assign(d, 0.0f);
        w.norm2_gain.assign(d, 1.0f);
        w.norm2_bias.assign(d, 0.0f);

        const bool use_norm = (trial % 2) == 0;
        const BlockOptions opts{use_norm, Activation::GeluPwl};
        if (grapher_block(x, g, w, opts) == x && ffn_block(x, w, opts) == x) ++ok;
    }
    detail = std::to_string(ok) + "/20 zero-weight blocks are exact identities";
    return ok == 20;
}

bool c7_permutation_invariance(std::string& detail) {
    SplitMix64 rng(7);
    int ok = 0, total = 0;
    for (int inst = 0; inst < 5; ++inst) {
        const int32_t n = 8 + static_cast<int32_t>(rng.next_below(24));
        const int32_t d = 4 + static_cast<int32_t>(rng.next_below(12));
        const FeatureMatrix x = oracle::random_matrix(n, d, rng.next_u64());
        const GraphTopology g = build_graph(x, std::min(5, n - 1), 1);
        const FeatureMatrix base = mrconv_aggregate(x, g);
        for (int p = 0; p < 100; ++p) {
            ++total;
            GraphTopology shuffled = g;
            for (int32_t i = 0; i < n; ++i) {
                auto row = shuffled.row(i);
                for (size_t a = row.size(); a > 1; --a) std::swap(row[a - 1], row[rng.next_below(a)]);
            }
            if (mrconv_aggregate(x, shuffled) == base) ++ok;
        }
    }
    detail = std::to_string(ok) + "/" + std::to_string(total) + " permutations leave the messages unchanged";
    return ok == total;
}

bool c8_cost_model(std::string& detail) {
    const HardwareParams hw;
    const bool exact = gce_cycles(196, 192, 9, hw) == 350 && grapher_cycles(196, 192, 9, hw) == 24248 &&
                       ffn_cycles(196, 192, hw) == 56462;

    bool sim_ok = true;
    for (const auto& name : preset_names()) {
        const ModelSpec spec = preset(name);
        if (total_latency(spec, hw, Schedule::Overlapped).total_cycles !=
            closed_form_overlapped_cycles(spec, hw))
            sim_ok = false;
    }
    SplitMix64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        ModelSpec spec;
        spec.structure = Structure::Pyramidal;
        const int32_t stages = 1 + static_cast<int32_t>(rng.next_below(4));
        spec.structure = stages == 1 ? Structure::Isotropic : Structure::Pyramidal;
        for (int32_t s = 0; s < stages; ++s)
            spec.stages.push_back({1 + static_cast<int32_t>(rng.next_below(6)),
                                   1 + static_cast<int32_t>(rng.next_below(700)),
                                   2 + static_cast<int32_t>(rng.next_below(4000))});
        spec.k = 1 + static_cast<int32_t>(rng.next_below(16));
        spec.dilation_schedule.assign(spec.total_blocks(), 1);
        HardwareParams rnd;
        rnd.p_n = 1 << rng.next_below(6);
        rnd.p_d = 1 << rng.next_below(6);
        rnd.t_sync = static_cast<int32_t>(rng.next_below(2)) * 11;
        rnd.n_buf = 1 + static_cast<int32_t>(rng.next_below(3));
        if (total_latency(spec, rnd, Schedule::Overlapped).total_cycles !=
            closed_form_overlapped_cycles(spec, rnd))
            sim_ok = false;
    }
    detail = std::string("ViG-Ti cycles ") + std::to_string(gce_cycles(196, 192, 9, hw)) + "/" +
             std::to_string(grapher_cycles(196, 192, 9, hw)) + "/" +
             std::to_string(ffn_cycles(196, 192, hw)) +
             (sim_ok ? ", event sim == closed form on all configs" : ", event sim DIVERGES");
    return exact && sim_ok;
}

bool c9_latency_prediction(std::string& detail) {
    const HardwareParams hw;
    const auto seq = total_latency(preset("ViG-Ti"), hw, Schedule::Sequential);
    const double ms = seq.total_seconds * 1e3;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "predicted %.4f ms vs reference 2.88 ms (%+.1f%%)", ms,
                  (ms / 2.88 - 1.0) * 100.0);
    detail = buf;
    return ms >= 2.88 * 0.75 && ms <= 2.88 * 1.25;
}

bool c10_gelu(std::string& detail) {
    double max_err = 0.0;
    for (int i = 0; i <= 10000; ++i) {
        const double x = -8.0 + 16.0 * static_cast<double>(i) / 10000.0;
        max_err = std::max(max_err, std::abs(gelu_pwl(static_cast<float>(x)) - oracle::gelu(x)));
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max |err| = %.6f over 10001 points", max_err);
    detail = buf;
    return max_err <= 1e-2;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"kNN oracle equivalence (200 randomized instances, exact)", c1_knn_oracle},
        {"tiling transparency (p_D in {1,7,32,D}, 1e-5 relative)", c2_tiling_transparency},
        {"fused-update identity vs concat reference (1e-5 relative)", c3_fused_identity},
        {"determinism under concurrency (overlapped == sequential, bitwise)", c4_overlap_determinism},
        {"frozen-feature equivalence (standard == GraphLeap, bitwise)", c5_frozen_equivalence},
        {"residual identities (zero-weight blocks)", c6_residual_identities},
        {"permutation invariance of max-relative aggregation", c7_permutation_invariance},
        {"cost-model regression (350/24248/56462; sim == closed form)", c8_cost_model},
        {"latency prediction within 25% of the 2.88 ms reference latency", c9_latency_prediction},
        {"piecewise-linear GELU within 1e-2 of exact", c10_gelu},
    };

    int failures = 0;
    for (size_t i = 0; i < criteria.size(); ++i) {
        std::string detail;
        bool pass = false;
        try {
            pass = criteria[i].run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] %zu. %s :: %s\n", pass ? "PASS" : "FAIL", i + 1, criteria[i].name.c_str(),
                    detail.c_str());
        if (!pass) ++failures;
    }
    if (failures) std::printf("%d criterion(s) FAILED\n", failures);
    else std::printf("all %zu criteria passed\n", criteria.size());
    return failures == 0 ? 0 : 1;
}
