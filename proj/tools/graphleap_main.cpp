// graphleap: Vision-GNN inference with decoupled graph construction, plus the
// accelerator cost model. Subcommands: infer, compare, perf, gen.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "graphleap/perf.hpp"
#include "graphleap/report.hpp"
#include "graphleap/scheduler.hpp"
#include "graphleap/tensor_io.hpp"

namespace gl = graphleap;

namespace {

bool log_enabled() {
    static const bool on = [] {
        const char* v = std::getenv("GRAPHLEAP_LOG");
        return v != nullptr && *v != '\0' && std::string_view(v) != "0";
    }();
    return on;
}

void log_line(const std::string& msg) {
    if (log_enabled()) std::cerr << "[graphleap] " << msg << "\n";
}

struct CommonArgs {
    std::string config_path;
    std::string preset_name;
    std::optional<uint64_t> seed;
    std::optional<int32_t> resolution;
    std::string mode;
    std::string schedule;
    std::string out_path;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "configuration document (JSON)");
    cmd->add_option("--preset", args.preset_name, "model preset name (alternative to --config)");
    cmd->add_option("--seed", args.seed, "seed override");
    cmd->add_option("--resolution", args.resolution, "input resolution override")
        ->check(CLI::IsMember({224, 448}));
    cmd->add_option("--mode", args.mode, "standard|graphleap")
        ->check(CLI::IsMember({"standard", "graphleap"}));
    cmd->add_option("--schedule", args.schedule, "sequential|overlapped")
        ->check(CLI::IsMember({"sequential", "overlapped"}));
    cmd->add_option("--out", args.out_path, "also write the report to this file");
}

gl::Config resolve_config(const CommonArgs& args) {
    gl::Config cfg;
    if (!args.config_path.empty()) {
        cfg = gl::load_config(gl::load_file(args.config_path));
    } else if (!args.preset_name.empty()) {
        cfg.model = gl::preset(args.preset_name);
    } else {
        throw gl::ValidationError("config", "either --config or --preset is required");
    }
    if (args.resolution) {
        cfg.model.image_size = *args.resolution;
        cfg.model.dilation_schedule.clear();
        gl::validate_model(cfg.model);
    }
    if (args.seed) cfg.run.seed = *args.seed;
    if (args.mode == "standard") cfg.run.mode = gl::Mode::StandardViG;
    if (args.mode == "graphleap") cfg.run.mode = gl::Mode::GraphLeap;
    if (args.schedule == "sequential") cfg.run.schedule = gl::Schedule::Sequential;
    if (args.schedule == "overlapped") cfg.run.schedule = gl::Schedule::Overlapped;
    gl::validate_run(cfg.run);
    return cfg;
}

gl::ModelWeights resolve_weights(const gl::Config& cfg, const std::string& weights_flag) {
    if (!weights_flag.empty() || cfg.run.weight_source == gl::WeightSource::File) {
        const std::string path = !weights_flag.empty() ? weights_flag : cfg.run.weight_path;
        log_line("loading weights from " + path);
        std::istringstream in(gl::load_file(path), std::ios::binary);
        return gl::read_weights(in, cfg.model, cfg.hardware.heads);
    }
    log_line("initializing seeded random weights");
    return gl::init_model_weights(cfg.model, cfg.run.seed, cfg.hardware.heads);
}

void emit(const std::string& text, const std::string& out_path) {
    std::cout << text;
    if (!out_path.empty()) gl::save_file(out_path, text);
}

void print_debug_candidates(const gl::Config& cfg, const gl::ModelWeights& w, const gl::ImageTensor& img,
                            int32_t rows) {
    const auto layout = gl::stage_layout(cfg.model, cfg.hardware.heads);
    gl::FeatureMatrix x = gl::patch_embed(img, w.stem, cfg.model.patch_size);
    x = gl::add_positional(x, w.pos_table);
    gl::FeatureMatrix u = gl::projected_input(x, w.blocks[0], gl::BlockOptions{});
    const auto dist =
        gl::pairwise_distances_tiled(u, gl::DistanceTilePlan::for_matrix(u.rows, u.cols));
    const int32_t limit = std::min(rows, u.rows);
    for (int32_t i = 0; i < limit; ++i) {
        const auto picked = gl::topk_dilated(dist.row(i), static_cast<uint32_t>(i), cfg.model.k,
                                             cfg.model.dilation_schedule[0]);
        std::cerr << "row " << i << " candidates:";
        for (uint32_t j : picked) std::cerr << " " << j << "(" << dist.at(i, static_cast<int32_t>(j)) << ")";
        std::cerr << "\n";
    }
}

int cmd_infer(const CommonArgs& args, const std::string& input_path, bool random_input,
              const std::string& weights_flag, int32_t debug_candidates, bool with_divergence) {
    const gl::Config cfg = resolve_config(args);
    const gl::ModelWeights weights = resolve_weights(cfg, weights_flag);

    gl::ImageTensor img;
    if (!input_path.empty()) {
        std::istringstream in(gl::load_file(input_path), std::ios::binary);
        img = gl::read_image(in);
    } else if (random_input) {
        img = gl::random_image(cfg.model.image_size, cfg.run.seed);
    } else {
        throw gl::ValidationError("input", "provide an input tensor path or --random");
    }

    if (debug_candidates > 0) print_debug_candidates(cfg, weights, img, debug_candidates);

    const gl::EngineOptions opts = gl::EngineOptions::from_hardware(cfg.hardware);
    const auto t0 = std::chrono::steady_clock::now();
    gl::RunResult run;
    if (cfg.run.mode == gl::Mode::StandardViG) {
        log_line("running standard ViG (sequential)");
        run = gl::run_standard(img, weights, cfg.model, opts);
    } else if (cfg.run.schedule == gl::Schedule::Sequential) {
        log_line("running GraphLeap, sequential schedule");
        run = gl::run_graphleap_sequential(img, weights, cfg.model, opts);
    } else {
        log_line("running GraphLeap, overlapped schedule");
        run = gl::run_graphleap_overlapped(img, weights, cfg.model, opts);
    }
    const double wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    gl::RunReport rep;
    rep.config = cfg;
    rep.top_logits = gl::RunReport::digest(run.logits);
    for (const auto& b : run.blocks) rep.graph_hashes.push_back(b.graph_hash);
    rep.predicted_sequential_ms =
        gl::total_latency(cfg.model, cfg.hardware, gl::Schedule::Sequential).total_seconds * 1e3;
    rep.predicted_overlapped_ms =
        gl::total_latency(cfg.model, cfg.hardware, gl::Schedule::Overlapped).total_seconds * 1e3;
    rep.wall_ms = wall_ms;
    rep.timeline = run.timeline;
    if (with_divergence) rep.divergence = gl::compare_modes(img, weights, cfg.model, opts);

    if (run.timeline && log_enabled()) {
        const auto model = gl::total_latency(cfg.model, cfg.hardware, gl::Schedule::Overlapped);
        std::cerr << gl::format_measured_vs_model(gl::measured_vs_model(*run.timeline, model));
    }

    emit(gl::format_run_report(rep), args.out_path);
    return 0;
}

int cmd_compare(const CommonArgs& args, const std::string& weights_flag) {
    const gl::Config cfg = resolve_config(args);
    const gl::ModelWeights weights = resolve_weights(cfg, weights_flag);
    const gl::ImageTensor img = gl::random_image(cfg.model.image_size, cfg.run.seed);
    const gl::EngineOptions opts = gl::EngineOptions::from_hardware(cfg.hardware);
    const gl::DivergenceReport rep = gl::compare_modes(img, weights, cfg.model, opts);
    emit(gl::format_divergence_table(rep), args.out_path);
    return 0;
}

int cmd_perf(const CommonArgs& args, bool all_presets) {
    std::vector<gl::PerfRow> rows;
    auto add_rows = [&](const std::string& name, gl::ModelSpec spec) {
        for (int32_t res : {224, 448}) {
            if (args.resolution && *args.resolution != res) continue;
            spec.image_size = res;
            spec.dilation_schedule.clear();
            gl::validate_model(spec);
            gl::HardwareParams hw = args.config_path.empty()
                                        ? gl::HardwareParams{}
                                        : gl::load_config(gl::load_file(args.config_path)).hardware;
            const auto seq = gl::total_latency(spec, hw, gl::Schedule::Sequential);
            const auto ovl = gl::total_latency(spec, hw, gl::Schedule::Overlapped);
            rows.push_back({name, res, seq.total_seconds * 1e3, ovl.total_seconds * 1e3,
                            seq.total_seconds / ovl.total_seconds});
        }
    };
    if (all_presets) {
        for (const auto& name : gl::preset_names()) add_rows(name, gl::preset(name));
    } else {
        // Single model at its configured (or overridden) resolution.
        const gl::Config cfg = resolve_config(args);
        const std::string name = args.preset_name.empty() ? "model" : args.preset_name;
        const auto seq = gl::total_latency(cfg.model, cfg.hardware, gl::Schedule::Sequential);
        const auto ovl = gl::total_latency(cfg.model, cfg.hardware, gl::Schedule::Overlapped);
        rows.push_back({name, cfg.model.image_size, seq.total_seconds * 1e3, ovl.total_seconds * 1e3,
                        seq.total_seconds / ovl.total_seconds});
    }
    emit(gl::format_perf_table(rows), args.out_path);
    return 0;
}

int cmd_gen(const CommonArgs& args, const std::string& out_dir) {
    const gl::Config cfg = resolve_config(args);
    std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);

    const gl::ModelWeights weights = gl::init_model_weights(cfg.model, cfg.run.seed, cfg.hardware.heads);
    {
        std::ostringstream os(std::ios::binary);
        gl::write_weights(weights, os);
        gl::save_file((dir / "weights.glpw").string(), std::move(os).str());
    }
    {
        std::ostringstream os(std::ios::binary);
        gl::write_image(gl::random_image(cfg.model.image_size, cfg.run.seed), os);
        gl::save_file((dir / "input.glpt").string(), std::move(os).str());
    }
    std::cout << "wrote " << (dir / "weights.glpw").string() << " and " << (dir / "input.glpt").string()
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Vision-GNN inference engine with decoupled graph construction"};
    app.require_subcommand(1);

    CommonArgs infer_args, compare_args, perf_args, gen_args;
    std::string input_path, infer_weights, compare_weights, gen_out;
    bool random_input = false, all_presets = false;
    int32_t debug_candidates = 0;

    CLI::App* infer = app.add_subcommand("infer", "run single-image inference");
    add_common(infer, infer_args);
    infer->add_option("--input", input_path, "input image tensor (.glpt, 3xHxW)");
    infer->add_flag("--random", random_input, "synthesize the input from the seed");
    infer->add_option("--weights", infer_weights, "weight bundle (.glpw) overriding the config");
    infer->add_option("--debug-candidates", debug_candidates,
                      "print the first N rows' neighbor candidates of the bootstrap graph");

    CLI::App* compare = app.add_subcommand("compare", "per-block divergence between modes");
    add_common(compare, compare_args);
    compare->add_option("--weights", compare_weights, "weight bundle (.glpw) overriding the config");

    CLI::App* perf = app.add_subcommand("perf", "accelerator latency model table");
    add_common(perf, perf_args);
    perf->add_flag("--all-presets", all_presets, "every preset at 224 and 448");

    CLI::App* gen = app.add_subcommand("gen", "generate seeded weights and input");
    add_common(gen, gen_args);
    gen->add_option("--out-dir", gen_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (infer->parsed()) return cmd_infer(infer_args, input_path, random_input, infer_weights,
                                              debug_candidates);
        if (compare->parsed()) return cmd_compare(compare_args, compare_weights);
        if (perf->parsed()) return cmd_perf(perf_args, all_presets);
        if (gen->parsed()) return cmd_gen(gen_args, gen_out);
    } catch (const gl::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const gl::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const gl::UnknownPreset& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const gl::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const gl::SizeMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const gl::ShapeMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
