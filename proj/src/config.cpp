#include "graphleap/config.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

namespace graphleap {

using nlohmann::json;

int32_t ModelSpec::stage_of_block(int32_t l) const {
    int32_t acc = 0;
    for (size_t s = 0; s < stages.size(); ++s) {
        acc += stages[s].num_blocks;
        if (l < acc) return static_cast<int32_t>(s);
    }
    throw ValidationError("model.stages", "block index out of range");
}

namespace {

struct PresetRow {
    Structure structure;
    std::vector<int32_t> blocks;
    std::vector<int32_t> dims;
    int32_t patch;
};

const std::map<std::string, PresetRow>& preset_table() {
    static const std::map<std::string, PresetRow> table = {
        {"ViG-Ti", {Structure::Isotropic, {12}, {192}, 16}},
        {"ViG-S", {Structure::Isotropic, {12}, {320}, 16}},
        {"ViG-B", {Structure::Isotropic, {16}, {640}, 16}},
        {"ViG-Py-Ti", {Structure::Pyramidal, {2, 2, 6, 2}, {48, 96, 240, 384}, 4}},
        {"ViG-Py-S", {Structure::Pyramidal, {2, 2, 6, 2}, {80, 160, 400, 640}, 4}},
        {"ViG-Py-M", {Structure::Pyramidal, {2, 2, 16, 2}, {80, 160, 400, 640}, 4}},
        {"ViG-Py-B", {Structure::Pyramidal, {2, 2, 18, 2}, {96, 192, 480, 768}, 4}},
    };
    return table;
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* a : allowed)
            if (it.key() == a) known = true;
        if (!known) throw ValidationError(path + "." + it.key(), "unknown key");
    }
}

int64_t require_int(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) throw ValidationError(path + "." + key, "missing");
    const json& v = obj.at(key);
    if (!v.is_number_integer()) throw ValidationError(path + "." + key, "expected integer");
    return v.get<int64_t>();
}

int32_t positive_int(const json& obj, const std::string& path, const char* key) {
    int64_t v = require_int(obj, path, key);
    if (v <= 0 || v > INT32_MAX) throw ValidationError(path + "." + key, "expected positive integer");
    return static_cast<int32_t>(v);
}

}  // namespace

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& [name, _] : preset_table()) v.push_back(name);
        return v;
    }();
    return names;
}

ModelSpec preset(const std::string& name) {
    auto it = preset_table().find(name);
    if (it == preset_table().end()) throw UnknownPreset("unknown preset: " + name);
    const PresetRow& row = it->second;
    ModelSpec spec;
    spec.structure = row.structure;
    spec.patch_size = row.patch;
    spec.image_size = 224;
    spec.num_classes = 1000;
    spec.k = 9;
    for (size_t s = 0; s < row.blocks.size(); ++s)
        spec.stages.push_back({row.blocks[s], row.dims[s], 0});
    validate_model(spec);  // fills nodes and the default dilation schedule
    return spec;
}

int32_t resolve_heads(int32_t dim, int32_t heads_base) {
    if (heads_base < 1) heads_base = 1;
    if (dim % heads_base == 0) return heads_base;
    for (int32_t h = std::min(dim, heads_base); h >= 1; --h)
        if (dim % h == 0) return h;
    return 1;
}

std::vector<int32_t> default_dilation_schedule(const ModelSpec& spec) {
    std::vector<int32_t> d;
    int32_t l = 0;
    for (const auto& st : spec.stages) {
        const int32_t cap = std::max(1, st.nodes / spec.k);
        for (int32_t b = 0; b < st.num_blocks; ++b, ++l) d.push_back(std::clamp(l / 4 + 1, 1, cap));
    }
    return d;
}

void validate_model(ModelSpec& spec) {
    if (spec.stages.empty()) throw ValidationError("model.stages", "at least one stage required");
    if (spec.structure == Structure::Isotropic && spec.stages.size() != 1)
        throw ValidationError("model.stages", "isotropic models have exactly one stage");
    if (spec.structure == Structure::Pyramidal && spec.stages.size() != 4)
        throw ValidationError("model.stages", "pyramidal models have exactly four stages");
    if (spec.patch_size <= 0) throw ValidationError("model.patch_size", "expected positive integer");
    if (spec.image_size <= 0) throw ValidationError("model.image_size", "expected positive integer");
    if (spec.num_classes <= 0) throw ValidationError("model.num_classes", "expected positive integer");
    if (spec.k < 1) throw ValidationError("model.k", "k must be >= 1");
    if (spec.image_size % spec.patch_size != 0)
        throw ValidationError("model.image_size", "not divisible by patch_size");

    // Derive per-stage token counts: stage s tokens form a grid at
    // image/(patch * 2^s) resolution.
    for (size_t s = 0; s < spec.stages.size(); ++s) {
        StageSpec& st = spec.stages[s];
        if (st.num_blocks <= 0) throw ValidationError("model.stages." + std::to_string(s) + ".blocks",
                                                      "expected positive integer");
        if (st.dim <= 0)
            throw ValidationError("model.stages." + std::to_string(s) + ".dim", "expected positive integer");
        const int64_t stride = static_cast<int64_t>(spec.patch_size) << s;
        if (stride > spec.image_size || spec.image_size % stride != 0)
            throw ValidationError("model.stages." + std::to_string(s) + "",
                                  "image_size not divisible by stage stride " + std::to_string(stride));
        const int64_t side = spec.image_size / stride;
        st.nodes = static_cast<int32_t>(side * side);
        if (st.nodes <= spec.k)
            throw ValidationError("model.k", "k exceeds N at stage " + std::to_string(s) + " (N=" +
                                                 std::to_string(st.nodes) + ")");
    }

    if (spec.dilation_schedule.empty()) spec.dilation_schedule = default_dilation_schedule(spec);
    if (static_cast<int32_t>(spec.dilation_schedule.size()) != spec.total_blocks())
        throw ValidationError("model.dilation", "length must equal total block count " +
                                                    std::to_string(spec.total_blocks()));
    for (int32_t l = 0; l < spec.total_blocks(); ++l) {
        const int32_t d = spec.dilation_schedule[l];
        if (d < 1) throw ValidationError("model.dilation." + std::to_string(l), "dilation must be >= 1");
        const int32_t n = spec.stages[spec.stage_of_block(l)].nodes;
        if (static_cast<int64_t>(spec.k) * d > n)
            throw ValidationError("model.dilation." + std::to_string(l),
                                  "k*dilation exceeds N (" + std::to_string(spec.k) + "*" +
                                      std::to_string(d) + " > " + std::to_string(n) + ")");
    }
}

void validate_run(const RunConfig& run) {
    if (run.mode == Mode::StandardViG && run.schedule == Schedule::Overlapped)
        throw ValidationError("run.schedule",
                              "overlapped schedule requires graphleap mode (standard ViG is serialized)");
    if (run.weight_source == WeightSource::File && run.weight_path.empty())
        throw ValidationError("run.weights.file", "empty path");
    if (!(run.numeric_tolerance > 0))
        throw ValidationError("run.numeric_tolerance", "must be positive");
}

namespace {

ModelSpec parse_model(const json& m) {
    if (!m.is_object()) throw ValidationError("model", "expected object");
    ModelSpec spec;
    if (m.contains("preset")) {
        check_keys(m, "model", {"preset", "image_size", "num_classes", "k", "dilation", "patch_size"});
        if (!m.at("preset").is_string()) throw ValidationError("model.preset", "expected string");
        try {
            spec = preset(m.at("preset").get<std::string>());
        } catch (const UnknownPreset& e) {
            throw ValidationError("model.preset", e.what());
        }
        spec.dilation_schedule.clear();  // re-derived below unless overridden
    } else {
        check_keys(m, "model",
                   {"structure", "stages", "image_size", "patch_size", "num_classes", "k", "dilation"});
        if (!m.contains("structure")) throw ValidationError("model.structure", "missing");
        const std::string st = m.at("structure").is_string() ? m.at("structure").get<std::string>() : "";
        if (st == "isotropic")
            spec.structure = Structure::Isotropic;
        else if (st == "pyramidal")
            spec.structure = Structure::Pyramidal;
        else
            throw ValidationError("model.structure", "expected \"isotropic\" or \"pyramidal\"");
        if (!m.contains("stages") || !m.at("stages").is_array())
            throw ValidationError("model.stages", "expected array");
        size_t idx = 0;
        for (const json& sj : m.at("stages")) {
            const std::string path = "model.stages." + std::to_string(idx++);
            if (!sj.is_object()) throw ValidationError(path, "expected object");
            check_keys(sj, path, {"blocks", "dim"});
            spec.stages.push_back({positive_int(sj, path, "blocks"), positive_int(sj, path, "dim"), 0});
        }
        spec.patch_size = positive_int(m, "model", "patch_size");
    }
    if (m.contains("image_size")) spec.image_size = positive_int(m, "model", "image_size");
    if (m.contains("num_classes")) spec.num_classes = positive_int(m, "model", "num_classes");
    if (m.contains("k")) spec.k = positive_int(m, "model", "k");
    if (m.contains("dilation")) {
        if (!m.at("dilation").is_array()) throw ValidationError("model.dilation", "expected array");
        spec.dilation_schedule.clear();
        for (const json& dj : m.at("dilation")) {
            if (!dj.is_number_integer()) throw ValidationError("model.dilation", "expected integers");
            spec.dilation_schedule.push_back(dj.get<int32_t>());
        }
    }
    validate_model(spec);
    return spec;
}

HardwareParams parse_hardware(const json& h) {
    if (!h.is_object()) throw ValidationError("hardware", "expected object");
    check_keys(h, "hardware", {"p_N", "p_D", "H", "L_fused", "f_clk", "N_buf", "c1", "c2", "T_sync", "T_pcie"});
    HardwareParams hw;
    if (h.contains("p_N")) hw.p_n = positive_int(h, "hardware", "p_N");
    if (h.contains("p_D")) hw.p_d = positive_int(h, "hardware", "p_D");
    if (h.contains("H")) hw.heads = positive_int(h, "hardware", "H");
    if (h.contains("L_fused")) {
        int64_t v = require_int(h, "hardware", "L_fused");
        if (v < 0) throw ValidationError("hardware.L_fused", "must be >= 0");
        hw.l_fused = static_cast<int32_t>(v);
    }
    if (h.contains("f_clk")) {
        if (!h.at("f_clk").is_number()) throw ValidationError("hardware.f_clk", "expected number");
        hw.f_clk = h.at("f_clk").get<double>();
        if (!(hw.f_clk > 0)) throw ValidationError("hardware.f_clk", "must be positive");
    }
    if (h.contains("N_buf")) hw.n_buf = positive_int(h, "hardware", "N_buf");
    if (h.contains("c1")) {
        if (!h.at("c1").is_number()) throw ValidationError("hardware.c1", "expected number");
        hw.c1 = h.at("c1").get<double>();
    }
    if (h.contains("c2")) {
        if (!h.at("c2").is_number()) throw ValidationError("hardware.c2", "expected number");
        hw.c2 = h.at("c2").get<double>();
    }
    if (h.contains("T_sync")) {
        int64_t v = require_int(h, "hardware", "T_sync");
        if (v < 0) throw ValidationError("hardware.T_sync", "must be >= 0");
        hw.t_sync = static_cast<int32_t>(v);
    }
    if (h.contains("T_pcie")) {
        if (!h.at("T_pcie").is_number()) throw ValidationError("hardware.T_pcie", "expected number");
        hw.t_pcie = h.at("T_pcie").get<double>();
        if (hw.t_pcie < 0) throw ValidationError("hardware.T_pcie", "must be >= 0");
    }
    return hw;
}

RunConfig parse_run(const json& r) {
    if (!r.is_object()) throw ValidationError("run", "expected object");
    check_keys(r, "run", {"mode", "schedule", "seed", "weights", "numeric_tolerance"});
    RunConfig run;
    if (!r.contains("mode")) throw ValidationError("run.mode", "missing");
    const std::string mode = r.at("mode").is_string() ? r.at("mode").get<std::string>() : "";
    if (mode == "standard")
        run.mode = Mode::StandardViG;
    else if (mode == "graphleap")
        run.mode = Mode::GraphLeap;
    else
        throw ValidationError("run.mode", "expected \"standard\" or \"graphleap\"");
    if (!r.contains("schedule")) throw ValidationError("run.schedule", "missing");
    const std::string sched = r.at("schedule").is_string() ? r.at("schedule").get<std::string>() : "";
    if (sched == "sequential")
        run.schedule = Schedule::Sequential;
    else if (sched == "overlapped")
        run.schedule = Schedule::Overlapped;
    else
        throw ValidationError("run.schedule", "expected \"sequential\" or \"overlapped\"");
    if (!r.contains("seed")) throw ValidationError("run.seed", "missing");
    if (!r.at("seed").is_number_integer())
        throw ValidationError("run.seed", "expected integer");
    if (!r.at("seed").is_number_unsigned() && r.at("seed").get<int64_t>() < 0)
        throw ValidationError("run.seed", "must be non-negative");
    run.seed = r.at("seed").get<uint64_t>();
    if (r.contains("weights")) {
        const json& w = r.at("weights");
        if (w.is_string() && w.get<std::string>() == "random") {
            run.weight_source = WeightSource::RandomSeeded;
        } else if (w.is_object()) {
            check_keys(w, "run.weights", {"file"});
            if (!w.contains("file") || !w.at("file").is_string())
                throw ValidationError("run.weights.file", "expected string path");
            run.weight_source = WeightSource::File;
            run.weight_path = w.at("file").get<std::string>();
        } else {
            throw ValidationError("run.weights", "expected \"random\" or {\"file\": path}");
        }
    }
    if (r.contains("numeric_tolerance")) {
        if (!r.at("numeric_tolerance").is_number())
            throw ValidationError("run.numeric_tolerance", "expected number");
        run.numeric_tolerance = r.at("numeric_tolerance").get<double>();
    }
    validate_run(run);
    return run;
}

}  // namespace

Config load_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config parse error: ") + e.what());
    }
    if (!doc.is_object()) throw ValidationError("", "top level must be an object");
    check_keys(doc, "config", {"model", "hardware", "run"});
    if (!doc.contains("model")) throw ValidationError("model", "missing");
    if (!doc.contains("run")) throw ValidationError("run", "missing");

    Config cfg;
    cfg.model = parse_model(doc.at("model"));
    if (doc.contains("hardware")) cfg.hardware = parse_hardware(doc.at("hardware"));
    cfg.run = parse_run(doc.at("run"));
    return cfg;
}

std::string to_document(const Config& cfg) {
    json m;
    m["structure"] = cfg.model.structure == Structure::Isotropic ? "isotropic" : "pyramidal";
    m["image_size"] = cfg.model.image_size;
    m["patch_size"] = cfg.model.patch_size;
    m["num_classes"] = cfg.model.num_classes;
    m["k"] = cfg.model.k;
    m["stages"] = json::array();
    for (const auto& st : cfg.model.stages) m["stages"].push_back({{"blocks", st.num_blocks}, {"dim", st.dim}});
    m["dilation"] = cfg.model.dilation_schedule;

    json h;
    h["p_N"] = cfg.hardware.p_n;
    h["p_D"] = cfg.hardware.p_d;
    h["H"] = cfg.hardware.heads;
    h["L_fused"] = cfg.hardware.l_fused;
    h["f_clk"] = cfg.hardware.f_clk;
    h["N_buf"] = cfg.hardware.n_buf;
    h["c1"] = cfg.hardware.c1;
    h["c2"] = cfg.hardware.c2;
    h["T_sync"] = cfg.hardware.t_sync;
    h["T_pcie"] = cfg.hardware.t_pcie;

    json r;
    r["mode"] = cfg.run.mode == Mode::StandardViG ? "standard" : "graphleap";
    r["schedule"] = cfg.run.schedule == Schedule::Sequential ? "sequential" : "overlapped";
    r["seed"] = cfg.run.seed;
    if (cfg.run.weight_source == WeightSource::RandomSeeded)
        r["weights"] = "random";
    else
        r["weights"] = {{"file", cfg.run.weight_path}};
    r["numeric_tolerance"] = cfg.run.numeric_tolerance;

    json doc;
    doc["model"] = m;
    doc["hardware"] = h;
    doc["run"] = r;
    return doc.dump(2);
}

std::vector<StageLayout> stage_layout(const ModelSpec& spec, int32_t heads_base) {
    std::vector<StageLayout> out;
    int32_t first = 0;
    for (size_t s = 0; s < spec.stages.size(); ++s) {
        const StageSpec& st = spec.stages[s];
        const int32_t side = spec.image_size / (spec.patch_size << s);
        out.push_back({first, st.num_blocks, st.nodes, st.dim, side, side, resolve_heads(st.dim, heads_base)});
        first += st.num_blocks;
    }
    return out;
}

}  // namespace graphleap
