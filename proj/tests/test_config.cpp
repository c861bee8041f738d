#include <doctest.h>

#include "graphleap/config.hpp"

using namespace graphleap;

TEST_SUITE("config") {

TEST_CASE("preset table matches the reference model shapes") {
    const ModelSpec ti = preset("ViG-Ti");
    CHECK(ti.structure == Structure::Isotropic);
    CHECK(ti.total_blocks() == 12);
    CHECK(ti.stages.size() == 1);
    CHECK(ti.stages[0].dim == 192);

    const ModelSpec b = preset("ViG-B");
    CHECK(b.total_blocks() == 16);
    CHECK(b.stages[0].dim == 640);

    const ModelSpec pyb = preset("ViG-Py-B");
    CHECK(pyb.structure == Structure::Pyramidal);
    REQUIRE(pyb.stages.size() == 4);
    CHECK(pyb.stages[0].num_blocks == 2);
    CHECK(pyb.stages[1].num_blocks == 2);
    CHECK(pyb.stages[2].num_blocks == 18);
    CHECK(pyb.stages[3].num_blocks == 2);
    CHECK(pyb.stages[0].dim == 96);
    CHECK(pyb.stages[1].dim == 192);
    CHECK(pyb.stages[2].dim == 480);
    CHECK(pyb.stages[3].dim == 768);

    const ModelSpec pym = preset("ViG-Py-M");
    CHECK(pym.stages[2].num_blocks == 16);

    CHECK_THROWS_AS(preset("ViG-XL"), UnknownPreset);
}

TEST_CASE("derived node counts") {
    const ModelSpec ti = preset("ViG-Ti");  // 224/16 = 14 per side
    CHECK(ti.stages[0].nodes == 196);

    const ModelSpec py = preset("ViG-Py-Ti");  // strides 4/8/16/32
    CHECK(py.stages[0].nodes == 3136);
    CHECK(py.stages[1].nodes == 784);
    CHECK(py.stages[2].nodes == 196);
    CHECK(py.stages[3].nodes == 49);
}

TEST_CASE("default dilation schedule grows every four blocks and caps at N/k") {
    const ModelSpec b = preset("ViG-B");  // 16 blocks, N=196, k=9 -> cap 21
    REQUIRE(b.dilation_schedule.size() == 16);
    CHECK(b.dilation_schedule[0] == 1);
    CHECK(b.dilation_schedule[3] == 1);
    CHECK(b.dilation_schedule[4] == 2);
    CHECK(b.dilation_schedule[11] == 3);
    CHECK(b.dilation_schedule[15] == 4);

    const ModelSpec py = preset("ViG-Py-Ti");  // last stage N=49, k=9 -> cap 5
    for (int32_t l = 0; l < py.total_blocks(); ++l) {
        const int32_t n = py.stages[py.stage_of_block(l)].nodes;
        CHECK(py.k * py.dilation_schedule[l] <= n);
    }
}

TEST_CASE("load_config parses a preset document") {
    const auto cfg = load_config(R"({
        "model": {"preset": "ViG-Ti"},
        "run": {"mode": "graphleap", "schedule": "overlapped", "seed": 7}
    })");
    CHECK(cfg.model == preset("ViG-Ti"));
    CHECK(cfg.hardware == HardwareParams{});
    CHECK(cfg.run.mode == Mode::GraphLeap);
    CHECK(cfg.run.schedule == Schedule::Overlapped);
    CHECK(cfg.run.seed == 7);
}

TEST_CASE("hardware defaults match the reference accelerator parameters") {
    const HardwareParams hw;
    CHECK(hw.p_n == 32);
    CHECK(hw.p_d == 32);
    CHECK(hw.heads == 16);
    CHECK(hw.l_fused == 14);
    CHECK(hw.f_clk == 3.0e8);
    CHECK(hw.n_buf == 2);
    CHECK(hw.c1 == 1.0);
}

TEST_CASE("explicit model spec document") {
    const auto cfg = load_config(R"({
        "model": {"structure": "isotropic", "stages": [{"blocks": 2, "dim": 32}],
                  "image_size": 32, "patch_size": 8, "num_classes": 10, "k": 3},
        "run": {"mode": "standard", "schedule": "sequential", "seed": 1}
    })");
    CHECK(cfg.model.stages[0].nodes == 16);
    CHECK(cfg.model.dilation_schedule == std::vector<int32_t>{1, 1});
}

TEST_CASE("k exceeding N is rejected") {
    ModelSpec spec;
    spec.structure = Structure::Isotropic;
    spec.stages = {{1, 16, 0}};
    spec.image_size = 16;
    spec.patch_size = 8;  // N = 4
    spec.num_classes = 4;
    spec.k = 9;
    CHECK_THROWS_WITH_AS(validate_model(spec), doctest::Contains("k exceeds N"), ValidationError);
}

TEST_CASE("standard mode with overlapped schedule is rejected") {
    CHECK_THROWS_AS(load_config(R"({
        "model": {"preset": "ViG-Ti"},
        "run": {"mode": "standard", "schedule": "overlapped", "seed": 0}
    })"),
                    ValidationError);
}

TEST_CASE("unknown keys are rejected with their path") {
    try {
        load_config(R"({
            "model": {"preset": "ViG-Ti", "patchsize": 16},
            "run": {"mode": "graphleap", "schedule": "sequential", "seed": 0}
        })");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.path() == "model.patchsize");
    }
}

TEST_CASE("malformed document is a ParseError") {
    CHECK_THROWS_AS(load_config("{model:"), ParseError);
}

TEST_CASE("every preset round-trips through a document") {
    for (const auto& name : preset_names()) {
        Config cfg;
        cfg.model = preset(name);
        cfg.run.seed = 42;
        const Config back = load_config(to_document(cfg));
        CHECK(back.model == cfg.model);
        CHECK(back.hardware == cfg.hardware);
        CHECK(back.run == cfg.run);
    }
}

TEST_CASE("validation is total over assorted malformed documents") {
    const char* docs[] = {
        "[]",
        "42",
        R"({"run": {"mode": "graphleap", "schedule": "sequential", "seed": 0}})",
        R"({"model": {"preset": "ViG-Ti"}})",
        R"({"model": {"preset": 3}, "run": {"mode": "graphleap", "schedule": "sequential", "seed": 0}})",
        R"({"model": {"preset": "ViG-Ti"}, "run": {"mode": "x", "schedule": "sequential", "seed": 0}})",
        R"({"model": {"preset": "ViG-Ti"}, "run": {"mode": "graphleap", "schedule": "sequential"}})",
        R"({"model": {"preset": "ViG-Ti"}, "hardware": {"p_N": -1},
            "run": {"mode": "graphleap", "schedule": "sequential", "seed": 0}})",
        R"({"model": {"preset": "ViG-Ti"}, "hardware": {"volts": 3},
            "run": {"mode": "graphleap", "schedule": "sequential", "seed": 0}})",
        R"({"model": {"structure": "pyramidal", "stages": [{"blocks": 2, "dim": 16}],
            "image_size": 32, "patch_size": 4, "num_classes": 4, "k": 2},
            "run": {"mode": "graphleap", "schedule": "sequential", "seed": 0}})",
        R"({"model": {"preset": "ViG-Ti", "dilation": [1, 2]},
            "run": {"mode": "graphleap", "schedule": "sequential", "seed": 0}})",
    };
    for (const char* doc : docs) {
        CHECK_THROWS_AS(load_config(doc), Error);
    }
}

TEST_CASE("heads resolution") {
    CHECK(resolve_heads(192, 16) == 16);
    CHECK(resolve_heads(48, 16) == 16);
    CHECK(resolve_heads(8, 16) == 8);
    CHECK(resolve_heads(24, 16) == 12);
    CHECK(resolve_heads(7, 16) == 7);
    CHECK(resolve_heads(13, 4) == 1);
}

TEST_CASE("stage layout carries grids and head counts") {
    const auto layout = stage_layout(preset("ViG-Py-Ti"), 16);
    REQUIRE(layout.size() == 4);
    CHECK(layout[0].grid_h == 56);
    CHECK(layout[3].grid_h == 7);
    CHECK(layout[2].first_block == 4);
    for (const auto& st : layout) CHECK(st.dim % st.heads == 0);
}

}  // TEST_SUITE
