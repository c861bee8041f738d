#include <doctest.h>

#include <cstring>

#include "graphleap/scheduler.hpp"
#include "oracles.hpp"

using namespace graphleap;

namespace {

ModelSpec small_isotropic(int32_t blocks = 3, int32_t dim = 16) {
    ModelSpec spec;
    spec.structure = Structure::Isotropic;
    spec.stages = {{blocks, dim, 0}};
    spec.image_size = 32;
    spec.patch_size = 8;  // N = 16
    spec.num_classes = 5;
    spec.k = 3;
    validate_model(spec);
    return spec;
}

ModelSpec small_pyramid() {
    ModelSpec spec;
    spec.structure = Structure::Pyramidal;
    spec.stages = {{2, 8, 0}, {1, 8, 0}, {1, 16, 0}, {2, 16, 0}};
    spec.image_size = 32;
    spec.patch_size = 2;  // stage N: 256, 64, 16, 4
    spec.num_classes = 4;
    spec.k = 3;
    validate_model(spec);
    return spec;
}

// W_in = I, every other projection zero: features never change, so the
// leap-ahead graphs coincide with the same-layer ones.
ModelWeights frozen_weights(const ModelSpec& spec, uint64_t seed, int32_t heads_base = 16) {
    ModelWeights w = init_model_weights(spec, seed, heads_base);
    const auto layout = stage_layout(spec, heads_base);
    int32_t block = 0;
    for (const auto& st : layout) {
        for (int32_t b = 0; b < st.num_blocks; ++b, ++block) {
            BlockWeights& bw = w.blocks[block];
            bw.w_in = identity_matrix(st.dim);
            bw.w_x = PerHeadWeight(st.heads, st.dim / st.heads);
            bw.w_m = PerHeadWeight(st.heads, st.dim / st.heads);
            bw.w_out = FeatureMatrix(st.dim, st.dim, 0.0f);
            bw.w1 = FeatureMatrix(st.dim, 4 * st.dim, 0.0f);
            bw.w2 = FeatureMatrix(4 * st.dim, st.dim, 0.0f);
        }
    }
    return w;
}

bool bitwise_equal(const std::vector<float>& a, const std::vector<float>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_SUITE("scheduler") {

TEST_CASE("zero-projection one-block model collapses to the residual path") {
    ModelSpec spec = small_isotropic(1);
    ModelWeights w = frozen_weights(spec, 3);
    const ImageTensor img = random_image(spec.image_size, 9);

    const auto run = run_standard(img, w, spec);
    FeatureMatrix x = patch_embed(img, w.stem, spec.patch_size);
    x = add_positional(x, w.pos_table);
    const auto want = classify_head(x, w.head);
    CHECK(bitwise_equal(run.logits, want));
    CHECK(run.blocks.size() == 1);
}

TEST_CASE("trace records one graph per block") {
    const ModelSpec spec = small_pyramid();
    const ModelWeights w = init_model_weights(spec, 4);
    const auto run = run_standard(random_image(spec.image_size, 1), w, spec);
    CHECK(run.blocks.size() == static_cast<size_t>(spec.total_blocks()));
    for (int32_t l = 0; l < spec.total_blocks(); ++l) {
        CHECK(run.blocks[l].layer == l);
        REQUIRE(run.blocks[l].graph.has_value());  // small stages retain graphs
        CHECK(run.blocks[l].graph->hash() == run.blocks[l].graph_hash);
    }
}

TEST_CASE("run_standard equals a straight-line reference loop") {
    const ModelSpec spec = small_isotropic(2);
    const ModelWeights w = init_model_weights(spec, 10);
    const ImageTensor img = random_image(spec.image_size, 11);
    const EngineOptions opts;

    const auto run = run_standard(img, w, spec, opts);

    FeatureMatrix x = add_positional(patch_embed(img, w.stem, spec.patch_size), w.pos_table);
    for (int32_t l = 0; l < 2; ++l) {
        const FeatureMatrix u = projected_input(x, w.blocks[l], opts.block);
        const auto g = build_graph(u, spec.k, spec.dilation_schedule[l]);
        const FeatureMatrix y = grapher_block_with_projected(x, u, g, w.blocks[l], opts.block);
        x = ffn_block(y, w.blocks[l], opts.block);
    }
    const auto want = classify_head(x, w.head);
    CHECK(bitwise_equal(run.logits, want));
}

TEST_CASE("block 0 graph is identical between standard and leap-ahead") {
    const ModelSpec spec = small_isotropic(3);
    const ModelWeights w = init_model_weights(spec, 12);
    const ImageTensor img = random_image(spec.image_size, 13);
    const auto std_run = run_standard(img, w, spec);
    const auto leap_run = run_graphleap_sequential(img, w, spec);
    CHECK(std_run.blocks[0].graph_hash == leap_run.blocks[0].graph_hash);
}

TEST_CASE("frozen features make leap-ahead exact (bitwise)") {
    for (const ModelSpec& spec : {small_isotropic(3), small_pyramid()}) {
        const ModelWeights w = frozen_weights(spec, 20);
        const ImageTensor img = random_image(spec.image_size, 21);
        const auto s = run_standard(img, w, spec);
        const auto g = run_graphleap_sequential(img, w, spec);
        CHECK(bitwise_equal(s.logits, g.logits));
        for (size_t l = 0; l < s.blocks.size(); ++l)
            CHECK(s.blocks[l].graph_hash == g.blocks[l].graph_hash);
    }
}

TEST_CASE("random weights produce genuinely different graphs somewhere") {
    ModelSpec spec = small_isotropic(3, 32);
    const ModelWeights w = init_model_weights(spec, 30);
    const ImageTensor img = random_image(spec.image_size, 31);
    const auto rep = compare_modes(img, w, spec);
    bool any_diff = false;
    for (size_t l = 0; l < rep.used_hash.size(); ++l)
        if (rep.used_hash[l] != rep.fresh_hash[l]) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("overlapped equals sequential bitwise, for both buffer depths") {
    for (const ModelSpec& spec : {small_isotropic(4), small_pyramid()}) {
        const ModelWeights w = init_model_weights(spec, 40);
        const ImageTensor img = random_image(spec.image_size, 41);
        const auto seq = run_graphleap_sequential(img, w, spec);
        for (int32_t n_buf : {1, 2}) {
            EngineOptions opts;
            opts.n_buf = n_buf;
            const auto ovl = run_graphleap_overlapped(img, w, spec, opts);
            CHECK(bitwise_equal(seq.logits, ovl.logits));
            for (size_t l = 0; l < seq.blocks.size(); ++l)
                CHECK(seq.blocks[l].graph_hash == ovl.blocks[l].graph_hash);
            REQUIRE(ovl.timeline.has_value());
            CHECK(ovl.timeline->queue_high_water <= static_cast<size_t>(n_buf));
            for (const auto& t : ovl.timeline->layers) {
                CHECK(t.fue_start_ns >= t.gce_end_ns);
                CHECK(t.gce_end_ns >= t.gce_start_ns);
                CHECK(t.fue_end_ns >= t.fue_start_ns);
            }
        }
    }
}

TEST_CASE("single-block model runs overlapped (bootstrap graph only)") {
    const ModelSpec spec = small_isotropic(1);
    const ModelWeights w = init_model_weights(spec, 45);
    const ImageTensor img = random_image(spec.image_size, 46);
    const auto seq = run_graphleap_sequential(img, w, spec);
    const auto ovl = run_graphleap_overlapped(img, w, spec);
    CHECK(bitwise_equal(seq.logits, ovl.logits));
    CHECK(ovl.blocks.size() == 1);
}

TEST_CASE("graph source invariant: consumed topology is a pure function of the previous projection") {
    const ModelSpec spec = small_isotropic(4);
    const ModelWeights w = init_model_weights(spec, 50);
    const ImageTensor img = random_image(spec.image_size, 51);
    const EngineOptions opts;
    const auto run = run_graphleap_sequential(img, w, spec, opts);

    // Independent replay of the feature trajectory.
    FeatureMatrix x = add_positional(patch_embed(img, w.stem, spec.patch_size), w.pos_table);
    FeatureMatrix u_prev;
    for (int32_t l = 0; l < spec.total_blocks(); ++l) {
        const FeatureMatrix u = projected_input(x, w.blocks[l], opts.block);
        const GraphTopology expect =
            build_graph(l == 0 ? u : u_prev, spec.k, spec.dilation_schedule[l]);
        CHECK(expect.hash() == run.blocks[l].graph_hash);
        const FeatureMatrix y = grapher_block_with_projected(x, u, expect, w.blocks[l], opts.block);
        x = ffn_block(y, w.blocks[l], opts.block);
        u_prev = u;
    }
}

TEST_CASE("pyramid stages bootstrap from their own post-pool features") {
    const ModelSpec spec = small_pyramid();
    const ModelWeights w = init_model_weights(spec, 60);
    const ImageTensor img = random_image(spec.image_size, 61);
    const EngineOptions opts;
    const auto run = run_graphleap_sequential(img, w, spec, opts);
    const auto layout = stage_layout(spec, opts.heads_base);

    FeatureMatrix x = add_positional(patch_embed(img, w.stem, spec.patch_size), w.pos_table);
    for (size_t s = 0; s < layout.size(); ++s) {
        const auto& st = layout[s];
        // First block of the stage must consume a graph built from the
        // stage's own input, never a stale pre-pool matrix.
        const FeatureMatrix u0 = projected_input(x, w.blocks[st.first_block], opts.block);
        const auto g0 = build_graph(u0, spec.k, spec.dilation_schedule[st.first_block]);
        CHECK(g0.num_nodes == st.nodes);
        CHECK(g0.hash() == run.blocks[st.first_block].graph_hash);

        FeatureMatrix u_prev;
        for (int32_t b = 0; b < st.num_blocks; ++b) {
            const int32_t l = st.first_block + b;
            const FeatureMatrix u = projected_input(x, w.blocks[l], opts.block);
            const auto g = build_graph(b == 0 ? u : u_prev, spec.k, spec.dilation_schedule[l]);
            const FeatureMatrix y = grapher_block_with_projected(x, u, g, w.blocks[l], opts.block);
            x = ffn_block(y, w.blocks[l], opts.block);
            u_prev = u;
        }
        if (s + 1 < layout.size())
            x = matmul(downsample_maxpool(x, st.grid_h, st.grid_w), w.transitions[s]);
    }
}

TEST_CASE("compare_modes: frozen features give Jaccard 1 everywhere and zero logit distance") {
    const ModelSpec spec = small_isotropic(3);
    const ModelWeights w = frozen_weights(spec, 70);
    const auto rep = compare_modes(random_image(spec.image_size, 71), w, spec);
    REQUIRE(rep.jaccard.size() == 3);
    for (double j : rep.jaccard) CHECK(j == 1.0);
    CHECK(rep.logit_l2 == 0.0);
}

TEST_CASE("compare_modes: block 0 is always 1.0 and values stay in [0, 1]") {
    const ModelSpec spec = small_pyramid();
    const ModelWeights w = init_model_weights(spec, 80);
    const auto rep = compare_modes(random_image(spec.image_size, 81), w, spec);
    REQUIRE(rep.jaccard.size() == static_cast<size_t>(spec.total_blocks()));
    CHECK(rep.jaccard[0] == 1.0);
    // Stage boundaries re-bootstrap, so each stage's first block is exact.
    const auto layout = stage_layout(spec, 16);
    for (const auto& st : layout) CHECK(rep.jaccard[st.first_block] == 1.0);
    for (double j : rep.jaccard) {
        CHECK(j >= 0.0);
        CHECK(j <= 1.0);
    }
}

TEST_CASE("worker errors tear the pipeline down and surface") {
    const ModelSpec spec = small_isotropic(3);
    ModelWeights w = init_model_weights(spec, 90);
    w.blocks[2].w1 = FeatureMatrix(8, 8, 0.0f);  // wrong shape, fails mid-run
    EngineOptions opts;
    CHECK_THROWS_AS(run_graphleap_overlapped(random_image(spec.image_size, 91), w, spec, opts),
                    ShapeMismatch);
}

TEST_CASE("weights with the wrong block count are rejected up front") {
    const ModelSpec spec = small_isotropic(3);
    ModelWeights w = init_model_weights(spec, 95);
    w.blocks.pop_back();
    CHECK_THROWS_AS(run_standard(random_image(spec.image_size, 96), w, spec), ShapeMismatch);
}

TEST_CASE("jaccard helper") {
    GraphTopology a(2, 2), b(2, 2);
    a.row(0)[0] = 0;
    a.row(0)[1] = 1;
    a.row(1)[0] = 1;
    a.row(1)[1] = 0;
    b.row(0)[0] = 0;
    b.row(0)[1] = 1;
    b.row(1)[0] = 1;
    b.row(1)[1] = 1;  // duplicate collapses to {1}
    CHECK(topology_jaccard(a, a) == 1.0);
    CHECK(topology_jaccard(a, b) == doctest::Approx(0.75));
}

}  // TEST_SUITE
