#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "cognn/graph_build.hpp"
#include "cognn/model.hpp"
#include "cognn/rng.hpp"
#include "cognn/train.hpp"
#include "support.hpp"

using namespace cognn;
using testutil::max_abs_diff;
using testutil::random_tensor;

namespace {

ModelConfig small_config(Variant v) {
    ModelConfig cfg;
    cfg.input_dim = 10;
    cfg.gcn_dims = {6, 4};
    cfg.fc_hidden = {8, 4};
    cfg.variant = v;
    return cfg;
}

std::vector<PairedSample> random_samples(Rng& rng, int count, int dim) {
    std::vector<PairedSample> out;
    for (int i = 0; i < count; ++i) {
        Tensor img = Tensor::zeros({rng.uniform_int(3, 6), dim});
        for (auto& v : img.vec()) v = rng.normal();
        Tensor txt = Tensor::zeros({rng.uniform_int(5, 9), dim});
        for (auto& v : txt.vec()) v = rng.normal();
        out.push_back(build_sample(img, txt, i % 2, "s" + std::to_string(i)));
    }
    return out;
}

PairedBatch batch_of(const std::vector<PairedSample>& samples) {
    std::vector<int> idx(samples.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    return make_paired_batch(samples, idx);
}

std::vector<PairedSample> permute_nodes(const std::vector<PairedSample>& samples, Rng& rng) {
    auto permute_graph = [&](const Graph& g) {
        std::vector<int> perm(g.node_count);
        for (int i = 0; i < g.node_count; ++i) perm[i] = i;
        rng.shuffle(perm);
        Tensor feats = Tensor::zeros({g.node_count, g.feature_dim()});
        for (int i = 0; i < g.node_count; ++i) {
            for (int j = 0; j < g.feature_dim(); ++j) feats.at(perm[i], j) = g.node_features.at(i, j);
        }
        std::vector<Edge> edges;
        for (const auto& [i, j] : g.edges) {
            edges.push_back({std::min(perm[i], perm[j]), std::max(perm[i], perm[j])});
        }
        std::sort(edges.begin(), edges.end());
        return make_graph(feats, edges);
    };
    std::vector<PairedSample> out = samples;
    for (PairedSample& s : out) {
        s.image_graph = permute_graph(s.image_graph);
        s.text_graph = permute_graph(s.text_graph);
    }
    return out;
}

}  // namespace

TEST_CASE("forward produces one logit row of width 2 per sample") {
    Rng rng(1);
    ModelConfig cfg;  // paper defaults: 256 -> 64 -> 32, head 128x64, 64x32, 32x2
    TwoBranchModel model(cfg, 7);

    std::vector<PairedSample> samples;
    {
        Tensor img = random_tensor(rng, {3, 256});
        Tensor txt = random_tensor(rng, {5, 256});
        samples.push_back(build_sample(img, txt, 0, "one"));
    }
    PairedBatch batch = batch_of(samples);
    Tensor logits = model.forward(batch.image, batch.text);
    CHECK(logits.shape() == Shape{1, 2});
}

TEST_CASE("parameter count of the default collaborative model is exact") {
    TwoBranchModel model(ModelConfig{}, 0);
    // 2 branches x (256*64 GCN1 + 64 pool + 64*32 GCN2 + 32 pool) + 4 mu
    // + head 128*64 + 64 + 64*32 + 32 + 32*2 + 2.
    const std::int64_t branches = 2 * (256 * 64 + 64 + 64 * 32 + 32);
    const std::int64_t head = 128 * 64 + 64 + 64 * 32 + 32 + 32 * 2 + 2;
    CHECK(model.parameter_count() == branches + 4 + head);
    CHECK(model.parameter_count() == 47462);
}

TEST_CASE("collaborative model with mu = 0 equals the fusion-free twin at the same seed") {
    Rng rng(3);
    ModelConfig collab = small_config(Variant::collaborative);
    collab.mu_init = 0.0;
    ModelConfig plain_pool = small_config(Variant::two_branch_sagpool);

    TwoBranchModel a(collab, 99);
    TwoBranchModel b(plain_pool, 99);

    auto samples = random_samples(rng, 5, 10);
    PairedBatch batch = batch_of(samples);
    Tensor la = a.forward(batch.image, batch.text);
    Tensor lb = b.forward(batch.image, batch.text);
    CHECK(max_abs_diff(la, lb) <= 1e-12);
}

TEST_CASE("variant lattice: plain equals sagpool with ratio 1 and gating off, weights transplanted") {
    Rng rng(5);
    ModelConfig plain_cfg = small_config(Variant::two_branch_plain);
    TwoBranchModel plain(plain_cfg, 11);

    ModelConfig degenerate = small_config(Variant::two_branch_sagpool);
    degenerate.pooling_ratio = 1.0;
    degenerate.pool_gating = false;
    TwoBranchModel degen(degenerate, 12);

    const int copied = degen.copy_common_parameters(plain);
    CHECK(copied == 2 * 2 + 6);  // 4 GCN weights + 3 head layers (w + b)

    auto samples = random_samples(rng, 4, 10);
    PairedBatch batch = batch_of(samples);
    CHECK(max_abs_diff(degen.forward(batch.image, batch.text),
                       plain.forward(batch.image, batch.text)) <= 1e-12);
}

TEST_CASE("node relabeling leaves logits unchanged") {
    Rng rng(17);
    TwoBranchModel model(small_config(Variant::collaborative), 23);

    auto samples = random_samples(rng, 6, 10);
    auto permuted = permute_nodes(samples, rng);
    Tensor base = model.forward(batch_of(samples).image, batch_of(samples).text);
    Tensor relabeled = model.forward(batch_of(permuted).image, batch_of(permuted).text);
    CHECK(max_abs_diff(base, relabeled) <= 1e-9);
}

TEST_CASE("single-branch variants") {
    Rng rng(29);
    auto samples = random_samples(rng, 4, 10);
    PairedBatch batch = batch_of(samples);

    SUBCASE("logits shape and variant contract") {
        TwoBranchModel img_model(small_config(Variant::image_only), 31);
        Tensor logits = img_model.forward_single_branch(batch.image);
        CHECK(logits.shape() == Shape{4, 2});
        CHECK_THROWS_WITH_AS(img_model.forward(batch.image, batch.text),
                             doctest::Contains("not a two-branch"), Error);

        TwoBranchModel full(small_config(Variant::collaborative), 31);
        CHECK_THROWS_WITH_AS(full.forward_single_branch(batch.image),
                             doctest::Contains("not single-branch"), Error);
    }

    SUBCASE("equals the two-branch model with the text contribution excised") {
        TwoBranchModel two(small_config(Variant::two_branch_sagpool), 37);
        TwoBranchModel one(small_config(Variant::image_only), 41);

        const int copied = one.copy_common_parameters(two);
        // 2 GCN + 2 pool weights + head.0 bias + head.1/head.2 weight+bias;
        // head.0.weight differs in shape (16 vs 32 rows) and is skipped.
        CHECK(copied == 4 + 1 + 4);

        // Image part of the first FC layer = its top rows.
        Tensor two_w0 = two.parameter("head.0.weight");
        Tensor one_w0 = one.parameter("head.0.weight");
        const int rows_single = one_w0.rows();
        for (int i = 0; i < rows_single; ++i) {
            for (int j = 0; j < one_w0.cols(); ++j) one_w0.at(i, j) = two_w0.at(i, j);
        }
        // Excise the text contribution in the two-branch model.
        for (int i = rows_single; i < two_w0.rows(); ++i) {
            for (int j = 0; j < two_w0.cols(); ++j) two_w0.at(i, j) = 0.0;
        }

        CHECK(max_abs_diff(one.forward_single_branch(batch.image),
                           two.forward(batch.image, batch.text)) <= 1e-12);
    }
}

TEST_CASE("feature-averaging baseline") {
    Rng rng(43);
    TwoBranchModel model(small_config(Variant::two_branch_avg), 47);

    SUBCASE("logits shape on a mixed-size batch") {
        auto samples = random_samples(rng, 4, 10);
        PairedBatch batch = batch_of(samples);
        Tensor logits = model.forward_avg_baseline(batch.image, batch.text);
        CHECK(logits.shape() == Shape{4, 2});
        CHECK(logits.all_finite());
    }

    SUBCASE("node permutation cannot move the mean") {
        auto samples = random_samples(rng, 3, 10);
        auto permuted = permute_nodes(samples, rng);
        CHECK(max_abs_diff(model.forward_avg_baseline(batch_of(samples).image, batch_of(samples).text),
                           model.forward_avg_baseline(batch_of(permuted).image,
                                                      batch_of(permuted).text)) == 0.0);
    }

    SUBCASE("single-node graphs average to the node itself") {
        // With one node per modality the mean equals the node, so two samples
        // with the same nodes yield identical logits regardless of id/label.
        Tensor img = random_tensor(rng, {1, 10});
        Tensor txt = random_tensor(rng, {1, 10});
        PairedSample a;
        a.id = "a";
        a.image_graph = make_graph(img, {});
        a.text_graph = make_graph(txt, {});
        a.label = 0;
        std::vector<PairedSample> sa = {a};
        PairedBatch batch = batch_of(sa);
        Tensor mean = per_graph_center(batch.image.structure, batch.image.features);
        CHECK(max_abs_diff(mean, img) == 0.0);
    }
}

TEST_CASE("logits stay finite on random data") {
    Rng rng(53);
    for (Variant v : all_variants()) {
        TwoBranchModel model(small_config(v), 59);
        for (int trial = 0; trial < 25; ++trial) {
            auto samples = random_samples(rng, 3, 10);
            PairedBatch batch = batch_of(samples);
            CHECK(model.predict(batch.image, batch.text).all_finite());
        }
    }
}

TEST_CASE("modality batch size mismatch is a contract error") {
    Rng rng(61);
    TwoBranchModel model(small_config(Variant::collaborative), 67);
    auto samples = random_samples(rng, 3, 10);
    auto fewer = std::vector<PairedSample>(samples.begin(), samples.begin() + 2);
    PairedBatch full = batch_of(samples);
    PairedBatch short_batch = batch_of(fewer);
    CHECK_THROWS_WITH_AS(model.forward(full.image, short_batch.text),
                         doctest::Contains("disagree"), Error);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    Rng rng(71);
    ModelConfig cfg = small_config(Variant::collaborative);
    cfg.mu_init = 0.25;
    TwoBranchModel model(cfg, 73);

    const std::string path1 = "test_model_ckpt_a.bin";
    const std::string path2 = "test_model_ckpt_b.bin";
    model.save(path1);
    TwoBranchModel loaded = TwoBranchModel::load(path1);
    loaded.save(path2);

    auto read_all = [](const std::string& p) {
        std::ifstream is(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
    };
    CHECK(read_all(path1) == read_all(path2));
    CHECK(read_all(path1).size() > 0);

    auto a = model.named_state();
    auto b = loaded.named_state();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].first == b[i].first);
        CHECK(a[i].second.vec() == b[i].second.vec());
    }
    CHECK(loaded.config().variant == Variant::collaborative);
    CHECK(loaded.config().mu_init == 0.25);

    // Same logits after reload.
    auto samples = random_samples(rng, 3, 10);
    PairedBatch batch = batch_of(samples);
    CHECK(max_abs_diff(model.forward(batch.image, batch.text),
                       loaded.forward(batch.image, batch.text)) == 0.0);

    std::remove(path1.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("checkpoint loading rejects foreign or truncated files") {
    {
        std::ofstream os("test_model_bogus.bin", std::ios::binary);
        os << "definitely not a checkpoint";
    }
    CHECK_THROWS_WITH_AS(TwoBranchModel::load("test_model_bogus.bin"),
                         doctest::Contains("not a model checkpoint"), Error);
    CHECK_THROWS_AS(TwoBranchModel::load("test_model_missing.bin"), Error);
    std::remove("test_model_bogus.bin");
}

TEST_CASE("variant names round-trip") {
    for (Variant v : all_variants()) {
        auto parsed = variant_from_name(variant_name(v));
        REQUIRE(parsed.has_value());
        CHECK(*parsed == v);
    }
    CHECK_FALSE(variant_from_name("bogus").has_value());
}
