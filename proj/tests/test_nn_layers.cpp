#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cognn/graph_build.hpp"
#include "cognn/layers.hpp"
#include "cognn/ops.hpp"
#include "cognn/rng.hpp"
#include "support.hpp"

using namespace cognn;
using testutil::max_abs_diff;
using testutil::random_tensor;

namespace {

GraphBatch single(const Graph& g) { return batch_graphs({&g}); }

std::vector<std::vector<double>> dense(const NormalizedAdjacency& a) {
    std::vector<std::vector<double>> m(a.n, std::vector<double>(a.n, 0.0));
    for (int i = 0; i < a.n; ++i) {
        for (int p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) m[i][a.col_idx[p]] = a.values[p];
    }
    return m;
}

// Relabels nodes by permutation perm (new index of old node i is perm[i]).
Graph permute_graph(const Graph& g, const std::vector<int>& perm) {
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
}

}  // namespace

TEST_CASE("gcn_forward basics") {
    Rng rng(2);

    SUBCASE("zero input gives zero output") {
        Graph g = make_graph(Tensor::zeros({3, 4}), {{0, 1}});
        // zero-feature rows are fine for the layer; build edges directly
        GcnLayer layer{random_tensor(rng, {4, 2}, true)};
        Tensor out = gcn_forward(layer, g.normalized(), g.node_features);
        for (double v : out.vec()) CHECK(v == 0.0);
    }

    SUBCASE("complete graph with constant rows and identity weight reproduces the input") {
        const int n = 4;
        std::vector<Edge> edges;
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) edges.push_back({i, j});
        }
        Tensor constant = Tensor::zeros({n, n});
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) constant.at(i, j) = 0.5 + 0.25 * j;
        }
        Graph g = make_graph(constant, edges);
        Tensor eye = Tensor::zeros({n, n});
        for (int i = 0; i < n; ++i) eye.at(i, i) = 1.0;
        Tensor out = gcn_forward(GcnLayer{eye}, g.normalized(), constant);
        CHECK(max_abs_diff(out, constant) <= 1e-13);
    }

    SUBCASE("matches an independent dense triple-product evaluation") {
        Graph g = make_graph(random_tensor(rng, {4, 3}), {{0, 1}, {1, 3}, {2, 3}});
        Tensor w = random_tensor(rng, {3, 2}, true);
        Tensor out = gcn_forward(GcnLayer{w}, g.normalized(), g.node_features);

        auto a = dense(g.normalized());
        for (int i = 0; i < 4; ++i) {
            for (int c = 0; c < 2; ++c) {
                double acc = 0.0;
                for (int j = 0; j < 4; ++j) {
                    for (int k = 0; k < 3; ++k) acc += a[i][j] * g.node_features.at(j, k) * w.at(k, c);
                }
                acc = std::max(0.0, acc);
                CHECK(std::abs(out.at(i, c) - acc) <= 1e-12);
            }
        }
    }

    SUBCASE("dimension mismatch is rejected") {
        Graph g = make_graph(random_tensor(rng, {3, 4}), {});
        GcnLayer layer{random_tensor(rng, {4, 2}, true)};
        CHECK_THROWS_AS(gcn_forward(layer, g.normalized(), Tensor::zeros({5, 4})), Error);
    }
}

TEST_CASE("gcn_forward is permutation equivariant") {
    Rng rng(13);
    Graph g = make_graph(random_tensor(rng, {5, 3}), {{0, 1}, {0, 4}, {2, 3}, {1, 2}});
    std::vector<int> perm = {3, 0, 4, 1, 2};
    Graph pg = permute_graph(g, perm);

    GcnLayer layer{random_tensor(rng, {3, 2}, true)};
    Tensor out = gcn_forward(layer, g.normalized(), g.node_features);
    Tensor pout = gcn_forward(layer, pg.normalized(), pg.node_features);

    for (int i = 0; i < 5; ++i) {
        for (int c = 0; c < 2; ++c) {
            CHECK(std::abs(pout.at(perm[i], c) - out.at(i, c)) <= 1e-12);
        }
    }
}

TEST_CASE("fuse follows the update rule") {
    SUBCASE("mu = 0 is the identity, including gradients") {
        Rng rng(8);
        Tensor h = random_tensor(rng, {3, 2}, true);
        Tensor center = random_tensor(rng, {1, 2}, true);
        Tensor mu = Tensor::scalar(0.0, true);
        Tensor r = random_tensor(rng, {3, 2});

        Tensor fused = fuse(h, center, mu);
        CHECK(max_abs_diff(fused, h) == 0.0);

        // d loss / d h must be identical with and without the fusion step.
        {
            Tape tape;
            tape.backward(ops::reduce_sum(ops::mul(fuse(h, center, mu), r)));
        }
        std::vector<double> with_fusion = h.grad_vec();
        h.clear_grad();
        {
            Tape tape;
            tape.backward(ops::reduce_sum(ops::mul(h, r)));
        }
        CHECK(with_fusion == h.grad_vec());
    }

    SUBCASE("mu = 1 adds the center") {
        Tensor out = fuse(Tensor::matrix({{0, 0}}), Tensor::matrix({{1, 1}}), Tensor::scalar(1.0));
        CHECK(out.at(0, 0) == 1.0);
        CHECK(out.at(0, 1) == 1.0);
    }

    SUBCASE("mu = 0.5 worked example") {
        Tensor out = fuse(Tensor::matrix({{1, 1}, {3, 3}}), Tensor::matrix({{2, 4}}), Tensor::scalar(0.5));
        CHECK(out.at(0, 0) == 2.0);
        CHECK(out.at(0, 1) == 3.0);
        CHECK(out.at(1, 0) == 4.0);
        CHECK(out.at(1, 1) == 5.0);
    }

    SUBCASE("feature dimension mismatch is rejected") {
        CHECK_THROWS_AS(fuse(Tensor::zeros({2, 3}), Tensor::zeros({1, 2}), Tensor::scalar(1.0)), Error);
    }
}

TEST_CASE("pool keep counts") {
    CHECK(pool_keep_count(0.8, 5) == 4);   // ceil(0.8 * 5) = 4 exactly
    CHECK(pool_keep_count(0.8, 1) == 1);
    CHECK(pool_keep_count(0.8, 2) == 2);
    CHECK(pool_keep_count(1.0, 7) == 7);
    CHECK(pool_keep_count(0.5, 3) == 2);
    CHECK(pool_keep_count(0.1, 4) == 1);   // floor of one node
}

TEST_CASE("sag_pool on a single node keeps it and scales by tanh of its score") {
    Graph g = make_graph(Tensor::matrix({{2.0, -1.0}}), {});
    GraphBatch batch = single(g);
    SagPoolLayer layer{Tensor::matrix({{0.5}, {0.25}}, true), 0.8};

    PoolResult p = sag_pool(layer, batch.structure, batch.features);
    CHECK(p.kept == std::vector<int>{0});
    // score = tanh(1.0 * (2*0.5 + (-1)*0.25)) with the self-loop-only operator
    const double z = std::tanh(2.0 * 0.5 - 1.0 * 0.25);
    CHECK(p.features.at(0, 0) == doctest::Approx(2.0 * z).epsilon(1e-15));
    CHECK(p.features.at(0, 1) == doctest::Approx(-1.0 * z).epsilon(1e-15));
}

TEST_CASE("sag_pool matches a scripted step-by-step oracle on a 3-node path") {
    // Path 0-1-2, hand-set weights, ratio 0.5 (keeps 2 of 3).
    Tensor h = Tensor::matrix({{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.5}}, true);
    Graph g = make_graph(h, {{0, 1}, {1, 2}});
    GraphBatch batch = single(g);
    SagPoolLayer layer{Tensor::matrix({{1.0}, {-0.5}}, true), 0.5};

    // Oracle: dense normalized adjacency of the path, explicit score and
    // gating arithmetic, independent of the layer implementation.
    auto a = dense(g.normalized());
    std::vector<double> score(3);
    for (int i = 0; i < 3; ++i) {
        double pre = 0.0;
        for (int j = 0; j < 3; ++j) pre += a[i][j] * (h.at(j, 0) * 1.0 + h.at(j, 1) * -0.5);
        score[i] = std::tanh(pre);
    }
    std::vector<int> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int x, int y) {
        if (score[x] != score[y]) return score[x] > score[y];
        return x < y;
    });
    std::vector<int> expect_kept = {order[0], order[1]};
    std::sort(expect_kept.begin(), expect_kept.end());

    PoolResult p = sag_pool(layer, batch.structure, batch.features);
    CHECK(p.kept == expect_kept);
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
            CHECK(p.features.at(r, c) ==
                  doctest::Approx(h.at(expect_kept[r], c) * score[expect_kept[r]]).epsilon(1e-14));
        }
    }

    // Induced adjacency is re-normalized from the kept original edges.
    std::vector<Edge> induced;
    for (const auto& [i, j] : g.edges) {
        auto pos_i = std::find(expect_kept.begin(), expect_kept.end(), i);
        auto pos_j = std::find(expect_kept.begin(), expect_kept.end(), j);
        if (pos_i != expect_kept.end() && pos_j != expect_kept.end()) {
            induced.push_back({static_cast<int>(pos_i - expect_kept.begin()),
                               static_cast<int>(pos_j - expect_kept.begin())});
        }
    }
    NormalizedAdjacency expect_adj = NormalizedAdjacency::build(2, induced);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) CHECK(p.structure.adj.entry(i, j) == expect_adj.entry(i, j));
    }
}

TEST_CASE("sag_pool with ratio 1 and gating off is the identity") {
    Rng rng(77);
    Graph g = build_graph(random_tensor(rng, {6, 4}));
    GraphBatch batch = single(g);
    SagPoolLayer layer{random_tensor(rng, {4, 1}, true), 1.0};

    PoolResult p = sag_pool(layer, batch.structure, batch.features, /*gate=*/false);
    CHECK(p.structure.node_count == 6);
    CHECK(p.structure.edges == batch.structure.edges);
    CHECK(max_abs_diff(p.features, batch.features) == 0.0);
}

TEST_CASE("sag_pool keeps per-graph counts within a batch") {
    Rng rng(31);
    Graph g1 = build_graph(random_tensor(rng, {5, 3}));
    Graph g2 = build_graph(random_tensor(rng, {3, 3}));
    GraphBatch batch = batch_graphs({&g1, &g2});
    SagPoolLayer layer{random_tensor(rng, {3, 1}, true), 0.8};

    PoolResult p = sag_pool(layer, batch.structure, batch.features);
    CHECK(p.structure.graph_count == 2);
    CHECK(p.structure.ranges[0].second - p.structure.ranges[0].first == 4);  // ceil(0.8*5)
    CHECK(p.structure.ranges[1].second - p.structure.ranges[1].first == 3);  // ceil(0.8*3)
    // No kept edge may cross the graph boundary.
    for (const auto& [i, j] : p.structure.edges) {
        CHECK(p.structure.graph_id[i] == p.structure.graph_id[j]);
    }
}

TEST_CASE("pooling selects the same original nodes under relabeling (distinct scores)") {
    Rng rng(41);
    Graph g = build_graph(random_tensor(rng, {6, 3}));
    std::vector<int> perm = {5, 2, 0, 4, 1, 3};
    Graph pg = permute_graph(g, perm);

    SagPoolLayer layer{random_tensor(rng, {3, 1}, true), 0.5};
    PoolResult p = sag_pool(layer, single(g).structure, single(g).features);
    PoolResult pp = sag_pool(layer, single(pg).structure, single(pg).features);

    // Map the kept original indices through the permutation: same node set.
    std::vector<int> mapped;
    for (int i : p.kept) mapped.push_back(perm[i]);
    std::sort(mapped.begin(), mapped.end());
    CHECK(mapped == pp.kept);

    // Readout over the pooled graph is invariant to the relabeling.
    Tensor r1 = readout(p.features);
    Tensor r2 = readout(pp.features);
    CHECK(max_abs_diff(r1, r2) <= 1e-12);
}

TEST_CASE("readout examples and invariance") {
    Tensor r = readout(Tensor::matrix({{1, 2}, {3, 0}}));
    CHECK(r.shape() == Shape{1, 4});
    CHECK(r.at(0, 0) == 3.0);
    CHECK(r.at(0, 1) == 2.0);
    CHECK(r.at(0, 2) == 2.0);
    CHECK(r.at(0, 3) == 1.0);

    Tensor s = readout(Tensor::matrix({{5, -7}}));
    CHECK(s.at(0, 0) == 5.0);
    CHECK(s.at(0, 1) == -7.0);
    CHECK(s.at(0, 2) == 5.0);
    CHECK(s.at(0, 3) == -7.0);

    // Exact invariance under row permutation.
    Rng rng(6);
    Tensor h = random_tensor(rng, {5, 3});
    Tensor hp = Tensor::zeros({5, 3});
    std::vector<int> perm = {4, 2, 0, 1, 3};
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 3; ++j) hp.at(perm[i], j) = h.at(i, j);
    }
    CHECK(max_abs_diff(readout(h), readout(hp)) == 0.0);
}
