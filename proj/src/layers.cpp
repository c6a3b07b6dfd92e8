#include "cognn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cognn/ops.hpp"
#include "cognn/rng.hpp"

namespace cognn {

GcnLayer GcnLayer::init(int in_dim, int out_dim, Rng& rng) {
    return GcnLayer{Tensor::glorot(in_dim, out_dim, rng)};
}

Tensor gcn_forward(const GcnLayer& layer, const NormalizedAdjacency& adj, const Tensor& h) {
    if (h.rows() != adj.n) {
        fail(Error::Code::invalid_argument,
             "gcn_forward: adjacency over " + std::to_string(adj.n) + " nodes, features " +
                 shape_to_string(h.shape()));
    }
    return ops::relu(ops::matmul(ops::spmm(adj, h), layer.weight));
}

FusionLayer FusionLayer::init(double mu_init) {
    return FusionLayer{Tensor::scalar(mu_init, true)};
}

Tensor fuse(const Tensor& h_self, const Tensor& centers_other, const std::vector<int>& graph_id,
            const Tensor& mu) {
    if (centers_other.cols() != h_self.cols()) {
        fail(Error::Code::invalid_argument,
             "fuse: feature dimensions disagree, " + shape_to_string(h_self.shape()) + " vs center " +
                 shape_to_string(centers_other.shape()));
    }
    return ops::add(h_self, ops::mul_scalar(ops::expand_rows(centers_other, graph_id), mu));
}

Tensor fuse(const Tensor& h_self, const Tensor& center_other, const Tensor& mu) {
    return fuse(h_self, center_other, std::vector<int>(h_self.rows(), 0), mu);
}

SagPoolLayer SagPoolLayer::init(int dim, double ratio, Rng& rng) {
    if (ratio <= 0.0 || ratio > 1.0) {
        fail(Error::Code::invalid_argument, "pooling ratio must lie in (0, 1], got " + std::to_string(ratio));
    }
    return SagPoolLayer{Tensor::glorot(dim, 1, rng), ratio};
}

int pool_keep_count(double ratio, int n) {
    // ceil(ratio * n), guarded against FP noise so e.g. 0.8 * 5 keeps 4.
    int k = static_cast<int>(std::ceil(ratio * n - 1e-9));
    k = std::max(1, std::min(n, k));
    return k;
}

PoolResult sag_pool(const SagPoolLayer& layer, const BatchStructure& structure, const Tensor& h,
                    bool gate) {
    if (h.rows() != structure.node_count) {
        fail(Error::Code::invalid_argument,
             "sag_pool: feature rows " + std::to_string(h.rows()) + " do not match batch node count " +
                 std::to_string(structure.node_count));
    }
    Tensor scores = ops::tanh(ops::matmul(ops::spmm(structure.adj, h), layer.score_weight));

    // Top-k selection per graph on score values; the selection itself is a
    // discrete decision and carries no gradient (the gate does).
    const double* z = scores.data();
    std::vector<int> kept;
    kept.reserve(structure.node_count);
    std::vector<std::pair<int, int>> new_ranges;
    new_ranges.reserve(structure.graph_count);
    std::vector<int> new_graph_id;
    for (int g = 0; g < structure.graph_count; ++g) {
        const auto [begin, end] = structure.ranges[g];
        const int n = end - begin;
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), begin);
        std::sort(order.begin(), order.end(), [z](int a, int b) {
            if (z[a] != z[b]) return z[a] > z[b];
            return a < b;
        });
        const int k = pool_keep_count(layer.ratio, n);
        order.resize(k);
        std::sort(order.begin(), order.end());
        const int out_begin = static_cast<int>(kept.size());
        kept.insert(kept.end(), order.begin(), order.end());
        new_ranges.push_back({out_begin, out_begin + k});
        for (int i = 0; i < k; ++i) new_graph_id.push_back(g);
    }

    // Old batch index -> new index, -1 for dropped nodes.
    std::vector<int> remap(structure.node_count, -1);
    for (std::size_t i = 0; i < kept.size(); ++i) remap[kept[i]] = static_cast<int>(i);

    PoolResult result;
    Tensor h_kept = ops::row_select(h, kept);
    if (gate) {
        result.features = ops::mul_col_broadcast(h_kept, ops::row_select(scores, kept));
    } else {
        result.features = h_kept;
    }

    BatchStructure& s = result.structure;
    s.node_count = static_cast<int>(kept.size());
    s.graph_count = structure.graph_count;
    s.graph_id = std::move(new_graph_id);
    s.ranges = std::move(new_ranges);
    for (const auto& [i, j] : structure.edges) {
        if (remap[i] >= 0 && remap[j] >= 0) {
            s.edges.push_back({std::min(remap[i], remap[j]), std::max(remap[i], remap[j])});
        }
    }
    std::sort(s.edges.begin(), s.edges.end());
    s.adj = NormalizedAdjacency::build(s.node_count, s.edges);
    result.kept = std::move(kept);
    return result;
}

Tensor readout_batch(const Tensor& h, const BatchStructure& structure) {
    return ops::concat_cols(ops::group_max_rows(h, structure.graph_id, structure.graph_count),
                            ops::group_mean_rows(h, structure.graph_id, structure.graph_count));
}

Tensor readout(const Tensor& h) {
    if (!h.is_matrix() || h.rows() < 1) {
        fail(Error::Code::contract, "readout: need at least one node row");
    }
    return ops::concat_cols(ops::reduce_max_rows(h), ops::reduce_mean_rows(h));
}

}  // namespace cognn
