#include "cognn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cognn/ops.hpp"

namespace cognn {

NormalizedAdjacency NormalizedAdjacency::build(int node_count, const std::vector<Edge>& edges) {
    if (node_count < 1) {
        fail(Error::Code::invalid_argument, "adjacency requires at least one node");
    }
    std::vector<int> degree(node_count, 1);  // self-loop
    for (const auto& [i, j] : edges) {
        if (i < 0 || j < 0 || i >= node_count || j >= node_count) {
            fail(Error::Code::invalid_argument,
                 "edge (" + std::to_string(i) + ", " + std::to_string(j) + ") out of range for " +
                     std::to_string(node_count) + " nodes");
        }
        if (i >= j) {
            fail(Error::Code::invalid_argument,
                 "edge (" + std::to_string(i) + ", " + std::to_string(j) + ") must satisfy i < j");
        }
        ++degree[i];
        ++degree[j];
    }

    std::vector<double> inv_sqrt(node_count);
    for (int i = 0; i < node_count; ++i) inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(degree[i]));

    // Neighbor lists including the self-loop, sorted per row.
    std::vector<std::vector<int>> neighbors(node_count);
    for (int i = 0; i < node_count; ++i) neighbors[i].push_back(i);
    for (const auto& [i, j] : edges) {
        neighbors[i].push_back(j);
        neighbors[j].push_back(i);
    }

    NormalizedAdjacency out;
    out.n = node_count;
    out.row_ptr.assign(node_count + 1, 0);
    for (int i = 0; i < node_count; ++i) {
        std::sort(neighbors[i].begin(), neighbors[i].end());
        out.row_ptr[i + 1] = out.row_ptr[i] + static_cast<int>(neighbors[i].size());
    }
    out.col_idx.reserve(out.row_ptr.back());
    out.values.reserve(out.row_ptr.back());
    for (int i = 0; i < node_count; ++i) {
        for (int j : neighbors[i]) {
            out.col_idx.push_back(j);
            out.values.push_back(inv_sqrt[i] * inv_sqrt[j]);
        }
    }
    return out;
}

double NormalizedAdjacency::entry(int i, int j) const {
    if (i < 0 || j < 0 || i >= n || j >= n) {
        fail(Error::Code::invalid_argument, "adjacency entry index out of range");
    }
    for (int p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
        if (col_idx[p] == j) return values[p];
    }
    return 0.0;
}

int Graph::feature_dim() const { return node_features.cols(); }

void Graph::validate() const {
    if (!node_features.defined() || !node_features.is_matrix()) {
        fail(Error::Code::invalid_argument, "graph node features must be a matrix");
    }
    if (node_count < 1) {
        fail(Error::Code::invalid_argument, "graph must have at least one node");
    }
    if (node_features.rows() != node_count) {
        fail(Error::Code::invalid_argument,
             "node count " + std::to_string(node_count) + " does not match feature rows " +
                 std::to_string(node_features.rows()));
    }
    std::set<Edge> seen;
    for (const auto& [i, j] : edges) {
        if (i >= j) {
            fail(Error::Code::invalid_argument,
                 "edge (" + std::to_string(i) + ", " + std::to_string(j) + ") is not ordered i < j (self-pairs forbidden)");
        }
        if (j >= node_count || i < 0) {
            fail(Error::Code::invalid_argument,
                 "edge (" + std::to_string(i) + ", " + std::to_string(j) + ") out of range for " +
                     std::to_string(node_count) + " nodes");
        }
        if (!seen.insert({i, j}).second) {
            fail(Error::Code::invalid_argument,
                 "duplicate edge (" + std::to_string(i) + ", " + std::to_string(j) + ")");
        }
    }
}

const NormalizedAdjacency& Graph::normalized() const {
    if (!norm_adj) {
        norm_adj = std::make_shared<const NormalizedAdjacency>(normalize_adjacency(*this));
    }
    return *norm_adj;
}

Graph make_graph(Tensor node_features, std::vector<Edge> edges) {
    Graph g;
    g.node_count = node_features.is_matrix() ? node_features.rows() : 0;
    g.node_features = std::move(node_features);
    g.edges = std::move(edges);
    g.validate();
    g.normalized();
    return g;
}

NormalizedAdjacency normalize_adjacency(const Graph& g) {
    g.validate();
    return NormalizedAdjacency::build(g.node_count, g.edges);
}

void PairedSample::validate() const {
    image_graph.validate();
    text_graph.validate();
    if (label != 0 && label != 1) {
        fail(Error::Code::invalid_argument, "sample '" + id + "': label must be 0 or 1, got " + std::to_string(label));
    }
}

GraphBatch batch_graphs(const std::vector<const Graph*>& graphs) {
    if (graphs.empty()) {
        fail(Error::Code::invalid_argument, "batch_graphs: empty graph list");
    }
    const int dim = graphs.front()->feature_dim();
    int total_nodes = 0;
    for (const Graph* g : graphs) {
        if (g->feature_dim() != dim) {
            fail(Error::Code::invalid_argument,
                 "batch_graphs: mixed feature dimensions " + std::to_string(dim) + " vs " +
                     std::to_string(g->feature_dim()));
        }
        total_nodes += g->node_count;
    }

    GraphBatch batch;
    BatchStructure& s = batch.structure;
    s.node_count = total_nodes;
    s.graph_count = static_cast<int>(graphs.size());
    s.graph_id.reserve(total_nodes);
    s.ranges.reserve(graphs.size());

    batch.features = Tensor::zeros({total_nodes, dim});
    double* fd = batch.features.data();

    // Per-graph normalized blocks are reused verbatim: block-diagonal
    // assembly cannot change any degree.
    s.adj.n = total_nodes;
    s.adj.row_ptr.assign(total_nodes + 1, 0);

    int offset = 0;
    int g_index = 0;
    for (const Graph* g : graphs) {
        const NormalizedAdjacency& block = g->normalized();
        for (int i = 0; i < g->node_count; ++i) {
            s.graph_id.push_back(g_index);
            const double* src = g->node_features.data() + static_cast<std::size_t>(i) * dim;
            std::copy(src, src + dim, fd + static_cast<std::size_t>(offset + i) * dim);
            s.adj.row_ptr[offset + i + 1] =
                s.adj.row_ptr[offset + i] + (block.row_ptr[i + 1] - block.row_ptr[i]);
        }
        for (std::size_t p = 0; p < block.col_idx.size(); ++p) {
            s.adj.col_idx.push_back(block.col_idx[p] + offset);
            s.adj.values.push_back(block.values[p]);
        }
        for (const auto& [i, j] : g->edges) s.edges.push_back({i + offset, j + offset});
        s.ranges.push_back({offset, offset + g->node_count});
        offset += g->node_count;
        ++g_index;
    }
    return batch;
}

Tensor per_graph_center(const BatchStructure& structure, const Tensor& features) {
    if (features.rows() != structure.node_count) {
        fail(Error::Code::invalid_argument,
             "per_graph_center: feature rows " + std::to_string(features.rows()) +
                 " do not match batch node count " + std::to_string(structure.node_count));
    }
    return ops::group_mean_rows(features, structure.graph_id, structure.graph_count);
}

}  // namespace cognn
