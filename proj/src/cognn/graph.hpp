#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cognn/sparse.hpp"
#include "cognn/tensor.hpp"

namespace cognn {

// One modality of one sample: node features plus an undirected edge list.
// Edges are stored once as (i < j) pairs; self-loops enter only through the
// A + I term of normalization. Immutable after construction.
struct Graph {
    Tensor node_features;          // [N x C]
    std::vector<Edge> edges;       // deduplicated, i < j, indices < N
    int node_count = 0;

    // Normalization is constant w.r.t. training, so it is computed once at
    // construction and shared. Mutable only for the lazy fallback when a
    // Graph is aggregate-initialized without make_graph.
    mutable std::shared_ptr<const NormalizedAdjacency> norm_adj;

    int feature_dim() const;
    void validate() const;
    // Computes and caches the normalized adjacency if absent.
    const NormalizedAdjacency& normalized() const;
};

Graph make_graph(Tensor node_features, std::vector<Edge> edges);

// D^{-1/2} (A + I) D^{-1/2} with degrees d_i = 1 + |neighbors(i)|.
NormalizedAdjacency normalize_adjacency(const Graph& g);

// One news item: the paired image/text graphs and the binary label
// (1 = marketing intention).
struct PairedSample {
    std::string id;
    Graph image_graph;
    Graph text_graph;
    int label = 0;

    void validate() const;
};

// Block-diagonal structure of a batch of graphs: which node belongs to which
// graph, the batched normalized adjacency, and the (batch-local) edges needed
// to induce subgraphs when pooling.
struct BatchStructure {
    int node_count = 0;
    int graph_count = 0;
    std::vector<Edge> edges;                    // batch-local indices
    NormalizedAdjacency adj;
    std::vector<int> graph_id;                  // per node, sorted contiguous
    std::vector<std::pair<int, int>> ranges;    // per graph [begin, end)
};

struct GraphBatch {
    Tensor features;  // [(sum N) x C]
    BatchStructure structure;

    int graph_count() const { return structure.graph_count; }
};

// Stacks graphs block-diagonally. A layer applied to the batch equals the
// stacked per-graph applications: no edge crosses a block boundary and the
// per-block degrees are unchanged.
GraphBatch batch_graphs(const std::vector<const Graph*>& graphs);

// Row g = mean of feature rows owned by graph g (the graph center).
Tensor per_graph_center(const BatchStructure& structure, const Tensor& features);

}  // namespace cognn
