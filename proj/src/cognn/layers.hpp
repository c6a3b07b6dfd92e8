#pragma once

#include <vector>

#include "cognn/graph.hpp"
#include "cognn/tensor.hpp"

namespace cognn {

class Rng;

// Graph convolution: ReLU(adj * H * W). Bias-free; the propagation operator
// is the fixed normalized adjacency and W is the only trainable part.
struct GcnLayer {
    Tensor weight;  // [C_in x C_out]

    static GcnLayer init(int in_dim, int out_dim, Rng& rng);
};

Tensor gcn_forward(const GcnLayer& layer, const NormalizedAdjacency& adj, const Tensor& h);

// Cross-branch fusion gate: one learnable scalar per layer per direction.
struct FusionLayer {
    Tensor mu;  // shape {1}

    static FusionLayer init(double mu_init);
};

// Adds mu * (other branch's graph center) to every node of this branch.
// centers_other is [G x C], one row per graph, broadcast by graph_id.
Tensor fuse(const Tensor& h_self, const Tensor& centers_other, const std::vector<int>& graph_id,
            const Tensor& mu);

// Single-graph convenience: center_other is [1 x C].
Tensor fuse(const Tensor& h_self, const Tensor& center_other, const Tensor& mu);

// Self-attention graph pooling: scores z = tanh(adj * H * w), keep the
// k = max(1, ceil(ratio * N)) highest-scoring nodes per graph (ties to the
// lower index), gate kept features by their scores, and re-normalize the
// induced subgraph (self-loops re-added, degrees recomputed).
struct SagPoolLayer {
    Tensor score_weight;  // [C x 1]
    double ratio = 0.8;

    static SagPoolLayer init(int dim, double ratio, Rng& rng);
};

struct PoolResult {
    Tensor features;           // [k_total x C], gated
    BatchStructure structure;  // induced + re-normalized
    std::vector<int> kept;     // original batch-local indices, ascending
};

// `gate` multiplies kept rows by their scores (the published formulation);
// turning it off reduces pooling at ratio 1.0 to the identity, which is how
// the no-pooling baseline is reproduced with transplanted weights.
PoolResult sag_pool(const SagPoolLayer& layer, const BatchStructure& structure, const Tensor& h,
                    bool gate = true);

// Number of nodes kept by pooling a graph of n nodes.
int pool_keep_count(double ratio, int n);

// Graph-level summary: columnwise max ++ columnwise mean.
Tensor readout(const Tensor& h);                                       // [1 x 2C]
Tensor readout_batch(const Tensor& h, const BatchStructure& structure);  // [G x 2C]

}  // namespace cognn
