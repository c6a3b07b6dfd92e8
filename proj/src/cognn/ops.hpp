#pragma once

#include <vector>

#include "cognn/sparse.hpp"
#include "cognn/tensor.hpp"

namespace cognn {

// Differentiable tensor operations. Each op computes its value eagerly and,
// when a Tape is active and an input requires grad, records a reverse rule
// that accumulates into the inputs' gradient buffers. Gradients are exact
// chain-rule products; reductions with ties (max) route the gradient to the
// lowest-index maximizer.
namespace ops {

// C = A * B for A [N x K], B [K x M].
Tensor matmul(const Tensor& a, const Tensor& b);

// Y = S * X for constant sparse S [N x N] and X [N x M]. S is not a
// differentiable input; the backward rule is dX += S^T dY.
Tensor spmm(const NormalizedAdjacency& s, const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);        // same shape
Tensor mul(const Tensor& a, const Tensor& b);        // elementwise, same shape
Tensor scale(const Tensor& a, double c);             // constant scalar
Tensor mul_scalar(const Tensor& a, const Tensor& s); // learnable scalar s, shape {1}
Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);

// [N x Ca], [N x Cb] -> [N x (Ca + Cb)].
Tensor concat_cols(const Tensor& a, const Tensor& b);

// out[r, :] = a[indices[r], :]; repeated indices accumulate on backward.
Tensor row_select(const Tensor& a, const std::vector<int>& indices);

// out[i, c] = a[i, c] * z[i] for z [N x 1] (the pooling gate).
Tensor mul_col_broadcast(const Tensor& a, const Tensor& z);

// out[i, :] = a[i, :] + b[0, :] for bias b [1 x C].
Tensor add_row_broadcast(const Tensor& a, const Tensor& b);

// Grouped row reductions over a sorted, contiguous group id vector
// (values in [0, group_count)). These realize per-graph centers and readout
// on block-diagonal batches.
Tensor group_mean_rows(const Tensor& a, const std::vector<int>& group_id, int group_count);
Tensor group_max_rows(const Tensor& a, const std::vector<int>& group_id, int group_count);

// out[i, :] = rows[group_id[i], :] — broadcast one row per group to its nodes.
Tensor expand_rows(const Tensor& rows, const std::vector<int>& group_id);

// Whole-tensor reductions.
Tensor reduce_sum(const Tensor& a);                 // -> {1}
Tensor reduce_mean_rows(const Tensor& a);           // [N x C] -> [1 x C]
Tensor reduce_max_rows(const Tensor& a);            // [N x C] -> [1 x C]

// Mean over the batch of -log softmax(logits)[label]. Labels must lie in
// [0, n_classes). Gradient is (softmax - onehot) / batch.
Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

}  // namespace ops

}  // namespace cognn
