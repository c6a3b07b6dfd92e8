#pragma once

#include <string>
#include <vector>

#include "cognn/graph.hpp"

namespace cognn {

// a.b / (|a||b|). Both vectors must have positive norm; `node` is only used
// to name the offender in the error message.
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b,
                         int node_a = -1, int node_b = -1);

// Builds the edge set from pairwise cosine similarities: all N(N-1)/2 pairs
// are ranked descending (ties broken by lexicographic (i, j)) and the top
// ceil(P/2) become edges of weight one. N = 1 yields no edges; N = 2 always
// yields the single edge.
Graph build_graph(const Tensor& node_features);

// Applies build_graph independently per modality.
PairedSample build_sample(Tensor image_features, Tensor text_features, int label, std::string id);

}  // namespace cognn
