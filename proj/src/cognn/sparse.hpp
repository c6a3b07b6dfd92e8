#pragma once

#include <utility>
#include <vector>

namespace cognn {

using Edge = std::pair<int, int>;  // undirected, stored once with first < second

// Symmetrically normalized adjacency D^{-1/2} (A + I) D^{-1/2} in CSR form.
// Self-loops are always present, so the diagonal is strictly positive and
// every row is nonempty. The matrix is constant with respect to training.
struct NormalizedAdjacency {
    int n = 0;
    std::vector<int> row_ptr;   // size n + 1
    std::vector<int> col_idx;   // column index per stored entry, ascending per row
    std::vector<double> values;

    // Builds from an undirected edge list over `node_count` nodes. Edges must
    // be deduplicated (i < j) with indices in range; degrees are d_i + 1.
    static NormalizedAdjacency build(int node_count, const std::vector<Edge>& edges);

    // Entry lookup for tests/diagnostics; 0 where no entry is stored.
    double entry(int i, int j) const;

    std::size_t nonzeros() const { return values.size(); }
};

}  // namespace cognn
