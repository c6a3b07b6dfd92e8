#include "cognn/graph_build.hpp"

#include <algorithm>
#include <cmath>

namespace cognn {

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b,
                         int node_a, int node_b) {
    if (a.size() != b.size()) {
        fail(Error::Code::invalid_argument,
             "cosine_similarity: vector lengths disagree, " + std::to_string(a.size()) + " vs " +
                 std::to_string(b.size()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0) {
        fail(Error::Code::invalid_argument,
             "cosine_similarity: zero-norm feature vector at node " + std::to_string(node_a));
    }
    if (nb == 0.0) {
        fail(Error::Code::invalid_argument,
             "cosine_similarity: zero-norm feature vector at node " + std::to_string(node_b));
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

Graph build_graph(const Tensor& node_features) {
    if (!node_features.is_matrix() || node_features.rows() < 1) {
        fail(Error::Code::invalid_argument, "build_graph: need at least one node feature row");
    }
    const int n = node_features.rows();
    const int c = node_features.cols();

    // Precompute norms once; report zero-norm nodes before any pairing.
    std::vector<double> norms(n);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        const double* row = node_features.data() + static_cast<std::size_t>(i) * c;
        for (int j = 0; j < c; ++j) acc += row[j] * row[j];
        if (acc == 0.0) {
            fail(Error::Code::invalid_argument,
                 "build_graph: zero-norm feature vector at node " + std::to_string(i));
        }
        norms[i] = std::sqrt(acc);
    }

    struct ScoredPair {
        double sim;
        int i, j;
    };
    std::vector<ScoredPair> pairs;
    pairs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i) {
        const double* ri = node_features.data() + static_cast<std::size_t>(i) * c;
        for (int j = i + 1; j < n; ++j) {
            const double* rj = node_features.data() + static_cast<std::size_t>(j) * c;
            double dot = 0.0;
            for (int k = 0; k < c; ++k) dot += ri[k] * rj[k];
            pairs.push_back({dot / (norms[i] * norms[j]), i, j});
        }
    }

    // Descending by similarity; ties resolve by lexicographic (i, j) so the
    // result is independent of the enumeration order.
    std::sort(pairs.begin(), pairs.end(), [](const ScoredPair& a, const ScoredPair& b) {
        if (a.sim != b.sim) return a.sim > b.sim;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });

    const std::size_t p = pairs.size();
    const std::size_t keep = (p + 1) / 2;  // ceil(P/2)
    std::vector<Edge> edges;
    edges.reserve(keep);
    for (std::size_t k = 0; k < keep; ++k) edges.push_back({pairs[k].i, pairs[k].j});
    std::sort(edges.begin(), edges.end());

    return make_graph(node_features, std::move(edges));
}

PairedSample build_sample(Tensor image_features, Tensor text_features, int label, std::string id) {
    if (!image_features.defined() || !image_features.is_matrix() || image_features.rows() < 1) {
        fail(Error::Code::invalid_argument, "build_sample '" + id + "': empty image modality");
    }
    if (!text_features.defined() || !text_features.is_matrix() || text_features.rows() < 1) {
        fail(Error::Code::invalid_argument, "build_sample '" + id + "': empty text modality");
    }
    PairedSample sample;
    sample.id = std::move(id);
    sample.label = label;
    sample.image_graph = build_graph(image_features);
    sample.text_graph = build_graph(text_features);
    sample.validate();
    return sample;
}

}  // namespace cognn
