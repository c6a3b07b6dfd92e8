#include "cognn/data.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "cognn/graph_build.hpp"
#include "cognn/rng.hpp"

namespace cognn {

namespace {

using json = nlohmann::ordered_json;

Tensor features_from_json(const json& arr, const char* field, int line_no, const std::string& id) {
    auto where = [&]() {
        return "line " + std::to_string(line_no) + " (id '" + id + "'): " + std::string(field);
    };
    if (!arr.is_array() || arr.empty()) {
        fail(Error::Code::format, where() + " must be a nonempty array of vectors");
    }
    const std::size_t dim = arr[0].is_array() ? arr[0].size() : 0;
    if (dim == 0) fail(Error::Code::format, where() + " vectors must be nonempty");
    std::vector<double> data;
    data.reserve(arr.size() * dim);
    for (const auto& row : arr) {
        if (!row.is_array() || row.size() != dim) {
            fail(Error::Code::format, where() + " vectors must all have length " + std::to_string(dim));
        }
        for (const auto& v : row) {
            if (!v.is_number()) fail(Error::Code::format, where() + " contains a non-numeric entry");
            data.push_back(v.get<double>());
        }
    }
    return Tensor::from_data({static_cast<int>(arr.size()), static_cast<int>(dim)}, std::move(data));
}

std::vector<Edge> edges_from_json(const json& arr, const char* field, int line_no, const std::string& id) {
    std::vector<Edge> edges;
    if (!arr.is_array()) {
        fail(Error::Code::format,
             "line " + std::to_string(line_no) + " (id '" + id + "'): " + field + " must be an array of [i, j] pairs");
    }
    edges.reserve(arr.size());
    for (const auto& e : arr) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
            fail(Error::Code::format,
                 "line " + std::to_string(line_no) + " (id '" + id + "'): " + field + " entries must be [i, j] integer pairs");
        }
        edges.push_back({e[0].get<int>(), e[1].get<int>()});
    }
    return edges;
}

}  // namespace

std::vector<PairedSample> load_dataset(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(Error::Code::io, "cannot open dataset: " + path);

    std::vector<PairedSample> samples;
    std::string line;
    int line_no = 0;
    int image_dim = -1, text_dim = -1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            fail(Error::Code::format, "line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
        }
        if (!record.is_object()) {
            fail(Error::Code::format, "line " + std::to_string(line_no) + ": record must be a JSON object");
        }

        const std::string id = record.contains("id") && record["id"].is_string()
                                   ? record["id"].get<std::string>()
                                   : "";
        if (id.empty()) {
            fail(Error::Code::format, "line " + std::to_string(line_no) + ": missing or empty 'id'");
        }
        if (!record.contains("label") || !record["label"].is_number_integer()) {
            fail(Error::Code::format, "line " + std::to_string(line_no) + " (id '" + id + "'): missing integer 'label'");
        }
        const int label = record["label"].get<int>();
        if (label != 0 && label != 1) {
            fail(Error::Code::format,
                 "line " + std::to_string(line_no) + " (id '" + id + "'): label must be 0 or 1, got " +
                     std::to_string(label));
        }
        for (const char* field : {"image_features", "text_features"}) {
            if (!record.contains(field)) {
                fail(Error::Code::format,
                     "line " + std::to_string(line_no) + " (id '" + id + "'): missing '" + field + "'");
            }
        }

        Tensor image_feats = features_from_json(record["image_features"], "image_features", line_no, id);
        Tensor text_feats = features_from_json(record["text_features"], "text_features", line_no, id);

        if (image_feats.rows() < kMinImageNodes) {
            fail(Error::Code::format,
                 "line " + std::to_string(line_no) + " (id '" + id + "'): image count below minimum " +
                     std::to_string(kMinImageNodes));
        }
        if (image_feats.rows() > kMaxImageNodes) {
            fail(Error::Code::format,
                 "line " + std::to_string(line_no) + " (id '" + id + "'): image count above maximum " +
                     std::to_string(kMaxImageNodes));
        }
        if (text_feats.rows() < kMinTextNodes) {
            fail(Error::Code::format,
                 "line " + std::to_string(line_no) + " (id '" + id + "'): text count below minimum " +
                     std::to_string(kMinTextNodes));
        }
        if (image_dim < 0) {
            image_dim = image_feats.cols();
            text_dim = text_feats.cols();
        } else if (image_feats.cols() != image_dim || text_feats.cols() != text_dim) {
            fail(Error::Code::format,
                 "line " + std::to_string(line_no) + " (id '" + id + "'): feature dimension differs from corpus (" +
                     std::to_string(image_dim) + "/" + std::to_string(text_dim) + " expected)");
        }

        try {
            PairedSample sample;
            sample.id = id;
            sample.label = label;
            if (record.contains("image_edges")) {
                sample.image_graph = make_graph(
                    image_feats, edges_from_json(record["image_edges"], "image_edges", line_no, id));
            } else {
                sample.image_graph = build_graph(image_feats);
            }
            if (record.contains("text_edges")) {
                sample.text_graph = make_graph(
                    text_feats, edges_from_json(record["text_edges"], "text_edges", line_no, id));
            } else {
                sample.text_graph = build_graph(text_feats);
            }
            samples.push_back(std::move(sample));
        } catch (const Error& e) {
            fail(Error::Code::format,
                 "line " + std::to_string(line_no) + " (id '" + id + "'): " + e.what());
        }
    }
    return samples;
}

void save_dataset(const std::vector<PairedSample>& samples, const std::string& path,
                  bool include_edges) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) fail(Error::Code::io, "cannot open dataset for writing: " + path);

    for (const PairedSample& sample : samples) {
        json record;
        record["id"] = sample.id;
        record["label"] = sample.label;
        auto features_to_json = [](const Tensor& t) {
            json rows = json::array();
            for (int i = 0; i < t.rows(); ++i) {
                json row = json::array();
                for (int j = 0; j < t.cols(); ++j) row.push_back(t.at(i, j));
                rows.push_back(std::move(row));
            }
            return rows;
        };
        record["image_features"] = features_to_json(sample.image_graph.node_features);
        record["text_features"] = features_to_json(sample.text_graph.node_features);
        if (include_edges) {
            auto edges_to_json = [](const std::vector<Edge>& edges) {
                json arr = json::array();
                for (const auto& [i, j] : edges) arr.push_back(json::array({i, j}));
                return arr;
            };
            record["image_edges"] = edges_to_json(sample.image_graph.edges);
            record["text_edges"] = edges_to_json(sample.text_graph.edges);
        }
        os << record.dump() << "\n";
    }
    if (!os) fail(Error::Code::io, "failed writing dataset: " + path);
}

void SynthSpec::validate() const {
    if (n_samples < 0) fail(Error::Code::invalid_argument, "n_samples must be non-negative");
    if (feature_dim < 1) fail(Error::Code::invalid_argument, "feature_dim must be positive");
    if (noise_sigma < 0.0) fail(Error::Code::invalid_argument, "noise_sigma must be non-negative");
    if (cross_modal_strength < 0.0 || cross_modal_strength > 1.0) {
        fail(Error::Code::invalid_argument, "cross_modal_strength must lie in [0, 1]");
    }
}

namespace {

// Strength of the per-class prototype directions. Deliberately weak relative
// to the latent component so single-modality models stay well below the
// ceiling that cross-modal agreement unlocks.
constexpr double kPrototypeScale = 0.08;

// The shared latents live in a low-dimensional subspace. Two effects, both
// intended: samples cannot be told apart (memorized) by their latent
// direction alone, and the branches only need to align a handful of
// directions to expose the agreement signal.
constexpr int kLatentDim = 4;

std::vector<double> unit_vector(Rng& rng, int dim) {
    std::vector<double> v = rng.normal_vector(static_cast<std::size_t>(dim));
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    while (norm < 1e-12) {  // unreachable in practice
        v = rng.normal_vector(static_cast<std::size_t>(dim));
        norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
    }
    for (double& x : v) x /= norm;
    return v;
}

// Orthonormal basis of the latent subspace (Gram-Schmidt on random draws).
std::vector<std::vector<double>> latent_basis(Rng& rng, int dim, int count) {
    std::vector<std::vector<double>> basis;
    while (static_cast<int>(basis.size()) < count) {
        std::vector<double> v = rng.normal_vector(static_cast<std::size_t>(dim));
        for (const auto& b : basis) {
            double dot = 0.0;
            for (int j = 0; j < dim; ++j) dot += v[j] * b[j];
            for (int j = 0; j < dim; ++j) v[j] -= dot * b[j];
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-8) continue;
        for (double& x : v) x /= norm;
        basis.push_back(std::move(v));
    }
    return basis;
}

std::vector<double> draw_latent(Rng& rng, const std::vector<std::vector<double>>& basis, int dim) {
    std::vector<double> coeff = rng.normal_vector(basis.size());
    double norm = 0.0;
    for (double x : coeff) norm += x * x;
    norm = std::sqrt(norm);
    while (norm < 1e-12) {
        coeff = rng.normal_vector(basis.size());
        norm = 0.0;
        for (double x : coeff) norm += x * x;
        norm = std::sqrt(norm);
    }
    std::vector<double> u(dim, 0.0);
    for (std::size_t k = 0; k < basis.size(); ++k) {
        const double ck = coeff[k] / norm;
        for (int j = 0; j < dim; ++j) u[j] += ck * basis[k][j];
    }
    return u;
}

Tensor draw_nodes(Rng& rng, int count, const std::vector<double>& prototype,
                  const std::vector<double>& latent, double strength, double sigma) {
    const int dim = static_cast<int>(prototype.size());
    Tensor t = Tensor::zeros({count, dim});
    for (int i = 0; i < count; ++i) {
        double* row = t.data() + static_cast<std::size_t>(i) * dim;
        for (int j = 0; j < dim; ++j) {
            row[j] = kPrototypeScale * prototype[j] + strength * latent[j] + sigma * rng.normal();
        }
    }
    return t;
}

}  // namespace

std::vector<PairedSample> generate_synthetic(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    const int dim = spec.feature_dim;
    std::vector<std::vector<double>> proto_img = {unit_vector(rng, dim), unit_vector(rng, dim)};
    std::vector<std::vector<double>> proto_txt = {unit_vector(rng, dim), unit_vector(rng, dim)};
    const auto basis = latent_basis(rng, dim, std::min(kLatentDim, dim));

    std::vector<PairedSample> samples;
    samples.reserve(static_cast<std::size_t>(spec.n_samples));
    for (std::int64_t i = 0; i < spec.n_samples; ++i) {
        const int label = static_cast<int>(i % 2);  // exactly balanced
        // Label 1: modalities share the latent; label 0: they carry opposite
        // ones. Either way the marginal of each latent is symmetric, so a
        // single modality learns nothing from it.
        const std::vector<double> latent_img = draw_latent(rng, basis, dim);
        std::vector<double> latent_txt = latent_img;
        if (label == 0) {
            for (double& x : latent_txt) x = -x;
        }
        const int n_img = rng.uniform_int(kMinImageNodes, kMaxImageNodes);
        const int n_txt = rng.uniform_int(kMinTextNodes, 20);

        Tensor image_feats = draw_nodes(rng, n_img, proto_img[label], latent_img,
                                        spec.cross_modal_strength, spec.noise_sigma);
        Tensor text_feats = draw_nodes(rng, n_txt, proto_txt[label], latent_txt,
                                       spec.cross_modal_strength, spec.noise_sigma);

        std::ostringstream id;
        id << "synth-" << std::setw(6) << std::setfill('0') << i;
        samples.push_back(build_sample(std::move(image_feats), std::move(text_feats), label, id.str()));
    }
    return samples;
}

DatasetSplit split_dataset(const std::vector<PairedSample>& samples, std::uint64_t seed) {
    std::vector<int> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    Rng rng(seed);
    rng.shuffle(order);

    const auto n = static_cast<std::int64_t>(samples.size());
    const auto n_train = static_cast<std::int64_t>(std::llround(0.8 * static_cast<double>(n)));
    auto n_val = static_cast<std::int64_t>(std::llround(0.1 * static_cast<double>(n)));
    if (n_train + n_val > n) n_val = n - n_train;

    DatasetSplit split;
    for (std::int64_t i = 0; i < n; ++i) {
        const PairedSample& s = samples[order[i]];
        if (i < n_train) {
            split.train.push_back(s);
        } else if (i < n_train + n_val) {
            split.val.push_back(s);
        } else {
            split.test.push_back(s);
        }
    }
    return split;
}

}  // namespace cognn
