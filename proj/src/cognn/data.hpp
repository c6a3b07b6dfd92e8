#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cognn/graph.hpp"

namespace cognn {

// On-disk limits mirrored from the corpus filtering rules: news with fewer
// than 3 images or 5 sentences are rejected, as are news with more than 8
// images.
constexpr int kMinImageNodes = 3;
constexpr int kMaxImageNodes = 8;
constexpr int kMinTextNodes = 5;

// Line-delimited JSON, one sample per line. Fields: id, label,
// image_features, text_features, and optionally image_edges/text_edges.
// When edges are absent they are built from the features (cosine top-50%);
// when present they are validated and trusted.
std::vector<PairedSample> load_dataset(const std::string& path);

// include_edges controls whether the computed edge lists are written.
void save_dataset(const std::vector<PairedSample>& samples, const std::string& path,
                  bool include_edges);

struct SynthSpec {
    std::int64_t n_samples = 0;
    int feature_dim = 256;
    double noise_sigma = 0.6;
    double cross_modal_strength = 0.8;  // in [0, 1]
    std::uint64_t seed = 0;

    void validate() const;
};

// Synthetic cross-modal corpus. Labels alternate (exactly balanced). Each
// class has a fixed prototype direction per modality (a weak single-modality
// signal). Per sample a unit latent direction is drawn; for label 1 both
// modalities carry the same latent, for label 0 they carry independent ones,
// each scaled by cross_modal_strength. The latent direction itself is random,
// so the agreement between modalities — not either latent alone — carries the
// extra signal that only a fused model can use. Gaussian node noise on top.
// Node counts: images uniform in [3, 8], texts uniform in [5, 20].
std::vector<PairedSample> generate_synthetic(const SynthSpec& spec);

// Seeded 80/10/10 split (train/val/test) by shuffled assignment.
struct DatasetSplit {
    std::vector<PairedSample> train;
    std::vector<PairedSample> val;
    std::vector<PairedSample> test;
};
DatasetSplit split_dataset(const std::vector<PairedSample>& samples, std::uint64_t seed);

}  // namespace cognn
