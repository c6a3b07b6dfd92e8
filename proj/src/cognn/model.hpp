#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cognn/graph.hpp"
#include "cognn/layers.hpp"

namespace cognn {

// The full collaborative network plus the five comparison baselines, all
// behind one interface.
enum class Variant {
    collaborative,       // GCN + cross-branch fusion + SAGPool per block
    two_branch_sagpool,  // fusion removed
    two_branch_plain,    // fusion and pooling removed
    image_only,          // single branch (GCN + SAGPool)
    text_only,
    two_branch_avg,      // per-modality feature averaging, no graph structure
};

const char* variant_name(Variant v);
std::optional<Variant> variant_from_name(std::string_view name);
std::vector<Variant> all_variants();

struct ModelConfig {
    int input_dim = 256;
    std::vector<int> gcn_dims = {64, 32};
    double pooling_ratio = 0.8;
    std::vector<int> fc_hidden = {64, 32};
    int num_classes = 2;
    double mu_init = 1.0;
    // Score gating inside SAGPool. Disabled (with ratio 1.0) pooling becomes
    // the identity, which reproduces the no-pooling baseline exactly.
    bool pool_gating = true;
    Variant variant = Variant::collaborative;

    bool uses_graphs() const { return variant != Variant::two_branch_avg; }
    bool uses_fusion() const { return variant == Variant::collaborative; }
    bool uses_pooling() const;
    bool single_branch() const { return variant == Variant::image_only || variant == Variant::text_only; }

    int block_count() const { return static_cast<int>(gcn_dims.size()); }
    int readout_dim() const { return 2 * gcn_dims.back(); }
    // 2 branches x (max ++ mean) readout, or one branch for single-branch
    // variants, or 2 x embed dim for the averaging baseline.
    int fc_input_dim() const;

    void validate() const;
};

struct AffineLayer {
    Tensor weight;  // [in x out]
    Tensor bias;    // [1 x out]

    static AffineLayer init(int in_dim, int out_dim, Rng& rng);
    Tensor forward(const Tensor& x) const;
};

class TwoBranchModel {
public:
    TwoBranchModel(ModelConfig cfg, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }

    // Two-branch graph variants (collaborative / +SAGPool / plain). Both
    // batches must contain the same samples in the same order.
    Tensor forward(const GraphBatch& image_batch, const GraphBatch& text_batch) const;

    // Single-branch variants only.
    Tensor forward_single_branch(const GraphBatch& batch) const;

    // Feature-averaging baseline: per-modality mean of raw node features,
    // affine+ReLU embedding, concatenation, shared head. No graph structure.
    Tensor forward_avg_baseline(const GraphBatch& image_batch, const GraphBatch& text_batch) const;

    // Variant dispatch over the three entry points above.
    Tensor predict(const GraphBatch& image_batch, const GraphBatch& text_batch) const;

    // Trainable parameters with stable names, construction order. Tensors are
    // shared handles: mutating them mutates the model.
    std::vector<std::pair<std::string, Tensor>> named_parameters() const;
    // All model state (adds pooling score weights frozen by pool_gating=false).
    // Checkpoints and weight transplants operate on this set.
    std::vector<std::pair<std::string, Tensor>> named_state() const;
    Tensor parameter(const std::string& name) const;
    std::int64_t parameter_count() const;

    // Copies values for every parameter name present in both models (weight
    // transplanting between variants). Returns the number of tensors copied.
    int copy_common_parameters(const TwoBranchModel& source);

    // Versioned binary checkpoint; round-trips bit-exactly.
    void save(const std::string& path) const;
    static TwoBranchModel load(const std::string& path);

private:
    struct Block {
        GcnLayer gcn;
        SagPoolLayer pool;      // present iff uses_pooling()
        FusionLayer fusion;     // present iff uses_fusion()
    };
    struct Branch {
        std::vector<Block> blocks;
    };

    // Both branches advance in lockstep; within a block the two graph centers
    // are taken from pre-fusion activations of the same depth, so neither
    // update contaminates the other.
    Tensor two_branch_readout(const GraphBatch& image_batch, const GraphBatch& text_batch) const;
    Tensor single_branch_readout(const Branch& branch, const GraphBatch& batch) const;
    Tensor apply_head(const Tensor& x) const;
    void check_pair(const GraphBatch& image_batch, const GraphBatch& text_batch) const;
    std::vector<std::pair<std::string, Tensor>> collect_tensors(bool trainable_only) const;

    ModelConfig cfg_;
    Branch image_;
    Branch text_;
    AffineLayer embed_image_;  // two_branch_avg only
    AffineLayer embed_text_;
    std::vector<AffineLayer> head_;
};

}  // namespace cognn
