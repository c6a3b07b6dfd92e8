#include "cognn/model.hpp"

#include <cstring>
#include <fstream>

#include "cognn/ops.hpp"
#include "cognn/rng.hpp"

namespace cognn {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::collaborative: return "collaborative";
        case Variant::two_branch_sagpool: return "two_branch_sagpool";
        case Variant::two_branch_plain: return "two_branch_plain";
        case Variant::image_only: return "image_only";
        case Variant::text_only: return "text_only";
        case Variant::two_branch_avg: return "two_branch_avg";
    }
    return "unknown";
}

std::optional<Variant> variant_from_name(std::string_view name) {
    for (Variant v : all_variants()) {
        if (name == variant_name(v)) return v;
    }
    return std::nullopt;
}

std::vector<Variant> all_variants() {
    return {Variant::collaborative, Variant::two_branch_sagpool, Variant::two_branch_plain,
            Variant::image_only,    Variant::text_only,          Variant::two_branch_avg};
}

bool ModelConfig::uses_pooling() const {
    return variant == Variant::collaborative || variant == Variant::two_branch_sagpool ||
           variant == Variant::image_only || variant == Variant::text_only;
}

int ModelConfig::fc_input_dim() const {
    if (variant == Variant::two_branch_avg) return 2 * gcn_dims.front();
    if (single_branch()) return readout_dim();
    return 2 * readout_dim();
}

void ModelConfig::validate() const {
    if (input_dim < 1) fail(Error::Code::invalid_argument, "input_dim must be positive");
    if (gcn_dims.empty()) fail(Error::Code::invalid_argument, "at least one GCN layer is required");
    for (int d : gcn_dims) {
        if (d < 1) fail(Error::Code::invalid_argument, "GCN dims must be positive");
    }
    for (int d : fc_hidden) {
        if (d < 1) fail(Error::Code::invalid_argument, "FC dims must be positive");
    }
    if (num_classes < 2) fail(Error::Code::invalid_argument, "num_classes must be at least 2");
    if (pooling_ratio <= 0.0 || pooling_ratio > 1.0) {
        fail(Error::Code::invalid_argument, "pooling_ratio must lie in (0, 1]");
    }
}

AffineLayer AffineLayer::init(int in_dim, int out_dim, Rng& rng) {
    return AffineLayer{Tensor::glorot(in_dim, out_dim, rng), Tensor::zeros({1, out_dim}, true)};
}

Tensor AffineLayer::forward(const Tensor& x) const {
    return ops::add_row_broadcast(ops::matmul(x, weight), bias);
}

TwoBranchModel::TwoBranchModel(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng(seed);

    // Construction order fixes both the RNG consumption and the parameter
    // ordering. Fusion gates are constant-initialized and draw nothing, so a
    // collaborative model and its fusion-free twin share identical weights
    // for the same seed.
    auto build_branch = [&](Branch& branch) {
        int in_dim = cfg_.input_dim;
        for (int out_dim : cfg_.gcn_dims) {
            Block block;
            block.gcn = GcnLayer::init(in_dim, out_dim, rng);
            if (cfg_.uses_pooling()) {
                block.pool = SagPoolLayer::init(out_dim, cfg_.pooling_ratio, rng);
            }
            if (cfg_.uses_fusion()) {
                block.fusion = FusionLayer::init(cfg_.mu_init);
            }
            branch.blocks.push_back(std::move(block));
            in_dim = out_dim;
        }
    };

    if (cfg_.variant == Variant::two_branch_avg) {
        embed_image_ = AffineLayer::init(cfg_.input_dim, cfg_.gcn_dims.front(), rng);
        embed_text_ = AffineLayer::init(cfg_.input_dim, cfg_.gcn_dims.front(), rng);
    } else if (cfg_.variant == Variant::image_only) {
        build_branch(image_);
    } else if (cfg_.variant == Variant::text_only) {
        build_branch(text_);
    } else {
        build_branch(image_);
        build_branch(text_);
    }

    int in_dim = cfg_.fc_input_dim();
    for (int out_dim : cfg_.fc_hidden) {
        head_.push_back(AffineLayer::init(in_dim, out_dim, rng));
        in_dim = out_dim;
    }
    head_.push_back(AffineLayer::init(in_dim, cfg_.num_classes, rng));
}

void TwoBranchModel::check_pair(const GraphBatch& image_batch, const GraphBatch& text_batch) const {
    if (image_batch.graph_count() != text_batch.graph_count()) {
        fail(Error::Code::contract,
             "modality batches disagree: " + std::to_string(image_batch.graph_count()) +
                 " image graphs vs " + std::to_string(text_batch.graph_count()) + " text graphs");
    }
}

Tensor TwoBranchModel::apply_head(const Tensor& x) const {
    Tensor h = x;
    for (std::size_t i = 0; i + 1 < head_.size(); ++i) {
        h = ops::relu(head_[i].forward(h));
    }
    return head_.back().forward(h);
}

Tensor TwoBranchModel::two_branch_readout(const GraphBatch& image_batch,
                                          const GraphBatch& text_batch) const {
    Tensor h_img = image_batch.features;
    Tensor h_txt = text_batch.features;
    BatchStructure s_img = image_batch.structure;
    BatchStructure s_txt = text_batch.structure;

    for (int l = 0; l < cfg_.block_count(); ++l) {
        h_img = gcn_forward(image_.blocks[l].gcn, s_img.adj, h_img);
        h_txt = gcn_forward(text_.blocks[l].gcn, s_txt.adj, h_txt);
        if (cfg_.uses_fusion()) {
            Tensor center_img = per_graph_center(s_img, h_img);
            Tensor center_txt = per_graph_center(s_txt, h_txt);
            h_img = fuse(h_img, center_txt, s_img.graph_id, image_.blocks[l].fusion.mu);
            h_txt = fuse(h_txt, center_img, s_txt.graph_id, text_.blocks[l].fusion.mu);
        }
        if (cfg_.uses_pooling()) {
            PoolResult p_img = sag_pool(image_.blocks[l].pool, s_img, h_img, cfg_.pool_gating);
            h_img = p_img.features;
            s_img = std::move(p_img.structure);
            PoolResult p_txt = sag_pool(text_.blocks[l].pool, s_txt, h_txt, cfg_.pool_gating);
            h_txt = p_txt.features;
            s_txt = std::move(p_txt.structure);
        }
    }
    return ops::concat_cols(readout_batch(h_img, s_img), readout_batch(h_txt, s_txt));
}

Tensor TwoBranchModel::single_branch_readout(const Branch& branch, const GraphBatch& batch) const {
    Tensor h = batch.features;
    BatchStructure s = batch.structure;
    for (int l = 0; l < cfg_.block_count(); ++l) {
        h = gcn_forward(branch.blocks[l].gcn, s.adj, h);
        if (cfg_.uses_pooling()) {
            PoolResult p = sag_pool(branch.blocks[l].pool, s, h, cfg_.pool_gating);
            h = p.features;
            s = std::move(p.structure);
        }
    }
    return readout_batch(h, s);
}

Tensor TwoBranchModel::forward(const GraphBatch& image_batch, const GraphBatch& text_batch) const {
    if (cfg_.single_branch() || cfg_.variant == Variant::two_branch_avg) {
        fail(Error::Code::contract,
             std::string("forward: variant ") + variant_name(cfg_.variant) + " is not a two-branch graph model");
    }
    check_pair(image_batch, text_batch);
    return apply_head(two_branch_readout(image_batch, text_batch));
}

Tensor TwoBranchModel::forward_single_branch(const GraphBatch& batch) const {
    if (!cfg_.single_branch()) {
        fail(Error::Code::contract,
             std::string("forward_single_branch: variant ") + variant_name(cfg_.variant) + " is not single-branch");
    }
    const Branch& branch = cfg_.variant == Variant::image_only ? image_ : text_;
    return apply_head(single_branch_readout(branch, batch));
}

Tensor TwoBranchModel::forward_avg_baseline(const GraphBatch& image_batch,
                                            const GraphBatch& text_batch) const {
    if (cfg_.variant != Variant::two_branch_avg) {
        fail(Error::Code::contract,
             std::string("forward_avg_baseline: variant ") + variant_name(cfg_.variant) + " is not two_branch_avg");
    }
    check_pair(image_batch, text_batch);
    Tensor mean_img = per_graph_center(image_batch.structure, image_batch.features);
    Tensor mean_txt = per_graph_center(text_batch.structure, text_batch.features);
    Tensor emb_img = ops::relu(embed_image_.forward(mean_img));
    Tensor emb_txt = ops::relu(embed_text_.forward(mean_txt));
    return apply_head(ops::concat_cols(emb_img, emb_txt));
}

Tensor TwoBranchModel::predict(const GraphBatch& image_batch, const GraphBatch& text_batch) const {
    switch (cfg_.variant) {
        case Variant::image_only: return forward_single_branch(image_batch);
        case Variant::text_only: return forward_single_branch(text_batch);
        case Variant::two_branch_avg: return forward_avg_baseline(image_batch, text_batch);
        default: return forward(image_batch, text_batch);
    }
}

std::vector<std::pair<std::string, Tensor>> TwoBranchModel::collect_tensors(bool trainable_only) const {
    std::vector<std::pair<std::string, Tensor>> params;
    auto add_branch = [&](const char* prefix, const Branch& branch) {
        for (std::size_t l = 0; l < branch.blocks.size(); ++l) {
            const std::string base = std::string(prefix) + ".block" + std::to_string(l) + ".";
            const Block& block = branch.blocks[l];
            params.emplace_back(base + "gcn.weight", block.gcn.weight);
            if (block.pool.score_weight.defined()) {
                // With gating off, scores only order nodes: the score weight
                // receives no gradient and stays frozen at init, so it is
                // state but not a trainable parameter.
                if (cfg_.pool_gating || !trainable_only) {
                    params.emplace_back(base + "pool.weight", block.pool.score_weight);
                }
            }
            if (block.fusion.mu.defined()) {
                params.emplace_back(base + "mu", block.fusion.mu);
            }
        }
    };
    add_branch("image", image_);
    add_branch("text", text_);
    if (embed_image_.weight.defined()) {
        params.emplace_back("image.embed.weight", embed_image_.weight);
        params.emplace_back("image.embed.bias", embed_image_.bias);
        params.emplace_back("text.embed.weight", embed_text_.weight);
        params.emplace_back("text.embed.bias", embed_text_.bias);
    }
    for (std::size_t i = 0; i < head_.size(); ++i) {
        params.emplace_back("head." + std::to_string(i) + ".weight", head_[i].weight);
        params.emplace_back("head." + std::to_string(i) + ".bias", head_[i].bias);
    }
    return params;
}

std::vector<std::pair<std::string, Tensor>> TwoBranchModel::named_parameters() const {
    return collect_tensors(true);
}

std::vector<std::pair<std::string, Tensor>> TwoBranchModel::named_state() const {
    return collect_tensors(false);
}

Tensor TwoBranchModel::parameter(const std::string& name) const {
    for (const auto& [n, t] : named_state()) {
        if (n == name) return t;
    }
    fail(Error::Code::invalid_argument, "no parameter named '" + name + "'");
}

std::int64_t TwoBranchModel::parameter_count() const {
    std::int64_t total = 0;
    for (const auto& [name, t] : named_parameters()) total += static_cast<std::int64_t>(t.size());
    return total;
}

int TwoBranchModel::copy_common_parameters(const TwoBranchModel& source) {
    int copied = 0;
    auto src = source.named_state();
    for (auto& [name, tensor] : named_state()) {
        for (const auto& [src_name, src_tensor] : src) {
            if (src_name != name) continue;
            // Same name with a different shape (e.g. the first FC layer when
            // transplanting across branch counts) is left untouched.
            if (tensor.shape() == src_tensor.shape()) {
                tensor.vec() = src_tensor.vec();
                ++copied;
            }
            break;
        }
    }
    return copied;
}

namespace {

constexpr char kCheckpointMagic[8] = {'C', 'O', 'G', 'N', 'N', 'C', 'P', '1'};

void write_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void write_i32(std::ostream& os, std::int32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void write_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }

std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
std::int32_t read_i32(std::istream& is) {
    std::int32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
double read_f64(std::istream& is) {
    double v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

}  // namespace

void TwoBranchModel::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) fail(Error::Code::io, "cannot open checkpoint for writing: " + path);

    os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    write_u32(os, 1);  // format version
    write_u32(os, static_cast<std::uint32_t>(cfg_.variant));
    write_i32(os, cfg_.input_dim);
    write_u32(os, static_cast<std::uint32_t>(cfg_.gcn_dims.size()));
    for (int d : cfg_.gcn_dims) write_i32(os, d);
    write_f64(os, cfg_.pooling_ratio);
    write_u32(os, static_cast<std::uint32_t>(cfg_.fc_hidden.size()));
    for (int d : cfg_.fc_hidden) write_i32(os, d);
    write_i32(os, cfg_.num_classes);
    write_f64(os, cfg_.mu_init);
    write_u32(os, cfg_.pool_gating ? 1 : 0);

    auto params = named_state();
    write_u32(os, static_cast<std::uint32_t>(params.size()));
    for (const auto& [name, t] : params) {
        write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u32(os, static_cast<std::uint32_t>(t.shape().size()));
        for (int d : t.shape()) write_i32(os, d);
        os.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!os) fail(Error::Code::io, "failed writing checkpoint: " + path);
}

TwoBranchModel TwoBranchModel::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(Error::Code::io, "cannot open checkpoint: " + path);

    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
        fail(Error::Code::format, "not a model checkpoint: " + path);
    }
    const std::uint32_t version = read_u32(is);
    if (version != 1) {
        fail(Error::Code::format, "unsupported checkpoint version " + std::to_string(version));
    }

    ModelConfig cfg;
    const std::uint32_t variant_id = read_u32(is);
    if (variant_id >= all_variants().size()) {
        fail(Error::Code::format, "checkpoint names unknown variant id " + std::to_string(variant_id));
    }
    cfg.variant = static_cast<Variant>(variant_id);
    cfg.input_dim = read_i32(is);
    cfg.gcn_dims.assign(read_u32(is), 0);
    for (auto& d : cfg.gcn_dims) d = read_i32(is);
    cfg.pooling_ratio = read_f64(is);
    cfg.fc_hidden.assign(read_u32(is), 0);
    for (auto& d : cfg.fc_hidden) d = read_i32(is);
    cfg.num_classes = read_i32(is);
    cfg.mu_init = read_f64(is);
    cfg.pool_gating = read_u32(is) != 0;
    if (!is) fail(Error::Code::format, "truncated checkpoint header: " + path);

    TwoBranchModel model(cfg, 0);
    auto params = model.named_state();

    const std::uint32_t n_tensors = read_u32(is);
    if (n_tensors != params.size()) {
        fail(Error::Code::format,
             "checkpoint holds " + std::to_string(n_tensors) + " tensors, model expects " +
                 std::to_string(params.size()));
    }
    for (auto& [name, tensor] : params) {
        const std::uint32_t name_len = read_u32(is);
        std::string stored_name(name_len, '\0');
        is.read(stored_name.data(), name_len);
        if (stored_name != name) {
            fail(Error::Code::format, "checkpoint tensor '" + stored_name + "' does not match expected '" + name + "'");
        }
        Shape shape(read_u32(is), 0);
        for (auto& d : shape) d = read_i32(is);
        if (shape != tensor.shape()) {
            fail(Error::Code::format,
                 "checkpoint tensor '" + name + "' has shape " + shape_to_string(shape) +
                     ", model expects " + shape_to_string(tensor.shape()));
        }
        is.read(reinterpret_cast<char*>(tensor.data()), static_cast<std::streamsize>(tensor.size() * sizeof(double)));
        if (!is) fail(Error::Code::format, "truncated checkpoint data at tensor '" + name + "'");
    }
    return model;
}

}  // namespace cognn
