#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cognn/data.hpp"
#include "cognn/model.hpp"

namespace cognn {

struct TrainConfig {
    int batch_size = 32;
    double lr = 1e-3;
    double weight_decay = 1e-6;
    int max_epochs = 60;
    int patience = 10;  // epochs without validation-logloss improvement
    std::uint64_t seed = 0;

    void validate() const;
};

struct EpochStats {
    int epoch = 0;  // 0-based
    double train_logloss = 0.0;
    double val_logloss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> history;
    int best_epoch = -1;
    double best_val_logloss = 0.0;
};

struct MetricsReport {
    double logloss = 0.0;
    double accuracy = 0.0;
    std::int64_t count = 0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Seed-controlled shuffled mini-batch training with Adam. Validation runs
// after every epoch; the returned model carries the parameters of the
// earliest epoch with minimum validation logloss. The last partial batch is
// kept. Single-threaded and bit-deterministic.
TrainResult train_model(TwoBranchModel& model, const std::vector<PairedSample>& train_set,
                        const std::vector<PairedSample>& val_set, const TrainConfig& cfg,
                        const EpochCallback& on_epoch = nullptr);

// Deterministic evaluation. Accuracy is argmax over logits with ties broken
// toward class 0; logloss is the mean binary cross-entropy.
MetricsReport evaluate_model(const TwoBranchModel& model, const std::vector<PairedSample>& samples);

struct ComparisonCell {
    Variant variant = Variant::collaborative;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;  // set when a cell failed; other cells still run
    MetricsReport test;
    int best_epoch = -1;
    double best_val_logloss = 0.0;
    int epochs_run = 0;
};

struct VariantSummary {
    Variant variant = Variant::collaborative;
    int n_ok = 0;
    double mean_logloss = 0.0;
    double sd_logloss = 0.0;
    double mean_accuracy = 0.0;
    double sd_accuracy = 0.0;
};

struct ComparisonTable {
    std::vector<ComparisonCell> cells;  // variants outer, seeds inner
    std::vector<VariantSummary> summarize() const;
};

// Trains every variant under identical splits and seeds and evaluates on the
// test set. Per-cell failures are captured, not propagated.
ComparisonTable run_comparison(const std::vector<PairedSample>& train_set,
                               const std::vector<PairedSample>& val_set,
                               const std::vector<PairedSample>& test_set,
                               const std::vector<Variant>& variants,
                               const std::vector<std::uint64_t>& seeds, const ModelConfig& model_cfg,
                               const TrainConfig& train_cfg);

// Assembles the two modality batches for a span of samples.
struct PairedBatch {
    GraphBatch image;
    GraphBatch text;
    std::vector<int> labels;
};
PairedBatch make_paired_batch(const std::vector<PairedSample>& samples,
                              const std::vector<int>& indices);

}  // namespace cognn
