#include "cognn/train.hpp"

#include <cmath>

#include "cognn/adam.hpp"
#include "cognn/ops.hpp"
#include "cognn/rng.hpp"

namespace cognn {

void TrainConfig::validate() const {
    if (batch_size < 1) fail(Error::Code::invalid_argument, "batch_size must be at least 1");
    if (patience < 1) fail(Error::Code::invalid_argument, "patience must be at least 1");
    if (max_epochs < 1) fail(Error::Code::invalid_argument, "max_epochs must be at least 1");
    if (lr < 0.0) fail(Error::Code::invalid_argument, "lr must be non-negative");
    if (weight_decay < 0.0) fail(Error::Code::invalid_argument, "weight_decay must be non-negative");
}

PairedBatch make_paired_batch(const std::vector<PairedSample>& samples,
                              const std::vector<int>& indices) {
    PairedBatch batch;
    std::vector<const Graph*> image_graphs, text_graphs;
    image_graphs.reserve(indices.size());
    text_graphs.reserve(indices.size());
    batch.labels.reserve(indices.size());
    for (int idx : indices) {
        const PairedSample& s = samples[static_cast<std::size_t>(idx)];
        image_graphs.push_back(&s.image_graph);
        text_graphs.push_back(&s.text_graph);
        batch.labels.push_back(s.label);
    }
    batch.image = batch_graphs(image_graphs);
    batch.text = batch_graphs(text_graphs);
    return batch;
}

namespace {

std::vector<std::vector<double>> snapshot_parameters(const TwoBranchModel& model) {
    std::vector<std::vector<double>> snap;
    for (const auto& [name, t] : model.named_state()) snap.push_back(t.vec());
    return snap;
}

void restore_parameters(TwoBranchModel& model, const std::vector<std::vector<double>>& snap) {
    auto state = model.named_state();
    for (std::size_t i = 0; i < state.size(); ++i) state[i].second.vec() = snap[i];
}

}  // namespace

TrainResult train_model(TwoBranchModel& model, const std::vector<PairedSample>& train_set,
                        const std::vector<PairedSample>& val_set, const TrainConfig& cfg,
                        const EpochCallback& on_epoch) {
    cfg.validate();
    if (train_set.empty()) fail(Error::Code::invalid_argument, "train_model: empty training set");
    if (val_set.empty()) fail(Error::Code::invalid_argument, "train_model: empty validation set");

    AdamOptimizer optimizer(model.named_parameters(),
                            {cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
    Rng rng(cfg.seed);

    std::vector<int> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    TrainResult result;
    std::vector<std::vector<double>> best_snapshot = snapshot_parameters(model);

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        rng.shuffle(order);

        double loss_sum = 0.0;
        int batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<int> indices(order.begin() + start, order.begin() + end);
            PairedBatch batch = make_paired_batch(train_set, indices);

            double batch_loss;
            {
                Tape tape;
                Tensor logits = model.predict(batch.image, batch.text);
                Tensor loss = ops::softmax_cross_entropy(logits, batch.labels);
                batch_loss = loss.value();
                if (!std::isfinite(batch_loss)) {
                    fail(Error::Code::numeric,
                         "training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(batch_index));
                }
                tape.backward(loss);
            }
            optimizer.step();
            loss_sum += batch_loss * static_cast<double>(indices.size());
        }

        MetricsReport val = evaluate_model(model, val_set);
        EpochStats stats;
        stats.epoch = epoch;
        stats.train_logloss = loss_sum / static_cast<double>(train_set.size());
        stats.val_logloss = val.logloss;
        stats.val_accuracy = val.accuracy;
        result.history.push_back(stats);
        if (on_epoch) on_epoch(stats);

        // Earliest minimum wins: only strict improvement moves the marker.
        if (result.best_epoch < 0 || stats.val_logloss < result.best_val_logloss) {
            result.best_epoch = epoch;
            result.best_val_logloss = stats.val_logloss;
            best_snapshot = snapshot_parameters(model);
        } else if (epoch - result.best_epoch >= cfg.patience) {
            break;
        }
    }

    restore_parameters(model, best_snapshot);
    return result;
}

MetricsReport evaluate_model(const TwoBranchModel& model, const std::vector<PairedSample>& samples) {
    if (samples.empty()) fail(Error::Code::invalid_argument, "evaluate_model: empty dataset");

    constexpr int kEvalBatch = 64;
    MetricsReport report;
    report.count = static_cast<std::int64_t>(samples.size());

    double loss_sum = 0.0;
    std::int64_t correct = 0;
    std::vector<int> indices;
    for (std::size_t start = 0; start < samples.size(); start += kEvalBatch) {
        const std::size_t end = std::min(samples.size(), start + kEvalBatch);
        indices.clear();
        for (std::size_t i = start; i < end; ++i) indices.push_back(static_cast<int>(i));
        PairedBatch batch = make_paired_batch(samples, indices);
        Tensor logits = model.predict(batch.image, batch.text);

        const int k = logits.cols();
        for (int r = 0; r < logits.rows(); ++r) {
            const double* row = logits.data() + static_cast<std::size_t>(r) * k;
            double m = row[0];
            int argmax = 0;  // ties toward class 0: strict > required to move
            for (int j = 1; j < k; ++j) {
                if (row[j] > m) {
                    m = row[j];
                    argmax = j;
                }
            }
            double z = 0.0;
            for (int j = 0; j < k; ++j) z += std::exp(row[j] - m);
            loss_sum += m + std::log(z) - row[batch.labels[r]];
            if (argmax == batch.labels[r]) ++correct;
        }
    }
    report.logloss = loss_sum / static_cast<double>(samples.size());
    report.accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
    return report;
}

std::vector<VariantSummary> ComparisonTable::summarize() const {
    std::vector<VariantSummary> out;
    std::vector<Variant> seen;
    for (const ComparisonCell& cell : cells) {
        bool found = false;
        for (Variant v : seen) found = found || v == cell.variant;
        if (!found) seen.push_back(cell.variant);
    }
    for (Variant v : seen) {
        VariantSummary s;
        s.variant = v;
        std::vector<double> losses, accs;
        for (const ComparisonCell& cell : cells) {
            if (cell.variant != v || !cell.ok) continue;
            losses.push_back(cell.test.logloss);
            accs.push_back(cell.test.accuracy);
        }
        s.n_ok = static_cast<int>(accs.size());
        auto mean = [](const std::vector<double>& xs) {
            double acc = 0.0;
            for (double x : xs) acc += x;
            return xs.empty() ? 0.0 : acc / static_cast<double>(xs.size());
        };
        auto sd = [&](const std::vector<double>& xs, double mu) {
            if (xs.size() < 2) return 0.0;
            double acc = 0.0;
            for (double x : xs) acc += (x - mu) * (x - mu);
            return std::sqrt(acc / static_cast<double>(xs.size() - 1));
        };
        s.mean_logloss = mean(losses);
        s.sd_logloss = sd(losses, s.mean_logloss);
        s.mean_accuracy = mean(accs);
        s.sd_accuracy = sd(accs, s.mean_accuracy);
        out.push_back(s);
    }
    return out;
}

ComparisonTable run_comparison(const std::vector<PairedSample>& train_set,
                               const std::vector<PairedSample>& val_set,
                               const std::vector<PairedSample>& test_set,
                               const std::vector<Variant>& variants,
                               const std::vector<std::uint64_t>& seeds, const ModelConfig& model_cfg,
                               const TrainConfig& train_cfg) {
    if (seeds.empty()) fail(Error::Code::invalid_argument, "run_comparison: need at least one seed");
    if (variants.empty()) fail(Error::Code::invalid_argument, "run_comparison: need at least one variant");

    ComparisonTable table;
    for (Variant variant : variants) {
        for (std::uint64_t seed : seeds) {
            ComparisonCell cell;
            cell.variant = variant;
            cell.seed = seed;
            try {
                ModelConfig cfg = model_cfg;
                cfg.variant = variant;
                TrainConfig tcfg = train_cfg;
                tcfg.seed = seed;
                TwoBranchModel model(cfg, seed);
                TrainResult fit = train_model(model, train_set, val_set, tcfg);
                cell.test = evaluate_model(model, test_set);
                cell.best_epoch = fit.best_epoch;
                cell.best_val_logloss = fit.best_val_logloss;
                cell.epochs_run = static_cast<int>(fit.history.size());
                cell.ok = true;
            } catch (const std::exception& e) {
                cell.ok = false;
                cell.error = e.what();
            }
            table.cells.push_back(std::move(cell));
        }
    }
    return table;
}

}  // namespace cognn
