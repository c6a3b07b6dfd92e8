#include "cognn.h"

#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "cognn/data.hpp"
#include "cognn/error.hpp"
#include "cognn/gradcheck.hpp"
#include "cognn/model.hpp"
#include "cognn/train.hpp"

using namespace cognn;

struct cognn_dataset {
    std::vector<PairedSample> samples;
};

struct cognn_model {
    std::unique_ptr<TwoBranchModel> impl;
};

struct cognn_history {
    TrainResult result;
};

struct cognn_table {
    ComparisonTable impl;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& message) { g_last_error = message; }

cognn_status status_from(const Error& e) {
    switch (e.code()) {
        case Error::Code::invalid_argument:
        case Error::Code::contract: return COGNN_EINVAL;
        case Error::Code::io: return COGNN_EIO;
        case Error::Code::format: return COGNN_EFORMAT;
        case Error::Code::numeric: return COGNN_ENUMERIC;
    }
    return COGNN_EINTERNAL;
}

// Runs `body`, translating exceptions into status codes + last_error.
template <typename Fn>
cognn_status guarded(Fn&& body) {
    try {
        return body();
    } catch (const Error& e) {
        set_error(e.what());
        return status_from(e);
    } catch (const std::exception& e) {
        set_error(e.what());
        return COGNN_EINTERNAL;
    } catch (...) {
        set_error("unknown failure");
        return COGNN_EINTERNAL;
    }
}

cognn_status require(bool ok, const char* message) {
    if (ok) return COGNN_OK;
    set_error(message);
    return COGNN_EINVAL;
}

ModelConfig to_model_config(const cognn_model_config& c) {
    ModelConfig cfg;
    cfg.input_dim = c.input_dim;
    cfg.gcn_dims = {c.gcn_dim1, c.gcn_dim2};
    cfg.pooling_ratio = c.pooling_ratio;
    cfg.fc_hidden = {c.fc_dim1, c.fc_dim2};
    cfg.mu_init = c.mu_init;
    cfg.pool_gating = c.pool_gating != 0;
    if (c.variant < 0 || c.variant > COGNN_TWO_BRANCH_AVG) {
        fail(Error::Code::invalid_argument, "unknown variant id " + std::to_string(c.variant));
    }
    cfg.variant = static_cast<Variant>(c.variant);
    return cfg;
}

cognn_model_config from_model_config(const ModelConfig& cfg) {
    cognn_model_config c{};
    c.input_dim = cfg.input_dim;
    c.gcn_dim1 = cfg.gcn_dims.size() > 0 ? cfg.gcn_dims[0] : 0;
    c.gcn_dim2 = cfg.gcn_dims.size() > 1 ? cfg.gcn_dims[1] : 0;
    c.pooling_ratio = cfg.pooling_ratio;
    c.fc_dim1 = cfg.fc_hidden.size() > 0 ? cfg.fc_hidden[0] : 0;
    c.fc_dim2 = cfg.fc_hidden.size() > 1 ? cfg.fc_hidden[1] : 0;
    c.mu_init = cfg.mu_init;
    c.pool_gating = cfg.pool_gating ? 1 : 0;
    c.variant = static_cast<int32_t>(cfg.variant);
    return c;
}

TrainConfig to_train_config(const cognn_train_config& c) {
    TrainConfig cfg;
    cfg.batch_size = c.batch_size;
    cfg.lr = c.learning_rate;
    cfg.weight_decay = c.weight_decay;
    cfg.max_epochs = c.max_epochs;
    cfg.patience = c.patience;
    cfg.seed = c.seed;
    return cfg;
}

}  // namespace

extern "C" {

const char* cognn_version(void) { return "1.0.0"; }

const char* cognn_last_error(void) { return g_last_error.c_str(); }

void cognn_model_config_defaults(cognn_model_config* cfg) {
    if (!cfg) return;
    ModelConfig defaults;
    *cfg = from_model_config(defaults);
}

void cognn_train_config_defaults(cognn_train_config* cfg) {
    if (!cfg) return;
    TrainConfig defaults;
    cfg->batch_size = defaults.batch_size;
    cfg->learning_rate = defaults.lr;
    cfg->weight_decay = defaults.weight_decay;
    cfg->max_epochs = defaults.max_epochs;
    cfg->patience = defaults.patience;
    cfg->seed = defaults.seed;
}

void cognn_synth_spec_defaults(cognn_synth_spec* spec) {
    if (!spec) return;
    SynthSpec defaults;
    spec->n_samples = defaults.n_samples;
    spec->feature_dim = defaults.feature_dim;
    spec->noise_sigma = defaults.noise_sigma;
    spec->cross_modal_strength = defaults.cross_modal_strength;
    spec->seed = defaults.seed;
}

cognn_status cognn_variant_parse(const char* name, cognn_variant* out) {
    if (cognn_status s = require(name && out, "variant_parse: NULL argument")) return s;
    auto v = variant_from_name(name);
    if (!v) {
        std::string valid;
        for (Variant each : all_variants()) {
            if (!valid.empty()) valid += ", ";
            valid += variant_name(each);
        }
        set_error("unknown variant '" + std::string(name) + "' (valid: " + valid + ")");
        return COGNN_EINVAL;
    }
    *out = static_cast<cognn_variant>(*v);
    return COGNN_OK;
}

const char* cognn_variant_name(cognn_variant v) {
    if (v < 0 || v > COGNN_TWO_BRANCH_AVG) return "unknown";
    return variant_name(static_cast<Variant>(v));
}

cognn_status cognn_dataset_generate(const cognn_synth_spec* spec, cognn_dataset** out) {
    if (cognn_status s = require(spec && out, "dataset_generate: NULL argument")) return s;
    return guarded([&] {
        SynthSpec ss;
        ss.n_samples = spec->n_samples;
        ss.feature_dim = spec->feature_dim;
        ss.noise_sigma = spec->noise_sigma;
        ss.cross_modal_strength = spec->cross_modal_strength;
        ss.seed = spec->seed;
        auto ds = std::make_unique<cognn_dataset>();
        ds->samples = generate_synthetic(ss);
        *out = ds.release();
        return COGNN_OK;
    });
}

cognn_status cognn_dataset_load(const char* path, cognn_dataset** out) {
    if (cognn_status s = require(path && out, "dataset_load: NULL argument")) return s;
    return guarded([&] {
        auto ds = std::make_unique<cognn_dataset>();
        ds->samples = load_dataset(path);
        *out = ds.release();
        return COGNN_OK;
    });
}

cognn_status cognn_dataset_save(const cognn_dataset* ds, const char* path, int include_edges) {
    if (cognn_status s = require(ds && path, "dataset_save: NULL argument")) return s;
    return guarded([&] {
        save_dataset(ds->samples, path, include_edges != 0);
        return COGNN_OK;
    });
}

int64_t cognn_dataset_size(const cognn_dataset* ds) {
    return ds ? static_cast<int64_t>(ds->samples.size()) : 0;
}

int64_t cognn_dataset_positives(const cognn_dataset* ds) {
    if (!ds) return 0;
    int64_t n = 0;
    for (const auto& s : ds->samples) n += s.label;
    return n;
}

int32_t cognn_dataset_feature_dim(const cognn_dataset* ds) {
    if (!ds || ds->samples.empty()) return 0;
    return ds->samples.front().image_graph.feature_dim();
}

cognn_status cognn_dataset_split(const cognn_dataset* ds, uint64_t seed, cognn_dataset** train,
                                 cognn_dataset** val, cognn_dataset** test) {
    if (cognn_status s = require(ds && train && val && test, "dataset_split: NULL argument")) return s;
    return guarded([&] {
        DatasetSplit split = split_dataset(ds->samples, seed);
        auto tr = std::make_unique<cognn_dataset>();
        auto va = std::make_unique<cognn_dataset>();
        auto te = std::make_unique<cognn_dataset>();
        tr->samples = std::move(split.train);
        va->samples = std::move(split.val);
        te->samples = std::move(split.test);
        *train = tr.release();
        *val = va.release();
        *test = te.release();
        return COGNN_OK;
    });
}

void cognn_dataset_free(cognn_dataset* ds) { delete ds; }

cognn_status cognn_model_create(const cognn_model_config* cfg, uint64_t seed, cognn_model** out) {
    if (cognn_status s = require(cfg && out, "model_create: NULL argument")) return s;
    return guarded([&] {
        auto m = std::make_unique<cognn_model>();
        m->impl = std::make_unique<TwoBranchModel>(to_model_config(*cfg), seed);
        *out = m.release();
        return COGNN_OK;
    });
}

cognn_status cognn_model_save(const cognn_model* m, const char* path) {
    if (cognn_status s = require(m && m->impl && path, "model_save: NULL argument")) return s;
    return guarded([&] {
        m->impl->save(path);
        return COGNN_OK;
    });
}

cognn_status cognn_model_load(const char* path, cognn_model** out) {
    if (cognn_status s = require(path && out, "model_load: NULL argument")) return s;
    return guarded([&] {
        auto m = std::make_unique<cognn_model>();
        m->impl = std::make_unique<TwoBranchModel>(TwoBranchModel::load(path));
        *out = m.release();
        return COGNN_OK;
    });
}

int64_t cognn_model_parameter_count(const cognn_model* m) {
    return m && m->impl ? m->impl->parameter_count() : 0;
}

cognn_status cognn_model_get_config(const cognn_model* m, cognn_model_config* out) {
    if (cognn_status s = require(m && m->impl && out, "model_get_config: NULL argument")) return s;
    *out = from_model_config(m->impl->config());
    return COGNN_OK;
}

void cognn_model_free(cognn_model* m) { delete m; }

cognn_status cognn_train(cognn_model* m, const cognn_dataset* train_set, const cognn_dataset* val_set,
                         const cognn_train_config* cfg, cognn_epoch_callback on_epoch,
                         void* user_data, cognn_history** out) {
    if (cognn_status s = require(m && m->impl && train_set && val_set && cfg, "train: NULL argument")) {
        return s;
    }
    return guarded([&] {
        EpochCallback cb;
        if (on_epoch) {
            cb = [on_epoch, user_data](const EpochStats& stats) {
                cognn_epoch_stats c{stats.epoch, stats.train_logloss, stats.val_logloss,
                                    stats.val_accuracy};
                on_epoch(&c, user_data);
            };
        }
        TrainResult result =
            train_model(*m->impl, train_set->samples, val_set->samples, to_train_config(*cfg), cb);
        if (out) {
            auto h = std::make_unique<cognn_history>();
            h->result = std::move(result);
            *out = h.release();
        }
        return COGNN_OK;
    });
}

cognn_status cognn_evaluate(const cognn_model* m, const cognn_dataset* ds, cognn_metrics* out) {
    if (cognn_status s = require(m && m->impl && ds && out, "evaluate: NULL argument")) return s;
    return guarded([&] {
        MetricsReport r = evaluate_model(*m->impl, ds->samples);
        out->logloss = r.logloss;
        out->accuracy = r.accuracy;
        out->count = r.count;
        return COGNN_OK;
    });
}

int64_t cognn_history_length(const cognn_history* h) {
    return h ? static_cast<int64_t>(h->result.history.size()) : 0;
}

cognn_status cognn_history_entry(const cognn_history* h, int64_t index, cognn_epoch_stats* out) {
    if (cognn_status s = require(h && out, "history_entry: NULL argument")) return s;
    if (index < 0 || index >= static_cast<int64_t>(h->result.history.size())) {
        set_error("history index " + std::to_string(index) + " out of range");
        return COGNN_EINVAL;
    }
    const EpochStats& e = h->result.history[static_cast<std::size_t>(index)];
    out->epoch = e.epoch;
    out->train_logloss = e.train_logloss;
    out->val_logloss = e.val_logloss;
    out->val_accuracy = e.val_accuracy;
    return COGNN_OK;
}

int32_t cognn_history_best_epoch(const cognn_history* h) {
    return h ? h->result.best_epoch : -1;
}

void cognn_history_free(cognn_history* h) { delete h; }

cognn_status cognn_compare(const cognn_dataset* ds, uint64_t split_seed,
                           const cognn_variant* variants, int32_t n_variants, const uint64_t* seeds,
                           int32_t n_seeds, const cognn_model_config* model_cfg,
                           const cognn_train_config* train_cfg, cognn_table** out) {
    if (cognn_status s = require(ds && variants && n_variants > 0 && seeds && n_seeds > 0 &&
                                     model_cfg && train_cfg && out,
                                 "compare: NULL or empty argument")) {
        return s;
    }
    return guarded([&] {
        std::vector<Variant> vs;
        for (int32_t i = 0; i < n_variants; ++i) {
            if (variants[i] < 0 || variants[i] > COGNN_TWO_BRANCH_AVG) {
                fail(Error::Code::invalid_argument, "unknown variant id " + std::to_string(variants[i]));
            }
            vs.push_back(static_cast<Variant>(variants[i]));
        }
        std::vector<uint64_t> ss(seeds, seeds + n_seeds);
        DatasetSplit split = split_dataset(ds->samples, split_seed);
        auto table = std::make_unique<cognn_table>();
        table->impl = run_comparison(split.train, split.val, split.test, vs, ss,
                                     to_model_config(*model_cfg), to_train_config(*train_cfg));
        *out = table.release();
        return COGNN_OK;
    });
}

int64_t cognn_table_size(const cognn_table* t) {
    return t ? static_cast<int64_t>(t->impl.cells.size()) : 0;
}

cognn_status cognn_table_cell(const cognn_table* t, int64_t index, cognn_variant* variant,
                              uint64_t* seed, int32_t* ok, cognn_metrics* test_metrics,
                              int32_t* best_epoch, int32_t* epochs_run) {
    if (cognn_status s = require(t != nullptr, "table_cell: NULL table")) return s;
    if (index < 0 || index >= static_cast<int64_t>(t->impl.cells.size())) {
        set_error("table index " + std::to_string(index) + " out of range");
        return COGNN_EINVAL;
    }
    const ComparisonCell& cell = t->impl.cells[static_cast<std::size_t>(index)];
    if (variant) *variant = static_cast<cognn_variant>(cell.variant);
    if (seed) *seed = cell.seed;
    if (ok) *ok = cell.ok ? 1 : 0;
    if (test_metrics) {
        test_metrics->logloss = cell.test.logloss;
        test_metrics->accuracy = cell.test.accuracy;
        test_metrics->count = cell.test.count;
    }
    if (best_epoch) *best_epoch = cell.best_epoch;
    if (epochs_run) *epochs_run = cell.epochs_run;
    return COGNN_OK;
}

const char* cognn_table_cell_error(const cognn_table* t, int64_t index) {
    if (!t || index < 0 || index >= static_cast<int64_t>(t->impl.cells.size())) return "";
    return t->impl.cells[static_cast<std::size_t>(index)].error.c_str();
}

void cognn_table_free(cognn_table* t) { delete t; }

cognn_status cognn_gradcheck(uint64_t seed, int32_t instantiations, int64_t* checks,
                             int64_t* failures, double* max_rel_err) {
    if (cognn_status s = require(checks && failures, "gradcheck: NULL argument")) return s;
    return guarded([&] {
        GradCheckResult result = run_gradient_suite(seed, instantiations);
        *checks = result.checks;
        *failures = result.failures;
        if (max_rel_err) *max_rel_err = result.max_rel_err;
        if (!result.ok()) {
            std::string all;
            for (const auto& msg : result.messages) {
                if (!all.empty()) all += "; ";
                all += msg;
            }
            set_error(all);
        }
        return COGNN_OK;
    });
}

}  // extern "C"
