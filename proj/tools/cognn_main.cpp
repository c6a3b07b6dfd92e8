// Command-line front end. Links the C API only (cognn.h); all output meant
// for machines is JSON on stdout, progress and tables go to stderr.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage/input error.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cognn.h"

using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

int log_level() {
    const char* env = std::getenv("COGNN_LOG");
    return env ? std::atoi(env) : 0;
}

[[noreturn]] void die(int code, const std::string& message) {
    std::cerr << "cognn: " << message << "\n";
    std::exit(code);
}

// Input-side failures (missing/garbled files, bad schemas) are usage errors;
// anything after that is a runtime failure.
int exit_code_for(cognn_status status) {
    switch (status) {
        case COGNN_OK: return kExitOk;
        case COGNN_EIO:
        case COGNN_EFORMAT:
        case COGNN_EINVAL: return kExitUsage;
        default: return kExitRuntime;
    }
}

struct DatasetHandle {
    cognn_dataset* ptr = nullptr;
    ~DatasetHandle() { cognn_dataset_free(ptr); }
};

struct ModelHandle {
    cognn_model* ptr = nullptr;
    ~ModelHandle() { cognn_model_free(ptr); }
};

void load_dataset_or_die(const std::string& path, DatasetHandle& out) {
    cognn_status s = cognn_dataset_load(path.c_str(), &out.ptr);
    if (s != COGNN_OK) die(exit_code_for(s), cognn_last_error());
}

// Flat key-value config file shared by train/compare. Every key is optional;
// defaults are the published experimental setup.
struct Config {
    cognn_model_config model{};
    cognn_train_config train{};
};

Config default_config() {
    Config cfg;
    cognn_model_config_defaults(&cfg.model);
    cognn_train_config_defaults(&cfg.train);
    return cfg;
}

json config_to_json(const Config& cfg) {
    json j;
    j["gcn_dim1"] = cfg.model.gcn_dim1;
    j["gcn_dim2"] = cfg.model.gcn_dim2;
    j["pooling_ratio"] = cfg.model.pooling_ratio;
    j["fc_dim1"] = cfg.model.fc_dim1;
    j["fc_dim2"] = cfg.model.fc_dim2;
    j["mu_init"] = cfg.model.mu_init;
    j["pool_gating"] = cfg.model.pool_gating != 0;
    j["batch_size"] = cfg.train.batch_size;
    j["learning_rate"] = cfg.train.learning_rate;
    j["weight_decay"] = cfg.train.weight_decay;
    j["max_epochs"] = cfg.train.max_epochs;
    j["patience"] = cfg.train.patience;
    j["seed"] = cfg.train.seed;
    return j;
}

Config load_config(const std::string& path) {
    Config cfg = default_config();
    if (path.empty()) return cfg;
    std::ifstream is(path);
    if (!is) die(kExitUsage, "cannot open config file: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        die(kExitUsage, "config file " + path + ": " + e.what());
    }
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "gcn_dim1") cfg.model.gcn_dim1 = value.get<int32_t>();
            else if (key == "gcn_dim2") cfg.model.gcn_dim2 = value.get<int32_t>();
            else if (key == "pooling_ratio") cfg.model.pooling_ratio = value.get<double>();
            else if (key == "fc_dim1") cfg.model.fc_dim1 = value.get<int32_t>();
            else if (key == "fc_dim2") cfg.model.fc_dim2 = value.get<int32_t>();
            else if (key == "mu_init") cfg.model.mu_init = value.get<double>();
            else if (key == "pool_gating") cfg.model.pool_gating = value.get<bool>() ? 1 : 0;
            else if (key == "batch_size") cfg.train.batch_size = value.get<int32_t>();
            else if (key == "learning_rate") cfg.train.learning_rate = value.get<double>();
            else if (key == "weight_decay") cfg.train.weight_decay = value.get<double>();
            else if (key == "max_epochs") cfg.train.max_epochs = value.get<int32_t>();
            else if (key == "patience") cfg.train.patience = value.get<int32_t>();
            else if (key == "seed") cfg.train.seed = value.get<uint64_t>();
            else die(kExitUsage, "config file " + path + ": unknown key '" + key + "'");
        } catch (const json::exception& e) {
            die(kExitUsage, "config file " + path + ", key '" + key + "': " + e.what());
        }
    }
    return cfg;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_history_csv(const std::string& path, const cognn_history* history) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) die(kExitRuntime, "cannot write history CSV: " + path);
    os << "epoch,train_logloss,val_logloss,val_accuracy\n";
    const int64_t n = cognn_history_length(history);
    for (int64_t i = 0; i < n; ++i) {
        cognn_epoch_stats row{};
        cognn_history_entry(history, i, &row);
        os << row.epoch << "," << format_double(row.train_logloss) << ","
           << format_double(row.val_logloss) << "," << format_double(row.val_accuracy) << "\n";
    }
}

json metrics_to_json(const cognn_metrics& m) {
    json j;
    j["logloss"] = m.logloss;
    j["accuracy"] = m.accuracy;
    j["count"] = m.count;
    return j;
}

void epoch_logger(const cognn_epoch_stats* stats, void*) {
    std::cerr << "epoch " << stats->epoch << ": train_logloss=" << stats->train_logloss
              << " val_logloss=" << stats->val_logloss << " val_accuracy=" << stats->val_accuracy
              << "\n";
}

int cmd_synth(const std::string& out_path, int64_t n, uint64_t seed, double strength, double noise,
              int32_t dim) {
    cognn_synth_spec spec;
    cognn_synth_spec_defaults(&spec);
    spec.n_samples = n;
    spec.seed = seed;
    spec.cross_modal_strength = strength;
    spec.noise_sigma = noise;
    spec.feature_dim = dim;

    DatasetHandle ds;
    cognn_status s = cognn_dataset_generate(&spec, &ds.ptr);
    if (s != COGNN_OK) die(exit_code_for(s), cognn_last_error());
    s = cognn_dataset_save(ds.ptr, out_path.c_str(), 0);
    if (s != COGNN_OK) die(kExitRuntime, cognn_last_error());

    json summary;
    summary["samples"] = cognn_dataset_size(ds.ptr);
    summary["positives"] = cognn_dataset_positives(ds.ptr);
    summary["feature_dim"] = spec.feature_dim;
    summary["path"] = out_path;
    std::cout << summary.dump() << "\n";
    return kExitOk;
}

int cmd_build_graphs(const std::string& in_path, const std::string& out_path) {
    DatasetHandle ds;
    load_dataset_or_die(in_path, ds);
    cognn_status s = cognn_dataset_save(ds.ptr, out_path.c_str(), 1);
    if (s != COGNN_OK) die(kExitRuntime, cognn_last_error());
    json summary;
    summary["samples"] = cognn_dataset_size(ds.ptr);
    summary["path"] = out_path;
    std::cout << summary.dump() << "\n";
    return kExitOk;
}

int cmd_train(const std::string& data_path, const std::string& variant_name,
              const std::string& config_path, const std::string& ckpt_path,
              std::string history_path) {
    Config cfg = load_config(config_path);

    cognn_variant variant;
    if (cognn_variant_parse(variant_name.c_str(), &variant) != COGNN_OK) {
        die(kExitUsage, cognn_last_error());
    }
    cfg.model.variant = variant;

    DatasetHandle ds;
    load_dataset_or_die(data_path, ds);
    if (cognn_dataset_size(ds.ptr) == 0) die(kExitUsage, "dataset is empty: " + data_path);
    cfg.model.input_dim = cognn_dataset_feature_dim(ds.ptr);

    DatasetHandle train, val, test;
    cognn_status s = cognn_dataset_split(ds.ptr, cfg.train.seed, &train.ptr, &val.ptr, &test.ptr);
    if (s != COGNN_OK) die(exit_code_for(s), cognn_last_error());

    ModelHandle model;
    s = cognn_model_create(&cfg.model, cfg.train.seed, &model.ptr);
    if (s != COGNN_OK) die(exit_code_for(s), cognn_last_error());

    cognn_history* history = nullptr;
    s = cognn_train(model.ptr, train.ptr, val.ptr, &cfg.train,
                    log_level() >= 1 ? epoch_logger : nullptr, nullptr, &history);
    if (s != COGNN_OK) die(kExitRuntime, cognn_last_error());

    s = cognn_model_save(model.ptr, ckpt_path.c_str());
    if (s != COGNN_OK) {
        cognn_history_free(history);
        die(kExitRuntime, cognn_last_error());
    }
    if (history_path.empty()) history_path = ckpt_path + ".history.csv";
    write_history_csv(history_path, history);

    cognn_metrics val_metrics{};
    s = cognn_evaluate(model.ptr, val.ptr, &val_metrics);
    if (s != COGNN_OK) {
        cognn_history_free(history);
        die(kExitRuntime, cognn_last_error());
    }

    json out;
    out["variant"] = variant_name;
    out["best_epoch"] = cognn_history_best_epoch(history);
    out["epochs_run"] = cognn_history_length(history);
    out["validation"] = metrics_to_json(val_metrics);
    out["checkpoint"] = ckpt_path;
    out["history"] = history_path;
    std::cout << out.dump() << "\n";
    cognn_history_free(history);
    return kExitOk;
}

int cmd_eval(const std::string& data_path, const std::string& ckpt_path) {
    ModelHandle model;
    cognn_status s = cognn_model_load(ckpt_path.c_str(), &model.ptr);
    if (s != COGNN_OK) die(exit_code_for(s), cognn_last_error());

    DatasetHandle ds;
    load_dataset_or_die(data_path, ds);

    cognn_model_config mcfg{};
    cognn_model_get_config(model.ptr, &mcfg);
    const int32_t data_dim = cognn_dataset_feature_dim(ds.ptr);
    if (data_dim != mcfg.input_dim) {
        die(kExitUsage, "feature dimension mismatch: checkpoint expects " +
                            std::to_string(mcfg.input_dim) + ", dataset provides " +
                            std::to_string(data_dim));
    }

    cognn_metrics metrics{};
    s = cognn_evaluate(model.ptr, ds.ptr, &metrics);
    if (s != COGNN_OK) die(kExitRuntime, cognn_last_error());
    std::cout << metrics_to_json(metrics).dump() << "\n";
    return kExitOk;
}

int cmd_compare(const std::string& data_path, int32_t n_seeds, const std::string& config_path,
                const std::string& variants_arg, uint64_t split_seed) {
    Config cfg = load_config(config_path);

    std::vector<cognn_variant> variants;
    {
        std::stringstream ss(variants_arg);
        std::string name;
        while (std::getline(ss, name, ',')) {
            cognn_variant v;
            if (cognn_variant_parse(name.c_str(), &v) != COGNN_OK) die(kExitUsage, cognn_last_error());
            variants.push_back(v);
        }
    }
    if (variants.empty()) die(kExitUsage, "no variants given");
    if (n_seeds < 1) die(kExitUsage, "--seeds must be at least 1");

    DatasetHandle ds;
    load_dataset_or_die(data_path, ds);
    if (cognn_dataset_size(ds.ptr) == 0) die(kExitUsage, "dataset is empty: " + data_path);
    cfg.model.input_dim = cognn_dataset_feature_dim(ds.ptr);

    std::vector<uint64_t> seeds;
    for (int32_t i = 0; i < n_seeds; ++i) seeds.push_back(cfg.train.seed + static_cast<uint64_t>(i));

    cognn_table* table = nullptr;
    cognn_status s = cognn_compare(ds.ptr, split_seed, variants.data(),
                                   static_cast<int32_t>(variants.size()), seeds.data(), n_seeds,
                                   &cfg.model, &cfg.train, &table);
    if (s != COGNN_OK) die(kExitRuntime, cognn_last_error());

    json cells = json::array();
    // mean and sample sd per variant, over successful cells
    struct Agg {
        std::vector<double> logloss, accuracy;
    };
    std::vector<std::pair<cognn_variant, Agg>> aggregates;
    const int64_t n = cognn_table_size(table);
    for (int64_t i = 0; i < n; ++i) {
        cognn_variant v;
        uint64_t seed;
        int32_t ok, best_epoch, epochs_run;
        cognn_metrics m{};
        cognn_table_cell(table, i, &v, &seed, &ok, &m, &best_epoch, &epochs_run);

        json cell;
        cell["variant"] = cognn_variant_name(v);
        cell["seed"] = seed;
        cell["ok"] = ok != 0;
        if (ok) {
            cell["logloss"] = m.logloss;
            cell["accuracy"] = m.accuracy;
            cell["best_epoch"] = best_epoch;
            cell["epochs_run"] = epochs_run;
        } else {
            cell["error"] = cognn_table_cell_error(table, i);
        }
        cells.push_back(cell);

        Agg* agg = nullptr;
        for (auto& [known, a] : aggregates) {
            if (known == v) agg = &a;
        }
        if (!agg) {
            aggregates.push_back({v, {}});
            agg = &aggregates.back().second;
        }
        if (ok) {
            agg->logloss.push_back(m.logloss);
            agg->accuracy.push_back(m.accuracy);
        }
    }
    cognn_table_free(table);

    auto mean = [](const std::vector<double>& xs) {
        double acc = 0;
        for (double x : xs) acc += x;
        return xs.empty() ? 0.0 : acc / static_cast<double>(xs.size());
    };
    auto sample_sd = [&](const std::vector<double>& xs) {
        if (xs.size() < 2) return 0.0;
        const double mu = mean(xs);
        double acc = 0;
        for (double x : xs) acc += (x - mu) * (x - mu);
        return std::sqrt(acc / static_cast<double>(xs.size() - 1));
    };

    json summary = json::array();
    for (const auto& [v, agg] : aggregates) {
        json row;
        row["variant"] = cognn_variant_name(v);
        row["seeds_ok"] = agg.accuracy.size();
        row["mean_logloss"] = mean(agg.logloss);
        row["sd_logloss"] = sample_sd(agg.logloss);
        row["mean_accuracy"] = mean(agg.accuracy);
        row["sd_accuracy"] = sample_sd(agg.accuracy);
        summary.push_back(row);
    }

    json out;
    out["cells"] = cells;
    out["summary"] = summary;
    std::cout << out.dump() << "\n";

    // Aligned text mirror for humans, kept off stdout.
    std::fprintf(stderr, "%-22s %8s %12s %12s %12s %12s\n", "variant", "seeds", "mean_loss",
                 "sd_loss", "mean_acc", "sd_acc");
    for (const auto& row : summary) {
        std::fprintf(stderr, "%-22s %8d %12.4f %12.4f %12.4f %12.4f\n",
                     row["variant"].get<std::string>().c_str(), row["seeds_ok"].get<int>(),
                     row["mean_logloss"].get<double>(), row["sd_logloss"].get<double>(),
                     row["mean_accuracy"].get<double>(), row["sd_accuracy"].get<double>());
    }
    return kExitOk;
}

int cmd_gradcheck(uint64_t seed, int32_t instantiations) {
    int64_t checks = 0, failures = 0;
    double max_rel_err = 0.0;
    cognn_status s = cognn_gradcheck(seed, instantiations, &checks, &failures, &max_rel_err);
    if (s != COGNN_OK) die(kExitRuntime, cognn_last_error());

    json out;
    out["checks"] = checks;
    out["failures"] = failures;
    out["max_rel_err"] = max_rel_err;
    std::cout << out.dump() << "\n";
    if (failures > 0) {
        std::cerr << "cognn: gradient checks failed: " << cognn_last_error() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-branch collaborative graph neural network toolkit"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic cross-modal dataset");
    std::string synth_out;
    int64_t synth_n = 0;
    uint64_t synth_seed = 0;
    cognn_synth_spec spec_defaults;
    cognn_synth_spec_defaults(&spec_defaults);
    double synth_strength = spec_defaults.cross_modal_strength;
    double synth_noise = spec_defaults.noise_sigma;
    int32_t synth_dim = spec_defaults.feature_dim;
    synth->add_option("--out", synth_out, "Output dataset path (JSONL)")->required();
    synth->add_option("--n", synth_n, "Number of samples")->required();
    synth->add_option("--seed", synth_seed, "Generator seed")->required();
    synth->add_option("--strength", synth_strength, "Cross-modal agreement strength in [0,1]");
    synth->add_option("--noise", synth_noise, "Per-node Gaussian noise sigma");
    synth->add_option("--dim", synth_dim, "Feature dimension");

    // build-graphs
    auto* build = app.add_subcommand("build-graphs", "Attach cosine top-50% edge lists to records");
    std::string build_in, build_out;
    build->add_option("--in", build_in, "Input dataset (features, edges optional)")->required();
    build->add_option("--out", build_out, "Output dataset with edge lists")->required();

    // train
    auto* train = app.add_subcommand("train", "Train one model variant");
    std::string train_data, train_variant = "collaborative", train_config, train_ckpt, train_history;
    bool print_config = false;
    train->add_option("--data", train_data, "Dataset path (JSONL)");
    train->add_option("--variant", train_variant, "Model variant name");
    train->add_option("--config", train_config, "JSON config file (flat keys, all optional)");
    train->add_option("--out", train_ckpt, "Checkpoint output path");
    train->add_option("--history", train_history, "History CSV path (default: <ckpt>.history.csv)");
    train->add_flag("--print-config", print_config, "Print the default config as JSON and exit");

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
    std::string eval_data, eval_ckpt;
    eval->add_option("--data", eval_data, "Dataset path (JSONL)")->required();
    eval->add_option("--ckpt", eval_ckpt, "Checkpoint path")->required();

    // compare
    auto* compare = app.add_subcommand("compare", "Train and score all variants across seeds");
    std::string compare_data, compare_config;
    std::string compare_variants =
        "collaborative,two_branch_sagpool,two_branch_plain,image_only,text_only,two_branch_avg";
    int32_t compare_seeds = 1;
    uint64_t compare_split_seed = 0;
    compare->add_option("--data", compare_data, "Dataset path (JSONL)")->required();
    compare->add_option("--seeds", compare_seeds, "Number of seeds (base seed from config)");
    compare->add_option("--config", compare_config, "JSON config file");
    compare->add_option("--variants", compare_variants, "Comma-separated variant names");
    compare->add_option("--split-seed", compare_split_seed, "Seed for the 80/10/10 split");

    // gradcheck
    auto* gradcheck = app.add_subcommand("gradcheck", "Run the finite-difference gradient suite");
    uint64_t gc_seed = 20260810;
    int32_t gc_inst = 20;
    gradcheck->add_option("--seed", gc_seed, "Suite seed");
    gradcheck->add_option("--instantiations", gc_inst, "Random instances per check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (synth->parsed()) {
            return cmd_synth(synth_out, synth_n, synth_seed, synth_strength, synth_noise, synth_dim);
        }
        if (build->parsed()) return cmd_build_graphs(build_in, build_out);
        if (train->parsed()) {
            if (print_config) {
                std::cout << config_to_json(default_config()).dump(2) << "\n";
                return kExitOk;
            }
            if (train_data.empty() || train_ckpt.empty()) {
                die(kExitUsage, "train requires --data and --out");
            }
            return cmd_train(train_data, train_variant, train_config, train_ckpt, train_history);
        }
        if (eval->parsed()) return cmd_eval(eval_data, eval_ckpt);
        if (compare->parsed()) {
            return cmd_compare(compare_data, compare_seeds, compare_config, compare_variants,
                               compare_split_seed);
        }
        if (gradcheck->parsed()) return cmd_gradcheck(gc_seed, gc_inst);
    } catch (const std::exception& e) {
        die(kExitRuntime, e.what());
    }
    return kExitUsage;
}
