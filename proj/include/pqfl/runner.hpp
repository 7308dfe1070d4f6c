// Copyright 2026 The PQFL Simulator Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
/**
 * @file
 * Experiment runner: JSON configuration, end-to-end seeded runs, ablation
 * sweeps and cross-run comparison.
 *
 * A run directory contains
 *   config.json     resolved configuration (all defaults filled in)
 *   history.csv     one row per round, see federation::kHistoryCsvHeader
 *   summary.json    final metrics, rounds-to-target, payload totals
 *   params.bin      final global parameters, see model::to_binary
 *   partition.json  per-client sample indices and heterogeneity stats
 */
#pragma once

#include "pqfl/data.hpp"
#include "pqfl/errors.hpp"
#include "pqfl/federation.hpp"
#include "pqfl/model.hpp"
#include "pqfl/rng.hpp"

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace pqfl::runner {

namespace fs = std::filesystem;
using nlohmann::json;

/// Defaults for every recognized top-level key.
inline json default_config() {
    return json{
        {"mode", "pqfl"},
        {"master_seed", 0},
        {"output_dir", "runs/default"},
        {"threads", 1},
        {"dataset", json::object()},
        {"n_qubits", 4},
        {"n_layers", 3},
        {"entangler", "linear"},
        {"n_clients", 10},
        {"global_rounds", 50},
        {"local_epochs", 20},
        {"batch_size", 16},
        {"eta", 0.01},
        {"lambda", 0.1},
        {"shots", 1000},
        {"noise_epsilon", 0.0},
        {"client_weights", "uniform"},
        {"partition", {{"scheme", "dirichlet"}, {"alpha", 0.1}}},
        {"validation_fraction", 0.2},
        {"data_fraction", 1.0},
        {"score", "max_softmax"},
        {"threshold", nullptr},
        {"target_loss", nullptr},
        {"bits_per_value", 32},
        {"sweep", json::object()},
    };
}

/// Sweep axes in expansion order (first axis varies slowest).
inline const std::vector<std::string> &sweep_axes() {
    static const std::vector<std::string> axes{"lambda", "epsilon", "shots", "n_clients",
                                               "data_fraction"};
    return axes;
}

struct SyntheticSpec {
    std::size_t normal_classes = 4;
    std::size_t per_class = 100;
    std::size_t anomalies = 100;
    std::size_t dim = 16;
    double separation = 10.0;
};

struct ExperimentConfig {
    std::string mode = "pqfl";
    federation::FederationConfig fed;
    std::optional<std::string> dataset_path;
    std::set<int> anomaly_classes;
    SyntheticSpec synthetic;
    data::PartitionScheme partition = data::PartitionScheme::dirichlet(0.1);
    std::string weight_rule = "uniform"; ///< uniform | size | explicit
    std::vector<double> noise_epsilons;  ///< one value or one per client
    double validation_fraction = 0.2;
    double data_fraction = 1.0;
    std::optional<double> target_loss;
    std::string output_dir = "runs/default";
    std::map<std::string, std::vector<json>> sweep;
    json resolved; ///< full config document with defaults applied
};

namespace detail {

template <class T> T get_as(const json &j, const std::string &key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception &e) {
        throw ConfigError(key + ": " + e.what());
    }
}

inline std::size_t positive_size(const json &j, const std::string &key) {
    const auto v = get_as<long long>(j, key);
    if (v < 1) {
        throw ConfigError(key + ": must be >= 1");
    }
    return static_cast<std::size_t>(v);
}

} // namespace detail

/// Validates a configuration document and resolves it against defaults.
/// Relative dataset paths are resolved against `base_dir`.
inline ExperimentConfig parse_config(const json &doc, const fs::path &base_dir = {}) {
    if (!doc.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    json j = default_config();
    for (const auto &[key, value] : doc.items()) {
        if (!j.contains(key)) {
            throw ConfigError("unknown config key '" + key + "'");
        }
        j[key] = value;
    }
    using detail::get_as;
    using detail::positive_size;
    ExperimentConfig c;
    c.mode = get_as<std::string>(j, "mode");
    if (c.mode != "qfl" && c.mode != "pqfl" && c.mode != "local") {
        throw ConfigError("mode: expected qfl, pqfl or local, got '" + c.mode + "'");
    }
    auto &fed = c.fed;
    fed.algorithm =
        c.mode == "pqfl" ? federation::Algorithm::pqfl : federation::Algorithm::qfl;
    fed.master_seed = get_as<std::uint64_t>(j, "master_seed");
    fed.threads = positive_size(j, "threads");
    c.output_dir = get_as<std::string>(j, "output_dir");

    // dataset
    const json &ds = j.at("dataset");
    if (!ds.is_object() || ds.empty()) {
        throw ConfigError("dataset: required (object with 'path' or 'synthetic')");
    }
    for (const auto &[key, value] : ds.items()) {
        if (key != "path" && key != "anomaly_classes" && key != "synthetic") {
            throw ConfigError("unknown config key 'dataset." + key + "'");
        }
    }
    if (ds.contains("path") == ds.contains("synthetic")) {
        throw ConfigError("dataset: exactly one of 'path' or 'synthetic' is required");
    }
    if (ds.contains("path")) {
        fs::path p = get_as<std::string>(ds, "path");
        if (p.is_relative() && !base_dir.empty()) {
            p = base_dir / p;
        }
        if (!fs::exists(p)) {
            throw ConfigError("dataset.path: file not found: " + p.string());
        }
        c.dataset_path = p.string();
        if (ds.contains("anomaly_classes")) {
            const auto v = get_as<std::vector<int>>(ds, "anomaly_classes");
            c.anomaly_classes.insert(v.begin(), v.end());
        }
    } else {
        const json &s = ds.at("synthetic");
        SyntheticSpec syn;
        for (const auto &[key, value] : s.items()) {
            if (key == "normal_classes") {
                syn.normal_classes = positive_size(s, key);
            } else if (key == "per_class") {
                syn.per_class = positive_size(s, key);
            } else if (key == "anomalies") {
                syn.anomalies = get_as<std::size_t>(s, key);
            } else if (key == "dim") {
                syn.dim = positive_size(s, key);
            } else if (key == "separation") {
                syn.separation = get_as<double>(s, key);
            } else {
                throw ConfigError("unknown config key 'dataset.synthetic." + key + "'");
            }
        }
        if (syn.dim < 2) {
            throw ConfigError("dataset.synthetic.dim: must be >= 2");
        }
        if (!(syn.separation > 0.0)) {
            throw ConfigError("dataset.synthetic.separation: must be positive");
        }
        c.synthetic = syn;
    }

    // circuit and training
    fed.spec.n_qubits = positive_size(j, "n_qubits");
    fed.spec.n_layers = positive_size(j, "n_layers");
    const auto ent = get_as<std::string>(j, "entangler");
    if (ent == "linear") {
        fed.spec.entangler = model::Entangler::linear_chain;
    } else if (ent == "ring") {
        fed.spec.entangler = model::Entangler::ring;
    } else {
        throw ConfigError("entangler: expected linear or ring");
    }
    if (fed.spec.n_qubits > quantum::kMaxQubits) {
        throw ConfigError("n_qubits: at most " + std::to_string(quantum::kMaxQubits));
    }
    fed.n_clients = c.mode == "local" ? 1 : positive_size(j, "n_clients");
    fed.global_rounds = positive_size(j, "global_rounds");
    fed.train.local_epochs = positive_size(j, "local_epochs");
    fed.train.batch_size = positive_size(j, "batch_size");
    fed.train.eta = get_as<double>(j, "eta");
    fed.train.lambda = get_as<double>(j, "lambda");
    fed.train.mode = training::Mode::classify;
    if (!(fed.train.eta >= 0.0)) {
        throw ConfigError("eta: must be non-negative");
    }
    if (!(fed.train.lambda >= 0.0)) {
        throw ConfigError("lambda: must be non-negative");
    }

    const json &shots = j.at("shots");
    if (shots.is_string() && shots.get<std::string>() == "exact") {
        fed.shots = quantum::ShotSpec::exact();
    } else if (shots.is_number_integer() && shots.get<long long>() >= 1) {
        fed.shots = quantum::ShotSpec::finite(shots.get<std::uint64_t>());
    } else {
        throw ConfigError("shots: expected a positive integer or \"exact\"");
    }

    const json &eps = j.at("noise_epsilon");
    if (eps.is_number()) {
        c.noise_epsilons = {eps.get<double>()};
    } else if (eps.is_array()) {
        c.noise_epsilons = get_as<std::vector<double>>(j, "noise_epsilon");
        if (c.noise_epsilons.size() != fed.n_clients) {
            throw ConfigError("noise_epsilon: list must have one entry per client");
        }
    } else {
        throw ConfigError("noise_epsilon: expected a number or a list");
    }
    fed.noise.clear();
    for (double e : c.noise_epsilons) {
        if (!(e >= 0.0 && e <= 1.0)) {
            throw ConfigError("noise_epsilon: values must lie in [0, 1]");
        }
        fed.noise.push_back(e > 0.0 ? quantum::NoiseSpec::depolarizing(e)
                                    : quantum::NoiseSpec::off());
    }
    fed.validation_noise = fed.noise.front();

    const json &w = j.at("client_weights");
    if (w.is_string()) {
        c.weight_rule = w.get<std::string>();
        if (c.weight_rule != "uniform" && c.weight_rule != "size") {
            throw ConfigError("client_weights: expected \"uniform\", \"size\" or a list");
        }
    } else if (w.is_array()) {
        c.weight_rule = "explicit";
        fed.client_weights = get_as<std::vector<double>>(j, "client_weights");
        if (fed.client_weights.size() != fed.n_clients) {
            throw ConfigError("client_weights: expected " + std::to_string(fed.n_clients) +
                              " entries");
        }
        double sum = 0.0;
        for (double a : fed.client_weights) {
            if (!(a > 0.0)) {
                throw ConfigError("client_weights: entries must be positive");
            }
            sum += a;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            std::ostringstream os;
            os << "client_weights: must sum to 1 (got " << sum << ")";
            throw ConfigError(os.str());
        }
    } else {
        throw ConfigError("client_weights: expected \"uniform\", \"size\" or a list");
    }

    const json &part = j.at("partition");
    const auto scheme = get_as<std::string>(part, "scheme");
    for (const auto &[key, value] : part.items()) {
        if (key != "scheme" && key != "alpha" && key != "remainder") {
            throw ConfigError("unknown config key 'partition." + key + "'");
        }
    }
    if (c.mode == "local" || scheme == "iid") {
        c.partition = data::PartitionScheme::iid();
    } else if (scheme == "dirichlet") {
        const double alpha = part.contains("alpha") ? get_as<double>(part, "alpha") : 0.1;
        if (!(alpha > 0.0)) {
            throw ConfigError("partition.alpha: must be positive");
        }
        c.partition = data::PartitionScheme::dirichlet(alpha);
    } else if (scheme == "step") {
        const double rem = part.contains("remainder") ? get_as<double>(part, "remainder") : 0.05;
        if (!(rem >= 0.0 && rem < 1.0)) {
            throw ConfigError("partition.remainder: must lie in [0, 1)");
        }
        c.partition = data::PartitionScheme::step(rem);
    } else {
        throw ConfigError("partition.scheme: expected iid, step or dirichlet");
    }

    c.validation_fraction = get_as<double>(j, "validation_fraction");
    if (!(c.validation_fraction > 0.0 && c.validation_fraction < 1.0)) {
        throw ConfigError("validation_fraction: must lie in (0, 1)");
    }
    c.data_fraction = get_as<double>(j, "data_fraction");
    if (!(c.data_fraction > 0.0 && c.data_fraction <= 1.0)) {
        throw ConfigError("data_fraction: must lie in (0, 1]");
    }
    const auto score = get_as<std::string>(j, "score");
    if (score == "max_softmax") {
        fed.score = federation::ScoreKind::max_softmax;
    } else if (score == "centroid") {
        fed.score = federation::ScoreKind::centroid;
    } else {
        throw ConfigError("score: expected max_softmax or centroid");
    }
    if (!j.at("threshold").is_null()) {
        fed.fixed_threshold = get_as<double>(j, "threshold");
    }
    if (!j.at("target_loss").is_null()) {
        c.target_loss = get_as<double>(j, "target_loss");
    }
    fed.bits_per_value = static_cast<unsigned>(positive_size(j, "bits_per_value"));

    const json &sweep = j.at("sweep");
    if (!sweep.is_object()) {
        throw ConfigError("sweep: expected an object of axis lists");
    }
    for (const auto &[axis, values] : sweep.items()) {
        if (std::find(sweep_axes().begin(), sweep_axes().end(), axis) == sweep_axes().end()) {
            throw ConfigError("unknown config key 'sweep." + axis + "'");
        }
        if (!values.is_array() || values.empty()) {
            throw ConfigError("sweep." + axis + ": must be a non-empty list");
        }
        c.sweep[axis] = values.get<std::vector<json>>();
    }
    j["dataset"] = ds;
    if (c.dataset_path) {
        j["dataset"]["path"] = *c.dataset_path;
    }
    c.resolved = j;
    return c;
}

inline json read_json_file(const fs::path &path) {
    std::ifstream f(path);
    if (!f) {
        throw ConfigError("cannot open config " + path.string());
    }
    try {
        return json::parse(f);
    } catch (const json::parse_error &e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

/// Reads and validates a JSON config file.
inline ExperimentConfig load_config(const fs::path &path) {
    auto doc = read_json_file(path);
    return parse_config(doc, path.parent_path());
}

/// PQFL_SEED and PQFL_OUTPUT_DIR override the corresponding keys.
inline void apply_env_overrides(json &doc) {
    if (const char *seed = std::getenv("PQFL_SEED"); seed != nullptr && *seed != '\0') {
        try {
            doc["master_seed"] = std::stoull(seed);
        } catch (const std::exception &) {
            throw ConfigError("PQFL_SEED: not an unsigned integer");
        }
    }
    if (const char *out = std::getenv("PQFL_OUTPUT_DIR"); out != nullptr && *out != '\0') {
        doc["output_dir"] = std::string(out);
    }
}

// Running ---------------------------------------------------------------------

/// Everything a run produced, in memory.
struct RunResult {
    fs::path dir;
    federation::FederationResult federation;
    data::PartitionStats partition_stats;
    json summary;
};

struct PreparedData {
    std::vector<std::vector<encoding::FeatureVector>> shards;
    federation::ValidationSet validation;
    data::PartitionedDataset partition;
    data::PartitionStats stats;
    std::size_t n_classes = 0;
};

/// Dataset -> projection -> train/validation split -> partition.
inline PreparedData prepare_data(const ExperimentConfig &c) {
    const auto seed = c.fed.master_seed;
    data::LabeledDataset ds;
    if (c.dataset_path) {
        ds = data::mark_anomalies(data::load_features(*c.dataset_path), c.anomaly_classes);
    } else {
        Rng rng = make_rng(seed, Stream::data);
        const auto &s = c.synthetic;
        ds = data::synth_anomaly_dataset(s.normal_classes, s.per_class, s.anomalies, s.dim,
                                         s.separation, rng);
    }
    if (ds.normal_classes.empty()) {
        throw DataError("dataset has no normal classes");
    }
    const std::size_t amp_dim = c.fed.spec.dim();
    if (ds.dim() > amp_dim) {
        Rng rng = make_rng(seed, Stream::projection);
        ds = data::reduce_features(ds, amp_dim, rng);
    }
    Rng split_rng = make_rng(seed, Stream::split);
    auto split = data::split_train_validation(ds, c.validation_fraction, split_rng);
    Rng frac_rng = make_rng(seed, Stream::split, {1});
    split.train = data::subsample(split.train, c.data_fraction, frac_rng);

    const auto index = data::class_index(ds);
    for (auto &s : split.train.samples) {
        s.label = index.at(s.label);
    }
    PreparedData out;
    out.n_classes = index.size();
    for (const auto &s : split.validation.samples) {
        const bool anomalous = split.validation.is_anomaly(s.label);
        auto copy = s;
        copy.label = anomalous ? -1 : index.at(s.label);
        out.validation.samples.push_back(std::move(copy));
        out.validation.is_anomaly.push_back(anomalous ? 1 : 0);
    }
    data::LabeledDataset train_indexed;
    train_indexed.samples = std::move(split.train.samples);
    for (const auto &[cls, k] : index) {
        train_indexed.normal_classes.insert(k);
    }
    Rng part_rng = make_rng(seed, Stream::partition);
    out.partition = data::partition(train_indexed, c.partition, c.fed.n_clients, part_rng);
    out.stats = data::heterogeneity(out.partition, train_indexed);
    for (const auto &shard : out.partition.shards) {
        out.shards.push_back(data::shard_samples(train_indexed, shard));
    }
    return out;
}

inline void write_text(const fs::path &p, const std::string &text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) {
        throw DataError("cannot write " + p.string());
    }
    f << text;
}

/// Runs one experiment into `config.output_dir`.
inline RunResult run(const ExperimentConfig &config) {
    auto prepared = prepare_data(config);
    federation::FederationConfig fed = config.fed;
    fed.n_classes = prepared.n_classes;
    if (config.weight_rule == "size") {
        std::size_t total = 0;
        for (const auto &s : prepared.shards) {
            total += s.size();
        }
        fed.client_weights.clear();
        for (const auto &s : prepared.shards) {
            fed.client_weights.push_back(static_cast<double>(s.size()) /
                                         static_cast<double>(total));
        }
    }

    RunResult res;
    res.federation = federation::run_federation(fed, prepared.shards, prepared.validation);
    res.partition_stats = prepared.stats;
    res.dir = config.output_dir;
    fs::create_directories(res.dir);

    const auto &hist = res.federation.history;
    json summary = federation::summary_json(hist, config.target_loss);
    summary["mode"] = config.mode;
    summary["master_seed"] = fed.master_seed;
    summary["n_clients"] = fed.n_clients;
    summary["global_rounds"] = fed.global_rounds;
    summary["quantum_param_count"] = fed.spec.param_count();
    summary["bits_per_value"] = fed.bits_per_value;
    summary["avg_pairwise_kl"] = prepared.stats.avg_pairwise_kl;
    summary["client_weights"] = fed.weights();
    res.summary = summary;

    write_text(res.dir / "config.json", config.resolved.dump(2) + "\n");
    std::ostringstream csv;
    federation::write_history_csv(csv, hist);
    write_text(res.dir / "history.csv", csv.str());
    write_text(res.dir / "summary.json", summary.dump(2) + "\n");
    write_text(res.dir / "params.bin", model::to_binary(res.federation.final_params));
    write_text(res.dir / "partition.json",
               data::manifest_json(prepared.partition, prepared.stats).dump(2) + "\n");
    return res;
}

// Sweeps ----------------------------------------------------------------------

struct SweepPoint {
    std::vector<std::pair<std::string, json>> assignment;
    std::string name; ///< directory name
};

inline std::string axis_value_text(const json &v) {
    if (v.is_string()) {
        return v.get<std::string>();
    }
    if (v.is_number_float()) {
        return federation::format_double(v.get<double>());
    }
    return v.dump();
}

/// Cartesian product of the sweep axes, in sweep_axes() order with the first
/// axis varying slowest and values in the order they were listed.
inline std::vector<SweepPoint> expand_sweep(const ExperimentConfig &c) {
    std::vector<SweepPoint> points{SweepPoint{}};
    for (const auto &axis : sweep_axes()) {
        auto it = c.sweep.find(axis);
        if (it == c.sweep.end()) {
            continue;
        }
        std::vector<SweepPoint> next;
        for (const auto &p : points) {
            for (const auto &v : it->second) {
                auto q = p;
                q.assignment.emplace_back(axis, v);
                next.push_back(std::move(q));
            }
        }
        points = std::move(next);
    }
    for (std::size_t k = 0; k < points.size(); ++k) {
        std::ostringstream name;
        name << std::setw(3) << std::setfill('0') << k;
        for (const auto &[axis, v] : points[k].assignment) {
            name << '_' << axis << '-' << axis_value_text(v);
        }
        points[k].name = name.str();
    }
    return points;
}

/// Applies one sweep point to a resolved config document.
inline json apply_point(json doc, const SweepPoint &p) {
    doc["sweep"] = json::object();
    for (const auto &[axis, v] : p.assignment) {
        if (axis == "epsilon") {
            doc["noise_epsilon"] = v;
        } else {
            doc[axis] = v;
        }
    }
    return doc;
}

struct SweepResult {
    std::vector<SweepPoint> points;
    std::vector<RunResult> runs;
};

/// Runs every sweep point into its own sub-directory of output_dir and writes
/// sweep.csv (one row per point, in expansion order).
inline SweepResult sweep(const ExperimentConfig &config) {
    SweepResult out;
    out.points = expand_sweep(config);
    const fs::path root = config.output_dir;
    fs::create_directories(root);
    std::ostringstream table;
    for (const auto &axis : sweep_axes()) {
        if (config.sweep.contains(axis)) {
            table << axis << ',';
        }
    }
    table << "dir,final_val_loss,final_fe_pct,final_me_pct,final_auroc,final_aupr,"
             "rounds_to_target,total_payload_bits\n";
    for (const auto &p : out.points) {
        auto doc = apply_point(config.resolved, p);
        doc["output_dir"] = (root / p.name).string();
        auto pc = parse_config(doc);
        out.runs.push_back(run(pc));
        const auto &s = out.runs.back().summary;
        for (const auto &[axis, v] : p.assignment) {
            table << axis_value_text(v) << ',';
        }
        const auto &fin = s.at("final");
        auto num = [](const json &v) {
            return v.is_null() ? std::string("nan") : federation::format_double(v.get<double>());
        };
        table << p.name << ',' << num(fin.at("val_loss")) << ',' << num(fin.at("fe_pct")) << ','
              << num(fin.at("me_pct")) << ',' << num(fin.at("auroc")) << ','
              << num(fin.at("aupr")) << ','
              << (s.at("rounds_to_target").is_null() ? std::string("none")
                                                     : s.at("rounds_to_target").dump())
              << ',' << s.at("total_payload_bits").dump() << '\n';
    }
    write_text(root / "sweep.csv", table.str());
    return out;
}

// Comparison ------------------------------------------------------------------

struct CompareRow {
    std::string dir;
    std::string mode;
    std::size_t rounds = 0;
    double final_val_loss = 0.0;
    double fe_pct = 0.0;
    double me_pct = 0.0;
    double auroc = 0.0;
    double aupr = 0.0;
    std::optional<std::size_t> rounds_to_target;
    std::uint64_t total_payload_bits = 0;
};

struct ComparisonTable {
    std::vector<CompareRow> rows;
    bool unequal_horizons = false;
};

namespace detail {

inline double parse_cell(const std::string &s) {
    if (s == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return std::stod(s);
}

} // namespace detail

/// Reads history.csv and summary.json of one run directory.
inline CompareRow read_run(const fs::path &dir) {
    const auto hist_path = dir / "history.csv";
    std::ifstream h(hist_path);
    if (!h) {
        throw DataError("missing history file " + hist_path.string());
    }
    const auto summary_path = dir / "summary.json";
    std::ifstream sf(summary_path);
    if (!sf) {
        throw DataError("missing summary file " + summary_path.string());
    }
    const json s = json::parse(sf);

    CompareRow row;
    row.dir = dir.string();
    row.mode = s.value("mode", std::string("?"));
    std::optional<double> target;
    if (s.contains("target_loss") && !s.at("target_loss").is_null()) {
        target = s.at("target_loss").get<double>();
    }
    std::string line;
    std::getline(h, line); // header
    while (std::getline(h, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        if (cells.size() < 10) {
            throw DataError(hist_path.string() + ": malformed row");
        }
        ++row.rounds;
        row.final_val_loss = detail::parse_cell(cells[1]);
        row.fe_pct = detail::parse_cell(cells[2]);
        row.me_pct = detail::parse_cell(cells[3]);
        row.auroc = detail::parse_cell(cells[4]);
        row.aupr = detail::parse_cell(cells[5]);
        row.total_payload_bits += std::stoull(cells[7]);
        if (target && !row.rounds_to_target && row.final_val_loss <= *target) {
            row.rounds_to_target = static_cast<std::size_t>(std::stoull(cells[0]));
        }
    }
    return row;
}

inline ComparisonTable compare(const std::vector<fs::path> &run_dirs) {
    if (run_dirs.size() < 2) {
        throw DataError("compare needs at least two run directories");
    }
    ComparisonTable t;
    for (const auto &d : run_dirs) {
        t.rows.push_back(read_run(d));
    }
    for (const auto &r : t.rows) {
        if (r.rounds != t.rows.front().rounds) {
            t.unequal_horizons = true;
        }
    }
    return t;
}

/// Plain-text rendering with deltas against the first run.
inline std::string render(const ComparisonTable &t) {
    std::ostringstream os;
    os << "run,mode,rounds,final_val_loss,fe_pct,me_pct,auroc,aupr,rounds_to_target,"
          "total_payload_bits,d_auroc,d_aupr,d_fe_pct,d_me_pct\n";
    const auto &base = t.rows.front();
    auto f = federation::format_double;
    for (const auto &r : t.rows) {
        os << r.dir << ',' << r.mode << ',' << r.rounds << ',' << f(r.final_val_loss) << ','
           << f(r.fe_pct) << ',' << f(r.me_pct) << ',' << f(r.auroc) << ',' << f(r.aupr) << ','
           << (r.rounds_to_target ? std::to_string(*r.rounds_to_target) : "none") << ','
           << r.total_payload_bits << ',' << f(r.auroc - base.auroc) << ','
           << f(r.aupr - base.aupr) << ',' << f(r.fe_pct - base.fe_pct) << ','
           << f(r.me_pct - base.me_pct) << '\n';
    }
    if (t.unequal_horizons) {
        os << "WARNING: runs have unequal round horizons\n";
    }
    return os.str();
}

} // namespace pqfl::runner
