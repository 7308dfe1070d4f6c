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
 * Federated round orchestration.
 *
 * Each round broadcasts the global parameters, trains every client locally
 * (plain SGD for QFL, proximal updates anchored at the broadcast parameters
 * for PQFL), aggregates, and evaluates the new global model on a held-out
 * validation set. Client k of round r draws from its own generator derived
 * from (master_seed, r, k), so concurrent and sequential schedules produce
 * identical histories.
 */
#pragma once

#include "pqfl/encoding.hpp"
#include "pqfl/errors.hpp"
#include "pqfl/metrics.hpp"
#include "pqfl/model.hpp"
#include "pqfl/quantum.hpp"
#include "pqfl/rng.hpp"
#include "pqfl/training.hpp"

#include "json.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace pqfl::federation {

using encoding::FeatureVector;
using model::CircuitSpec;
using model::ModelParams;
using quantum::NoiseSpec;
using quantum::ShotSpec;
using training::TrainConfig;

enum class Algorithm { qfl, pqfl };
enum class ScoreKind { max_softmax, centroid };

inline std::string to_string(Algorithm a) { return a == Algorithm::qfl ? "qfl" : "pqfl"; }
inline std::string to_string(ScoreKind s) {
    return s == ScoreKind::centroid ? "centroid" : "max_softmax";
}

struct FederationConfig {
    Algorithm algorithm = Algorithm::pqfl;
    std::size_t n_clients = 10;
    std::size_t global_rounds = 50;
    /// Aggregation weights alpha_n; empty means uniform 1/N.
    std::vector<double> client_weights;
    TrainConfig train;
    CircuitSpec spec;
    ShotSpec shots = ShotSpec::exact();
    /// Per-client noise; empty means noiseless, a single entry applies to all.
    std::vector<NoiseSpec> noise;
    /// Noise used when evaluating the global model.
    NoiseSpec validation_noise;
    std::uint64_t master_seed = 0;
    std::size_t n_classes = 2;
    ScoreKind score = ScoreKind::max_softmax;
    std::optional<double> fixed_threshold;
    unsigned bits_per_value = 32;
    std::size_t threads = 1;

    void validate() const {
        spec.validate();
        train.validate();
        if (n_clients < 1) {
            throw ConfigError("n_clients must be >= 1");
        }
        if (global_rounds < 1) {
            throw ConfigError("global_rounds must be >= 1");
        }
        if (n_classes < 1) {
            throw ConfigError("n_classes must be >= 1");
        }
        if (!client_weights.empty()) {
            if (client_weights.size() != n_clients) {
                throw ConfigError("client_weights must have one entry per client");
            }
            double sum = 0.0;
            for (double a : client_weights) {
                if (!(a > 0.0)) {
                    throw ConfigError("client_weights entries must be positive");
                }
                sum += a;
            }
            if (std::abs(sum - 1.0) > 1e-9) {
                throw ConfigError("client_weights must sum to 1 (got " + std::to_string(sum) + ")");
            }
        }
        if (noise.size() > 1 && noise.size() != n_clients) {
            throw ConfigError("noise list must be empty, a single entry, or one per client");
        }
        if (bits_per_value < 1) {
            throw ConfigError("bits_per_value must be >= 1");
        }
    }

    [[nodiscard]] std::vector<double> weights() const {
        if (!client_weights.empty()) {
            return client_weights;
        }
        return std::vector<double>(n_clients, 1.0 / static_cast<double>(n_clients));
    }
    [[nodiscard]] NoiseSpec noise_for(std::size_t client) const {
        if (noise.empty()) {
            return NoiseSpec::off();
        }
        return noise.size() == 1 ? noise.front() : noise.at(client);
    }
};

// Aggregation -----------------------------------------------------------------

/// Element-wise convex combination sum_n alpha_n w_n.
inline ModelParams aggregate_weighted(std::span<const ModelParams> sets,
                                      std::span<const double> alphas) {
    if (sets.empty()) {
        throw DataError("cannot aggregate an empty parameter list");
    }
    if (alphas.size() != sets.size()) {
        throw ConfigError("one aggregation weight per parameter set required");
    }
    double sum = 0.0;
    for (double a : alphas) {
        if (!(a >= 0.0)) {
            throw ConfigError("aggregation weights must be non-negative");
        }
        sum += a;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ConfigError("aggregation weights must sum to 1 (got " + std::to_string(sum) + ")");
    }
    ModelParams out = sets.front();
    bool all_same = true;
    for (const auto &s : sets) {
        model::require_same_shape(out, s);
        all_same = all_same && s == out;
    }
    // Exact fixed point: sum_n alpha_n w need not round back to w.
    if (all_same) {
        return out;
    }
    auto w = out.values();
    std::fill(w.begin(), w.end(), 0.0);
    for (std::size_t n = 0; n < sets.size(); ++n) {
        const auto v = sets[n].values();
        for (std::size_t i = 0; i < w.size(); ++i) {
            w[i] += alphas[n] * v[i];
        }
    }
    return out;
}

/// Arithmetic mean; identical to aggregate_weighted with alpha_n = 1/N.
inline ModelParams aggregate_uniform(std::span<const ModelParams> sets) {
    if (sets.empty()) {
        throw DataError("cannot aggregate an empty parameter list");
    }
    const std::vector<double> alphas(sets.size(), 1.0 / static_cast<double>(sets.size()));
    return aggregate_weighted(sets, alphas);
}

/// Uplink plus downlink of the D quantum parameters at b bits each: 2 D b.
inline std::uint64_t payload_bits(std::uint64_t param_count, std::uint64_t bits_per_value) {
    if (param_count < 1) {
        throw ContractError("payload_bits needs at least one parameter");
    }
    return 2 * param_count * bits_per_value;
}

// Validation ------------------------------------------------------------------

/// Held-out samples. Normal samples carry their head class index as label;
/// anomalies are flagged and their label is ignored.
struct ValidationSet {
    std::vector<FeatureVector> samples;
    std::vector<int> is_anomaly;

    [[nodiscard]] std::size_t size() const noexcept { return samples.size(); }
};

struct EvalReport {
    double val_loss = std::numeric_limits<double>::quiet_NaN();
    double fe_pct = std::numeric_limits<double>::quiet_NaN();
    double me_pct = std::numeric_limits<double>::quiet_NaN();
    double auroc = std::numeric_limits<double>::quiet_NaN();
    double aupr = std::numeric_limits<double>::quiet_NaN();
    double threshold = std::numeric_limits<double>::quiet_NaN();
};

/// Scores every validation sample with `params`. The loss is the mean
/// cross-entropy over normal samples; FE/ME use `fixed_threshold` when set,
/// else the threshold maximizing TP - FP on this set. Undefined metrics are NaN.
inline EvalReport evaluate(const CircuitSpec &spec, const ModelParams &params,
                           const ValidationSet &val, const ShotSpec &shots,
                           const NoiseSpec &noise, Rng &rng, ScoreKind score_kind,
                           std::optional<double> fixed_threshold = std::nullopt) {
    if (val.samples.size() != val.is_anomaly.size()) {
        throw ShapeError("validation samples and anomaly flags differ in length");
    }
    EvalReport rep;
    const std::size_t c = params.n_classes();
    std::vector<std::vector<double>> probs;
    probs.reserve(val.size());
    double loss = 0.0;
    std::size_t n_normal = 0;
    for (std::size_t i = 0; i < val.size(); ++i) {
        const auto y = model::forward(spec, params, val.samples[i], shots, noise, rng);
        if (!val.is_anomaly[i]) {
            loss += training::detail::cross_entropy(
                y, training::detail::checked_label(val.samples[i], c));
            ++n_normal;
        }
        probs.push_back(model::class_probabilities(y));
    }
    if (n_normal > 0) {
        rep.val_loss = loss / static_cast<double>(n_normal);
    }

    metrics::ScoredSet set;
    set.labels = val.is_anomaly;
    set.scores.reserve(val.size());
    if (score_kind == ScoreKind::centroid) {
        std::vector<std::vector<double>> centroids(c, std::vector<double>(c, 0.0));
        std::vector<std::size_t> counts(c, 0);
        for (std::size_t i = 0; i < val.size(); ++i) {
            if (val.is_anomaly[i]) {
                continue;
            }
            const auto k = static_cast<std::size_t>(val.samples[i].label);
            for (std::size_t j = 0; j < c; ++j) {
                centroids[k][j] += probs[i][j];
            }
            ++counts[k];
        }
        for (std::size_t k = 0; k < c; ++k) {
            if (counts[k] == 0) {
                centroids[k][k] = 1.0;
                continue;
            }
            for (auto &v : centroids[k]) {
                v /= static_cast<double>(counts[k]);
            }
        }
        for (const auto &p : probs) {
            set.scores.push_back(metrics::centroid_score(p, centroids));
        }
    } else {
        for (const auto &p : probs) {
            set.scores.push_back(1.0 - *std::max_element(p.begin(), p.end()));
        }
    }

    const auto n_anom = std::count(set.labels.begin(), set.labels.end(), 1);
    if (n_anom > 0 && n_anom < static_cast<std::ptrdiff_t>(set.labels.size())) {
        rep.auroc = metrics::auroc(set);
        rep.aupr = metrics::aupr(set);
    }
    if (!set.scores.empty()) {
        rep.threshold = fixed_threshold ? *fixed_threshold : metrics::best_threshold(set);
        const auto cc = metrics::confusion(set, rep.threshold);
        if (cc.tp + cc.fp > 0) {
            rep.fe_pct = metrics::fe(cc);
        }
        if (cc.tp + cc.fn > 0) {
            rep.me_pct = metrics::me(cc);
        }
    }
    return rep;
}

// Rounds ----------------------------------------------------------------------

struct RoundRecord {
    std::size_t round = 0; ///< 1-based
    std::uint64_t params_checksum = 0;
    EvalReport eval;
    std::vector<double> client_losses; ///< final-epoch local loss per client
    std::uint64_t payload_bits = 0;
    std::uint64_t circuit_evals = 0;
};

struct RoundOutcome {
    ModelParams global;
    RoundRecord record;
};

inline RoundOutcome run_round(std::size_t round, const FederationConfig &config,
                              const ModelParams &global,
                              const std::vector<std::vector<FeatureVector>> &client_shards,
                              const ValidationSet &validation) {
    if (client_shards.size() != config.n_clients) {
        throw ConfigError("expected " + std::to_string(config.n_clients) + " client shards, got " +
                          std::to_string(client_shards.size()));
    }
    TrainConfig local = config.train;
    if (config.algorithm == Algorithm::qfl) {
        local.lambda = 0.0;
    }

    auto train_client = [&](std::size_t n) {
        Rng rng = make_rng(config.master_seed, Stream::client, {round, n});
        try {
            return training::local_train(config.spec, global, client_shards[n], local, global,
                                         config.shots, config.noise_for(n), rng);
        } catch (const std::exception &e) {
            throw ClientError(n, e.what());
        }
    };

    std::vector<training::TrainResult> results;
    results.reserve(config.n_clients);
    if (config.threads <= 1) {
        for (std::size_t n = 0; n < config.n_clients; ++n) {
            results.push_back(train_client(n));
        }
    } else {
        for (std::size_t lo = 0; lo < config.n_clients; lo += config.threads) {
            const std::size_t hi = std::min(config.n_clients, lo + config.threads);
            std::vector<std::future<training::TrainResult>> pending;
            for (std::size_t n = lo; n < hi; ++n) {
                pending.push_back(std::async(std::launch::async, train_client, n));
            }
            for (auto &f : pending) {
                results.push_back(f.get());
            }
        }
    }

    std::vector<ModelParams> locals;
    locals.reserve(results.size());
    RoundRecord rec;
    rec.round = round;
    for (auto &r : results) {
        rec.client_losses.push_back(r.loss_trace.back());
        rec.circuit_evals += r.evals_used;
        locals.push_back(std::move(r.params));
    }
    ModelParams next = config.algorithm == Algorithm::qfl
                           ? aggregate_uniform(locals)
                           : aggregate_weighted(locals, config.weights());

    Rng eval_rng = make_rng(config.master_seed, Stream::validation, {round});
    rec.eval = evaluate(config.spec, next, validation, config.shots, config.validation_noise,
                        eval_rng, config.score, config.fixed_threshold);
    rec.params_checksum = model::checksum(next);
    rec.payload_bits = payload_bits(config.spec.param_count(), config.bits_per_value);
    return {std::move(next), std::move(rec)};
}

struct RoundHistory {
    std::vector<RoundRecord> records;

    /// First 1-based round whose validation loss is <= target.
    [[nodiscard]] std::optional<std::size_t> rounds_to_target(double target) const {
        for (const auto &r : records) {
            if (r.eval.val_loss <= target) {
                return r.round;
            }
        }
        return std::nullopt;
    }
    [[nodiscard]] std::uint64_t total_payload_bits() const {
        std::uint64_t t = 0;
        for (const auto &r : records) {
            t += r.payload_bits;
        }
        return t;
    }
    [[nodiscard]] std::uint64_t total_circuit_evals() const {
        std::uint64_t t = 0;
        for (const auto &r : records) {
            t += r.circuit_evals;
        }
        return t;
    }
};

struct FederationResult {
    RoundHistory history;
    ModelParams initial_params;
    ModelParams final_params;
};

inline ModelParams initial_global(const FederationConfig &config) {
    Rng rng = make_rng(config.master_seed, Stream::init);
    return model::init_params(config.spec, config.n_classes, rng);
}

inline FederationResult run_federation(const FederationConfig &config,
                                       const std::vector<std::vector<FeatureVector>> &client_shards,
                                       const ValidationSet &validation) {
    config.validate();
    FederationResult out;
    out.initial_params = initial_global(config);
    ModelParams global = out.initial_params;
    for (std::size_t k = 1; k <= config.global_rounds; ++k) {
        auto step = run_round(k, config, global, client_shards, validation);
        global = std::move(step.global);
        out.history.records.push_back(std::move(step.record));
    }
    out.final_params = std::move(global);
    return out;
}

// Export ----------------------------------------------------------------------

/// Shortest round-trip decimal form; "nan" for NaN.
inline std::string format_double(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, p};
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, 16);
    std::string s(buf, p);
    return std::string(16 - s.size(), '0') + s;
}

/// Column order of history.csv.
inline constexpr const char *kHistoryCsvHeader =
    "round,val_loss,fe_pct,me_pct,auroc,aupr,threshold,payload_bits,circuit_evals,"
    "params_checksum,client_losses";

/// One row per round; client_losses is a ';'-separated list in client order.
inline void write_history_csv(std::ostream &os, const RoundHistory &h) {
    os << kHistoryCsvHeader << '\n';
    for (const auto &r : h.records) {
        os << r.round << ',' << format_double(r.eval.val_loss) << ','
           << format_double(r.eval.fe_pct) << ',' << format_double(r.eval.me_pct) << ','
           << format_double(r.eval.auroc) << ',' << format_double(r.eval.aupr) << ','
           << format_double(r.eval.threshold) << ',' << r.payload_bits << ',' << r.circuit_evals
           << ',' << hex64(r.params_checksum) << ',';
        for (std::size_t k = 0; k < r.client_losses.size(); ++k) {
            os << (k ? ";" : "") << format_double(r.client_losses[k]);
        }
        os << '\n';
    }
}

inline nlohmann::json nan_to_null(double v) {
    return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v);
}

inline nlohmann::json summary_json(const RoundHistory &h, std::optional<double> target_loss) {
    nlohmann::json j;
    j["rounds"] = h.records.size();
    j["total_payload_bits"] = h.total_payload_bits();
    j["total_circuit_evals"] = h.total_circuit_evals();
    if (!h.records.empty()) {
        const auto &last = h.records.back();
        j["final"] = {{"val_loss", nan_to_null(last.eval.val_loss)},
                      {"fe_pct", nan_to_null(last.eval.fe_pct)},
                      {"me_pct", nan_to_null(last.eval.me_pct)},
                      {"auroc", nan_to_null(last.eval.auroc)},
                      {"aupr", nan_to_null(last.eval.aupr)},
                      {"params_checksum", hex64(last.params_checksum)}};
        j["payload_bits_per_round"] = last.payload_bits;
    }
    if (target_loss) {
        j["target_loss"] = *target_loss;
        const auto r = h.rounds_to_target(*target_loss);
        j["rounds_to_target"] = r ? nlohmann::json(*r) : nlohmann::json(nullptr);
    } else {
        j["target_loss"] = nullptr;
        j["rounds_to_target"] = nullptr;
    }
    return j;
}

} // namespace pqfl::federation
