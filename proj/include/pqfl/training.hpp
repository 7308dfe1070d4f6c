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
 * Local optimization: VQE and classification losses, parameter-shift
 * gradients, plain SGD and the proximal (personalized) update
 *
 *     w <- w - eta * (g + lambda * (w - w_global)).
 */
#pragma once

#include "pqfl/encoding.hpp"
#include "pqfl/errors.hpp"
#include "pqfl/model.hpp"
#include "pqfl/quantum.hpp"
#include "pqfl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace pqfl::training {

using encoding::FeatureVector;
using model::CircuitSpec;
using model::ModelParams;
using quantum::NoiseSpec;
using quantum::Observable;
using quantum::ShotSpec;

inline constexpr double kDefaultShift = std::numbers::pi / 2.0;

enum class Mode { vqe, classify };

struct TrainConfig {
    double eta = 0.01;
    double lambda = 0.1;
    std::size_t local_epochs = 20;
    std::size_t batch_size = 16;
    Mode mode = Mode::classify;

    void validate() const {
        // eta == 0 is accepted: it freezes training and is useful as a control.
        if (!(eta >= 0.0) || !std::isfinite(eta)) {
            throw ConfigError("eta must be a finite non-negative number");
        }
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
            throw ConfigError("lambda must be a finite non-negative number");
        }
        if (local_epochs < 1) {
            throw ConfigError("local_epochs must be >= 1");
        }
        if (batch_size < 1) {
            throw ConfigError("batch_size must be >= 1");
        }
    }
};

/// Gradient in the same layout as ModelParams plus the number of circuit
/// executions spent on it.
struct GradientEstimate {
    ModelParams values;
    std::uint64_t evals_used = 0;

    [[nodiscard]] std::span<const double> angle_grads() const { return values.angles(); }
    [[nodiscard]] std::span<const double> head_weight_grads() const { return values.weights(); }
    [[nodiscard]] std::span<const double> head_bias_grads() const { return values.bias(); }
};

/// d readout / d angle_i for every angle, using
/// [r(theta_i + s) - r(theta_i - s)] / (2 sin s), exact for Ry generators.
/// `readout` maps an angle vector to a vector of expectation values.
template <class Readout>
std::vector<std::vector<double>> shift_jacobian(std::span<const double> angles, Readout &&readout,
                                                double shift, std::uint64_t &evals) {
    const double denom = 2.0 * std::sin(shift);
    if (std::abs(denom) < 1e-12) {
        throw ContractError("parameter shift must not be a multiple of pi");
    }
    std::vector<double> work(angles.begin(), angles.end());
    std::vector<std::vector<double>> jac(angles.size());
    for (std::size_t i = 0; i < angles.size(); ++i) {
        work[i] = angles[i] + shift;
        const std::vector<double> plus = readout(std::span<const double>(work));
        work[i] = angles[i] - shift;
        const std::vector<double> minus = readout(std::span<const double>(work));
        work[i] = angles[i];
        evals += 2;
        auto &row = jac[i];
        row.resize(plus.size());
        for (std::size_t k = 0; k < plus.size(); ++k) {
            row[k] = (plus[k] - minus[k]) / denom;
            if (!std::isfinite(row[k])) {
                throw NumericError("non-finite value in parameter-shift readout");
            }
        }
    }
    return jac;
}

/// Parameter-shift gradient of a scalar loss that is an expectation value of
/// the circuit (e.g. <H>). Head gradients are zero.
template <class LossFn>
GradientEstimate grad_parameter_shift(const ModelParams &params, LossFn &&loss,
                                      double shift = kDefaultShift) {
    GradientEstimate g{ModelParams(params.n_layers(), params.n_qubits(), params.n_classes()), 0};
    auto jac = shift_jacobian(
        params.angles(), [&](std::span<const double> a) { return std::vector<double>{loss(a)}; },
        shift, g.evals_used);
    auto out = g.values.angles();
    for (std::size_t i = 0; i < jac.size(); ++i) {
        out[i] = jac[i][0];
    }
    return g;
}

namespace detail {

inline void check_spec(const CircuitSpec &spec, const ModelParams &params) {
    if (params.n_qubits() != spec.n_qubits || params.n_layers() != spec.n_layers) {
        throw ShapeError("parameters do not match circuit spec");
    }
}

inline double vqe_energy(const CircuitSpec &spec, std::span<const double> angles,
                         const Observable &obs, const NoiseSpec &noise, const ShotSpec &shots,
                         Rng &rng) {
    quantum::QuantumState s(spec.n_qubits);
    model::apply_ansatz(spec, angles, s, noise, rng);
    return quantum::sampled_expectation(s, obs, shots, rng);
}

/// -log softmax(y)[label], stable for large logits.
inline double cross_entropy(std::span<const double> y, std::size_t label) {
    const double m = *std::max_element(y.begin(), y.end());
    double z = 0.0;
    for (double v : y) {
        z += std::exp(v - m);
    }
    return (m + std::log(z)) - y[label];
}

inline std::size_t checked_label(const FeatureVector &x, std::size_t n_classes) {
    if (x.label < 0 || static_cast<std::size_t>(x.label) >= n_classes) {
        throw LabelError("label " + std::to_string(x.label) + " outside [0, " +
                         std::to_string(n_classes) + ")");
    }
    return static_cast<std::size_t>(x.label);
}

} // namespace detail

/// <H> of the ansatz applied to |0...0> (exact or shot-estimated).
inline double loss_vqe(const CircuitSpec &spec, const ModelParams &params, const Observable &obs,
                       const NoiseSpec &noise, const ShotSpec &shots, Rng &rng) {
    detail::check_spec(spec, params);
    if (obs.n_qubits() != spec.n_qubits) {
        throw ShapeError("observable width does not match circuit");
    }
    return detail::vqe_energy(spec, params.angles(), obs, noise, shots, rng);
}

/// Mean softmax cross-entropy of the true labels over a batch.
inline double loss_classify(const CircuitSpec &spec, const ModelParams &params,
                            std::span<const FeatureVector> batch, const ShotSpec &shots,
                            const NoiseSpec &noise, Rng &rng) {
    detail::check_spec(spec, params);
    if (batch.empty()) {
        throw DataError("loss_classify needs a non-empty batch");
    }
    double total = 0.0;
    for (const auto &x : batch) {
        const auto label = detail::checked_label(x, params.n_classes());
        const auto y = model::forward(spec, params, x, shots, noise, rng);
        total += detail::cross_entropy(y, label);
    }
    return total / static_cast<double>(batch.size());
}

inline GradientEstimate vqe_gradient(const CircuitSpec &spec, const ModelParams &params,
                                     const Observable &obs, const NoiseSpec &noise,
                                     const ShotSpec &shots, Rng &rng,
                                     double shift = kDefaultShift) {
    detail::check_spec(spec, params);
    if (obs.n_qubits() != spec.n_qubits) {
        throw ShapeError("observable width does not match circuit");
    }
    return grad_parameter_shift(
        params,
        [&](std::span<const double> a) {
            return detail::vqe_energy(spec, a, obs, noise, shots, rng);
        },
        shift);
}

struct BatchGradient {
    GradientEstimate gradient;
    double loss = 0.0; ///< mean batch loss at the unshifted parameters
};

/// Gradient of the mean cross-entropy over `batch`. Head gradients are
/// analytic; angle gradients chain dL/dp with parameter-shift dp/dtheta, so
/// each sample costs one plain readout plus 2 per angle.
inline BatchGradient classify_gradient(const CircuitSpec &spec, const ModelParams &params,
                                       std::span<const FeatureVector> batch,
                                       const ShotSpec &shots, const NoiseSpec &noise, Rng &rng,
                                       double shift = kDefaultShift) {
    detail::check_spec(spec, params);
    if (batch.empty()) {
        throw DataError("classify_gradient needs a non-empty batch");
    }
    const std::size_t n_classes = params.n_classes();
    const std::size_t dim = params.dim();
    BatchGradient out{{ModelParams(params.n_layers(), params.n_qubits(), n_classes), 0}, 0.0};
    auto g_angles = out.gradient.values.angles();
    auto g_w = out.gradient.values.weights();
    auto g_b = out.gradient.values.bias();
    const auto w = params.weights();

    std::vector<double> dl_dp(dim);
    for (const auto &x : batch) {
        const auto label = detail::checked_label(x, n_classes);
        const auto encoded = encoding::amplitude_encode(x.values, spec.n_qubits);
        const auto p = model::circuit_readout(spec, params.angles(), encoded, shots, noise, rng);
        const auto y = model::apply_head(params, p);
        out.loss += detail::cross_entropy(y, label);

        auto dy = model::class_probabilities(y);
        dy[label] -= 1.0;
        std::fill(dl_dp.begin(), dl_dp.end(), 0.0);
        for (std::size_t c = 0; c < n_classes; ++c) {
            g_b[c] += dy[c];
            for (std::size_t j = 0; j < dim; ++j) {
                g_w[c * dim + j] += dy[c] * p[j];
                dl_dp[j] += w[c * dim + j] * dy[c];
            }
        }

        const auto jac = shift_jacobian(
            params.angles(),
            [&](std::span<const double> a) {
                return model::circuit_readout(spec, a, encoded, shots, noise, rng);
            },
            shift, out.gradient.evals_used);
        for (std::size_t i = 0; i < jac.size(); ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                acc += dl_dp[j] * jac[i][j];
            }
            g_angles[i] += acc;
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (auto &v : out.gradient.values.values()) {
        v *= inv;
    }
    out.loss *= inv;
    if (!out.gradient.values.all_finite() || !std::isfinite(out.loss)) {
        throw NumericError("non-finite gradient or loss");
    }
    return out;
}

/// w <- w - eta * g on every parameter.
inline ModelParams sgd_step(const ModelParams &params, const GradientEstimate &grad, double eta) {
    model::require_same_shape(params, grad.values);
    ModelParams next = params;
    auto w = next.values();
    const auto g = grad.values.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] -= eta * g[i];
    }
    return next;
}

/// w <- w - eta * (g + lambda * (w - w_global)), applied jointly to angles
/// and head. Reduces to sgd_step exactly when lambda == 0.
inline ModelParams personalized_step(const ModelParams &params, const GradientEstimate &grad,
                                     double eta, double lambda, const ModelParams &global) {
    model::require_same_shape(params, global);
    if (lambda == 0.0) {
        return sgd_step(params, grad, eta);
    }
    model::require_same_shape(params, grad.values);
    ModelParams next = params;
    auto w = next.values();
    const auto g = grad.values.values();
    const auto anchor = global.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] -= eta * (g[i] + lambda * (w[i] - anchor[i]));
    }
    return next;
}

struct TrainResult {
    ModelParams params;
    std::vector<double> loss_trace; ///< one mean loss per local epoch
    std::uint64_t evals_used = 0;   ///< circuit executions spent on gradients
};

/// Mini-batch classification training for config.local_epochs epochs. The
/// proximal anchor is `global`, fixed for the whole call.
inline TrainResult local_train(const CircuitSpec &spec, const ModelParams &start,
                               std::span<const FeatureVector> shard, const TrainConfig &config,
                               const ModelParams &global, const ShotSpec &shots,
                               const NoiseSpec &noise, Rng &rng) {
    config.validate();
    if (config.mode != Mode::classify) {
        throw ConfigError("local_train over a data shard requires classify mode");
    }
    if (shard.empty()) {
        throw DataError("local_train received an empty shard");
    }
    model::require_same_shape(start, global);
    TrainResult result{start, {}, 0};
    std::vector<std::size_t> order(shard.size());
    std::vector<FeatureVector> batch;
    for (std::size_t epoch = 0; epoch < config.local_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            const std::size_t end = std::min(order.size(), begin + config.batch_size);
            batch.clear();
            for (std::size_t k = begin; k < end; ++k) {
                batch.push_back(shard[order[k]]);
            }
            const auto bg = classify_gradient(spec, result.params, batch, shots, noise, rng);
            epoch_loss += bg.loss * static_cast<double>(batch.size());
            result.evals_used += bg.gradient.evals_used;
            result.params = personalized_step(result.params, bg.gradient, config.eta,
                                              config.lambda, global);
        }
        result.loss_trace.push_back(epoch_loss / static_cast<double>(shard.size()));
    }
    return result;
}

/// VQE training: one full-gradient step per epoch on <H>. The recorded loss
/// is the energy before each step.
inline TrainResult local_train(const CircuitSpec &spec, const ModelParams &start,
                               const Observable &obs, const TrainConfig &config,
                               const ModelParams &global, const ShotSpec &shots,
                               const NoiseSpec &noise, Rng &rng) {
    config.validate();
    if (config.mode != Mode::vqe) {
        throw ConfigError("local_train on an observable requires vqe mode");
    }
    model::require_same_shape(start, global);
    TrainResult result{start, {}, 0};
    for (std::size_t epoch = 0; epoch < config.local_epochs; ++epoch) {
        result.loss_trace.push_back(loss_vqe(spec, result.params, obs, noise, shots, rng));
        const auto g = vqe_gradient(spec, result.params, obs, noise, shots, rng);
        result.evals_used += g.evals_used;
        result.params = personalized_step(result.params, g, config.eta, config.lambda, global);
    }
    return result;
}

} // namespace pqfl::training
