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
 * Hybrid quantum-classical classifier: a layered Ry/CX ansatz, probability
 * readout p = |psi|^2 and a linear head y = W p + b.
 */
#pragma once

#include "pqfl/encoding.hpp"
#include "pqfl/errors.hpp"
#include "pqfl/quantum.hpp"
#include "pqfl/rng.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <iomanip>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace pqfl::model {

enum class Entangler { linear_chain, ring };

inline std::string to_string(Entangler e) {
    return e == Entangler::ring ? "ring" : "linear";
}

/// Ansatz geometry: n_layers blocks of (Ry on every qubit, then CX entanglers).
struct CircuitSpec {
    std::size_t n_qubits = 4;
    std::size_t n_layers = 3;
    Entangler entangler = Entangler::linear_chain;

    void validate() const {
        if (n_qubits < 1 || n_qubits > quantum::kMaxQubits) {
            throw ShapeError("circuit n_qubits out of range");
        }
        if (n_layers < 1) {
            throw ShapeError("circuit needs at least one layer");
        }
    }
    /// Number of trainable rotation angles.
    [[nodiscard]] std::size_t param_count() const noexcept { return n_layers * n_qubits; }
    [[nodiscard]] std::size_t dim() const noexcept { return std::size_t{1} << n_qubits; }
};

/// Trainable parameters stored as one flat vector:
/// [angles (layer-major, n_layers x n_qubits) | W (row-major, n_classes x 2^n) | b].
class ModelParams {
  public:
    ModelParams() = default;
    ModelParams(std::size_t n_layers, std::size_t n_qubits, std::size_t n_classes)
        : n_layers_(n_layers), n_qubits_(n_qubits), n_classes_(n_classes) {
        if (n_qubits < 1 || n_qubits > quantum::kMaxQubits) {
            throw ShapeError("ModelParams n_qubits out of range");
        }
        values_.assign(n_angles() + n_classes * dim() + n_classes, 0.0);
    }
    ModelParams(const CircuitSpec &spec, std::size_t n_classes)
        : ModelParams(spec.n_layers, spec.n_qubits, n_classes) {}

    [[nodiscard]] std::size_t n_layers() const noexcept { return n_layers_; }
    [[nodiscard]] std::size_t n_qubits() const noexcept { return n_qubits_; }
    [[nodiscard]] std::size_t n_classes() const noexcept { return n_classes_; }
    [[nodiscard]] std::size_t dim() const noexcept { return std::size_t{1} << n_qubits_; }
    [[nodiscard]] std::size_t n_angles() const noexcept { return n_layers_ * n_qubits_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

    [[nodiscard]] std::span<double> values() noexcept { return values_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

    [[nodiscard]] std::span<double> angles() noexcept { return values().first(n_angles()); }
    [[nodiscard]] std::span<const double> angles() const noexcept {
        return values().first(n_angles());
    }
    [[nodiscard]] std::span<double> weights() noexcept {
        return values().subspan(n_angles(), n_classes_ * dim());
    }
    [[nodiscard]] std::span<const double> weights() const noexcept {
        return values().subspan(n_angles(), n_classes_ * dim());
    }
    [[nodiscard]] std::span<double> bias() noexcept {
        return values().subspan(n_angles() + n_classes_ * dim());
    }
    [[nodiscard]] std::span<const double> bias() const noexcept {
        return values().subspan(n_angles() + n_classes_ * dim());
    }

    double &angle(std::size_t layer, std::size_t qubit) {
        return values_.at(layer * n_qubits_ + qubit);
    }
    [[nodiscard]] double angle(std::size_t layer, std::size_t qubit) const {
        return values_.at(layer * n_qubits_ + qubit);
    }
    double &weight(std::size_t cls, std::size_t basis) {
        return values_.at(n_angles() + cls * dim() + basis);
    }
    [[nodiscard]] double weight(std::size_t cls, std::size_t basis) const {
        return values_.at(n_angles() + cls * dim() + basis);
    }

    [[nodiscard]] bool same_shape(const ModelParams &o) const noexcept {
        return n_layers_ == o.n_layers_ && n_qubits_ == o.n_qubits_ &&
               n_classes_ == o.n_classes_;
    }
    [[nodiscard]] bool all_finite() const noexcept {
        return std::all_of(values_.begin(), values_.end(),
                           [](double v) { return std::isfinite(v); });
    }

    /// Rebuilds params of the given shape from a flat vector in storage order.
    static ModelParams from_flat(std::size_t n_layers, std::size_t n_qubits,
                                 std::size_t n_classes, std::span<const double> flat) {
        ModelParams p(n_layers, n_qubits, n_classes);
        if (flat.size() != p.size()) {
            throw ShapeError("flat parameter vector has " + std::to_string(flat.size()) +
                             " entries, expected " + std::to_string(p.size()));
        }
        std::copy(flat.begin(), flat.end(), p.values_.begin());
        return p;
    }

    friend bool operator==(const ModelParams &, const ModelParams &) = default;

  private:
    std::size_t n_layers_ = 0;
    std::size_t n_qubits_ = 1;
    std::size_t n_classes_ = 0;
    std::vector<double> values_;
};

inline void require_same_shape(const ModelParams &a, const ModelParams &b) {
    if (!a.same_shape(b)) {
        throw ShapeError("parameter shapes differ");
    }
}

/// Angles uniform in [0, pi), head weights uniform in [-0.1, 0.1], bias zero.
inline ModelParams init_params(const CircuitSpec &spec, std::size_t n_classes, Rng &rng) {
    spec.validate();
    ModelParams p(spec, n_classes);
    std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
    for (auto &a : p.angles()) {
        a = angle(rng);
    }
    std::uniform_real_distribution<double> head(-0.1, 0.1);
    for (auto &w : p.weights()) {
        w = head(rng);
    }
    return p;
}

namespace detail {

inline void check_angles(const CircuitSpec &spec, std::span<const double> angles) {
    if (angles.size() != spec.param_count()) {
        throw ShapeError("expected " + std::to_string(spec.param_count()) + " angles, got " +
                         std::to_string(angles.size()));
    }
}

} // namespace detail

/// Applies the ansatz with explicit angles in place. Noise (if active) is a
/// depolarizing insertion on every qubit a gate touched, right after the gate.
inline void apply_ansatz(const CircuitSpec &spec, std::span<const double> angles,
                         quantum::QuantumState &state, const quantum::NoiseSpec &noise, Rng &rng) {
    detail::check_angles(spec, angles);
    if (state.n_qubits() != spec.n_qubits) {
        throw ShapeError("input state width does not match circuit");
    }
    const std::size_t n = spec.n_qubits;
    auto cx = [&](std::size_t c, std::size_t t) {
        state.apply_cx(c, t);
        state.apply_depolarizing(c, noise, rng);
        state.apply_depolarizing(t, noise, rng);
    };
    for (std::size_t layer = 0; layer < spec.n_layers; ++layer) {
        for (std::size_t q = 0; q < n; ++q) {
            state.apply_ry(q, angles[layer * n + q]);
            state.apply_depolarizing(q, noise, rng);
        }
        for (std::size_t q = 0; q + 1 < n; ++q) {
            cx(q, q + 1);
        }
        if (spec.entangler == Entangler::ring && n > 2) {
            cx(n - 1, 0);
        }
    }
}

inline quantum::QuantumState run_circuit(const CircuitSpec &spec, const ModelParams &params,
                                         quantum::QuantumState input,
                                         const quantum::NoiseSpec &noise, Rng &rng) {
    if (params.n_qubits() != spec.n_qubits || params.n_layers() != spec.n_layers) {
        throw ShapeError("parameters do not match circuit spec");
    }
    apply_ansatz(spec, params.angles(), input, noise, rng);
    return input;
}

/// y = W p + b.
inline std::vector<double> apply_head(const ModelParams &params, std::span<const double> p) {
    if (p.size() != params.dim()) {
        throw ShapeError("probability vector length does not match head input");
    }
    std::vector<double> y(params.bias().begin(), params.bias().end());
    for (std::size_t c = 0; c < params.n_classes(); ++c) {
        const double *row = params.weights().data() + c * params.dim();
        double acc = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) {
            acc += row[j] * p[j];
        }
        y[c] += acc;
    }
    return y;
}

/// Encodes x, runs the ansatz with `angles`, and returns exact probabilities
/// or shot frequencies.
inline std::vector<double> circuit_readout(const CircuitSpec &spec, std::span<const double> angles,
                                           const quantum::QuantumState &encoded,
                                           const quantum::ShotSpec &shots,
                                           const quantum::NoiseSpec &noise, Rng &rng) {
    quantum::QuantumState s = encoded;
    apply_ansatz(spec, angles, s, noise, rng);
    return quantum::readout(s, shots, rng);
}

/// Class scores y for one feature vector.
inline std::vector<double> forward(const CircuitSpec &spec, const ModelParams &params,
                                   const encoding::FeatureVector &x,
                                   const quantum::ShotSpec &shots,
                                   const quantum::NoiseSpec &noise, Rng &rng) {
    if (params.n_qubits() != spec.n_qubits || params.n_layers() != spec.n_layers) {
        throw ShapeError("parameters do not match circuit spec");
    }
    const auto encoded = encoding::amplitude_encode(x.values, spec.n_qubits);
    const auto p = circuit_readout(spec, params.angles(), encoded, shots, noise, rng);
    return apply_head(params, p);
}

/// Numerically stable softmax.
inline std::vector<double> class_probabilities(std::span<const double> y) {
    if (y.empty()) {
        return {};
    }
    const double m = *std::max_element(y.begin(), y.end());
    std::vector<double> out(y.size());
    double z = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        out[i] = std::exp(y[i] - m);
        z += out[i];
    }
    for (auto &v : out) {
        v /= z;
    }
    return out;
}

// Checkpoint I/O ------------------------------------------------------------
//
// Binary layout (little-endian):
//   8 bytes  magic "PQFLPAR1"
//   uint32   n_layers, n_qubits, n_classes
//   float64  values in storage order (angles layer-major, W row-major, b)
//
// Text layout: a header line "pqfl-params <n_layers> <n_qubits> <n_classes>"
// followed by one value per line printed with 17 significant digits.

inline constexpr std::array<char, 8> kCheckpointMagic{'P', 'Q', 'F', 'L', 'P', 'A', 'R', '1'};

inline std::string to_binary(const ModelParams &p) {
    std::string out(kCheckpointMagic.begin(), kCheckpointMagic.end());
    auto put_u32 = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) {
            out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU));
        }
    };
    put_u32(static_cast<std::uint32_t>(p.n_layers()));
    put_u32(static_cast<std::uint32_t>(p.n_qubits()));
    put_u32(static_cast<std::uint32_t>(p.n_classes()));
    for (double v : p.values()) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) {
            out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFU));
        }
    }
    return out;
}

inline ModelParams from_binary(std::string_view bytes) {
    if (bytes.size() < 20 || !std::equal(kCheckpointMagic.begin(), kCheckpointMagic.end(),
                                         bytes.begin())) {
        throw ParseError("not a parameter checkpoint (bad magic)");
    }
    auto get_u32 = [&](std::size_t off) {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + i])) << (8 * i);
        }
        return v;
    };
    const std::size_t layers = get_u32(8);
    const std::size_t qubits = get_u32(12);
    const std::size_t classes = get_u32(16);
    if (qubits < 1 || qubits > quantum::kMaxQubits) {
        throw ParseError("checkpoint qubit count out of range");
    }
    ModelParams p(layers, qubits, classes);
    if (bytes.size() != 20 + 8 * p.size()) {
        throw ParseError("checkpoint payload length does not match its header");
    }
    auto vals = p.values();
    for (std::size_t k = 0; k < p.size(); ++k) {
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) {
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[20 + 8 * k + i]))
                    << (8 * i);
        }
        vals[k] = std::bit_cast<double>(bits);
    }
    return p;
}

inline std::string to_text(const ModelParams &p) {
    std::ostringstream os;
    os << "pqfl-params " << p.n_layers() << ' ' << p.n_qubits() << ' ' << p.n_classes() << '\n';
    os << std::setprecision(17);
    for (double v : p.values()) {
        os << v << '\n';
    }
    return os.str();
}

inline ModelParams from_text(const std::string &text) {
    std::istringstream is(text);
    std::string tag;
    std::size_t layers = 0;
    std::size_t qubits = 0;
    std::size_t classes = 0;
    if (!(is >> tag >> layers >> qubits >> classes) || tag != "pqfl-params") {
        throw ParseError("bad text checkpoint header");
    }
    std::vector<double> flat;
    double v = 0.0;
    while (is >> v) {
        flat.push_back(v);
    }
    if (!is.eof()) {
        throw ParseError("non-numeric value in text checkpoint");
    }
    return ModelParams::from_flat(layers, qubits, classes, flat);
}

inline void save_params(const ModelParams &p, const std::string &path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw DataError("cannot open " + path + " for writing");
    }
    const auto bytes = to_binary(p);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline ModelParams load_params(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw DataError("cannot open " + path);
    }
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return from_binary(bytes);
}

/// FNV-1a over the binary checkpoint; used as a round fingerprint.
inline std::uint64_t checksum(const ModelParams &p) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : to_binary(p)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace pqfl::model
