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
 * Amplitude encoding of classical feature vectors.
 */
#pragma once

#include "pqfl/errors.hpp"
#include "pqfl/quantum.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace pqfl::encoding {

/// A labelled real feature vector.
struct FeatureVector {
    std::vector<double> values;
    int label = 0;

    friend bool operator==(const FeatureVector &, const FeatureVector &) = default;
};

inline double l2_norm(std::span<const double> x) {
    double acc = 0.0;
    for (double v : x) {
        acc += v * v;
    }
    return std::sqrt(acc);
}

inline std::vector<double> l2_normalize(std::span<const double> x) {
    const double n = l2_norm(x);
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw DegenerateInputError("cannot normalize a vector with zero or non-finite norm");
    }
    std::vector<double> out(x.begin(), x.end());
    for (auto &v : out) {
        v /= n;
    }
    return out;
}

/// |psi> = sum_j x_j |j> / ||x||, with x zero-padded at the tail to 2^n.
inline quantum::QuantumState amplitude_encode(std::span<const double> x, std::size_t n_qubits) {
    if (n_qubits < 1 || n_qubits > quantum::kMaxQubits) {
        throw CapacityError("n_qubits out of range for amplitude encoding");
    }
    const std::size_t dim = std::size_t{1} << n_qubits;
    if (x.size() > dim) {
        throw CapacityError("feature vector of length " + std::to_string(x.size()) +
                            " does not fit " + std::to_string(n_qubits) + " qubits");
    }
    if (x.empty()) {
        throw DegenerateInputError("empty feature vector");
    }
    const auto unit = l2_normalize(x);
    std::vector<quantum::Complex> amps(dim, quantum::Complex{0.0, 0.0});
    for (std::size_t j = 0; j < unit.size(); ++j) {
        amps[j] = unit[j];
    }
    return quantum::QuantumState::from_amplitudes(std::move(amps));
}

} // namespace pqfl::encoding
