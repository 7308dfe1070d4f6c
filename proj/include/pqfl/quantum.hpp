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
 * Statevector simulation: Ry and CX kernels, Pauli-sum observables, finite-shot
 * sampling and per-gate depolarizing noise realized as stochastic Pauli
 * insertions (one trajectory per circuit execution).
 *
 * Qubit ordering is little-endian: qubit q is bit q of the basis index.
 */
#pragma once

#include "pqfl/errors.hpp"
#include "pqfl/rng.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pqfl::quantum {

using Complex = std::complex<double>;

/// Largest register the simulator will allocate.
inline constexpr std::size_t kMaxQubits = 20;

enum class Pauli : std::uint8_t { I, X, Y, Z };

/// Per-gate depolarizing noise: with probability epsilon one of X, Y, Z
/// (uniformly) hits each qubit a gate touched.
struct NoiseSpec {
    double epsilon = 0.0;
    bool enabled = false;

    static NoiseSpec off() { return {}; }
    static NoiseSpec depolarizing(double eps) {
        if (!(eps >= 0.0 && eps <= 1.0)) {
            throw ContractError("depolarizing epsilon must lie in [0, 1], got " +
                                std::to_string(eps));
        }
        return {eps, true};
    }
    /// True when noise can change a state; inactive noise draws no randomness.
    [[nodiscard]] bool active() const noexcept { return enabled && epsilon > 0.0; }
};

/// Number of measurements M per readout, or exact probabilities.
class ShotSpec {
  public:
    static ShotSpec exact() { return ShotSpec{}; }
    static ShotSpec finite(std::uint64_t shots) {
        if (shots == 0) {
            throw ContractError("finite shot count must be >= 1");
        }
        ShotSpec s;
        s.shots_ = shots;
        return s;
    }

    [[nodiscard]] bool is_exact() const noexcept { return !shots_.has_value(); }
    [[nodiscard]] std::uint64_t shots() const {
        if (!shots_) {
            throw ContractError("exact-mode ShotSpec has no shot count");
        }
        return *shots_;
    }
    friend bool operator==(const ShotSpec &, const ShotSpec &) = default;

  private:
    ShotSpec() = default;
    std::optional<std::uint64_t> shots_;
};

class QuantumState {
  public:
    /// |0...0> on n_qubits qubits.
    explicit QuantumState(std::size_t n_qubits) : n_qubits_(n_qubits) {
        if (n_qubits < 1 || n_qubits > kMaxQubits) {
            throw CapacityError("n_qubits must be in [1, " + std::to_string(kMaxQubits) +
                                "], got " + std::to_string(n_qubits));
        }
        amps_.assign(std::size_t{1} << n_qubits, Complex{0.0, 0.0});
        amps_[0] = 1.0;
    }

    /// Adopts a caller-supplied amplitude vector; length must be a power of two
    /// and the vector must be unit norm within 1e-10.
    static QuantumState from_amplitudes(std::vector<Complex> amps) {
        const std::size_t dim = amps.size();
        if (dim < 2 || !std::has_single_bit(dim)) {
            throw ShapeError("amplitude vector length must be a power of two >= 2, got " +
                             std::to_string(dim));
        }
        const auto n = static_cast<std::size_t>(std::countr_zero(dim));
        QuantumState s(n);
        s.amps_ = std::move(amps);
        if (std::abs(s.norm() - 1.0) > 1e-10) {
            throw DegenerateInputError("amplitude vector is not normalized");
        }
        return s;
    }

    [[nodiscard]] std::size_t n_qubits() const noexcept { return n_qubits_; }
    [[nodiscard]] std::size_t dim() const noexcept { return amps_.size(); }
    [[nodiscard]] std::span<const Complex> amplitudes() const noexcept { return amps_; }

    [[nodiscard]] double norm() const noexcept {
        double acc = 0.0;
        for (const auto &a : amps_) {
            acc += std::norm(a);
        }
        return std::sqrt(acc);
    }

    /// Ry(angle) = [[cos a/2, -sin a/2], [sin a/2, cos a/2]] on one qubit.
    QuantumState &apply_ry(std::size_t qubit, double angle) {
        check_qubit(qubit);
        const double c = std::cos(angle / 2.0);
        const double s = std::sin(angle / 2.0);
        const std::size_t bit = std::size_t{1} << qubit;
        for (std::size_t i = 0; i < amps_.size(); ++i) {
            if ((i & bit) != 0U) {
                continue;
            }
            const Complex a0 = amps_[i];
            const Complex a1 = amps_[i | bit];
            amps_[i] = c * a0 - s * a1;
            amps_[i | bit] = s * a0 + c * a1;
        }
        return *this;
    }

    QuantumState &apply_cx(std::size_t control, std::size_t target) {
        check_qubit(control);
        check_qubit(target);
        if (control == target) {
            throw IndexError("CX control and target must differ");
        }
        const std::size_t cbit = std::size_t{1} << control;
        const std::size_t tbit = std::size_t{1} << target;
        for (std::size_t i = 0; i < amps_.size(); ++i) {
            if ((i & cbit) != 0U && (i & tbit) == 0U) {
                std::swap(amps_[i], amps_[i | tbit]);
            }
        }
        return *this;
    }

    QuantumState &apply_pauli(std::size_t qubit, Pauli p) {
        check_qubit(qubit);
        const std::size_t bit = std::size_t{1} << qubit;
        switch (p) {
        case Pauli::I:
            break;
        case Pauli::X:
            for (std::size_t i = 0; i < amps_.size(); ++i) {
                if ((i & bit) == 0U) {
                    std::swap(amps_[i], amps_[i | bit]);
                }
            }
            break;
        case Pauli::Y: {
            // Y|0> = i|1>, Y|1> = -i|0>
            const Complex im{0.0, 1.0};
            for (std::size_t i = 0; i < amps_.size(); ++i) {
                if ((i & bit) == 0U) {
                    const Complex a0 = amps_[i];
                    const Complex a1 = amps_[i | bit];
                    amps_[i] = -im * a1;
                    amps_[i | bit] = im * a0;
                }
            }
            break;
        }
        case Pauli::Z:
            for (std::size_t i = 0; i < amps_.size(); ++i) {
                if ((i & bit) != 0U) {
                    amps_[i] = -amps_[i];
                }
            }
            break;
        }
        return *this;
    }

    /// General 2x2 unitary {{m00, m01}, {m10, m11}} on one qubit. Used for
    /// measurement-basis changes only.
    QuantumState &apply_matrix(std::size_t qubit, const std::array<Complex, 4> &m) {
        check_qubit(qubit);
        const std::size_t bit = std::size_t{1} << qubit;
        for (std::size_t i = 0; i < amps_.size(); ++i) {
            if ((i & bit) != 0U) {
                continue;
            }
            const Complex a0 = amps_[i];
            const Complex a1 = amps_[i | bit];
            amps_[i] = m[0] * a0 + m[1] * a1;
            amps_[i | bit] = m[2] * a0 + m[3] * a1;
        }
        return *this;
    }

    /// One trajectory of the depolarizing channel on `qubit`. Draws no
    /// randomness when the noise is inactive.
    QuantumState &apply_depolarizing(std::size_t qubit, const NoiseSpec &noise, Rng &rng) {
        check_qubit(qubit);
        if (!noise.active()) {
            return *this;
        }
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        if (u01(rng) < noise.epsilon) {
            std::uniform_int_distribution<int> pick(0, 2);
            static constexpr std::array<Pauli, 3> kErrors{Pauli::X, Pauli::Y, Pauli::Z};
            apply_pauli(qubit, kErrors[static_cast<std::size_t>(pick(rng))]);
        }
        return *this;
    }

  private:
    void check_qubit(std::size_t q) const {
        if (q >= n_qubits_) {
            throw IndexError("qubit " + std::to_string(q) + " out of range for " +
                             std::to_string(n_qubits_) + "-qubit state");
        }
    }

    std::size_t n_qubits_;
    std::vector<Complex> amps_;
};

inline QuantumState zero_state(std::size_t n_qubits) { return QuantumState(n_qubits); }

/// |amplitude|^2 per basis state.
inline std::vector<double> probabilities(const QuantumState &state) {
    std::vector<double> p;
    p.reserve(state.dim());
    for (const auto &a : state.amplitudes()) {
        p.push_back(std::norm(a));
    }
    return p;
}

/// Multinomial histogram of `shots` draws from `probs`, generated as a chain
/// of conditional binomials.
inline std::vector<std::uint64_t> sample_histogram(std::span<const double> probs,
                                                   std::uint64_t shots, Rng &rng) {
    std::vector<std::uint64_t> counts(probs.size(), 0);
    std::uint64_t remaining = shots;
    double mass_left = 1.0;
    for (std::size_t i = 0; i + 1 < probs.size() && remaining > 0; ++i) {
        const double p = probs[i];
        if (p <= 0.0) {
            mass_left -= p;
            continue;
        }
        const double cond = mass_left > 0.0 ? std::min(1.0, p / mass_left) : 1.0;
        std::binomial_distribution<std::uint64_t> draw(remaining, cond);
        counts[i] = draw(rng);
        remaining -= counts[i];
        mass_left -= p;
    }
    counts.back() += remaining;
    return counts;
}

/// Measurement histogram in the computational basis.
inline std::vector<std::uint64_t> sample_counts(const QuantumState &state, const ShotSpec &shots,
                                                Rng &rng) {
    if (shots.is_exact()) {
        throw ContractError("sample_counts requires a finite ShotSpec");
    }
    const auto p = probabilities(state);
    return sample_histogram(p, shots.shots(), rng);
}

/// Probabilities in exact mode, shot frequencies otherwise.
inline std::vector<double> readout(const QuantumState &state, const ShotSpec &shots, Rng &rng) {
    if (shots.is_exact()) {
        return probabilities(state);
    }
    const auto counts = sample_counts(state, shots, rng);
    std::vector<double> freq(counts.size());
    const auto m = static_cast<double>(shots.shots());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        freq[i] = static_cast<double>(counts[i]) / m;
    }
    return freq;
}

/// One weighted Pauli string. Character k of `paulis` acts on qubit k.
struct PauliTerm {
    double coefficient = 0.0;
    std::string paulis;
};

/// Hermitian operator as a real-weighted sum of Pauli strings.
class Observable {
  public:
    explicit Observable(std::size_t n_qubits) : n_qubits_(n_qubits) {
        if (n_qubits < 1 || n_qubits > kMaxQubits) {
            throw CapacityError("observable width out of range");
        }
    }
    Observable(std::size_t n_qubits, std::vector<PauliTerm> terms) : Observable(n_qubits) {
        for (auto &t : terms) {
            add(t.coefficient, std::move(t.paulis));
        }
    }

    Observable &add(double coefficient, std::string paulis) {
        if (paulis.size() != n_qubits_) {
            throw ShapeError("Pauli string '" + paulis + "' does not have " +
                             std::to_string(n_qubits_) + " labels");
        }
        for (char c : paulis) {
            if (c != 'I' && c != 'X' && c != 'Y' && c != 'Z') {
                throw ShapeError(std::string("invalid Pauli label '") + c + "'");
            }
        }
        if (!std::isfinite(coefficient)) {
            throw NumericError("Pauli coefficient must be finite");
        }
        terms_.push_back({coefficient, std::move(paulis)});
        return *this;
    }

    [[nodiscard]] std::size_t n_qubits() const noexcept { return n_qubits_; }
    [[nodiscard]] const std::vector<PauliTerm> &terms() const noexcept { return terms_; }

  private:
    std::size_t n_qubits_;
    std::vector<PauliTerm> terms_;
};

namespace detail {

struct PauliMasks {
    std::size_t flip = 0;  // X or Y
    std::size_t phase = 0; // Y or Z
    unsigned n_y = 0;
};

inline PauliMasks masks_of(const std::string &paulis) {
    PauliMasks m;
    for (std::size_t q = 0; q < paulis.size(); ++q) {
        const std::size_t bit = std::size_t{1} << q;
        switch (paulis[q]) {
        case 'X':
            m.flip |= bit;
            break;
        case 'Y':
            m.flip |= bit;
            m.phase |= bit;
            ++m.n_y;
            break;
        case 'Z':
            m.phase |= bit;
            break;
        default:
            break;
        }
    }
    return m;
}

/// <psi| P |psi> for a single Pauli string.
inline double pauli_expectation(std::span<const Complex> amps, const PauliMasks &m) {
    static constexpr std::array<Complex, 4> kIPow{Complex{1, 0}, Complex{0, 1}, Complex{-1, 0},
                                                  Complex{0, -1}};
    const Complex global = kIPow[m.n_y % 4];
    Complex acc{0.0, 0.0};
    for (std::size_t j = 0; j < amps.size(); ++j) {
        const double sign = (std::popcount(j & m.phase) % 2 == 0) ? 1.0 : -1.0;
        acc += std::conj(amps[j ^ m.flip]) * amps[j] * sign;
    }
    return (acc * global).real();
}

inline void check_width(const QuantumState &state, const Observable &obs) {
    if (state.n_qubits() != obs.n_qubits()) {
        throw ShapeError("observable acts on " + std::to_string(obs.n_qubits()) +
                         " qubits but state has " + std::to_string(state.n_qubits()));
    }
}

} // namespace detail

/// <psi|H|psi>, evaluated term by term in O(2^n) each.
inline double expectation(const QuantumState &state, const Observable &obs) {
    detail::check_width(state, obs);
    double total = 0.0;
    for (const auto &t : obs.terms()) {
        total += t.coefficient * detail::pauli_expectation(state.amplitudes(),
                                                           detail::masks_of(t.paulis));
    }
    return total;
}

/// Shot estimate of <H>: each non-identity term is measured with its own
/// `shots` budget after rotating its support into the Z basis.
inline double sampled_expectation(const QuantumState &state, const Observable &obs,
                                  const ShotSpec &shots, Rng &rng) {
    detail::check_width(state, obs);
    if (shots.is_exact()) {
        return expectation(state, obs);
    }
    const double h = 1.0 / std::sqrt(2.0);
    const Complex im{0.0, 1.0};
    // H maps X eigenbasis to Z; H S^dagger maps Y eigenbasis to Z.
    const std::array<Complex, 4> to_x{h, h, h, -h};
    const std::array<Complex, 4> to_y{h, -im * h, h, im * h};
    double total = 0.0;
    for (const auto &t : obs.terms()) {
        const auto m = detail::masks_of(t.paulis);
        if (m.flip == 0 && m.phase == 0) {
            total += t.coefficient;
            continue;
        }
        QuantumState rotated = state;
        std::size_t support = 0;
        for (std::size_t q = 0; q < t.paulis.size(); ++q) {
            const char c = t.paulis[q];
            if (c == 'X') {
                rotated.apply_matrix(q, to_x);
            } else if (c == 'Y') {
                rotated.apply_matrix(q, to_y);
            }
            if (c != 'I') {
                support |= std::size_t{1} << q;
            }
        }
        const auto counts = sample_counts(rotated, shots, rng);
        double acc = 0.0;
        for (std::size_t j = 0; j < counts.size(); ++j) {
            const double parity = (std::popcount(j & support) % 2 == 0) ? 1.0 : -1.0;
            acc += parity * static_cast<double>(counts[j]);
        }
        total += t.coefficient * acc / static_cast<double>(shots.shots());
    }
    return total;
}

} // namespace pqfl::quantum
