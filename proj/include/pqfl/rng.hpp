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
 * Seeded random streams.
 *
 * Every stochastic operation takes its own generator. Generators for
 * independent tasks (client n in round k, data synthesis, validation...) are
 * derived from a single master seed by hashing the path
 * (master, stream, index...) with splitmix64, so the schedule on which tasks
 * run never changes the numbers they see.
 */
#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace pqfl {

using Rng = std::mt19937_64;

/// Named top-level streams. Values are part of the reproducibility contract.
enum class Stream : std::uint64_t {
    data = 1,       ///< synthetic data generation
    projection = 2, ///< random feature projection
    split = 3,      ///< train/validation split and data fraction
    partition = 4,  ///< client partitioning
    init = 5,       ///< initial global parameters
    client = 6,     ///< (round, client) local training
    validation = 7, ///< (round) global-model evaluation
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30U)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27U)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31U);
}

/// Folds a path of counters into a 64-bit seed.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = splitmix64(master);
    for (auto p : path) {
        h = splitmix64(h ^ splitmix64(p + 0x632BE59BD9B4E019ULL));
    }
    return h;
}

inline Rng make_rng(std::uint64_t master, Stream stream,
                    std::initializer_list<std::uint64_t> path = {}) {
    std::uint64_t h = derive_seed(master, {static_cast<std::uint64_t>(stream)});
    for (auto p : path) {
        h = derive_seed(h, {p});
    }
    return Rng{h};
}

} // namespace pqfl
