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
 * Anomaly scores and binary detection metrics. Label 1 marks an anomaly and
 * higher scores mean "more anomalous".
 *
 * FE = FP / (TP + FP) * 100 is a false-discovery rate despite its name;
 * ME = FN / (TP + FN) * 100 is the miss rate.
 */
#pragma once

#include "pqfl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace pqfl::metrics {

struct ScoredSet {
    std::vector<double> scores;
    std::vector<int> labels; ///< 1 = anomaly, 0 = normal

    void validate() const {
        if (scores.size() != labels.size()) {
            throw ShapeError("scores and labels differ in length");
        }
        for (int l : labels) {
            if (l != 0 && l != 1) {
                throw LabelError("binary labels must be 0 or 1");
            }
        }
    }
};

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    [[nodiscard]] std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
    friend bool operator==(const ConfusionCounts &, const ConfusionCounts &) = default;
};

/// 1 - max class probability.
inline double anomaly_score(std::span<const double> class_probs) {
    if (class_probs.empty()) {
        throw ShapeError("anomaly_score needs at least one class");
    }
    const double sum = std::accumulate(class_probs.begin(), class_probs.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ContractError("class probabilities must sum to 1");
    }
    return 1.0 - *std::max_element(class_probs.begin(), class_probs.end());
}

/// Euclidean distance from `class_probs` to the centroid of its predicted
/// class (argmax). `centroids[c]` is the mean class-probability vector of
/// normal samples of class c.
inline double centroid_score(std::span<const double> class_probs,
                             const std::vector<std::vector<double>> &centroids) {
    if (class_probs.size() != centroids.size()) {
        throw ShapeError("one centroid per class required");
    }
    const auto c = static_cast<std::size_t>(
        std::max_element(class_probs.begin(), class_probs.end()) - class_probs.begin());
    double acc = 0.0;
    for (std::size_t k = 0; k < class_probs.size(); ++k) {
        const double d = class_probs[k] - centroids[c].at(k);
        acc += d * d;
    }
    return std::sqrt(acc);
}

/// Predicts "anomaly" when score >= threshold.
inline ConfusionCounts confusion(const ScoredSet &set, double threshold) {
    set.validate();
    ConfusionCounts c;
    for (std::size_t i = 0; i < set.scores.size(); ++i) {
        const bool predicted = set.scores[i] >= threshold;
        const bool actual = set.labels[i] == 1;
        if (predicted && actual) {
            ++c.tp;
        } else if (predicted) {
            ++c.fp;
        } else if (actual) {
            ++c.fn;
        } else {
            ++c.tn;
        }
    }
    return c;
}

inline double fe(const ConfusionCounts &c) {
    if (c.tp + c.fp == 0) {
        throw UndefinedMetricError("FE undefined: no predicted anomalies");
    }
    return static_cast<double>(c.fp) / static_cast<double>(c.tp + c.fp) * 100.0;
}

inline double me(const ConfusionCounts &c) {
    if (c.tp + c.fn == 0) {
        throw UndefinedMetricError("ME undefined: no actual anomalies");
    }
    return static_cast<double>(c.fn) / static_cast<double>(c.tp + c.fn) * 100.0;
}

namespace detail {

inline void require_both_classes(const ScoredSet &set) {
    set.validate();
    const auto pos = std::count(set.labels.begin(), set.labels.end(), 1);
    if (pos == 0 || pos == static_cast<std::ptrdiff_t>(set.labels.size())) {
        throw UndefinedMetricError("metric needs both normal and anomalous samples");
    }
}

/// Indices sorted by descending score.
inline std::vector<std::size_t> descending(const ScoredSet &set) {
    std::vector<std::size_t> idx(set.scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return set.scores[a] > set.scores[b]; });
    return idx;
}

} // namespace detail

/// P(score of a random anomaly > score of a random normal), ties count half.
/// Computed from average ranks in O(n log n).
inline double auroc(const ScoredSet &set) {
    detail::require_both_classes(set);
    const std::size_t n = set.scores.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return set.scores[a] < set.scores[b]; });
    double rank_sum = 0.0;
    std::uint64_t pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && set.scores[idx[j]] == set.scores[idx[i]]) {
            ++j;
        }
        // ranks i+1 .. j share their average
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (set.labels[idx[k]] == 1) {
                rank_sum += avg_rank;
                ++pos;
            }
        }
        i = j;
    }
    const double p = static_cast<double>(pos);
    const double q = static_cast<double>(n - pos);
    return (rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

/// Average precision: sum over distinct thresholds (descending) of
/// precision * delta-recall.
inline double aupr(const ScoredSet &set) {
    detail::require_both_classes(set);
    const auto idx = detail::descending(set);
    const auto total_pos =
        static_cast<std::uint64_t>(std::count(set.labels.begin(), set.labels.end(), 1));
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    double prev_recall = 0.0;
    double ap = 0.0;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j < idx.size() && set.scores[idx[j]] == set.scores[idx[i]]) {
            (set.labels[idx[j]] == 1 ? tp : fp) += 1;
            ++j;
        }
        // accumulate in the textbook order so results match a plain threshold sweep bit for bit
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
        ap += precision * (recall - prev_recall);
        prev_recall = recall;
        i = j;
    }
    return ap;
}

/// Distinct score maximizing TP - FP; the highest such threshold wins ties.
inline double best_threshold(const ScoredSet &set) {
    set.validate();
    if (set.scores.empty()) {
        throw DataError("cannot choose a threshold for an empty set");
    }
    const auto idx = detail::descending(set);
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t best = 0;
    double best_t = set.scores[idx.front()];
    bool first = true;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j < idx.size() && set.scores[idx[j]] == set.scores[idx[i]]) {
            (set.labels[idx[j]] == 1 ? tp : fp) += 1;
            ++j;
        }
        if (first || tp - fp > best) {
            best = tp - fp;
            best_t = set.scores[idx[i]];
            first = false;
        }
        i = j;
    }
    return best_t;
}

} // namespace pqfl::metrics
