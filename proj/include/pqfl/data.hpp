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
 * Dataset ingestion (CSV), random projection, a synthetic anomaly benchmark,
 * client partitioning (iid / step / Dirichlet) and heterogeneity statistics.
 */
#pragma once

#include "pqfl/encoding.hpp"
#include "pqfl/errors.hpp"
#include "pqfl/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace pqfl::data {

using encoding::FeatureVector;

struct LabeledDataset {
    std::vector<FeatureVector> samples;
    std::set<int> normal_classes;
    std::set<int> anomaly_classes;

    [[nodiscard]] std::size_t n_classes() const noexcept {
        return normal_classes.size() + anomaly_classes.size();
    }
    [[nodiscard]] std::size_t dim() const noexcept {
        return samples.empty() ? 0 : samples.front().values.size();
    }
    [[nodiscard]] bool is_anomaly(int label) const { return anomaly_classes.contains(label); }

    void validate() const {
        for (int c : normal_classes) {
            if (anomaly_classes.contains(c)) {
                throw DataError("class " + std::to_string(c) + " is both normal and anomalous");
            }
        }
        for (const auto &s : samples) {
            if (!normal_classes.contains(s.label) && !anomaly_classes.contains(s.label)) {
                throw DataError("label " + std::to_string(s.label) + " is in no class set");
            }
        }
    }
};

/// Moves the listed classes from the normal set to the anomaly set.
inline LabeledDataset mark_anomalies(LabeledDataset ds, const std::set<int> &anomalies) {
    for (int c : anomalies) {
        if (!ds.normal_classes.contains(c) && !ds.anomaly_classes.contains(c)) {
            throw DataError("anomaly class " + std::to_string(c) + " does not occur in data");
        }
        ds.normal_classes.erase(c);
        ds.anomaly_classes.insert(c);
    }
    return ds;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

template <class T> bool parse_number(std::string_view s, T &out) {
    if (s.empty()) {
        return false;
    }
    if (s.front() == '+') {
        s.remove_prefix(1);
    }
    const auto *end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

} // namespace detail

/// Parses CSV text: each row is F real features followed by an integer
/// label. A first line whose label field is not an integer is a header.
/// Every label starts out as a normal class.
inline LabeledDataset parse_features(std::istream &in) {
    LabeledDataset ds;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) {
            continue;
        }
        const auto fields = detail::split_commas(line);
        int label = 0;
        const bool label_ok = detail::parse_number(fields.back(), label);
        if (first_content && !label_ok) {
            first_content = false;
            continue; // header
        }
        first_content = false;
        if (fields.size() < 2) {
            throw ParseError("line " + std::to_string(line_no) +
                             ": expected at least one feature and a label");
        }
        if (!label_ok) {
            throw ParseError("line " + std::to_string(line_no) + ": label '" +
                             std::string(fields.back()) + "' is not an integer");
        }
        FeatureVector fv;
        fv.label = label;
        fv.values.reserve(fields.size() - 1);
        for (std::size_t k = 0; k + 1 < fields.size(); ++k) {
            double v = 0.0;
            if (!detail::parse_number(fields[k], v) || !std::isfinite(v)) {
                throw ParseError("line " + std::to_string(line_no) + ", column " +
                                 std::to_string(k + 1) + ": '" + std::string(fields[k]) +
                                 "' is not a finite number");
            }
            fv.values.push_back(v);
        }
        if (width == 0) {
            width = fv.values.size();
        } else if (fv.values.size() != width) {
            throw SchemaError("line " + std::to_string(line_no) + ": " +
                              std::to_string(fv.values.size()) + " features, expected " +
                              std::to_string(width));
        }
        ds.normal_classes.insert(label);
        ds.samples.push_back(std::move(fv));
    }
    if (ds.samples.empty()) {
        throw DataError("dataset contains no samples");
    }
    return ds;
}

inline LabeledDataset load_features(const std::string &path) {
    std::ifstream f(path);
    if (!f) {
        throw DataError("cannot open dataset " + path);
    }
    try {
        return parse_features(f);
    } catch (const ParseError &e) {
        throw ParseError(path + ": " + e.what());
    }
}

/// Writes the CSV format read by parse_features (no header).
inline void write_features(std::ostream &os, const LabeledDataset &ds) {
    char buf[32];
    for (const auto &s : ds.samples) {
        for (double v : s.values) {
            auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
            os.write(buf, p - buf);
            os << ',';
        }
        os << s.label << '\n';
    }
}

/// Projects every sample with one shared Gaussian matrix R (target x dim,
/// entries N(0, 1/target)). target_dim == dim returns the data unchanged.
inline LabeledDataset reduce_features(const LabeledDataset &ds, std::size_t target_dim, Rng &rng) {
    const std::size_t dim = ds.dim();
    if (target_dim < 1 || target_dim > dim) {
        throw ShapeError("target_dim " + std::to_string(target_dim) + " must be in [1, " +
                         std::to_string(dim) + "]");
    }
    if (target_dim == dim) {
        return ds;
    }
    std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(target_dim)));
    std::vector<double> r(target_dim * dim);
    for (auto &v : r) {
        v = gauss(rng);
    }
    LabeledDataset out = ds;
    for (auto &s : out.samples) {
        std::vector<double> y(target_dim, 0.0);
        for (std::size_t i = 0; i < target_dim; ++i) {
            for (std::size_t j = 0; j < dim; ++j) {
                y[i] += r[i * dim + j] * s.values[j];
            }
        }
        s.values = std::move(y);
    }
    return out;
}

/// Synthetic benchmark. Normal class c is an isotropic unit-variance Gaussian
/// around r*u_c, with random unit directions u_c and pairwise mean distance
/// >= separation. Anomalies (label n_normal_classes) are drawn around r*v,
/// where v is the normalized sum of the u_c: inputs that mix every normal
/// pattern. r is grown until every anomaly/normal mean pair is also at least
/// `separation` apart.
inline LabeledDataset synth_anomaly_dataset(std::size_t n_normal_classes, std::size_t per_class,
                                            std::size_t n_anomaly, std::size_t dim,
                                            double separation, Rng &rng) {
    if (dim < 2) {
        throw ShapeError("synthetic data needs dim >= 2");
    }
    if (n_normal_classes < 1) {
        throw DataError("need at least one normal class");
    }
    if (!(separation > 0.0)) {
        throw DataError("separation must be positive");
    }
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto random_unit = [&] {
        std::vector<double> u(dim);
        double n = 0.0;
        while (n < 1e-12) {
            for (auto &v : u) {
                v = gauss(rng);
            }
            n = encoding::l2_norm(u);
        }
        for (auto &v : u) {
            v /= n;
        }
        return u;
    };
    auto dist = [](const std::vector<double> &a, const std::vector<double> &b, double sa,
                   double sb) {
        double acc = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = sa * a[i] - sb * b[i];
            acc += d * d;
        }
        return std::sqrt(acc);
    };

    // Unit directions; pairwise angle >= 60 degrees makes radius = separation
    // sufficient. Fall back to growing the radius if that is not attainable.
    std::vector<std::vector<double>> dirs;
    for (std::size_t c = 0; c < n_normal_classes; ++c) {
        std::vector<double> best;
        double best_min = -1.0;
        for (int attempt = 0; attempt < 200; ++attempt) {
            auto u = random_unit();
            double mn = 2.0;
            for (const auto &d : dirs) {
                mn = std::min(mn, dist(u, d, 1.0, 1.0));
            }
            if (mn > best_min) {
                best_min = mn;
                best = std::move(u);
            }
            if (best_min >= 1.0) {
                break;
            }
        }
        dirs.push_back(std::move(best));
    }
    std::vector<double> anomaly_dir;
    if (n_normal_classes >= 2) {
        anomaly_dir.assign(dim, 0.0);
        for (const auto &d : dirs) {
            for (std::size_t i = 0; i < dim; ++i) {
                anomaly_dir[i] += d[i];
            }
        }
        const double n = encoding::l2_norm(anomaly_dir);
        if (n < 1e-9) {
            anomaly_dir = random_unit();
        } else {
            for (auto &v : anomaly_dir) {
                v /= n;
            }
        }
    } else {
        anomaly_dir = random_unit();
        for (int attempt = 0; attempt < 200 && dist(anomaly_dir, dirs[0], 1.0, 1.0) < 1.0;
             ++attempt) {
            anomaly_dir = random_unit();
        }
    }

    double min_unit = 2.0;
    for (std::size_t a = 0; a < dirs.size(); ++a) {
        for (std::size_t b = a + 1; b < dirs.size(); ++b) {
            min_unit = std::min(min_unit, dist(dirs[a], dirs[b], 1.0, 1.0));
        }
        if (n_anomaly > 0) {
            min_unit = std::min(min_unit, dist(anomaly_dir, dirs[a], 1.0, 1.0));
        }
    }
    const double radius = separation / std::min(1.0, std::max(min_unit, 1e-6));

    LabeledDataset ds;
    auto draw = [&](const std::vector<double> &dir, int label) {
        FeatureVector fv;
        fv.label = label;
        fv.values.resize(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            fv.values[i] = radius * dir[i] + gauss(rng);
        }
        ds.samples.push_back(std::move(fv));
    };
    for (std::size_t c = 0; c < n_normal_classes; ++c) {
        ds.normal_classes.insert(static_cast<int>(c));
        for (std::size_t k = 0; k < per_class; ++k) {
            draw(dirs[c], static_cast<int>(c));
        }
    }
    if (n_anomaly > 0) {
        ds.anomaly_classes.insert(static_cast<int>(n_normal_classes));
        for (std::size_t k = 0; k < n_anomaly; ++k) {
            draw(anomaly_dir, static_cast<int>(n_normal_classes));
        }
    }
    return ds;
}

/// Normal class id -> head output index (ascending class id order).
inline std::map<int, int> class_index(const LabeledDataset &ds) {
    std::map<int, int> m;
    int k = 0;
    for (int c : ds.normal_classes) {
        m[c] = k++;
    }
    return m;
}

/// Training pool (normal samples only) and a held-out validation set
/// (a stratified `val_fraction` of each normal class plus every anomaly).
struct TrainValidationSplit {
    LabeledDataset train;
    LabeledDataset validation;
};

inline TrainValidationSplit split_train_validation(const LabeledDataset &ds, double val_fraction,
                                                   Rng &rng) {
    ds.validate();
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
        throw ConfigError("validation_fraction must lie in (0, 1)");
    }
    TrainValidationSplit out;
    out.train.normal_classes = ds.normal_classes;
    out.validation.normal_classes = ds.normal_classes;
    out.validation.anomaly_classes = ds.anomaly_classes;
    for (int c : ds.normal_classes) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ds.samples.size(); ++i) {
            if (ds.samples[i].label == c) {
                idx.push_back(i);
            }
        }
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto n_val = static_cast<std::size_t>(
            std::llround(val_fraction * static_cast<double>(idx.size())));
        for (std::size_t k = 0; k < idx.size(); ++k) {
            (k < n_val ? out.validation : out.train).samples.push_back(ds.samples[idx[k]]);
        }
    }
    for (const auto &s : ds.samples) {
        if (ds.is_anomaly(s.label)) {
            out.validation.samples.push_back(s);
        }
    }
    return out;
}

/// Keeps a seeded random `fraction` of the samples (at least one).
inline LabeledDataset subsample(const LabeledDataset &ds, double fraction, Rng &rng) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw ConfigError("data_fraction must lie in (0, 1]");
    }
    if (fraction == 1.0) {
        return ds;
    }
    std::vector<std::size_t> idx(ds.samples.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size()))));
    idx.resize(keep);
    std::sort(idx.begin(), idx.end());
    LabeledDataset out;
    out.normal_classes = ds.normal_classes;
    out.anomaly_classes = ds.anomaly_classes;
    for (auto i : idx) {
        out.samples.push_back(ds.samples[i]);
    }
    return out;
}

// Partitioning ---------------------------------------------------------------

enum class SchemeKind { iid, step, dirichlet };

struct PartitionScheme {
    SchemeKind kind = SchemeKind::iid;
    double alpha = 0.1;      ///< Dirichlet concentration
    double remainder = 0.05; ///< step: fraction of each class spread uniformly

    static PartitionScheme iid() { return {SchemeKind::iid, 0.0, 0.0}; }
    static PartitionScheme step(double remainder = 0.05) {
        return {SchemeKind::step, 0.0, remainder};
    }
    static PartitionScheme dirichlet(double alpha) { return {SchemeKind::dirichlet, alpha, 0.0}; }
};

inline std::string to_string(const PartitionScheme &s) {
    switch (s.kind) {
    case SchemeKind::iid:
        return "iid";
    case SchemeKind::step:
        return "step";
    case SchemeKind::dirichlet:
        return "dirichlet";
    }
    return "?";
}

struct PartitionedDataset {
    std::vector<std::vector<std::size_t>> shards; ///< sample indices per client
    PartitionScheme scheme;

    [[nodiscard]] std::size_t n_clients() const noexcept { return shards.size(); }
};

/// Maximum number of redraws before a Dirichlet partition gives up.
inline constexpr int kMaxPartitionRetries = 100;

/// One draw from a symmetric Dirichlet(alpha) over k categories. Gamma
/// variates are formed in log space (G(a) = G(a+1) * U^(1/a)) so tiny alpha
/// does not underflow to an all-zero vector.
inline std::vector<double> dirichlet_sample(double alpha, std::size_t k, Rng &rng) {
    if (!(alpha > 0.0)) {
        throw ConfigError("Dirichlet alpha must be positive");
    }
    std::gamma_distribution<double> gamma(alpha + 1.0, 1.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<double> logs(k);
    for (auto &l : logs) {
        double u = u01(rng);
        while (u <= 0.0) {
            u = u01(rng);
        }
        l = std::log(gamma(rng)) + std::log(u) / alpha;
    }
    const double m = *std::max_element(logs.begin(), logs.end());
    std::vector<double> p(k);
    double z = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        p[i] = std::exp(logs[i] - m);
        z += p[i];
    }
    for (auto &v : p) {
        v /= z;
    }
    return p;
}

namespace detail {

inline std::map<int, std::vector<std::size_t>> indices_by_class(const LabeledDataset &ds) {
    std::map<int, std::vector<std::size_t>> by;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        by[ds.samples[i].label].push_back(i);
    }
    return by;
}

inline bool any_empty(const std::vector<std::vector<std::size_t>> &shards) {
    return std::any_of(shards.begin(), shards.end(), [](const auto &s) { return s.empty(); });
}

} // namespace detail

inline PartitionedDataset partition(const LabeledDataset &ds, const PartitionScheme &scheme,
                                    std::size_t n_clients, Rng &rng) {
    if (n_clients < 1) {
        throw PartitionError("n_clients must be >= 1");
    }
    if (ds.samples.size() < n_clients) {
        throw PartitionError("fewer samples than clients");
    }
    PartitionedDataset out;
    out.scheme = scheme;
    const auto by_class = detail::indices_by_class(ds);

    switch (scheme.kind) {
    case SchemeKind::iid: {
        std::vector<std::size_t> idx(ds.samples.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::shuffle(idx.begin(), idx.end(), rng);
        out.shards.assign(n_clients, {});
        const std::size_t n = idx.size();
        for (std::size_t c = 0; c < n_clients; ++c) {
            const std::size_t lo = c * n / n_clients;
            const std::size_t hi = (c + 1) * n / n_clients;
            out.shards[c].assign(idx.begin() + static_cast<std::ptrdiff_t>(lo),
                                 idx.begin() + static_cast<std::ptrdiff_t>(hi));
        }
        break;
    }
    case SchemeKind::dirichlet: {
        bool ok = false;
        for (int attempt = 0; attempt < kMaxPartitionRetries && !ok; ++attempt) {
            out.shards.assign(n_clients, {});
            for (const auto &[cls, members] : by_class) {
                auto idx = members;
                std::shuffle(idx.begin(), idx.end(), rng);
                const auto props = dirichlet_sample(scheme.alpha, n_clients, rng);
                double cum = 0.0;
                std::size_t lo = 0;
                for (std::size_t c = 0; c < n_clients; ++c) {
                    cum += props[c];
                    const std::size_t hi =
                        c + 1 == n_clients
                            ? idx.size()
                            : std::min(idx.size(), static_cast<std::size_t>(std::llround(
                                                       cum * static_cast<double>(idx.size()))));
                    for (std::size_t k = lo; k < hi; ++k) {
                        out.shards[c].push_back(idx[k]);
                    }
                    lo = std::max(lo, hi);
                }
            }
            ok = !detail::any_empty(out.shards);
        }
        if (!ok) {
            throw PartitionError("Dirichlet partition left a client empty after " +
                                 std::to_string(kMaxPartitionRetries) + " draws");
        }
        break;
    }
    case SchemeKind::step: {
        if (!(scheme.remainder >= 0.0 && scheme.remainder < 1.0)) {
            throw ConfigError("step remainder must lie in [0, 1)");
        }
        out.shards.assign(n_clients, {});
        const std::size_t n_classes = by_class.size();
        const std::size_t block = (n_classes + n_clients - 1) / n_clients;
        std::size_t class_pos = 0;
        for (const auto &[cls, members] : by_class) {
            std::vector<std::size_t> owners;
            for (std::size_t c = 0; c < n_clients; ++c) {
                for (std::size_t j = 0; j < block; ++j) {
                    if ((c * block + j) % n_classes == class_pos) {
                        owners.push_back(c);
                        break;
                    }
                }
            }
            auto idx = members;
            std::shuffle(idx.begin(), idx.end(), rng);
            const auto n_rem = static_cast<std::size_t>(
                std::llround(scheme.remainder * static_cast<double>(idx.size())));
            for (std::size_t k = 0; k < idx.size(); ++k) {
                const std::size_t client =
                    k < n_rem ? k % n_clients : owners[(k - n_rem) % owners.size()];
                out.shards[client].push_back(idx[k]);
            }
            ++class_pos;
        }
        if (detail::any_empty(out.shards)) {
            throw PartitionError("step partition left a client empty");
        }
        break;
    }
    }
    for (auto &s : out.shards) {
        std::sort(s.begin(), s.end());
    }
    return out;
}

/// Materializes one client's samples.
inline std::vector<FeatureVector> shard_samples(const LabeledDataset &ds,
                                                const std::vector<std::size_t> &shard) {
    std::vector<FeatureVector> out;
    out.reserve(shard.size());
    for (auto i : shard) {
        out.push_back(ds.samples.at(i));
    }
    return out;
}

struct PartitionStats {
    std::vector<int> classes;                     ///< column order of histograms
    std::vector<std::vector<std::size_t>> histograms; ///< per client, per class
    double avg_pairwise_kl = 0.0;
};

inline constexpr double kKlSmoothing = 1e-6;

/// (KL(p||q) + KL(q||p)) / 2 between class histograms after additive
/// smoothing q_c = (h_c / n + s) / (1 + C s).
inline double symmetric_kl(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    auto smooth = [](std::span<const std::size_t> h) {
        const double n = static_cast<double>(std::accumulate(h.begin(), h.end(), std::size_t{0}));
        const double c = static_cast<double>(h.size());
        std::vector<double> p(h.size());
        for (std::size_t i = 0; i < h.size(); ++i) {
            const double frac = n > 0 ? static_cast<double>(h[i]) / n : 1.0 / c;
            p[i] = (frac + kKlSmoothing) / (1.0 + c * kKlSmoothing);
        }
        return p;
    };
    const auto p = smooth(a);
    const auto q = smooth(b);
    double kl_pq = 0.0;
    double kl_qp = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        kl_pq += p[i] * std::log(p[i] / q[i]);
        kl_qp += q[i] * std::log(q[i] / p[i]);
    }
    return 0.5 * (kl_pq + kl_qp);
}

inline PartitionStats heterogeneity(const PartitionedDataset &part, const LabeledDataset &ds) {
    PartitionStats st;
    std::set<int> present;
    for (const auto &s : ds.samples) {
        present.insert(s.label);
    }
    st.classes.assign(present.begin(), present.end());
    std::map<int, std::size_t> col;
    for (std::size_t k = 0; k < st.classes.size(); ++k) {
        col[st.classes[k]] = k;
    }
    for (const auto &shard : part.shards) {
        std::vector<std::size_t> h(st.classes.size(), 0);
        for (auto i : shard) {
            ++h[col.at(ds.samples.at(i).label)];
        }
        st.histograms.push_back(std::move(h));
    }
    const std::size_t n = st.histograms.size();
    if (n < 2) {
        return st;
    }
    double acc = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            acc += symmetric_kl(st.histograms[a], st.histograms[b]);
            ++pairs;
        }
    }
    st.avg_pairwise_kl = acc / static_cast<double>(pairs);
    return st;
}

/// Partition manifest for exact replay.
inline nlohmann::json manifest_json(const PartitionedDataset &part, const PartitionStats &stats) {
    nlohmann::json j;
    j["scheme"] = to_string(part.scheme);
    if (part.scheme.kind == SchemeKind::dirichlet) {
        j["alpha"] = part.scheme.alpha;
    } else if (part.scheme.kind == SchemeKind::step) {
        j["remainder"] = part.scheme.remainder;
    }
    j["n_clients"] = part.n_clients();
    j["shards"] = part.shards;
    j["classes"] = stats.classes;
    j["class_histograms"] = stats.histograms;
    j["avg_pairwise_kl"] = stats.avg_pairwise_kl;
    return j;
}

} // namespace pqfl::data
