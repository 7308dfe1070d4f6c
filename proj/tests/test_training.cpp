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

#include "pqfl/training.hpp"

#include "dense_oracle.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

using namespace pqfl;
using namespace pqfl::training;
using model::CircuitSpec;
using model::Entangler;
using model::ModelParams;
using encoding::FeatureVector;
using quantum::NoiseSpec;
using quantum::Observable;
using quantum::ShotSpec;
using Catch::Approx;

namespace {

ModelParams random_params(const CircuitSpec &spec, std::size_t classes, std::uint64_t seed) {
    Rng rng(seed);
    auto p = model::init_params(spec, classes, rng);
    std::normal_distribution<double> g(0.0, 1.0);
    for (auto &w : p.weights()) {
        w = g(rng);
    }
    for (auto &b : p.bias()) {
        b = g(rng);
    }
    return p;
}

std::vector<FeatureVector> random_batch(std::size_t dim, std::size_t classes, std::size_t n,
                                        std::mt19937_64 &rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<int> lab(0, static_cast<int>(classes) - 1);
    std::vector<FeatureVector> out(n);
    for (auto &x : out) {
        x.values.resize(dim);
        for (auto &v : x.values) {
            v = g(rng);
        }
        x.label = lab(rng);
    }
    return out;
}

// Independent loss: dense unitary, |amp|^2, linear head, -log softmax.
double dense_ce(const CircuitSpec &spec, std::span<const double> flat, std::size_t classes,
                const std::vector<FeatureVector> &batch) {
    const std::size_t n = spec.n_qubits;
    const std::size_t d = std::size_t{1} << n;
    const std::size_t na = spec.param_count();
    const std::vector<double> ang(flat.begin(), flat.begin() + static_cast<long>(na));
    const oracle::Mat u = oracle::ansatz(n, spec.n_layers, ang, spec.entangler == Entangler::ring);
    double total = 0.0;
    for (const auto &x : batch) {
        oracle::Vec in = oracle::Vec::Zero(static_cast<Eigen::Index>(d));
        for (std::size_t j = 0; j < x.values.size(); ++j) {
            in(static_cast<Eigen::Index>(j)) = x.values[j];
        }
        in /= in.norm();
        const oracle::Vec out = u * in;
        std::vector<double> y(classes);
        for (std::size_t c = 0; c < classes; ++c) {
            double acc = flat[na + classes * d + c];
            for (std::size_t j = 0; j < d; ++j) {
                acc += flat[na + c * d + j] * std::norm(out(static_cast<Eigen::Index>(j)));
            }
            y[c] = acc;
        }
        double z = 0.0;
        for (double v : y) {
            z += std::exp(v);
        }
        total += -std::log(std::exp(y[static_cast<std::size_t>(x.label)]) / z);
    }
    return total / static_cast<double>(batch.size());
}

double dense_energy(const CircuitSpec &spec, std::span<const double> angles,
                    const std::vector<std::pair<double, std::string>> &terms) {
    const std::size_t n = spec.n_qubits;
    const std::vector<double> ang(angles.begin(), angles.end());
    oracle::Vec v = oracle::Vec::Zero(Eigen::Index{1} << n);
    v(0) = 1.0;
    v = oracle::ansatz(n, spec.n_layers, ang, spec.entangler == Entangler::ring) * v;
    return (v.adjoint() * oracle::observable(n, terms) * v)(0, 0).real();
}

std::vector<std::pair<double, std::string>> random_terms(std::size_t n, std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::uniform_int_distribution<int> lab(0, 3);
    std::vector<std::pair<double, std::string>> t;
    for (int k = 0; k < 4; ++k) {
        std::string s;
        for (std::size_t q = 0; q < n; ++q) {
            s.push_back("IXYZ"[lab(rng)]);
        }
        t.emplace_back(coef(rng), s);
    }
    return t;
}

Observable to_observable(std::size_t n, const std::vector<std::pair<double, std::string>> &t) {
    Observable o(n);
    for (const auto &[c, s] : t) {
        o.add(c, s);
    }
    return o;
}

GradientEstimate grad_of(const ModelParams &shape, std::vector<double> values) {
    return GradientEstimate{ModelParams::from_flat(shape.n_layers(), shape.n_qubits(),
                                                   shape.n_classes(), values),
                            0};
}

double dist(const ModelParams &a, const ModelParams &b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.values()[i] - b.values()[i];
        s += d * d;
    }
    return std::sqrt(s);
}

} // namespace

TEST_CASE("TrainConfig validation", "[training]") {
    TrainConfig c;
    CHECK(c.eta == 0.01);
    CHECK(c.lambda == 0.1);
    CHECK(c.local_epochs == 20);
    CHECK_NOTHROW(c.validate());
    c.lambda = -0.1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = TrainConfig{};
    c.local_epochs = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = TrainConfig{};
    c.eta = -1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("loss_vqe", "[training]") {
    Rng rng(1);
    SECTION("cos theta on one qubit") {
        const CircuitSpec spec{1, 1};
        ModelParams p(spec, 1);
        Observable z(1);
        z.add(1.0, "Z");
        for (double th : {0.0, 0.4, 1.3, 2.9, -1.1}) {
            p.angle(0, 0) = th;
            CHECK(loss_vqe(spec, p, z, NoiseSpec::off(), ShotSpec::exact(), rng) ==
                  Approx(std::cos(th)).margin(1e-14));
        }
    }
    SECTION("identity term is constant") {
        const CircuitSpec spec{3, 2};
        Observable id(3);
        id.add(2.5, "III");
        for (std::uint64_t s = 0; s < 5; ++s) {
            const auto p = random_params(spec, 1, s);
            CHECK(loss_vqe(spec, p, id, NoiseSpec::off(), ShotSpec::exact(), rng) ==
                  Approx(2.5).margin(1e-12));
        }
    }
    SECTION("random 3-qubit instances match the dense Rayleigh quotient") {
        std::mt19937_64 orng(3);
        for (std::uint64_t s = 0; s < 10; ++s) {
            const CircuitSpec spec{3, 2, s % 2 ? Entangler::ring : Entangler::linear_chain};
            const auto p = random_params(spec, 1, s + 10);
            const auto t = random_terms(3, orng);
            CHECK(loss_vqe(spec, p, to_observable(3, t), NoiseSpec::off(), ShotSpec::exact(),
                           rng) == Approx(dense_energy(spec, p.angles(), t)).margin(1e-10));
        }
    }
    SECTION("width mismatch") {
        const CircuitSpec spec{2, 1};
        ModelParams p(spec, 1);
        Observable z(1);
        z.add(1.0, "Z");
        CHECK_THROWS_AS(loss_vqe(spec, p, z, NoiseSpec::off(), ShotSpec::exact(), rng),
                        ShapeError);
    }
}

TEST_CASE("loss_classify", "[training]") {
    Rng rng(2);
    const CircuitSpec spec{2, 1};
    std::vector<FeatureVector> batch{{{1, 0, 0, 0}, 0}, {{0.2, 0.5, 0.1, 0}, 1}, {{1, 1, 1, 1}, 2}};
    SECTION("uniform output gives ln C") {
        ModelParams p(spec, 3); // W = 0, b = 0
        CHECK(loss_classify(spec, p, batch, ShotSpec::exact(), NoiseSpec::off(), rng) ==
              Approx(std::log(3.0)).margin(1e-14));
    }
    SECTION("certain true class gives 0") {
        ModelParams p(spec, 2);
        p.bias()[0] = 800.0;
        std::vector<FeatureVector> only0{{{1, 2, 3}, 0}};
        CHECK(loss_classify(spec, p, only0, ShotSpec::exact(), NoiseSpec::off(), rng) ==
              Approx(0.0).margin(1e-300));
    }
    SECTION("3-sample batch matches hand recomputation") {
        const auto p = random_params(spec, 3, 44);
        double expected = 0.0;
        for (const auto &x : batch) {
            const auto y =
                model::forward(spec, p, x, ShotSpec::exact(), NoiseSpec::off(), rng);
            double z = 0.0;
            for (double v : y) {
                z += std::exp(v);
            }
            expected += -std::log(std::exp(y[static_cast<std::size_t>(x.label)]) / z);
        }
        expected /= 3.0;
        const double got = loss_classify(spec, p, batch, ShotSpec::exact(), NoiseSpec::off(), rng);
        CHECK(got == Approx(expected).margin(1e-12));
        CHECK(got >= 0.0);
        const std::vector<double> flat(p.values().begin(), p.values().end());
        CHECK(got == Approx(dense_ce(spec, flat, 3, batch)).margin(1e-12));
    }
    SECTION("errors") {
        ModelParams p(spec, 2);
        std::vector<FeatureVector> bad{{{1, 0}, 2}};
        CHECK_THROWS_AS(loss_classify(spec, p, bad, ShotSpec::exact(), NoiseSpec::off(), rng),
                        LabelError);
        std::vector<FeatureVector> neg{{{1, 0}, -1}};
        CHECK_THROWS_AS(loss_classify(spec, p, neg, ShotSpec::exact(), NoiseSpec::off(), rng),
                        LabelError);
        std::vector<FeatureVector> empty;
        CHECK_THROWS_AS(loss_classify(spec, p, empty, ShotSpec::exact(), NoiseSpec::off(), rng),
                        DataError);
    }
}

TEST_CASE("grad_parameter_shift", "[training]") {
    Rng rng(4);
    const CircuitSpec spec{1, 1};
    ModelParams p(spec, 1);
    Observable z(1);
    z.add(1.0, "Z");
    SECTION("-sin(pi/2)") {
        p.angle(0, 0) = std::numbers::pi / 2;
        const auto g = vqe_gradient(spec, p, z, NoiseSpec::off(), ShotSpec::exact(), rng);
        CHECK(g.angle_grads()[0] == Approx(-1.0).margin(1e-14));
        CHECK(g.evals_used == 2);
    }
    SECTION("stationary at 0") {
        p.angle(0, 0) = 0.0;
        const auto g = vqe_gradient(spec, p, z, NoiseSpec::off(), ShotSpec::exact(), rng);
        CHECK(g.angle_grads()[0] == Approx(0.0).margin(1e-14));
    }
    SECTION("generic closure and non-default shift") {
        p.angle(0, 0) = 0.7;
        const auto g = grad_parameter_shift(
            p, [](std::span<const double> a) { return std::cos(a[0]); }, 0.3);
        CHECK(g.angle_grads()[0] == Approx(-std::sin(0.7)).margin(1e-14));
    }
    SECTION("non-finite loss") {
        CHECK_THROWS_AS(grad_parameter_shift(p,
                                             [](std::span<const double>) {
                                                 return std::numeric_limits<double>::infinity();
                                             }),
                        NumericError);
    }
}

TEST_CASE("parameter shift matches finite differences", "[training][property]") {
    Rng rng(6);
    std::mt19937_64 orng(7);
    const double h = 1e-5;
    int instances = 0;
    for (std::size_t n = 1; n <= 4; ++n) {
        for (std::size_t l = 1; l <= 3; ++l) {
            for (int rep = 0; rep < 5; ++rep) {
                const CircuitSpec spec{n, l, rep % 2 ? Entangler::ring : Entangler::linear_chain};
                const std::size_t classes = 2 + static_cast<std::size_t>(rep % 2);
                const auto p = random_params(spec, classes, 1000 * n + 100 * l + rep);
                const auto batch = random_batch(spec.dim(), classes, 3, orng);
                const auto bg =
                    classify_gradient(spec, p, batch, ShotSpec::exact(), NoiseSpec::off(), rng);
                std::vector<double> flat(p.values().begin(), p.values().end());
                CHECK(bg.loss == Approx(dense_ce(spec, flat, classes, batch)).margin(1e-12));
                CHECK(bg.gradient.evals_used == 3 * 2 * spec.param_count());
                for (std::size_t i = 0; i < flat.size(); ++i) {
                    const double keep = flat[i];
                    flat[i] = keep + h;
                    const double up = dense_ce(spec, flat, classes, batch);
                    flat[i] = keep - h;
                    const double down = dense_ce(spec, flat, classes, batch);
                    flat[i] = keep;
                    CHECK(std::abs(bg.gradient.values.values()[i] - (up - down) / (2 * h)) <=
                          1e-6);
                }

                // VQE flavour on the same circuit
                const auto t = random_terms(n, orng);
                const auto g = vqe_gradient(spec, p, to_observable(n, t), NoiseSpec::off(),
                                            ShotSpec::exact(), rng);
                CHECK(g.evals_used == 2 * spec.param_count());
                std::vector<double> ang(p.angles().begin(), p.angles().end());
                for (std::size_t i = 0; i < ang.size(); ++i) {
                    const double keep = ang[i];
                    ang[i] = keep + h;
                    const double up = dense_energy(spec, ang, t);
                    ang[i] = keep - h;
                    const double down = dense_energy(spec, ang, t);
                    ang[i] = keep;
                    CHECK(std::abs(g.angle_grads()[i] - (up - down) / (2 * h)) <= 1e-6);
                }
                for (double v : g.head_weight_grads()) {
                    CHECK(v == 0.0);
                }
                ++instances;
            }
        }
    }
    CHECK(instances >= 50);
}

TEST_CASE("sgd_step", "[training]") {
    const ModelParams shape(1, 1, 1); // 1 angle, 2 weights, 1 bias
    SECTION("zero gradient is identity, twice") {
        const auto p = random_params(CircuitSpec{1, 1}, 1, 5);
        const auto zero = grad_of(shape, std::vector<double>(4, 0.0));
        CHECK(sgd_step(sgd_step(p, zero, 0.3), zero, 0.3) == p);
    }
    SECTION("scalar rule") {
        auto p = ModelParams::from_flat(1, 1, 1, std::vector<double>{1.0, 1.0, 1.0, 1.0});
        const auto g = grad_of(shape, {2.0, 0.0, 0.0, 0.0});
        const auto q = sgd_step(p, g, 0.1);
        CHECK(q.values()[0] == Approx(0.8).margin(1e-15));
        CHECK(q.values()[1] == 1.0);
    }
    SECTION("shape mismatch") {
        const ModelParams other(1, 2, 1);
        CHECK_THROWS_AS(sgd_step(other, grad_of(shape, std::vector<double>(4, 0.0)), 0.1),
                        ShapeError);
    }
}

TEST_CASE("personalized_step", "[training]") {
    const CircuitSpec spec{2, 2};
    const auto p = random_params(spec, 3, 1);
    const auto global = random_params(spec, 3, 2);
    const auto gvals = random_params(spec, 3, 3);
    const GradientEstimate g{gvals, 0};
    SECTION("lambda 0 reduces to sgd bit for bit") {
        CHECK(personalized_step(p, g, 0.05, 0.0, global) == sgd_step(p, g, 0.05));
    }
    SECTION("at the anchor the proximal term vanishes") {
        const auto a = personalized_step(p, g, 0.05, 0.7, p);
        const auto b = sgd_step(p, g, 0.05);
        for (std::size_t i = 0; i < p.size(); ++i) {
            CHECK(a.values()[i] == Approx(b.values()[i]).margin(1e-15));
        }
    }
    SECTION("scalar hand evaluation") {
        const auto w = ModelParams::from_flat(1, 1, 1, std::vector<double>{1.0, 0.0, 0.0, 0.0});
        const ModelParams w_global(1, 1, 1);
        const auto q = personalized_step(w, grad_of(w, std::vector<double>(4, 0.0)), 0.01, 0.1,
                                         w_global);
        CHECK(q.values()[0] == Approx(0.999).margin(1e-15));
    }
    SECTION("update covers angles and head") {
        const GradientEstimate zero{ModelParams(spec, 3), 0};
        const auto q = personalized_step(p, zero, 0.5, 1.0, global);
        for (std::size_t i = 0; i < p.size(); ++i) {
            CHECK(q.values()[i] ==
                  Approx(p.values()[i] - 0.5 * (p.values()[i] - global.values()[i])));
        }
    }
    SECTION("shape mismatch") {
        const ModelParams other(spec, 2);
        CHECK_THROWS_AS(personalized_step(p, g, 0.1, 0.1, other), ShapeError);
    }
}

TEST_CASE("lambda pulls towards the anchor", "[training][property]") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.001, 1.0);
    const CircuitSpec spec{2, 1};
    for (int t = 0; t < 100; ++t) {
        const auto p = random_params(spec, 2, 100 + t);
        const auto global = random_params(spec, 2, 500 + t);
        const double lambda = u(rng) * 5.0;
        const double eta = u(rng) / lambda * 0.999; // eta * lambda < 1
        const GradientEstimate zero{ModelParams(spec, 2), 0};
        const auto q = personalized_step(p, zero, eta, lambda, global);
        CHECK(dist(q, global) < dist(p, global));
    }
}

TEST_CASE("local_train", "[training]") {
    std::mt19937_64 orng(12);
    const CircuitSpec spec{2, 2};
    const auto shard = random_batch(4, 3, 20, orng);
    const auto start = random_params(spec, 3, 31);
    const auto global = random_params(spec, 3, 32);
    TrainConfig cfg;
    cfg.local_epochs = 3;
    cfg.batch_size = 6;

    SECTION("eta 0 keeps params and gives a constant trace") {
        cfg.eta = 0.0;
        Rng rng(1);
        const auto r = local_train(spec, start, shard, cfg, global, ShotSpec::exact(),
                                   NoiseSpec::off(), rng);
        CHECK(r.params == start);
        REQUIRE(r.loss_trace.size() == 3);
        for (double v : r.loss_trace) {
            CHECK(v == Approx(r.loss_trace[0]).margin(1e-12));
        }
        // 20 samples, 2 evals per angle per sample, per epoch
        CHECK(r.evals_used == 3 * 20 * 2 * spec.param_count());
    }
    SECTION("identical seeds give identical results") {
        Rng a(77);
        Rng b(77);
        const auto ra = local_train(spec, start, shard, cfg, global, ShotSpec::finite(200),
                                    NoiseSpec::depolarizing(0.05), a);
        const auto rb = local_train(spec, start, shard, cfg, global, ShotSpec::finite(200),
                                    NoiseSpec::depolarizing(0.05), b);
        CHECK(ra.params == rb.params);
        CHECK(ra.loss_trace == rb.loss_trace);
    }
    SECTION("lambda 0 trajectory equals a hand-rolled SGD loop") {
        cfg.lambda = 0.0;
        cfg.eta = 0.2;
        Rng a(5);
        const auto r = local_train(spec, start, shard, cfg, global, ShotSpec::finite(100),
                                   NoiseSpec::off(), a);
        Rng b(5);
        ModelParams w = start;
        std::vector<std::size_t> order(shard.size());
        for (std::size_t e = 0; e < cfg.local_epochs; ++e) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::shuffle(order.begin(), order.end(), b);
            for (std::size_t i = 0; i < order.size(); i += cfg.batch_size) {
                std::vector<FeatureVector> batch;
                for (std::size_t k = i; k < std::min(order.size(), i + cfg.batch_size); ++k) {
                    batch.push_back(shard[order[k]]);
                }
                const auto bg =
                    classify_gradient(spec, w, batch, ShotSpec::finite(100), NoiseSpec::off(), b);
                w = sgd_step(w, bg.gradient, cfg.eta);
            }
        }
        CHECK(r.params == w);
    }
    SECTION("training lowers the loss") {
        cfg.eta = 0.5;
        cfg.local_epochs = 15;
        Rng rng(3);
        const auto r = local_train(spec, start, shard, cfg, start, ShotSpec::exact(),
                                   NoiseSpec::off(), rng);
        CHECK(r.loss_trace.back() < r.loss_trace.front());
    }
    SECTION("errors") {
        Rng rng(1);
        std::vector<FeatureVector> empty;
        CHECK_THROWS_AS(local_train(spec, start, empty, cfg, global, ShotSpec::exact(),
                                    NoiseSpec::off(), rng),
                        DataError);
        cfg.mode = Mode::vqe;
        CHECK_THROWS_AS(local_train(spec, start, shard, cfg, global, ShotSpec::exact(),
                                    NoiseSpec::off(), rng),
                        ConfigError);
    }
}

TEST_CASE("local_train in vqe mode", "[training]") {
    const CircuitSpec spec{1, 1};
    Observable z(1);
    z.add(1.0, "Z");
    ModelParams start(spec, 1);
    start.angle(0, 0) = std::numbers::pi / 2;

    SECTION("1-qubit convergence") {
        // Brute-force oracle: iterate the scalar recurrence theta += eta sin(theta).
        double th = std::numbers::pi / 2;
        std::size_t needed = 0;
        while (std::cos(th) > -0.999) {
            th += 0.1 * std::sin(th);
            ++needed;
        }
        REQUIRE(needed <= 200);
        TrainConfig cfg;
        cfg.mode = Mode::vqe;
        cfg.eta = 0.1;
        cfg.lambda = 0.0;
        cfg.local_epochs = 200;
        Rng rng(1);
        const auto r =
            local_train(spec, start, z, cfg, start, ShotSpec::exact(), NoiseSpec::off(), rng);
        const double final_loss =
            loss_vqe(spec, r.params, z, NoiseSpec::off(), ShotSpec::exact(), rng);
        CHECK(final_loss <= -0.999);
        // trace[k] is the energy before step k
        CHECK(r.loss_trace[needed] <= -0.999);
        CHECK(r.loss_trace[needed - 1] > -0.999);
        CHECK(r.evals_used == 2 * spec.param_count() * cfg.local_epochs);
    }
    SECTION("eval accounting on a larger circuit") {
        const CircuitSpec big{4, 3};
        Observable h(4);
        h.add(1.0, "ZZII").add(0.5, "IXXI");
        const auto p = random_params(big, 1, 3);
        TrainConfig cfg;
        cfg.mode = Mode::vqe;
        cfg.local_epochs = 7;
        Rng rng(2);
        const auto r = local_train(big, p, h, cfg, p, ShotSpec::exact(), NoiseSpec::off(), rng);
        CHECK(r.evals_used == 2 * 12 * 7);
        CHECK(r.loss_trace.size() == 7);
    }
}
