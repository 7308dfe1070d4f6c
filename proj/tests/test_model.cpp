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

#include "pqfl/model.hpp"

#include "dense_oracle.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <random>

using namespace pqfl;
using namespace pqfl::model;
using quantum::Complex;
using quantum::NoiseSpec;
using quantum::ShotSpec;
using Catch::Approx;

namespace {

quantum::QuantumState from_oracle(const oracle::Vec &v) {
    std::vector<Complex> amps(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        amps[static_cast<std::size_t>(i)] = v(i);
    }
    return quantum::QuantumState::from_amplitudes(std::move(amps));
}

double max_diff(const quantum::QuantumState &s, const oracle::Vec &v) {
    double m = 0.0;
    for (std::size_t i = 0; i < s.dim(); ++i) {
        m = std::max(m, std::abs(s.amplitudes()[i] - v(static_cast<Eigen::Index>(i))));
    }
    return m;
}

ModelParams random_params(const CircuitSpec &spec, std::size_t classes, std::uint64_t seed) {
    Rng rng(seed);
    auto p = init_params(spec, classes, rng);
    std::normal_distribution<double> g(0.0, 1.0);
    for (auto &b : p.bias()) {
        b = g(rng);
    }
    return p;
}

} // namespace

TEST_CASE("parameter layout", "[model]") {
    const CircuitSpec spec{4, 3, Entangler::linear_chain};
    CHECK(spec.param_count() == 12);
    ModelParams p(spec, 10);
    CHECK(p.n_angles() == 12);
    CHECK(p.weights().size() == 10 * 16);
    CHECK(p.bias().size() == 10);
    CHECK(p.size() == 12 + 160 + 10);
    p.angle(1, 2) = 5.0;
    CHECK(p.values()[1 * 4 + 2] == 5.0);
    p.weight(3, 7) = 6.0;
    CHECK(p.values()[12 + 3 * 16 + 7] == 6.0);
    CHECK_THROWS_AS((CircuitSpec{0, 1}.validate()), ShapeError);
    CHECK_THROWS_AS((CircuitSpec{2, 0}.validate()), ShapeError);
}

TEST_CASE("init_params", "[model]") {
    const CircuitSpec spec{3, 2};
    Rng a(9);
    Rng b(9);
    const auto p = init_params(spec, 4, a);
    const auto q = init_params(spec, 4, b);
    CHECK(std::equal(p.values().begin(), p.values().end(), q.values().begin()));
    for (double v : p.angles()) {
        CHECK(v >= 0.0);
        CHECK(v < std::numbers::pi);
    }
    for (double v : p.weights()) {
        CHECK(std::abs(v) <= 0.1);
    }
    for (double v : p.bias()) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("run_circuit", "[model]") {
    Rng rng(1);
    SECTION("zero angles give the entangler-only action") {
        std::mt19937_64 orng(4);
        for (auto ent : {Entangler::linear_chain, Entangler::ring}) {
            const CircuitSpec spec{3, 2, ent};
            const ModelParams p(spec, 2);
            const auto v = oracle::random_state(3, orng);
            const auto out = run_circuit(spec, p, from_oracle(v), NoiseSpec::off(), rng);
            const std::vector<double> zeros(6, 0.0);
            const oracle::Vec expected =
                oracle::ansatz(3, 2, zeros, ent == Entangler::ring) * v;
            CHECK(max_diff(out, expected) < 1e-12);
        }
    }
    SECTION("single Ry on |0>") {
        const CircuitSpec spec{1, 1};
        ModelParams p(spec, 1);
        const double theta = 1.234;
        p.angle(0, 0) = theta;
        const auto out = run_circuit(spec, p, quantum::zero_state(1), NoiseSpec::off(), rng);
        CHECK(out.amplitudes()[0].real() == Approx(std::cos(theta / 2)).margin(1e-15));
        CHECK(out.amplitudes()[1].real() == Approx(std::sin(theta / 2)).margin(1e-15));
    }
    SECTION("zero angles on |0...0> stay at |0...0>") {
        const CircuitSpec spec{4, 3};
        const ModelParams p(spec, 2);
        const auto out = run_circuit(spec, p, quantum::zero_state(4), NoiseSpec::off(), rng);
        CHECK(out.amplitudes()[0] == Complex{1, 0});
    }
    SECTION("random circuits match the dense composition") {
        std::mt19937_64 orng(5);
        for (std::size_t n = 1; n <= 4; ++n) {
            for (std::size_t l = 1; l <= 3; ++l) {
                for (auto ent : {Entangler::linear_chain, Entangler::ring}) {
                    const CircuitSpec spec{n, l, ent};
                    const auto p = random_params(spec, 2, 100 * n + l);
                    const auto v = oracle::random_state(n, orng);
                    const auto out =
                        run_circuit(spec, p, from_oracle(v), NoiseSpec::off(), rng);
                    const std::vector<double> ang(p.angles().begin(), p.angles().end());
                    const oracle::Vec expected =
                        oracle::ansatz(n, l, ang, ent == Entangler::ring) * v;
                    CHECK(max_diff(out, expected) < 1e-10);
                }
            }
        }
    }
    SECTION("shape mismatch") {
        const CircuitSpec spec{2, 1};
        const ModelParams p(spec, 2);
        CHECK_THROWS_AS(run_circuit(spec, p, quantum::zero_state(3), NoiseSpec::off(), rng),
                        ShapeError);
        const ModelParams wrong(CircuitSpec{2, 2}, 2);
        CHECK_THROWS_AS(run_circuit(spec, wrong, quantum::zero_state(2), NoiseSpec::off(), rng),
                        ShapeError);
    }
}

TEST_CASE("forward", "[model]") {
    const CircuitSpec spec{2, 2};
    Rng rng(3);
    encoding::FeatureVector x{{0.3, -1.0, 0.5, 2.0}, 0};
    SECTION("identity head returns probabilities") {
        auto p = random_params(spec, 4, 8);
        for (auto &w : p.weights()) {
            w = 0.0;
        }
        for (auto &b : p.bias()) {
            b = 0.0;
        }
        for (std::size_t c = 0; c < 4; ++c) {
            p.weight(c, c) = 1.0;
        }
        const auto y = forward(spec, p, x, ShotSpec::exact(), NoiseSpec::off(), rng);
        // oracle: dense ansatz applied to the normalized input
        oracle::Vec in(4);
        const double nrm = std::sqrt(0.09 + 1.0 + 0.25 + 4.0);
        for (int i = 0; i < 4; ++i) {
            in(i) = x.values[static_cast<std::size_t>(i)] / nrm;
        }
        const std::vector<double> ang(p.angles().begin(), p.angles().end());
        const oracle::Vec out = oracle::ansatz(2, 2, ang) * in;
        double sum = 0.0;
        for (int i = 0; i < 4; ++i) {
            CHECK(y[static_cast<std::size_t>(i)] == Approx(std::norm(out(i))).margin(1e-12));
            sum += y[static_cast<std::size_t>(i)];
        }
        CHECK(sum == Approx(1.0).margin(1e-12));
    }
    SECTION("zero head returns the bias") {
        ModelParams p(spec, 2);
        p.bias()[0] = 0.3;
        p.bias()[1] = 0.7;
        const auto y = forward(spec, p, x, ShotSpec::exact(), NoiseSpec::off(), rng);
        CHECK(y == std::vector<double>{0.3, 0.7});
    }
    SECTION("finite shots are reproducible bit for bit") {
        const auto p = random_params(spec, 3, 21);
        Rng a(55);
        Rng b(55);
        const auto ya = forward(spec, p, x, ShotSpec::finite(1000), NoiseSpec::off(), a);
        const auto yb = forward(spec, p, x, ShotSpec::finite(1000), NoiseSpec::off(), b);
        CHECK(ya == yb);
    }
    SECTION("exact mode is a pure function") {
        const auto p = random_params(spec, 3, 22);
        Rng a(1);
        Rng b(2);
        CHECK(forward(spec, p, x, ShotSpec::exact(), NoiseSpec::off(), a) ==
              forward(spec, p, x, ShotSpec::exact(), NoiseSpec::off(), b));
    }
    SECTION("encoding errors propagate") {
        const auto p = random_params(spec, 3, 23);
        encoding::FeatureVector big{{1, 2, 3, 4, 5}, 0};
        CHECK_THROWS_AS(forward(spec, p, big, ShotSpec::exact(), NoiseSpec::off(), rng),
                        CapacityError);
        encoding::FeatureVector zero{{0, 0}, 0};
        CHECK_THROWS_AS(forward(spec, p, zero, ShotSpec::exact(), NoiseSpec::off(), rng),
                        DegenerateInputError);
    }
}

TEST_CASE("class_probabilities", "[model]") {
    SECTION("symmetric") {
        const auto p = class_probabilities(std::vector<double>{0, 0});
        CHECK(p[0] == 0.5);
        CHECK(p[1] == 0.5);
    }
    SECTION("large logits do not overflow") {
        const auto p = class_probabilities(std::vector<double>{1000, 0});
        CHECK(std::isfinite(p[0]));
        CHECK(p[0] == Approx(1.0).margin(1e-15));
        CHECK(p[1] >= 0.0);
        CHECK(p[1] < 1e-300);
    }
    SECTION("matches direct exp-normalize") {
        const auto p = class_probabilities(std::vector<double>{1, 2, 3});
        const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
        CHECK(p[0] == Approx(std::exp(1.0) / z).margin(1e-12));
        CHECK(p[1] == Approx(std::exp(2.0) / z).margin(1e-12));
        CHECK(p[2] == Approx(std::exp(3.0) / z).margin(1e-12));
    }
    SECTION("positive, normalized, monotone") {
        std::mt19937_64 rng(3);
        std::normal_distribution<double> g(0.0, 5.0);
        for (int t = 0; t < 50; ++t) {
            std::vector<double> y(6);
            for (auto &v : y) {
                v = g(rng);
            }
            const auto p = class_probabilities(y);
            double s = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                CHECK(p[i] > 0.0);
                s += p[i];
                for (std::size_t j = 0; j < y.size(); ++j) {
                    if (y[i] < y[j]) {
                        CHECK(p[i] <= p[j]);
                    }
                }
            }
            CHECK(s == Approx(1.0).margin(1e-12));
        }
    }
}

TEST_CASE("checkpoint serialization", "[model]") {
    const CircuitSpec spec{3, 2};
    const auto p = random_params(spec, 5, 77);
    SECTION("binary layout") {
        const auto bytes = to_binary(p);
        REQUIRE(bytes.size() == 20 + 8 * p.size());
        CHECK(bytes.substr(0, 8) == "PQFLPAR1");
        CHECK(static_cast<unsigned char>(bytes[8]) == 2);  // layers
        CHECK(static_cast<unsigned char>(bytes[12]) == 3); // qubits
        CHECK(static_cast<unsigned char>(bytes[16]) == 5); // classes
        // first stored value is angle(0, 0)
        double first = 0.0;
        std::memcpy(&first, bytes.data() + 20, 8);
        CHECK(first == p.angle(0, 0));
        const auto q = from_binary(bytes);
        CHECK(q.same_shape(p));
        CHECK(std::equal(p.values().begin(), p.values().end(), q.values().begin()));
        CHECK(checksum(q) == checksum(p));
    }
    SECTION("text round trip is exact") {
        const auto q = from_text(to_text(p));
        CHECK(std::equal(p.values().begin(), p.values().end(), q.values().begin()));
    }
    SECTION("file round trip") {
        const auto path = std::filesystem::temp_directory_path() / "pqfl_test_params.bin";
        save_params(p, path.string());
        const auto q = load_params(path.string());
        CHECK(checksum(q) == checksum(p));
        std::filesystem::remove(path);
    }
    SECTION("corrupt input") {
        auto bytes = to_binary(p);
        CHECK_THROWS_AS(from_binary(bytes.substr(0, bytes.size() - 1)), ParseError);
        bytes[0] = 'X';
        CHECK_THROWS_AS(from_binary(bytes), ParseError);
        CHECK_THROWS_AS(from_text("nonsense 1 2 3\n"), ParseError);
        CHECK_THROWS_AS(from_text("pqfl-params 1 1 1\n0.5\n"), ShapeError);
    }
    SECTION("checksum changes with a single value") {
        auto q = p;
        q.values()[3] = std::nextafter(q.values()[3], 10.0);
        CHECK(checksum(q) != checksum(p));
    }
}
