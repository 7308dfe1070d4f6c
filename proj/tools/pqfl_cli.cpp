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

// Command-line front end: pqfl run | sweep | compare.

#include "pqfl/runner.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
    std::optional<std::string> mode;
};

void add_common(CLI::App *cmd, CommonFlags &f) {
    cmd->add_option("--config,-c", f.config, "JSON experiment config")->required();
    cmd->add_option("--seed", f.seed, "override master_seed");
    cmd->add_option("--output-dir,-o", f.output_dir, "override output_dir");
    cmd->add_option("--mode", f.mode, "override mode")
        ->check(CLI::IsMember({"qfl", "pqfl", "local"}));
}

// Precedence: command-line flag > environment > config file.
pqfl::runner::ExperimentConfig resolve(const CommonFlags &f) {
    namespace fs = std::filesystem;
    const fs::path path = f.config;
    auto doc = pqfl::runner::read_json_file(path);
    pqfl::runner::apply_env_overrides(doc);
    if (f.seed) {
        doc["master_seed"] = *f.seed;
    }
    if (f.output_dir) {
        doc["output_dir"] = *f.output_dir;
    }
    if (f.mode) {
        doc["mode"] = *f.mode;
    }
    return pqfl::runner::parse_config(doc, path.parent_path());
}

void print_summary(const pqfl::runner::RunResult &r) {
    const auto &fin = r.summary.at("final");
    std::cout << r.dir.string() << ": rounds=" << r.summary.at("rounds")
              << " auroc=" << fin.at("auroc") << " aupr=" << fin.at("aupr")
              << " fe_pct=" << fin.at("fe_pct") << " me_pct=" << fin.at("me_pct")
              << " val_loss=" << fin.at("val_loss")
              << " rounds_to_target=" << r.summary.at("rounds_to_target") << '\n';
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Personalized quantum federated learning simulator"};
    app.require_subcommand(1);

    CommonFlags run_flags;
    auto *run_cmd = app.add_subcommand("run", "run one experiment");
    add_common(run_cmd, run_flags);

    CommonFlags sweep_flags;
    auto *sweep_cmd = app.add_subcommand("sweep", "run the cartesian product of sweep axes");
    add_common(sweep_cmd, sweep_flags);

    std::vector<std::string> compare_dirs;
    std::string compare_out;
    auto *compare_cmd = app.add_subcommand("compare", "compare completed run directories");
    compare_cmd->add_option("runs", compare_dirs, "run directories")->required()->expected(2, -1);
    compare_cmd->add_option("--output,-o", compare_out, "also write the table to this file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            print_summary(pqfl::runner::run(resolve(run_flags)));
        } else if (*sweep_cmd) {
            const auto res = pqfl::runner::sweep(resolve(sweep_flags));
            for (const auto &r : res.runs) {
                print_summary(r);
            }
        } else if (*compare_cmd) {
            std::vector<std::filesystem::path> dirs(compare_dirs.begin(), compare_dirs.end());
            const auto text = pqfl::runner::render(pqfl::runner::compare(dirs));
            std::cout << text;
            if (!compare_out.empty()) {
                pqfl::runner::write_text(compare_out, text);
            }
        }
    } catch (const pqfl::Error &e) {
        std::cerr << "pqfl: error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "pqfl: unexpected error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
