/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 The gcfs authors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// gcfs: experiment driver.
//
//   gcfs analyze|simulate|compare|sweep --config <path> [--out <dir>]
//        [--workers <k>] [--seed <u64>]
//
// GCFS_OUT_DIR and GCFS_WORKERS override the config; flags override both.
// Exit codes: 0 ok, 1 unexpected failure, 2 config, 3 numeric, 4 io.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include <CLI11.hpp>

#include "gcfs/cli/commands.hpp"

namespace {

enum Exit { ok = 0, failure = 1, usage = 2, config = 2, numeric = 3, io = 4 };

std::optional<std::string> env(const char* name)
{
    const char* v = std::getenv(name);
    if (!v || !*v)
        return std::nullopt;
    return std::string(v);
}

} // namespace

int main(int argc, char** argv)
{
    using namespace gcfs;

    CLI::App app{"Channel-aware downlink scheduling: mean-field analysis and simulation"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<unsigned> workers;
    std::optional<std::uint64_t> seed;
    const std::pair<const char*, const char*> commands[] = {
        {"analyze", "solve the threshold and the packet-count distribution"},
        {"simulate", "run the slot simulator for each seed"},
        {"compare", "analyze and simulate one config side by side"},
        {"sweep", "compare over the config's sweep values"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "experiment YAML file")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--workers", workers, "parallel seeds / sweep points")
            ->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "run this single seed instead of the configured list");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? Exit::ok : Exit::usage;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        const auto cfg = cli::load_config(config_path);
        cli::RunOptions opt;
        if (cfg.out_dir)
            opt.out_dir = *cfg.out_dir;
        if (cfg.workers)
            opt.workers = *cfg.workers;
        if (auto v = env("GCFS_OUT_DIR"))
            opt.out_dir = *v;
        if (auto v = env("GCFS_WORKERS")) {
            try {
                const long k = std::stol(*v);
                if (k < 1)
                    throw std::invalid_argument("");
                opt.workers = static_cast<unsigned>(k);
            } catch (const std::logic_error&) {
                throw ConfigError("GCFS_WORKERS", "expected a positive integer");
            }
        }
        if (out_dir)
            opt.out_dir = *out_dir;
        if (workers)
            opt.workers = *workers;
        opt.seed = seed;

        if (command == "analyze")
            cli::cmd_analyze(cfg, opt);
        else if (command == "simulate")
            cli::cmd_simulate(cfg, opt);
        else if (command == "compare")
            cli::cmd_compare(cfg, opt);
        else
            cli::cmd_sweep(cfg, opt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return Exit::config;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return Exit::io;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return Exit::io;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return Exit::numeric;
    } catch (const DomainError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return Exit::numeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return Exit::failure;
    }
    return Exit::ok;
}
