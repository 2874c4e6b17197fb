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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "gcfs/error.hpp"
#include "gcfs/models.hpp"
#include "gcfs/sim.hpp"

namespace gcfs::cli {

enum class SweepAxis { power, theta1 };

struct PolicySpec {
    Policy::Kind kind = Policy::Kind::gcfs;
    std::optional<double> threshold; ///< unset: use the mean-field h_th
};

struct SweepSpec {
    SweepAxis axis = SweepAxis::power;
    std::vector<double> values;
    std::vector<double> theta1; ///< power axis only; empty keeps the configured traffic
    bool simulate = true;
};

/// A validated experiment. Every model object has already been constructed
/// once, so commands cannot fail on parameter domains.
struct ExperimentConfig {
    std::filesystem::path source;

    std::size_t users = 0;
    double bandwidth = 1.0;
    double slot_duration = 1.0;
    double power = 1.0;
    double noise = 1.0;

    std::string channel_kind = "rayleigh";
    double channel_h_max = 1.0;
    std::filesystem::path channel_table;

    std::vector<double> theta;
    double packet_bits = 1.0;

    PolicySpec policy;

    std::uint64_t horizon = 20000;
    std::uint64_t warmup = 2000;
    std::vector<std::uint64_t> seeds{1};
    bool trace = true;
    std::optional<unsigned> workers;

    std::optional<SweepSpec> sweep;
    std::optional<std::filesystem::path> out_dir;
    std::optional<double> solver_tolerance;

    SystemParams system() const { return {users, bandwidth, slot_duration, power, noise}; }
    TrafficModel traffic() const { return {theta, packet_bits}; }

    Channel channel() const
    {
        if (channel_kind == "uniform")
            return UniformChannel(channel_h_max);
        if (channel_kind == "table")
            return load_channel_table(channel_table.string());
        return RayleighChannel{};
    }
};

namespace detail {

inline void reject_unknown(const YAML::Node& node, const std::string& where,
                           std::initializer_list<const char*> known)
{
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.contains(key))
            throw ConfigError(where.empty() ? key : where + "." + key, "unknown key");
    }
}

inline YAML::Node require_map(const YAML::Node& parent, const char* key, bool required)
{
    const YAML::Node node = parent[key];
    if (!node) {
        if (required)
            throw ConfigError(key, "missing section");
        return node;
    }
    if (!node.IsMap())
        throw ConfigError(key, "expected a mapping");
    return node;
}

template <class T>
T read(const YAML::Node& node, const std::string& field)
{
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(field, "cannot parse value '" + YAML::Dump(node) + "'");
    }
}

template <class T>
void read_opt(const YAML::Node& map, const char* key, const std::string& field, T& out)
{
    if (const YAML::Node v = map[key])
        out = read<T>(v, field);
}

template <class T>
std::vector<T> read_list(const YAML::Node& node, const std::string& field)
{
    if (!node.IsSequence())
        throw ConfigError(field, "expected a list");
    std::vector<T> out;
    for (std::size_t i = 0; i < node.size(); ++i)
        out.push_back(read<T>(node[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

inline void require_positive(double v, const std::string& field)
{
    if (!(v > 0.0) || !std::isfinite(v))
        throw ConfigError(field, "must be positive and finite");
}

} // namespace detail

/// Parses and validates a YAML experiment file. Relative table paths resolve
/// against the config's directory.
inline ExperimentConfig parse_config(const YAML::Node& root, const std::filesystem::path& source)
{
    using detail::read;
    using detail::read_opt;

    if (!root.IsMap())
        throw ConfigError("<root>", "expected a mapping");
    detail::reject_unknown(root, "",
                           {"system", "channel", "traffic", "policy", "run", "sweep", "output",
                            "solver"});
    ExperimentConfig cfg;
    cfg.source = source;

    const auto sys = detail::require_map(root, "system", true);
    detail::reject_unknown(sys, "system",
                           {"users", "bandwidth", "slot_duration", "power", "noise"});
    if (!sys["users"])
        throw ConfigError("system.users", "required");
    const auto users = read<long long>(sys["users"], "system.users");
    if (users < 1)
        throw ConfigError("system.users", "must be at least 1");
    cfg.users = static_cast<std::size_t>(users);
    read_opt(sys, "bandwidth", "system.bandwidth", cfg.bandwidth);
    read_opt(sys, "slot_duration", "system.slot_duration", cfg.slot_duration);
    if (!sys["power"])
        throw ConfigError("system.power", "required");
    cfg.power = read<double>(sys["power"], "system.power");
    if (!sys["noise"])
        throw ConfigError("system.noise", "required");
    cfg.noise = read<double>(sys["noise"], "system.noise");
    detail::require_positive(cfg.bandwidth, "system.bandwidth");
    detail::require_positive(cfg.slot_duration, "system.slot_duration");
    detail::require_positive(cfg.power, "system.power");
    detail::require_positive(cfg.noise, "system.noise");

    if (const auto ch = detail::require_map(root, "channel", false)) {
        detail::reject_unknown(ch, "channel", {"model", "h_max", "path"});
        read_opt(ch, "model", "channel.model", cfg.channel_kind);
        if (cfg.channel_kind == "uniform") {
            if (!ch["h_max"])
                throw ConfigError("channel.h_max", "required for the uniform model");
            cfg.channel_h_max = read<double>(ch["h_max"], "channel.h_max");
            detail::require_positive(cfg.channel_h_max, "channel.h_max");
        } else if (cfg.channel_kind == "table") {
            if (!ch["path"])
                throw ConfigError("channel.path", "required for the table model");
            std::filesystem::path p = read<std::string>(ch["path"], "channel.path");
            cfg.channel_table = p.is_absolute() ? p : source.parent_path() / p;
        } else if (cfg.channel_kind != "rayleigh") {
            throw ConfigError("channel.model", "expected rayleigh, uniform or table");
        }
    }

    const auto tr = detail::require_map(root, "traffic", true);
    detail::reject_unknown(tr, "traffic", {"theta", "bernoulli", "packet_bits"});
    if (tr["theta"] && tr["bernoulli"])
        throw ConfigError("traffic", "give either theta or bernoulli, not both");
    if (tr["theta"]) {
        cfg.theta = detail::read_list<double>(tr["theta"], "traffic.theta");
    } else if (tr["bernoulli"]) {
        const double t1 = read<double>(tr["bernoulli"], "traffic.bernoulli");
        if (!(t1 > 0.0 && t1 <= 1.0))
            throw ConfigError("traffic.bernoulli", "must lie in (0, 1]");
        cfg.theta = {1.0 - t1, t1};
    } else {
        throw ConfigError("traffic.theta", "required");
    }
    read_opt(tr, "packet_bits", "traffic.packet_bits", cfg.packet_bits);
    try {
        (void)cfg.traffic();
    } catch (const DomainError& e) {
        throw ConfigError("traffic.theta", e.what());
    }

    if (const YAML::Node pol = root["policy"]) {
        std::string kind;
        if (pol.IsScalar()) {
            kind = read<std::string>(pol, "policy");
        } else if (pol.IsMap()) {
            detail::reject_unknown(pol, "policy", {"kind", "threshold"});
            kind = pol["kind"] ? read<std::string>(pol["kind"], "policy.kind") : "gcfs";
            if (pol["threshold"]) {
                const double th = read<double>(pol["threshold"], "policy.threshold");
                if (!(th >= 0.0) || !std::isfinite(th))
                    throw ConfigError("policy.threshold", "must be nonnegative and finite");
                cfg.policy.threshold = th;
            }
        } else {
            throw ConfigError("policy", "expected gcfs, threshold or a mapping");
        }
        if (kind == "gcfs")
            cfg.policy.kind = Policy::Kind::gcfs;
        else if (kind == "threshold")
            cfg.policy.kind = Policy::Kind::threshold;
        else
            throw ConfigError(pol.IsMap() ? "policy.kind" : "policy", "expected gcfs or threshold");
        if (cfg.policy.threshold && cfg.policy.kind != Policy::Kind::threshold)
            throw ConfigError("policy.threshold", "only valid with kind: threshold");
    }

    bool warmup_given = false;
    if (const auto run = detail::require_map(root, "run", false)) {
        detail::reject_unknown(run, "run", {"horizon", "warmup", "seeds", "trace", "workers"});
        if (run["horizon"]) {
            const auto h = read<long long>(run["horizon"], "run.horizon");
            if (h < 1)
                throw ConfigError("run.horizon", "must be positive");
            cfg.horizon = static_cast<std::uint64_t>(h);
        }
        if (run["warmup"]) {
            const auto w = read<long long>(run["warmup"], "run.warmup");
            if (w < 0)
                throw ConfigError("run.warmup", "must be nonnegative");
            cfg.warmup = static_cast<std::uint64_t>(w);
            warmup_given = true;
        }
        if (run["seeds"]) {
            const YAML::Node s = run["seeds"];
            cfg.seeds = s.IsScalar() ? std::vector<std::uint64_t>{read<std::uint64_t>(s, "run.seeds")}
                                     : detail::read_list<std::uint64_t>(s, "run.seeds");
            if (cfg.seeds.empty())
                throw ConfigError("run.seeds", "need at least one seed");
            if (std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size())
                throw ConfigError("run.seeds", "seeds must be distinct");
        }
        read_opt(run, "trace", "run.trace", cfg.trace);
        if (run["workers"]) {
            const auto k = read<long long>(run["workers"], "run.workers");
            if (k < 1)
                throw ConfigError("run.workers", "must be at least 1");
            cfg.workers = static_cast<unsigned>(k);
        }
    }
    if (!warmup_given)
        cfg.warmup = default_warmup(cfg.horizon);
    if (!(cfg.horizon > cfg.warmup))
        throw ConfigError("run.warmup", "must be smaller than run.horizon");

    if (const auto sw = detail::require_map(root, "sweep", false)) {
        detail::reject_unknown(sw, "sweep", {"axis", "values", "theta1", "simulate"});
        SweepSpec spec;
        const auto axis = sw["axis"] ? read<std::string>(sw["axis"], "sweep.axis") : "power";
        if (axis == "power")
            spec.axis = SweepAxis::power;
        else if (axis == "theta1")
            spec.axis = SweepAxis::theta1;
        else
            throw ConfigError("sweep.axis", "expected power or theta1");
        if (!sw["values"])
            throw ConfigError("sweep.values", "required");
        spec.values = detail::read_list<double>(sw["values"], "sweep.values");
        if (spec.values.size() < 2)
            throw ConfigError("sweep.values", "need at least two values");
        for (std::size_t i = 0; i < spec.values.size(); ++i) {
            const std::string f = "sweep.values[" + std::to_string(i) + "]";
            if (spec.axis == SweepAxis::power)
                detail::require_positive(spec.values[i], f);
            else if (!(spec.values[i] > 0.0 && spec.values[i] <= 1.0))
                throw ConfigError(f, "theta1 must lie in (0, 1]");
        }
        if (sw["theta1"]) {
            if (spec.axis != SweepAxis::power)
                throw ConfigError("sweep.theta1", "only valid with axis: power");
            spec.theta1 = detail::read_list<double>(sw["theta1"], "sweep.theta1");
            for (std::size_t i = 0; i < spec.theta1.size(); ++i)
                if (!(spec.theta1[i] > 0.0 && spec.theta1[i] <= 1.0))
                    throw ConfigError("sweep.theta1[" + std::to_string(i) + "]",
                                      "must lie in (0, 1]");
        }
        read_opt(sw, "simulate", "sweep.simulate", spec.simulate);
        cfg.sweep = std::move(spec);
    }

    if (const auto out = detail::require_map(root, "output", false)) {
        detail::reject_unknown(out, "output", {"dir"});
        if (out["dir"])
            cfg.out_dir = read<std::string>(out["dir"], "output.dir");
    }

    if (const auto sol = detail::require_map(root, "solver", false)) {
        detail::reject_unknown(sol, "solver", {"tolerance"});
        if (sol["tolerance"]) {
            const double tol = read<double>(sol["tolerance"], "solver.tolerance");
            detail::require_positive(tol, "solver.tolerance");
            cfg.solver_tolerance = tol;
        }
    }

    // Build the channel once so table errors surface at load time.
    try {
        (void)cfg.channel();
    } catch (const DomainError& e) {
        throw ConfigError(cfg.channel_kind == "table" ? "channel.path" : "channel", e.what());
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path)
{
    YAML::Node root;
    try {
        root = YAML::LoadFile(path.string());
    } catch (const YAML::BadFile&) {
        throw IoError("cannot read config '" + path.string() + "'");
    } catch (const YAML::ParserException& e) {
        throw ConfigError("<syntax>", e.what());
    }
    return parse_config(root, path);
}

} // namespace gcfs::cli
