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

#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>
#include <thread>

#include <nlohmann/json.hpp>

#include "gcfs/error.hpp"
#include "gcfs/markov.hpp"
#include "gcfs/meanfield.hpp"
#include "gcfs/sim.hpp"

namespace gcfs::cli {

using json = nlohmann::ordered_json;

/// Shortest decimal that reads back to the same double; empty for non-finite.
inline std::string format_double(double x)
{
    if (!std::isfinite(x))
        return {};
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

/// Non-finite values become JSON null.
inline json number_or_null(double x)
{
    return std::isfinite(x) ? json(x) : json(nullptr);
}

/// Writes via a sibling temp file and rename, so readers never see a partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content)
{
    static std::atomic<unsigned long> counter{0};
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec)
            throw IoError("cannot create directory '" + path.parent_path().string() +
                          "': " + ec.message());
    }
    auto tmp = path;
    tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()) % 100000) +
           "-" + std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot open '" + tmp.string() + "' for writing");
        out << content;
        out.flush();
        if (!out)
            throw IoError("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move output into place at '" + path.string() + "'");
    }
}

inline void write_json(const std::filesystem::path& path, const json& doc)
{
    write_atomic(path, doc.dump(2) + "\n");
}

inline json to_json(const MeanFieldSolution& s)
{
    return {
        {"h_th", s.threshold},
        {"p", s.service_probability},
        {"mean_queue_bits", number_or_null(s.mean_queue_bits)},
        {"D", number_or_null(s.mean_delay_slots)},
        {"status", std::string(to_string(s.status))},
        {"residual", s.residual},
        {"tolerance", s.tolerance},
        {"target_bits", s.target},
        {"phi_at_zero", s.phi_at_zero},
        {"phi_sup", number_or_null(s.phi_sup)},
        {"deficit", s.deficit},
        {"iterations", s.iterations},
    };
}

inline json to_json(const SimSummary& s)
{
    return {
        {"seed", s.seed},
        {"horizon", s.horizon},
        {"warmup", s.warmup},
        {"users", s.users},
        {"arrival_bits", s.arrival_bits},
        {"mean_queue_bits", s.mean_queue_bits},
        {"mean_delay_slots", s.mean_delay_slots},
        {"mean_packets", s.mean_packets},
        {"packet_delay_slots", s.packet_delay_slots},
        {"served_fraction", s.served_fraction},
        {"mean_served_bits", s.mean_served_bits},
        {"backlogged_user_slots", s.backlogged_user_slots},
        {"cleared_user_slots", s.cleared_user_slots},
        {"diverged", s.diverged},
        {"packet_histogram", s.packet_histogram},
    };
}

inline std::string trace_csv(const SimSummary& s)
{
    std::string out = "t,total_queue_bits,S_t,served_count\n";
    for (const auto& r : s.trace) {
        out += std::to_string(r.slot);
        out += ',';
        out += format_double(r.total_queue_bits);
        out += ',';
        out += format_double(r.served_bits);
        out += ',';
        out += std::to_string(r.served_count);
        out += '\n';
    }
    return out;
}

inline std::string stationary_csv(const StationaryDistribution* dist)
{
    std::string out = "packets,probability,chi\n";
    if (!dist)
        return out;
    const auto chi = dist->chi_sequence();
    for (std::size_t i = 0; i < dist->pi.size(); ++i)
        out += std::to_string(i) + ',' + format_double(dist->pi[i]) + ',' + format_double(chi[i]) +
               '\n';
    return out;
}

} // namespace gcfs::cli
