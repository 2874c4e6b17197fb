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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "gcfs/cli/config.hpp"
#include "gcfs/cli/output.hpp"
#include "gcfs/markov.hpp"
#include "gcfs/meanfield.hpp"
#include "gcfs/metrics.hpp"
#include "gcfs/sim.hpp"

namespace gcfs::cli {

struct RunOptions {
    std::filesystem::path out_dir = "gcfs_out";
    unsigned workers = 1;
    std::optional<std::uint64_t> seed; ///< replaces the configured seed list
};

/// Runs task(i) for i in [0, n) on up to `workers` threads. Results must be
/// written to per-index slots; the first exception by index is rethrown.
template <class F>
void parallel_for(std::size_t n, unsigned workers, F&& task)
{
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
    std::vector<std::exception_ptr> errors(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                task(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i; (i = next++) < n;) {
                    try {
                        task(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        for (auto& t : pool)
            t.join();
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

struct Analysis {
    MeanFieldSolution solution;
    std::optional<StationaryDistribution> stationary;
    std::string solver; ///< empty, closed_form, roots or truncated
};

/// Mean-field threshold plus the per-user packet chain at p = G(h_th).
inline Analysis analyze(const Channel& channel, const TrafficModel& traffic,
                        const SystemParams& system, std::optional<double> tolerance)
{
    Analysis out;
    out.solution = solve_threshold(channel, traffic, system, tolerance);
    // p can underflow to 0 when h_th sits far in the tail; no chain then.
    if (out.solution.status == SolutionStatus::unstable || !(out.solution.service_probability > 0.0))
        return out;
    const double p = out.solution.service_probability;
    if (traffic.mean_packets() == 0.0) {
        out.stationary = StationaryDistribution{{1.0}, 0.0};
        out.solver = "empty";
        return out;
    }
    if (traffic.max_arrivals() == 1) {
        out.stationary = steady_state_closed_form_a1(traffic.theta()[1], p);
        out.solver = "closed_form";
        return out;
    }
    const ChainParams params({traffic.theta().begin(), traffic.theta().end()}, p);
    // Near saturation the chain needs more states than the cap allows; the
    // mean-field answer stands on its own then.
    if (default_truncation(params) >= max_truncation)
        return out;
    try {
        out.stationary = steady_state_roots(params);
        out.solver = "roots";
    } catch (const NumericError&) {
        out.stationary = steady_state_truncated(params);
        out.solver = "truncated";
    }
    return out;
}

inline Policy resolve_policy(const PolicySpec& spec, const MeanFieldSolution& solution)
{
    if (spec.kind == Policy::Kind::gcfs)
        return Policy::gcfs();
    return Policy::threshold_at(spec.threshold.value_or(solution.threshold));
}

inline std::vector<std::uint64_t> seeds_for(const ExperimentConfig& cfg, const RunOptions& opt)
{
    return opt.seed ? std::vector<std::uint64_t>{*opt.seed} : cfg.seeds;
}

/// Pools replications: histograms and served counts add up, delays average.
struct PooledSummary {
    std::vector<std::uint64_t> seeds;
    double mean_queue_bits = 0.0;
    double mean_delay_slots = 0.0;
    double delay_std_error = 0.0; ///< across seeds; 0 for a single seed
    double packet_delay_slots = 0.0;
    double served_fraction = 0.0;
    std::uint64_t backlogged_user_slots = 0;
    std::uint64_t cleared_user_slots = 0;
    std::vector<std::uint64_t> packet_histogram;
    bool diverged = false;

    std::vector<double> packet_pmf() const { return histogram_pmf(packet_histogram); }
};

inline PooledSummary pool(const std::vector<SimSummary>& runs)
{
    PooledSummary p;
    const double k = static_cast<double>(runs.size());
    for (const auto& r : runs) {
        p.seeds.push_back(r.seed);
        p.mean_queue_bits += r.mean_queue_bits / k;
        p.mean_delay_slots += r.mean_delay_slots / k;
        p.packet_delay_slots += r.packet_delay_slots / k;
        p.backlogged_user_slots += r.backlogged_user_slots;
        p.cleared_user_slots += r.cleared_user_slots;
        p.diverged = p.diverged || r.diverged;
        if (r.packet_histogram.size() > p.packet_histogram.size())
            p.packet_histogram.resize(r.packet_histogram.size(), 0);
        for (std::size_t i = 0; i < r.packet_histogram.size(); ++i)
            p.packet_histogram[i] += r.packet_histogram[i];
    }
    if (runs.size() > 1) {
        double ss = 0.0;
        for (const auto& r : runs)
            ss += (r.mean_delay_slots - p.mean_delay_slots) * (r.mean_delay_slots - p.mean_delay_slots);
        p.delay_std_error = std::sqrt(ss / (k - 1.0) / k);
    }
    p.served_fraction = p.backlogged_user_slots == 0
                            ? 1.0
                            : static_cast<double>(p.cleared_user_slots) /
                                  static_cast<double>(p.backlogged_user_slots);
    return p;
}

inline json to_json(const PooledSummary& p)
{
    return {
        {"seeds", p.seeds},
        {"mean_queue_bits", p.mean_queue_bits},
        {"mean_delay_slots", p.mean_delay_slots},
        {"delay_std_error", p.delay_std_error},
        {"packet_delay_slots", p.packet_delay_slots},
        {"served_fraction", p.served_fraction},
        {"backlogged_user_slots", p.backlogged_user_slots},
        {"cleared_user_slots", p.cleared_user_slots},
        {"diverged", p.diverged},
        {"packet_histogram", p.packet_histogram},
    };
}

inline json inputs_json(const ExperimentConfig& cfg, const SystemParams& system,
                        const TrafficModel& traffic, const Policy& policy)
{
    json channel = {{"model", cfg.channel_kind}};
    if (cfg.channel_kind == "uniform")
        channel["h_max"] = cfg.channel_h_max;
    if (cfg.channel_kind == "table")
        channel["path"] = cfg.channel_table.filename().string();
    return {
        {"users", system.users()},
        {"bandwidth", system.bandwidth()},
        {"slot_duration", system.slot_duration()},
        {"power", system.power()},
        {"noise", system.noise()},
        {"budget_symbols", system.budget()},
        {"snr", system.snr()},
        {"channel", channel},
        {"theta", std::vector<double>(traffic.theta().begin(), traffic.theta().end())},
        {"packet_bits", traffic.packet_bits()},
        {"arrival_bits", mean_arrival_bits(traffic)},
        {"policy", policy.kind == Policy::Kind::gcfs ? "gcfs" : "threshold"},
        {"policy_threshold", policy.kind == Policy::Kind::gcfs ? json(nullptr) : json(policy.threshold)},
        {"horizon", cfg.horizon},
        {"warmup", cfg.warmup},
    };
}

inline json stationary_json(const Analysis& a, const TrafficModel& traffic)
{
    if (!a.stationary)
        return nullptr;
    const auto& d = *a.stationary;
    return {
        {"solver", a.solver},
        {"states", d.pi.size()},
        {"tail_bound", d.tail_bound},
        {"mean_packets", d.mean()},
        {"chain_delay_slots", number_or_null(d.tail_bound < 1e-6 ? chain_mean_delay(d, traffic) : NAN)},
    };
}

inline std::vector<SimSummary> run_seeds(const ExperimentConfig& cfg, const Scenario<Channel>& sc,
                                         const Policy& policy, const std::vector<std::uint64_t>& seeds,
                                         unsigned workers, bool trace)
{
    std::vector<SimSummary> runs(seeds.size());
    parallel_for(seeds.size(), workers, [&](std::size_t i) {
        runs[i] = simulate(sc, policy, SimOptions{cfg.horizon, cfg.warmup, seeds[i], trace});
    });
    return runs;
}

// ---------------------------------------------------------------------------

inline void cmd_analyze(const ExperimentConfig& cfg, const RunOptions& opt)
{
    const auto system = cfg.system();
    const auto traffic = cfg.traffic();
    const auto a = analyze(cfg.channel(), traffic, system, cfg.solver_tolerance);
    json doc = {
        {"command", "analyze"},
        {"inputs", inputs_json(cfg, system, traffic, resolve_policy(cfg.policy, a.solution))},
        {"solution", to_json(a.solution)},
        {"stationary", stationary_json(a, traffic)},
    };
    write_json(opt.out_dir / "analysis.json", doc);
    write_atomic(opt.out_dir / "stationary.csv", stationary_csv(a.stationary ? &*a.stationary : nullptr));
}

inline void cmd_simulate(const ExperimentConfig& cfg, const RunOptions& opt)
{
    const auto system = cfg.system();
    const auto traffic = cfg.traffic();
    const Scenario<Channel> sc{cfg.channel(), traffic, system};
    MeanFieldSolution solution;
    if (cfg.policy.kind == Policy::Kind::threshold && !cfg.policy.threshold)
        solution = solve_threshold(sc.channel, traffic, system, cfg.solver_tolerance);
    const Policy policy = resolve_policy(cfg.policy, solution);
    const auto seeds = seeds_for(cfg, opt);
    const auto runs = run_seeds(cfg, sc, policy, seeds, opt.workers, cfg.trace);

    for (const auto& r : runs) {
        const std::string tag = "seed" + std::to_string(r.seed);
        json doc = to_json(r);
        doc["policy"] = policy.kind == Policy::Kind::gcfs ? "gcfs" : "threshold";
        write_json(opt.out_dir / ("summary_" + tag + ".json"), doc);
        if (cfg.trace)
            write_atomic(opt.out_dir / ("trace_" + tag + ".csv"), trace_csv(r));
    }
    json pooled = {
        {"command", "simulate"},
        {"inputs", inputs_json(cfg, system, traffic, policy)},
        {"pooled", to_json(pool(runs))},
    };
    write_json(opt.out_dir / "summary_pooled.json", pooled);
}

/// One theory-versus-simulation point, shared by compare and sweep.
struct ComparePoint {
    Analysis analysis;
    Policy policy;
    std::optional<PooledSummary> sim;
    std::optional<DistributionComparison> distribution;

    double d_theory() const { return analysis.solution.mean_delay_slots; }
    double d_sim() const { return sim ? sim->mean_delay_slots : NAN; }
    double relative_error() const
    {
        const double t = d_theory();
        if (!sim || !std::isfinite(t))
            return NAN;
        return t == 0.0 ? (d_sim() == 0.0 ? 0.0 : INFINITY) : (d_sim() - t) / t;
    }
};

inline void finish_point(ComparePoint& pt)
{
    if (pt.sim && pt.analysis.stationary)
        pt.distribution = compare_distributions(pt.sim->packet_pmf(), *pt.analysis.stationary);
}

inline void cmd_compare(const ExperimentConfig& cfg, const RunOptions& opt)
{
    const auto system = cfg.system();
    const auto traffic = cfg.traffic();
    const Scenario<Channel> sc{cfg.channel(), traffic, system};
    ComparePoint pt;
    pt.analysis = analyze(sc.channel, traffic, system, cfg.solver_tolerance);
    pt.policy = resolve_policy(cfg.policy, pt.analysis.solution);
    const auto runs = run_seeds(cfg, sc, pt.policy, seeds_for(cfg, opt), opt.workers, false);
    pt.sim = pool(runs);
    finish_point(pt);

    std::vector<double> per_seed;
    for (const auto& r : runs)
        per_seed.push_back(r.mean_delay_slots);
    json doc = {
        {"command", "compare"},
        {"inputs", inputs_json(cfg, system, traffic, pt.policy)},
        {"solution", to_json(pt.analysis.solution)},
        {"stationary", stationary_json(pt.analysis, traffic)},
        {"D_theory", number_or_null(pt.d_theory())},
        {"D_sim", pt.d_sim()},
        {"D_sim_per_seed", per_seed},
        {"D_sim_std_error", pt.sim->delay_std_error},
        {"D_sim_packets", pt.sim->packet_delay_slots},
        {"relative_error", number_or_null(pt.relative_error())},
        {"p", pt.analysis.solution.service_probability},
        {"p_hat", pt.sim->served_fraction},
        {"h_th", pt.analysis.solution.threshold},
        {"status", std::string(to_string(pt.analysis.solution.status))},
        {"diverged", pt.sim->diverged},
        {"tv_distance", pt.distribution ? json(pt.distribution->tv_distance) : json(nullptr)},
        {"ks_like_sup", pt.distribution ? json(pt.distribution->ks_like_sup) : json(nullptr)},
        {"folded_tail", pt.distribution ? json(pt.distribution->folded_tail) : json(nullptr)},
        {"seeds", to_json(*pt.sim)["seeds"]},
    };
    write_json(opt.out_dir / "compare.json", doc);

    std::string csv = "packets,theory,empirical\n";
    const auto emp = pt.sim->packet_pmf();
    const std::size_t n =
        std::max(emp.size(), pt.analysis.stationary ? pt.analysis.stationary->pi.size() : 0);
    for (std::size_t i = 0; i < n; ++i) {
        csv += std::to_string(i) + ',';
        if (pt.analysis.stationary)
            csv += format_double(pt.analysis.stationary->probability(i));
        csv += ',' + format_double(i < emp.size() ? emp[i] : 0.0) + '\n';
    }
    write_atomic(opt.out_dir / "distribution.csv", csv);
}

inline void cmd_sweep(const ExperimentConfig& cfg, const RunOptions& opt)
{
    if (!cfg.sweep)
        throw ConfigError("sweep", "the sweep command needs a sweep section");
    const auto& sw = *cfg.sweep;
    const auto base_system = cfg.system();
    const Channel channel = cfg.channel();

    struct Point {
        double axis_value;
        SystemParams system;
        TrafficModel traffic;
    };
    std::vector<Point> points;
    const auto theta_of = [&](double t1) { return TrafficModel::bernoulli(t1, cfg.packet_bits); };
    if (sw.axis == SweepAxis::power) {
        std::vector<std::optional<double>> thetas;
        for (double t : sw.theta1)
            thetas.emplace_back(t);
        if (thetas.empty())
            thetas.emplace_back(std::nullopt);
        for (const auto& t : thetas)
            for (double v : sw.values)
                points.push_back({v, base_system.with_power(v), t ? theta_of(*t) : cfg.traffic()});
    } else {
        for (double v : sw.values)
            points.push_back({v, base_system, theta_of(v)});
    }

    std::vector<ComparePoint> results(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        results[i].analysis = analyze(channel, points[i].traffic, points[i].system, cfg.solver_tolerance);
        results[i].policy = resolve_policy(cfg.policy, results[i].analysis.solution);
    }
    if (sw.simulate) {
        const auto seeds = seeds_for(cfg, opt);
        std::vector<SimSummary> runs(points.size() * seeds.size());
        parallel_for(runs.size(), opt.workers, [&](std::size_t k) {
            const std::size_t i = k / seeds.size();
            const Scenario<Channel> sc{channel, points[i].traffic, points[i].system};
            runs[k] = simulate(sc, results[i].policy,
                               SimOptions{cfg.horizon, cfg.warmup, seeds[k % seeds.size()], false});
        });
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto first = runs.begin() + static_cast<std::ptrdiff_t>(i * seeds.size());
            results[i].sim = pool(std::vector<SimSummary>(
                first, first + static_cast<std::ptrdiff_t>(seeds.size())));
            finish_point(results[i]);
        }
    }

    std::string csv = "axis_value,theta1,D_theory,D_sim,p,h_th,tv_distance,status,deficit\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& r = results[i];
        const auto& s = r.analysis.solution;
        const double t1 = points[i].traffic.max_arrivals() == 1 ? points[i].traffic.theta()[1] : NAN;
        csv += format_double(points[i].axis_value) + ',' + format_double(t1) + ',' +
               format_double(r.d_theory()) + ',' + format_double(r.d_sim()) + ',' +
               format_double(s.service_probability) + ',' + format_double(s.threshold) + ',' +
               (r.distribution ? format_double(r.distribution->tv_distance) : std::string()) + ',' +
               std::string(to_string(s.status)) + ',' + format_double(s.deficit) + '\n';
    }
    write_atomic(opt.out_dir / "sweep.csv", csv);
}

} // namespace gcfs::cli
