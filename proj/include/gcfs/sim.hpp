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
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "gcfs/error.hpp"
#include "gcfs/models.hpp"

namespace gcfs {

struct PartialService {
    std::size_t user = 0;
    double bits = 0.0;
    double symbols = 0.0;
};

/**
 * Outcome of one slot's channel allocation.
 *
 * `ordering` lists the candidate users (backlogged, positive rate, above the
 * threshold if any) in serving order. The first `fully_served` of them are
 * cleared, at most one more is partially served, the rest get nothing.
 */
struct SlotPlan {
    std::vector<std::size_t> ordering;
    std::size_t fully_served = 0;
    std::optional<PartialService> partial;
    double budget = 0.0;
    double full_symbols = 0.0; ///< symbols spent clearing the fully served users
    double idle_symbols = 0.0;
    std::vector<double> served_bits; ///< s_n for every user
    double total_bits = 0.0;         ///< S[t]

    std::span<const std::size_t> cleared() const noexcept
    {
        return {ordering.data(), fully_served};
    }
    std::size_t served_count() const noexcept { return fully_served + (partial ? 1 : 0); }
};

namespace detail {

// Greedy loop shared by the fixed-order and gain-ranked planners. user_at(rank)
// yields the user served at that rank, rate_of(n) its bits per symbol.
template <class UserAt, class RateOf>
void serve_greedy(std::span<const double> demand, std::size_t candidates, UserAt&& user_at,
                  RateOf&& rate_of, double budget, SlotPlan& plan)
{
    plan.served_bits.assign(demand.size(), 0.0);
    plan.fully_served = 0;
    plan.partial.reset();
    plan.budget = budget;
    plan.total_bits = 0.0;

    double used = 0.0;
    for (std::size_t rank = 0; rank < candidates; ++rank) {
        const std::size_t n = user_at(rank);
        const double rate = rate_of(n);
        const double need = demand[n] / rate;
        if (used + need <= budget) {
            used += need;
            plan.served_bits[n] = demand[n];
            plan.total_bits += demand[n];
            ++plan.fully_served;
            continue;
        }
        const double left = budget - used;
        if (left > 0.0) {
            const double bits = std::min(demand[n], left * rate);
            plan.partial = PartialService{n, bits, left};
            plan.served_bits[n] = bits;
            plan.total_bits += bits;
        }
        break;
    }
    plan.full_symbols = used;
    plan.idle_symbols = plan.partial || plan.fully_served < candidates ? 0.0 : budget - used;
}

} // namespace detail

/**
 * Greedy service in a fixed order: clear each user while its symbol need
 * demand/rate fits the remaining budget; the first user that does not fit
 * receives the leftover symbols, everyone after it receives nothing.
 *
 * `rates` is bits per symbol for every user; users in `order` must have a
 * positive rate.
 */
inline void serve_in_order(std::span<const double> demand, std::span<const double> rates,
                           std::span<const std::size_t> order, double budget, SlotPlan& plan)
{
    plan.ordering.assign(order.begin(), order.end());
    detail::serve_greedy(
        demand, order.size(), [&](std::size_t rank) { return order[rank]; },
        [&](std::size_t n) { return rates[n]; }, budget, plan);
}

/// Reusable buffers for planning a slot without reallocating.
///
/// With `full_order` false only the served prefix of SlotPlan::ordering is
/// guaranteed sorted; the simulator uses this to skip ranking users that
/// cannot be reached within the budget.
struct PlanWorkspace {
    std::vector<std::pair<double, std::size_t>> ranked;
    bool full_order = true;
    std::size_t prefix_hint = 0;
};

namespace detail {

// Candidates are users with demand > 0 and gain > min_gain (min_gain < 0 admits
// every positive gain). Zero-gain users have rate 0 and are never candidates.
inline void plan_by_gain(std::span<const double> demand, std::span<const double> gains, double snr,
                         double budget, double min_gain, PlanWorkspace& ws, SlotPlan& plan)
{
    const std::size_t n_users = demand.size();
    auto& ranked = ws.ranked;
    ranked.clear();
    for (std::size_t n = 0; n < n_users; ++n) {
        const double h = gains[n];
        if (demand[n] > 0.0 && h > 0.0 && h > min_gain && h * h * snr > 0.0)
            ranked.emplace_back(h, n);
    }
    const auto before = [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second < b.second);
    };

    // Sort a prefix large enough for last slot's service count; extend to a
    // full sort only if the budget outlasts it.
    std::size_t sorted = ranked.size();
    if (!ws.full_order && ws.prefix_hint < ranked.size()) {
        sorted = ws.prefix_hint;
        std::nth_element(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(sorted),
                         ranked.end(), before);
        std::sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(sorted), before);
    } else {
        std::sort(ranked.begin(), ranked.end(), before);
    }
    auto user_at = [&](std::size_t rank) {
        if (rank == sorted) {
            std::sort(ranked.begin() + static_cast<std::ptrdiff_t>(rank), ranked.end(), before);
            sorted = ranked.size();
        }
        return ranked[rank].second;
    };
    auto rate_of = [&](std::size_t n) { return rate_unchecked(gains[n], snr); };
    serve_greedy(demand, ranked.size(), user_at, rate_of, budget, plan);

    plan.ordering.resize(ranked.size());
    for (std::size_t k = 0; k < ranked.size(); ++k)
        plan.ordering[k] = ranked[k].second;
    ws.prefix_hint = plan.served_count() + plan.served_count() / 4 + 32;
}

inline void check_plan_inputs(std::span<const double> queues, std::span<const int> arrivals,
                              std::span<const double> gains, double budget, double packet_bits)
{
    if (queues.size() != arrivals.size() || queues.size() != gains.size())
        throw DomainError("plan: queues, arrivals and gains must have equal length");
    if (!(budget > 0.0) || !(packet_bits > 0.0))
        throw DomainError("plan: budget and packet size must be positive");
}

inline std::vector<double> slot_demand(std::span<const double> queues,
                                       std::span<const int> arrivals, double packet_bits)
{
    std::vector<double> d(queues.size());
    for (std::size_t n = 0; n < d.size(); ++n)
        d[n] = queues[n] + arrivals[n] * packet_bits;
    return d;
}

} // namespace detail

/// Good-channel-first-serve: backlogged users in descending gain order
/// (ties by user index), greedy full service, one partial user.
inline SlotPlan gcfs_plan(std::span<const double> queues, std::span<const int> arrivals,
                          std::span<const double> gains, double snr, double budget,
                          double packet_bits = 1.0)
{
    detail::check_plan_inputs(queues, arrivals, gains, budget, packet_bits);
    const auto demand = detail::slot_demand(queues, arrivals, packet_bits);
    PlanWorkspace ws;
    SlotPlan plan;
    detail::plan_by_gain(demand, gains, snr, budget, -1.0, ws, plan);
    return plan;
}

/// As gcfs_plan, restricted to users whose gain exceeds `threshold`.
inline SlotPlan threshold_plan(std::span<const double> queues, std::span<const int> arrivals,
                               std::span<const double> gains, double snr, double budget,
                               double threshold, double packet_bits = 1.0)
{
    detail::check_plan_inputs(queues, arrivals, gains, budget, packet_bits);
    if (!(threshold >= 0.0))
        throw DomainError("threshold_plan: threshold must be nonnegative");
    const auto demand = detail::slot_demand(queues, arrivals, packet_bits);
    PlanWorkspace ws;
    SlotPlan plan;
    detail::plan_by_gain(demand, gains, snr, budget, threshold, ws, plan);
    return plan;
}

struct Policy {
    enum class Kind { gcfs, threshold };

    Kind kind = Kind::gcfs;
    double threshold = 0.0;

    static Policy gcfs() noexcept { return {}; }
    static Policy threshold_at(double h) noexcept { return {Kind::threshold, h}; }
};

template <ChannelDistribution C>
struct Scenario {
    C channel;
    TrafficModel traffic;
    SystemParams system;
};

template <ChannelDistribution C>
Scenario(C, TrafficModel, SystemParams) -> Scenario<C>;

/// Queue lengths in bits at the end of slot `slot - 1`.
struct SimState {
    std::vector<double> queues;
    std::uint64_t slot = 0;
    std::uint64_t seed = 0;

    static SimState cold_start(std::size_t users, std::uint64_t seed)
    {
        return {std::vector<double>(users, 0.0), 0, seed};
    }
};

/// Per-slot draws and the plan they produced.
struct SlotRecord {
    std::vector<int> arrivals;
    std::vector<double> gains;
    std::vector<double> demand; ///< q[t-1] + a[t] L
    SlotPlan plan;
};

/**
 * Advances one slot: draws arrivals, then gains, from the (seed, user, slot)
 * substreams, plans service under `policy`, and applies
 * q[t] = q[t-1] + a[t] L - s[t].
 */
template <ChannelDistribution C>
void step(SimState& state, const Policy& policy, const Scenario<C>& scenario, SlotRecord& record,
          PlanWorkspace& ws)
{
    const std::size_t n_users = state.queues.size();
    const double bits = scenario.traffic.packet_bits();
    record.arrivals.resize(n_users);
    record.gains.resize(n_users);
    record.demand.resize(n_users);
    for (std::size_t n = 0; n < n_users; ++n) {
        RandomStream arrivals(state.seed, n, StreamPurpose::arrivals, state.slot);
        record.arrivals[n] = sample_arrivals(scenario.traffic, arrivals);
    }
    for (std::size_t n = 0; n < n_users; ++n) {
        RandomStream gains(state.seed, n, StreamPurpose::gains, state.slot);
        record.gains[n] = scenario.channel.sample(gains);
    }
    for (std::size_t n = 0; n < n_users; ++n)
        record.demand[n] = state.queues[n] + record.arrivals[n] * bits;

    const double min_gain = policy.kind == Policy::Kind::gcfs ? -1.0 : policy.threshold;
    detail::plan_by_gain(record.demand, record.gains, scenario.system.snr(),
                         scenario.system.budget(), min_gain, ws, record.plan);

    for (std::size_t n = 0; n < n_users; ++n)
        state.queues[n] = record.demand[n] - record.plan.served_bits[n];
    ++state.slot;
}

template <ChannelDistribution C>
SlotPlan step(SimState& state, const Policy& policy, const Scenario<C>& scenario)
{
    SlotRecord record;
    PlanWorkspace ws;
    step(state, policy, scenario, record, ws);
    return std::move(record.plan);
}

struct TraceRow {
    std::uint64_t slot = 0;
    double total_queue_bits = 0.0;
    double served_bits = 0.0;
    std::size_t served_count = 0;
};

struct SimOptions {
    std::uint64_t horizon = 20000;
    std::uint64_t warmup = 2000;
    std::uint64_t seed = 1;
    bool record_trace = false;
};

/// 10% of the horizon, at least 1000 slots, always below the horizon.
inline std::uint64_t default_warmup(std::uint64_t horizon) noexcept
{
    const std::uint64_t w = std::max<std::uint64_t>(horizon / 10, 1000);
    return w < horizon ? w : horizon / 10;
}

/**
 * Post-warmup statistics of one replication. Queue statistics are end-of-slot
 * values pooled over users; the packet histogram bins ceil(q / L).
 */
struct SimSummary {
    std::uint64_t seed = 0;
    std::uint64_t horizon = 0;
    std::uint64_t warmup = 0;
    std::size_t users = 0;
    double arrival_bits = 0.0; ///< lambda
    double mean_queue_bits = 0.0;
    double mean_delay_slots = 0.0; ///< mean_queue_bits / lambda
    double mean_packets = 0.0;
    double packet_delay_slots = 0.0; ///< mean_packets / mean packet arrivals
    double served_fraction = 0.0;    ///< cleared / backlogged user-slots
    double mean_served_bits = 0.0;   ///< mean S[t]
    std::uint64_t backlogged_user_slots = 0;
    std::uint64_t cleared_user_slots = 0;
    std::vector<std::uint64_t> packet_histogram;
    bool diverged = false;
    std::vector<TraceRow> trace;

    std::vector<double> packet_pmf() const
    {
        double total = 0.0;
        for (auto c : packet_histogram)
            total += static_cast<double>(c);
        std::vector<double> pmf(packet_histogram.size(), 0.0);
        if (total > 0.0)
            for (std::size_t i = 0; i < pmf.size(); ++i)
                pmf[i] = static_cast<double>(packet_histogram[i]) / total;
        return pmf;
    }
};

/// Last-quarter mean of the total queue above twice the second-quarter mean.
inline bool divergence_flag(std::span<const double> total_queue) noexcept
{
    const std::size_t h = total_queue.size();
    if (h < 4)
        return false;
    auto mean = [&](std::size_t from, std::size_t to) {
        double s = 0.0;
        for (std::size_t t = from; t < to; ++t)
            s += total_queue[t];
        return s / static_cast<double>(to - from);
    };
    const double mid = mean(h / 4, h / 2);
    const double last = mean(3 * h / 4, h);
    return last > 2.0 * mid;
}

template <ChannelDistribution C>
SimSummary simulate(const Scenario<C>& scenario, const Policy& policy, const SimOptions& options)
{
    if (!(options.horizon > options.warmup))
        throw DomainError("simulate: horizon must exceed warmup");

    const std::size_t n_users = scenario.system.users();
    const double bits = scenario.traffic.packet_bits();
    SimState state = SimState::cold_start(n_users, options.seed);
    SlotRecord record;
    PlanWorkspace ws;
    ws.full_order = false;

    SimSummary out;
    out.seed = options.seed;
    out.horizon = options.horizon;
    out.warmup = options.warmup;
    out.users = n_users;
    out.arrival_bits = mean_arrival_bits(scenario.traffic);

    std::vector<double> total_queue(options.horizon);
    double queue_sum = 0.0;
    double packet_sum = 0.0;
    double served_sum = 0.0;
    std::vector<std::uint64_t>& hist = out.packet_histogram;

    for (std::uint64_t t = 0; t < options.horizon; ++t) {
        step(state, policy, scenario, record, ws);
        double slot_queue = 0.0;
        for (double q : state.queues)
            slot_queue += q;
        total_queue[t] = slot_queue;
        if (options.record_trace)
            out.trace.push_back({t, slot_queue, record.plan.total_bits, record.plan.served_count()});
        if (t < options.warmup)
            continue;

        queue_sum += slot_queue;
        served_sum += record.plan.total_bits;
        for (std::size_t n = 0; n < n_users; ++n) {
            if (record.demand[n] > 0.0)
                ++out.backlogged_user_slots;
            const double q = state.queues[n];
            const auto packets =
                q > 0.0 ? static_cast<std::size_t>(std::ceil(q / bits - 1e-9)) : std::size_t{0};
            if (packets >= hist.size())
                hist.resize(packets + 1, 0);
            ++hist[packets];
            packet_sum += static_cast<double>(packets);
        }
        out.cleared_user_slots += record.plan.fully_served;
    }

    const double slots = static_cast<double>(options.horizon - options.warmup);
    const double user_slots = slots * static_cast<double>(n_users);
    out.mean_queue_bits = queue_sum / user_slots;
    out.mean_delay_slots = out.mean_queue_bits / out.arrival_bits;
    out.mean_packets = packet_sum / user_slots;
    out.packet_delay_slots = out.mean_packets / scenario.traffic.mean_packets();
    out.mean_served_bits = served_sum / slots;
    out.served_fraction = out.backlogged_user_slots == 0
                              ? 1.0
                              : static_cast<double>(out.cleared_user_slots) /
                                    static_cast<double>(out.backlogged_user_slots);
    out.diverged = divergence_flag(total_queue);
    return out;
}

} // namespace gcfs
