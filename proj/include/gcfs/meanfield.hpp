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

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "gcfs/error.hpp"
#include "gcfs/models.hpp"

namespace gcfs {

enum class SolutionStatus {
    over_provisioned, ///< Phi(0) >= N lambda: every backlogged user is served.
    balanced,         ///< Phi(h_th) = N lambda solved by bisection.
    unstable,         ///< Phi_sup <= N lambda: no threshold keeps queues bounded.
};

inline std::string_view to_string(SolutionStatus s) noexcept
{
    switch (s) {
    case SolutionStatus::over_provisioned:
        return "OverProvisioned";
    case SolutionStatus::balanced:
        return "Balanced";
    case SolutionStatus::unstable:
        return "Unstable";
    }
    return "Unknown";
}

/**
 * Mean-field operating point of the threshold policy.
 *
 * For unstable systems service_probability is 0 and the delay and queue are
 * +inf; phi_sup and deficit report how far the system is from stability.
 */
struct MeanFieldSolution {
    double threshold = 0.0;
    double service_probability = 1.0;
    double mean_queue_bits = 0.0;
    double mean_delay_slots = 0.0;
    SolutionStatus status = SolutionStatus::over_provisioned;
    double residual = 0.0;  ///< |Phi(h_th) - N lambda|
    double tolerance = 0.0; ///< bisection stopping tolerance
    double target = 0.0;    ///< N lambda, bits per slot
    double phi_at_zero = 0.0;
    double phi_sup = 0.0;
    double deficit = 0.0; ///< N lambda - Phi_sup when unstable, else 0
    int iterations = 0;
};

namespace detail {

// Conditional tail mass below which the integrand is cut off and replaced by
// a one-term tail estimate.
inline constexpr double phi_tail_cutoff = 1e-13;
inline constexpr double phi_quadrature_tolerance = 1e-12;

template <ChannelDistribution C>
double integration_limit(const C& channel, double lower)
{
    const double log_base = channel.log_tail(lower);
    const double log_cut = std::log(phi_tail_cutoff);
    double step = 1.0;
    double upper = lower + step;
    while (channel.log_tail(upper) - log_base > log_cut) {
        step *= 2.0;
        upper = lower + step;
        if (!std::isfinite(upper))
            throw NumericError("phi: could not bound the integration range", lower, upper);
    }
    return upper;
}

} // namespace detail

/**
 * Deliverable bits per slot when the whole slot goes to a user whose gain
 * exceeds h_th: B * E[log2(1 + h^2 rho) | h > h_th].
 *
 * Adaptive Gauss-Kronrod on [h_th, H*] (H* = support end, or where the
 * conditional tail drops below 1e-13) plus a one-term estimate of the rest.
 */
template <ChannelDistribution C>
double phi(const C& channel, double snr, double budget, double threshold)
{
    if (!(threshold >= 0.0))
        throw DomainError("phi: threshold must be nonnegative");
    if (!(snr > 0.0) || !(budget > 0.0))
        throw DomainError("phi: snr and budget must be positive");
    const double h_u = channel.support_max();
    if (!(threshold < h_u))
        throw DomainError("phi: threshold must lie below the support supremum");
    const double log_g = channel.log_tail(threshold);
    if (!std::isfinite(log_g))
        throw DomainError("phi: tail probability at threshold is zero");

    const bool bounded = std::isfinite(h_u);
    const double upper = bounded ? h_u : detail::integration_limit(channel, threshold);

    auto integrand = [&](double h) {
        const double lp = channel.log_pdf(h);
        if (!std::isfinite(lp))
            return 0.0;
        return std::exp(lp - log_g) * detail::rate_unchecked(h, snr);
    };

    std::vector<double> cuts{threshold};
    for (double k : channel.knots())
        if (k > threshold && k < upper)
            cuts.push_back(k);
    cuts.push_back(upper);

    using Quadrature = boost::math::quadrature::gauss_kronrod<double, 61>;
    double mean_rate = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        mean_rate += Quadrature::integrate(integrand, cuts[i], cuts[i + 1], 20,
                                           detail::phi_quadrature_tolerance);
    if (!bounded)
        mean_rate += std::exp(channel.log_tail(upper) - log_g) * detail::rate_unchecked(upper, snr);
    return budget * mean_rate;
}

/// Limit of phi as the threshold approaches the top of the support.
template <ChannelDistribution C>
double phi_sup(const C& channel, double snr, double budget)
{
    const double h_u = channel.support_max();
    if (!std::isfinite(h_u))
        return infinity;
    return budget * detail::rate_unchecked(h_u, snr);
}

/// D = 1/p - 1 slots.
inline double predicted_delay(double p)
{
    if (!(p > 0.0) || p > 1.0)
        throw DomainError("predicted_delay: service probability must be in (0, 1]");
    return 1.0 / p - 1.0;
}

inline double default_solve_tolerance(double target) noexcept { return 1e-6 * target; }

inline constexpr int max_bisection_iterations = 10000;

/**
 * Solves Phi(h_th) = N lambda for the gain threshold.
 *
 * Bounded supports bisect on [0, h_u). For unbounded supports the right end
 * starts where G = 1e-6 and doubles until Phi exceeds N lambda.
 */
template <ChannelDistribution C>
MeanFieldSolution solve_threshold(const C& channel, const TrafficModel& traffic,
                                  const SystemParams& system,
                                  std::optional<double> tolerance = std::nullopt)
{
    const double lambda = mean_arrival_bits(traffic);
    const double rho = system.snr();
    const double budget = system.budget();

    MeanFieldSolution s;
    s.target = static_cast<double>(system.users()) * lambda;
    s.tolerance = tolerance.value_or(default_solve_tolerance(s.target));
    if (tolerance && !(*tolerance > 0.0))
        throw DomainError("solve_threshold: tolerance must be positive");

    auto fill_delay = [&] {
        s.mean_delay_slots = 1.0 / s.service_probability - 1.0;
        s.mean_queue_bits = lambda * s.mean_delay_slots;
    };

    s.phi_at_zero = phi(channel, rho, budget, 0.0);
    s.phi_sup = phi_sup(channel, rho, budget);

    if (s.phi_at_zero >= s.target) {
        s.status = SolutionStatus::over_provisioned;
        s.threshold = 0.0;
        s.service_probability = 1.0;
        s.residual = s.phi_at_zero - s.target;
        fill_delay();
        return s;
    }
    if (s.phi_sup <= s.target) {
        s.status = SolutionStatus::unstable;
        s.threshold = channel.support_max();
        s.service_probability = 0.0;
        s.mean_delay_slots = infinity;
        s.mean_queue_bits = infinity;
        s.residual = s.target - s.phi_sup;
        s.deficit = s.target - s.phi_sup;
        return s;
    }

    double lo = 0.0;
    double hi = channel.support_max();
    if (!std::isfinite(hi)) {
        hi = channel.inverse_tail(1e-6);
        while (phi(channel, rho, budget, hi) <= s.target) {
            lo = hi;
            hi *= 2.0;
            if (!std::isfinite(channel.log_tail(hi)))
                throw NumericError("solve_threshold: upper bracket ran past representable tail",
                                   lo, hi);
        }
    }

    double h = 0.5 * (lo + hi);
    double value = phi(channel, rho, budget, h);
    while (std::abs(value - s.target) > s.tolerance) {
        if (++s.iterations > max_bisection_iterations)
            throw NumericError("solve_threshold: bisection did not converge", lo, hi);
        if (value > s.target)
            hi = h;
        else
            lo = h;
        const double next = 0.5 * (lo + hi);
        if (next == h)
            throw NumericError("solve_threshold: bracket collapsed before reaching tolerance",
                               lo, hi);
        h = next;
        value = phi(channel, rho, budget, h);
    }

    s.status = SolutionStatus::balanced;
    s.threshold = h;
    s.service_probability = channel.tail(h);
    s.residual = std::abs(value - s.target);
    fill_delay();
    return s;
}

} // namespace gcfs
