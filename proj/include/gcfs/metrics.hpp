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
#include <span>
#include <string>
#include <vector>

#include "gcfs/error.hpp"
#include "gcfs/markov.hpp"

namespace gcfs {

/// Little's law: mean delay in slots = mean queue / arrival rate.
inline double little_delay(double mean_queue_bits, double lambda)
{
    if (!(lambda > 0.0))
        throw DomainError("little_delay: arrival rate must be positive");
    return mean_queue_bits / lambda;
}

struct DistributionComparison {
    double tv_distance = 0.0;
    double ks_like_sup = 0.0;
    std::size_t support = 0;     ///< bins compared, union of both supports
    double folded_tail = 0.0;    ///< theoretical mass folded into the last bin
};

namespace detail {

inline void require_normalized(std::span<const double> pmf, double extra, const char* what)
{
    double total = extra;
    for (double x : pmf) {
        if (!(x >= 0.0))
            throw DomainError(std::string(what) + ": probabilities must be nonnegative");
        total += x;
    }
    if (std::abs(total - 1.0) > 1e-6)
        throw DomainError(std::string(what) + ": distribution is not normalized");
}

} // namespace detail

/// Compares two pmfs on {0, 1, ...}, zero-padding the shorter one.
inline DistributionComparison compare_distributions(std::span<const double> a,
                                                    std::span<const double> b)
{
    detail::require_normalized(a, 0.0, "compare_distributions");
    detail::require_normalized(b, 0.0, "compare_distributions");
    DistributionComparison out;
    out.support = std::max(a.size(), b.size());
    double l1 = 0.0;
    double cdf_a = 0.0;
    double cdf_b = 0.0;
    for (std::size_t i = 0; i < out.support; ++i) {
        const double x = i < a.size() ? a[i] : 0.0;
        const double y = i < b.size() ? b[i] : 0.0;
        l1 += std::abs(x - y);
        cdf_a += x;
        cdf_b += y;
        out.ks_like_sup = std::max(out.ks_like_sup, std::abs(cdf_a - cdf_b));
    }
    out.tv_distance = std::min(1.0, 0.5 * l1);
    return out;
}

/// Empirical pmf against a stationary distribution whose tail mass is folded
/// into the last bin of the union support.
inline DistributionComparison compare_distributions(std::span<const double> empirical,
                                                    const StationaryDistribution& theory)
{
    detail::require_normalized(empirical, 0.0, "compare_distributions");
    detail::require_normalized(theory.pi, theory.tail_bound, "compare_distributions");
    const std::size_t support = std::max(empirical.size(), theory.pi.size());
    std::vector<double> folded(support, 0.0);
    std::copy(theory.pi.begin(), theory.pi.end(), folded.begin());
    folded[support - 1] += theory.tail_bound;
    auto out = compare_distributions(empirical, std::span<const double>(folded));
    out.folded_tail = theory.tail_bound;
    return out;
}

inline double tv_distance(std::span<const double> a, std::span<const double> b)
{
    return compare_distributions(a, b).tv_distance;
}

inline double tv_distance(std::span<const double> empirical, const StationaryDistribution& theory)
{
    return compare_distributions(empirical, theory).tv_distance;
}

/// Normalizes counts to a pmf.
inline std::vector<double> histogram_pmf(std::span<const std::uint64_t> counts)
{
    double total = 0.0;
    for (auto c : counts)
        total += static_cast<double>(c);
    if (!(total > 0.0))
        throw DomainError("histogram_pmf: empty histogram");
    std::vector<double> pmf(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
        pmf[i] = static_cast<double>(counts[i]) / total;
    return pmf;
}

} // namespace gcfs
