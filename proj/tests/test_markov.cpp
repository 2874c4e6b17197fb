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
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "gcfs/markov.hpp"

using namespace gcfs;

namespace {

std::vector<double> random_theta(RandomStream& s, std::size_t a)
{
    std::vector<double> theta(a + 1);
    double sum = 0.0;
    for (auto& t : theta) {
        t = 0.05 + s.uniform();
        sum += t;
    }
    for (auto& t : theta)
        t /= sum;
    return theta;
}

double max_abs_diff(const StationaryDistribution& x, const StationaryDistribution& y)
{
    const std::size_t n = std::max(x.pi.size(), y.pi.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        worst = std::max(worst, std::abs(x.probability(i) - y.probability(i)));
    return worst;
}

// Numerator with z^(A-k) on the inner sum, dropping the boundary index shift.
std::vector<double> unshifted_numerator(const ChainParams& params, const std::vector<double>& chi)
{
    const std::size_t a = params.max_arrivals();
    const auto c = params.coefficients();
    std::vector<double> num(2 * a, 0.0);
    for (std::size_t j = 0; j < a; ++j) {
        for (std::size_t k = j + 1; k < a; ++k)
            num[a - k] += chi[j] * c[k];
        num[j] -= chi[j] * c[a];
    }
    return num;
}

} // namespace

TEST(Transition, Examples)
{
    const ChainParams p({0.4, 0.6}, 0.5);
    EXPECT_DOUBLE_EQ(transition_prob(0, 0, p), 0.7);
    EXPECT_DOUBLE_EQ(transition_prob(3, 0, p), 0.5);
    EXPECT_DOUBLE_EQ(transition_prob(2, 3, p), 0.3);
    EXPECT_DOUBLE_EQ(transition_prob(2, 2, p), 0.2);
    EXPECT_EQ(transition_prob(3, 2, p), 0.0);
    EXPECT_EQ(transition_prob(2, 4, p), 0.0);
}

TEST(Transition, RowsSumToOne)
{
    RandomStream s(3);
    for (int n = 0; n < 200; ++n) {
        const std::size_t a = 1 + n % 4;
        const ChainParams params(random_theta(s, a), 0.05 + 0.95 * s.uniform());
        for (std::size_t i = 0; i < 12; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j <= i + a + 2; ++j)
                sum += transition_prob(i, j, params);
            EXPECT_NEAR(sum, 1.0, 4e-16);
        }
    }
}

TEST(Transition, MatchesSimulatedSlot)
{
    // One slot from 2 packets: served with prob p (buffer cleared), else
    // the slot's arrivals join the queue.
    const ChainParams params({0.4, 0.6}, 0.5);
    RandomStream s(99);
    const int n = 1000000;
    int to3 = 0;
    for (int k = 0; k < n; ++k) {
        const bool served = s.uniform() < 0.5;
        const int arrivals = s.uniform() < 0.6 ? 1 : 0;
        if ((served ? 0 : 2 + arrivals) == 3)
            ++to3;
    }
    EXPECT_NEAR(static_cast<double>(to3) / n, transition_prob(2, 3, params), 0.002);
}

TEST(ChainParams, CoefficientIdentity)
{
    RandomStream s(4);
    for (int n = 0; n < 50; ++n) {
        const std::size_t a = 1 + n % 4;
        const ChainParams params(random_theta(s, a), 0.05 + 0.95 * s.uniform());
        const auto c = params.coefficients();
        double lower = 0.0;
        for (std::size_t j = 0; j < a; ++j)
            lower += c[j];
        EXPECT_NEAR(lower, params.theta0_bar() * params.p_bar(), 1e-15);
        EXPECT_NEAR(c[a] - lower, params.service_probability(), 1e-15);
    }
    EXPECT_THROW(ChainParams({0.5, 0.5}, 0.0), DomainError);
    EXPECT_THROW(ChainParams({0.5, 0.5}, 1.5), DomainError);
    EXPECT_THROW(ChainParams({0.5, 0.6}, 0.5), DomainError);
}

TEST(BoundaryChi, Examples)
{
    EXPECT_EQ(boundary_chi(ChainParams({0.4, 0.6}, 0.3)), std::vector<double>{1.0});
    const auto half = boundary_chi(ChainParams({0.25, 0.5, 0.25}, 0.5));
    EXPECT_NEAR(half[1], 0.375 / 0.875, 1e-15);
    const ChainParams full({0.25, 0.5, 0.25}, 1.0);
    // p = 1 clears the buffer every slot, so nothing sits above state 0.
    const auto one = boundary_chi(full);
    EXPECT_EQ(one[1], 0.0);
    const auto oracle = steady_state_truncated(full);
    EXPECT_NEAR(one[1], oracle.chi(1), 1e-10);
}

TEST(ClosedForm, Examples)
{
    const auto d = steady_state_closed_form_a1(0.5, 0.5);
    EXPECT_NEAR(d.pi[0], 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(d.pi[1], 2.0 / 9.0, 1e-15);
    EXPECT_LT(max_abs_diff(d, steady_state_truncated(ChainParams({0.5, 0.5}, 0.5), 200)), 1e-10);

    const auto served = steady_state_closed_form_a1(0.7, 1.0);
    EXPECT_EQ(served.pi[0], 1.0);
    EXPECT_EQ(served.pi[1], 0.0);

    const auto m = steady_state_closed_form_a1(0.6, 0.3);
    EXPECT_NEAR(m.mean(), 1.4, 1e-12);
    EXPECT_NEAR(m.mass() + m.tail_bound, 1.0, 1e-12);

    EXPECT_THROW(steady_state_closed_form_a1(0.5, 0.0), UnstableChainError);
    EXPECT_THROW(steady_state_closed_form_a1(0.0, 0.5), DomainError);
}

TEST(Roots, SingleArrivalRoot)
{
    const ChainParams params({0.5, 0.5}, 0.5);
    const auto roots = characteristic_roots(params);
    ASSERT_EQ(roots.size(), 1u);
    EXPECT_NEAR(roots[0].real(), 1.0 / 3.0, 1e-15);
    EXPECT_LT(max_abs_diff(steady_state_roots(params), steady_state_closed_form_a1(0.5, 0.5)), 1e-12);
}

TEST(Roots, AllRootsInsideUnitCircle)
{
    RandomStream s(8);
    for (int n = 0; n < 100; ++n) {
        const std::size_t a = 1 + n % 4;
        const ChainParams params(random_theta(s, a), 0.05 + 0.95 * s.uniform());
        const auto roots = characteristic_roots(params);
        EXPECT_EQ(roots.size(), a);
        for (const auto& r : roots)
            EXPECT_LT(std::abs(r), 1.0);
    }
}

TEST(Roots, AgreeWithTruncated)
{
    const ChainParams two({0.25, 0.5, 0.25}, 0.5);
    EXPECT_LT(max_abs_diff(steady_state_roots(two), steady_state_truncated(two)), 1e-8);
    RandomStream s(11);
    for (int n = 0; n < 20; ++n) {
        const ChainParams three(random_theta(s, 3), 0.7);
        EXPECT_LT(max_abs_diff(steady_state_roots(three), steady_state_truncated(three)), 1e-8);
    }
}

TEST(Roots, ZeroRootFromMissingTopArrival)
{
    // theta_A = 0 gives c_0 = 0 and a root at the origin.
    const ChainParams params({0.5, 0.5, 0.0}, 0.4);
    EXPECT_LT(max_abs_diff(steady_state_roots(params), steady_state_truncated(params)), 1e-8);
}

TEST(Truncated, TrivialChains)
{
    const auto served = steady_state_truncated(ChainParams({0.3, 0.3, 0.4}, 1.0));
    EXPECT_NEAR(served.pi[0], 1.0, 1e-15);
    EXPECT_NEAR(served.mass() - served.pi[0], 0.0, 1e-15);
    const auto empty = steady_state_truncated(ChainParams({1.0, 0.0}, 0.3));
    EXPECT_NEAR(empty.pi[0], 1.0, 1e-15);
    EXPECT_EQ(empty.tail_bound, 0.0);
    EXPECT_THROW(steady_state_truncated(ChainParams({0.5, 0.0, 0.0, 0.5}, 0.5), 20), DomainError);
}

TEST(Truncated, GrowsUntilTailSmall)
{
    const ChainParams params({0.1, 0.2, 0.7}, 0.05);
    const auto d = steady_state_truncated(params, 20);
    EXPECT_LT(d.tail_bound, 1e-10);
    EXPECT_NEAR(d.mass() + d.tail_bound, 1.0, 1e-8);
}

TEST(Roots, NearSaturatedChainHitsTruncationCap)
{
    const ChainParams params({0.3, 0.4, 0.3}, 1e-9);
    EXPECT_EQ(default_truncation(params), max_truncation);
    const auto d = steady_state_roots(params);
    EXPECT_EQ(d.pi.size(), max_truncation + 1);
    EXPECT_GT(d.tail_bound, 0.5);
    EXPECT_NEAR(d.mass() + d.tail_bound, 1.0, 1e-6);
}

TEST(ChainDelay, Examples)
{
    const TrafficModel bern({0.5, 0.5}, 1.0);
    EXPECT_EQ(chain_mean_delay(steady_state_closed_form_a1(0.5, 1.0), bern), 0.0);
    EXPECT_NEAR(chain_mean_delay(steady_state_closed_form_a1(0.5, 0.5), bern), 1.0, 1e-12);
    const ChainParams two({0.25, 0.5, 0.25}, 0.4);
    EXPECT_NEAR(chain_mean_delay(steady_state_roots(two), TrafficModel({0.25, 0.5, 0.25}, 1.0)), 1.5,
                1e-6);
}

TEST(ChainDelay, IdentityOverRandomCases)
{
    RandomStream s(21);
    for (int n = 0; n < 60; ++n) {
        const std::size_t a = 1 + n % 4;
        const auto theta = random_theta(s, a);
        const double p = 0.05 + 0.95 * s.uniform();
        const auto d = steady_state_roots(ChainParams(theta, p));
        EXPECT_NEAR(chain_mean_delay(d, TrafficModel(theta, 1.0)), (1.0 - p) / p, 1e-6);
    }
}

TEST(ChainDelay, RejectsHeavyTail)
{
    StationaryDistribution d{{0.5, 0.4}, 0.1};
    EXPECT_THROW(chain_mean_delay(d, TrafficModel({0.5, 0.5}, 1.0)), DomainError);
}

TEST(Residuals, BalanceAndDifferenceEquation)
{
    RandomStream s(31);
    for (int n = 0; n < 60; ++n) {
        const std::size_t a = 1 + n % 4;
        const ChainParams params(random_theta(s, a), 0.05 + 0.95 * s.uniform());
        for (const auto& d : {steady_state_roots(params), steady_state_truncated(params)}) {
            EXPECT_LT(balance_residual(d, params), 1e-8);
            EXPECT_LT(difference_residual(d.chi_sequence(), params), 1e-8);
            EXPECT_NEAR(d.chi(0), 1.0, 1e-8);
            for (double x : d.pi)
                EXPECT_GE(x, 0.0);
        }
    }
}

TEST(ZTransform, ztransform_series_check)
{
    RandomStream s(41);
    for (int n = 0; n < 50; ++n) {
        const std::size_t a = 1 + n % 3;
        const ChainParams params(random_theta(s, a), 0.05 + 0.95 * s.uniform());
        const auto d = steady_state_roots(params, 150);
        const auto chi = d.chi_sequence();
        const auto f = chi_transform(params, boundary_chi(params));
        const auto series = series_coefficients(f, 101);
        for (std::size_t i = 0; i <= 100; ++i)
            ASSERT_NEAR(series[i], chi[i], 1e-8) << "A " << a << " i " << i;
        const auto pis = series_coefficients(pi_transform(f), 101);
        for (std::size_t i = 0; i <= 100; ++i)
            ASSERT_NEAR(pis[i], d.pi[i], 1e-8) << "A " << a << " i " << i;
    }
}

TEST(ZTransform, UnshiftedNumeratorAgreesUpToTwoArrivals)
{
    RandomStream s(51);
    for (std::size_t a : {1, 2}) {
        const ChainParams params(random_theta(s, a), 0.4);
        const auto chi = boundary_chi(params);
        EXPECT_EQ(unshifted_numerator(params, chi), chi_transform(params, chi).numerator);
    }
    // With three arrivals the unshifted z^(A-k) term no longer reproduces the
    // chain; the z^(A-k+j) form does.
    const ChainParams params({0.1, 0.3, 0.3, 0.3}, 0.4);
    const auto chi = boundary_chi(params);
    auto unshifted = chi_transform(params, chi);
    unshifted.numerator = unshifted_numerator(params, chi);
    const auto solved = steady_state_roots(params).chi_sequence();
    const auto wrong = series_coefficients(unshifted, 20);
    double worst = 0.0;
    for (std::size_t i = 0; i < 20; ++i)
        worst = std::max(worst, std::abs(wrong[i] - solved[i]));
    EXPECT_GT(worst, 1e-3);
}
