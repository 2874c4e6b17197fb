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
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "gcfs/error.hpp"
#include "gcfs/models.hpp"

namespace gcfs {

/**
 * Single-user queue chain in packets: each slot the user is cleared with
 * probability p, otherwise the slot's arrivals are added.
 *
 * Difference-equation coefficients: c_A = p + (1 - theta_0)(1 - p) and
 * c_j = theta_{A-j} (1 - p) for j < A, so c_A - sum_{j<A} c_j = p.
 */
class ChainParams {
public:
    ChainParams(std::vector<double> theta, double p) : theta_(std::move(theta)), p_(p)
    {
        if (theta_.size() < 2)
            throw DomainError("chain: theta needs entries for 0..A with A >= 1");
        double sum = 0.0;
        for (double t : theta_) {
            if (!(t >= 0.0) || !std::isfinite(t))
                throw DomainError("chain: theta entries must be finite and nonnegative");
            sum += t;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw DomainError("chain: theta must sum to 1");
        if (!(p_ > 0.0) || p_ > 1.0)
            throw DomainError("chain: service probability must be in (0, 1]");
        const std::size_t a = max_arrivals();
        coefficients_.resize(a + 1);
        for (std::size_t j = 0; j < a; ++j)
            coefficients_[j] = theta_[a - j] * p_bar();
        coefficients_[a] = p_ + theta0_bar() * p_bar();
    }

    static ChainParams from_traffic(const TrafficModel& traffic, double p)
    {
        return ChainParams({traffic.theta().begin(), traffic.theta().end()}, p);
    }

    std::span<const double> theta() const noexcept { return theta_; }
    double theta(std::size_t a) const noexcept { return a < theta_.size() ? theta_[a] : 0.0; }
    double service_probability() const noexcept { return p_; }
    double p_bar() const noexcept { return 1.0 - p_; }
    double theta0_bar() const noexcept { return 1.0 - theta_[0]; }
    std::size_t max_arrivals() const noexcept { return theta_.size() - 1; }
    double mean_arrivals() const noexcept
    {
        double m = 0.0;
        for (std::size_t a = 1; a < theta_.size(); ++a)
            m += static_cast<double>(a) * theta_[a];
        return m;
    }
    /// c_0..c_A.
    std::span<const double> coefficients() const noexcept { return coefficients_; }

private:
    std::vector<double> theta_;
    double p_;
    std::vector<double> coefficients_;
};

/// One-step transition probability P(i -> j) of the packet-count chain.
inline double transition_prob(std::size_t i, std::size_t j, const ChainParams& params) noexcept
{
    const double p = params.service_probability();
    const double p_bar = params.p_bar();
    if (i == 0 && j == 0)
        return params.theta(0) + params.theta0_bar() * p;
    if (j == 0)
        return p;
    if (j == i)
        return params.theta(0) * p_bar;
    if (j > i && j - i <= params.max_arrivals())
        return params.theta(j - i) * p_bar;
    return 0.0;
}

/**
 * Stationary pmf over packet counts 0..pi.size()-1. `tail_bound` bounds the
 * mass of all larger states, so sum(pi) + tail_bound is 1.
 */
struct StationaryDistribution {
    std::vector<double> pi;
    double tail_bound = 0.0;

    std::size_t truncation() const noexcept { return pi.empty() ? 0 : pi.size() - 1; }

    double probability(std::size_t i) const noexcept { return i < pi.size() ? pi[i] : 0.0; }

    double mass() const noexcept
    {
        double m = 0.0;
        for (double x : pi)
            m += x;
        return m;
    }

    /// chi_i = sum_{j >= i} pi_j for i = 0..pi.size(); the last entry is the tail.
    std::vector<double> chi_sequence() const
    {
        std::vector<double> chi(pi.size() + 1);
        chi[pi.size()] = tail_bound;
        for (std::size_t i = pi.size(); i-- > 0;)
            chi[i] = chi[i + 1] + pi[i];
        return chi;
    }

    double chi(std::size_t i) const
    {
        double c = tail_bound;
        for (std::size_t j = pi.size(); j-- > i;)
            c += pi[j];
        return c;
    }

    /// Mean packet count over the represented states.
    double mean() const noexcept
    {
        double m = 0.0;
        for (std::size_t i = 1; i < pi.size(); ++i)
            m += static_cast<double>(i) * pi[i];
        return m;
    }
};

inline constexpr std::size_t max_truncation = 1'000'000;

/// ceil(50 A / p) clamped to [200, max_truncation]. Near-saturated chains hit
/// the cap and report the remaining mass in tail_bound.
inline std::size_t default_truncation(const ChainParams& params) noexcept
{
    const double k = std::ceil(50.0 * static_cast<double>(params.max_arrivals()) /
                               params.service_probability());
    if (!(k < static_cast<double>(max_truncation)))
        return max_truncation;
    return std::max<std::size_t>(200, static_cast<std::size_t>(k));
}

/// Boundary values chi_0..chi_{A-1} of the difference equation.
inline std::vector<double> boundary_chi(const ChainParams& params)
{
    const std::size_t a = params.max_arrivals();
    const double p_bar = params.p_bar();
    const double denom = params.service_probability() + params.theta0_bar() * p_bar;
    std::vector<double> chi(a, 0.0);
    chi[0] = 1.0;
    for (std::size_t i = 1; i < a; ++i) {
        double upper = 0.0;
        for (std::size_t k = i; k <= a; ++k)
            upper += params.theta(k);
        double acc = chi[0] * upper * p_bar;
        for (std::size_t j = 1; j < i; ++j)
            acc += chi[j] * params.theta(i - j) * p_bar;
        chi[i] = acc / denom;
    }
    return chi;
}

/// Single-arrival (A = 1) closed form: pi_0 = p / (p theta_0 + theta_1),
/// pi_i = pi_0 (1 - pi_0)^i.
inline StationaryDistribution steady_state_closed_form_a1(double theta1, double p,
                                                          std::optional<std::size_t> truncation = {})
{
    if (p == 0.0)
        throw UnstableChainError("closed form: p = 0 never clears the queue");
    if (!(p > 0.0) || p > 1.0)
        throw DomainError("closed form: service probability must be in (0, 1]");
    if (!(theta1 > 0.0) || theta1 > 1.0)
        throw DomainError("closed form: theta_1 must be in (0, 1]");

    const double theta0 = 1.0 - theta1;
    const double pi0 = p / (p * theta0 + theta1);
    const double ratio = std::max(0.0, 1.0 - pi0);

    std::size_t k = 200;
    if (truncation) {
        k = *truncation;
    } else if (ratio > 0.0) {
        const double needed = std::ceil(std::log(1e-17) / std::log(ratio));
        k = std::clamp<std::size_t>(static_cast<std::size_t>(needed), 200, max_truncation);
    }

    StationaryDistribution d;
    d.pi.resize(k + 1);
    double term = pi0;
    for (std::size_t i = 0; i <= k; ++i) {
        d.pi[i] = term;
        term *= ratio;
    }
    d.tail_bound = std::pow(ratio, static_cast<double>(k + 1));
    return d;
}

namespace detail {

struct RootGroup {
    std::complex<double> root;
    std::size_t multiplicity = 1;
};

inline std::vector<RootGroup> group_roots(const std::vector<std::complex<double>>& roots)
{
    std::vector<RootGroup> groups;
    std::vector<std::size_t> counts;
    for (const auto& r : roots) {
        bool merged = false;
        for (auto& g : groups) {
            const double scale = std::max(1.0, std::abs(g.root));
            const bool both_zero = std::abs(g.root) <= 1e-12 && std::abs(r) <= 1e-12;
            if (both_zero || std::abs(g.root - r) <= 1e-6 * scale) {
                g.root = (g.root * static_cast<double>(g.multiplicity) + r) /
                         static_cast<double>(g.multiplicity + 1);
                ++g.multiplicity;
                merged = true;
                break;
            }
        }
        if (!merged)
            groups.push_back({r, 1});
    }
    return groups;
}

} // namespace detail

/// Roots of c_A r^A = sum_{j<A} c_j r^j, via companion-matrix eigenvalues.
inline std::vector<std::complex<double>> characteristic_roots(const ChainParams& params)
{
    const auto c = params.coefficients();
    const auto a = static_cast<Eigen::Index>(params.max_arrivals());
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(a, a);
    for (Eigen::Index i = 1; i < a; ++i)
        companion(i, i - 1) = 1.0;
    for (Eigen::Index j = 0; j < a; ++j)
        companion(j, a - 1) = c[static_cast<std::size_t>(j)] / c[static_cast<std::size_t>(a)];
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    if (solver.info() != Eigen::Success)
        throw NumericError("characteristic roots: eigenvalue iteration failed");
    std::vector<std::complex<double>> roots;
    for (Eigen::Index i = 0; i < a; ++i)
        roots.push_back(solver.eigenvalues()(i));
    return roots;
}

/**
 * Stationary distribution from the characteristic roots of the difference
 * equation for chi. chi_i is a combination of r_k^i (times i^s for repeated
 * roots) over the roots inside the unit circle, fitted to the boundary
 * values; then pi_i = chi_i - chi_{i+1}.
 */
inline StationaryDistribution steady_state_roots(const ChainParams& params,
                                                 std::optional<std::size_t> truncation = {})
{
    using cplx = std::complex<double>;
    const std::size_t a = params.max_arrivals();
    const std::size_t k_max = truncation.value_or(default_truncation(params));

    std::vector<cplx> inside;
    for (const auto& r : characteristic_roots(params))
        if (std::abs(r) < 1.0 - 1e-12)
            inside.push_back(r);
    if (inside.size() != a)
        throw NumericError("steady_state_roots: found " + std::to_string(inside.size()) +
                           " roots inside the unit circle, need " + std::to_string(a));

    const auto groups = detail::group_roots(inside);

    // Basis function k evaluated at index i.
    struct Basis {
        cplx root;
        std::size_t power;
        bool zero;
    };
    std::vector<Basis> basis;
    for (const auto& g : groups) {
        const bool zero = std::abs(g.root) <= 1e-12;
        for (std::size_t s = 0; s < g.multiplicity; ++s)
            basis.push_back({zero ? cplx{} : g.root, s, zero});
    }
    auto eval = [](const Basis& b, std::size_t i, const cplx& root_pow) -> cplx {
        if (b.zero)
            return i == b.power ? cplx{1.0} : cplx{};
        return std::pow(static_cast<double>(i), static_cast<double>(b.power)) * root_pow;
    };

    const auto n = static_cast<Eigen::Index>(a);
    Eigen::MatrixXcd vander(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& b = basis[static_cast<std::size_t>(k)];
        cplx rp{1.0};
        for (Eigen::Index i = 0; i < n; ++i) {
            vander(i, k) = eval(b, static_cast<std::size_t>(i), rp);
            rp *= b.root;
        }
    }
    const auto boundary = boundary_chi(params);
    Eigen::VectorXcd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i)
        rhs(i) = boundary[static_cast<std::size_t>(i)];
    const Eigen::VectorXcd alpha = vander.fullPivLu().solve(rhs);

    std::vector<double> chi(k_max + 2);
    std::vector<cplx> powers(basis.size(), cplx{1.0});
    double tail = 0.0;
    for (std::size_t i = 0; i < chi.size(); ++i) {
        cplx value{};
        double magnitude = 0.0;
        for (std::size_t k = 0; k < basis.size(); ++k) {
            const cplx term = alpha(static_cast<Eigen::Index>(k)) * eval(basis[k], i, powers[k]);
            value += term;
            magnitude += std::abs(term);
            powers[k] *= basis[k].root;
        }
        chi[i] = value.real();
        if (i == k_max + 1)
            tail = magnitude;
    }

    StationaryDistribution d;
    d.pi.resize(k_max + 1);
    for (std::size_t i = 0; i <= k_max; ++i) {
        double v = chi[i] - chi[i + 1];
        if (v < 0.0) {
            if (v < -1e-10)
                throw NumericError("steady_state_roots: negative probability at state " +
                                   std::to_string(i));
            v = 0.0;
        }
        d.pi[i] = v;
    }
    d.tail_bound = std::max(tail, std::abs(chi[k_max + 1]));
    return d;
}

/**
 * Direct linear solve of pi P = pi, sum pi = 1 on states 0..K, where every
 * transition past K lands in K. Doubles K until the mass in K is below `tol`.
 *
 * All states >= K leave the set only by being cleared, so the folded state
 * carries exactly the infinite chain's tail mass: the result holds states
 * 0..K-1 and tail_bound is the folded mass.
 */
inline StationaryDistribution steady_state_truncated(const ChainParams& params,
                                                     std::optional<std::size_t> truncation = {},
                                                     double tol = 1e-10)
{
    const std::size_t a = params.max_arrivals();
    std::size_t k_max = truncation.value_or(default_truncation(params));
    if (k_max < 10 * a)
        throw DomainError("steady_state_truncated: truncation must be at least 10 A");

    while (true) {
        const auto n = static_cast<Eigen::Index>(k_max + 1);
        std::vector<Eigen::Triplet<double>> entries;
        entries.reserve(static_cast<std::size_t>(n) * (a + 3));
        for (std::size_t i = 0; i <= k_max; ++i) {
            const auto col = static_cast<Eigen::Index>(i);
            // Row 0 of (P^T - I) is replaced by the normalization.
            entries.emplace_back(0, col, 1.0);
            if (i != 0)
                entries.emplace_back(col, col, -1.0);
            for (std::size_t j = i; j <= i + a; ++j) {
                const double prob = transition_prob(i, j, params);
                const auto row = static_cast<Eigen::Index>(std::min(j, k_max));
                if (prob != 0.0 && row != 0)
                    entries.emplace_back(row, col, prob);
            }
        }
        Eigen::SparseMatrix<double> system(n, n);
        system.setFromTriplets(entries.begin(), entries.end());
        system.makeCompressed();

        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(system);
        if (lu.info() != Eigen::Success)
            throw NumericError("steady_state_truncated: factorization failed");
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
        rhs(0) = 1.0;
        const Eigen::VectorXd solution = lu.solve(rhs);
        if (lu.info() != Eigen::Success)
            throw NumericError("steady_state_truncated: solve failed");

        const double folded = solution(n - 1);
        if (folded < tol) {
            StationaryDistribution d;
            d.pi.resize(k_max);
            for (std::size_t i = 0; i < k_max; ++i)
                d.pi[i] = std::max(0.0, solution(static_cast<Eigen::Index>(i)));
            d.tail_bound = std::max(0.0, folded);
            return d;
        }
        if (k_max >= max_truncation)
            throw UnstableChainError("steady_state_truncated: tail mass stays above tolerance at K cap",
                                     0.0, static_cast<double>(k_max));
        k_max = std::min(2 * k_max, max_truncation);
    }
}

/// Little's-law delay of the chain, mean packets / mean arrivals per slot.
/// No traffic means no delay.
inline double chain_mean_delay(const StationaryDistribution& dist, const TrafficModel& traffic)
{
    if (!(dist.tail_bound < 1e-6))
        throw DomainError("chain_mean_delay: tail mass too large for a reliable mean");
    if (traffic.mean_packets() == 0.0)
        return 0.0;
    return dist.mean() / traffic.mean_packets();
}

/// Largest violation of the cut balance
/// p sum_{j >= i+A} pi_j = sum_{j<A} sum_{k=A-j}^{A} pi_{i+j} theta_k (1-p), 0 <= i <= K-A.
inline double balance_residual(const StationaryDistribution& dist, const ChainParams& params)
{
    const std::size_t a = params.max_arrivals();
    const auto chi = dist.chi_sequence();
    const std::size_t k_max = dist.truncation();
    double worst = 0.0;
    for (std::size_t i = 0; i + a <= k_max; ++i) {
        const double down = params.service_probability() * chi[i + a];
        double up = 0.0;
        for (std::size_t j = 0; j < a; ++j) {
            double mass = 0.0;
            for (std::size_t k = a - j; k <= a; ++k)
                mass += params.theta(k);
            up += dist.pi[i + j] * mass * params.p_bar();
        }
        worst = std::max(worst, std::abs(down - up));
    }
    return worst;
}

/// Largest |chi_{i+A} c_A - sum_{j<A} chi_{i+j} c_j| over the given sequence.
inline double difference_residual(std::span<const double> chi, const ChainParams& params)
{
    const std::size_t a = params.max_arrivals();
    const auto c = params.coefficients();
    double worst = 0.0;
    for (std::size_t i = 0; i + a < chi.size(); ++i) {
        double r = chi[i + a] * c[a];
        for (std::size_t j = 0; j < a; ++j)
            r -= chi[i + j] * c[j];
        worst = std::max(worst, std::abs(r));
    }
    return worst;
}

/// Ratio of polynomials in the series variable z, coefficients in ascending powers.
struct RationalSeries {
    std::vector<double> numerator;
    std::vector<double> denominator;
};

/**
 * Generating function sum_i chi_i z^i of the difference-equation solution:
 *
 *   sum_{j<A} chi_j (sum_{k=j+1}^{A-1} c_k z^{A-k+j} - c_A z^j)
 *   -----------------------------------------------------------
 *               sum_{j<A} c_j z^{A-j} - c_A
 */
inline RationalSeries chi_transform(const ChainParams& params, std::span<const double> boundary)
{
    const std::size_t a = params.max_arrivals();
    if (boundary.size() != a)
        throw DomainError("chi_transform: need A boundary values");
    const auto c = params.coefficients();
    RationalSeries r;
    r.numerator.assign(2 * a, 0.0);
    r.denominator.assign(a + 1, 0.0);
    for (std::size_t j = 0; j < a; ++j) {
        for (std::size_t k = j + 1; k < a; ++k)
            r.numerator[a - k + j] += boundary[j] * c[k];
        r.numerator[j] -= boundary[j] * c[a];
        r.denominator[a - j] += c[j];
    }
    r.denominator[0] -= c[a];
    return r;
}

/// pi(z) = ((z - 1) chi(z) + chi_0) / z, for a chi transform with chi_0 = 1.
inline RationalSeries pi_transform(const RationalSeries& chi)
{
    const auto& num = chi.numerator;
    const auto& den = chi.denominator;
    std::vector<double> shifted(std::max(num.size() + 1, den.size()), 0.0);
    for (std::size_t i = 0; i < num.size(); ++i) {
        shifted[i + 1] += num[i];
        shifted[i] -= num[i];
    }
    for (std::size_t i = 0; i < den.size(); ++i)
        shifted[i] += den[i];
    // The constant term cancels when chi_0 = 1; divide by z.
    RationalSeries r;
    r.numerator.assign(shifted.begin() + 1, shifted.end());
    r.denominator = den;
    return r;
}

/// First `count` power-series coefficients of num/den by long division.
inline std::vector<double> series_coefficients(const RationalSeries& f, std::size_t count)
{
    if (f.denominator.empty() || f.denominator[0] == 0.0)
        throw DomainError("series_coefficients: denominator constant term must be nonzero");
    std::vector<double> out(count, 0.0);
    const double d0 = f.denominator[0];
    for (std::size_t n = 0; n < count; ++n) {
        double v = n < f.numerator.size() ? f.numerator[n] : 0.0;
        for (std::size_t k = 1; k < f.denominator.size() && k <= n; ++k)
            v -= f.denominator[k] * out[n - k];
        out[n] = v / d0;
    }
    return out;
}

} // namespace gcfs
