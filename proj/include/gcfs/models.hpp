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
#include <concepts>
#include <cstddef>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gcfs/error.hpp"
#include "gcfs/random.hpp"

namespace gcfs {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

/// Channel gain magnitude distribution over h >= 0.
///
/// log_pdf/log_tail exist so conditional densities f(h)/G(t) stay finite far
/// into the tail. inverse_tail(g) returns h with G(h) = g.
template <class C>
concept ChannelDistribution = requires(const C& c, double h, RandomStream& s) {
    { c.pdf(h) } -> std::convertible_to<double>;
    { c.cdf(h) } -> std::convertible_to<double>;
    { c.tail(h) } -> std::convertible_to<double>;
    { c.log_pdf(h) } -> std::convertible_to<double>;
    { c.log_tail(h) } -> std::convertible_to<double>;
    { c.inverse_tail(h) } -> std::convertible_to<double>;
    { c.support_max() } -> std::convertible_to<double>;
    { c.knots() } -> std::convertible_to<std::span<const double>>;
    { c.sample(s) } -> std::convertible_to<double>;
};

/// Rayleigh fading with unit scale: f(h) = h exp(-h^2/2).
class RayleighChannel {
public:
    double pdf(double h) const noexcept { return h <= 0.0 ? 0.0 : h * std::exp(-0.5 * h * h); }
    double cdf(double h) const noexcept { return h <= 0.0 ? 0.0 : -std::expm1(-0.5 * h * h); }
    double tail(double h) const noexcept { return h <= 0.0 ? 1.0 : std::exp(-0.5 * h * h); }
    double log_pdf(double h) const noexcept
    {
        return h <= 0.0 ? -infinity : std::log(h) - 0.5 * h * h;
    }
    double log_tail(double h) const noexcept { return h <= 0.0 ? 0.0 : -0.5 * h * h; }
    double inverse_tail(double g) const noexcept
    {
        return g >= 1.0 ? 0.0 : (g <= 0.0 ? infinity : std::sqrt(-2.0 * std::log(g)));
    }
    double support_max() const noexcept { return infinity; }
    std::span<const double> knots() const noexcept { return {}; }
    double sample(RandomStream& s) const noexcept
    {
        return std::sqrt(-2.0 * std::log(s.uniform_positive()));
    }
};

/// Uniform gain on [0, h_max]; bounded support gives a finite capacity ceiling.
class UniformChannel {
public:
    explicit UniformChannel(double h_max) : h_max_(h_max)
    {
        if (!(h_max > 0.0) || !std::isfinite(h_max))
            throw DomainError("uniform channel: h_max must be positive and finite");
    }

    double pdf(double h) const noexcept { return (h < 0.0 || h > h_max_) ? 0.0 : 1.0 / h_max_; }
    double cdf(double h) const noexcept { return std::clamp(h / h_max_, 0.0, 1.0); }
    double tail(double h) const noexcept { return 1.0 - cdf(h); }
    double log_pdf(double h) const noexcept { return std::log(pdf(h)); }
    double log_tail(double h) const noexcept
    {
        return h <= 0.0 ? 0.0 : (h >= h_max_ ? -infinity : std::log1p(-h / h_max_));
    }
    double inverse_tail(double g) const noexcept { return h_max_ * (1.0 - std::clamp(g, 0.0, 1.0)); }
    double support_max() const noexcept { return h_max_; }
    std::span<const double> knots() const noexcept { return {}; }
    double sample(RandomStream& s) const noexcept { return h_max_ * s.uniform(); }

private:
    double h_max_;
};

/**
 * Density tabulated at knots (h_k, f_k), linearly interpolated between knots
 * and zero outside. Linear interpolation keeps the density nonnegative and
 * preserves monotone runs of the table; the cdf is then piecewise quadratic
 * and inverted in closed form. The table is renormalized to unit mass.
 */
class TabulatedChannel {
public:
    TabulatedChannel(std::vector<double> h, std::vector<double> density)
        : h_(std::move(h)), f_(std::move(density))
    {
        if (h_.size() < 2 || h_.size() != f_.size())
            throw DomainError("tabulated channel: need at least two (h, density) rows");
        for (std::size_t k = 0; k < h_.size(); ++k) {
            if (!std::isfinite(h_[k]) || !std::isfinite(f_[k]) || f_[k] < 0.0)
                throw DomainError("tabulated channel: values must be finite, density nonnegative");
            if (k == 0 ? h_[k] < 0.0 : h_[k] <= h_[k - 1])
                throw DomainError("tabulated channel: h must be nonnegative and strictly increasing");
        }
        // Drop trailing zero-density segments so support_max() is the true supremum.
        while (h_.size() > 2 && f_[f_.size() - 1] == 0.0 && f_[f_.size() - 2] == 0.0) {
            h_.pop_back();
            f_.pop_back();
        }
        cum_.assign(h_.size(), 0.0);
        for (std::size_t k = 1; k < h_.size(); ++k)
            cum_[k] = cum_[k - 1] + 0.5 * (f_[k - 1] + f_[k]) * (h_[k] - h_[k - 1]);
        const double mass = cum_.back();
        if (!(mass > 0.0))
            throw DomainError("tabulated channel: density integrates to zero");
        for (std::size_t k = 0; k < h_.size(); ++k) {
            f_[k] /= mass;
            cum_[k] /= mass;
        }
        cum_.back() = 1.0;
    }

    double pdf(double h) const noexcept
    {
        if (h < h_.front() || h > h_.back())
            return 0.0;
        const std::size_t k = segment(h);
        const double w = (h - h_[k]) / (h_[k + 1] - h_[k]);
        return f_[k] + w * (f_[k + 1] - f_[k]);
    }

    double cdf(double h) const noexcept
    {
        if (h <= h_.front())
            return 0.0;
        if (h >= h_.back())
            return 1.0;
        const std::size_t k = segment(h);
        const double d = h - h_[k];
        const double slope = (f_[k + 1] - f_[k]) / (h_[k + 1] - h_[k]);
        return std::min(1.0, cum_[k] + f_[k] * d + 0.5 * slope * d * d);
    }

    double tail(double h) const noexcept
    {
        if (h <= h_.front())
            return 1.0;
        if (h >= h_.back())
            return 0.0;
        // Integrate from the right to keep precision near the upper end.
        const std::size_t k = segment(h);
        const double d = h_[k + 1] - h;
        const double slope = (f_[k + 1] - f_[k]) / (h_[k + 1] - h_[k]);
        const double right = 1.0 - cum_[k + 1];
        return std::max(0.0, right + f_[k + 1] * d - 0.5 * slope * d * d);
    }

    double log_pdf(double h) const noexcept { return std::log(pdf(h)); }
    double log_tail(double h) const noexcept { return std::log(tail(h)); }

    double inverse_tail(double g) const noexcept
    {
        const double target = 1.0 - std::clamp(g, 0.0, 1.0);
        if (target <= 0.0)
            return h_.front();
        if (target >= 1.0)
            return h_.back();
        auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
        std::size_t k = static_cast<std::size_t>(std::distance(cum_.begin(), it));
        k = std::clamp<std::size_t>(k, 1, h_.size() - 1) - 1;
        const double need = target - cum_[k];
        const double slope = (f_[k + 1] - f_[k]) / (h_[k + 1] - h_[k]);
        const double disc = std::max(0.0, f_[k] * f_[k] + 2.0 * slope * need);
        const double denom = f_[k] + std::sqrt(disc);
        const double d = denom > 0.0 ? 2.0 * need / denom : 0.0;
        return std::clamp(h_[k] + d, h_[k], h_[k + 1]);
    }

    double support_max() const noexcept { return h_.back(); }
    std::span<const double> knots() const noexcept { return h_; }
    double sample(RandomStream& s) const noexcept { return inverse_tail(s.uniform_positive()); }

private:
    std::size_t segment(double h) const noexcept
    {
        auto it = std::upper_bound(h_.begin(), h_.end(), h);
        const auto k = static_cast<std::size_t>(std::distance(h_.begin(), it));
        return std::clamp<std::size_t>(k, 1, h_.size() - 1) - 1;
    }

    std::vector<double> h_;
    std::vector<double> f_;
    std::vector<double> cum_;
};

/// Loads a two-column CSV (h, density). A non-numeric first row is treated as
/// a header; blank lines and lines starting with '#' are skipped.
inline TabulatedChannel load_channel_table(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open channel table '" + path + "'");
    std::vector<double> h;
    std::vector<double> f;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        double x = 0.0;
        double y = 0.0;
        if (!(fields >> x >> y)) {
            if (h.empty() && line_no == 1)
                continue;
            throw DomainError("channel table '" + path + "' line " + std::to_string(line_no) +
                              ": expected two numbers");
        }
        h.push_back(x);
        f.push_back(y);
    }
    return TabulatedChannel(std::move(h), std::move(f));
}

/// Any of the built-in channel models, as a value type.
class Channel {
public:
    using Model = std::variant<RayleighChannel, UniformChannel, TabulatedChannel>;

    Channel(RayleighChannel c) : model_(c) {}
    Channel(UniformChannel c) : model_(c) {}
    Channel(TabulatedChannel c) : model_(std::move(c)) {}

    double pdf(double h) const { return visit([h](const auto& c) { return c.pdf(h); }); }
    double cdf(double h) const { return visit([h](const auto& c) { return c.cdf(h); }); }
    double tail(double h) const { return visit([h](const auto& c) { return c.tail(h); }); }
    double log_pdf(double h) const { return visit([h](const auto& c) { return c.log_pdf(h); }); }
    double log_tail(double h) const { return visit([h](const auto& c) { return c.log_tail(h); }); }
    double inverse_tail(double g) const
    {
        return visit([g](const auto& c) { return c.inverse_tail(g); });
    }
    double support_max() const { return visit([](const auto& c) { return c.support_max(); }); }
    std::span<const double> knots() const
    {
        return visit([](const auto& c) { return c.knots(); });
    }
    double sample(RandomStream& s) const { return visit([&s](const auto& c) { return c.sample(s); }); }

    const Model& model() const noexcept { return model_; }

private:
    template <class F>
    auto visit(F&& f) const -> decltype(std::visit(std::forward<F>(f), std::declval<const Model&>()))
    {
        return std::visit(std::forward<F>(f), model_);
    }

    Model model_;
};

static_assert(ChannelDistribution<RayleighChannel>);
static_assert(ChannelDistribution<UniformChannel>);
static_assert(ChannelDistribution<TabulatedChannel>);
static_assert(ChannelDistribution<Channel>);

/// Packet arrivals per slot: pmf theta over {0..A}, L bits per packet.
/// theta = (1), A = 0, is the no-traffic model.
class TrafficModel {
public:
    TrafficModel(std::vector<double> theta, double packet_bits)
        : theta_(std::move(theta)), packet_bits_(packet_bits)
    {
        if (theta_.empty())
            throw DomainError("traffic: theta needs entries for 0..A");
        double sum = 0.0;
        for (double t : theta_) {
            if (!(t >= 0.0) || !std::isfinite(t))
                throw DomainError("traffic: theta entries must be finite and nonnegative");
            sum += t;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw DomainError("traffic: theta must sum to 1");
        if (!(theta_.back() > 0.0))
            throw DomainError("traffic: theta_A must be positive (reduce A)");
        if (!(packet_bits_ > 0.0) || !std::isfinite(packet_bits_))
            throw DomainError("traffic: packet size must be positive");
        cumulative_.resize(theta_.size());
        std::partial_sum(theta_.begin(), theta_.end(), cumulative_.begin());
        cumulative_.back() = 1.0;
        for (std::size_t a = 1; a < theta_.size(); ++a)
            mean_packets_ += static_cast<double>(a) * theta_[a];
    }

    static TrafficModel bernoulli(double theta1, double packet_bits = 1.0)
    {
        return TrafficModel({1.0 - theta1, theta1}, packet_bits);
    }

    std::span<const double> theta() const noexcept { return theta_; }
    std::size_t max_arrivals() const noexcept { return theta_.size() - 1; }
    double packet_bits() const noexcept { return packet_bits_; }
    double mean_packets() const noexcept { return mean_packets_; }
    std::span<const double> cumulative() const noexcept { return cumulative_; }

private:
    std::vector<double> theta_;
    std::vector<double> cumulative_;
    double packet_bits_;
    double mean_packets_ = 0.0;
};

/// Mean arrival bits per slot and user, lambda = L * sum_a a * theta_a.
inline double mean_arrival_bits(const TrafficModel& traffic) noexcept
{
    return traffic.packet_bits() * traffic.mean_packets();
}

/// Packets arriving in one slot; inverse-cdf draw from the stream.
inline int sample_arrivals(const TrafficModel& traffic, RandomStream& stream) noexcept
{
    const double u = stream.uniform();
    const auto cum = traffic.cumulative();
    int a = 0;
    while (static_cast<std::size_t>(a) + 1 < cum.size() && u >= cum[static_cast<std::size_t>(a)])
        ++a;
    return a;
}

/// Downlink system: N users, W symbols/s, T s per slot, transmit power and noise.
class SystemParams {
public:
    SystemParams(std::size_t users, double bandwidth, double slot_duration, double power,
                 double noise)
        : users_(users), bandwidth_(bandwidth), slot_duration_(slot_duration), power_(power),
          noise_(noise)
    {
        if (users_ == 0)
            throw DomainError("system: user count must be positive");
        for (double v : {bandwidth_, slot_duration_, power_, noise_})
            if (!(v > 0.0) || !std::isfinite(v))
                throw DomainError("system: W, T, power and noise must be positive and finite");
    }

    std::size_t users() const noexcept { return users_; }
    double bandwidth() const noexcept { return bandwidth_; }
    double slot_duration() const noexcept { return slot_duration_; }
    double power() const noexcept { return power_; }
    double noise() const noexcept { return noise_; }
    double snr() const noexcept { return power_ / noise_; }
    /// Channel symbols per slot, B = W * T.
    double budget() const noexcept { return bandwidth_ * slot_duration_; }

    SystemParams with_power(double power) const
    {
        return SystemParams(users_, bandwidth_, slot_duration_, power, noise_);
    }

private:
    std::size_t users_;
    double bandwidth_;
    double slot_duration_;
    double power_;
    double noise_;
};

namespace detail {

inline double rate_unchecked(double h, double snr) noexcept
{
    return std::log1p(h * h * snr) * std::numbers::log2e;
}

} // namespace detail

/// Achievable bits per channel symbol, log2(1 + h^2 rho).
inline double rate_bits_per_symbol(double h, double snr)
{
    if (!(h >= 0.0))
        throw DomainError("rate: gain must be nonnegative");
    if (!(snr > 0.0))
        throw DomainError("rate: snr must be positive");
    return detail::rate_unchecked(h, snr);
}

} // namespace gcfs
