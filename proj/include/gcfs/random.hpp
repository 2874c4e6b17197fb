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
#include <limits>

namespace gcfs {

/// What a substream is used for. Each (seed, user, purpose, slot) tuple owns
/// an independent stream, so draws do not depend on evaluation order.
enum class StreamPurpose : std::uint64_t {
    arrivals = 0x61727276ULL,
    gains = 0x6761696eULL,
    test = 0x74657374ULL,
};

namespace detail {

inline constexpr std::uint64_t golden_gamma = 0x9e3779b97f4a7c15ULL;

// SplitMix64 output function.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

/**
 * Counter-based random stream.
 *
 * The i-th output is a pure function of (key, i), which makes a stream cheap
 * to construct per slot and per user. Satisfies UniformRandomBitGenerator so
 * it can drive the <random> distributions as well.
 */
class RandomStream {
public:
    using result_type = std::uint64_t;

    constexpr explicit RandomStream(std::uint64_t key) noexcept : key_(key) {}

    constexpr RandomStream(std::uint64_t seed, std::uint64_t user, StreamPurpose purpose,
                           std::uint64_t slot) noexcept
        : key_(derive_key(seed, user, purpose, slot))
    {}

    static constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t user,
                                              StreamPurpose purpose, std::uint64_t slot) noexcept
    {
        std::uint64_t k = detail::mix64(seed + detail::golden_gamma);
        k = detail::mix64(k ^ (user * 0xd1b54a32d192ed03ULL + 1));
        k = detail::mix64(k ^ static_cast<std::uint64_t>(purpose));
        return detail::mix64(k ^ (slot * 0xaef17502108ef2d9ULL + 7));
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept
    {
        return detail::mix64(key_ + (++counter_) * detail::golden_gamma);
    }

    /// Uniform on [0, 1) with 53 random bits.
    constexpr double uniform() noexcept
    {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    /// Uniform on (0, 1]; safe to pass to log().
    constexpr double uniform_positive() noexcept
    {
        return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
    }

    constexpr std::uint64_t key() const noexcept { return key_; }
    constexpr std::uint64_t position() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace gcfs
