// Copyright 2026 The colorhbt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Counter-based random numbers (Philox4x32-10, Salmon et al. 2011).
//
// A RandomStream is keyed by the run seed and addressed by a 64-bit stream
// id; the block counter occupies the low 64 bits of the Philox counter and
// the stream id the high 64 bits, so streams never overlap and any stream can
// be regenerated independently of the others. Distributions are implemented
// here rather than taken from <random> so that output is bit-identical
// across standard libraries.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

#include "colorhbt/core.hpp"

namespace colorhbt {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

inline Philox4x32Counter philox4x32_10(Philox4x32Counter ctr, Philox4x32Key key) {
  constexpr std::uint64_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  std::uint32_t c0 = ctr[0], c1 = ctr[1], c2 = ctr[2], c3 = ctr[3];
  std::uint32_t k0 = key[0], k1 = key[1];
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = kM0 * c0;
    const std::uint64_t p1 = kM1 * c2;
    c0 = static_cast<std::uint32_t>(p1 >> 32) ^ c1 ^ k0;
    c2 = static_cast<std::uint32_t>(p0 >> 32) ^ c3 ^ k1;
    c1 = static_cast<std::uint32_t>(p1);
    c3 = static_cast<std::uint32_t>(p0);
    k0 += kW0;
    k1 += kW1;
  }
  return {c0, c1, c2, c3};
}

/// What a random stream is used for. Part of the stream id, so changing the
/// numbering changes every simulated stream.
enum class StreamRole : std::uint8_t {
  kSourceField = 1,
  kPhotons = 2,
  kThinning = 3,
  kDark = 4,
  kPlacement = 5,
  kPostHoc = 6,
};

/// id = trial << 16 | role << 8 | channel  (channel: source or detector index)
inline std::uint64_t stream_id(std::uint64_t trial, StreamRole role, std::uint8_t channel) {
  return (trial << 16) | (static_cast<std::uint64_t>(role) << 8) | channel;
}

class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, stream_(stream) {}

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    const std::uint64_t a = next_u32() >> 5, b = next_u32() >> 6;
    return (static_cast<double>(a) * 67108864.0 + static_cast<double>(b)) * 0x1.0p-53;
  }

  /// Uniform on (0, 1).
  double uniform_open() {
    const std::uint64_t a = next_u32() >> 5, b = next_u32() >> 6;
    return (static_cast<double>(a) * 67108864.0 + static_cast<double>(b) + 0.5) * 0x1.0p-53;
  }

  double exponential() { return -std::log(uniform_open()); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_open()));
    const double t = kTwoPi * uniform();
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  /// Circular complex Gaussian with E|z|^2 = 1.
  Complex complex_normal() {
    constexpr double s = 0.70710678118654752440;
    const double re = normal();
    return {s * re, s * normal()};
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t blocks_used() const { return block_; }

 private:
  void refill() {
    buf_ = philox4x32_10({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                          static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                         key_);
    ++block_;
    pos_ = 0;
  }

  Philox4x32Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Philox4x32Counter buf_{};
  int pos_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace colorhbt
