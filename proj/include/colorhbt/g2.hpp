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

// Binned coincidence counting and the normalized second-order correlation.
//
// Time is cut into gate-wide bins b = floor(t / gate). A coincidence at lag k
// is a pair (A count in bin b, B count in bin b + k); counting pairs rather
// than jointly occupied bins keeps the estimator unbiased when bins hold more
// than one count. Then
//
//   g2(k) = n_c(k) * n_bin / (n_A * n_B),   n_bin = ceil(duration / gate).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "colorhbt/core.hpp"
#include "colorhbt/events.hpp"

namespace colorhbt {

struct CoincidenceCounts {
  std::int64_t gate = 0;  // ps
  std::int64_t k_min = 0;
  std::int64_t k_max = 0;
  std::vector<std::uint64_t> pairs;  // index k - k_min
  std::uint64_t n_a = 0;
  std::uint64_t n_b = 0;
  std::uint64_t n_bin = 0;

  std::uint64_t at(std::int64_t k) const { return pairs.at(static_cast<std::size_t>(k - k_min)); }

  /// Sums counts from a disjoint segment of the same record.
  CoincidenceCounts& merge(const CoincidenceCounts& other) {
    if (other.gate != gate || other.k_min != k_min || other.k_max != k_max)
      throw InvalidArgument("merging coincidence counts with different binning");
    for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i] += other.pairs[i];
    n_a += other.n_a;
    n_b += other.n_b;
    n_bin += other.n_bin;
    return *this;
  }
};

inline std::int64_t bin_count(std::int64_t duration, std::int64_t gate) { return (duration + gate - 1) / gate; }

/// Pair histogram for A counts whose bin lies in [bin_begin, bin_end); B
/// counts anywhere in the record are partners, but n_B only counts B events
/// inside the segment. Segments tiling [0, n_bin) merge to the full record.
inline CoincidenceCounts count_coincidences(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                                            std::int64_t gate, std::int64_t k_min, std::int64_t k_max,
                                            std::int64_t bin_begin, std::int64_t bin_end) {
  if (gate <= 0) throw InvalidArgument("gate must be positive");
  if (k_min > k_max) throw InvalidArgument("empty lag range");
  CoincidenceCounts c;
  c.gate = gate;
  c.k_min = k_min;
  c.k_max = k_max;
  c.pairs.assign(static_cast<std::size_t>(k_max - k_min + 1), 0);
  c.n_bin = static_cast<std::uint64_t>(std::max<std::int64_t>(0, bin_end - bin_begin));
  auto in_segment = [&](std::int64_t t) {
    const std::int64_t bin = t / gate;
    return bin >= bin_begin && bin < bin_end;
  };
  for (auto t : b)
    if (in_segment(t)) ++c.n_b;

  // Two-pointer window over B: for each A bin, B counts in bins [bin + k_min, bin + k_max].
  std::size_t lo = 0;
  for (auto t : a) {
    if (!in_segment(t)) continue;
    ++c.n_a;
    const std::int64_t bin = t / gate;
    const std::int64_t first = (bin + k_min) * gate;
    while (lo < b.size() && b[lo] < first) ++lo;
    for (std::size_t j = lo; j < b.size(); ++j) {
      const std::int64_t k = b[j] / gate - bin;
      if (k > k_max) break;
      ++c.pairs[static_cast<std::size_t>(k - k_min)];
    }
  }
  return c;
}

/// Whole-record counts.
inline CoincidenceCounts count_coincidences(const EventStream& a, const EventStream& b, std::int64_t gate,
                                            std::int64_t k_min, std::int64_t k_max) {
  if (a.duration != b.duration) throw InvalidArgument("event streams of different duration");
  if (gate <= 0) throw InvalidArgument("gate must be positive");
  return count_coincidences(a.timestamps, b.timestamps, gate, k_min, k_max, 0, bin_count(a.duration, gate));
}

inline std::optional<double> normalized_g2(std::uint64_t n_c, std::uint64_t n_a, std::uint64_t n_b,
                                           std::uint64_t n_bin) {
  if (n_a == 0 || n_b == 0) return std::nullopt;
  return static_cast<double>(n_c) * static_cast<double>(n_bin) /
         (static_cast<double>(n_a) * static_cast<double>(n_b));
}

struct G2Point {
  std::int64_t tau = 0;  // ps
  std::optional<double> g2;
  std::uint64_t n_coincidence = 0;
  std::uint64_t n_a = 0;
  std::uint64_t n_b = 0;
  std::uint64_t n_bin = 0;
};

using G2Curve = std::vector<G2Point>;

inline std::int64_t lag_bins(std::int64_t tau, std::int64_t gate) {
  return std::llround(static_cast<double>(tau) / static_cast<double>(gate));
}

inline G2Curve g2_from_counts(const CoincidenceCounts& c, std::span<const std::int64_t> taus) {
  G2Curve out;
  out.reserve(taus.size());
  for (auto tau : taus) {
    const auto k = lag_bins(tau, c.gate);
    if (k < c.k_min || k > c.k_max) throw InvalidArgument("lag outside the counted range");
    const auto n_c = c.at(k);
    out.push_back({tau, normalized_g2(n_c, c.n_a, c.n_b, c.n_bin), n_c, c.n_a, c.n_b, c.n_bin});
  }
  return out;
}

/// g2 at each lag (ps). Lags are rounded to whole gates.
inline G2Curve estimate_g2(const EventStream& a, const EventStream& b, std::span<const std::int64_t> taus,
                           std::int64_t gate) {
  if (taus.empty()) return {};
  if (gate <= 0) throw InvalidArgument("gate must be positive");
  std::int64_t k_min = lag_bins(taus.front(), gate), k_max = k_min;
  for (auto tau : taus) {
    k_min = std::min(k_min, lag_bins(tau, gate));
    k_max = std::max(k_max, lag_bins(tau, gate));
  }
  return g2_from_counts(count_coincidences(a, b, gate, k_min, k_max), taus);
}

inline std::optional<double> estimate_g2(const EventStream& a, const EventStream& b, std::int64_t tau,
                                         std::int64_t gate) {
  const std::int64_t taus[1] = {tau};
  return estimate_g2(a, b, taus, gate).front().g2;
}

/// tau_ps,g2,n_coincidence,n_A,n_B,n_bin; undefined g2 is an empty field.
inline void write_g2_csv(std::ostream& os, const G2Curve& curve) {
  os << "tau_ps,g2,n_coincidence,n_A,n_B,n_bin\n";
  char buf[64];
  for (const auto& p : curve) {
    os << p.tau << ',';
    if (p.g2) {
      std::snprintf(buf, sizeof buf, "%.12g", *p.g2);
      os << buf;
    }
    os << ',' << p.n_coincidence << ',' << p.n_a << ',' << p.n_b << ',' << p.n_bin << '\n';
  }
}

}  // namespace colorhbt
