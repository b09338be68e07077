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


#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "colorhbt/events.hpp"
#include "colorhbt/g2.hpp"
#include "colorhbt/rng.hpp"

namespace colorhbt {
namespace {

EventStream stream(DetectorId d, std::vector<std::int64_t> t, std::int64_t duration) {
  EventStream s;
  s.detector = d;
  s.timestamps = std::move(t);
  s.duration = duration;
  return s;
}

// Quadratic reference: every (A, B) pair whose bins differ by k.
std::uint64_t brute_pairs(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b, std::int64_t gate,
                          std::int64_t k) {
  std::uint64_t n = 0;
  for (auto ta : a)
    for (auto tb : b)
      if (tb / gate - ta / gate == k) ++n;
  return n;
}

std::vector<std::int64_t> random_times(RandomStream& rng, std::size_t n, std::int64_t duration) {
  std::vector<std::int64_t> t;
  for (std::size_t i = 0; i < n; ++i) t.push_back(static_cast<std::int64_t>(rng.uniform() * static_cast<double>(duration)));
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

TEST(Coincidence, HandBuiltCounts) {
  // gate 10: A bins {0, 0, 3}, B bins {0, 1, 3, 3}
  const auto a = stream(DetectorId::kA, {1, 5, 31}, 100);
  const auto b = stream(DetectorId::kB, {9, 10, 30, 39}, 100);
  const auto c = count_coincidences(a, b, 10, -3, 3);
  EXPECT_EQ(c.n_a, 3u);
  EXPECT_EQ(c.n_b, 4u);
  EXPECT_EQ(c.n_bin, 10u);
  EXPECT_EQ(c.at(0), 2u + 2u);        // two A in bin 0 with B bin 0, one A in bin 3 with two B
  EXPECT_EQ(c.at(1), 2u);             // bin 0 -> bin 1
  EXPECT_EQ(c.at(3), 4u);             // bin 0 -> bin 3 twice each
  EXPECT_EQ(c.at(-3), 1u);            // bin 3 -> bin 0
  EXPECT_EQ(c.at(-2), 1u);            // bin 3 -> bin 1
  EXPECT_EQ(c.at(2), 0u);
  const auto g = estimate_g2(a, b, 0, 10);
  ASSERT_TRUE(g);
  EXPECT_DOUBLE_EQ(*g, 4.0 * 10.0 / 12.0);
}

TEST(Coincidence, MatchesBruteForce) {
  RandomStream rng(7, 1);
  for (int rep = 0; rep < 20; ++rep) {
    const std::int64_t duration = 1'000'000;
    const auto a = random_times(rng, 300, duration);
    const auto b = random_times(rng, 300, duration);
    const std::int64_t gate = 1 + static_cast<std::int64_t>(rng.uniform() * 5000);
    const auto c = count_coincidences(a, b, gate, -4, 4, 0, bin_count(duration, gate));
    for (std::int64_t k = -4; k <= 4; ++k) EXPECT_EQ(c.at(k), brute_pairs(a, b, gate, k)) << "gate " << gate;
  }
}

TEST(Coincidence, DuplicateStream) {
  // A == B with one count per occupied bin: n_c(0) = n, so g2 = n_bin / n.
  RandomStream rng(3, 1);
  const std::int64_t gate = 1000, duration = 10'000'000;
  std::vector<std::int64_t> t;
  for (std::int64_t bin = 0; bin < duration / gate; ++bin)
    if (rng.uniform() < 0.1) t.push_back(bin * gate + static_cast<std::int64_t>(rng.uniform() * gate));
  const auto a = stream(DetectorId::kA, t, duration);
  const auto b = stream(DetectorId::kB, t, duration);
  const auto g = estimate_g2(a, b, 0, gate);
  ASSERT_TRUE(g);
  EXPECT_DOUBLE_EQ(*g, static_cast<double>(duration / gate) / static_cast<double>(t.size()));
}

TEST(Coincidence, IndependentPoissonStreamsGiveOne) {
  // Dark counts only: two independent Poisson processes.
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SimulationConfig cfg;
    cfg.source1.rate = 0.0;
    cfg.source2.rate = 0.0;
    cfg.detector_a.dark_count_rate = 2e6;
    cfg.detector_b.dark_count_rate = 3e6;
    cfg.duration = 200'000'000'000;  // 0.2 s
    cfg.seed = seed;
    const auto out = simulate_events(cfg);
    const std::int64_t taus[] = {-5000, 0, 5000};
    for (const auto& p : estimate_g2(out.a, out.b, taus, 1000)) {
      ASSERT_TRUE(p.g2);
      ASSERT_GT(p.n_coincidence, 100u);
      EXPECT_LT(std::abs(*p.g2 - 1.0), 5.0 / std::sqrt(static_cast<double>(p.n_coincidence)))
          << "seed " << seed << " tau " << p.tau;
    }
  }
}

TEST(Coincidence, SegmentsMergeExactly) {
  RandomStream rng(11, 1);
  const std::int64_t duration = 5'000'000, gate = 700;
  const auto a = random_times(rng, 2000, duration);
  const auto b = random_times(rng, 2500, duration);
  const std::int64_t n_bin = bin_count(duration, gate);
  const auto whole = count_coincidences(a, b, gate, -6, 6, 0, n_bin);
  for (std::int64_t pieces : {2, 3, 7}) {
    auto merged = count_coincidences(a, b, gate, -6, 6, 0, n_bin / pieces);
    for (std::int64_t p = 1; p < pieces; ++p) {
      const std::int64_t lo = p * n_bin / pieces, hi = p + 1 == pieces ? n_bin : (p + 1) * n_bin / pieces;
      merged.merge(count_coincidences(a, b, gate, -6, 6, lo, hi));
    }
    EXPECT_EQ(merged.pairs, whole.pairs);
    EXPECT_EQ(merged.n_a, whole.n_a);
    EXPECT_EQ(merged.n_b, whole.n_b);
    EXPECT_EQ(merged.n_bin, whole.n_bin);
  }
  auto other = count_coincidences(a, b, gate + 1, -6, 6, 0, 1);
  EXPECT_THROW(other.merge(whole), InvalidArgument);
}

TEST(Coincidence, EmptyStreamIsUndefined) {
  const auto a = stream(DetectorId::kA, {}, 1000);
  const auto b = stream(DetectorId::kB, {5, 500}, 1000);
  const std::int64_t taus[] = {0};
  const auto curve = estimate_g2(a, b, taus, 10);
  ASSERT_EQ(curve.size(), 1u);
  EXPECT_FALSE(curve[0].g2);
  EXPECT_EQ(curve[0].n_a, 0u);
  EXPECT_EQ(curve[0].n_b, 2u);
  EXPECT_EQ(curve[0].n_bin, 100u);
  std::ostringstream os;
  write_g2_csv(os, curve);
  EXPECT_EQ(os.str(), "tau_ps,g2,n_coincidence,n_A,n_B,n_bin\n0,,0,0,2,100\n");
}

TEST(Coincidence, LagRoundsToNearestGate) {
  EXPECT_EQ(lag_bins(1400, 1000), 1);
  EXPECT_EQ(lag_bins(1600, 1000), 2);
  EXPECT_EQ(lag_bins(-1600, 1000), -2);
  EXPECT_EQ(lag_bins(0, 7), 0);
  // tau = 1400 and 1000 read the same lag bin.
  const auto a = stream(DetectorId::kA, {100}, 10'000);
  const auto b = stream(DetectorId::kB, {1100}, 10'000);
  const std::int64_t taus[] = {1000, 1400};
  const auto curve = estimate_g2(a, b, taus, 1000);
  EXPECT_EQ(curve[0].n_coincidence, 1u);
  EXPECT_EQ(curve[1].n_coincidence, 1u);
}

TEST(Coincidence, CsvFormat) {
  G2Curve c = {{-1000, 1.25, 5, 10, 20, 40}, {0, std::nullopt, 0, 0, 20, 40}};
  std::ostringstream os;
  write_g2_csv(os, c);
  EXPECT_EQ(os.str(), "tau_ps,g2,n_coincidence,n_A,n_B,n_bin\n-1000,1.25,5,10,20,40\n0,,0,0,20,40\n");
}

TEST(Coincidence, RejectsBadArguments) {
  const auto a = stream(DetectorId::kA, {1}, 100);
  const auto b = stream(DetectorId::kB, {1}, 200);
  EXPECT_THROW(count_coincidences(a, b, 10, 0, 0), InvalidArgument);
  const auto b2 = stream(DetectorId::kB, {1}, 100);
  EXPECT_THROW(count_coincidences(a, b2, 0, 0, 0), InvalidArgument);
  EXPECT_THROW(count_coincidences(a, b2, 10, 1, 0), InvalidArgument);
}

}  // namespace
}  // namespace colorhbt
