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
#include "colorhbt/stats.hpp"

namespace colorhbt {
namespace {

// Only source 1 reaches the detectors: no conversion, gamma1 filter.
SimulationConfig single_source(FieldStatistics stats, double rate, double coherence_time) {
  SimulationConfig cfg;
  cfg.source1.statistics = stats;
  cfg.source1.rate = rate;
  cfg.source1.coherence_time = coherence_time;
  cfg.source2.rate = 0.0;
  for (auto* d : {&cfg.detector_a, &cfg.detector_b}) {
    d->theta = 0.0;
    d->filter = OutputFilter::kGamma1;
  }
  return cfg;
}

TEST(Simulate, PoissonCountsForConstantIntensity) {
  auto cfg = single_source(FieldStatistics::kCoherent, 2e6, std::numeric_limits<double>::infinity());
  cfg.duration = 100'000'000'000;  // 0.1 s
  const auto out = simulate_events(cfg);
  out.a.validate();
  out.b.validate();
  const double expected = 0.5 * 2e6 * 0.1;  // |D|^2 = 1/2 per detector
  EXPECT_NEAR(static_cast<double>(out.a.size()), expected, 5 * std::sqrt(expected));
  EXPECT_NEAR(static_cast<double>(out.b.size()), expected, 5 * std::sqrt(expected));
  // Counts in 1 ms windows are Poisson: variance equals mean.
  std::vector<double> per_window(100, 0.0);
  for (auto t : out.a.timestamps) per_window[static_cast<std::size_t>(t / 1'000'000'000)] += 1;
  double m = 0, v = 0;
  for (double c : per_window) m += c;
  m /= 100;
  for (double c : per_window) v += (c - m) * (c - m);
  v /= 99;
  EXPECT_NEAR(v / m, 1.0, 0.5);
}

TEST(Simulate, EfficiencyScalesCounts) {
  auto cfg = single_source(FieldStatistics::kCoherent, 2e6, std::numeric_limits<double>::infinity());
  cfg.duration = 100'000'000'000;
  cfg.detector_a.efficiency = 0.25;
  const auto out = simulate_events(cfg);
  const double expected = 0.25 * 0.5 * 2e6 * 0.1;
  EXPECT_NEAR(static_cast<double>(out.a.size()), expected, 5 * std::sqrt(expected));
}

TEST(Simulate, DarkCountsOnly) {
  auto cfg = single_source(FieldStatistics::kCoherent, 0.0, std::numeric_limits<double>::infinity());
  cfg.detector_a.dark_count_rate = 1e5;
  cfg.duration = 100'000'000'000;
  const auto out = simulate_events(cfg);
  EXPECT_NEAR(static_cast<double>(out.a.size()), 1e4, 500);
  EXPECT_EQ(out.b.size(), 0u);
  double mean_t = 0;
  for (auto t : out.a.timestamps) mean_t += static_cast<double>(t);
  mean_t /= static_cast<double>(out.a.size());
  EXPECT_NEAR(mean_t / static_cast<double>(cfg.duration), 0.5, 0.02);
}

TEST(Simulate, DeterministicFromSeed) {
  SimulationConfig cfg;
  cfg.source1.coherence_time = 1e-7;
  cfg.source2.detuning = 1e7;
  cfg.duration = 2'000'000'000;
  cfg.source1.rate = cfg.source2.rate = 1e7;
  cfg.detector_a.dark_count_rate = 1e4;
  const auto x = simulate_events(cfg), y = simulate_events(cfg);
  EXPECT_EQ(x.a.timestamps, y.a.timestamps);
  EXPECT_EQ(x.b.timestamps, y.b.timestamps);
  cfg.seed = 2;
  EXPECT_NE(simulate_events(cfg).a.timestamps, x.a.timestamps);
  cfg.seed = 1;
  cfg.trial = 1;
  EXPECT_NE(simulate_events(cfg).a.timestamps, x.a.timestamps);
}

TEST(Simulate, WarnsOnShortRecords) {
  auto cfg = single_source(FieldStatistics::kThermal, 1e6, 1e-6);
  cfg.duration = 10'000'000;  // 10 us < 100 coherence times
  EXPECT_FALSE(simulate_events(cfg).warnings.empty());
  cfg.duration = 1'000'000'000;
  EXPECT_TRUE(simulate_events(cfg).warnings.empty());
}

TEST(Simulate, ThermalSplitterBunching) {
  auto cfg = single_source(FieldStatistics::kThermal, 2e8, 20e-9);
  cfg.duration = 20'000'000'000;  // 20 ms
  const auto out = simulate_events(cfg);
  const auto g = estimate_g2(out.a, out.b, std::int64_t{0}, 200);
  ASSERT_TRUE(g.has_value());
  EXPECT_NEAR(*g, 2.0, 0.08);
  const auto far = estimate_g2(out.a, out.b, std::int64_t{2'000'000}, 200);
  EXPECT_NEAR(*far, 1.0, 0.08);
}

TEST(Simulate, CoherentPairMatchesFieldCorrelation) {
  SimulationConfig cfg;
  cfg.source1.rate = cfg.source2.rate = 1e8;
  cfg.source1.coherence_time = 100e-9;
  cfg.duration = 20'000'000'000;
  const double l3 = *cfg.geometry.lambda3;
  for (double frac : {0.0, 0.25, 0.5}) {
    cfg.geometry = InterferometerGeometry{}.with_delay(frac * l3);
    cfg.trial = static_cast<std::uint64_t>(frac * 4);
    const auto out = simulate_events(cfg);
    const auto g = estimate_g2(out.a, out.b, std::int64_t{0}, 500);
    // Expected value averaged over the triangular lag window of the gate.
    double expect = 0.0, wsum = 0.0;
    for (int k = -499; k <= 499; ++k) {
      const double w = 500.0 - std::abs(k);
      expect += w * field_correlation(cfg.geometry, cfg.source1, cfg.source2, cfg.detector_a, cfg.detector_b,
                                      k * 1e-12)
                        .probability;
      wsum += w;
    }
    expect /= wsum;
    const double n_c = static_cast<double>(out.a.size()) * static_cast<double>(out.b.size()) /
                       static_cast<double>(bin_count(cfg.duration, 500));
    EXPECT_NEAR(*g, expect, 4.0 * expect / std::sqrt(n_c)) << frac;
  }
}

TEST(Simulate, ThermalCountsAreBoseEinstein) {
  // 2 ns bins see a single mode of a 100 ns coherence-time field; one bin per
  // microsecond keeps the samples independent (intensity correlation e^-20).
  auto cfg = single_source(FieldStatistics::kThermal, 1e9, 100e-9);
  cfg.duration = 30'000'000'000;  // 30 ms
  const auto out = simulate_events(cfg);
  const std::int64_t bin = 2'000, stride = 1'000'000;
  const auto n_samples = static_cast<std::size_t>(cfg.duration / stride);
  std::vector<int> counts(n_samples, 0);
  for (auto t : out.a.timestamps)
    if (t % stride < bin) ++counts[static_cast<std::size_t>(t / stride)];
  const int n_max = 40;
  std::vector<double> hist(n_max, 0.0);
  double mean = 0.0;
  for (int c : counts) {
    mean += c;
    if (c < n_max) hist[static_cast<std::size_t>(c)] += 1;
  }
  mean /= static_cast<double>(n_samples);
  EXPECT_NEAR(mean, 1.0, 0.05);
  std::vector<double> expected;
  for (double p : bose_einstein_pmf(mean, n_max)) expected.push_back(p * static_cast<double>(n_samples));
  const auto fit = chi_squared_test(hist, expected, 1);
  EXPECT_GT(fit.p_value, 0.01) << "chi2=" << fit.statistic << " dof=" << fit.dof;
  // The same histogram is far from Poisson.
  std::vector<double> poisson;
  double pk = std::exp(-mean);
  for (int k = 0; k < n_max; ++k) {
    poisson.push_back(pk * static_cast<double>(n_samples));
    pk *= mean / (k + 1);
  }
  EXPECT_LT(chi_squared_test(hist, poisson, 1).p_value, 1e-6);
}

TEST(Thinning, SameSubstreamReproducesSimulationThinning) {
  SimulationConfig cfg;
  cfg.source1.rate = cfg.source2.rate = 5e6;
  cfg.source1.coherence_time = 1e-7;
  cfg.duration = 5'000'000'000;
  auto full = cfg;
  full.detector_a.efficiency = full.detector_b.efficiency = 1.0;
  auto thinned = cfg;
  thinned.detector_a.efficiency = thinned.detector_b.efficiency = 0.3;
  const auto f = simulate_events(full);
  const auto t = simulate_events(thinned);
  const auto post = thin_stream(f.a, 0.3, RandomStream(cfg.seed, stream_id(cfg.trial, StreamRole::kThinning, 0)));
  EXPECT_EQ(post.timestamps, t.a.timestamps);
}

TEST(Thinning, PostHocAndInSimulationAgreeInDistribution) {
  SimulationConfig cfg;
  cfg.source1.rate = cfg.source2.rate = 1e8;
  cfg.source1.coherence_time = 1e-7;
  cfg.duration = 2'000'000'000;
  std::vector<double> g_sim, g_post;
  for (std::uint64_t trial = 0; trial < 60; ++trial) {
    auto a = cfg;
    a.trial = trial;
    a.detector_a.efficiency = a.detector_b.efficiency = 0.4;
    const auto s = simulate_events(a);
    g_sim.push_back(*estimate_g2(s.a, s.b, std::int64_t{0}, 1000));
    auto b = cfg;
    b.trial = trial + 1000;
    const auto full = simulate_events(b);
    const auto pa = thin_stream(full.a, 0.4, RandomStream(b.seed, stream_id(b.trial, StreamRole::kPostHoc, 0)));
    const auto pb = thin_stream(full.b, 0.4, RandomStream(b.seed, stream_id(b.trial, StreamRole::kPostHoc, 1)));
    g_post.push_back(*estimate_g2(pa, pb, std::int64_t{0}, 1000));
  }
  EXPECT_GT(ks_two_sample(g_sim, g_post).p_value, 0.01);
}

TEST(EventFile, RoundTrip) {
  SimulationConfig cfg;
  cfg.source1.rate = cfg.source2.rate = 1e7;
  cfg.source1.coherence_time = 1e-7;
  cfg.duration = 200'000'000;
  const auto out = simulate_events(cfg);
  std::stringstream ss;
  write_events_csv(ss, out.a, out.b);
  const auto back = read_events_csv(ss, cfg.duration);
  EXPECT_EQ(back.first.timestamps, out.a.timestamps);
  EXPECT_EQ(back.second.timestamps, out.b.timestamps);
}

TEST(EventFile, SortedWithHeader) {
  EventStream a{DetectorId::kA, {1, 5}, 10, 0}, b{DetectorId::kB, {1, 3}, 10, 0};
  std::ostringstream os;
  write_events_csv(os, a, b);
  EXPECT_EQ(os.str(), "detector_id,timestamp_ps\nA,1\nB,1\nB,3\nA,5\n");
}

TEST(EventStream, ValidationRejectsDisorder) {
  EventStream s{DetectorId::kA, {3, 2}, 10, 0};
  EXPECT_THROW(s.validate(), InvalidArgument);
  s.timestamps = {1, 10};
  EXPECT_THROW(s.validate(), InvalidArgument);
  s.timestamps = {1, 1};
  EXPECT_THROW(s.validate(), InvalidArgument);
}

}  // namespace
}  // namespace colorhbt
