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

// Monte Carlo photon detection records for two color-erasure detectors.
//
// Time is cut into slots short against the field correlation time. In every
// slot each source has a complex field amplitude E_k (coherent: unit modulus
// with diffusing phase; thermal: complex Ornstein-Uhlenbeck with Gaussian
// marginal); the detector rate is
//
//   I_X = sum_k |w_kX|^2 R_k |E_k|^2 + 2 sqrt(v_X) Re(w_1X w_2X^* sqrt(R_1 R_2) E_1 E_2^*)
//
// with w_kX from detector_weights(). Arrivals form an inhomogeneous Poisson
// process in that rate, are thinned by the detector efficiency and merged with
// uniform dark counts. Timestamps are integer picoseconds; arrivals that land
// on the same picosecond collapse to one count.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "colorhbt/core.hpp"
#include "colorhbt/interferometry.hpp"
#include "colorhbt/rng.hpp"

namespace colorhbt {

enum class DetectorId : std::uint8_t { kA = 0, kB = 1 };

inline char detector_name(DetectorId d) { return d == DetectorId::kA ? 'A' : 'B'; }

struct EventStream {
  DetectorId detector = DetectorId::kA;
  std::vector<std::int64_t> timestamps;  // ps, strictly increasing
  std::int64_t duration = 0;             // ps
  std::uint64_t seed = 0;

  std::size_t size() const { return timestamps.size(); }

  void validate() const {
    for (std::size_t i = 0; i < timestamps.size(); ++i) {
      if (timestamps[i] < 0 || timestamps[i] >= duration) throw InvalidArgument("timestamp outside [0, duration)");
      if (i > 0 && timestamps[i] <= timestamps[i - 1]) throw InvalidArgument("timestamps not strictly increasing");
    }
  }
};

struct SimulationConfig {
  InterferometerGeometry geometry;
  FieldSource source1;
  FieldSource source2;
  DetectorSetting detector_a;
  DetectorSetting detector_b;
  std::int64_t duration = 1'000'000'000;  // ps
  std::uint64_t seed = 1;
  std::uint64_t trial = 0;
  std::int64_t slot = 0;  // ps; 0 picks one from the field timescales
};

struct SimulationOutput {
  EventStream a;
  EventStream b;
  std::int64_t slot = 0;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::int64_t auto_slot(const SimulationConfig& cfg) {
  double fastest = std::numeric_limits<double>::infinity();
  for (const FieldSource* s : {&cfg.source1, &cfg.source2}) {
    if (s->rate <= 0.0) continue;
    fastest = std::min(fastest, s->coherence_time);
    if (s->detuning != 0.0) fastest = std::min(fastest, 1.0 / std::abs(s->detuning));
  }
  const double slot_ps = fastest * 1e12 / 16.0;
  if (!std::isfinite(slot_ps)) return 100'000;
  return std::clamp<std::int64_t>(static_cast<std::int64_t>(slot_ps), 1, 100'000);
}

class FieldProcess {
 public:
  FieldProcess(const FieldSource& src, RandomStream rng) : src_(src), rng_(std::move(rng)) {
    field_ = src_.statistics == FieldStatistics::kThermal ? rng_.complex_normal()
                                                          : std::polar(1.0, kTwoPi * rng_.uniform());
  }

  Complex value() const { return field_; }

  void advance(double dt) {
    if (std::isinf(src_.coherence_time)) return;
    if (dt != cached_dt_) {
      cached_dt_ = dt;
      rho_ = std::exp(-dt / src_.coherence_time);
      kick_ = src_.statistics == FieldStatistics::kThermal ? std::sqrt(1.0 - rho_ * rho_)
                                                           : std::sqrt(2.0 * dt / src_.coherence_time);
    }
    if (src_.statistics == FieldStatistics::kThermal) {
      field_ = rho_ * field_ + kick_ * rng_.complex_normal();
    } else {
      // Phase diffusion; the modulus is pinned back to 1 now and then.
      field_ *= std::polar(1.0, kick_ * rng_.normal());
      if ((++steps_ & 1023u) == 0) field_ /= std::abs(field_);
    }
  }

 private:
  FieldSource src_;
  RandomStream rng_;
  Complex field_{};
  double cached_dt_ = -1.0;
  double rho_ = 1.0;
  double kick_ = 0.0;
  std::uint32_t steps_ = 0;
};

// exp(i 2 pi f t) at a uniformly stepped t, by complex recurrence with an
// exact resynchronization every 1024 steps.
class PhaseRamp {
 public:
  PhaseRamp(double frequency, double t0, double step) : f_(frequency), t0_(t0), dt_(step) {
    step_rot_ = exact(step) / exact(0.0);
    resync(0);
  }

  Complex at(std::uint64_t k) {
    if (k != k_) {
      if (k == k_ + 1 && (k & 1023u) != 0) {
        cur_ *= step_rot_;
        k_ = k;
      } else {
        resync(k);
      }
    }
    return cur_;
  }

 private:
  Complex exact(double t) const {
    const double cycles = f_ * t;
    return std::polar(1.0, kTwoPi * (cycles - std::floor(cycles)));
  }
  void resync(std::uint64_t k) {
    k_ = k;
    cur_ = exact(t0_ + dt_ * static_cast<double>(k));
  }

  double f_, t0_, dt_;
  Complex step_rot_{1.0};
  Complex cur_{1.0};
  std::uint64_t k_ = 0;
};

// Inhomogeneous Poisson arrivals by time rescaling over piecewise-constant rates.
class ArrivalGenerator {
 public:
  explicit ArrivalGenerator(RandomStream rng) : rng_(std::move(rng)), need_(rng_.exponential()) {}

  template <class Emit>
  void slot(std::int64_t start, std::int64_t len, double expected, Emit&& emit) {
    double used = 0.0;
    while (need_ <= expected - used) {
      used += need_;
      const auto offset = static_cast<std::int64_t>(static_cast<double>(len) * (used / expected));
      emit(start + std::min(offset, len - 1));
      need_ = rng_.exponential();
    }
    need_ -= expected - used;
  }

 private:
  RandomStream rng_;
  double need_;
};

inline std::vector<std::int64_t> dark_counts(double rate, std::int64_t duration, RandomStream rng) {
  std::vector<std::int64_t> out;
  if (rate <= 0.0) return out;
  const double mean_gap_ps = 1e12 / rate;
  double t = rng.exponential() * mean_gap_ps;
  while (t < static_cast<double>(duration)) {
    out.push_back(static_cast<std::int64_t>(t));
    t += rng.exponential() * mean_gap_ps;
  }
  return out;
}

inline std::vector<std::int64_t> merge_unique(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
  std::vector<std::int64_t> out(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), out.begin());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace detail

/// Simulates both detectors over [0, duration). Bit-reproducible from
/// (config, seed, trial).
inline SimulationOutput simulate_events(const SimulationConfig& cfg) {
  cfg.geometry.validate();
  cfg.source1.validate();
  cfg.source2.validate();
  cfg.detector_a.validate();
  cfg.detector_b.validate();
  if (cfg.duration <= 0) throw InvalidArgument("duration must be positive");

  SimulationOutput out;
  out.slot = cfg.slot > 0 ? cfg.slot : detail::auto_slot(cfg);
  for (const FieldSource* s : {&cfg.source1, &cfg.source2}) {
    if (s->rate > 0.0 && std::isfinite(s->coherence_time) &&
        static_cast<double>(cfg.duration) < 100.0 * s->coherence_time * 1e12)
      out.warnings.push_back("duration shorter than 100 coherence times; statistics may be biased");
  }

  const auto seed = cfg.seed;
  const auto trial = cfg.trial;
  detail::FieldProcess f1(cfg.source1, RandomStream(seed, stream_id(trial, StreamRole::kSourceField, 1)));
  detail::FieldProcess f2(cfg.source2, RandomStream(seed, stream_id(trial, StreamRole::kSourceField, 2)));
  const DetectorSetting* det[2] = {&cfg.detector_a, &cfg.detector_b};
  std::array<std::array<Complex, 2>, 2> w{detector_weights(cfg.geometry, cfg.detector_a, false),
                                          detector_weights(cfg.geometry, cfg.detector_b, true)};
  detail::ArrivalGenerator gen[2] = {
      detail::ArrivalGenerator(RandomStream(seed, stream_id(trial, StreamRole::kPhotons, 0))),
      detail::ArrivalGenerator(RandomStream(seed, stream_id(trial, StreamRole::kPhotons, 1)))};
  RandomStream thin[2] = {RandomStream(seed, stream_id(trial, StreamRole::kThinning, 0)),
                          RandomStream(seed, stream_id(trial, StreamRole::kThinning, 1))};
  std::vector<std::int64_t> photons[2];

  const double r1 = cfg.source1.rate, r2 = cfg.source2.rate;
  const double sqrt_r12 = std::sqrt(r1 * r2);
  const double detuning = cfg.source2.detuning;
  double self1[2], self2[2], cross_scale[2];
  Complex cross_w[2];
  for (int x = 0; x < 2; ++x) {
    self1[x] = std::norm(w[x][0]) * r1;
    self2[x] = std::norm(w[x][1]) * r2;
    cross_w[x] = w[x][0] * std::conj(w[x][1]);
    cross_scale[x] = 2.0 * std::sqrt(det[x]->visibility_degradation) * sqrt_r12;
  }

  const std::int64_t slot = out.slot;
  // Detuning phase of source 2 at each slot midpoint.
  detail::PhaseRamp ramp(detuning, 0.5 * static_cast<double>(slot) * 1e-12, static_cast<double>(slot) * 1e-12);
  std::uint64_t k = 0;
  for (std::int64_t start = 0; start < cfg.duration; start += slot, ++k) {
    const std::int64_t len = std::min(slot, cfg.duration - start);
    const double len_s = static_cast<double>(len) * 1e-12;
    const Complex e1 = f1.value();
    Complex e2 = f2.value();
    if (detuning != 0.0) e2 *= len == slot ? ramp.at(k) : std::polar(1.0, kTwoPi * detuning * (static_cast<double>(start) + 0.5 * static_cast<double>(len)) * 1e-12);
    const double i1 = std::norm(e1), i2 = std::norm(e2);
    const Complex beat = e1 * std::conj(e2);
    for (int x = 0; x < 2; ++x) {
      const double rate =
          std::max(0.0, self1[x] * i1 + self2[x] * i2 + cross_scale[x] * std::real(cross_w[x] * beat));
      const double eff = det[x]->efficiency;
      gen[x].slot(start, len, rate * len_s, [&](std::int64_t t) {
        if (thin[x].uniform() < eff) photons[x].push_back(t);
      });
    }
    f1.advance(len_s);
    f2.advance(len_s);
  }

  EventStream* streams[2] = {&out.a, &out.b};
  for (int x = 0; x < 2; ++x) {
    auto darks = detail::dark_counts(det[x]->dark_count_rate, cfg.duration,
                                     RandomStream(seed, stream_id(trial, StreamRole::kDark, static_cast<std::uint8_t>(x))));
    photons[x].erase(std::unique(photons[x].begin(), photons[x].end()), photons[x].end());
    streams[x]->detector = x == 0 ? DetectorId::kA : DetectorId::kB;
    streams[x]->timestamps = detail::merge_unique(photons[x], darks);
    streams[x]->duration = cfg.duration;
    streams[x]->seed = seed;
  }
  return out;
}

/// Keeps each event independently with probability `efficiency`, one uniform
/// draw per event in time order.
inline EventStream thin_stream(const EventStream& in, double efficiency, RandomStream rng) {
  EventStream out = in;
  out.timestamps.clear();
  for (auto t : in.timestamps)
    if (rng.uniform() < efficiency) out.timestamps.push_back(t);
  return out;
}

/// CSV with header detector_id,timestamp_ps; rows sorted by time, A before B on ties.
inline void write_events_csv(std::ostream& os, const EventStream& a, const EventStream& b) {
  os << "detector_id,timestamp_ps\n";
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j >= b.size() || (i < a.size() && a.timestamps[i] <= b.timestamps[j]))
      os << detector_name(a.detector) << ',' << a.timestamps[i++] << '\n';
    else
      os << detector_name(b.detector) << ',' << b.timestamps[j++] << '\n';
  }
}

inline std::pair<EventStream, EventStream> read_events_csv(std::istream& is, std::int64_t duration) {
  std::pair<EventStream, EventStream> out;
  out.first.detector = DetectorId::kA;
  out.second.detector = DetectorId::kB;
  out.first.duration = out.second.duration = duration;
  std::string line;
  if (!std::getline(is, line) || line != "detector_id,timestamp_ps") throw InvalidArgument("event file: bad header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma != 1 || (line[0] != 'A' && line[0] != 'B')) throw InvalidArgument("event file: bad row '" + line + "'");
    const std::int64_t t = std::stoll(line.substr(2));
    (line[0] == 'A' ? out.first : out.second).timestamps.push_back(t);
  }
  out.first.validate();
  out.second.validate();
  return out;
}

}  // namespace colorhbt
