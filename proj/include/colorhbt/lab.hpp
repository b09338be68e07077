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

// Simulated experiments built from event streams: delay scans, their Fourier
// spectrum, the gate-time study and g2 versus detector offset.

#pragma once

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdio>
#include <exception>
#include <ostream>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "colorhbt/core.hpp"
#include "colorhbt/events.hpp"
#include "colorhbt/fit.hpp"
#include "colorhbt/g2.hpp"
#include "colorhbt/interferometry.hpp"

namespace colorhbt {

/// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is
/// handled exactly once; results must be written to per-index slots.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, unsigned threads = 0) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

struct ScanSample {
  double delay = 0.0;  // m
  G2Point point;
};

/// g2 at lag tau for each arm-B delay and each gate, from one simulation per
/// delay (trial = base.trial + index). result[gate][delay].
inline std::vector<std::vector<ScanSample>> simulate_delay_scan(const SimulationConfig& base,
                                                                std::span<const double> delays,
                                                                std::span<const std::int64_t> gates,
                                                                std::int64_t tau = 0, unsigned threads = 0) {
  std::vector<std::vector<ScanSample>> out(gates.size(), std::vector<ScanSample>(delays.size()));
  parallel_for(
      delays.size(),
      [&](std::size_t i) {
        SimulationConfig cfg = base;
        cfg.geometry = base.geometry.with_delay(delays[i]);
        cfg.trial = base.trial + i;
        const auto sim = simulate_events(cfg);
        for (std::size_t g = 0; g < gates.size(); ++g) {
          const std::int64_t taus[1] = {tau};
          out[g][i] = {delays[i], estimate_g2(sim.a, sim.b, taus, gates[g]).front()};
        }
      },
      threads);
  return out;
}

inline std::vector<ScanSample> simulate_delay_scan(const SimulationConfig& base, std::span<const double> delays,
                                                   std::int64_t gate, std::int64_t tau = 0, unsigned threads = 0) {
  const std::int64_t gates[1] = {gate};
  return std::move(simulate_delay_scan(base, delays, gates, tau, threads).front());
}

/// Same as simulate_delay_scan but sweeping any geometry (e.g. detector
/// position); geometries[i] replaces base.geometry for trial i.
inline std::vector<G2Point> simulate_geometry_scan(const SimulationConfig& base,
                                                   std::span<const InterferometerGeometry> geometries,
                                                   std::int64_t gate, unsigned threads = 0) {
  std::vector<G2Point> out(geometries.size());
  parallel_for(
      geometries.size(),
      [&](std::size_t i) {
        SimulationConfig cfg = base;
        cfg.geometry = geometries[i];
        cfg.trial = base.trial + i;
        const auto sim = simulate_events(cfg);
        const std::int64_t taus[1] = {0};
        out[i] = estimate_g2(sim.a, sim.b, taus, gate).front();
      },
      threads);
  return out;
}

inline void write_delay_scan_csv(std::ostream& os, std::span<const ScanSample> scan) {
  os << "delay_m,g2,n_coincidence,n_A,n_B,n_bin\n";
  char buf[64];
  for (const auto& s : scan) {
    std::snprintf(buf, sizeof buf, "%.11e,", s.delay);
    os << buf;
    if (s.point.g2) {
      std::snprintf(buf, sizeof buf, "%.12g", *s.point.g2);
      os << buf;
    }
    os << ',' << s.point.n_coincidence << ',' << s.point.n_a << ',' << s.point.n_b << ',' << s.point.n_bin << '\n';
  }
}

/// Delays and g2 values with undefined points dropped.
inline std::pair<std::vector<double>, std::vector<double>> scan_series(std::span<const ScanSample> scan) {
  std::pair<std::vector<double>, std::vector<double>> xy;
  for (const auto& s : scan)
    if (s.point.g2) {
      xy.first.push_back(s.delay);
      xy.second.push_back(*s.point.g2);
    }
  return xy;
}

/// Known-period fit of a simulated delay scan at the pump fringe rate.
inline SinusoidFit fit_delay_scan(std::span<const ScanSample> scan, double pump_wavelength) {
  const auto [x, y] = scan_series(scan);
  return fit_sinusoid(x, y, kTwoPi / pump_wavelength);
}

struct FringeSpectrum {
  std::vector<double> frequency;  // Hz (optical)
  std::vector<double> magnitude;
  std::size_t peak_index = 0;
  double peak_frequency = 0.0;
  double peak_magnitude = 0.0;
  double median_magnitude = 0.0;
  double bin_width = 0.0;  // Hz

  bool has_peak(double factor = 5.0) const { return peak_magnitude > factor * median_magnitude; }
};

/// DFT magnitude of the mean-subtracted fringe; delay is converted to time
/// by dividing by c, so bin k sits at c k / (n step). The DC bin is excluded
/// from the peak search and the median.
inline FringeSpectrum fringe_fft(std::span<const double> delays, std::span<const double> values) {
  const std::size_t n = delays.size();
  if (values.size() != n) throw InvalidArgument("fringe_fft: size mismatch");
  if (n < 16) throw InvalidArgument("fringe_fft needs at least 16 points");
  const double step = (delays[n - 1] - delays[0]) / static_cast<double>(n - 1);
  if (!(step > 0.0)) throw InvalidArgument("fringe_fft: delays must increase");
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(delays[i] - delays[i - 1] - step) > 1e-6 * step)
      throw InvalidArgument("fringe_fft: delay grid is not uniform");

  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> centered(n);
  for (std::size_t i = 0; i < n; ++i) centered[i] = values[i] - mean;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, centered);

  FringeSpectrum out;
  out.bin_width = kSpeedOfLight / (static_cast<double>(n) * step);
  for (std::size_t k = 1; k <= n / 2; ++k) {
    out.frequency.push_back(out.bin_width * static_cast<double>(k));
    out.magnitude.push_back(std::abs(spectrum[k]));
  }
  const auto peak = std::max_element(out.magnitude.begin(), out.magnitude.end());
  out.peak_index = static_cast<std::size_t>(peak - out.magnitude.begin());
  out.peak_frequency = out.frequency[out.peak_index];
  out.peak_magnitude = *peak;
  std::vector<double> sorted = out.magnitude;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
  out.median_magnitude = sorted[sorted.size() / 2];
  return out;
}

struct GateVisibility {
  std::int64_t gate = 0;  // ps
  SinusoidFit fit;
  double ci_low = 0.0;  // 95% normal interval on the visibility
  double ci_high = 0.0;
};

/// Fringe visibility against coincidence gate; every gate is evaluated on
/// the same simulated records.
inline std::vector<GateVisibility> gate_time_study(const SimulationConfig& base, std::span<const double> delays,
                                                   std::span<const std::int64_t> gates, double pump_wavelength,
                                                   unsigned threads = 0) {
  const auto scans = simulate_delay_scan(base, delays, gates, 0, threads);
  std::vector<GateVisibility> out;
  for (std::size_t g = 0; g < gates.size(); ++g) {
    GateVisibility row;
    row.gate = gates[g];
    row.fit = fit_delay_scan(scans[g], pump_wavelength);
    row.ci_low = row.fit.visibility - 1.96 * row.fit.visibility_stderr;
    row.ci_high = row.fit.visibility + 1.96 * row.fit.visibility_stderr;
    out.push_back(row);
  }
  return out;
}

struct TauScan {
  G2Curve curve;
  DampedOscillationFit fit;  // decay_time in ps
};

/// g2 against detector offset from one long record, with a damped-cosine
/// fit at the configured beat frequency (source-2 detuning).
inline TauScan g2_vs_tau_scan(const SimulationConfig& cfg, std::span<const std::int64_t> taus, std::int64_t gate) {
  if (std::isinf(cfg.source1.coherence_time) && std::isinf(cfg.source2.coherence_time))
    throw InvalidArgument("g2 versus tau needs a finite coherence time");
  const auto sim = simulate_events(cfg);
  TauScan out;
  out.curve = estimate_g2(sim.a, sim.b, taus, gate);
  std::vector<double> t, y;
  for (const auto& p : out.curve)
    if (p.g2) {
      t.push_back(static_cast<double>(p.tau));
      y.push_back(*p.g2);
    }
  const double span = t.empty() ? 1.0 : std::max(std::abs(t.front()), std::abs(t.back()));
  out.fit = fit_damped_oscillation(t, y, cfg.source2.detuning * 1e-12, static_cast<double>(gate) * 0.5, 20.0 * span);
  return out;
}

}  // namespace colorhbt
