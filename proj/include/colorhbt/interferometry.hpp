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

// Closed-form chromatic intensity interferometry with two color-erasure
// detectors A and B and two sources 1 (gamma1 color) and 2 (gamma2 color).
//
// Two families of observables live here:
//  * post-selected coincidence probabilities for few-photon sources
//    (single photons, coherent superpositions and incoherent mixtures of
//    0..2 photons), and
//  * normalized intensity correlations g2 for classical fields (lasers and
//    single-mode thermal light), which is what the event simulator realizes.

#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <variant>
#include <vector>

#include "colorhbt/core.hpp"
#include "colorhbt/erasure.hpp"
#include "colorhbt/fit.hpp"

namespace colorhbt {

struct PathLengths {
  double l1a = 0.0;
  double l1b = 0.0;
  double l2a = 0.0;
  double l2b = 0.0;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Sources and detectors in one plane; path lengths are Euclidean distances.
struct PlanarLayout {
  Point2 source1;
  Point2 source2;
  Point2 detector_a;
  Point2 detector_b;
};

struct InterferometerGeometry {
  double lambda1 = 1549.800e-9;  // m
  double lambda2 = 863.344e-9;   // m
  std::optional<double> lambda3 = 1949.157e-9;  // pump; unset for same-wavelength setups
  PathLengths paths{1.0, 1.0, 1.0, 1.0};
  double delay_b = 0.0;  // extra optical path in arm B, both colors

  static InterferometerGeometry from_layout(double lambda1, double lambda2, std::optional<double> lambda3,
                                            const PlanarLayout& layout) {
    auto dist = [](Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); };
    InterferometerGeometry g;
    g.lambda1 = lambda1;
    g.lambda2 = lambda2;
    g.lambda3 = lambda3;
    g.paths = {dist(layout.source1, layout.detector_a), dist(layout.source1, layout.detector_b),
               dist(layout.source2, layout.detector_a), dist(layout.source2, layout.detector_b)};
    return g;
  }

  bool same_wavelength() const { return lambda1 == lambda2; }

  /// Path lengths with the arm-B delay applied.
  PathLengths effective_paths() const { return {paths.l1a, paths.l1b + delay_b, paths.l2a, paths.l2b + delay_b}; }

  InterferometerGeometry with_delay(double delay) const {
    auto g = *this;
    g.delay_b = delay;
    return g;
  }

  /// lambda3 if given, otherwise the energy-conserving value.
  double pump_wavelength() const {
    if (lambda3) return *lambda3;
    const double inv = 1.0 / lambda2 - 1.0 / lambda1;
    if (inv == 0.0) throw InvalidArgument("same-wavelength geometry has no pump wavelength");
    return 1.0 / std::abs(inv);
  }

  void validate() const {
    if (!(lambda1 > 0.0 && lambda2 > 0.0)) throw InvalidArgument("wavelengths must be positive");
    const auto p = effective_paths();
    if (!(p.l1a > 0.0 && p.l1b > 0.0 && p.l2a > 0.0 && p.l2b > 0.0))
      throw InvalidArgument("path lengths must be positive");
    if (lambda3) {
      if (!(*lambda3 > 0.0)) throw InvalidArgument("pump wavelength must be positive");
      const double expect = 1.0 / lambda2 - 1.0 / lambda1;
      if (std::abs(expect - 1.0 / *lambda3) > 1e-6 / *lambda3)
        throw InvalidArgument("pump wavelength violates 1/l3 = 1/l2 - 1/l1");
    } else if (!same_wavelength()) {
      throw InvalidArgument("pump wavelength required for two-color geometry");
    }
  }
};

/// Ideal fringe frequency when scanning the arm-B delay: the pump frequency.
inline double pump_frequency(const InterferometerGeometry& g) { return kSpeedOfLight / g.pump_wavelength(); }

struct SourcePhases {
  double theta1 = 0.0;
  double theta2 = 0.0;
};

struct Amplitudes {
  Complex d1a, d1b, d2a, d2b;

  /// Applies emission phases to the zero-phase amplitudes.
  Amplitudes with_phases(SourcePhases p) const {
    const Complex e1 = std::polar(1.0, p.theta1), e2 = std::polar(1.0, p.theta2);
    return {d1a * e1, d1b * e1, d2a * e2, d2b * e2};
  }
};

namespace detail {

// 2 pi (len / lambda mod 1). Paths are ~1e6 wavelengths, so the quotient is
// split into its rounded value and the exact fma residual before reducing.
inline double path_phase(double len, double lambda) {
  const double q = len / lambda;
  const double residual = std::fma(-q, lambda, len) / lambda;
  return kTwoPi * ((q - std::nearbyint(q)) + residual);
}

}  // namespace detail

/// D_kX = (1/sqrt 2) exp(i 2 pi L_kX / lambda_k + i theta_k).
inline Amplitudes amplitudes(const InterferometerGeometry& g, SourcePhases phases = {}) {
  const auto p = g.effective_paths();
  const double r = 1.0 / std::sqrt(2.0);
  auto d = [&](double len, double lambda, double theta) {
    return std::polar(r, detail::path_phase(len, lambda) + theta);
  };
  return {d(p.l1a, g.lambda1, phases.theta1), d(p.l1b, g.lambda1, phases.theta1), d(p.l2a, g.lambda2, phases.theta2),
          d(p.l2b, g.lambda2, phases.theta2)};
}

/// 2 pi (L1A/l1 + L2B/l2 - L1B/l1 - L2A/l2); emission phases drop out.
inline double fringe_phase(const InterferometerGeometry& g) {
  const auto p = g.effective_paths();
  // Path differences first: balanced arms then cost no precision.
  return kTwoPi * ((p.l1a - p.l1b) / g.lambda1 + (p.l2b - p.l2a) / g.lambda2);
}

struct CoincidenceResult {
  double probability = 0.0;
  double interference_term = 0.0;
  double constant_term = 0.0;
};

namespace detail {

// Amplitude for a gamma1 (u1) or gamma2 (u2) photon to leave a detector in
// the filtered color.
struct ExitAmplitudes {
  Complex u1, u2;
};

inline ExitAmplitudes exit_amplitudes(double theta, double phi, OutputFilter filter) {
  const auto u = effective_rotation(theta, phi);
  const int row = filter == OutputFilter::kGamma1 ? 0 : 1;
  return {u(row, 0), u(row, 1)};
}

}  // namespace detail

/// One photon per source, post-selected on the filtered color at both detectors:
/// cos^2 sin^2 |D1A D2B + D1B D2A|^2 for the gamma2 filter.
inline CoincidenceResult coincidence_single_photon(const Amplitudes& d, double theta, double phi = 0.0,
                                                   OutputFilter filter = OutputFilter::kGamma2) {
  const auto [u1, u2] = detail::exit_amplitudes(theta, phi, filter);
  const double w = std::norm(u1 * u2);
  CoincidenceResult r;
  r.constant_term = w * (std::norm(d.d1a * d.d2b) + std::norm(d.d1b * d.d2a));
  r.interference_term = 2.0 * w * std::real(d.d1a * d.d2b * std::conj(d.d1b) * std::conj(d.d2a));
  r.probability = std::norm(d.d1a * d.d2b + d.d1b * d.d2a) * w;
  return r;
}

using PhotonAmplitudes = std::array<Complex, 3>;     // c0, c1, c2
using PhotonProbabilities = std::array<double, 3>;  // p0, p1, p2

/// Term-by-term coincidence probability for sources in coherent superpositions
/// of 0, 1, 2 photons. The names follow the order of the displayed expansion.
struct SuperpositionTerms {
  double pair_term = 0.0;           // |c1 d1|^2 cos^2 sin^2 |D1A D2B + D1B D2A|^2
  double gamma1_pair_term = 0.0;    // |c2 d0|^2 sin^4 |D1A D1B|^2
  double gamma2_pair_term = 0.0;    // |c0 d2|^2 cos^4 |D2A D2B|^2
  double cross_gamma1_term = 0.0;   // 2 cos sin^3 Re(...)
  double cross_gamma2_term = 0.0;   // 2 cos^3 sin Re(...)
  double cross_pairs_term = 0.0;    // 2 cos^2 sin^2 Re(...)
  double hbt_interference = 0.0;    // phase-sensitive part of pair_term

  double total() const {
    return pair_term + gamma1_pair_term + gamma2_pair_term + cross_gamma1_term + cross_gamma2_term +
           cross_pairs_term;
  }

  /// The three lines that depend on the emission phases.
  double phase_dependent() const { return cross_gamma1_term + cross_gamma2_term + cross_pairs_term; }

  CoincidenceResult result() const {
    CoincidenceResult r;
    r.probability = total();
    r.interference_term = hbt_interference + phase_dependent();
    r.constant_term = r.probability - r.interference_term;
    return r;
  }
};

inline SuperpositionTerms superposition_terms(const Amplitudes& d, double theta, double phi,
                                              const PhotonAmplitudes& c, const PhotonAmplitudes& dd,
                                              OutputFilter filter = OutputFilter::kGamma2) {
  const auto [u1, u2] = detail::exit_amplitudes(theta, phi, filter);
  const Complex x = d.d1a * d.d2b + d.d1b * d.d2a;
  // For the gamma2 filter u1 u2 = e^{i phi} cos sin, u1^2 = e^{2 i phi} sin^2, u2^2 = cos^2.
  const Complex a_pair = c[1] * dd[1] * u1 * u2 * x;
  const Complex a_g1 = c[2] * dd[0] * u1 * u1 * d.d1a * d.d1b;
  const Complex a_g2 = c[0] * dd[2] * u2 * u2 * d.d2a * d.d2b;
  SuperpositionTerms t;
  t.pair_term = std::norm(a_pair);
  t.gamma1_pair_term = std::norm(a_g1);
  t.gamma2_pair_term = std::norm(a_g2);
  t.cross_gamma1_term = 2.0 * std::real(a_pair * std::conj(a_g1));
  t.cross_gamma2_term = 2.0 * std::real(a_pair * std::conj(a_g2));
  t.cross_pairs_term = 2.0 * std::real(a_g1 * std::conj(a_g2));
  t.hbt_interference = 2.0 * std::norm(c[1] * dd[1] * u1 * u2) *
                       std::real(d.d1a * d.d2b * std::conj(d.d1b) * std::conj(d.d2a));
  return t;
}

inline CoincidenceResult coincidence_superposition(const Amplitudes& d, double theta, double phi,
                                                   const PhotonAmplitudes& c, const PhotonAmplitudes& dd,
                                                   OutputFilter filter = OutputFilter::kGamma2) {
  return superposition_terms(d, theta, phi, c, dd, filter).result();
}

/// Averages the superposition probability over emission phases uniform on a
/// grid_size x grid_size grid of [0, 2pi)^2. `d` holds the zero-phase amplitudes.
inline SuperpositionTerms time_average_superposition(const Amplitudes& d, double theta, double phi,
                                                     const PhotonAmplitudes& c, const PhotonAmplitudes& dd,
                                                     int grid_size, OutputFilter filter = OutputFilter::kGamma2) {
  if (grid_size < 4) throw InvalidArgument("phase-average grid must be at least 4 x 4");
  SuperpositionTerms acc;
  for (int i = 0; i < grid_size; ++i)
    for (int j = 0; j < grid_size; ++j) {
      const SourcePhases ph{kTwoPi * i / grid_size, kTwoPi * j / grid_size};
      const auto t = superposition_terms(d.with_phases(ph), theta, phi, c, dd, filter);
      acc.pair_term += t.pair_term;
      acc.gamma1_pair_term += t.gamma1_pair_term;
      acc.gamma2_pair_term += t.gamma2_pair_term;
      acc.cross_gamma1_term += t.cross_gamma1_term;
      acc.cross_gamma2_term += t.cross_gamma2_term;
      acc.cross_pairs_term += t.cross_pairs_term;
      acc.hbt_interference += t.hbt_interference;
    }
  const double n = static_cast<double>(grid_size) * grid_size;
  acc.pair_term /= n;
  acc.gamma1_pair_term /= n;
  acc.gamma2_pair_term /= n;
  acc.cross_gamma1_term /= n;
  acc.cross_gamma2_term /= n;
  acc.cross_pairs_term /= n;
  acc.hbt_interference /= n;
  return acc;
}

/// Incoherent photon-number mixtures {p_i}, {q_i}: no phase-dependent cross lines.
inline CoincidenceResult coincidence_thermal(const Amplitudes& d, double theta, const PhotonProbabilities& p,
                                             const PhotonProbabilities& q, double phi = 0.0,
                                             OutputFilter filter = OutputFilter::kGamma2) {
  const auto [u1, u2] = detail::exit_amplitudes(theta, phi, filter);
  const double w_pair = std::norm(u1 * u2);
  CoincidenceResult r;
  const double pair = p[1] * q[1] * w_pair * std::norm(d.d1a * d.d2b + d.d1b * d.d2a);
  r.interference_term =
      2.0 * p[1] * q[1] * w_pair * std::real(d.d1a * d.d2b * std::conj(d.d1b) * std::conj(d.d2a));
  const double g1 = p[2] * q[0] * std::norm(u1 * u1) * std::norm(d.d1a * d.d1b);
  const double g2 = p[0] * q[2] * std::norm(u2 * u2) * std::norm(d.d2a * d.d2b);
  r.probability = pair + g1 + g2;
  r.constant_term = r.probability - r.interference_term;
  return r;
}

// ---------------------------------------------------------------------------
// Classical fields

enum class FieldStatistics { kCoherent, kThermal };

/// A stationary single-mode field feeding the interferometer.
struct FieldSource {
  double rate = 1e7;  // photons per second into the interferometer
  FieldStatistics statistics = FieldStatistics::kCoherent;
  double coherence_time = std::numeric_limits<double>::infinity();  // s; exp(-|tau|/tc) field correlation
  double detuning = 0.0;  // Hz, frequency offset of the converted field

  void validate() const {
    if (!(rate >= 0.0)) throw InvalidArgument("source rate must be nonnegative");
    if (!(coherence_time > 0.0)) throw InvalidArgument("coherence time must be positive");
  }

  /// <|E|^4> / <|E|^2>^2
  double intensity_moment() const { return statistics == FieldStatistics::kThermal ? 2.0 : 1.0; }

  /// |g1(tau)|
  double coherence(double tau) const {
    if (std::isinf(coherence_time)) return 1.0;
    return std::exp(-std::abs(tau) / coherence_time);
  }
};

/// Linewidth (FWHM, Hz) to coherence time with the 1/(pi linewidth) convention.
inline double coherence_time_from_linewidth(double linewidth) {
  if (linewidth <= 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (kPi * linewidth);
}

/// Complex weight of each source's field in the filtered output of a detector.
/// Source 2 shares the gamma1 slot when both sources have the same wavelength.
inline std::array<Complex, 2> detector_weights(const InterferometerGeometry& g, const DetectorSetting& det,
                                               bool detector_b) {
  const auto d = amplitudes(g);
  const auto u = effective_rotation(det.theta, det.pump_phase);
  const int row = det.filter == OutputFilter::kGamma1 ? 0 : 1;
  const int slot2 = g.same_wavelength() ? 0 : 1;
  return {u(row, 0) * (detector_b ? d.d1b : d.d1a), u(row, slot2) * (detector_b ? d.d2b : d.d2a)};
}

/// Normalized intensity correlation <I_A(t) I_B(t+tau)> / (<I_A><I_B>) with
/// emission phases averaged, including efficiencies, dark counts and the
/// visibility degradation (which scales each detector's cross term by sqrt(v)).
/// constant_term is the phase-insensitive pedestal.
inline CoincidenceResult field_correlation(const InterferometerGeometry& g, const FieldSource& s1,
                                           const FieldSource& s2, const DetectorSetting& a,
                                           const DetectorSetting& b, double tau = 0.0) {
  const auto wa = detector_weights(g, a, false);
  const auto wb = detector_weights(g, b, true);
  const double r[2] = {s1.rate, s2.rate};
  const FieldSource* src[2] = {&s1, &s2};
  const double mean_a = a.efficiency * (std::norm(wa[0]) * r[0] + std::norm(wa[1]) * r[1]);
  const double mean_b = b.efficiency * (std::norm(wb[0]) * r[0] + std::norm(wb[1]) * r[1]);
  double pedestal = 0.0;
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l) {
      double m = 1.0;
      if (k == l) {
        const double g1 = src[k]->coherence(tau);
        m = 1.0 + (src[k]->intensity_moment() - 1.0) * g1 * g1;
      }
      pedestal += std::norm(wa[static_cast<std::size_t>(k)]) * std::norm(wb[static_cast<std::size_t>(l)]) * r[k] *
                  r[l] * m;
    }
  pedestal *= a.efficiency * b.efficiency;
  const Complex w = wa[0] * std::conj(wa[1]) * std::conj(wb[0]) * wb[1];
  const double envelope = s1.coherence(tau) * s2.coherence(tau);
  const double cross = 2.0 * std::sqrt(a.visibility_degradation * b.visibility_degradation) * r[0] * r[1] *
                       a.efficiency * b.efficiency * envelope *
                       std::real(w * std::polar(1.0, kTwoPi * s2.detuning * tau));
  pedestal += a.dark_count_rate * mean_b + b.dark_count_rate * mean_a + a.dark_count_rate * b.dark_count_rate;
  const double norm = (mean_a + a.dark_count_rate) * (mean_b + b.dark_count_rate);
  CoincidenceResult out;
  if (norm <= 0.0) return out;
  out.constant_term = pedestal / norm;
  out.interference_term = cross / norm;
  out.probability = out.constant_term + out.interference_term;
  return out;
}

// ---------------------------------------------------------------------------
// Delay scans

struct SinglePhotonSources {};
struct SuperpositionSources {
  PhotonAmplitudes c{0.0, 1.0, 0.0};
  PhotonAmplitudes d{0.0, 1.0, 0.0};
};
struct MixtureSources {
  PhotonProbabilities p{0.0, 1.0, 0.0};
  PhotonProbabilities q{0.0, 1.0, 0.0};
};
struct FieldSources {
  FieldSource source1;
  FieldSource source2;
};

using SourceClass = std::variant<SinglePhotonSources, SuperpositionSources, MixtureSources, FieldSources>;

struct DelayGrid {
  double start = 0.0;  // m
  double step = 0.0;   // m
  int points = 0;

  double at(int i) const { return start + step * i; }
};

struct ScanPoint {
  double delay = 0.0;
  CoincidenceResult result;
};

/// Coincidence vs. arm-B delay. Few-photon classes use detector A's rotation
/// (both detectors identical, emission phases ergodic); field classes return
/// normalized g2. The visibility degradation scales interference terms only.
inline std::vector<ScanPoint> delay_scan(const InterferometerGeometry& geometry, const DelayGrid& grid,
                                         const SourceClass& sources, const DetectorSetting& a,
                                         const DetectorSetting& b) {
  a.validate();
  b.validate();
  std::vector<ScanPoint> out;
  out.reserve(static_cast<std::size_t>(std::max(grid.points, 0)));
  const double v = std::sqrt(a.visibility_degradation * b.visibility_degradation);
  for (int i = 0; i < grid.points; ++i) {
    const auto g = geometry.with_delay(grid.at(i));
    const auto d = amplitudes(g);
    CoincidenceResult r = std::visit(
        [&](const auto& s) -> CoincidenceResult {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, SinglePhotonSources>) {
            return coincidence_single_photon(d, a.theta, a.pump_phase, a.filter);
          } else if constexpr (std::is_same_v<T, SuperpositionSources>) {
            return time_average_superposition(d, a.theta, a.pump_phase, s.c, s.d, 16, a.filter).result();
          } else if constexpr (std::is_same_v<T, MixtureSources>) {
            return coincidence_thermal(d, a.theta, s.p, s.q, a.pump_phase, a.filter);
          } else {
            return field_correlation(g, s.source1, s.source2, a, b);
          }
        },
        sources);
    if (!std::holds_alternative<FieldSources>(sources)) {
      r.interference_term *= v;
      r.probability = r.constant_term + r.interference_term;
    }
    out.push_back({grid.at(i), r});
  }
  return out;
}

/// (max - min) / (max + min) of the least-squares sinusoid at the pump fringe rate.
inline SinusoidFit scan_visibility(std::span<const ScanPoint> scan, double pump_wavelength) {
  std::vector<double> x, y;
  for (const auto& p : scan) {
    x.push_back(p.delay);
    y.push_back(p.result.probability);
  }
  return fit_sinusoid(x, y, kTwoPi / pump_wavelength);
}

/// CSV: delay_m,probability,constant_term,interference_term (12 significant digits).
inline void write_scan_csv(std::ostream& os, std::span<const ScanPoint> scan) {
  os << "delay_m,probability,constant_term,interference_term\n";
  char buf[160];
  for (const auto& p : scan) {
    std::snprintf(buf, sizeof buf, "%.11e,%.11e,%.11e,%.11e\n", p.delay, p.result.probability,
                  p.result.constant_term, p.result.interference_term);
    os << buf;
  }
}

}  // namespace colorhbt
