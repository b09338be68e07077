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


// Built-in self-test. The fast level runs analytic identities; the full level
// adds the Fock-space oracles and the statistical checks on simulated events.
// A sign flip of the effective Hamiltonian can be injected into the oracle to
// confirm the reduction check is able to fail.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "colorhbt/erasure.hpp"
#include "colorhbt/events.hpp"
#include "colorhbt/fock.hpp"
#include "colorhbt/g2.hpp"
#include "colorhbt/interferometry.hpp"
#include "colorhbt/lab.hpp"
#include "colorhbt/oracle.hpp"
#include "colorhbt/stats.hpp"

namespace colorhbt {

enum class SelftestLevel { kFast, kFull };

struct SelftestOptions {
  SelftestLevel level = SelftestLevel::kFast;
  bool inject_heff_sign = false;
};

struct SelftestCheck {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct SelftestReport {
  std::vector<SelftestCheck> checks;

  bool passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

inline InterferometerGeometry balanced_geometry(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> base(0.1, 10.0), off(-50e-6, 50e-6);
  InterferometerGeometry g;
  const double l = base(rng);
  g.paths = {l + off(rng), l + off(rng), l + off(rng), l + off(rng)};
  return g;
}

inline PhotonAmplitudes random_amplitudes(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  PhotonAmplitudes c{Complex(n(rng), n(rng)), Complex(n(rng), n(rng)), Complex(n(rng), n(rng))};
  const double norm = std::sqrt(std::norm(c[0]) + std::norm(c[1]) + std::norm(c[2]));
  for (auto& x : c) x /= norm;
  return c;
}

// Largest amplitude difference between the closed-form map and brute-force
// exponentiation (on a basis with one extra pump shell).
inline double closed_form_error(double n_mean, double theta, SignalInput input) {
  const auto basis = FockBasis::for_pump(n_mean);
  const bool g1 = input == SignalInput::kGamma1;
  const auto in = product_state(g1 ? 1 : 0, g1 ? 0 : 1, {n_mean, 0.6}, basis);
  const double chi_t = theta / std::sqrt(n_mean);
  const auto closed = evolve_closed_form(in, chi_t);
  const FockBasis wide(1, 1, basis.n3_max() + 1);
  const auto brute = change_basis(evolve_brute_force(change_basis(in, wide), TrilinearHamiltonian{1.0}, chi_t), basis);
  return (closed.amplitudes() - brute.amplitudes()).cwiseAbs().maxCoeff();
}

inline SelftestCheck closed_form_check(std::initializer_list<double> ns) {
  double worst = 0.0;
  for (double n : ns)
    for (double theta : {kPi / 8, kPi / 4, kPi / 2})
      for (auto in : {SignalInput::kGamma1, SignalInput::kGamma2})
        worst = std::max(worst, closed_form_error(n, theta, in));
  std::string label = "N in {";
  for (double n : ns) label += num(n) + ",";
  label.back() = '}';
  return {"closed_form_vs_brute_force", worst <= 1e-10, label + " max |diff| " + num(worst)};
}

inline std::vector<std::function<SelftestCheck()>> fast_checks() {
  std::vector<std::function<SelftestCheck()>> c;
  c.push_back([] { return closed_form_check({1.0, 4.0}); });

  c.push_back([] {
    double worst = 0.0;
    for (double theta : {0.1, kPi / 4, 1.3})
      for (double phi : {0.0, 0.7, 2.5}) {
        worst = std::max(worst, std::abs(phi1_state(theta, phi).vector().dot(phi2_state(theta, phi).vector())));
        const auto u = effective_rotation(theta, phi);
        worst = std::max(worst, (u.adjoint() * u - ColorUnitary::Identity()).cwiseAbs().maxCoeff());
      }
    return SelftestCheck{"color_rotation_orthogonal", worst <= 1e-12, "max deviation " + num(worst)};
  });

  c.push_back([] {
    std::mt19937_64 rng(101);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      const auto g = balanced_geometry(rng);
      const double p = coincidence_single_photon(amplitudes(g), kPi / 4).probability;
      worst = std::max(worst, std::abs(p - 0.125 * (1.0 + std::cos(fringe_phase(g)))));
    }
    return SelftestCheck{"fringe_identity", worst <= 1e-12, "max |diff| " + num(worst)};
  });

  c.push_back([] {
    std::mt19937_64 rng(102);
    double lines = 0.0, reduce = 0.0;
    for (int i = 0; i < 10; ++i) {
      const auto d = amplitudes(balanced_geometry(rng));
      const auto a = random_amplitudes(rng), b = random_amplitudes(rng);
      const auto avg = time_average_superposition(d, 0.8, 0.3, a, b, 16);
      lines = std::max({lines, std::abs(avg.cross_gamma1_term), std::abs(avg.cross_gamma2_term),
                        std::abs(avg.cross_pairs_term)});
      const PhotonProbabilities p{std::norm(a[0]), std::norm(a[1]), std::norm(a[2])};
      const PhotonProbabilities q{std::norm(b[0]), std::norm(b[1]), std::norm(b[2])};
      reduce = std::max(reduce, std::abs(avg.total() - coincidence_thermal(d, 0.8, p, q, 0.3).probability));
    }
    return SelftestCheck{"phase_average", lines < 1e-10 && reduce < 1e-3,
                         "phase lines " + num(lines) + ", vs mixture " + num(reduce)};
  });

  c.push_back([] {
    std::mt19937_64 rng(103);
    const PhotonAmplitudes one{0.0, 1.0, 0.0};
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      const auto d = amplitudes(balanced_geometry(rng));
      const double theta = std::uniform_real_distribution<double>(0.0, kPi)(rng);
      worst = std::max(worst, std::abs(coincidence_superposition(d, theta, 0.3, one, one).probability -
                                       coincidence_single_photon(d, theta, 0.3).probability));
    }
    return SelftestCheck{"superposition_reduces_to_single_photon", worst <= 1e-12, "max |diff| " + num(worst)};
  });

  c.push_back([] {
    const std::int64_t a[] = {1, 5, 31}, b[] = {9, 10, 30, 39};
    const auto counts = count_coincidences(a, b, 10, -3, 3, 0, 10);
    const bool ok = counts.at(0) == 4 && counts.at(1) == 2 && counts.at(3) == 4 && counts.at(-3) == 1 &&
                    counts.at(2) == 0 && counts.n_a == 3 && counts.n_b == 4;
    return SelftestCheck{"coincidence_hand_count", ok, ok ? "exact" : "count mismatch"};
  });

  c.push_back([] {
    const double lambda3 = 1949.157e-9;
    std::vector<double> x, y;
    for (int i = 0; i < 64; ++i) {
      x.push_back(i * 10 * lambda3 / 64);
      y.push_back(1.0 + 0.5 * std::cos(kTwoPi * x.back() / lambda3));
    }
    const auto s = fringe_fft(x, y);
    const double off = std::abs(s.peak_frequency - kSpeedOfLight / lambda3) / s.bin_width;
    return SelftestCheck{"fft_synthetic_peak", off <= 1.0 && s.has_peak(), "peak offset " + num(off) + " bins"};
  });

  c.push_back([] {
    InterferometerGeometry g;
    FieldSource laser, lamp, off;
    lamp.statistics = FieldStatistics::kThermal;
    off.rate = 0.0;
    DetectorSetting plain;
    plain.theta = 0.0;
    plain.filter = OutputFilter::kGamma1;
    const double coherent = field_correlation(g, laser, off, plain, plain).probability;
    const double thermal = field_correlation(g, lamp, off, plain, plain).probability;
    const bool ok = std::abs(coherent - 1.0) < 1e-12 && std::abs(thermal - 2.0) < 1e-12;
    return SelftestCheck{"field_correlation_baselines", ok, "coherent " + num(coherent) + ", thermal " + num(thermal)};
  });
  return c;
}

inline SimulationConfig one_source(FieldStatistics stats, double rate, double coherence_time) {
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

inline std::vector<std::function<SelftestCheck()>> full_checks(const SelftestOptions& opt) {
  std::vector<std::function<SelftestCheck()>> c;
  c.push_back([opt] {
    OracleOptions o;
    o.flip_effective_sign = opt.inject_heff_sign;
    std::mt19937_64 rng(201);
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
      const auto d = amplitudes(balanced_geometry(rng), {0.7 * i, 0.2 * i});
      const auto a = random_amplitudes(rng), b = random_amplitudes(rng);
      for (double theta : {kPi / 8, kPi / 4, 1.2})
        for (double phi : {0.0, 0.9})
          for (auto f : {OutputFilter::kGamma2, OutputFilter::kGamma1})
            worst = std::max(worst, std::abs(coincidence_superposition(d, theta, phi, a, b, f).probability -
                                             coincidence_superposition_oracle(d, theta, phi, a, b, f, o)));
    }
    return SelftestCheck{"hbt_reduction_vs_fock_oracle", worst <= 1e-8,
                         std::string(opt.inject_heff_sign ? "[H_eff sign flipped] " : "") + "max |diff| " +
                             num(worst)};
  });

  c.push_back([] { return closed_form_check({16.0, 64.0}); });

  c.push_back([] {
    // 1 - |<Psi1~|Psi2~>| must fall at least as fast as 1/sqrt(N).
    double prev = 0.0, prev_n = 0.0;
    bool ok = true;
    std::string detail;
    for (double n : {4.0, 16.0, 64.0}) {
      const double delta = 1.0 - erasure_overlap(n, kPi / 4, 0.0);
      ok = ok && delta > 0.0;
      if (prev_n > 0.0) ok = ok && delta < prev && delta * std::sqrt(n) <= prev * std::sqrt(prev_n);
      detail += "N=" + num(n) + ": " + num(delta) + " ";
      prev = delta;
      prev_n = n;
    }
    return SelftestCheck{"overlap_scaling", ok, detail};
  });

  c.push_back([] {
    SimulationConfig cfg = one_source(FieldStatistics::kCoherent, 0.0, std::numeric_limits<double>::infinity());
    cfg.detector_a.dark_count_rate = 2e6;
    cfg.detector_b.dark_count_rate = 3e6;
    cfg.duration = 100'000'000'000;
    const auto sim = simulate_events(cfg);
    const std::int64_t taus[] = {-3000, 0, 3000};
    double worst = 0.0;
    bool ok = true;
    for (const auto& p : estimate_g2(sim.a, sim.b, taus, 1000)) {
      ok = ok && p.g2 && std::abs(*p.g2 - 1.0) < 5.0 / std::sqrt(static_cast<double>(p.n_coincidence));
      if (p.g2) worst = std::max(worst, std::abs(*p.g2 - 1.0));
    }
    return SelftestCheck{"independent_poisson_g2", ok, "max |g2-1| " + num(worst)};
  });

  c.push_back([] {
    auto cfg = one_source(FieldStatistics::kThermal, 1e8, 20e-9);
    cfg.duration = 20'000'000'000;
    const auto sim = simulate_events(cfg);
    const auto g = estimate_g2(sim.a, sim.b, std::int64_t{0}, 200);
    const bool ok = g && std::abs(*g - 2.0) < 0.1;
    return SelftestCheck{"thermal_splitter_g2", ok, "g2(0) " + num(g ? *g : -1.0)};
  });

  c.push_back([] {
    auto cfg = one_source(FieldStatistics::kThermal, 1e9, 100e-9);
    cfg.duration = 30'000'000'000;
    const auto sim = simulate_events(cfg);
    const std::int64_t bin = 2000, stride = 1'000'000;
    const auto n = static_cast<std::size_t>(cfg.duration / stride);
    std::vector<double> per(n, 0.0);
    for (auto t : sim.a.timestamps)
      if (t % stride < bin) per[static_cast<std::size_t>(t / stride)] += 1.0;
    double mean = 0.0;
    for (double x : per) mean += x;
    mean /= static_cast<double>(n);
    std::vector<double> hist(40, 0.0), expected;
    for (double x : per)
      if (x < 40) hist[static_cast<std::size_t>(x)] += 1.0;
    for (double p : bose_einstein_pmf(mean, 40)) expected.push_back(p * static_cast<double>(n));
    const auto fit = chi_squared_test(hist, expected, 1);
    return SelftestCheck{"bose_einstein_counts", fit.p_value > 0.01, "chi2 p " + num(fit.p_value)};
  });

  c.push_back([] {
    SimulationConfig cfg;
    cfg.source1.rate = 2e7;
    cfg.source2.rate = 2e7;
    cfg.source1.coherence_time = 100e-9;
    cfg.duration = 5'000'000'000;
    const double lambda3 = cfg.geometry.pump_wavelength();
    std::vector<double> delays;
    for (int i = 0; i < 32; ++i) delays.push_back(i * 10 * lambda3 / 32);
    const auto fit = fit_delay_scan(simulate_delay_scan(cfg, delays, 1000), lambda3);
    return SelftestCheck{"laser_delay_scan_visibility", std::abs(fit.visibility - 0.5) <= 0.03,
                         "V " + num(fit.visibility) + " +- " + num(fit.visibility_stderr)};
  });
  return c;
}

}  // namespace detail

inline SelftestReport run_selftest(const SelftestOptions& opt = {}) {
  auto checks = detail::fast_checks();
  if (opt.level == SelftestLevel::kFull)
    for (auto& f : detail::full_checks(opt)) checks.push_back(std::move(f));
  SelftestReport report;
  for (const auto& check : checks) {
    const auto t0 = std::chrono::steady_clock::now();
    SelftestCheck r;
    try {
      r = check();
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("threw: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.checks.push_back(std::move(r));
  }
  return report;
}

inline void print_report(std::ostream& os, const SelftestReport& r) {
  for (const auto& c : r.checks) {
    char buf[48];
    std::snprintf(buf, sizeof buf, " (%.2f s)", c.seconds);
    os << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << buf << '\n';
  }
  std::size_t failed = 0;
  for (const auto& c : r.checks) failed += !c.passed;
  os << (failed ? "selftest FAILED: " : "selftest passed: ") << r.checks.size() - failed << '/' << r.checks.size()
     << " checks\n";
}

}  // namespace colorhbt
