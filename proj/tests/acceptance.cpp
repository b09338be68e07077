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


// Acceptance run: one PASS/FAIL line per criterion, tolerances as specified.
// Scenario criteria run the shipped default configs through run_scenario.
// Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "colorhbt/erasure.hpp"
#include "colorhbt/fock.hpp"
#include "colorhbt/interferometry.hpp"
#include "colorhbt/scenario.hpp"

namespace {

using namespace colorhbt;
namespace fs = std::filesystem;

int failures = 0;

void report(int id, const char* title, bool ok, const std::string& detail, double seconds) {
  std::printf("%s [%d] %s: %s (%.1f s)\n", ok ? "PASS" : "FAIL", id, title, detail.c_str(), seconds);
  std::fflush(stdout);
  failures += !ok;
}

std::string f(const char* format, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, format, a);
  return buf;
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const fs::path& scratch() {
  static const fs::path dir = [] {
    auto p = fs::temp_directory_path() / "colorhbt_acceptance";
    fs::remove_all(p);
    return p;
  }();
  return dir;
}

Json run(const std::string& name, const std::vector<std::string>& overrides = {}, const std::string& tag = "") {
  auto cfg = ScenarioConfig::defaults(name);
  for (const auto& o : overrides) cfg.apply_override(o);
  return run_scenario(cfg, scratch() / (tag.empty() ? name : tag)).summary;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

InterferometerGeometry balanced_geometry(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> base(0.1, 10.0), off(-50e-6, 50e-6);
  InterferometerGeometry g;
  const double l = base(rng);
  g.paths = {l + off(rng), l + off(rng), l + off(rng), l + off(rng)};
  return g;
}

void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (double n : {1.0, 4.0, 16.0, 64.0})
    for (double theta : {kPi / 8, kPi / 4, kPi / 2})
      for (bool g1 : {true, false}) {
        const auto basis = FockBasis::for_pump(n);
        const auto in = product_state(g1 ? 1 : 0, g1 ? 0 : 1, {n, 0.0}, basis);
        const double chi_t = theta / std::sqrt(n);
        const auto closed = evolve_closed_form(in, chi_t);
        const FockBasis wide(1, 1, basis.n3_max() + 1);
        const auto brute =
            change_basis(evolve_brute_force(change_basis(in, wide), TrilinearHamiltonian{1.0}, chi_t), basis);
        worst = std::max(worst, (closed.amplitudes() - brute.amplitudes()).cwiseAbs().maxCoeff());
      }
  const double s = since(t0);
  report(1, "closed form vs brute force", worst <= 1e-10 && s < 60.0,
         f("max amplitude diff %.2e (tol 1e-10), runtime < 60 s", worst), s);
}

void criterion_2() {
  const auto t0 = std::chrono::steady_clock::now();
  const double d16 = 1.0 - erasure_overlap(16.0, kPi / 4, 0.0);
  const double d64 = 1.0 - erasure_overlap(64.0, kPi / 4, 0.0);
  const double ratio = d64 / d16;
  report(2, "erasure scaling", ratio >= 1.0 / 3.0 && ratio <= 0.75,
         f("delta(64)/delta(16) = %.4f (window [1/3, 3/4], 1/sqrt scaling gives 0.5)", ratio), since(t0));
}

void criterion_3() {
  const auto t0 = std::chrono::steady_clock::now();
  const double n = 64.0;
  double worst_fid = 1.0, worst_dot = 0.0;
  for (double theta : {kPi / 8, kPi / 4, 3 * kPi / 8})
    for (double phi : {0.0, 0.7}) {
      const auto basis = FockBasis::for_pump(n);
      const double chi_t = theta / std::sqrt(n);
      const auto r1 = reduced_signal_density(evolve_closed_form(SignalInput::kGamma1, {n, phi}, chi_t, basis));
      const auto r2 = reduced_signal_density(evolve_closed_form(SignalInput::kGamma2, {n, phi}, chi_t, basis));
      worst_fid = std::min({worst_fid, fidelity(r1, phi1_state(theta, phi)), fidelity(r2, phi2_state(theta, phi))});
      worst_dot = std::max(worst_dot, std::abs(phi1_state(theta, phi).vector().dot(phi2_state(theta, phi).vector())));
    }
  const double bound = 1.0 - 3.0 / std::sqrt(n);
  report(3, "color-rotation limit", worst_fid >= bound && worst_dot <= 1e-12,
         f("min fidelity %.5f (>= 0.625 at N=64)", worst_fid) + f(", |<Phi1|Phi2>| = %.1e (tol 1e-12)", worst_dot),
         since(t0));
}

void criterion_4() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(4);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto g = balanced_geometry(rng);
    worst = std::max(worst, std::abs(coincidence_single_photon(amplitudes(g), kPi / 4).probability -
                                     0.125 * (1.0 + std::cos(fringe_phase(g)))));
  }
  report(4, "fringe identity", worst <= 1e-12, f("max |P - (1 + cos)/8| = %.2e over 1000 geometries (tol 1e-12)", worst),
         since(t0));
}

void criterion_5() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double lines = 0.0, match = 0.0;
  for (int i = 0; i < 50; ++i) {
    PhotonProbabilities p{u(rng), u(rng), u(rng)}, q{u(rng), u(rng), u(rng)};
    const double sp = p[0] + p[1] + p[2], sq = q[0] + q[1] + q[2];
    PhotonAmplitudes c, d;
    for (std::size_t k = 0; k < 3; ++k) {
      p[k] /= sp;
      q[k] /= sq;
      c[k] = std::polar(std::sqrt(p[k]), kTwoPi * u(rng));
      d[k] = std::polar(std::sqrt(q[k]), kTwoPi * u(rng));
    }
    const auto amp = amplitudes(balanced_geometry(rng));
    const double theta = kPi * u(rng), phi = kTwoPi * u(rng);
    const auto avg = time_average_superposition(amp, theta, phi, c, d, 16);
    lines = std::max({lines, std::abs(avg.cross_gamma1_term), std::abs(avg.cross_gamma2_term),
                      std::abs(avg.cross_pairs_term)});
    match = std::max(match, std::abs(avg.total() - coincidence_thermal(amp, theta, p, q, phi).probability));
  }
  report(5, "phase average", lines < 1e-10 && match <= 1e-3,
         f("phase lines %.1e (tol 1e-10)", lines) + f(", |avg - mixture| %.1e (tol 1e-3)", match), since(t0));
}

double laser_visibility = 0.0;

void criterion_6() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto full = run("laser_delay_scan");
  const auto degraded = run("laser_delay_scan", {"detector_a.v_deg=0.8", "detector_b.v_deg=0.8"}, "laser_vdeg");
  const double s = since(t0);
  laser_visibility = full["fit"]["visibility"].get<double>();
  const double mean = full["mean_g2"].get<double>();
  const double v08 = degraded["fit"]["visibility"].get<double>();
  const bool ok = std::abs(laser_visibility - 0.5) <= 0.03 && std::abs(mean - 1.0) <= 0.02 &&
                  std::abs(v08 - 0.4) <= 0.03 && s < 300.0;
  report(6, "laser delay scan", ok,
         f("V = %.4f (0.50 +- 0.03)", laser_visibility) + f(", mean g2 = %.4f (1.00 +- 0.02)", mean) +
             f(", V(v_deg 0.8) = %.4f (0.40 +- 0.03), runtime < 300 s", v08),
         s);
}

void criterion_7() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run("laser_fft");
  const double nu3 = r["pump_frequency_hz"].get<double>();
  const double off = std::abs(r["peak_frequency_hz"].get<double>() - nu3) / r["bin_width_hz"].get<double>();
  const double off_ratio = r["pump_off_peak_to_median"].get<double>();
  report(7, "Fourier peak", off <= 1.0 && off_ratio < 5.0 && r["has_peak"].get<bool>(),
         f("nu3 = c/lambda3 = %.2f THz", nu3 * 1e-12) + f(", peak offset %.2f bins (<= 1)", off) +
             f(", pump-off peak/median %.2f (< 5)", off_ratio),
         since(t0));
}

void criterion_8() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto split = run("thermal_g2_tau");
  const auto fringe = run("thermal_delay_scan");
  const double g0 = split["splitter_g2_0"].get<double>();
  const double base = fringe["fit"]["offset"].get<double>();
  const double v = fringe["fit"]["visibility"].get<double>();
  report(8, "thermal statistics", std::abs(g0 - 2.0) <= 0.1 && base > 1.0 && v < laser_visibility,
         f("splitter g2(0) = %.3f (2.0 +- 0.1)", g0) + f(", fringe baseline %.3f (> 1)", base) +
             f(", V_thermal %.3f", v) + f(" < V_laser %.3f", laser_visibility),
         since(t0));
}

void criterion_9() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run("laser_g2_tau");
  const double ratio = r["decay_ratio"].get<double>();
  report(9, "g2(tau) envelope", std::abs(ratio - 1.0) <= 0.2,
         f("fitted decay %.1f ns", r["decay_time_ps"].get<double>() * 1e-3) +
             f(" vs coherence time %.1f ns", r["expected_decay_ps"].get<double>() * 1e-3) +
             f(", ratio %.3f (1 +- 0.2)", ratio),
         since(t0));
}

void criterion_10() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run("gate_time_study");
  const auto& g = r["gates"];
  const auto& g01 = g["100"];
  const auto& g1 = g["1000"];
  const auto& g200 = g["200000"];
  const bool overlap = g01["ci_low"].get<double>() <= g1["ci_high"].get<double>() &&
                       g1["ci_low"].get<double>() <= g01["ci_high"].get<double>();
  const double ratio = g200["visibility"].get<double>() / g1["visibility"].get<double>();
  report(10, "gate-time study", overlap && ratio < 0.5,
         f("V(0.1 ns) = %.3f", g01["visibility"].get<double>()) + f(", V(1 ns) = %.3f", g1["visibility"].get<double>()) +
             (overlap ? " (95% CIs overlap)" : " (95% CIs disjoint)") + f(", V(200 ns)/V(1 ns) = %.3f (< 0.5)", ratio),
         since(t0));
}

void criterion_11() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto two = run("free_space_hbt");
  const auto same = run("free_space_same_wavelength");
  const double e_two = std::abs(two["period_ratio"].get<double>() - 1.0);
  const double e_same = std::abs(same["period_ratio"].get<double>() - 1.0);
  const double classic = std::abs(same["measured_period_mid_m"].get<double>() / same["classic_hbt_period_m"].get<double>() - 1.0);
  const double v_same = same["fit"]["visibility"].get<double>();
  report(11, "free-space HBT", e_two <= 0.02 && e_same <= 0.02 && classic <= 0.02,
         f("two-color period error %.4f (<= 0.02)", e_two) + f(", same-wavelength period error %.4f", e_same) +
             f(", vs lambda L/d %.4f (<= 0.02)", classic) + f(", same-wavelength V %.3f", v_same),
         since(t0));
}

void criterion_12() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = ScenarioConfig::defaults("laser_delay_scan");
  const auto first = scratch() / "laser_delay_scan";
  const auto again = scratch() / "laser_delay_scan_again";
  const auto r = run_scenario(cfg, again);
  bool identical = true;
  int compared = 0;
  for (const auto& name : r.files) {
    if (name == "manifest.json") continue;  // holds the wall time
    identical = identical && slurp(first / name) == slurp(again / name);
    ++compared;
  }
  report(12, "determinism", identical && compared >= 4,
         std::to_string(compared) + " data files byte-identical across reruns: " + (identical ? "yes" : "no"),
         since(t0));
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  criterion_11();
  criterion_12();
  std::printf("%d of 12 criteria failed\n", failures);
  return failures ? 1 : 0;
}
