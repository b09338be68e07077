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


// Config-driven scenarios. A config is a JSON object merged onto the
// scenario's defaults; unknown keys and wrong types are rejected. Units at the
// boundary: wavelengths nm, times ps, rates counts/s, lengths m, angles rad.
// Each run writes CSVs, summary.json and manifest.json into one directory.

#pragma once

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "colorhbt/core.hpp"
#include "colorhbt/erasure.hpp"
#include "colorhbt/events.hpp"
#include "colorhbt/fit.hpp"
#include "colorhbt/fock.hpp"
#include "colorhbt/g2.hpp"
#include "colorhbt/interferometry.hpp"
#include "colorhbt/lab.hpp"

#ifndef COLORHBT_VERSION
#define COLORHBT_VERSION "0.1.0"
#endif

namespace colorhbt {

using Json = nlohmann::ordered_json;

/// Process exit codes of the command-line tool.
enum class ExitCode : int {
  kSuccess = 0,
  kFailure = 1,
  kConfig = 2,  // unparsable config, unknown key, bad type or invalid parameter combination
  kSelftest = 3,
  kOutput = 4,  // output directory cannot be created or written
  kUnknownScenario = 5,
};

class ConfigError : public Error {
 public:
  ConfigError(ExitCode code, const std::string& what) : Error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {
      "laser_delay_scan", "laser_fft",      "laser_g2_tau",    "thermal_delay_scan",         "thermal_fft",
      "thermal_g2_tau",   "free_space_hbt", "gate_time_study", "free_space_same_wavelength", "erasure_overlap_scan"};
  return names;
}

namespace detail {

inline bool starts_with(const std::string& s, const char* prefix) { return s.rfind(prefix, 0) == 0; }

inline Json source_json(const char* statistics, double rate, double linewidth, double detuning) {
  return {{"statistics", statistics}, {"rate_cps", rate}, {"linewidth_hz", linewidth}, {"detuning_hz", detuning}};
}

inline Json detector_json(double theta, const char* filter, double efficiency) {
  return {{"theta", theta},           {"pump_phase", 0.0},     {"filter", filter},
          {"efficiency", efficiency}, {"dark_count_cps", 0.0}, {"v_deg", 1.0}};
}

inline Json record_json(std::int64_t duration_ps, std::int64_t gate_ps) {
  return {{"duration_ps", duration_ps}, {"gate_ps", gate_ps}};
}

}  // namespace detail

/// Defaults for one scenario. Laser runs use the laser-case table (detection
/// efficiency 19.5%), thermal runs the thermal-case table (50 MHz filter,
/// 55% Si APD for the splitter measurement).
inline Json default_config(const std::string& name) {
  using detail::detector_json;
  using detail::record_json;
  using detail::source_json;
  if (std::find(scenario_names().begin(), scenario_names().end(), name) == scenario_names().end())
    throw ConfigError(ExitCode::kUnknownScenario, "unknown scenario '" + name + "'");
  Json j;
  j["scenario"] = name;
  j["seed"] = 1;
  j["threads"] = 0;
  if (name == "erasure_overlap_scan") {
    j["erasure"] = {{"mean_photons", {1, 4, 16, 64, 256}}, {"theta", kPi / 4}, {"phi", 0.0}};
    return j;
  }
  const bool thermal = detail::starts_with(name, "thermal_");
  const bool free_space = detail::starts_with(name, "free_space_");
  const bool same = name == "free_space_same_wavelength";

  if (thermal)
    j["optics"] = {{"lambda1_nm", 1549.968}, {"lambda2_nm", 863.396}, {"lambda3_nm", 1949.157}};
  else if (same)
    j["optics"] = {{"lambda1_nm", 1549.800}, {"lambda2_nm", 1549.800}, {"lambda3_nm", nullptr}};
  else
    j["optics"] = {{"lambda1_nm", 1549.800}, {"lambda2_nm", 863.344}, {"lambda3_nm", 1949.157}};
  if (!free_space) j["paths_m"] = {{"l1a", 1.0}, {"l1b", 1.0}, {"l2a", 1.0}, {"l2b", 1.0}};

  const double detuning = name == "laser_g2_tau" ? 20e6 : name == "thermal_g2_tau" ? 200e6 : 0.0;
  if (thermal) {
    j["source1"] = source_json("thermal", 2e8, 50e6, 0.0);
    j["source2"] = source_json("thermal", 2e8, 50e6, detuning);
  } else {
    j["source1"] = source_json("coherent", 2e8, name == "gate_time_study" ? 6.5e6 : 3e6, 0.0);
    j["source2"] = source_json("coherent", 2e8, 0.0, detuning);
  }
  const double theta = same ? 0.0 : kPi / 4;
  const char* filter = same ? "gamma1" : "gamma2";
  j["detector_a"] = detector_json(theta, filter, 0.195);
  j["detector_b"] = detector_json(theta, filter, 0.195);

  if (name == "laser_delay_scan" || name == "laser_fft") {
    j["record"] = record_json(2'000'000'000, 1000);
    j["delay_scan"] = {{"start_m", 0.0}, {"pump_periods", 10}, {"points", 64}};
  } else if (name == "thermal_delay_scan" || name == "thermal_fft") {
    j["record"] = record_json(2'000'000'000, 1000);
    j["delay_scan"] = {{"start_m", 0.0}, {"pump_periods", 10}, {"points", 32}};
  } else if (name == "laser_g2_tau") {
    j["record"] = record_json(50'000'000'000, 2000);
    j["tau_scan"] = {{"start_ps", -500'000}, {"stop_ps", 500'000}, {"step_ps", 2000}};
  } else if (name == "thermal_g2_tau") {
    j["record"] = record_json(20'000'000'000, 500);
    j["tau_scan"] = {{"start_ps", -30'000}, {"stop_ps", 30'000}, {"step_ps", 500}};
    j["splitter"] = {{"efficiency", 0.55}, {"duration_ps", 20'000'000'000}, {"gate_ps", 100},
                     {"start_ps", -30'000},  {"stop_ps", 30'000},             {"step_ps", 500}};
  } else if (name == "gate_time_study") {
    j["record"] = record_json(10'000'000'000, 1000);
    j["delay_scan"] = {{"start_m", 0.0}, {"pump_periods", 10}, {"points", 32}};
    j["gates_ps"] = {100, 300, 1000, 3000, 10'000, 30'000, 100'000, 200'000, 500'000};
  } else if (free_space) {
    j["record"] = record_json(1'000'000'000, 1000);
    j["layout"] = {{"source_separation_m", 125e-6},
                   {"distance_m", 0.4},
                   {"x_start_m", 0.0},
                   {"x_stop_m", same ? 20e-3 : 3e-3},
                   {"points", same ? 201 : 301}};
  }
  return j;
}

namespace detail {

inline bool nullable(const std::string& key) { return key == "optics.lambda3_nm"; }

inline void merge_checked(Json& base, const Json& user, const std::string& path);

inline void assign_checked(Json& slot, const Json& v, const std::string& key) {
  if (slot.is_object()) {
    merge_checked(slot, v, key);
    return;
  }
  bool ok = false;
  if (v.is_null())
    ok = nullable(key);
  else if (slot.is_number() || slot.is_null())
    ok = v.is_number();
  else if (slot.is_string())
    ok = v.is_string();
  else if (slot.is_boolean())
    ok = v.is_boolean();
  else if (slot.is_array())
    ok = v.is_array() && std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_number(); });
  if (!ok) throw ConfigError(ExitCode::kConfig, "wrong type for '" + key + "'");
  slot = v;
}

inline void merge_checked(Json& base, const Json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError(ExitCode::kConfig, "'" + path + "' must be an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError(ExitCode::kConfig, "unknown key '" + key + "'");
    if (key == "scenario") continue;
    assign_checked(base[it.key()], it.value(), key);
  }
}

}  // namespace detail

/// A complete, type-checked scenario configuration.
class ScenarioConfig {
 public:
  /// Merges a user object onto the defaults of user["scenario"].
  static ScenarioConfig from_json(const Json& user) {
    if (!user.is_object()) throw ConfigError(ExitCode::kConfig, "config must be a JSON object");
    if (!user.contains("scenario") || !user["scenario"].is_string())
      throw ConfigError(ExitCode::kConfig, "config needs a string 'scenario'");
    ScenarioConfig c;
    c.data_ = default_config(user["scenario"].get<std::string>());
    detail::merge_checked(c.data_, user, "");
    return c;
  }

  static ScenarioConfig defaults(const std::string& name) { return from_json(Json{{"scenario", name}}); }

  static ScenarioConfig parse(const std::string& text) {
    Json j;
    try {
      j = Json::parse(text);
    } catch (const Json::parse_error& e) {
      throw ConfigError(ExitCode::kConfig, std::string("config parse error: ") + e.what());
    }
    return from_json(j);
  }

  static ScenarioConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(ExitCode::kConfig, "cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  const Json& json() const { return data_; }
  std::string name() const { return data_["scenario"].get<std::string>(); }
  std::uint64_t seed() const { return data_["seed"].get<std::uint64_t>(); }

  /// Pretty form; parse(serialize()) reproduces the config.
  std::string serialize() const { return data_.dump(2) + "\n"; }

  /// FNV-1a 64 of the compact serialization.
  std::string hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : data_.dump()) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  /// Sets a dotted key to a JSON value; the key must already exist.
  void set(const std::string& dotted, const Json& value) {
    if (dotted == "scenario") throw ConfigError(ExitCode::kConfig, "the scenario cannot be overridden");
    Json* node = &data_;
    std::size_t pos = 0;
    while (true) {
      const auto dot = dotted.find('.', pos);
      const std::string part = dotted.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
      if (!node->is_object() || !node->contains(part))
        throw ConfigError(ExitCode::kConfig, "unknown key '" + dotted + "'");
      node = &(*node)[part];
      if (dot == std::string::npos) break;
      pos = dot + 1;
    }
    detail::assign_checked(*node, value, dotted);
  }

  /// "key=value"; the value is read as JSON when it parses, else as a string.
  void apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError(ExitCode::kConfig, "override must look like key=value: " + assignment);
    const std::string value = assignment.substr(eq + 1);
    Json v = Json::parse(value, nullptr, false);
    if (v.is_discarded()) v = value;
    set(assignment.substr(0, eq), v);
  }

  void set_seed(std::uint64_t seed) { data_["seed"] = seed; }

 private:
  Json data_;
};

// ---------------------------------------------------------------------------
// Typed setup

struct ScenarioSetup {
  std::string name;
  unsigned threads = 0;
  SimulationConfig sim;
  std::int64_t gate = 0;
  DelayGrid grid;
  std::vector<double> delays;
  std::vector<std::int64_t> taus;
  std::vector<std::int64_t> gates;
  // free space
  double separation = 0.0;
  double distance = 0.0;
  std::vector<double> xs;
  // thermal splitter
  std::optional<SimulationConfig> splitter;
  std::int64_t splitter_gate = 0;
  std::vector<std::int64_t> splitter_taus;
  // erasure
  std::vector<double> mean_photons;
  double theta = 0.0;
  double phi = 0.0;

  InterferometerGeometry layout_geometry(double x) const {
    PlanarLayout l;
    l.source1 = {-0.5 * separation, 0.0};
    l.source2 = {0.5 * separation, 0.0};
    l.detector_a = {0.0, distance};
    l.detector_b = {x, distance};
    return InterferometerGeometry::from_layout(sim.geometry.lambda1, sim.geometry.lambda2, sim.geometry.lambda3, l);
  }
};

namespace detail {

inline double number(const Json& j, const char* key) { return j.at(key).get<double>(); }

inline std::int64_t whole(const Json& j, const char* key) {
  const double v = number(j, key);
  if (!std::isfinite(v) || v != std::round(v) || std::abs(v) > 9e18)
    throw InvalidArgument(std::string(key) + " must be an integer");
  return static_cast<std::int64_t>(std::llround(v));
}

inline FieldSource parse_source(const Json& j) {
  FieldSource s;
  const auto stats = j.at("statistics").get<std::string>();
  if (stats == "coherent")
    s.statistics = FieldStatistics::kCoherent;
  else if (stats == "thermal")
    s.statistics = FieldStatistics::kThermal;
  else
    throw InvalidArgument("statistics must be 'coherent' or 'thermal'");
  s.rate = number(j, "rate_cps");
  const double lw = number(j, "linewidth_hz");
  if (lw < 0.0) throw InvalidArgument("linewidth must be nonnegative");
  s.coherence_time = coherence_time_from_linewidth(lw);
  s.detuning = number(j, "detuning_hz");
  s.validate();
  return s;
}

inline DetectorSetting parse_detector(const Json& j) {
  DetectorSetting d;
  d.theta = number(j, "theta");
  d.pump_phase = number(j, "pump_phase");
  const auto f = j.at("filter").get<std::string>();
  if (f == "gamma1")
    d.filter = OutputFilter::kGamma1;
  else if (f == "gamma2")
    d.filter = OutputFilter::kGamma2;
  else
    throw InvalidArgument("filter must be 'gamma1' or 'gamma2'");
  d.efficiency = number(j, "efficiency");
  d.dark_count_rate = number(j, "dark_count_cps");
  d.visibility_degradation = number(j, "v_deg");
  d.validate();
  return d;
}

inline std::vector<std::int64_t> tau_grid(const Json& j) {
  const auto start = whole(j, "start_ps"), stop = whole(j, "stop_ps"), step = whole(j, "step_ps");
  if (step <= 0 || stop < start) throw InvalidArgument("tau grid needs step > 0 and stop >= start");
  if ((stop - start) / step > 100'000) throw InvalidArgument("tau grid too fine");
  std::vector<std::int64_t> t;
  for (std::int64_t v = start; v <= stop; v += step) t.push_back(v);
  return t;
}

inline ScenarioSetup build_setup(const ScenarioConfig& cfg) {
  const Json& j = cfg.json();
  ScenarioSetup s;
  s.name = cfg.name();
  const double threads = number(j, "threads");
  if (threads < 0 || threads != std::round(threads)) throw InvalidArgument("threads must be a nonnegative integer");
  s.threads = static_cast<unsigned>(threads);
  if (!j["seed"].is_number_integer() || j["seed"].get<std::int64_t>() < 0) throw InvalidArgument("seed must be a nonnegative integer");

  if (s.name == "erasure_overlap_scan") {
    const Json& e = j["erasure"];
    for (const auto& n : e["mean_photons"]) {
      const double v = n.get<double>();
      if (!(v > 0.0)) throw InvalidArgument("mean photon numbers must be positive");
      s.mean_photons.push_back(v);
    }
    if (s.mean_photons.empty()) throw InvalidArgument("no mean photon numbers given");
    s.theta = number(e, "theta");
    s.phi = number(e, "phi");
    return s;
  }

  const Json& o = j["optics"];
  auto& g = s.sim.geometry;
  g.lambda1 = number(o, "lambda1_nm") * 1e-9;
  g.lambda2 = number(o, "lambda2_nm") * 1e-9;
  g.lambda3 = o["lambda3_nm"].is_null() ? std::nullopt : std::optional<double>(number(o, "lambda3_nm") * 1e-9);
  if (j.contains("paths_m")) {
    const Json& p = j["paths_m"];
    g.paths = {number(p, "l1a"), number(p, "l1b"), number(p, "l2a"), number(p, "l2b")};
  }
  s.sim.source1 = parse_source(j["source1"]);
  s.sim.source2 = parse_source(j["source2"]);
  s.sim.detector_a = parse_detector(j["detector_a"]);
  s.sim.detector_b = parse_detector(j["detector_b"]);
  s.sim.seed = cfg.seed();
  const Json& r = j["record"];
  s.sim.duration = whole(r, "duration_ps");
  if (s.sim.duration <= 0) throw InvalidArgument("duration must be positive");
  s.gate = whole(r, "gate_ps");
  if (s.gate <= 0) throw InvalidArgument("gate must be positive");

  if (j.contains("layout")) {
    const Json& l = j["layout"];
    s.separation = number(l, "source_separation_m");
    s.distance = number(l, "distance_m");
    const double x0 = number(l, "x_start_m"), x1 = number(l, "x_stop_m");
    const auto n = whole(l, "points");
    if (!(s.separation > 0.0 && s.distance > 0.0)) throw InvalidArgument("layout lengths must be positive");
    if (n < 16 || !(x1 > x0)) throw InvalidArgument("layout scan needs >= 16 points and x_stop > x_start");
    for (std::int64_t i = 0; i < n; ++i) s.xs.push_back(x0 + (x1 - x0) * static_cast<double>(i) / static_cast<double>(n - 1));
    g = s.layout_geometry(x0);
  }
  g.validate();

  if (j.contains("delay_scan")) {
    const Json& d = j["delay_scan"];
    const double periods = number(d, "pump_periods");
    const auto n = whole(d, "points");
    if (n < 16) throw InvalidArgument("delay scan needs >= 16 points");
    if (!(periods > 0.0)) throw InvalidArgument("delay scan must span a positive number of periods");
    s.grid = {number(d, "start_m"), periods * g.pump_wavelength() / static_cast<double>(n), static_cast<int>(n)};
    for (int i = 0; i < s.grid.points; ++i) s.delays.push_back(s.grid.at(i));
  }
  if (j.contains("tau_scan")) {
    s.taus = tau_grid(j["tau_scan"]);
    if (std::isinf(s.sim.source1.coherence_time) && std::isinf(s.sim.source2.coherence_time))
      throw InvalidArgument("g2(tau) scenarios need a finite linewidth");
  }
  if (j.contains("gates_ps")) {
    for (const auto& v : j["gates_ps"]) {
      const double x = v.get<double>();
      if (!(x >= 1.0) || x != std::round(x)) throw InvalidArgument("gates must be positive integers (ps)");
      s.gates.push_back(static_cast<std::int64_t>(x));
    }
    if (s.gates.empty()) throw InvalidArgument("no gates given");
  }
  if (j.contains("splitter")) {
    const Json& sp = j["splitter"];
    SimulationConfig c = s.sim;
    c.source2.rate = 0.0;
    for (auto* d : {&c.detector_a, &c.detector_b}) {
      d->theta = 0.0;
      d->filter = OutputFilter::kGamma1;
      d->efficiency = number(sp, "efficiency");
      d->validate();
    }
    c.duration = whole(sp, "duration_ps");
    if (c.duration <= 0) throw InvalidArgument("splitter duration must be positive");
    s.splitter_gate = whole(sp, "gate_ps");
    if (s.splitter_gate <= 0) throw InvalidArgument("splitter gate must be positive");
    s.splitter_taus = tau_grid(sp);
    s.splitter = c;
  }
  return s;
}

}  // namespace detail

/// Checks every parameter the scenario uses. Throws ConfigError.
inline ScenarioSetup make_setup(const ScenarioConfig& cfg) {
  try {
    return detail::build_setup(cfg);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(ExitCode::kConfig, std::string("invalid parameters: ") + e.what());
  } catch (const Json::exception& e) {
    throw ConfigError(ExitCode::kConfig, std::string("invalid parameters: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Output

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_))
      throw ConfigError(ExitCode::kOutput, "cannot create output directory " + dir_.string());
    const auto probe = dir_ / ".write_probe";
    {
      std::ofstream f(probe);
      if (!f) throw ConfigError(ExitCode::kOutput, "output directory is not writable: " + dir_.string());
    }
    std::filesystem::remove(probe, ec);
  }

  const std::filesystem::path& path() const { return dir_; }
  const std::vector<std::string>& files() const { return files_; }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw ConfigError(ExitCode::kOutput, "cannot write " + (dir_ / name).string());
    body(f);
    if (!f) throw ConfigError(ExitCode::kOutput, "write failed for " + (dir_ / name).string());
    files_.push_back(name);
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

namespace detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline double mean_g2(std::span<const ScanSample> scan) {
  double s = 0.0;
  int n = 0;
  for (const auto& p : scan)
    if (p.point.g2) {
      s += *p.point.g2;
      ++n;
    }
  return n ? s / n : std::nan("");
}

inline Json fit_json(const SinusoidFit& f) {
  return {{"visibility", f.visibility}, {"visibility_stderr", f.visibility_stderr}, {"offset", f.offset},
          {"phase", f.phase}};
}

inline SimulationConfig pump_off(SimulationConfig c) {
  c.detector_a.theta = 0.0;
  c.detector_b.theta = 0.0;
  return c;
}

inline std::vector<double> all_g2(std::span<const ScanSample> scan) {
  std::vector<double> y;
  for (const auto& p : scan) {
    if (!p.point.g2) throw Error("delay scan has points without counts; increase rates or duration");
    y.push_back(*p.point.g2);
  }
  return y;
}

inline void write_spectrum(std::ostream& os, const FringeSpectrum& s) {
  os << "frequency_hz,magnitude\n";
  for (std::size_t i = 0; i < s.frequency.size(); ++i) os << fmt(s.frequency[i]) << ',' << fmt(s.magnitude[i]) << '\n';
}

inline Json run_delay_scan(const ScenarioSetup& s, OutputDir& out) {
  const double lambda3 = s.sim.geometry.pump_wavelength();
  const auto mc = simulate_delay_scan(s.sim, s.delays, s.gate, 0, s.threads);
  out.write("delay_scan.csv", [&](std::ostream& os) { write_delay_scan_csv(os, mc); });
  const auto analytic = delay_scan(s.sim.geometry, s.grid, FieldSources{s.sim.source1, s.sim.source2},
                                   s.sim.detector_a, s.sim.detector_b);
  out.write("analytic.csv", [&](std::ostream& os) { write_scan_csv(os, analytic); });
  Json j;
  j["fit"] = fit_json(fit_delay_scan(mc, lambda3));
  j["mean_g2"] = mean_g2(mc);
  j["analytic_fit"] = fit_json(scan_visibility(analytic, lambda3));
  j["pump_wavelength_m"] = lambda3;
  j["trials"] = s.delays.size();
  return j;
}

inline Json run_fft(const ScenarioSetup& s, OutputDir& out) {
  const double lambda3 = s.sim.geometry.pump_wavelength();
  const auto on = simulate_delay_scan(s.sim, s.delays, s.gate, 0, s.threads);
  const auto off = simulate_delay_scan(pump_off(s.sim), s.delays, s.gate, 0, s.threads);
  out.write("delay_scan.csv", [&](std::ostream& os) { write_delay_scan_csv(os, on); });
  out.write("delay_scan_pump_off.csv", [&](std::ostream& os) { write_delay_scan_csv(os, off); });
  const auto spec_on = fringe_fft(s.delays, all_g2(on));
  const auto spec_off = fringe_fft(s.delays, all_g2(off));
  out.write("fft.csv", [&](std::ostream& os) { write_spectrum(os, spec_on); });
  out.write("fft_pump_off.csv", [&](std::ostream& os) { write_spectrum(os, spec_off); });
  const double nu3 = kSpeedOfLight / lambda3;
  Json j;
  j["pump_frequency_hz"] = nu3;
  j["peak_frequency_hz"] = spec_on.peak_frequency;
  j["bin_width_hz"] = spec_on.bin_width;
  j["peak_offset_bins"] = (spec_on.peak_frequency - nu3) / spec_on.bin_width;
  j["peak_to_median"] = spec_on.peak_magnitude / spec_on.median_magnitude;
  j["pump_off_peak_to_median"] = spec_off.peak_magnitude / spec_off.median_magnitude;
  j["has_peak"] = spec_on.has_peak();
  j["pump_off_has_peak"] = spec_off.has_peak();
  j["fit"] = fit_json(fit_delay_scan(on, lambda3));
  j["trials"] = s.delays.size();
  return j;
}

inline Json run_g2_tau(const ScenarioSetup& s, OutputDir& out) {
  const auto scan = g2_vs_tau_scan(s.sim, s.taus, s.gate);
  out.write("g2_tau.csv", [&](std::ostream& os) { write_g2_csv(os, scan.curve); });
  const double rate = 1.0 / s.sim.source1.coherence_time + 1.0 / s.sim.source2.coherence_time;
  const double expected = 1e12 / rate;
  Json j;
  j["beat_hz"] = s.sim.source2.detuning;
  j["decay_time_ps"] = scan.fit.decay_time;
  j["expected_decay_ps"] = expected;
  j["decay_ratio"] = scan.fit.decay_time / expected;
  j["offset"] = scan.fit.offset;
  j["amplitude"] = scan.fit.amplitude;
  double tail = 0.0, center = 0.0;
  int n_tail = 0;
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  for (const auto& p : scan.curve) {
    if (!p.g2) continue;
    if (std::abs(p.tau) < best) {
      best = std::abs(p.tau);
      center = *p.g2;
    }
    if (static_cast<double>(std::abs(p.tau)) > 3.0 * expected) {
      tail += *p.g2;
      ++n_tail;
    }
  }
  j["g2_center"] = center;
  j["g2_tail_mean"] = n_tail ? tail / n_tail : std::nan("");
  j["trials"] = 1;
  if (s.splitter) {
    const auto sim = simulate_events(*s.splitter);
    const auto curve = estimate_g2(sim.a, sim.b, s.splitter_taus, s.splitter_gate);
    out.write("splitter_g2_tau.csv", [&](std::ostream& os) { write_g2_csv(os, curve); });
    const auto zero = estimate_g2(sim.a, sim.b, std::int64_t{0}, s.splitter_gate);
    j["splitter_g2_0"] = zero ? *zero : std::nan("");
  }
  return j;
}

inline Json run_free_space(const ScenarioSetup& s, OutputDir& out) {
  const bool same = s.sim.geometry.same_wavelength();
  std::vector<InterferometerGeometry> geos;
  std::vector<double> phase, analytic;
  for (double x : s.xs) {
    geos.push_back(s.layout_geometry(x));
    phase.push_back(fringe_phase(geos.back()));
    analytic.push_back(
        field_correlation(geos.back(), s.sim.source1, s.sim.source2, s.sim.detector_a, s.sim.detector_b).probability);
  }
  auto write = [&](const std::string& name, const std::vector<G2Point>& mc, const std::vector<double>& theory) {
    out.write(name, [&](std::ostream& os) {
      os << "x_m,fringe_phase_rad,analytic_g2,g2,n_coincidence,n_A,n_B,n_bin\n";
      for (std::size_t i = 0; i < mc.size(); ++i) {
        os << fmt(s.xs[i]) << ',' << fmt(phase[i]) << ',' << fmt(theory[i]) << ',';
        if (mc[i].g2) os << fmt(*mc[i].g2);
        os << ',' << mc[i].n_coincidence << ',' << mc[i].n_a << ',' << mc[i].n_b << ',' << mc[i].n_bin << '\n';
      }
    });
  };
  auto measured = [&](const std::vector<G2Point>& mc) {
    std::vector<double> p, y;
    for (std::size_t i = 0; i < mc.size(); ++i)
      if (mc[i].g2) {
        p.push_back(phase[i]);
        y.push_back(*mc[i].g2);
      }
    return std::make_pair(p, y);
  };

  const auto mc = simulate_geometry_scan(s.sim, geos, s.gate, s.threads);
  write("hbt_x.csv", mc, analytic);
  const auto [p, y] = measured(mc);
  const auto fit = fit_phase_scale(p, y, 0.8, 1.2);
  const auto afit = fit_phase_scale(phase, analytic, 0.8, 1.2);

  // local fringe period from the slope of the predicted phase at mid-scan
  const double xm = 0.5 * (s.xs.front() + s.xs.back()), h = 1e-3 * (s.xs.back() - s.xs.front());
  const double slope = (fringe_phase(s.layout_geometry(xm + h)) - fringe_phase(s.layout_geometry(xm - h))) / (2 * h);

  Json j;
  j["kappa"] = fit.scale;
  j["period_ratio"] = 1.0 / fit.scale;
  j["fit"] = fit_json(fit.fringe);
  j["analytic_kappa"] = afit.scale;
  j["analytic_fit"] = fit_json(afit.fringe);
  j["predicted_period_mid_m"] = kTwoPi / std::abs(slope);
  j["measured_period_mid_m"] = kTwoPi / std::abs(slope * fit.scale);
  if (same) j["classic_hbt_period_m"] = s.sim.geometry.lambda1 * s.distance / s.separation;
  j["trials"] = s.xs.size();

  if (!same) {
    std::vector<double> flat;
    const auto off_cfg = pump_off(s.sim);
    for (const auto& g : geos)
      flat.push_back(field_correlation(g, off_cfg.source1, off_cfg.source2, off_cfg.detector_a, off_cfg.detector_b)
                         .probability);
    const auto off = simulate_geometry_scan(off_cfg, geos, s.gate, s.threads);
    write("hbt_x_pump_off.csv", off, flat);
    const auto [po, yo] = measured(off);
    const auto off_fit = fit_sinusoid_args(po, yo);
    j["pump_off_fit"] = fit_json(off_fit);
  }
  return j;
}

inline Json run_gate_study(const ScenarioSetup& s, OutputDir& out) {
  const double lambda3 = s.sim.geometry.pump_wavelength();
  const auto rows = gate_time_study(s.sim, s.delays, s.gates, lambda3, s.threads);
  out.write("gate_study.csv", [&](std::ostream& os) {
    os << "gate_ps,visibility,visibility_stderr,ci_low,ci_high,offset\n";
    for (const auto& r : rows)
      os << r.gate << ',' << fmt(r.fit.visibility) << ',' << fmt(r.fit.visibility_stderr) << ',' << fmt(r.ci_low)
         << ',' << fmt(r.ci_high) << ',' << fmt(r.fit.offset) << '\n';
  });
  Json j;
  Json by_gate = Json::object();
  for (const auto& r : rows)
    by_gate[std::to_string(r.gate)] = {{"visibility", r.fit.visibility},
                                       {"ci_low", r.ci_low},
                                       {"ci_high", r.ci_high}};
  j["gates"] = by_gate;
  j["coherence_time_ps"] = s.sim.source1.coherence_time * 1e12;
  j["trials"] = s.delays.size();
  return j;
}

inline Json run_erasure(const ScenarioSetup& s, OutputDir& out) {
  struct Row {
    double n, overlap, f1, f2;
  };
  std::vector<Row> rows;
  for (double n : s.mean_photons) {
    const auto basis = FockBasis::for_pump(n);
    const double chi_t = s.theta / std::sqrt(n);
    const auto r1 = reduced_signal_density(evolve_closed_form(SignalInput::kGamma1, {n, s.phi}, chi_t, basis));
    const auto r2 = reduced_signal_density(evolve_closed_form(SignalInput::kGamma2, {n, s.phi}, chi_t, basis));
    rows.push_back({n, erasure_overlap(n, s.theta, s.phi), fidelity(r1, phi1_state(s.theta, s.phi)),
                    fidelity(r2, phi2_state(s.theta, s.phi))});
  }
  out.write("erasure_overlap.csv", [&](std::ostream& os) {
    os << "mean_photons,overlap,one_minus_overlap,fidelity_phi1,fidelity_phi2\n";
    for (const auto& r : rows)
      os << fmt(r.n) << ',' << fmt(r.overlap) << ',' << fmt(1.0 - r.overlap) << ',' << fmt(r.f1) << ',' << fmt(r.f2)
         << '\n';
  });
  Json j;
  Json by_n = Json::object();
  for (const auto& r : rows)
    by_n[fmt(r.n)] = {{"one_minus_overlap", 1.0 - r.overlap}, {"fidelity_phi1", r.f1}, {"fidelity_phi2", r.f2}};
  j["mean_photons"] = by_n;
  j["phi_overlap"] = std::abs(phi1_state(s.theta, s.phi).vector().dot(phi2_state(s.theta, s.phi).vector()));
  return j;
}

}  // namespace detail

struct RunReport {
  Json summary;
  Json manifest;
  std::vector<std::string> files;
};

/// Runs one scenario into `dir`. Data files and summary.json depend only on
/// the config; manifest.json also records the wall time.
inline RunReport run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& dir) {
  const auto setup = make_setup(cfg);
  OutputDir out(dir);
  const auto t0 = std::chrono::steady_clock::now();
  Json summary;
  const auto& n = setup.name;
  if (n == "laser_delay_scan" || n == "thermal_delay_scan")
    summary = detail::run_delay_scan(setup, out);
  else if (n == "laser_fft" || n == "thermal_fft")
    summary = detail::run_fft(setup, out);
  else if (n == "laser_g2_tau" || n == "thermal_g2_tau")
    summary = detail::run_g2_tau(setup, out);
  else if (n == "free_space_hbt" || n == "free_space_same_wavelength")
    summary = detail::run_free_space(setup, out);
  else if (n == "gate_time_study")
    summary = detail::run_gate_study(setup, out);
  else
    summary = detail::run_erasure(setup, out);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  Json head = {{"scenario", n}};
  for (auto it = summary.begin(); it != summary.end(); ++it) head[it.key()] = it.value();
  out.write("summary.json", [&](std::ostream& os) { os << head.dump(2) << '\n'; });
  out.write("config.json", [&](std::ostream& os) { os << cfg.serialize(); });

  RunReport report;
  report.summary = head;
  report.files = out.files();
  report.manifest = {{"tool", "colorhbt"},
                     {"version", COLORHBT_VERSION},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"scenario", n},
                     {"config_hash", cfg.hash()},
                     {"seeds",
                      {{"seed", cfg.seed()},
                       {"trials", summary.contains("trials") ? summary["trials"] : Json(0)},
                       {"generator", "philox4x32-10"},
                       {"stream_id", "trial << 16 | role << 8 | channel"}}},
                     {"wall_time_s", wall},
                     {"files", report.files}};
  out.write("manifest.json", [&](std::ostream& os) { os << report.manifest.dump(2) << '\n'; });
  report.files.push_back("manifest.json");
  return report;
}

/// "key=a:b:n" for a linear parameter sweep.
struct ParamSweep {
  std::string key;
  double start = 0.0;
  double stop = 0.0;
  int points = 0;

  static ParamSweep parse(const std::string& spec) {
    const auto eq = spec.find('=');
    ParamSweep p;
    if (eq == std::string::npos || eq == 0) throw ConfigError(ExitCode::kConfig, "--param must be key=a:b:n");
    p.key = spec.substr(0, eq);
    double n = 0.0;
    char tail = 0;
    if (std::sscanf(spec.c_str() + eq + 1, "%lf:%lf:%lf%c", &p.start, &p.stop, &n, &tail) != 3 || n < 1 ||
        n != std::round(n) || n > 10'000)
      throw ConfigError(ExitCode::kConfig, "--param must be key=a:b:n with integer n >= 1");
    p.points = static_cast<int>(n);
    return p;
  }

  double at(int i) const { return points == 1 ? start : start + (stop - start) * i / (points - 1); }
};

namespace detail {

inline void flatten(const Json& j, const std::string& prefix, std::vector<std::pair<std::string, Json>>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it.value().is_object())
      flatten(it.value(), key, out);
    else if (it.value().is_number() || it.value().is_boolean())
      out.emplace_back(key, it.value());
  }
}

}  // namespace detail

/// Runs the scenario once per sweep value into dir/point_NNN and collects
/// every numeric summary entry into dir/scan.csv.
inline void run_parameter_scan(const ScenarioConfig& base, const ParamSweep& sweep, const std::filesystem::path& dir) {
  std::vector<ScenarioConfig> configs;
  for (int i = 0; i < sweep.points; ++i) {
    auto c = base;
    c.set(sweep.key, sweep.at(i));
    (void)make_setup(c);
    configs.push_back(std::move(c));
  }
  OutputDir out(dir);
  std::vector<std::string> columns;
  std::vector<std::vector<std::pair<std::string, Json>>> rows;
  for (int i = 0; i < sweep.points; ++i) {
    char sub[32];
    std::snprintf(sub, sizeof sub, "point_%03d", i);
    const auto report = run_scenario(configs[static_cast<std::size_t>(i)], dir / sub);
    std::vector<std::pair<std::string, Json>> flat;
    detail::flatten(report.summary, "", flat);
    if (columns.empty())
      for (const auto& [k, v] : flat) columns.push_back(k);
    rows.push_back(std::move(flat));
  }
  out.write("scan.csv", [&](std::ostream& os) {
    os << "index," << sweep.key;
    for (const auto& c : columns) os << ',' << c;
    os << '\n';
    for (std::size_t i = 0; i < rows.size(); ++i) {
      os << i << ',' << detail::fmt(sweep.at(static_cast<int>(i)));
      for (const auto& c : columns) {
        os << ',';
        for (const auto& [k, v] : rows[i])
          if (k == c) os << (v.is_boolean() ? (v.get<bool>() ? "1" : "0") : detail::fmt(v.get<double>()));
      }
      os << '\n';
    }
  });
}

}  // namespace colorhbt
