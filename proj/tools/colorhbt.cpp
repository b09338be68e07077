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


// colorhbt command-line tool.
//
//   colorhbt run <config.json> --out <dir> [--seed S] [--override key=value]...
//   colorhbt selftest [--full] [--inject heff-sign]
//   colorhbt scan --scenario <name> --param key=a:b:n [--out dir] [--override key=value]...
//   colorhbt defaults <scenario>
//
// Exit codes: 0 ok, 1 runtime failure, 2 config error, 3 selftest failure,
// 4 output directory not writable, 5 unknown scenario.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "colorhbt/scenario.hpp"
#include "colorhbt/selftest.hpp"

namespace {

int code(colorhbt::ExitCode c) { return static_cast<int>(c); }

}  // namespace

int main(int argc, char** argv) {
  using namespace colorhbt;
  CLI::App app{"Chromatic intensity interferometry simulator"};
  app.set_version_flag("--version", std::string(COLORHBT_VERSION));
  app.require_subcommand(1);

  std::string config_path, out_dir, scenario, param, inject;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  bool full = false;

  auto* run = app.add_subcommand("run", "Run one scenario from a JSON config");
  run->add_option("config", config_path, "Scenario config (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--override", overrides, "Dotted key=value override (repeatable)");

  auto* self = app.add_subcommand("selftest", "Run built-in consistency checks");
  self->add_flag("--full", full, "Include Fock-oracle and statistical checks");
  self->add_option("--inject", inject, "Inject a known fault (heff-sign)")->check(CLI::IsMember({"heff-sign"}));

  auto* scan = app.add_subcommand("scan", "Sweep one config key over a linear grid");
  scan->add_option("--scenario", scenario, "Scenario name")->required();
  scan->add_option("--param", param, "key=a:b:n")->required();
  scan->add_option("--out", out_dir, "Output directory")->default_val("scan_out");
  scan->add_option("--seed", seed, "Override the default seed");
  scan->add_option("--override", overrides, "Dotted key=value override (repeatable)");

  auto* defaults = app.add_subcommand("defaults", "Print the default config of a scenario");
  defaults->add_option("scenario", scenario, "Scenario name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : code(ExitCode::kConfig);
  }

  try {
    if (*self) {
      SelftestOptions opt;
      opt.level = full ? SelftestLevel::kFull : SelftestLevel::kFast;
      opt.inject_heff_sign = inject == "heff-sign";
      if (opt.inject_heff_sign && !full) std::cerr << "note: heff-sign injection only affects --full checks\n";
      const auto report = run_selftest(opt);
      print_report(std::cout, report);
      return report.passed() ? 0 : code(ExitCode::kSelftest);
    }
    if (*defaults) {
      std::cout << ScenarioConfig::defaults(scenario).serialize();
      return 0;
    }
    auto cfg = *run ? ScenarioConfig::load(config_path) : ScenarioConfig::defaults(scenario);
    for (const auto& o : overrides) cfg.apply_override(o);
    if (seed) cfg.set_seed(*seed);
    if (*run) {
      const auto report = run_scenario(cfg, out_dir);
      std::cout << report.summary.dump(2) << '\n';
      std::cerr << "wrote " << report.files.size() << " files to " << out_dir << '\n';
    } else {
      run_parameter_scan(cfg, ParamSweep::parse(param), out_dir);
      std::cerr << "wrote " << out_dir << "/scan.csv\n";
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return code(ExitCode::kFailure);
  }
}
