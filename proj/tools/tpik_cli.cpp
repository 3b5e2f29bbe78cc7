// Copyright 2026 The tpik Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end. Exit codes: 0 success, 1 load/configuration error,
// 2 emergency stop during the run, 64 usage error.

#include <cmath>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "tpik/builtin_scenarios.hpp"
#include "tpik/tpik.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitLoad = 1;
constexpr int kExitEstop = 2;
constexpr int kExitUsage = 64;

int write_log(const tpik::Scenario& sc, const std::string& out_path) {
  const tpik::ScenarioLog log = tpik::run(sc);
  if (out_path == "-") {
    log.write_csv(std::cout, sc.tasks);
  } else {
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "error: cannot write " << out_path << "\n";
      return kExitLoad;
    }
    log.write_csv(out, sc.tasks);
  }
  int estops = 0;
  for (const auto& r : log.rows) estops += r.estop;
  std::cerr << sc.name << ": " << log.rows.size() << " ticks";
  if (!log.rows.empty()) std::cerr << ", final position error " << log.rows.back().pos_err << " m";
  std::cerr << "\n";
  if (estops) {
    std::cerr << "emergency stop on " << estops << " tick(s)\n";
    return kExitEstop;
  }
  return kExitOk;
}

int dump_depth(const tpik::Scenario& sc, double t, const std::string& out_path, bool raw) {
  sc.validate();
  const int ticks = static_cast<int>(std::llround(t * sc.control_hz));
  tpik::SimState s = tpik::initial_state(sc);
  for (int k = 0; k < ticks; ++k) s = tpik::step(s, sc, k);
  const double at = ticks / sc.control_hz;
  tpik::DepthImage img = tpik::render_frame(sc, s.q, at);
  if (!raw)
    img = tpik::remove_robot(img, sc.arm, s.q, sc.perception.inflation, sc.perception.link_radius);
  tpik::write_depth_pgm(img, out_path);
  std::cerr << "wrote " << img.width() << "x" << img.height() << " depth image at t = " << at
            << " s (" << img.finite_count() << " pixels with a return)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Set-based task-priority inverse kinematics simulator"};
  app.require_subcommand(1);

  std::string scenario_path, out_path;
  double at_time = 0.0;
  bool raw = false;

  auto* run = app.add_subcommand("run", "Simulate a scenario file and write the CSV log");
  run->add_option("scenario", scenario_path, "Scenario file")->required();
  run->add_option("--out", out_path, "CSV output path ('-' for stdout)")->required();

  auto* case1 = app.add_subcommand("case1", "Run the built-in first case study");
  case1->add_option("--out", out_path, "CSV output path ('-' for stdout)")->required();
  auto* case2 = app.add_subcommand("case2", "Run the built-in second case study");
  case2->add_option("--out", out_path, "CSV output path ('-' for stdout)")->required();

  auto* validate = app.add_subcommand("validate", "Load a scenario and print its task table");
  validate->add_option("scenario", scenario_path, "Scenario file")->required();

  auto* dump = app.add_subcommand("dump-depth", "Write the synthetic depth image at time t");
  dump->add_option("scenario", scenario_path, "Scenario file")->required();
  dump->add_option("--t", at_time, "Simulated time in seconds")->required()->check(
      CLI::NonNegativeNumber);
  dump->add_option("--out", out_path, "Greymap output path")->required();
  dump->add_flag("--raw", raw, "Keep the robot in the image");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*run) return write_log(tpik::parse_scenario(scenario_path), out_path);
    if (*case1) return write_log(tpik::builtin::load("case1"), out_path);
    if (*case2) return write_log(tpik::builtin::load("case2"), out_path);
    if (*validate) {
      const tpik::Scenario sc = tpik::parse_scenario(scenario_path);
      std::cout << sc.name << ": " << sc.arm.dof() << " joints, " << sc.tasks.size()
                << " tasks, " << sc.obstacles.size() << " obstacles, " << sc.tick_count()
                << " ticks\n"
                << tpik::describe_tasks(sc);
      return kExitOk;
    }
    if (*dump) return dump_depth(tpik::parse_scenario(scenario_path), at_time, out_path, raw);
  } catch (const tpik::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitLoad;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitLoad;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitLoad;
  }
  return kExitUsage;
}
