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
#pragma once

// Scenario files: line-oriented "key = value" entries grouped under
// [section] headers, '#' starts a comment. [run], [arm], [camera] and
// [waypoints] appear at most once; every [task] and [obstacle] header opens a
// new block, and task blocks are taken as the priority order. The grammar
// and every key are documented in docs/scenario-format.md.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tpik/errors.hpp"
#include "tpik/scenario.hpp"

namespace tpik {

namespace io_detail {

struct Entry {
  std::string key;
  std::string value;
  int line = 0;
  bool used = false;
};

struct Block {
  std::string section;
  int line = 0;
  std::vector<Entry> entries;

  [[noreturn]] void fail(const std::string& key, const std::string& what, int at = 0) const {
    throw ConfigError(section, key, what, at ? at : line);
  }

  Entry* find(const std::string& key) {
    for (auto& e : entries)
      if (e.key == key) return &e;
    return nullptr;
  }

  std::vector<Entry*> all(const std::string& key) {
    std::vector<Entry*> out;
    for (auto& e : entries)
      if (e.key == key) out.push_back(&e);
    return out;
  }

  std::vector<double> numbers(Entry& e, std::size_t expected = 0) const {
    e.used = true;
    std::vector<double> out;
    std::istringstream words(e.value);
    std::string w;
    while (words >> w) {
      double v = 0.0;
      if (w == "inf" || w == "+inf") {
        v = kInf;
      } else if (w == "-inf") {
        v = -kInf;
      } else {
        const char* first = w.data();
        const char* last = w.data() + w.size();
        if (*first == '+') ++first;
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last || std::isnan(v))
          fail(e.key, "malformed number '" + w + "'", e.line);
      }
      out.push_back(v);
    }
    if (expected && out.size() != expected)
      fail(e.key, "expected " + std::to_string(expected) + " numbers, got " +
                      std::to_string(out.size()),
           e.line);
    if (out.empty()) fail(e.key, "expected a number", e.line);
    return out;
  }

  std::optional<double> number(const std::string& key) {
    Entry* e = find(key);
    if (!e) return std::nullopt;
    return numbers(*e, 1)[0];
  }

  double required_number(const std::string& key) {
    auto v = number(key);
    if (!v) fail(key, "missing required key");
    return *v;
  }

  std::optional<Eigen::Vector3d> vec3(const std::string& key) {
    Entry* e = find(key);
    if (!e) return std::nullopt;
    const auto v = numbers(*e, 3);
    return Eigen::Vector3d(v[0], v[1], v[2]);
  }

  std::optional<std::string> word(const std::string& key) {
    Entry* e = find(key);
    if (!e) return std::nullopt;
    e->used = true;
    return e->value;
  }

  int integer(Entry& e) const {
    const double v = numbers(e, 1)[0];
    if (v != std::floor(v) || std::abs(v) > 1e9) fail(e.key, "expected an integer", e.line);
    return static_cast<int>(v);
  }

  void check_all_used() const {
    for (const auto& e : entries)
      if (!e.used) fail(e.key, "unknown key", e.line);
  }

  void check_unique(std::initializer_list<const char*> keys) const {
    for (const char* k : keys) {
      int count = 0;
      for (const auto& e : entries)
        if (e.key == k && ++count > 1) fail(k, "key given more than once", e.line);
    }
  }
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<Block> tokenize(const std::string& text) {
  std::vector<Block> blocks;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("file", "", "unterminated section header", line);
      blocks.push_back({trim(s.substr(1, s.size() - 2)), line, {}});
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError(blocks.empty() ? "file" : blocks.back().section, s,
                        "expected 'key = value'", line);
    if (blocks.empty()) throw ConfigError("file", trim(s.substr(0, eq)), "entry before any section", line);
    blocks.back().entries.push_back({trim(s.substr(0, eq)), trim(s.substr(eq + 1)), line});
  }
  return blocks;
}

inline Eigen::Isometry3d pose7(const std::vector<double>& v) {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.translation() = Eigen::Vector3d(v[0], v[1], v[2]);
  t.linear() = Eigen::Quaterniond(v[3], v[4], v[5], v[6]).normalized().toRotationMatrix();
  return t;
}

inline void parse_run(Block& b, Scenario& sc) {
  b.check_unique({"name", "control_hz", "perception_hz", "duration", "perception_mode",
                  "qdot_max", "epsilon", "max_active_set_iterations", "singular_value_floor",
                  "deactivation_tolerance"});
  if (auto v = b.word("name")) sc.name = *v;
  if (auto v = b.number("control_hz")) sc.control_hz = *v;
  if (auto v = b.number("perception_hz")) sc.perception_hz = *v;
  if (auto v = b.number("duration")) sc.duration = *v;
  if (auto v = b.word("perception_mode")) {
    if (*v == "exact_geometry") sc.mode = PerceptionMode::exact_geometry;
    else if (*v == "synthetic_camera") sc.mode = PerceptionMode::synthetic_camera;
    else b.fail("perception_mode", "expected exact_geometry or synthetic_camera",
                b.find("perception_mode")->line);
  }
  if (auto v = b.number("qdot_max")) sc.solver.qdot_max = *v;
  if (auto v = b.number("epsilon")) sc.solver.epsilon_default = *v;
  if (Entry* e = b.find("max_active_set_iterations")) sc.solver.max_active_set_iterations = b.integer(*e);
  if (auto v = b.number("singular_value_floor")) sc.solver.singular_value_floor = *v;
  if (auto v = b.number("deactivation_tolerance")) sc.solver.deactivation_tolerance = *v;
  if (!(sc.control_hz > 0.0)) b.fail("control_hz", "must be positive");
  if (!(sc.perception_hz > 0.0) || sc.perception_hz > sc.control_hz)
    b.fail("perception_hz", "rates must satisfy control_hz >= perception_hz > 0");
  if (!(sc.duration > 0.0)) b.fail("duration", "must be positive");
  if (!(sc.solver.qdot_max > 0.0)) b.fail("qdot_max", "must be positive");
  if (!(sc.solver.epsilon_default > 0.0)) b.fail("epsilon", "must be positive");
  if (!(sc.solver.deactivation_tolerance >= 0.0))
    b.fail("deactivation_tolerance", "must be non-negative");
  if (sc.solver.max_active_set_iterations < 0)
    b.fail("max_active_set_iterations", "must be >= 1 (0 selects the automatic bound)");
}

inline void parse_arm(Block& b, Scenario& sc) {
  b.check_unique({"preset", "q0", "base"});
  if (auto p = b.word("preset")) {
    if (*p != "default") b.fail("preset", "only 'default' is known", b.find("preset")->line);
    sc.arm = default_arm();
    sc.q0 = default_home();
  }
  const auto dh = b.all("dh");
  if (!dh.empty()) {
    sc.arm.joints.clear();
    for (Entry* e : dh) {
      const auto v = b.numbers(*e, 4);
      sc.arm.joints.push_back({v[0], v[1], v[2], v[3]});
    }
  }
  const auto lim = b.all("limit");
  if (!lim.empty()) {
    sc.arm.joint_limits.clear();
    for (Entry* e : lim) {
      const auto v = b.numbers(*e, 2);
      if (!(v[0] < v[1])) b.fail("limit", "joint limit min must be below max", e->line);
      sc.arm.joint_limits.push_back({v[0], v[1]});
    }
  }
  if (sc.arm.joints.empty()) b.fail("dh", "arm needs at least one 'dh' row or 'preset = default'");
  if (sc.arm.joint_limits.size() != sc.arm.joints.size())
    b.fail("limit", "one 'limit' row per 'dh' row required");
  if (Entry* e = b.find("q0")) {
    const auto v = b.numbers(*e, sc.arm.joints.size());
    sc.q0 = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  if (sc.q0.size() != sc.arm.dof()) b.fail("q0", "initial configuration missing");
  for (int i = 0; i < sc.arm.dof(); ++i)
    if (sc.q0[i] < sc.arm.joint_limits[i].min || sc.q0[i] > sc.arm.joint_limits[i].max)
      b.fail("q0", "joint " + std::to_string(i + 1) + " starts outside its limits");
  if (Entry* e = b.find("base")) sc.arm.base_frame = pose7(b.numbers(*e, 7));
}

inline void parse_camera(Block& b, Scenario& sc) {
  b.check_unique({"f", "s", "c", "size", "extrinsic", "eye", "target", "up", "rho", "inflation",
                  "link_radius", "depth_quantum"});
  CameraModel& cam = sc.camera;
  if (auto v = b.number("f")) cam.f = *v;
  if (Entry* e = b.find("s")) {
    const auto v = b.numbers(*e, 2);
    cam.s_x = v[0];
    cam.s_y = v[1];
  }
  if (Entry* e = b.find("size")) {
    const auto v = b.numbers(*e, 2);
    cam.width = static_cast<int>(v[0]);
    cam.height = static_cast<int>(v[1]);
    if (v[0] != cam.width || v[1] != cam.height || cam.width <= 0 || cam.height <= 0)
      b.fail("size", "image size must be positive integers", e->line);
  }
  if (Entry* e = b.find("c")) {
    const auto v = b.numbers(*e, 2);
    cam.c_x = v[0];
    cam.c_y = v[1];
  }
  Entry* ext = b.find("extrinsic");
  const auto eye = b.vec3("eye");
  const auto target = b.vec3("target");
  const auto up = b.vec3("up");
  if (ext && (eye || target)) b.fail("extrinsic", "give either 'extrinsic' or 'eye'/'target'", ext->line);
  if (ext) cam.extrinsic = pose7(b.numbers(*ext, 7));
  if (eye || target) {
    if (!eye || !target) b.fail("eye", "'eye' and 'target' go together");
    if ((*target - *eye).norm() < 1e-9) b.fail("target", "must differ from 'eye'");
    cam.extrinsic = CameraModel::look_at(*eye, *target, up.value_or(Eigen::Vector3d::UnitZ()));
  }
  if (auto v = b.number("rho")) sc.perception.rho = *v;
  if (auto v = b.number("inflation")) sc.perception.inflation = *v;
  if (auto v = b.number("link_radius")) sc.perception.link_radius = *v;
  if (auto v = b.number("depth_quantum")) sc.perception.depth_quantum = *v;
  try {
    cam.validate();
  } catch (const std::invalid_argument& err) {
    b.fail("", err.what());
  }
  if (!(sc.perception.rho > 0.0)) b.fail("rho", "must be positive");
  if (!(sc.perception.inflation >= 0.0)) b.fail("inflation", "must be non-negative");
  if (!(sc.perception.link_radius >= 0.0)) b.fail("link_radius", "must be non-negative");
  if (!(sc.perception.depth_quantum >= 0.0)) b.fail("depth_quantum", "must be non-negative");
}

inline Axis parse_axis(Block& b, const std::string& key) {
  const auto v = b.word(key);
  if (!v) b.fail(key, "missing required key");
  if (*v == "x") return Axis::x;
  if (*v == "y") return Axis::y;
  if (*v == "z") return Axis::z;
  b.fail(key, "expected x, y or z", b.find(key)->line);
}

inline TaskSpec parse_task(Block& b, const Scenario& sc) {
  b.check_unique({"name", "kind", "mode", "group", "gain", "m", "sl", "su", "M", "epsilon",
                  "joint", "link", "offset", "axis", "side", "physical_margin", "orientation"});
  TaskSpec t;
  const auto kind = b.word("kind");
  if (!kind) b.fail("kind", "missing required key");
  const int dof = sc.arm.dof();
  const double eps = b.number("epsilon").value_or(sc.solver.epsilon_default);
  auto& th = t.thresholds;
  th.epsilon = eps;
  std::string default_name;
  if (*kind == "ee_position") {
    t.kind = EePositionTask{};
    t.group = PriorityGroup::operational;
    default_name = "ee";
  } else if (*kind == "ee_configuration") {
    EeConfigurationTask c;
    if (Entry* e = b.find("orientation")) {
      const auto v = b.numbers(*e, 4);
      c.orientation = Eigen::Quaterniond(v[0], v[1], v[2], v[3]).normalized();
    }
    t.kind = c;
    t.group = PriorityGroup::operational;
    default_name = "ee";
  } else if (*kind == "joint_limit") {
    Entry* e = b.find("joint");
    if (!e) b.fail("joint", "missing required key");
    JointLimitTask jl{b.integer(*e)};
    if (jl.joint < 1 || jl.joint > dof) b.fail("joint", "joint index out of range", e->line);
    t.kind = jl;
    t.mode = TaskMode::set_based;
    t.group = PriorityGroup::safety;
    const JointLimit& lim = sc.arm.joint_limits[jl.joint - 1];
    th.m = b.number("m").value_or(lim.min);
    th.M = b.number("M").value_or(lim.max);
    th.sl = b.required_number("sl");
    th.su = b.required_number("su");
    default_name = "jl" + std::to_string(jl.joint);
  } else if (*kind == "obstacle_avoidance") {
    ObstacleTask ob;
    if (Entry* e = b.find("link")) ob.link = b.integer(*e);
    if (ob.link < 1 || ob.link > dof) b.fail("link", "control link out of range");
    if (auto v = b.vec3("offset")) ob.offset = *v;
    t.kind = ob;
    t.mode = TaskMode::set_based;
    t.group = PriorityGroup::safety;
    th.m = b.number("m").value_or(0.0);
    th.sl = b.required_number("sl");
    default_name = "obst" + std::to_string(ob.link);
  } else if (*kind == "virtual_wall") {
    VirtualWallTask w;
    w.axis = parse_axis(b, "axis");
    const auto side = b.word("side");
    if (!side || (*side != "min" && *side != "max")) b.fail("side", "expected min or max");
    w.side = *side == "min" ? WallSide::min : WallSide::max;
    w.offset = b.required_number("offset");
    t.kind = w;
    t.mode = TaskMode::set_based;
    t.group = PriorityGroup::safety;
    th = wall_thresholds(w.side, w.offset, eps, b.number("physical_margin").value_or(0.1));
    default_name = std::string("wall_") + "xyz"[static_cast<int>(w.axis)] + "_" + *side;
  } else {
    b.fail("kind", "unknown task kind '" + *kind + "'", b.find("kind")->line);
  }
  t.name = b.word("name").value_or(default_name);
  if (auto m = b.word("mode")) {
    if (*m == "equality") t.mode = TaskMode::equality;
    else if (*m == "set_based") t.mode = TaskMode::set_based;
    else b.fail("mode", "expected equality or set_based", b.find("mode")->line);
  }
  if (auto g = b.word("group")) {
    if (*g == "safety") t.group = PriorityGroup::safety;
    else if (*g == "operational") t.group = PriorityGroup::operational;
    else if (*g == "optimization") t.group = PriorityGroup::optimization;
    else b.fail("group", "expected safety, operational or optimization", b.find("group")->line);
  }
  const double g0 = default_gain(t.group);
  t.gain = Eigen::VectorXd::Constant(t.dimension(), g0);
  if (Entry* e = b.find("gain")) {
    const auto v = b.numbers(*e);
    if (v.size() == 1) t.gain.setConstant(v[0]);
    else if (static_cast<int>(v.size()) == t.dimension())
      t.gain = Eigen::Map<const Eigen::VectorXd>(v.data(), t.dimension());
    else b.fail("gain", "expected 1 or " + std::to_string(t.dimension()) + " values", e->line);
  }
  // Explicit thresholds override the derived ones.
  if (auto v = b.number("m")) th.m = *v;
  if (auto v = b.number("M")) th.M = *v;
  if (auto v = b.number("sl")) th.sl = *v;
  if (auto v = b.number("su")) th.su = *v;
  try {
    validate_task(t, dof);
  } catch (const std::invalid_argument& err) {
    b.fail("", err.what());
  }
  return t;
}

inline ObstacleScript parse_obstacle(Block& b) {
  b.check_unique({"name", "shape", "radius", "half_extents", "size", "center"});
  ObstacleScript o;
  o.name = b.word("name").value_or("obstacle");
  const auto shape = b.word("shape");
  if (!shape) b.fail("shape", "missing required key");
  const Eigen::Vector3d center = b.vec3("center").value_or(Eigen::Vector3d::Zero());
  std::vector<ObstacleWaypoint> path;
  for (Entry* e : b.all("at")) {
    const auto v = b.numbers(*e, 4);
    path.push_back({v[0], Eigen::Vector3d(v[1], v[2], v[3])});
  }
  if (path.empty()) b.fail("at", "obstacle needs at least one 'at = t x y z' waypoint");
  if (*shape == "sphere") {
    const double r = b.required_number("radius");
    if (!(r > 0.0)) b.fail("radius", "must be positive");
    o.shape = Sphere{center, r};
    o.path = std::move(path);
  } else if (*shape == "box") {
    const auto h = b.vec3("half_extents");
    if (!h || !(h->array() > 0.0).all()) b.fail("half_extents", "three positive values required");
    o.shape = Box::axis_aligned(center, *h);
    o.path = std::move(path);
  } else if (*shape == "points") {
    PointSet ps;
    for (Entry* e : b.all("point")) {
      const auto v = b.numbers(*e, 3);
      ps.points.emplace_back(v[0], v[1], v[2]);
    }
    if (ps.points.empty()) b.fail("point", "point set needs at least one 'point'");
    o.shape = ps;
    o.path = std::move(path);
  } else if (*shape == "person") {
    PersonProxySpec spec;
    spec.name = o.name;
    if (Entry* e = b.find("size")) {
      const auto v = b.numbers(*e, 3);
      spec.width = v[0];
      spec.depth = v[1];
      spec.height = v[2];
    }
    spec.path = std::move(path);
    try {
      o = person_proxy(spec);
    } catch (const std::invalid_argument& err) {
      b.fail("at", err.what());
    }
  } else {
    b.fail("shape", "expected sphere, box, points or person", b.find("shape")->line);
  }
  try {
    o.validate();
  } catch (const std::invalid_argument& err) {
    b.fail("at", err.what());
  }
  return o;
}

inline void parse_waypoints(Block& b, Scenario& sc) {
  b.check_unique({"tolerance"});
  for (Entry* e : b.all("target")) {
    const auto v = b.numbers(*e, 3);
    sc.waypoints.targets.emplace_back(v[0], v[1], v[2]);
  }
  if (auto v = b.number("tolerance")) sc.waypoints.tolerance = *v;
  if (!(sc.waypoints.tolerance > 0.0)) b.fail("tolerance", "must be positive");
}

}  // namespace io_detail

// Parses and validates a scenario. Throws ConfigError naming the section,
// key, and line of the first problem.
inline Scenario parse_scenario_text(const std::string& text) {
  using namespace io_detail;
  std::vector<Block> blocks = tokenize(text);
  Scenario sc;
  const auto find_single = [&](const std::string& name) -> Block* {
    Block* found = nullptr;
    for (auto& b : blocks) {
      if (b.section != name) continue;
      if (found) b.fail("", "section may appear only once");
      found = &b;
    }
    return found;
  };
  for (auto& b : blocks) {
    static const char* known[] = {"run", "arm", "camera", "task", "obstacle", "waypoints"};
    if (std::none_of(std::begin(known), std::end(known),
                     [&](const char* k) { return b.section == k; }))
      b.fail("", "unknown section");
  }
  if (Block* b = find_single("run")) parse_run(*b, sc);
  Block* arm = find_single("arm");
  if (!arm) throw ConfigError("arm", "", "missing section");
  parse_arm(*arm, sc);
  if (Block* b = find_single("camera")) parse_camera(*b, sc);
  if (Block* b = find_single("waypoints")) parse_waypoints(*b, sc);
  for (auto& b : blocks) {
    if (b.section == "task") {
      TaskSpec t = parse_task(b, sc);
      for (const auto& prev : sc.tasks)
        if (prev.name == t.name) b.fail("name", "duplicate task name '" + t.name + "'");
      if (!sc.tasks.empty() && t.group < sc.tasks.back().group)
        b.fail("group", std::string("'") + to_string(t.group) + "' task declared after a '" +
                            to_string(sc.tasks.back().group) +
                            "' task: groups must be ordered safety, operational, optimization");
      sc.tasks.push_back(std::move(t));
    } else if (b.section == "obstacle") {
      sc.obstacles.push_back(parse_obstacle(b));
    }
  }
  if (sc.tasks.empty()) throw ConfigError("task", "", "hierarchy must be non-empty");
  if (sc.needs_target() && sc.waypoints.targets.empty())
    throw ConfigError("waypoints", "target", "end-effector task declared without waypoints");
  for (auto& b : blocks) b.check_all_used();
  try {
    sc.validate();
  } catch (const std::invalid_argument& err) {
    throw ConfigError("scenario", "", err.what());
  }
  return sc;
}

inline Scenario parse_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("file", path, "cannot open file (not found or unreadable)");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str());
}

// Human-readable hierarchy table.
inline std::string describe_tasks(const Scenario& sc) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-3s %-14s %-19s %-10s %-12s %8s %8s %6s\n", "#", "name",
                "kind", "mode", "group", "sl", "su", "eps");
  out << line;
  int i = 1;
  for (const auto& t : sc.tasks) {
    const bool sb = t.set_based();
    std::snprintf(line, sizeof line, "%-3d %-14s %-19s %-10s %-12s %8.4g %8.4g %6.3g\n", i++,
                  t.name.c_str(), kind_name(t.kind), sb ? "set_based" : "equality",
                  to_string(t.group), sb ? t.thresholds.sl : 0.0, sb ? t.thresholds.su : 0.0,
                  sb ? t.thresholds.epsilon : 0.0);
    out << line;
  }
  return out.str();
}

}  // namespace tpik
