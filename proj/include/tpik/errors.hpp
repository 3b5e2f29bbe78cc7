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

#include <stdexcept>
#include <string>

namespace tpik {

// J J^T too ill-conditioned for the plain Moore-Penrose inverse.
class RankDeficientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Control point and obstacle point coincide; the repulsion direction is
// undefined. The controller answers with an emergency stop.
class DegenerateDistanceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BehindCameraError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A set-based task queried for a boundary value while strictly inside its
// activation band.
class NotAtBoundaryError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Configuration problem found while loading or validating a scenario.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string section, std::string key, std::string what,
              int line = 0)
      : std::runtime_error(format(section, key, what, line)),
        section_(std::move(section)),
        key_(std::move(key)),
        line_(line) {}

  const std::string& section() const { return section_; }
  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  static std::string format(const std::string& section, const std::string& key,
                            const std::string& what, int line) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    out += "[" + section + "]";
    if (!key.empty()) out += " " + key;
    out += ": " + what;
    return out;
  }

  std::string section_;
  std::string key_;
  int line_;
};

}  // namespace tpik
