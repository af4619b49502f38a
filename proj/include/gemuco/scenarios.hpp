// Copyright 2026 The GeMuCo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GEMUCO_SCENARIOS_HPP_
#define GEMUCO_SCENARIOS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace gemuco {

struct ScenarioCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ScenarioResult {
  std::string scenario;
  std::vector<ScenarioCheck> checks;
  double seconds = 0.0;

  bool passed() const {
    for (const auto& c : checks) {
      if (!c.pass) return false;
    }
    return !checks.empty();
  }
  nlohmann::ordered_json to_json() const;
};

// Named end-to-end evaluation scenarios, one per acceptance-level claim.
std::vector<std::string> scenario_names();

// Runs one scenario. Unknown names throw std::invalid_argument.
ScenarioResult run_scenario(const std::string& name, std::uint64_t seed);

}  // namespace gemuco

#endif  // GEMUCO_SCENARIOS_HPP_
