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

#ifndef GEMUCO_SERIALIZE_HPP_
#define GEMUCO_SERIALIZE_HPP_

#include <string>

#include "json.hpp"

#include "gemuco/model.hpp"

namespace gemuco {

inline constexpr int kModelFormatVersion = 1;

nlohmann::ordered_json model_to_json(const GeMuCoModel& m);
GeMuCoModel model_from_json(const nlohmann::json& j);

// Versioned JSON model file with layouts, net specs, full-precision flat
// weight arrays, normalizer, feasible mask set, and the named PB table.
void save_model(const GeMuCoModel& m, const std::string& path);
GeMuCoModel load_model(const std::string& path);

}  // namespace gemuco

#endif  // GEMUCO_SERIALIZE_HPP_
