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

#ifndef GEMUCO_INFERENCE_HPP_
#define GEMUCO_INFERENCE_HPP_

#include "gemuco/iteropt.hpp"

namespace gemuco {

// Raw-unit values over the union layout with per-group availability.
struct Observation {
  Vector values;
  std::vector<std::uint8_t> available;
};

enum class Strategy { kDirectMask, kLatentIterate, kInputIterate };

// Dispatch rule for estimating `target_group` (union index) given the
// availability pattern: a single forward pass when the induced mask is
// feasible and the target is an output; otherwise latent iteration for
// output targets and input iteration for input-only targets.
Strategy select_strategy(const GeMuCoModel& m, int target_group,
                         const std::vector<std::uint8_t>& availability);

struct EstimateResult {
  Vector values;  // union layout, raw units; observed channels pass through
  Strategy strategy = Strategy::kDirectMask;
  std::vector<double> loss_trajectory;
};

// Fills in every unavailable group of the observation. Observed values are
// never overwritten.
EstimateResult estimate(const GeMuCoModel& m, const Observation& obs,
                        const Vector& pb, IterConfig iter = {});

struct ControlRequest {
  LossSpec loss;            // terms in normalized model space
  int control_group = 0;    // union group index of the control input
  Vector init_control_raw;  // raw units
  // Raw values for the remaining in-groups (channel means when empty).
  Vector context_union_raw;
  IterConfig iter;
};

struct ControlResult {
  Vector control_raw;
  Strategy strategy = Strategy::kLatentIterate;
  std::vector<double> loss_trajectory;
};

// Computes the control input minimizing the loss. Direct prediction is used
// when the loss is a single unmapped target on an input group whose
// one-group mask is feasible and the control is an output; otherwise latent
// iteration (control in outputs) or input iteration (control input-only).
ControlResult control(const GeMuCoModel& m, const ControlRequest& req,
                      const Vector& pb);

// Carries the latent state across simulate() calls (time marching).
struct SimulationSession {
  bool carry_over = true;
  bool has_z = false;
  Vector z;
};

// Predicts the full sensor state that executing x_send would produce, under
// the supplied constraint terms.
struct SimulateResult {
  Vector x_out_raw;  // out layout, raw units
  std::vector<double> loss_trajectory;
};
SimulateResult simulate(const GeMuCoModel& m, const Vector& x_send_raw,
                        int command_group, const LossSpec& constraints,
                        const Vector& pb, IterConfig iter = {},
                        SimulationSession* session = nullptr);

}  // namespace gemuco

#endif  // GEMUCO_INFERENCE_HPP_
