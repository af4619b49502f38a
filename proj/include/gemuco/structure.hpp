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

#ifndef GEMUCO_STRUCTURE_HPP_
#define GEMUCO_STRUCTURE_HPP_

#include <string>
#include <vector>

#include "json.hpp"

#include "gemuco/trainer.hpp"

namespace gemuco {

struct StructureThresholds {
  double c_out = 0.15;
  double c_in = 0.15;
  void validate() const;
};

struct MaskLoss {
  Mask mask;
  double loss = 0.0;
};

// Everything the structure search measured and decided, re-derivable from
// the recorded loss tables and thresholds.
struct StructureReport {
  std::vector<std::string> group_names;
  std::vector<double> out_loss;       // per-group one-vs-rest loss
  std::vector<MaskLoss> mask_loss;    // non-superset masks only
  std::vector<Mask> superset_masks;   // trivially feasible, no loss computed
  std::vector<int> out_groups;
  std::vector<int> in_groups;
  MaskSet feasible_union;             // over union groups, supersets included
  StructureThresholds thresholds;

  nlohmann::ordered_json to_json() const;
  std::string table() const;  // human-readable summary
};

struct StructureConfig {
  StructureThresholds thresholds;
  ModelConfig model;        // probe and final model shape
  TrainConfig probe_train;  // mask source is forced to all masks
  TrainConfig final_train;  // mask source is forced to the feasible set
  double eval_fraction = 0.2;
};

// Trains the probe model over the union layout as both input and output,
// drawing masks from all 2^n - 1 combinations.
TrainResult probe_train(const Dataset& data, const ModalityLayout& union_layout,
                        const StructureConfig& cfg);

// Per-group one-vs-rest losses on the eval split; the out set collects the
// groups below c_out. Throws if the out set would be empty.
struct OutputDecision {
  std::vector<int> out_groups;
  std::vector<double> out_loss;
};
OutputDecision determine_outputs(const TrainResult& probe, const Dataset& eval,
                                 const StructureThresholds& thresholds,
                                 Exec exec = Exec::kParallel);

// Per-mask losses over the out groups each mask hides. Masks whose visible
// set is a superset of the out set are feasible by construction and skipped.
// The in set is the union of groups visible in the threshold-passing masks.
struct InputDecision {
  std::vector<int> in_groups;
  std::vector<MaskLoss> mask_loss;
  std::vector<Mask> superset_masks;
  MaskSet feasible_union;
};
InputDecision determine_inputs(const TrainResult& probe, const Dataset& eval,
                               const std::vector<int>& out_groups,
                               const StructureThresholds& thresholds,
                               Exec exec = Exec::kParallel);

// Full pipeline: probe training on the train split, output/input decisions
// on the held-out split, then a fresh model on the reduced structure
// retrained from scratch on the full dataset.
struct StructureResult {
  TrainResult final_train;
  StructureReport report;
};
StructureResult determine_structure(const Dataset& data,
                                    const ModalityLayout& union_layout,
                                    const StructureConfig& cfg);

// Re-derives the chosen sets from recorded losses; used to keep reports
// consistent and by tests.
std::vector<int> derive_out_groups(const std::vector<double>& out_loss,
                                   double c_out);
MaskSet derive_feasible_union(const std::vector<MaskLoss>& mask_loss,
                              const std::vector<Mask>& superset_masks,
                              double c_in, int group_count);
std::vector<int> derive_in_groups(const std::vector<MaskLoss>& mask_loss,
                                  double c_in, int group_count);

}  // namespace gemuco

#endif  // GEMUCO_STRUCTURE_HPP_
