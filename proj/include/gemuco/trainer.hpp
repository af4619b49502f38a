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

#ifndef GEMUCO_TRAINER_HPP_
#define GEMUCO_TRAINER_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gemuco/dataset.hpp"
#include "gemuco/model.hpp"
#include "gemuco/parallel.hpp"

namespace gemuco {

enum class MaskSource { kFeasibleSet, kAllMasks };

struct TrainConfig {
  int epochs = 200;
  int batch_size = 32;
  double learning_rate = 0.02;
  // Parametric-bias learning rate; < 0 means 10x learning_rate.
  double pb_learning_rate = -1.0;
  std::uint64_t seed = 0;
  MaskSource mask_source = MaskSource::kFeasibleSet;
  Exec exec = Exec::kParallel;

  double effective_pb_lr() const {
    return pb_learning_rate < 0.0 ? 10.0 * learning_rate : pb_learning_rate;
  }
  void validate() const;
};

// Mean squared error over scalar entries of available output groups only;
// 0 when none are available. pred/target are out-space vectors.
double masked_loss(const ModalityLayout& out_layout, const Vector& pred,
                   const Vector& target,
                   const std::vector<std::uint8_t>& avail_out);

// Masks from `source` that zero out every unavailable input group of the
// sample. Returned as indices into source.masks().
std::vector<int> admissible_masks(const MaskSet& source,
                                  const std::vector<std::uint8_t>& avail_in);

// Normalized in/out views of one sample, ready for the batch kernel.
struct PreparedSample {
  Vector x_in_norm;
  Vector x_out_norm;
  std::vector<std::uint8_t> avail_in;   // per in group
  std::vector<std::uint8_t> avail_out;  // per out group
  int pb_index = 0;                     // episode index
  std::vector<int> admissible;          // indices into the mask source
};

// One forward/backward pass scheduled within a minibatch.
struct BatchItem {
  int sample = 0;  // index into the prepared array
  int mask = 0;    // index into the mask source
};

struct BatchGradient {
  Weights enc;
  Weights dec;
  std::vector<Vector> pb;  // one per episode
  double loss_sum = 0.0;
};

// Sums per-item gradients of masked_loss. The parallel path partitions
// items over threads and merges per-thread accumulators in thread order,
// so results are deterministic for a fixed thread count.
BatchGradient accumulate_batch_gradient(const GeMuCoModel& model,
                                        const std::vector<PreparedSample>& samples,
                                        const MaskSet& mask_source,
                                        const std::vector<BatchItem>& items,
                                        const std::vector<Vector>& pbs,
                                        Exec exec);

struct TrainResult {
  GeMuCoModel model;
  std::map<std::string, ParametricBias> pb_table;
  std::vector<double> epoch_loss;
};

// Mask-randomized reconstruction training with missing-modality handling.
// Weights and per-state parametric biases are updated simultaneously; every
// parametric bias starts at the zero vector. Samples for which no admissible
// mask exists are skipped. The model's normalizer must already be fitted.
TrainResult train(GeMuCoModel model, const Dataset& data,
                  const TrainConfig& config);

}  // namespace gemuco

#endif  // GEMUCO_TRAINER_HPP_
