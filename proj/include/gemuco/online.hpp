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

#ifndef GEMUCO_ONLINE_HPP_
#define GEMUCO_ONLINE_HPP_

#include <deque>

#include "gemuco/rng.hpp"
#include "gemuco/trainer.hpp"

namespace gemuco {

enum class UpdateMode { kPOnly, kWOnly, kBoth };

struct OnlineConfig {
  UpdateMode mode = UpdateMode::kPOnly;
  int buffer_capacity = 100;
  int min_start = 20;
  int steps_per_datum = 1;
  double w_learning_rate = 0.02;
  double p_learning_rate = 0.2;
  std::uint64_t seed = 0;
  Exec exec = Exec::kParallel;

  void validate() const;
};

// Bounded FIFO window of streaming samples; eviction is strictly oldest-first.
class OnlineBuffer {
 public:
  explicit OnlineBuffer(int capacity);

  void push(const Sample& s);
  int size() const { return static_cast<int>(buf_.size()); }
  int capacity() const { return capacity_; }
  const std::deque<Sample>& samples() const { return buf_; }

 private:
  int capacity_;
  std::deque<Sample> buf_;
};

// Synthetic samples encoding known constraints (origins, limits, geometric
// model points); concatenated to every update batch.
struct ConstraintSet {
  std::vector<Sample> samples;
};

// Adapts a model and a live parametric bias from the buffered window.
// Below min_start this is a silent no-op. Untouched parameter blocks are
// bit-identical: p_only never writes W, w_only never writes pb.
class OnlineUpdater {
 public:
  OnlineUpdater(GeMuCoModel model, Vector pb, OnlineConfig config,
                ConstraintSet constraints = {});

  // Pushes a sample and, once the window is warm, runs steps_per_datum
  // gradient steps over buffer + constraints.
  void feed(const Sample& s);

  // One gradient pass over the current window without pushing new data.
  // Returns false (no-op) below min_start.
  bool update();

  const GeMuCoModel& model() const { return model_; }
  const Vector& pb() const { return pb_; }
  const OnlineBuffer& buffer() const { return buffer_; }
  int skipped_updates() const { return skipped_; }

 private:
  GeMuCoModel model_;
  Vector pb_;
  OnlineConfig config_;
  ConstraintSet constraints_;
  OnlineBuffer buffer_;
  Rng rng_;
  int skipped_ = 0;
};

}  // namespace gemuco

#endif  // GEMUCO_ONLINE_HPP_
