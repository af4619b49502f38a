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

#include "gemuco/online.hpp"

#include <stdexcept>

namespace gemuco {

void OnlineConfig::validate() const {
  if (buffer_capacity < 1) {
    throw std::invalid_argument("OnlineConfig: buffer_capacity < 1");
  }
  if (min_start < 1 || min_start > buffer_capacity) {
    throw std::invalid_argument("OnlineConfig: need 0 < min_start <= capacity");
  }
  if (steps_per_datum < 1) {
    throw std::invalid_argument("OnlineConfig: steps_per_datum < 1");
  }
  if (w_learning_rate <= 0.0 || p_learning_rate <= 0.0) {
    throw std::invalid_argument("OnlineConfig: learning rates must be > 0");
  }
}

OnlineBuffer::OnlineBuffer(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("OnlineBuffer: capacity < 1");
}

void OnlineBuffer::push(const Sample& s) {
  if (static_cast<int>(buf_.size()) == capacity_) buf_.pop_front();
  buf_.push_back(s);
}

OnlineUpdater::OnlineUpdater(GeMuCoModel model, Vector pb, OnlineConfig config,
                             ConstraintSet constraints)
    : model_(std::move(model)),
      pb_(std::move(pb)),
      config_(config),
      constraints_(std::move(constraints)),
      buffer_(config.buffer_capacity),
      rng_(Rng::mix(config.seed, 0x6f6e6c696e)) {
  config_.validate();
  model_.validate();
  if (pb_.size() != model_.pb_dim) {
    throw std::invalid_argument("OnlineUpdater: pb dim mismatch");
  }
  if ((config_.mode == UpdateMode::kPOnly || config_.mode == UpdateMode::kBoth) &&
      model_.pb_dim == 0) {
    throw std::invalid_argument("OnlineUpdater: p update requires pb_dim > 0");
  }
}

void OnlineUpdater::feed(const Sample& s) {
  buffer_.push(s);
  for (int i = 0; i < config_.steps_per_datum; ++i) {
    if (!update()) break;
  }
}

bool OnlineUpdater::update() {
  if (buffer_.size() < config_.min_start) {
    ++skipped_;  // silent no-op below the warm-up threshold
    return false;
  }
  // Assemble window + constraints and run one gradient pass with the same
  // batch kernel the offline trainer uses.
  std::vector<PreparedSample> prepared;
  std::vector<BatchItem> items;
  const MaskSet& source = model_.feasible_masks;
  auto add_sample = [&](const Sample& raw) {
    PreparedSample p;
    p.pb_index = 0;
    p.avail_in.resize(model_.n_sensor_in());
    for (int g = 0; g < model_.n_sensor_in(); ++g) {
      p.avail_in[g] = raw.available[model_.in_groups[g]];
    }
    p.avail_out.resize(model_.out_layout.group_count());
    for (int g = 0; g < model_.out_layout.group_count(); ++g) {
      p.avail_out[g] = raw.available[model_.out_groups[g]];
    }
    Vector in_raw = model_.extract_in(raw.values);
    Vector out_raw = model_.extract_out(raw.values);
    for (int g = 0; g < model_.n_sensor_in(); ++g) {
      if (!p.avail_in[g]) {
        in_raw.segment(model_.in_layout.offset(g), model_.in_layout.dim(g))
            .setZero();
      }
    }
    for (int g = 0; g < model_.out_layout.group_count(); ++g) {
      if (!p.avail_out[g]) {
        out_raw.segment(model_.out_layout.offset(g), model_.out_layout.dim(g))
            .setZero();
      }
    }
    p.x_in_norm = model_.normalize_in(in_raw);
    for (int g = 0; g < model_.n_sensor_in(); ++g) {
      if (!p.avail_in[g]) {
        p.x_in_norm.segment(model_.in_layout.offset(g), model_.in_layout.dim(g))
            .setZero();
      }
    }
    p.x_out_norm = model_.normalize_out(out_raw);
    for (int g = 0; g < model_.out_layout.group_count(); ++g) {
      if (!p.avail_out[g]) {
        p.x_out_norm
            .segment(model_.out_layout.offset(g), model_.out_layout.dim(g))
            .setZero();
      }
    }
    p.admissible = admissible_masks(source, p.avail_in);
    if (p.admissible.empty()) return;  // nothing can mask the missing data
    const int idx = static_cast<int>(prepared.size());
    prepared.push_back(std::move(p));
    const auto& adm = prepared.back().admissible;
    items.push_back(BatchItem{idx, adm[rng_.index(adm.size())]});
  };
  for (const Sample& s : buffer_.samples()) add_sample(s);
  for (const Sample& s : constraints_.samples) add_sample(s);
  if (items.empty()) {
    ++skipped_;
    return false;
  }

  std::vector<Vector> pbs{model_.pb_dim > 0 ? pb_ : Vector::Zero(0)};
  BatchGradient g = accumulate_batch_gradient(model_, prepared, source, items,
                                              pbs, config_.exec);
  const double inv = 1.0 / static_cast<double>(items.size());
  if (config_.mode == UpdateMode::kWOnly || config_.mode == UpdateMode::kBoth) {
    model_.enc_w.add_scaled(g.enc, -config_.w_learning_rate * inv);
    model_.dec_w.add_scaled(g.dec, -config_.w_learning_rate * inv);
  }
  if (config_.mode == UpdateMode::kPOnly || config_.mode == UpdateMode::kBoth) {
    pb_ -= (config_.p_learning_rate * inv) * g.pb[0];
  }
  return true;
}

}  // namespace gemuco
