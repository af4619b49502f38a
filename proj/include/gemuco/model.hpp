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

#ifndef GEMUCO_MODEL_HPP_
#define GEMUCO_MODEL_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gemuco/dataset.hpp"
#include "gemuco/modality.hpp"
#include "gemuco/net.hpp"

namespace gemuco {

// Small trainable vector, one per data-collection state.
struct ParametricBias {
  Vector values;
  std::string label;
};

// Correlational model: encoder over (masked x_in, mask bits, parametric
// bias) to a latent state, decoder from the latent state to x_out. Works in
// normalized space; the normalizer covers the union layout.
struct GeMuCoModel {
  ModalityLayout union_layout;
  std::vector<int> in_groups;   // indices into union_layout
  std::vector<int> out_groups;  // indices into union_layout
  ModalityLayout in_layout;     // materialized sublayouts
  ModalityLayout out_layout;

  NetSpec enc_spec;
  NetSpec dec_spec;
  Weights enc_w;
  Weights dec_w;

  int pb_dim = 0;
  int latent_dim = 1;
  Normalizer normalizer;    // over union channels
  MaskSet feasible_masks;   // over in_layout groups
  std::map<std::string, ParametricBias> pb_table;

  int in_dim() const { return in_layout.total_dim(); }
  int out_dim() const { return out_layout.total_dim(); }
  int n_sensor_in() const { return in_layout.group_count(); }
  // Encoder input width: masked x_in, mask bits, parametric bias.
  int enc_input_width() const { return in_dim() + n_sensor_in() + pb_dim; }

  // Union-space channel indices backing in/out channel k.
  const std::vector<int>& in_channel_map() const { return in_channels_; }
  const std::vector<int>& out_channel_map() const { return out_channels_; }

  Vector extract_in(const Vector& x_union) const;
  Vector extract_out(const Vector& x_union) const;
  // Writes an out-space vector back into union positions.
  void scatter_out(const Vector& x_out, Vector* x_union) const;
  void scatter_in(const Vector& x_in, Vector* x_union) const;

  Vector normalize_in(const Vector& x_in_raw) const;
  Vector denormalize_in(const Vector& x_in_norm) const;
  Vector normalize_out(const Vector& x_out_raw) const;
  Vector denormalize_out(const Vector& x_out_norm) const;

  Vector zero_pb() const { return Vector::Zero(pb_dim); }

  void validate() const;      // throws on inconsistent shapes
  void finalize_channel_maps();

 private:
  std::vector<int> in_channels_;
  std::vector<int> out_channels_;
};

struct ModelConfig {
  int pb_dim = 0;
  int latent_dim = 0;               // 0 = 2 * max group dim
  std::vector<int> enc_hidden;      // empty = two layers of max(16, 4*in)
  std::vector<int> dec_hidden;      // empty = two layers of max(16, 4*latent)
  Activation activation = Activation::kTanh;
  std::uint64_t seed = 0;
};

// Builds a model skeleton with seeded weights. The normalizer is identity
// until fitted; feasible_masks defaults to all masks over the in groups.
GeMuCoModel make_model(const ModalityLayout& union_layout,
                       const std::vector<int>& in_groups,
                       const std::vector<int>& out_groups,
                       const ModelConfig& config,
                       std::optional<MaskSet> feasible = std::nullopt);

// z = encoder(masked x_in, mask bits, pb). x_in must be normalized.
Vector encode(const GeMuCoModel& m, const Vector& x_in_norm, const Mask& mask,
              const Vector& pb);

// Normalized x_out from a latent state.
Vector decode(const GeMuCoModel& m, const Vector& z);

// decode(encode(...)), exactly.
Vector predict(const GeMuCoModel& m, const Vector& x_in_norm, const Mask& mask,
               const Vector& pb);

// Retained intermediate state for backpropagation through the whole model.
struct ModelTrace {
  ForwardTrace enc;
  ForwardTrace dec;
  Mask mask;
};

Vector predict_traced(const GeMuCoModel& m, const Vector& x_in_norm,
                      const Mask& mask, const Vector& pb, ModelTrace* trace);

// Gradients of a scalar loss wrt weights, x_in (zeroed on masked groups),
// pb, and the latent state.
struct ModelGrads {
  Weights enc_w;
  Weights dec_w;
  Vector x_in;
  Vector pb;
  Vector z;
};

ModelGrads model_backward(const GeMuCoModel& m, const ModelTrace& trace,
                          const Vector& dloss_dxout);

// As model_backward, but accumulates weight gradients into the given
// accumulators (pre-sized) and returns x_in/pb/z gradients.
void model_backward_accumulate(const GeMuCoModel& m, const ModelTrace& trace,
                               const Vector& dloss_dxout, Weights* enc_acc,
                               Weights* dec_acc, Vector* grad_x_in,
                               Vector* grad_pb, Vector* grad_z);

// d x_out[out_channels] / d x_in[in_channels] of the full model at the given
// (normalized, unmasked-by-caller) input point. Channels index in/out space.
Matrix model_jacobian(const GeMuCoModel& m, const Vector& x_in_norm,
                      const Mask& mask, const Vector& pb,
                      const std::vector<int>& out_channels,
                      const std::vector<int>& in_channels);

}  // namespace gemuco

#endif  // GEMUCO_MODEL_HPP_
