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

#include "gemuco/model.hpp"

#include <algorithm>
#include <stdexcept>

#include "gemuco/rng.hpp"

namespace gemuco {

namespace {

std::vector<int> union_channels(const ModalityLayout& layout,
                                const std::vector<int>& groups) {
  std::vector<int> chans;
  for (int g : groups) {
    for (int c = 0; c < layout.dim(g); ++c) chans.push_back(layout.offset(g) + c);
  }
  return chans;
}

}  // namespace

void GeMuCoModel::finalize_channel_maps() {
  in_channels_ = union_channels(union_layout, in_groups);
  out_channels_ = union_channels(union_layout, out_groups);
}

Vector GeMuCoModel::extract_in(const Vector& x_union) const {
  Vector x(in_channels_.size());
  for (std::size_t i = 0; i < in_channels_.size(); ++i) x[i] = x_union[in_channels_[i]];
  return x;
}

Vector GeMuCoModel::extract_out(const Vector& x_union) const {
  Vector x(out_channels_.size());
  for (std::size_t i = 0; i < out_channels_.size(); ++i) x[i] = x_union[out_channels_[i]];
  return x;
}

void GeMuCoModel::scatter_out(const Vector& x_out, Vector* x_union) const {
  for (std::size_t i = 0; i < out_channels_.size(); ++i) (*x_union)[out_channels_[i]] = x_out[i];
}

void GeMuCoModel::scatter_in(const Vector& x_in, Vector* x_union) const {
  for (std::size_t i = 0; i < in_channels_.size(); ++i) (*x_union)[in_channels_[i]] = x_in[i];
}

Vector GeMuCoModel::normalize_in(const Vector& x_in_raw) const {
  Vector out(x_in_raw.size());
  for (std::size_t i = 0; i < in_channels_.size(); ++i) {
    out[i] = normalizer.normalize_at(in_channels_[i], x_in_raw[i]);
  }
  return out;
}

Vector GeMuCoModel::denormalize_in(const Vector& x_in_norm) const {
  Vector out(x_in_norm.size());
  for (std::size_t i = 0; i < in_channels_.size(); ++i) {
    out[i] = normalizer.denormalize_at(in_channels_[i], x_in_norm[i]);
  }
  return out;
}

Vector GeMuCoModel::normalize_out(const Vector& x_out_raw) const {
  Vector out(x_out_raw.size());
  for (std::size_t i = 0; i < out_channels_.size(); ++i) {
    out[i] = normalizer.normalize_at(out_channels_[i], x_out_raw[i]);
  }
  return out;
}

Vector GeMuCoModel::denormalize_out(const Vector& x_out_norm) const {
  Vector out(x_out_norm.size());
  for (std::size_t i = 0; i < out_channels_.size(); ++i) {
    out[i] = normalizer.denormalize_at(out_channels_[i], x_out_norm[i]);
  }
  return out;
}

void GeMuCoModel::validate() const {
  if (latent_dim < 1) throw std::invalid_argument("GeMuCoModel: latent_dim < 1");
  if (pb_dim < 0) throw std::invalid_argument("GeMuCoModel: pb_dim < 0");
  enc_spec.validate();
  dec_spec.validate();
  if (enc_spec.input_width() != enc_input_width()) {
    throw std::invalid_argument("GeMuCoModel: encoder input width mismatch");
  }
  if (enc_spec.output_width() != latent_dim ||
      dec_spec.input_width() != latent_dim) {
    throw std::invalid_argument("GeMuCoModel: latent width mismatch");
  }
  if (dec_spec.output_width() != out_dim()) {
    throw std::invalid_argument("GeMuCoModel: decoder output width mismatch");
  }
  if (normalizer.dim() != union_layout.total_dim()) {
    throw std::invalid_argument("GeMuCoModel: normalizer dim mismatch");
  }
}

GeMuCoModel make_model(const ModalityLayout& union_layout,
                       const std::vector<int>& in_groups,
                       const std::vector<int>& out_groups,
                       const ModelConfig& config,
                       std::optional<MaskSet> feasible) {
  if (in_groups.empty() || out_groups.empty()) {
    throw std::invalid_argument("make_model: in/out groups must be non-empty");
  }
  GeMuCoModel m;
  m.union_layout = union_layout;
  m.in_groups = in_groups;
  m.out_groups = out_groups;
  m.in_layout = union_layout.sublayout(in_groups);
  m.out_layout = union_layout.sublayout(out_groups);
  m.finalize_channel_maps();
  m.pb_dim = config.pb_dim;

  int max_group_dim = 1;
  for (int g : in_groups) max_group_dim = std::max(max_group_dim, union_layout.dim(g));
  for (int g : out_groups) max_group_dim = std::max(max_group_dim, union_layout.dim(g));
  m.latent_dim = config.latent_dim > 0 ? config.latent_dim : 2 * max_group_dim;

  const int enc_in = m.enc_input_width();
  std::vector<int> enc_widths{enc_in};
  if (config.enc_hidden.empty()) {
    const int h = std::max(16, 4 * enc_in);
    enc_widths.insert(enc_widths.end(), {h, h});
  } else {
    enc_widths.insert(enc_widths.end(), config.enc_hidden.begin(),
                      config.enc_hidden.end());
  }
  enc_widths.push_back(m.latent_dim);

  std::vector<int> dec_widths{m.latent_dim};
  if (config.dec_hidden.empty()) {
    const int h = std::max(16, 4 * m.latent_dim);
    dec_widths.insert(dec_widths.end(), {h, h});
  } else {
    dec_widths.insert(dec_widths.end(), config.dec_hidden.begin(),
                      config.dec_hidden.end());
  }
  dec_widths.push_back(m.out_dim());

  m.enc_spec = NetSpec{enc_widths, config.activation};
  m.dec_spec = NetSpec{dec_widths, config.activation};
  m.enc_w = init_weights(m.enc_spec, Rng::mix(config.seed, 1));
  m.dec_w = init_weights(m.dec_spec, Rng::mix(config.seed, 2));

  m.normalizer = Normalizer(Vector::Zero(union_layout.total_dim()),
                            Vector::Ones(union_layout.total_dim()));
  if (feasible) {
    if (feasible->group_count() != m.n_sensor_in()) {
      throw std::invalid_argument("make_model: feasible mask group count mismatch");
    }
    m.feasible_masks = std::move(*feasible);
  } else {
    m.feasible_masks = enumerate_all_masks(m.n_sensor_in());
  }
  m.validate();
  return m;
}

namespace {

Vector build_enc_input(const GeMuCoModel& m, const Vector& x_in_norm,
                       const Mask& mask, const Vector& pb) {
  if (x_in_norm.size() != m.in_dim()) {
    throw std::invalid_argument("encode: x_in width mismatch");
  }
  if (static_cast<int>(mask.size()) != m.n_sensor_in()) {
    throw std::invalid_argument("encode: mask length mismatch");
  }
  if (pb.size() != m.pb_dim) {
    throw std::invalid_argument("encode: pb_dim mismatch");
  }
  Vector enc_input(m.enc_input_width());
  enc_input.head(m.in_dim()) = apply_mask(m.in_layout, x_in_norm, mask);
  for (int g = 0; g < m.n_sensor_in(); ++g) {
    enc_input[m.in_dim() + g] = mask[g] ? 1.0 : 0.0;
  }
  if (m.pb_dim > 0) enc_input.tail(m.pb_dim) = pb;
  return enc_input;
}

}  // namespace

Vector encode(const GeMuCoModel& m, const Vector& x_in_norm, const Mask& mask,
              const Vector& pb) {
  return forward(m.enc_spec, m.enc_w, build_enc_input(m, x_in_norm, mask, pb));
}

Vector decode(const GeMuCoModel& m, const Vector& z) {
  if (z.size() != m.latent_dim) {
    throw std::invalid_argument("decode: latent width mismatch");
  }
  return forward(m.dec_spec, m.dec_w, z);
}

Vector predict(const GeMuCoModel& m, const Vector& x_in_norm, const Mask& mask,
               const Vector& pb) {
  return decode(m, encode(m, x_in_norm, mask, pb));
}

Vector predict_traced(const GeMuCoModel& m, const Vector& x_in_norm,
                      const Mask& mask, const Vector& pb, ModelTrace* trace) {
  trace->mask = mask;
  const Vector z =
      forward(m.enc_spec, m.enc_w, build_enc_input(m, x_in_norm, mask, pb),
              &trace->enc);
  return forward(m.dec_spec, m.dec_w, z, &trace->dec);
}

void model_backward_accumulate(const GeMuCoModel& m, const ModelTrace& trace,
                               const Vector& dloss_dxout, Weights* enc_acc,
                               Weights* dec_acc, Vector* grad_x_in,
                               Vector* grad_pb, Vector* grad_z) {
  Vector gz =
      backward_accumulate(m.dec_spec, m.dec_w, trace.dec, dloss_dxout, *dec_acc);
  if (grad_z) *grad_z = gz;
  Vector g_enc_in =
      backward_accumulate(m.enc_spec, m.enc_w, trace.enc, gz, *enc_acc);
  if (grad_x_in) {
    *grad_x_in = g_enc_in.head(m.in_dim());
    // Masked channels are disconnected from the loss by construction.
    for (int g = 0; g < m.n_sensor_in(); ++g) {
      if (!trace.mask[g]) {
        grad_x_in->segment(m.in_layout.offset(g), m.in_layout.dim(g)).setZero();
      }
    }
  }
  if (grad_pb) {
    *grad_pb = m.pb_dim > 0 ? Vector(g_enc_in.tail(m.pb_dim)) : Vector();
  }
}

ModelGrads model_backward(const GeMuCoModel& m, const ModelTrace& trace,
                          const Vector& dloss_dxout) {
  ModelGrads g;
  g.enc_w = zeros_like(m.enc_spec);
  g.dec_w = zeros_like(m.dec_spec);
  model_backward_accumulate(m, trace, dloss_dxout, &g.enc_w, &g.dec_w, &g.x_in,
                            &g.pb, &g.z);
  return g;
}

Matrix model_jacobian(const GeMuCoModel& m, const Vector& x_in_norm,
                      const Mask& mask, const Vector& pb,
                      const std::vector<int>& out_channels,
                      const std::vector<int>& in_channels) {
  if (out_channels.empty() || in_channels.empty()) {
    throw std::invalid_argument("model_jacobian: index sets must be non-empty");
  }
  ModelTrace trace;
  predict_traced(m, x_in_norm, mask, pb, &trace);
  Weights enc_scratch = zeros_like(m.enc_spec);
  Weights dec_scratch = zeros_like(m.dec_spec);
  Matrix jac(out_channels.size(), in_channels.size());
  Vector unit = Vector::Zero(m.out_dim());
  Vector gx;
  for (std::size_t r = 0; r < out_channels.size(); ++r) {
    const int oc = out_channels[r];
    if (oc < 0 || oc >= m.out_dim()) {
      throw std::out_of_range("model_jacobian: output channel out of bounds");
    }
    unit[oc] = 1.0;
    enc_scratch.setZero();
    dec_scratch.setZero();
    model_backward_accumulate(m, trace, unit, &enc_scratch, &dec_scratch, &gx,
                              nullptr, nullptr);
    unit[oc] = 0.0;
    for (std::size_t c = 0; c < in_channels.size(); ++c) {
      const int ic = in_channels[c];
      if (ic < 0 || ic >= m.in_dim()) {
        throw std::out_of_range("model_jacobian: input channel out of bounds");
      }
      jac(r, c) = gx[ic];
    }
  }
  return jac;
}

}  // namespace gemuco
