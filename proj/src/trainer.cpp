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

#include "gemuco/trainer.hpp"

#include <omp.h>

#include <numeric>
#include <stdexcept>

#include "gemuco/rng.hpp"

namespace gemuco {

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs < 1");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size < 1");
  if (learning_rate <= 0.0) {
    throw std::invalid_argument("TrainConfig: learning_rate <= 0");
  }
}

double masked_loss(const ModalityLayout& out_layout, const Vector& pred,
                   const Vector& target,
                   const std::vector<std::uint8_t>& avail_out) {
  if (pred.size() != out_layout.total_dim() ||
      target.size() != out_layout.total_dim() ||
      static_cast<int>(avail_out.size()) != out_layout.group_count()) {
    throw std::invalid_argument("masked_loss: shape mismatch");
  }
  double sse = 0.0;
  int count = 0;
  for (int g = 0; g < out_layout.group_count(); ++g) {
    if (!avail_out[g]) continue;
    const auto d = out_layout.segment(pred, g) - out_layout.segment(target, g);
    sse += d.squaredNorm();
    count += out_layout.dim(g);
  }
  return count > 0 ? sse / count : 0.0;
}

std::vector<int> admissible_masks(const MaskSet& source,
                                  const std::vector<std::uint8_t>& avail_in) {
  std::vector<int> out;
  for (int i = 0; i < source.size(); ++i) {
    const Mask& m = source.at(i);
    bool ok = true;
    for (std::size_t g = 0; g < avail_in.size(); ++g) {
      if (!avail_in[g] && m[g]) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back(i);
  }
  return out;
}

namespace {

// Gradient of masked_loss wrt pred: 2 (pred - target) / count on available
// channels, zero elsewhere. Returns the loss value.
double loss_and_gradient(const ModalityLayout& out_layout, const Vector& pred,
                         const Vector& target,
                         const std::vector<std::uint8_t>& avail_out,
                         Vector* grad) {
  grad->setZero(pred.size());
  double sse = 0.0;
  int count = 0;
  for (int g = 0; g < out_layout.group_count(); ++g) {
    if (!avail_out[g]) continue;
    count += out_layout.dim(g);
  }
  if (count == 0) return 0.0;
  for (int g = 0; g < out_layout.group_count(); ++g) {
    if (!avail_out[g]) continue;
    for (int c = 0; c < out_layout.dim(g); ++c) {
      const int ch = out_layout.offset(g) + c;
      const double d = pred[ch] - target[ch];
      sse += d * d;
      (*grad)[ch] = 2.0 * d / count;
    }
  }
  return sse / count;
}

struct ThreadAccum {
  Weights enc;
  Weights dec;
  std::vector<Vector> pb;
  double loss_sum = 0.0;
};

void run_items(const GeMuCoModel& model,
               const std::vector<PreparedSample>& samples,
               const MaskSet& mask_source, const std::vector<BatchItem>& items,
               const std::vector<Vector>& pbs, std::size_t begin,
               std::size_t end, ThreadAccum* acc) {
  ModelTrace trace;
  Vector grad_out, grad_pb;
  for (std::size_t i = begin; i < end; ++i) {
    const PreparedSample& s = samples[items[i].sample];
    const Mask& mask = mask_source.at(items[i].mask);
    const Vector& pb =
        model.pb_dim > 0 ? pbs[s.pb_index] : Vector();
    const Vector pred = predict_traced(
        model, s.x_in_norm, mask,
        model.pb_dim > 0 ? pb : Vector::Zero(0), &trace);
    acc->loss_sum += loss_and_gradient(model.out_layout, pred, s.x_out_norm,
                                       s.avail_out, &grad_out);
    model_backward_accumulate(model, trace, grad_out, &acc->enc, &acc->dec,
                              nullptr, model.pb_dim > 0 ? &grad_pb : nullptr,
                              nullptr);
    if (model.pb_dim > 0) acc->pb[s.pb_index] += grad_pb;
  }
}

}  // namespace

BatchGradient accumulate_batch_gradient(const GeMuCoModel& model,
                                        const std::vector<PreparedSample>& samples,
                                        const MaskSet& mask_source,
                                        const std::vector<BatchItem>& items,
                                        const std::vector<Vector>& pbs,
                                        Exec exec) {
  const std::size_t n = items.size();
  auto make_accum = [&] {
    ThreadAccum a;
    a.enc = zeros_like(model.enc_spec);
    a.dec = zeros_like(model.dec_spec);
    a.pb.assign(pbs.size(), Vector::Zero(model.pb_dim));
    return a;
  };

  BatchGradient out;
  if (exec == Exec::kSerial || n < 2) {
    ThreadAccum acc = make_accum();
    run_items(model, samples, mask_source, items, pbs, 0, n, &acc);
    out.enc = std::move(acc.enc);
    out.dec = std::move(acc.dec);
    out.pb = std::move(acc.pb);
    out.loss_sum = acc.loss_sum;
    return out;
  }

  const int nthreads =
      std::max(1, std::min<int>(thread_count(), static_cast<int>(n)));
  std::vector<ThreadAccum> accums(nthreads);
  for (auto& a : accums) a = make_accum();
#pragma omp parallel for num_threads(nthreads) schedule(static, 1)
  for (int t = 0; t < nthreads; ++t) {
    const std::size_t begin = n * t / nthreads;
    const std::size_t end = n * (t + 1) / nthreads;
    run_items(model, samples, mask_source, items, pbs, begin, end, &accums[t]);
  }
  // Merge in thread order for a reproducible reduction.
  out.enc = std::move(accums[0].enc);
  out.dec = std::move(accums[0].dec);
  out.pb = std::move(accums[0].pb);
  out.loss_sum = accums[0].loss_sum;
  for (int t = 1; t < nthreads; ++t) {
    out.enc.add_scaled(accums[t].enc, 1.0);
    out.dec.add_scaled(accums[t].dec, 1.0);
    for (std::size_t k = 0; k < out.pb.size(); ++k) out.pb[k] += accums[t].pb[k];
    out.loss_sum += accums[t].loss_sum;
  }
  return out;
}

TrainResult train(GeMuCoModel model, const Dataset& data,
                  const TrainConfig& config) {
  config.validate();
  model.validate();
  data.validate(model.union_layout);

  const MaskSet all = enumerate_all_masks(model.n_sensor_in());
  const MaskSet& source = config.mask_source == MaskSource::kAllMasks
                              ? all
                              : model.feasible_masks;
  if (source.empty()) {
    throw std::invalid_argument("train: empty mask source");
  }

  // Normalize and flag once up front.
  std::vector<PreparedSample> prepared;
  std::vector<int> usable;
  for (int k = 0; k < data.state_count(); ++k) {
    const Episode& e = data.episodes[k];
    for (const Sample& raw : e.samples) {
      PreparedSample p;
      p.pb_index = k;
      p.avail_in.resize(model.n_sensor_in());
      for (int g = 0; g < model.n_sensor_in(); ++g) {
        p.avail_in[g] = raw.available[model.in_groups[g]];
      }
      p.avail_out.resize(model.out_layout.group_count());
      for (int g = 0; g < model.out_layout.group_count(); ++g) {
        p.avail_out[g] = raw.available[model.out_groups[g]];
      }
      Vector in_raw = model.extract_in(raw.values);
      Vector out_raw = model.extract_out(raw.values);
      // Unavailable entries never reach the loss or the masked input, but
      // keep them finite.
      for (int g = 0; g < model.n_sensor_in(); ++g) {
        if (!p.avail_in[g]) {
          in_raw.segment(model.in_layout.offset(g), model.in_layout.dim(g))
              .setZero();
        }
      }
      for (int g = 0; g < model.out_layout.group_count(); ++g) {
        if (!p.avail_out[g]) {
          out_raw.segment(model.out_layout.offset(g), model.out_layout.dim(g))
              .setZero();
        }
      }
      p.x_in_norm = model.normalize_in(in_raw);
      // Zero any unavailable input channel after normalization as well: the
      // admissible masks below guarantee such groups are always masked, and
      // masking zeroes them, but keep the invariant explicit.
      for (int g = 0; g < model.n_sensor_in(); ++g) {
        if (!p.avail_in[g]) {
          p.x_in_norm.segment(model.in_layout.offset(g), model.in_layout.dim(g))
              .setZero();
        }
      }
      p.x_out_norm = model.normalize_out(out_raw);
      for (int g = 0; g < model.out_layout.group_count(); ++g) {
        if (!p.avail_out[g]) {
          p.x_out_norm.segment(model.out_layout.offset(g), model.out_layout.dim(g))
              .setZero();
        }
      }
      p.admissible = admissible_masks(source, p.avail_in);
      const bool has_out = std::any_of(p.avail_out.begin(), p.avail_out.end(),
                                       [](std::uint8_t b) { return b != 0; });
      const int idx = static_cast<int>(prepared.size());
      prepared.push_back(std::move(p));
      if (!prepared.back().admissible.empty() && has_out) usable.push_back(idx);
    }
  }
  if (usable.empty()) {
    throw std::runtime_error("train: no usable samples (no admissible masks)");
  }

  // Every parametric bias starts at zero, exactly.
  std::vector<Vector> pbs(data.state_count(), Vector::Zero(model.pb_dim));

  const double lr = config.learning_rate;
  const double lr_pb = config.effective_pb_lr();
  Rng rng(Rng::mix(config.seed, 0x7261696e));

  TrainResult result;
  result.epoch_loss.reserve(config.epochs);
  std::vector<int> order = usable;
  std::vector<BatchItem> batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(order, rng);
    double epoch_loss = 0.0;
    std::size_t pos = 0;
    while (pos < order.size()) {
      const std::size_t bn =
          std::min<std::size_t>(config.batch_size, order.size() - pos);
      batch.clear();
      for (std::size_t i = 0; i < bn; ++i) {
        const int s = order[pos + i];
        const auto& adm = prepared[s].admissible;
        batch.push_back(BatchItem{s, adm[rng.index(adm.size())]});
      }
      pos += bn;
      BatchGradient g = accumulate_batch_gradient(model, prepared, source,
                                                  batch, pbs, config.exec);
      const double inv = 1.0 / static_cast<double>(bn);
      model.enc_w.add_scaled(g.enc, -lr * inv);
      model.dec_w.add_scaled(g.dec, -lr * inv);
      if (model.pb_dim > 0) {
        for (std::size_t k = 0; k < pbs.size(); ++k) {
          pbs[k] -= (lr_pb * inv) * g.pb[k];
        }
      }
      epoch_loss += g.loss_sum;
    }
    result.epoch_loss.push_back(epoch_loss / usable.size());
    if (!model.enc_w.all_finite() || !model.dec_w.all_finite()) {
      throw std::runtime_error("train: diverged (non-finite weights) at epoch " +
                               std::to_string(epoch));
    }
  }

  model.pb_table.clear();
  for (int k = 0; k < data.state_count(); ++k) {
    ParametricBias pb;
    pb.values = pbs[k];
    pb.label = data.episodes[k].state_id;
    model.pb_table[pb.label] = pb;
  }
  result.pb_table = model.pb_table;
  result.model = std::move(model);
  return result;
}

}  // namespace gemuco
