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

#include "gemuco/inference.hpp"

#include <algorithm>
#include <stdexcept>

namespace gemuco {

namespace {

bool in_list(const std::vector<int>& v, int x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

// Mask over in groups induced by union-group availability.
Mask induced_mask(const GeMuCoModel& m,
                  const std::vector<std::uint8_t>& availability) {
  Mask mask(m.n_sensor_in());
  for (int g = 0; g < m.n_sensor_in(); ++g) {
    mask[g] = availability[m.in_groups[g]];
  }
  return mask;
}

// Normalized in-space view of the observation, zeros on unavailable groups.
Vector observed_x_in_norm(const GeMuCoModel& m, const Observation& obs) {
  Vector in_raw = m.extract_in(obs.values);
  Mask mask = induced_mask(m, obs.available);
  for (int g = 0; g < m.n_sensor_in(); ++g) {
    if (!mask[g]) {
      in_raw.segment(m.in_layout.offset(g), m.in_layout.dim(g)).setZero();
    }
  }
  Vector in_norm = m.normalize_in(in_raw);
  for (int g = 0; g < m.n_sensor_in(); ++g) {
    if (!mask[g]) {
      in_norm.segment(m.in_layout.offset(g), m.in_layout.dim(g)).setZero();
    }
  }
  return in_norm;
}

// One TargetMatch term per available out group, matching the observation.
LossSpec observation_match_loss(const GeMuCoModel& m, const Observation& obs) {
  LossSpec loss;
  const Vector out_norm = m.normalize_out(m.extract_out(obs.values));
  for (int g = 0; g < m.out_layout.group_count(); ++g) {
    if (!obs.available[m.out_groups[g]]) continue;
    TargetMatchTerm t;
    t.out_group = g;
    t.target = out_norm.segment(m.out_layout.offset(g), m.out_layout.dim(g));
    t.weight = 1.0;
    loss.terms.push_back(t);
  }
  return loss;
}

// Feasible mask that shows only available groups, preferring the most
// informative one. Returns false when none exists.
bool nearest_feasible_mask(const GeMuCoModel& m, const Mask& avail_mask,
                           Mask* out) {
  int best_visible = -1;
  for (const Mask& cand : m.feasible_masks.masks()) {
    bool subset = true;
    int visible = 0;
    for (int g = 0; g < m.n_sensor_in(); ++g) {
      if (cand[g]) {
        if (!avail_mask[g]) {
          subset = false;
          break;
        }
        ++visible;
      }
    }
    if (subset && visible > best_visible) {
      best_visible = visible;
      *out = cand;
    }
  }
  return best_visible >= 0;
}

}  // namespace

Strategy select_strategy(const GeMuCoModel& m, int target_group,
                         const std::vector<std::uint8_t>& availability) {
  if (target_group < 0 || target_group >= m.union_layout.group_count()) {
    throw std::invalid_argument("select_strategy: unknown target group");
  }
  if (static_cast<int>(availability.size()) != m.union_layout.group_count()) {
    throw std::invalid_argument("select_strategy: availability length mismatch");
  }
  const bool in_out = in_list(m.out_groups, target_group);
  const bool in_in = in_list(m.in_groups, target_group);
  if (!in_out && !in_in) {
    throw std::invalid_argument("select_strategy: group '" +
                                m.union_layout.name(target_group) +
                                "' is neither input nor output");
  }
  if (!in_out) return Strategy::kInputIterate;
  const Mask mask = induced_mask(m, availability);
  if (!is_zero_mask(mask) && m.feasible_masks.contains(mask)) {
    return Strategy::kDirectMask;
  }
  return Strategy::kLatentIterate;
}

EstimateResult estimate(const GeMuCoModel& m, const Observation& obs,
                        const Vector& pb, IterConfig iter) {
  if (obs.values.size() != m.union_layout.total_dim() ||
      static_cast<int>(obs.available.size()) != m.union_layout.group_count()) {
    throw std::invalid_argument("estimate: observation shape mismatch");
  }
  if (std::none_of(obs.available.begin(), obs.available.end(),
                   [](std::uint8_t b) { return b != 0; })) {
    throw std::invalid_argument("estimate: no group available");
  }

  // Estimation targets are the unavailable groups.
  std::vector<int> targets;
  for (int g = 0; g < m.union_layout.group_count(); ++g) {
    if (!obs.available[g]) targets.push_back(g);
  }

  EstimateResult result;
  result.values = obs.values;

  if (targets.empty()) {
    result.strategy = Strategy::kDirectMask;
    return result;  // full observation passes through unchanged
  }

  bool all_targets_in_out = true;
  for (int g : targets) {
    if (!in_list(m.out_groups, g)) {
      all_targets_in_out = false;
      if (!in_list(m.in_groups, g)) {
        throw std::invalid_argument("estimate: group '" +
                                    m.union_layout.name(g) +
                                    "' is neither input nor output");
      }
    }
  }

  const Vector x_in_norm = observed_x_in_norm(m, obs);
  const Mask avail_mask = induced_mask(m, obs.available);

  auto write_outputs = [&](const Vector& x_out_norm) {
    const Vector out_raw = m.denormalize_out(x_out_norm);
    for (int g = 0; g < m.out_layout.group_count(); ++g) {
      const int ug = m.out_groups[g];
      if (obs.available[ug]) continue;  // observed values pass through
      result.values.segment(m.union_layout.offset(ug), m.union_layout.dim(ug)) =
          out_raw.segment(m.out_layout.offset(g), m.out_layout.dim(g));
    }
  };

  if (all_targets_in_out) {
    if (!is_zero_mask(avail_mask) && m.feasible_masks.contains(avail_mask)) {
      result.strategy = Strategy::kDirectMask;
      write_outputs(predict(m, x_in_norm, avail_mask, pb));
      return result;
    }
    // Latent iteration against the observed out channels.
    result.strategy = Strategy::kLatentIterate;
    iter.variable = OptVariable::kLatent;
    OptContext ctx;
    ctx.x_in_norm = x_in_norm;
    ctx.mask = avail_mask;
    ctx.pb = pb;
    Vector z0 = Vector::Zero(m.latent_dim);
    Mask enc_mask;
    if (nearest_feasible_mask(m, avail_mask, &enc_mask)) {
      z0 = encode(m, x_in_norm, enc_mask, pb);
    }
    const LossSpec loss = observation_match_loss(m, obs);
    OptResult r = optimize(m, z0, loss, iter, ctx);
    result.loss_trajectory = r.loss_trajectory;
    write_outputs(r.x_out_norm);
    return result;
  }

  // Some target lives only on the input side: iterate on x_in with the
  // observed input channels frozen.
  result.strategy = Strategy::kInputIterate;
  iter.variable = OptVariable::kInput;
  iter.frozen_input_channels.clear();
  for (int g = 0; g < m.n_sensor_in(); ++g) {
    if (avail_mask[g]) {
      for (int c = 0; c < m.in_layout.dim(g); ++c) {
        iter.frozen_input_channels.push_back(m.in_layout.offset(g) + c);
      }
    }
  }
  OptContext ctx;
  ctx.x_in_norm = x_in_norm;
  ctx.mask = Mask(m.n_sensor_in(), 1);  // full input visibility
  ctx.pb = pb;
  const LossSpec loss = observation_match_loss(m, obs);
  OptResult r = optimize(m, x_in_norm, loss, iter, ctx);
  result.loss_trajectory = r.loss_trajectory;
  // Estimated input groups.
  const Vector in_raw = m.denormalize_in(r.value);
  for (int g = 0; g < m.n_sensor_in(); ++g) {
    const int ug = m.in_groups[g];
    if (obs.available[ug]) continue;
    result.values.segment(m.union_layout.offset(ug), m.union_layout.dim(ug)) =
        in_raw.segment(m.in_layout.offset(g), m.in_layout.dim(g));
  }
  // Remaining unavailable out-only groups come from the decoded prediction.
  write_outputs(r.x_out_norm);
  return result;
}

ControlResult control(const GeMuCoModel& m, const ControlRequest& req,
                      const Vector& pb) {
  const int cg = req.control_group;
  if (cg < 0 || cg >= m.union_layout.group_count()) {
    throw std::invalid_argument("control: unknown control group");
  }
  const bool control_in_out = in_list(m.out_groups, cg);
  const bool control_in_in = in_list(m.in_groups, cg);
  if (!control_in_out && !control_in_in) {
    throw std::invalid_argument("control: control group unused by the model");
  }
  if (req.init_control_raw.size() != m.union_layout.dim(cg)) {
    throw std::invalid_argument("control: init control dim mismatch");
  }

  // Raw context over union channels, channel means where not supplied.
  Vector context = req.context_union_raw.size() == m.union_layout.total_dim()
                       ? req.context_union_raw
                       : m.normalizer.mean();
  context.segment(m.union_layout.offset(cg), m.union_layout.dim(cg)) =
      req.init_control_raw;
  Vector x_in_norm = m.normalize_in(m.extract_in(context));

  ControlResult result;

  // Direct prediction: one unmapped target on an input group, its one-group
  // mask feasible, control on the output side.
  if (control_in_out && req.loss.terms.size() == 1) {
    if (const auto* t = std::get_if<TargetMatchTerm>(&req.loss.terms[0])) {
      const int target_ug = m.out_groups[t->out_group];
      const int target_in = [&] {
        for (int g = 0; g < m.n_sensor_in(); ++g) {
          if (m.in_groups[g] == target_ug) return g;
        }
        return -1;
      }();
      if (!t->map && target_in >= 0) {
        Mask only(m.n_sensor_in(), 0);
        only[target_in] = 1;
        if (m.feasible_masks.contains(only)) {
          Vector x = Vector::Zero(m.in_dim());
          x.segment(m.in_layout.offset(target_in), m.in_layout.dim(target_in)) =
              t->target;
          const Vector pred = predict(m, x, only, pb);
          result.strategy = Strategy::kDirectMask;
          const Vector out_raw = m.denormalize_out(pred);
          const int og = [&] {
            for (int g = 0; g < m.out_layout.group_count(); ++g) {
              if (m.out_groups[g] == cg) return g;
            }
            return -1;
          }();
          result.control_raw =
              out_raw.segment(m.out_layout.offset(og), m.out_layout.dim(og));
          return result;
        }
      }
    }
  }

  IterConfig iter = req.iter;
  OptContext ctx;
  ctx.x_in_norm = x_in_norm;
  ctx.mask = Mask(m.n_sensor_in(), 1);
  ctx.pb = pb;

  if (control_in_out) {
    // Latent iteration; read the control group off the decoded prediction.
    iter.variable = OptVariable::kLatent;
    const Vector z0 = encode(m, x_in_norm, ctx.mask, pb);
    OptResult r = optimize(m, z0, req.loss, iter, ctx);
    result.strategy = Strategy::kLatentIterate;
    result.loss_trajectory = r.loss_trajectory;
    const Vector out_raw = m.denormalize_out(r.x_out_norm);
    for (int g = 0; g < m.out_layout.group_count(); ++g) {
      if (m.out_groups[g] == cg) {
        result.control_raw =
            out_raw.segment(m.out_layout.offset(g), m.out_layout.dim(g));
        return result;
      }
    }
    throw std::logic_error("control: control group lost");
  }

  // Input iteration: optimize the control channels, freeze the rest.
  iter.variable = OptVariable::kInput;
  iter.frozen_input_channels.clear();
  int control_in = -1;
  for (int g = 0; g < m.n_sensor_in(); ++g) {
    if (m.in_groups[g] == cg) {
      control_in = g;
      continue;
    }
    for (int c = 0; c < m.in_layout.dim(g); ++c) {
      iter.frozen_input_channels.push_back(m.in_layout.offset(g) + c);
    }
  }
  OptResult r = optimize(m, x_in_norm, req.loss, iter, ctx);
  result.strategy = Strategy::kInputIterate;
  result.loss_trajectory = r.loss_trajectory;
  const Vector in_raw = m.denormalize_in(r.value);
  result.control_raw = in_raw.segment(m.in_layout.offset(control_in),
                                      m.in_layout.dim(control_in));
  return result;
}

SimulateResult simulate(const GeMuCoModel& m, const Vector& x_send_raw,
                        int command_group, const LossSpec& constraints,
                        const Vector& pb, IterConfig iter,
                        SimulationSession* session) {
  int og = -1;
  for (int g = 0; g < m.out_layout.group_count(); ++g) {
    if (m.out_groups[g] == command_group) og = g;
  }
  if (og < 0) {
    throw std::invalid_argument("simulate: command group must be an output");
  }
  if (x_send_raw.size() != m.out_layout.dim(og)) {
    throw std::invalid_argument("simulate: command dim mismatch");
  }

  LossSpec loss;
  TargetMatchTerm match;
  match.out_group = og;
  Vector send_norm(x_send_raw.size());
  for (int c = 0; c < x_send_raw.size(); ++c) {
    send_norm[c] = m.normalizer.normalize_at(
        m.out_channel_map()[m.out_layout.offset(og) + c], x_send_raw[c]);
  }
  match.target = send_norm;
  match.weight = 1.0;
  loss.terms.push_back(match);
  loss.terms.insert(loss.terms.end(), constraints.terms.begin(),
                    constraints.terms.end());

  iter.variable = OptVariable::kLatent;
  OptContext ctx;
  ctx.x_in_norm = Vector::Zero(m.in_dim());
  ctx.mask = Mask(m.n_sensor_in(), 1);
  ctx.pb = pb;

  Vector z0 = Vector::Zero(m.latent_dim);
  if (session && session->carry_over && session->has_z) z0 = session->z;

  OptResult r = optimize(m, z0, loss, iter, ctx);
  if (session) {
    session->z = r.value;
    session->has_z = true;
  }
  SimulateResult result;
  result.x_out_raw = m.denormalize_out(r.x_out_norm);
  result.loss_trajectory = r.loss_trajectory;
  return result;
}

}  // namespace gemuco
