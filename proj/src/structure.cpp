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

#include "gemuco/structure.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "gemuco/rng.hpp"

namespace gemuco {

void StructureThresholds::validate() const {
  if (c_out <= 0.0 || c_in <= 0.0) {
    throw std::invalid_argument("StructureThresholds: thresholds must be > 0");
  }
}

namespace {

// Normalized union-space views of the eval samples plus their state PBs.
struct EvalData {
  std::vector<Vector> x_norm;
  std::vector<std::vector<std::uint8_t>> avail;
  std::vector<int> pb_index;
  std::vector<Vector> pbs;
};

EvalData prepare_eval(const GeMuCoModel& probe, const Dataset& eval) {
  EvalData out;
  for (const Episode& e : eval.episodes) {
    int pb_idx = static_cast<int>(out.pbs.size());
    auto it = probe.pb_table.find(e.state_id);
    if (probe.pb_dim > 0) {
      if (it == probe.pb_table.end()) {
        throw std::runtime_error("structure: eval state '" + e.state_id +
                                 "' missing from probe pb table");
      }
      out.pbs.push_back(it->second.values);
    } else {
      out.pbs.push_back(Vector::Zero(0));
    }
    for (const Sample& s : e.samples) {
      Vector raw = s.values;
      for (int g = 0; g < probe.union_layout.group_count(); ++g) {
        if (!s.group_available(g)) {
          raw.segment(probe.union_layout.offset(g), probe.union_layout.dim(g))
              .setZero();
        }
      }
      out.x_norm.push_back(probe.normalizer.normalize(raw));
      out.avail.push_back(s.available);
      out.pb_index.push_back(pb_idx);
    }
  }
  return out;
}

// Mean MSE over the channels of `scored_groups` when predicting the eval
// samples under `mask`. Samples missing a visible or scored group are
// skipped. Returns +inf when nothing could be scored.
double mask_eval_loss(const GeMuCoModel& probe, const EvalData& data,
                      const Mask& mask, const std::vector<int>& scored_groups) {
  double sse = 0.0;
  long count = 0;
  for (std::size_t i = 0; i < data.x_norm.size(); ++i) {
    bool usable = true;
    for (int g = 0; g < probe.union_layout.group_count(); ++g) {
      if (mask[g] && !data.avail[i][g]) {
        usable = false;  // a visible group must be observed
        break;
      }
    }
    if (usable) {
      for (int g : scored_groups) {
        if (!data.avail[i][g]) {
          usable = false;
          break;
        }
      }
    }
    if (!usable) continue;
    const Vector pred =
        predict(probe, data.x_norm[i], mask, data.pbs[data.pb_index[i]]);
    for (int g : scored_groups) {
      const auto diff =
          pred.segment(probe.union_layout.offset(g), probe.union_layout.dim(g)) -
          data.x_norm[i].segment(probe.union_layout.offset(g),
                                 probe.union_layout.dim(g));
      sse += diff.squaredNorm();
      count += probe.union_layout.dim(g);
    }
  }
  return count > 0 ? sse / static_cast<double>(count)
                   : std::numeric_limits<double>::infinity();
}

}  // namespace

TrainResult probe_train(const Dataset& data, const ModalityLayout& union_layout,
                        const StructureConfig& cfg) {
  if (union_layout.group_count() > 16) {
    throw std::invalid_argument("probe_train: more than 16 groups");
  }
  std::vector<int> all_groups(union_layout.group_count());
  for (int g = 0; g < union_layout.group_count(); ++g) all_groups[g] = g;
  GeMuCoModel probe = make_model(union_layout, all_groups, all_groups, cfg.model);
  probe.normalizer = fit_normalizer(data, union_layout);
  TrainConfig tc = cfg.probe_train;
  tc.mask_source = MaskSource::kAllMasks;
  return train(std::move(probe), data, tc);
}

OutputDecision determine_outputs(const TrainResult& probe, const Dataset& eval,
                                 const StructureThresholds& thresholds,
                                 Exec exec) {
  thresholds.validate();
  const GeMuCoModel& model = probe.model;
  const int n = model.union_layout.group_count();
  const EvalData data = prepare_eval(model, eval);

  OutputDecision decision;
  decision.out_loss.assign(n, 0.0);
  const int nthreads = std::max(1, std::min(thread_count(), n));
#pragma omp parallel for num_threads(nthreads) schedule(static) if (exec == Exec::kParallel)
  for (int i = 0; i < n; ++i) {
    Mask hide_i(n, 1);
    hide_i[i] = 0;
    decision.out_loss[i] = mask_eval_loss(model, data, hide_i, {i});
  }
  decision.out_groups = derive_out_groups(decision.out_loss, thresholds.c_out);
  if (decision.out_groups.empty()) {
    throw std::runtime_error("determine_outputs: no predictable outputs at threshold");
  }
  return decision;
}

InputDecision determine_inputs(const TrainResult& probe, const Dataset& eval,
                               const std::vector<int>& out_groups,
                               const StructureThresholds& thresholds,
                               Exec exec) {
  thresholds.validate();
  if (out_groups.empty()) {
    throw std::invalid_argument("determine_inputs: out groups empty");
  }
  const GeMuCoModel& model = probe.model;
  const int n = model.union_layout.group_count();
  const EvalData data = prepare_eval(model, eval);

  InputDecision decision;
  const MaskSet all = enumerate_all_masks(n);
  std::vector<const Mask*> scored;
  std::vector<std::vector<int>> hidden_out;  // per scored mask
  for (int i = 0; i < all.size(); ++i) {
    const Mask& m = all.at(i);
    std::vector<int> hidden;
    for (int g : out_groups) {
      if (!m[g]) hidden.push_back(g);
    }
    if (hidden.empty()) {
      // Visible set is a superset of the out set: feasible by construction.
      decision.superset_masks.push_back(m);
    } else {
      scored.push_back(&m);
      hidden_out.push_back(std::move(hidden));
    }
  }

  decision.mask_loss.resize(scored.size());
  const int nscored = static_cast<int>(scored.size());
  const int nthreads = std::max(1, std::min(thread_count(), std::max(1, nscored)));
#pragma omp parallel for num_threads(nthreads) schedule(dynamic) if (exec == Exec::kParallel)
  for (int i = 0; i < nscored; ++i) {
    decision.mask_loss[i].mask = *scored[i];
    decision.mask_loss[i].loss =
        mask_eval_loss(model, data, *scored[i], hidden_out[i]);
  }

  decision.in_groups = derive_in_groups(decision.mask_loss, thresholds.c_in, n);
  if (decision.in_groups.empty()) {
    if (!decision.mask_loss.empty()) {
      throw std::runtime_error("determine_inputs: no feasible masks at threshold");
    }
    // Every mask shows the whole out set (single-group layouts): the model
    // degenerates to a plain autoencoder over the superset masks.
    std::vector<std::uint8_t> used(n, 0);
    for (const Mask& m : decision.superset_masks) {
      for (int g = 0; g < n; ++g) {
        if (m[g]) used[g] = 1;
      }
    }
    for (int g = 0; g < n; ++g) {
      if (used[g]) decision.in_groups.push_back(g);
    }
  }
  decision.feasible_union = derive_feasible_union(
      decision.mask_loss, decision.superset_masks, thresholds.c_in, n);
  return decision;
}

std::vector<int> derive_out_groups(const std::vector<double>& out_loss,
                                   double c_out) {
  std::vector<int> out;
  for (std::size_t i = 0; i < out_loss.size(); ++i) {
    if (out_loss[i] < c_out) out.push_back(static_cast<int>(i));
  }
  return out;
}

MaskSet derive_feasible_union(const std::vector<MaskLoss>& mask_loss,
                              const std::vector<Mask>& superset_masks,
                              double c_in, int group_count) {
  MaskSet fs(group_count);
  for (const MaskLoss& ml : mask_loss) {
    if (ml.loss < c_in) fs.insert(ml.mask);
  }
  for (const Mask& m : superset_masks) fs.insert(m);
  return fs;
}

std::vector<int> derive_in_groups(const std::vector<MaskLoss>& mask_loss,
                                  double c_in, int group_count) {
  std::vector<std::uint8_t> used(group_count, 0);
  for (const MaskLoss& ml : mask_loss) {
    if (ml.loss >= c_in) continue;
    for (int g = 0; g < group_count; ++g) {
      if (ml.mask[g]) used[g] = 1;
    }
  }
  std::vector<int> in;
  for (int g = 0; g < group_count; ++g) {
    if (used[g]) in.push_back(g);
  }
  return in;
}

StructureResult determine_structure(const Dataset& data,
                                    const ModalityLayout& union_layout,
                                    const StructureConfig& cfg) {
  cfg.thresholds.validate();
  Dataset train_split, eval_split;
  split_dataset(data, cfg.eval_fraction, &train_split, &eval_split);

  TrainResult probe = probe_train(train_split, union_layout, cfg);
  OutputDecision outputs =
      determine_outputs(probe, eval_split, cfg.thresholds, cfg.probe_train.exec);
  InputDecision inputs = determine_inputs(probe, eval_split, outputs.out_groups,
                                          cfg.thresholds, cfg.probe_train.exec);

  StructureReport report;
  for (int g = 0; g < union_layout.group_count(); ++g) {
    report.group_names.push_back(union_layout.name(g));
  }
  report.out_loss = outputs.out_loss;
  report.mask_loss = inputs.mask_loss;
  report.superset_masks = inputs.superset_masks;
  report.out_groups = outputs.out_groups;
  report.in_groups = inputs.in_groups;
  report.feasible_union = inputs.feasible_union;
  report.thresholds = cfg.thresholds;

  // Feasible masks for the reduced model: every feasible union mask whose
  // visible groups all survived as inputs, re-indexed over the in groups.
  MaskSet final_masks(static_cast<int>(inputs.in_groups.size()));
  for (const Mask& m : inputs.feasible_union.masks()) {
    bool representable = true;
    for (int g = 0; g < union_layout.group_count(); ++g) {
      if (m[g] && std::find(inputs.in_groups.begin(), inputs.in_groups.end(),
                            g) == inputs.in_groups.end()) {
        representable = false;
        break;
      }
    }
    if (!representable) continue;
    Mask proj(inputs.in_groups.size());
    for (std::size_t i = 0; i < inputs.in_groups.size(); ++i) {
      proj[i] = m[inputs.in_groups[i]];
    }
    if (!is_zero_mask(proj)) final_masks.insert(proj);
  }

  // Rebuild from scratch on the reduced structure; probe-phase exposure to
  // discarded groups must not leak into the final weights.
  ModelConfig final_model_cfg = cfg.model;
  final_model_cfg.seed = Rng::mix(cfg.model.seed, 0x66696e616c);
  GeMuCoModel final_model =
      make_model(union_layout, inputs.in_groups, outputs.out_groups,
                 final_model_cfg, final_masks);
  final_model.normalizer = fit_normalizer(data, union_layout);
  TrainConfig tc = cfg.final_train;
  tc.mask_source = MaskSource::kFeasibleSet;

  StructureResult result;
  result.final_train = train(std::move(final_model), data, tc);
  result.report = std::move(report);
  return result;
}

nlohmann::ordered_json StructureReport::to_json() const {
  nlohmann::ordered_json j;
  j["thresholds"] = {{"c_out", thresholds.c_out}, {"c_in", thresholds.c_in}};
  j["group_names"] = group_names;
  j["out_loss"] = out_loss;
  nlohmann::ordered_json ml = nlohmann::ordered_json::array();
  for (const MaskLoss& m : mask_loss) {
    ml.push_back({{"mask", mask_to_string(m.mask)}, {"loss", m.loss}});
  }
  j["mask_loss"] = ml;
  nlohmann::ordered_json sup = nlohmann::ordered_json::array();
  for (const Mask& m : superset_masks) sup.push_back(mask_to_string(m));
  j["superset_masks"] = sup;
  j["out_groups"] = out_groups;
  j["in_groups"] = in_groups;
  nlohmann::ordered_json fs = nlohmann::ordered_json::array();
  for (const Mask& m : feasible_union.masks()) fs.push_back(mask_to_string(m));
  j["feasible_masks_union"] = fs;
  return j;
}

std::string StructureReport::table() const {
  std::ostringstream os;
  os << "structure report (c_out=" << thresholds.c_out
     << ", c_in=" << thresholds.c_in << ")\n";
  os << "  group losses:\n";
  for (std::size_t i = 0; i < group_names.size(); ++i) {
    const bool chosen = std::find(out_groups.begin(), out_groups.end(),
                                  static_cast<int>(i)) != out_groups.end();
    os << "    " << group_names[i] << ": " << out_loss[i]
       << (chosen ? "  -> output" : "") << "\n";
  }
  os << "  mask losses:\n";
  for (const MaskLoss& m : mask_loss) {
    os << "    " << mask_to_string(m.mask) << ": " << m.loss
       << (m.loss < thresholds.c_in ? "  -> feasible" : "") << "\n";
  }
  os << "  superset masks (feasible by construction):";
  for (const Mask& m : superset_masks) os << " " << mask_to_string(m);
  os << "\n  inputs:";
  for (int g : in_groups) os << " " << group_names[g];
  os << "\n  outputs:";
  for (int g : out_groups) os << " " << group_names[g];
  os << "\n";
  return os.str();
}

}  // namespace gemuco
