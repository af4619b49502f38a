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

#include "gemuco/scenarios.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "gemuco/anomaly.hpp"
#include "gemuco/inference.hpp"
#include "gemuco/online.hpp"
#include "gemuco/structure.hpp"
#include "gemuco/worlds.hpp"

namespace gemuco {

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

void add_check(ScenarioResult* r, const std::string& name, bool pass,
               const std::string& detail) {
  r->checks.push_back(ScenarioCheck{name, pass, detail});
}

// Spearman rank correlation; ties get averaged ranks.
double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * (i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double mean = (n + 1.0) / 2.0;
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (ra[i] - mean) * (rb[i] - mean);
    da += (ra[i] - mean) * (ra[i] - mean);
    db += (rb[i] - mean) * (rb[i] - mean);
  }
  if (da == 0.0 || db == 0.0) return 0.0;
  return num / std::sqrt(da * db);
}

// ---------------------------------------------------------------------------
// World A: nine grasp states, reduced model theta -> x_tool with 2-D PB.

struct GraspState {
  double l_tool;
  double phi;
};

std::vector<GraspState> world_a_states() {
  std::vector<GraspState> s;
  for (double l : {300.0, 500.0, 700.0}) {
    for (double phi : {0.0, 30.0, 60.0}) s.push_back({l, phi});
  }
  return s;
}

ArmToolWorld world_a(double l_tool, double phi) {
  ArmToolWorld::Params p;
  p.l_tool_mm = l_tool;
  p.phi_tool_deg = phi;
  return ArmToolWorld(p);
}

Dataset world_a_dataset(int per_state, std::uint64_t seed) {
  Dataset d;
  int k = 0;
  for (const GraspState& s : world_a_states()) {
    d.episodes.push_back(
        world_a(s.l_tool, s.phi).random_rollout(per_state, Rng::mix(seed, k)));
    ++k;
  }
  return d;
}

StructureConfig world_a_structure_config(std::uint64_t seed) {
  StructureConfig cfg;
  cfg.thresholds = {0.15, 0.15};
  cfg.model.pb_dim = 2;
  cfg.model.seed = seed;
  cfg.probe_train.epochs = 150;
  cfg.probe_train.batch_size = 32;
  cfg.probe_train.learning_rate = 0.03;
  cfg.probe_train.seed = seed;
  cfg.final_train.epochs = 200;
  cfg.final_train.batch_size = 32;
  cfg.final_train.learning_rate = 0.03;
  cfg.final_train.seed = Rng::mix(seed, 1);
  return cfg;
}

// Trained reduced world-A model (theta -> x_tool), cached per seed.
const GeMuCoModel& cached_world_a(std::uint64_t seed) {
  static std::map<std::uint64_t, GeMuCoModel> cache;
  auto it = cache.find(seed);
  if (it != cache.end()) return it->second;

  const ModalityLayout lay = ArmToolWorld::layout();
  Dataset data = world_a_dataset(1000, Rng::mix(seed, 0xA));
  ModelConfig mc;
  mc.pb_dim = 2;
  mc.seed = seed;
  MaskSet masks(1);
  masks.insert(Mask{1});
  GeMuCoModel model = make_model(lay, {0}, {1}, mc, masks);
  model.normalizer = fit_normalizer(data, lay);
  TrainConfig tc;
  tc.epochs = 300;
  tc.batch_size = 32;
  tc.learning_rate = 0.03;
  tc.seed = seed;
  TrainResult r = train(std::move(model), data, tc);
  return cache.emplace(seed, std::move(r.model)).first->second;
}

// Mean tool-tip estimation error of the model at a parametric bias, against
// the true world, over a fixed probe posture set.
double world_a_estimation_error(const GeMuCoModel& model, const Vector& pb,
                                const ArmToolWorld& world, std::uint64_t seed) {
  Rng rng(Rng::mix(seed, 0xE57));
  double total = 0.0;
  const int n = 25;
  for (int i = 0; i < n; ++i) {
    Vector theta(4);
    for (int j = 0; j < 4; ++j) {
      theta[j] = rng.uniform(-world.params().joint_limit_rad,
                             world.params().joint_limit_rad);
    }
    const Vector x_in = model.normalize_in(theta);
    const Vector pred = model.denormalize_out(predict(model, x_in, Mask{1}, pb));
    total += oracle_error(pred, world.tool_tip(theta));
  }
  return total / n;
}

// ---------------------------------------------------------------------------
// World B: theta/f/l model without parametric bias.

MaskSet world_b_masks() {
  MaskSet ms(3);
  ms.insert(Mask{1, 1, 0});
  ms.insert(Mask{0, 1, 1});
  ms.insert(Mask{1, 1, 1});
  return ms;
}

GeMuCoModel train_world_b_on(const TendonArmWorld& world, int n_samples,
                             std::uint64_t seed, int epochs) {
  const ModalityLayout lay = TendonArmWorld::layout();
  Dataset data;
  data.episodes.push_back(world.random_rollout(n_samples, Rng::mix(seed, 0xB)));
  ModelConfig mc;
  mc.pb_dim = 0;
  mc.seed = seed;
  GeMuCoModel model = make_model(lay, {0, 1, 2}, {0, 1, 2}, mc, world_b_masks());
  model.normalizer = fit_normalizer(data, lay);
  TrainConfig tc;
  tc.epochs = epochs;
  tc.batch_size = 32;
  tc.learning_rate = 0.03;
  tc.seed = seed;
  return train(std::move(model), data, tc).model;
}

const GeMuCoModel& cached_world_b(std::uint64_t seed) {
  static std::map<std::uint64_t, GeMuCoModel> cache;
  auto it = cache.find(seed);
  if (it != cache.end()) return it->second;
  TendonArmWorld world(TendonArmWorld::Params::defaults());
  GeMuCoModel m = train_world_b_on(world, 10000, seed, 250);
  return cache.emplace(seed, std::move(m)).first->second;
}

// Gravity-compensation torque signature in normalized model space, taken at
// the neutral equilibrium point: tau_ext = -G^T f so that the balance
// residual vanishes there.
Vector world_b_tau_ext(const GeMuCoModel& model, const TendonArmWorld& world) {
  const Vector theta0 = Vector::Zero(2);
  const Vector f0 = world.equilibrium_tension(theta0);
  const Vector l0 = world.muscle_length(theta0, f0);
  Vector raw(10);
  raw << theta0, f0, l0;
  const Vector x_in = model.normalize_in(raw);
  std::vector<int> l_chans{6, 7, 8, 9}, th_chans{0, 1};
  const Matrix g = model_jacobian(model, x_in, Mask{1, 1, 1}, Vector(),
                                  l_chans, th_chans);
  Vector f_norm(4);
  for (int i = 0; i < 4; ++i) f_norm[i] = x_in[2 + i];
  return -g.transpose() * f_norm;
}

LossSpec world_b_sim_loss(const GeMuCoModel& model, const TendonArmWorld& world) {
  // Tension magnitude and torque balance; the length match is added by
  // simulate() itself.
  LossSpec loss;
  MagnitudeTerm mag;
  mag.out_group = 1;
  mag.weight = 0.1;
  loss.terms.push_back(mag);
  TorqueBalanceTerm tb;
  tb.angle_in_group = 0;
  tb.tension_out_group = 1;
  tb.length_out_group = 2;
  tb.tau_ext = world_b_tau_ext(model, world);
  tb.weight = 0.001;
  loss.terms.push_back(tb);
  return loss;
}

// Scripted smooth joint trajectory within limits.
Vector world_b_traj(int t, int period) {
  Vector theta(2);
  const double s = 2.0 * 3.14159265358979323846 * t / period;
  theta << 0.6 * std::sin(s), 0.5 * std::sin(2.0 * s + 1.0);
  return theta;
}

// RMS simulated-joint error against the oracle over a command trajectory.
double world_b_sim_rms(const GeMuCoModel& model, const TendonArmWorld& world,
                       int steps) {
  const LossSpec constraints = world_b_sim_loss(model, world);
  SimulationSession session;
  IterConfig iter;
  iter.iterations = 30;
  double sse = 0.0;
  int count = 0;
  for (int t = 0; t < steps; ++t) {
    const Vector theta_ref = world_b_traj(t, steps);
    const Vector f_eq = world.equilibrium_tension(theta_ref);
    const Vector l_cmd = world.muscle_length(theta_ref, f_eq);
    const Vector theta_real = world.realize_command(l_cmd);
    SimulateResult sim =
        simulate(model, l_cmd, 2, constraints, Vector(), iter, &session);
    const Vector theta_sim = sim.x_out_raw.head(2);
    sse += (theta_sim - theta_real).squaredNorm();
    count += 2;
  }
  return std::sqrt(sse / count);
}

// ---------------------------------------------------------------------------
// World C: six tool states, full four-group model with 2-D PB.

struct ToolState {
  double mass;
  double length;
};

std::vector<ToolState> world_c_states() {
  std::vector<ToolState> s;
  for (double len : {176.0, 236.0}) {
    for (double m : {40.0, 80.0, 120.0}) s.push_back({m, len});
  }
  return s;
}

DeflectingBipedWorld world_c(double mass, double length) {
  DeflectingBipedWorld::Params p;
  p.tool_mass_g = mass;
  p.tool_length_mm = length;
  return DeflectingBipedWorld(p);
}

Dataset world_c_dataset(int per_state, std::uint64_t seed) {
  Dataset d;
  int k = 0;
  for (const ToolState& s : world_c_states()) {
    d.episodes.push_back(
        world_c(s.mass, s.length).random_rollout(per_state, Rng::mix(seed, 100 + k)));
    ++k;
  }
  return d;
}

MaskSet world_c_masks() {
  MaskSet ms(4);
  for (const Mask& m :
       std::vector<Mask>{{1, 1, 1, 0}, {1, 1, 0, 1}, {1, 0, 1, 1}, {0, 1, 1, 1},
                         {1, 0, 1, 0}, {1, 1, 0, 0}, {1, 0, 0, 1}, {1, 0, 0, 0},
                         {1, 1, 1, 1}}) {
    ms.insert(m);
  }
  return ms;
}

TrainResult train_world_c_on(const Dataset& data, std::uint64_t seed, int epochs) {
  const ModalityLayout lay = DeflectingBipedWorld::layout();
  ModelConfig mc;
  mc.pb_dim = 2;
  mc.seed = seed;
  GeMuCoModel model = make_model(lay, {0, 1, 2, 3}, {0, 1, 2, 3}, mc, world_c_masks());
  model.normalizer = fit_normalizer(data, lay);
  TrainConfig tc;
  tc.epochs = epochs;
  tc.batch_size = 32;
  tc.learning_rate = 0.03;
  tc.seed = seed;
  return train(std::move(model), data, tc);
}

const GeMuCoModel& cached_world_c(std::uint64_t seed) {
  static std::map<std::uint64_t, GeMuCoModel> cache;
  auto it = cache.find(seed);
  if (it != cache.end()) return it->second;
  Dataset data = world_c_dataset(500, Rng::mix(seed, 0xC));
  TrainResult r = train_world_c_on(data, seed, 600);
  return cache.emplace(seed, std::move(r.model)).first->second;
}

// ---------------------------------------------------------------------------
// Criterion 1: gradient suite.

ScenarioResult scenario_gradient_suite(std::uint64_t seed) {
  ScenarioResult result;
  result.scenario = "gradient_suite";
  const double t0 = now_seconds();
  const double h = 1e-5;
  double worst_rel = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(Rng::mix(seed, 9000 + trial));
    const int in_w = 2 + static_cast<int>(rng.index(5));
    const int hid = 4 + static_cast<int>(rng.index(8));
    const int out_w = 1 + static_cast<int>(rng.index(4));
    NetSpec spec{{in_w, hid, out_w}, Activation::kTanh};
    Weights w = init_weights(spec, Rng::mix(seed, trial));
    Vector in(in_w), target(out_w);
    for (int i = 0; i < in_w; ++i) in[i] = rng.uniform(-1.5, 1.5);
    for (int i = 0; i < out_w; ++i) target[i] = rng.uniform(-1.5, 1.5);
    auto loss_at = [&](const Weights& wt, const Vector& x) {
      const Vector out = forward(spec, wt, x);
      return 0.5 * (out - target).squaredNorm();
    };
    ForwardTrace trace;
    const Vector out = forward(spec, w, in, &trace);
    const auto grads = backward(spec, w, trace, Vector(out - target));
    auto track = [&](double analytic, double numeric) {
      const double mag = std::max(std::abs(analytic), std::abs(numeric));
      if (mag < 1e-8) return;
      worst_rel = std::max(worst_rel, std::abs(analytic - numeric) / mag);
    };
    for (int i = 0; i < in_w; ++i) {
      Vector ip = in, im = in;
      ip[i] += h;
      im[i] -= h;
      track(grads.grad_input[i], (loss_at(w, ip) - loss_at(w, im)) / (2 * h));
    }
    for (int l = 0; l < spec.depth(); ++l) {
      for (int k = 0; k < 2; ++k) {
        const int r = static_cast<int>(rng.index(w.w[l].rows()));
        const int c = static_cast<int>(rng.index(w.w[l].cols()));
        Weights wp = w, wm = w;
        wp.w[l](r, c) += h;
        wm.w[l](r, c) -= h;
        track(grads.grad_w.w[l](r, c),
              (loss_at(wp, in) - loss_at(wm, in)) / (2 * h));
      }
    }
    std::vector<int> all_out(out_w), all_in(in_w);
    std::iota(all_out.begin(), all_out.end(), 0);
    std::iota(all_in.begin(), all_in.end(), 0);
    const Matrix jac = jacobian(spec, w, in, all_out, all_in);
    for (int j = 0; j < in_w; ++j) {
      Vector ip = in, im = in;
      ip[j] += h;
      im[j] -= h;
      const Vector col = (forward(spec, w, ip) - forward(spec, w, im)) / (2 * h);
      for (int i = 0; i < out_w; ++i) track(jac(i, j), col[i]);
    }
  }
  const double elapsed = now_seconds() - t0;
  add_check(&result, "max relative error < 1e-4 over 100 seeded cases",
            worst_rel < 1e-4, "max rel err = " + fmt(worst_rel));
  add_check(&result, "runtime < 10 s", elapsed < 10.0,
            fmt(elapsed) + " s");
  return result;
}

// ---------------------------------------------------------------------------
// Criteria 2-4: structure determination per world.

bool same_report(const StructureReport& a, const StructureReport& b) {
  if (a.out_groups != b.out_groups || a.in_groups != b.in_groups) return false;
  if (a.out_loss != b.out_loss) return false;
  if (a.mask_loss.size() != b.mask_loss.size()) return false;
  for (std::size_t i = 0; i < a.mask_loss.size(); ++i) {
    if (a.mask_loss[i].mask != b.mask_loss[i].mask ||
        a.mask_loss[i].loss != b.mask_loss[i].loss) {
      return false;
    }
  }
  return true;
}

ScenarioResult scenario_world_a_structure(std::uint64_t seed) {
  ScenarioResult result;
  result.scenario = "world_a_structure";
  const ModalityLayout lay = ArmToolWorld::layout();
  Dataset data = world_a_dataset(1000, Rng::mix(seed, 0xA));
  const StructureConfig cfg = world_a_structure_config(seed);
  const double t0 = now_seconds();
  StructureResult s1 = determine_structure(data, lay, cfg);
  const double elapsed = now_seconds() - t0;

  add_check(&result, "out = {x_tool}",
            s1.report.out_groups == std::vector<int>{1},
            "L(theta) = " + fmt(s1.report.out_loss[0]) +
                ", L(x_tool) = " + fmt(s1.report.out_loss[1]));
  add_check(&result, "in = {theta}",
            s1.report.in_groups == std::vector<int>{0}, s1.report.table());
  add_check(&result, "runtime < 3 min at 9000 samples", elapsed < 180.0,
            fmt(elapsed) + " s");

  StructureResult s2 = determine_structure(data, lay, cfg);
  add_check(&result, "deterministic under fixed seed",
            same_report(s1.report, s2.report), "two runs compared");
  return result;
}

ScenarioResult scenario_world_b_structure(std::uint64_t seed) {
  ScenarioResult result;
  result.scenario = "world_b_structure";
  const ModalityLayout lay = TendonArmWorld::layout();
  TendonArmWorld world(TendonArmWorld::Params::defaults());
  Dataset data;
  data.episodes.push_back(world.random_rollout(10000, Rng::mix(seed, 0xB0)));

  StructureConfig cfg;
  cfg.thresholds = {0.30, 0.15};  // paper regime: all sensors out, strict in
  cfg.model.pb_dim = 0;
  cfg.model.seed = seed;
  cfg.probe_train.epochs = 200;
  cfg.probe_train.batch_size = 32;
  cfg.probe_train.learning_rate = 0.03;
  cfg.probe_train.seed = seed;
  cfg.final_train = cfg.probe_train;
  cfg.final_train.seed = Rng::mix(seed, 1);

  const double t0 = now_seconds();
  Dataset train_split, eval_split;
  split_dataset(data, cfg.eval_fraction, &train_split, &eval_split);
  TrainResult probe = probe_train(train_split, lay, cfg);
  OutputDecision outputs = determine_outputs(probe, eval_split, cfg.thresholds);
  InputDecision inputs =
      determine_inputs(probe, eval_split, outputs.out_groups, cfg.thresholds);
  const double elapsed = now_seconds() - t0;

  const double l_theta = outputs.out_loss[0];
  const double l_f = outputs.out_loss[1];
  const double l_l = outputs.out_loss[2];
  add_check(&result, "L_f > max(L_theta, L_l)", l_f > std::max(l_theta, l_l),
            "L_theta = " + fmt(l_theta) + ", L_f = " + fmt(l_f) +
                ", L_l = " + fmt(l_l));

  const auto out15 = derive_out_groups(outputs.out_loss, 0.15);
  const auto out30 = derive_out_groups(outputs.out_loss, 0.30);
  const bool proper_superset =
      out30.size() > out15.size() &&
      std::includes(out30.begin(), out30.end(), out15.begin(), out15.end());
  add_check(&result, "out set at 0.30 strictly contains out set at 0.15",
            proper_superset,
            "out(0.15) size " + std::to_string(out15.size()) +
                ", out(0.30) size " + std::to_string(out30.size()));

  // Non-superset feasible masks at c_in = 0.15 must be exactly
  // {theta+f, f+l}.
  std::vector<Mask> passing15;
  for (const MaskLoss& ml : inputs.mask_loss) {
    if (ml.loss < 0.15) passing15.push_back(ml.mask);
  }
  const bool exact_pair =
      passing15.size() == 2 &&
      std::count(passing15.begin(), passing15.end(), Mask{1, 1, 0}) == 1 &&
      std::count(passing15.begin(), passing15.end(), Mask{0, 1, 1}) == 1;
  std::string detail;
  for (const MaskLoss& ml : inputs.mask_loss) {
    detail += mask_to_string(ml.mask) + "=" + fmt(ml.loss) + " ";
  }
  add_check(&result, "feasible non-superset masks at 0.15 = {110, 011}",
            exact_pair, detail);

  const MaskSet m15 = derive_feasible_union(inputs.mask_loss,
                                            inputs.superset_masks, 0.15, 3);
  const MaskSet m30 = derive_feasible_union(inputs.mask_loss,
                                            inputs.superset_masks, 0.30, 3);
  bool contains_all = true;
  for (const Mask& m : m15.masks()) {
    if (!m30.contains(m)) contains_all = false;
  }
  add_check(&result, "mask set grows strictly from 0.15 to 0.30",
            contains_all && m30.size() > m15.size(),
            "|M(0.15)| = " + std::to_string(m15.size()) +
                ", |M(0.30)| = " + std::to_string(m30.size()));
  add_check(&result, "runtime < 5 min", elapsed < 300.0, fmt(elapsed) + " s");
  return result;
}

ScenarioResult scenario_world_c_structure(std::uint64_t seed) {
  ScenarioResult result;
  result.scenario = "world_c_structure";
  const ModalityLayout lay = DeflectingBipedWorld::layout();
  Dataset data = world_c_dataset(500, Rng::mix(seed, 0xC0));

  StructureConfig cfg;
  cfg.thresholds = {0.15, 0.15};
  cfg.model.pb_dim = 2;
  cfg.model.seed = seed;
  cfg.probe_train.epochs = 1200;
  cfg.probe_train.batch_size = 32;
  cfg.probe_train.learning_rate = 0.03;
  cfg.probe_train.seed = seed;
  cfg.final_train = cfg.probe_train;
  cfg.final_train.epochs = 600;
  cfg.final_train.seed = Rng::mix(seed, 1);

  const double t0 = now_seconds();
  StructureResult s = determine_structure(data, lay, cfg);
  const double elapsed = now_seconds() - t0;

  std::string ldetail;
  for (int g = 0; g < 4; ++g) {
    ldetail += lay.name(g) + "=" + fmt(s.report.out_loss[g]) + " ";
  }
  add_check(&result, "all 4 groups in the out set",
            s.report.out_groups == std::vector<int>{0, 1, 2, 3}, ldetail);
  add_check(&result, "theta-only mask (1,0,0,0) is feasible",
            s.report.feasible_union.contains(Mask{1, 0, 0, 0}),
            s.report.table());
  add_check(&result, "runtime < 5 min", elapsed < 300.0, fmt(elapsed) + " s");
  return result;
}

// ---------------------------------------------------------------------------
// Criterion 5: PB self-organization (world A) and classification (world C).

ScenarioResult scenario_pb_self_organization(std::uint64_t seed) {
  ScenarioResult result;
  result.scenario = "pb_self_organization";

  // World A: PCA of the nine trained PBs; one principal coordinate must
  // order with tool length at fixed angle, the other with angle at fixed
  // length.
  const GeMuCoModel& model_a = cached_world_a(seed);
  const auto states = world_a_states();
  Matrix pbs(9, 2);
  for (int i = 0; i < 9; ++i) {
    const auto& st = states[i];
    const std::string id = world_a(st.l_tool, st.phi).state_id();
    pbs.row(i) = model_a.pb_table.at(id).values.transpose();
  }
  const Vector mean = pbs.colwise().mean().transpose();
  Matrix centered = pbs.rowwise() - mean.transpose();
  const Matrix cov = centered.transpose() * centered / 9.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  const Matrix coords = centered * eig.eigenvectors();  // 9 x 2

  auto mean_abs_rho = [&](int coord, bool over_length) {
    double total = 0.0;
    int rows = 0;
    // Fix one factor, vary the other (three levels each).
    for (int fixed = 0; fixed < 3; ++fixed) {
      std::vector<double> xs, cs;
      for (int vary = 0; vary < 3; ++vary) {
        const int idx = over_length ? vary * 3 + fixed : fixed * 3 + vary;
        xs.push_back(over_length ? states[idx].l_tool : states[idx].phi);
        cs.push_back(coords(idx, coord));
      }
      total += std::abs(spearman(xs, cs));
      ++rows;
    }
    return total / rows;
  };

  // Assign coordinates to factors by the better correlation.
  const double l_c0 = mean_abs_rho(0, true), l_c1 = mean_abs_rho(1, true);
  const int coord_l = l_c0 >= l_c1 ? 0 : 1;
  const int coord_phi = 1 - coord_l;
  const double rho_l = mean_abs_rho(coord_l, true);
  const double rho_phi = mean_abs_rho(coord_phi, false);
  add_check(&result, "PB coordinate orders with tool length (|rho| >= 0.8)",
            rho_l >= 0.8, "mean |rho| = " + fmt(rho_l));
  add_check(&result, "other PB coordinate orders with grasp angle (|rho| >= 0.8)",
            rho_phi >= 0.8, "mean |rho| = " + fmt(rho_phi));

  // World C: nearest-centroid classification of held-out episodes after
  // re-estimating the PB with p-only updates.
  Dataset full = world_c_dataset(500, Rng::mix(seed, 0xC));
  Dataset train_split, eval_split;
  split_dataset(full, 0.2, &train_split, &eval_split);
  TrainResult tr = train_world_c_on(train_split, Rng::mix(seed, 0xC5), 600);
  const GeMuCoModel& model_c = tr.model;

  int correct = 0;
  for (const Episode& e : eval_split.episodes) {
    OnlineConfig oc;
    oc.mode = UpdateMode::kPOnly;
    oc.buffer_capacity = 100;
    oc.min_start = 10;
    oc.p_learning_rate = 0.3;
    oc.seed = Rng::mix(seed, 0xF00);
    OnlineUpdater updater(model_c, Vector::Zero(2), oc);
    for (const Sample& s : e.samples) updater.feed(s);
    const Vector est = updater.pb();
    std::string best;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& [label, pb] : model_c.pb_table) {
      const double d = (pb.values - est).norm();
      if (d < best_d) {
        best_d = d;
        best = label;
      }
    }
    if (best == e.state_id) ++correct;
  }
  add_check(&result, "world C nearest-centroid PB classification >= 5/6",
            correct >= 5, std::to_string(correct) + "/6 correct");
  return result;
}

// ---------------------------------------------------------------------------
// Criterion 6: online PB adaptation after a grasp switch.

ScenarioResult scenario_world_a_online_pb(std::uint64_t seed) {
  ScenarioResult result;
  result.scenario = "world_a_online_pb";
  const double t0 = now_seconds();
  const GeMuCoModel& model = cached_world_a(seed);
  const ArmToolWorld new_world = world_a(500.0, 0.0);
  const Vector pb_old = model.pb_table.at("A_l500_phi60").values;

  const double err_before =
      world_a_estimation_error(model, pb_old, new_world, seed);

  OnlineConfig oc;
  oc.mode = UpdateMode::kPOnly;
  oc.buffer_capacity = 60;
  oc.min_start = 20;
  oc.p_learning_rate = 0.3;
  oc.seed = Rng::mix(seed, 0xAD);
  OnlineUpdater updater(model, pb_old, oc);
  Rng rng(Rng::mix(seed, 0xFEED));
  const std::vector<std::uint8_t> all(2, 1);
  int updates = 0;
  while (updates < 30) {
    Vector theta(4);
    for (int j = 0; j < 4; ++j) {
      theta[j] = rng.uniform(-new_world.params().joint_limit_rad,
                             new_world.params().joint_limit_rad);
    }
    const int before = updater.buffer().size();
    updater.feed(new_world.observe(theta, all, rng));
    if (before + 1 >= oc.min_start) ++updates;
  }
  const double err_after =
      world_a_estimation_error(model, updater.pb(), new_world, seed);
  const double elapsed = now_seconds() - t0;

  add_check(&result, "estimation error halves after 30 p-only updates",
            err_after <= 0.5 * err_before,
            fmt(err_before) + " mm -> " + fmt(err_after) + " mm");
  add_check(&result, "runtime < 1 min (adaptation only)", elapsed < 60.0,
            fmt(elapsed) + " s");
  return result;
}

// ---------------------------------------------------------------------------
// Criterion 7: p-only adaptation generalizes better than w-only.

Vector world_a_family_posture(const Vector& base, int t, Rng* jitter) {
  Vector theta = base;
  theta[0] += 0.25 * std::sin(0.4 * t);
  theta[1] += 0.2 * std::sin(0.3 * t + 1.0);
  theta[2] += 0.25 * std::sin(0.5 * t + 2.0);
  theta[3] += 0.2 * std::sin(0.35 * t + 0.5);
  if (jitter) {
    for (int j = 0; j < 4; ++j) theta[j] += jitter->uniform(-0.05, 0.05);
  }
  for (int j = 0; j < 4; ++j) theta[j] = std::clamp(theta[j], -1.2, 1.2);
  return theta;
}

double world_a_control_error(const GeMuCoModel& model, const Vector& pb,
                             const ArmToolWorld& world, const Vector& base,
                             std::uint64_t seed) {
  Rng rng(Rng::mix(seed, 0xCE));
  double total = 0.0;
  const int n = 15;
  for (int t = 0; t < n; ++t) {
    const Vector theta_orig = world_a_family_posture(base, t, nullptr);
    Vector delta(4);
    for (int j = 0; j < 4; ++j) delta[j] = rng.uniform(-0.15, 0.15);
    Vector theta_target = theta_orig + delta;
    for (int j = 0; j < 4; ++j) {
      theta_target[j] = std::clamp(theta_target[j], -1.2, 1.2);
    }
    const Vector ref = world.tool_tip(theta_target);

    ControlRequest req;
    TargetMatchTerm match;
    match.out_group = 0;
    match.target = model.normalize_out(ref);
    match.weight = 1.0;
    req.loss.terms.push_back(match);
    InputDeviationTerm dev;
    dev.in_group = 0;
    dev.reference = model.normalize_in(theta_orig);
    dev.weight = 0.3;
    req.loss.terms.push_back(dev);
    req.control_group = 0;
    req.init_control_raw = theta_orig;
    req.iter.iterations = 30;

    Vector cmd = control(model, req, pb).control_raw;
    for (int j = 0; j < 4; ++j) cmd[j] = std::clamp(cmd[j], -1.2, 1.2);
    total += oracle_error(world.tool_tip(cmd), ref);
  }
  return total / n;
}

ScenarioResult scenario_world_a_generalization(std::uint64_t seed) {
  ScenarioResult result;
  result.scenario = "world_a_generalization";
  const Vector base1 = (Vector(4) << 0.5, -0.4, 0.3, -0.2).finished();
  const Vector base2 = (Vector(4) << -0.4, 0.5, -0.3, 0.3).finished();
  const ArmToolWorld new_world = world_a(500.0, 60.0);

  int wins = 0;
  std::string detail;
  for (int s = 0; s < 5; ++s) {
    const std::uint64_t run_seed = Rng::mix(seed, 40 + s);
    const GeMuCoModel& model = cached_world_a(seed);
    const Vector pb_start = model.pb_table.at("A_l500_phi30").values;

    auto adapt = [&](UpdateMode mode) {
      OnlineConfig oc;
      oc.mode = mode;
      oc.buffer_capacity = 60;
      oc.min_start = 20;
      oc.p_learning_rate = 0.3;
      oc.w_learning_rate = 0.05;
      oc.seed = Rng::mix(run_seed, 0xAB);
      OnlineUpdater updater(model, pb_start, oc);
      Rng rng(Rng::mix(run_seed, 0x11));
      const std::vector<std::uint8_t> all(2, 1);
      for (int t = 0; t < 60; ++t) {
        const Vector theta = world_a_family_posture(base1, t, &rng);
        updater.feed(new_world.observe(theta, all, rng));
      }
      return std::make_pair(updater.model(), updater.pb());
    };

    const auto [model_p, pb_p] = adapt(UpdateMode::kPOnly);
    const auto [model_w, pb_w] = adapt(UpdateMode::kWOnly);
    const double err_p =
        world_a_control_error(model_p, pb_p, new_world, base2, run_seed);
    const double err_w =
        world_a_control_error(model_w, pb_w, new_world, base2, run_seed);
    if (err_p <= err_w) ++wins;
    detail += "seed" + std::to_string(s) + ": p=" + fmt(err_p) +
              " w=" + fmt(err_w) + "; ";
  }
  add_check(&result, "held-out control error p_only <= w_only in >= 4/5 seeds",
            wins >= 4, std::to_string(wins) + "/5 -- " + detail);
  return result;
}

// ---------------------------------------------------------------------------
// Criterion 8: optimizer monotonicity across representative runs.

bool non_increasing(const std::vector<double>& traj) {
  for (std::size_t i = 1; i < traj.size(); ++i) {
    if (traj[i] > traj[i - 1]) return false;
  }
  return true;
}

ScenarioResult scenario_optimizer_monotonicity(std::uint64_t seed) {
  ScenarioResult result;
  result.scenario = "optimizer_monotonicity";
  int runs = 0, monotone = 0;
  auto tally = [&](const std::vector<double>& traj) {
    ++runs;
    if (non_increasing(traj)) ++monotone;
  };

  // Latent iteration on the world B model, with the torque-balance term.
  {
    const GeMuCoModel& model = cached_world_b(seed);
    TendonArmWorld world(TendonArmWorld::Params::defaults());
    const LossSpec constraints = world_b_sim_loss(model, world);
    Rng rng(Rng::mix(seed, 0x80));
    for (int k = 0; k < 6; ++k) {
      Vector theta(2);
      theta << rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8);
      const Vector l_cmd =
          world.muscle_length(theta, world.equilibrium_tension(theta));
      IterConfig iter;
      iter.iterations = 20;
      SimulateResult sim =
          simulate(model, l_cmd, 2, constraints, Vector(), iter, nullptr);
      tally(sim.loss_trajectory);
    }
  }
  // Estimation (latent and input iteration) on the world A model.
  {
    const GeMuCoModel& model = cached_world_a(seed);
    const ArmToolWorld world = world_a(500.0, 30.0);
    const Vector pb = model.pb_table.at("A_l500_phi30").values;
    Rng rng(Rng::mix(seed, 0x81));
    for (int k = 0; k < 8; ++k) {
      Vector theta(4);
      for (int j = 0; j < 4; ++j) theta[j] = rng.uniform(-1.0, 1.0);
      Observation obs;
      obs.values = Vector::Zero(6);
      obs.values.tail(2) = world.tool_tip(theta);
      obs.available = {0, 1};  // theta hidden: input iteration
      EstimateResult est = estimate(model, obs, pb);
      tally(est.loss_trajectory);
    }
    // PB iteration.
    OptContext ctx;
    for (int k = 0; k < 5; ++k) {
      Vector theta(4);
      for (int j = 0; j < 4; ++j) theta[j] = rng.uniform(-1.0, 1.0);
      ctx.x_in_norm = model.normalize_in(theta);
      ctx.mask = Mask{1};
      ctx.pb = pb;
      LossSpec loss;
      TargetMatchTerm t;
      t.out_group = 0;
      t.target = model.normalize_out(world.tool_tip(theta));
      loss.terms.push_back(t);
      IterConfig iter;
      iter.variable = OptVariable::kPb;
      iter.iterations = 15;
      OptResult r = optimize(model, Vector::Zero(2), loss, iter, ctx);
      tally(r.loss_trajectory);
    }
  }
  add_check(&result, "loss trajectories non-increasing in 100% of runs",
            runs > 0 && monotone == runs,
            std::to_string(monotone) + "/" + std::to_string(runs));
  return result;
}

// ---------------------------------------------------------------------------
// Criterion 9: simulation improves after online update; posture clamp.

ScenarioResult scenario_world_b_simulation(std::uint64_t seed) {
  ScenarioResult result;
  result.scenario = "world_b_simulation";
  TendonArmWorld true_world(TendonArmWorld::Params::defaults());
  TendonArmWorld coarse_world(
      TendonArmWorld::Params::defaults().perturbed(0.3, Rng::mix(seed, 0x9A)));

  // Initial model learned from the mismatched world.
  GeMuCoModel model = train_world_b_on(coarse_world, 6000, Rng::mix(seed, 0x9B), 200);
  const double rms_before = world_b_sim_rms(model, true_world, 30);

  // Online w-update from streaming true-world data.
  OnlineConfig oc;
  oc.mode = UpdateMode::kWOnly;
  oc.buffer_capacity = 100;
  oc.min_start = 20;
  oc.w_learning_rate = 0.03;
  oc.seed = Rng::mix(seed, 0x9C);
  OnlineUpdater updater(model, Vector(), oc);
  Episode stream = true_world.random_rollout(400, Rng::mix(seed, 0x9D));
  for (const Sample& s : stream.samples) updater.feed(s);
  const GeMuCoModel& updated = updater.model();
  const double rms_after = world_b_sim_rms(updated, true_world, 30);

  add_check(&result, "simulated joint RMS improves >= 30% after online update",
            rms_after <= 0.7 * rms_before,
            fmt(rms_before) + " rad -> " + fmt(rms_after) + " rad");

  // Posture clamp: adding a joint-angle match pulls the simulated posture
  // onto theta_fix.
  const Vector theta_fix = (Vector(2) << 0.3, -0.4).finished();
  const Vector l_cmd = true_world.muscle_length(
      theta_fix, true_world.equilibrium_tension(theta_fix));
  LossSpec clamp;
  {
    MagnitudeTerm mag;
    mag.out_group = 1;
    mag.weight = 0.1;
    clamp.terms.push_back(mag);
    TargetMatchTerm fix;
    fix.out_group = 0;
    Vector t(2);
    for (int c = 0; c < 2; ++c) {
      t[c] = updated.normalizer.normalize_at(c, theta_fix[c]);
    }
    fix.target = t;
    fix.weight = 1.0;
    clamp.terms.push_back(fix);
  }
  IterConfig iter;
  iter.iterations = 40;
  SimulateResult sim = simulate(updated, l_cmd, 2, clamp, Vector(), iter, nullptr);
  const double clamp_err = (sim.x_out_raw.head(2) - theta_fix).norm();
  add_check(&result, "posture clamp holds |theta_sim - theta_fix| < 0.05 rad",
            clamp_err < 0.05, fmt(clamp_err) + " rad");
  return result;
}

// ---------------------------------------------------------------------------
// Criterion 10: anomaly detection on a frozen-muscle fault.

ScenarioResult scenario_world_b_anomaly(std::uint64_t seed) {
  ScenarioResult result;
  result.scenario = "world_b_anomaly";
  const GeMuCoModel& model = cached_world_b(seed);
  TendonArmWorld world(TendonArmWorld::Params::defaults());

  // Reconstruction residual under the theta-hidden mask.
  const Mask est_mask{0, 1, 1};
  auto residual = [&](const Sample& s) {
    Vector x_in = model.normalize_in(model.extract_in(s.values));
    const Vector pred = predict(model, x_in, est_mask, Vector());
    return Vector(model.normalize_out(model.extract_out(s.values)) - pred);
  };

  Rng rng(Rng::mix(seed, 0xA0));
  const std::vector<std::uint8_t> all(3, 1);
  auto draw_sample = [&](const TendonArmWorld& w) {
    Vector cmd(6);
    cmd[0] = rng.uniform(-1.0, 1.0);
    cmd[1] = rng.uniform(-1.0, 1.0);
    cmd.tail(4) = w.sample_tension(cmd.head(2), rng);
    return w.observe(cmd, all, rng);
  };

  std::vector<Vector> calib;
  for (int i = 0; i < 300; ++i) calib.push_back(residual(draw_sample(world)));
  const AnomalyModel amodel = calibrate(calib);

  int false_alarms = 0;
  for (int i = 0; i < 200; ++i) {
    if (is_anomalous(amodel, score(amodel, residual(draw_sample(world))))) {
      ++false_alarms;
    }
  }
  add_check(&result, "false-alarm rate <= 2% over 200 normal steps",
            false_alarms <= 4, std::to_string(false_alarms) + " alarms");

  TendonArmWorld::Params fault_params = TendonArmWorld::Params::defaults();
  fault_params.frozen_muscle = 0;
  TendonArmWorld faulty(fault_params);
  int first_flag = -1;
  for (int i = 0; i < 10; ++i) {
    if (is_anomalous(amodel, score(amodel, residual(draw_sample(faulty))))) {
      first_flag = i + 1;
      break;
    }
  }
  add_check(&result, "frozen-muscle fault flagged within 10 steps",
            first_flag > 0,
            first_flag > 0 ? "flagged at step " + std::to_string(first_flag)
                           : "never flagged");
  return result;
}

// ---------------------------------------------------------------------------
// Criterion 11: whole-body control with the centre-of-gravity term.

ScenarioResult scenario_world_c_cog_control(std::uint64_t seed) {
  ScenarioResult result;
  result.scenario = "world_c_cog_control";
  const GeMuCoModel& model = cached_world_c(seed);
  const DeflectingBipedWorld world = world_c(80.0, 236.0);
  const Vector pb = model.pb_table.at(world.state_id()).values;

  const Vector neutral = (Vector(4) << 0.0, 0.0, 0.5, 0.0).finished();
  const Vector cog_ref = world.cog(neutral);

  Rng rng(Rng::mix(seed, 0xCC));
  auto random_command = [&](double margin) {
    const auto& p = world.params();
    Vector cmd(4);
    cmd[0] = rng.uniform(-margin * p.shoulder_pitch_limit_rad,
                         margin * p.shoulder_pitch_limit_rad);
    cmd[1] = rng.uniform(-margin * p.shoulder_yaw_limit_rad,
                         margin * p.shoulder_yaw_limit_rad);
    const double elbow_mid = 0.5 * (p.elbow_min_rad + p.elbow_max_rad);
    const double elbow_half = 0.5 * (p.elbow_max_rad - p.elbow_min_rad);
    cmd[2] = elbow_mid + rng.uniform(-margin * elbow_half, margin * elbow_half);
    cmd[3] = rng.uniform(-margin * p.ankle_limit_rad, margin * p.ankle_limit_rad);
    return cmd;
  };
  auto clamp_command = [&](Vector cmd) {
    const auto& p = world.params();
    cmd[0] = std::clamp(cmd[0], -p.shoulder_pitch_limit_rad, p.shoulder_pitch_limit_rad);
    cmd[1] = std::clamp(cmd[1], -p.shoulder_yaw_limit_rad, p.shoulder_yaw_limit_rad);
    cmd[2] = std::clamp(cmd[2], p.elbow_min_rad, p.elbow_max_rad);
    cmd[3] = std::clamp(cmd[3], -p.ankle_limit_rad, p.ankle_limit_rad);
    return cmd;
  };

  double tool_with = 0.0, tool_without = 0.0;
  double cog_with = 0.0, cog_without = 0.0;
  double init_loss = 0.0, with_loss = 0.0;
  const int n_targets = 8;
  for (int k = 0; k < n_targets; ++k) {
    const Vector ref = world.tool_tip(random_command(0.8));

    auto run = [&](bool with_cog) {
      ControlRequest req;
      TargetMatchTerm tool;
      tool.out_group = 2;
      tool.target = [&] {
        Vector t(2);
        for (int c = 0; c < 2; ++c) {
          t[c] = model.normalizer.normalize_at(
              model.union_layout.offset(2) + c, ref[c]);
        }
        return t;
      }();
      tool.weight = 1.0;
      req.loss.terms.push_back(tool);
      if (with_cog) {
        TargetMatchTerm cog;
        cog.out_group = 1;
        Vector t(2);
        for (int c = 0; c < 2; ++c) {
          t[c] = model.normalizer.normalize_at(
              model.union_layout.offset(1) + c, cog_ref[c]);
        }
        cog.target = t;
        cog.weight = 0.01;
        req.loss.terms.push_back(cog);
      }
      req.control_group = 0;
      req.init_control_raw = neutral;
      req.iter.iterations = 30;
      const Vector cmd = clamp_command(control(model, req, pb).control_raw);
      return std::make_pair(oracle_error(world.tool_tip(cmd), ref),
                            oracle_error(world.cog(cmd), cog_ref));
    };

    const auto [te_with, ce_with] = run(true);
    const auto [te_wo, ce_wo] = run(false);
    tool_with += te_with;
    cog_with += ce_with;
    tool_without += te_wo;
    cog_without += ce_wo;
    init_loss += oracle_error(world.tool_tip(neutral), ref);
    with_loss += te_with;
  }
  tool_with /= n_targets;
  tool_without /= n_targets;
  cog_with /= n_targets;
  cog_without /= n_targets;

  add_check(&result, "CoG deviation strictly lower with the 0.01 CoG term",
            cog_with < cog_without,
            "cog " + fmt(cog_with) + " mm vs " + fmt(cog_without) + " mm");
  add_check(&result, "tool error within 20% of the no-CoG run",
            tool_with <= 1.2 * tool_without,
            "tool " + fmt(tool_with) + " mm vs " + fmt(tool_without) + " mm");
  add_check(&result, "controlled tool error below the initial-command error",
            with_loss < init_loss,
            fmt(with_loss / n_targets) + " mm vs init " +
                fmt(init_loss / n_targets) + " mm");
  return result;
}

using ScenarioFn = ScenarioResult (*)(std::uint64_t);

const std::vector<std::pair<std::string, ScenarioFn>>& registry() {
  static const std::vector<std::pair<std::string, ScenarioFn>> r = {
      {"gradient_suite", scenario_gradient_suite},
      {"world_a_structure", scenario_world_a_structure},
      {"world_b_structure", scenario_world_b_structure},
      {"world_c_structure", scenario_world_c_structure},
      {"pb_self_organization", scenario_pb_self_organization},
      {"world_a_online_pb", scenario_world_a_online_pb},
      {"world_a_generalization", scenario_world_a_generalization},
      {"optimizer_monotonicity", scenario_optimizer_monotonicity},
      {"world_b_simulation", scenario_world_b_simulation},
      {"world_b_anomaly", scenario_world_b_anomaly},
      {"world_c_cog_control", scenario_world_c_cog_control},
  };
  return r;
}

}  // namespace

nlohmann::ordered_json ScenarioResult::to_json() const {
  nlohmann::ordered_json j;
  j["scenario"] = scenario;
  j["passed"] = passed();
  j["seconds"] = seconds;
  nlohmann::ordered_json cs = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    cs.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  }
  j["checks"] = cs;
  return j;
}

std::vector<std::string> scenario_names() {
  std::vector<std::string> names;
  for (const auto& [name, fn] : registry()) names.push_back(name);
  return names;
}

ScenarioResult run_scenario(const std::string& name, std::uint64_t seed) {
  for (const auto& [n, fn] : registry()) {
    if (n == name) {
      const double t0 = now_seconds();
      ScenarioResult r = fn(seed);
      r.seconds = now_seconds() - t0;
      return r;
    }
  }
  throw std::invalid_argument("unknown scenario '" + name + "'");
}

}  // namespace gemuco
