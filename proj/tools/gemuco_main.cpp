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

#include <omp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "gemuco/anomaly.hpp"
#include "gemuco/inference.hpp"
#include "gemuco/online.hpp"
#include "gemuco/scenarios.hpp"
#include "gemuco/serialize.hpp"
#include "gemuco/structure.hpp"
#include "gemuco/worlds.hpp"

namespace gemuco {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

constexpr const char* kVersion = "1.0.0";

// ---------------------------------------------------------------------------
// Config handling: strict key checking with path-qualified errors.

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& path) {
  if (!j.is_object()) {
    throw std::runtime_error("config: " + path + " must be an object");
  }
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw std::runtime_error("config: unknown key '" + path + "/" + key + "'");
    }
  }
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void write_manifest(const fs::path& out_dir, const std::string& subcommand,
                    const json& resolved_config, std::uint64_t seed,
                    const std::vector<std::string>& artifacts) {
  ordered_json m;
  m["subcommand"] = subcommand;
  m["seed"] = seed;
  m["version"] = kVersion;
  m["model_format_version"] = kModelFormatVersion;
  m["config"] = resolved_config;
  {
    std::ostringstream os;
    os << std::hex << fnv1a(resolved_config.dump());
    m["config_hash"] = os.str();
  }
  m["artifacts"] = artifacts;
  std::ofstream out(out_dir / "manifest.json");
  out << m.dump(1) << "\n";
}

fs::path ensure_out_dir(const std::string& out_dir) {
  fs::path p(out_dir);
  fs::create_directories(p);
  return p;
}

// ---------------------------------------------------------------------------
// World construction from config / CLI state strings.

struct WorldSpec {
  std::string type;  // "A" | "B" | "C"
  json params;       // already validated world object
};

WorldSpec parse_world(const json& j) {
  check_keys(j, {"type", "l_tool_mm", "phi_tool_deg", "tool_mass_g",
                 "tool_length_mm", "noise", "frozen_muscle", "perturb_scale",
                 "perturb_seed"},
             "world");
  WorldSpec w;
  w.type = j.at("type").get<std::string>();
  if (w.type != "A" && w.type != "B" && w.type != "C") {
    throw std::runtime_error("config: world/type must be A, B or C");
  }
  w.params = j;
  return w;
}

ModalityLayout world_layout(const std::string& type) {
  if (type == "A") return ArmToolWorld::layout();
  if (type == "B") return TendonArmWorld::layout();
  return DeflectingBipedWorld::layout();
}

Episode rollout_world(const WorldSpec& w, int n, std::uint64_t seed) {
  const json& p = w.params;
  const bool noise = p.value("noise", true);
  if (w.type == "A") {
    ArmToolWorld::Params ap;
    ap.l_tool_mm = p.value("l_tool_mm", 500.0);
    ap.phi_tool_deg = p.value("phi_tool_deg", 30.0);
    ap.noise = noise;
    return ArmToolWorld(ap).random_rollout(n, seed);
  }
  if (w.type == "B") {
    TendonArmWorld::Params bp = TendonArmWorld::Params::defaults();
    bp.noise = noise;
    bp.frozen_muscle = p.value("frozen_muscle", -1);
    if (p.contains("perturb_scale")) {
      bp = bp.perturbed(p.at("perturb_scale").get<double>(),
                        p.value("perturb_seed", 0));
    }
    return TendonArmWorld(bp).random_rollout(n, seed);
  }
  DeflectingBipedWorld::Params cp;
  cp.tool_mass_g = p.value("tool_mass_g", 40.0);
  cp.tool_length_mm = p.value("tool_length_mm", 176.0);
  cp.noise = noise;
  return DeflectingBipedWorld(cp).random_rollout(n, seed);
}

// ---------------------------------------------------------------------------
// Config -> runtime objects.

TrainConfig parse_train(const json& j, std::uint64_t seed) {
  check_keys(j, {"epochs", "batch_size", "learning_rate", "pb_learning_rate",
                 "mask_source", "seed"},
             "train");
  TrainConfig tc;
  tc.epochs = j.value("epochs", 200);
  tc.batch_size = j.value("batch_size", 32);
  tc.learning_rate = j.value("learning_rate", 0.02);
  tc.pb_learning_rate = j.value("pb_learning_rate", -1.0);
  tc.seed = j.value("seed", seed);
  const std::string src = j.value("mask_source", std::string("feasible"));
  if (src == "feasible") {
    tc.mask_source = MaskSource::kFeasibleSet;
  } else if (src == "all") {
    tc.mask_source = MaskSource::kAllMasks;
  } else {
    throw std::runtime_error("config: train/mask_source must be feasible|all");
  }
  tc.validate();
  return tc;
}

ModelConfig parse_model(const json& j, std::uint64_t seed) {
  check_keys(j, {"pb_dim", "latent_dim", "enc_hidden", "dec_hidden", "seed"},
             "model");
  ModelConfig mc;
  mc.pb_dim = j.value("pb_dim", 0);
  mc.latent_dim = j.value("latent_dim", 0);
  mc.enc_hidden = j.value("enc_hidden", std::vector<int>{});
  mc.dec_hidden = j.value("dec_hidden", std::vector<int>{});
  mc.seed = j.value("seed", seed);
  return mc;
}

OnlineConfig parse_online(const json& j, std::uint64_t seed) {
  check_keys(j, {"mode", "buffer_capacity", "min_start", "steps_per_datum",
                 "w_learning_rate", "p_learning_rate", "seed"},
             "online");
  OnlineConfig oc;
  const std::string mode = j.value("mode", std::string("p_only"));
  if (mode == "p_only") {
    oc.mode = UpdateMode::kPOnly;
  } else if (mode == "w_only") {
    oc.mode = UpdateMode::kWOnly;
  } else if (mode == "both") {
    oc.mode = UpdateMode::kBoth;
  } else {
    throw std::runtime_error("config: online/mode must be p_only|w_only|both");
  }
  oc.buffer_capacity = j.value("buffer_capacity", 100);
  oc.min_start = j.value("min_start", 20);
  oc.steps_per_datum = j.value("steps_per_datum", 1);
  oc.w_learning_rate = j.value("w_learning_rate", 0.02);
  oc.p_learning_rate = j.value("p_learning_rate", 0.2);
  oc.seed = j.value("seed", seed);
  oc.validate();
  return oc;
}

IterConfig parse_iter(const json& j) {
  check_keys(j, {"gamma_max", "n_batch", "iterations"}, "iter");
  IterConfig ic;
  ic.gamma_max = j.value("gamma_max", 1.0);
  ic.n_batch = j.value("n_batch", 16);
  ic.iterations = j.value("iterations", 30);
  ic.validate();
  return ic;
}

Vector parse_vector(const json& j, const std::string& path) {
  if (!j.is_array()) throw std::runtime_error("config: " + path + " must be an array");
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

int out_group_by_name(const GeMuCoModel& m, const std::string& name,
                      const std::string& path) {
  for (int g = 0; g < m.out_layout.group_count(); ++g) {
    if (m.out_layout.name(g) == name) return g;
  }
  throw std::runtime_error("config: " + path + ": '" + name +
                           "' is not an output group");
}

int in_group_by_name(const GeMuCoModel& m, const std::string& name,
                     const std::string& path) {
  for (int g = 0; g < m.n_sensor_in(); ++g) {
    if (m.in_layout.name(g) == name) return g;
  }
  throw std::runtime_error("config: " + path + ": '" + name +
                           "' is not an input group");
}

Vector normalize_group_target(const GeMuCoModel& m, int out_group,
                              const Vector& raw) {
  Vector t(raw.size());
  const int ug = m.out_groups[out_group];
  for (int c = 0; c < raw.size(); ++c) {
    t[c] = m.normalizer.normalize_at(m.union_layout.offset(ug) + c, raw[c]);
  }
  return t;
}

// Loss terms carry raw-unit targets in the config; they are normalized here.
LossSpec parse_loss(const json& j, const GeMuCoModel& m) {
  if (!j.is_array()) throw std::runtime_error("config: loss must be an array");
  LossSpec loss;
  int idx = 0;
  for (const json& t : j) {
    const std::string path = "loss[" + std::to_string(idx++) + "]";
    const std::string type = t.at("type").get<std::string>();
    if (type == "target_match") {
      check_keys(t, {"type", "group", "target", "weight"}, path);
      TargetMatchTerm term;
      term.out_group = out_group_by_name(m, t.at("group").get<std::string>(), path);
      term.target = normalize_group_target(
          m, term.out_group, parse_vector(t.at("target"), path + "/target"));
      term.weight = t.value("weight", 1.0);
      loss.terms.push_back(term);
    } else if (type == "magnitude") {
      check_keys(t, {"type", "group", "weight"}, path);
      MagnitudeTerm term;
      term.out_group = out_group_by_name(m, t.at("group").get<std::string>(), path);
      term.weight = t.value("weight", 1.0);
      loss.terms.push_back(term);
    } else if (type == "input_deviation") {
      check_keys(t, {"type", "group", "reference", "weight"}, path);
      InputDeviationTerm term;
      term.in_group = in_group_by_name(m, t.at("group").get<std::string>(), path);
      const Vector raw = parse_vector(t.at("reference"), path + "/reference");
      Vector ref(raw.size());
      const int ug = m.in_groups[term.in_group];
      for (int c = 0; c < raw.size(); ++c) {
        ref[c] = m.normalizer.normalize_at(m.union_layout.offset(ug) + c, raw[c]);
      }
      term.reference = ref;
      term.weight = t.value("weight", 1.0);
      loss.terms.push_back(term);
    } else if (type == "torque_balance") {
      check_keys(t, {"type", "angle_group", "tension_group", "length_group",
                     "tau_ext", "weight"},
                 path);
      TorqueBalanceTerm term;
      term.angle_in_group =
          in_group_by_name(m, t.at("angle_group").get<std::string>(), path);
      term.tension_out_group =
          out_group_by_name(m, t.at("tension_group").get<std::string>(), path);
      term.length_out_group =
          out_group_by_name(m, t.at("length_group").get<std::string>(), path);
      term.tau_ext = parse_vector(t.at("tau_ext"), path + "/tau_ext");
      term.weight = t.value("weight", 1.0);
      loss.terms.push_back(term);
    } else {
      throw std::runtime_error("config: " + path + ": unknown term type '" +
                               type + "'");
    }
  }
  loss.validate(m);
  return loss;
}

Vector parse_pb(const json& cfg, const GeMuCoModel& m) {
  if (!cfg.contains("pb")) return m.zero_pb();
  const json& j = cfg.at("pb");
  if (j.is_string()) {
    const std::string label = j.get<std::string>();
    auto it = m.pb_table.find(label);
    if (it == m.pb_table.end()) {
      throw std::runtime_error("config: pb label '" + label +
                               "' not in the model's pb table");
    }
    return it->second.values;
  }
  Vector pb = parse_vector(j, "pb");
  if (pb.size() != m.pb_dim) throw std::runtime_error("config: pb dim mismatch");
  return pb;
}

std::vector<int> groups_by_names(const ModalityLayout& lay, const json& names,
                                 const std::string& path) {
  std::vector<int> out;
  for (const json& n : names) {
    const int g = lay.index_of(n.get<std::string>());
    if (g < 0) {
      throw std::runtime_error("config: " + path + ": unknown group '" +
                               n.get<std::string>() + "'");
    }
    out.push_back(g);
  }
  return out;
}

ModalityLayout parse_layout(const json& j) {
  std::vector<Group> groups;
  for (const json& g : j) {
    check_keys(g, {"name", "dim"}, "layout[]");
    groups.push_back({g.at("name").get<std::string>(), g.at("dim").get<int>()});
  }
  return ModalityLayout(groups);
}

// ---------------------------------------------------------------------------
// Subcommand bodies.

int cmd_collect(const std::string& world_type, const std::string& state,
                int n, std::uint64_t seed, const std::string& out_dir) {
  WorldSpec w;
  w.type = world_type;
  w.params = json{{"type", world_type}};
  if (!state.empty()) {
    std::istringstream is(state);
    double a = 0, b = 0;
    char comma = 0;
    if (!(is >> a >> comma >> b) || comma != ',') {
      throw std::runtime_error("--state expects 'v1,v2'");
    }
    if (world_type == "A") {
      w.params["l_tool_mm"] = a;
      w.params["phi_tool_deg"] = b;
    } else if (world_type == "C") {
      w.params["tool_mass_g"] = a;
      w.params["tool_length_mm"] = b;
    }
  }
  const fs::path out = ensure_out_dir(out_dir);
  Dataset data;
  data.episodes.push_back(rollout_world(w, n, seed));
  const ModalityLayout lay = world_layout(world_type);
  write_dataset_csv(data, lay, (out / "dataset.csv").string());
  write_manifest(out, "collect", json{{"world", w.params}, {"n", n}}, seed,
                 {"dataset.csv"});
  std::cout << "wrote " << (out / "dataset.csv") << " (" << n << " rows)\n";
  return 0;
}

int cmd_determine(const json& cfg, std::uint64_t seed, const std::string& data_path,
                  const std::string& out_dir) {
  const ModalityLayout lay = cfg.contains("layout")
                                 ? parse_layout(cfg.at("layout"))
                                 : world_layout(parse_world(cfg.at("world")).type);
  Dataset data = read_dataset_csv(data_path, lay);
  StructureConfig sc;
  if (cfg.contains("structure")) {
    const json& s = cfg.at("structure");
    check_keys(s, {"c_out", "c_in", "eval_fraction"}, "structure");
    sc.thresholds.c_out = s.value("c_out", 0.15);
    sc.thresholds.c_in = s.value("c_in", 0.15);
    sc.eval_fraction = s.value("eval_fraction", 0.2);
  }
  sc.model = parse_model(cfg.value("model", json::object()), seed);
  sc.probe_train = parse_train(cfg.value("train", json::object()), seed);
  sc.final_train = sc.probe_train;
  sc.final_train.seed = Rng::mix(sc.probe_train.seed, 1);

  StructureResult result = determine_structure(data, lay, sc);
  const fs::path out = ensure_out_dir(out_dir);
  {
    std::ofstream f(out / "report.json");
    f << result.report.to_json().dump(1) << "\n";
  }
  {
    std::ofstream f(out / "report.txt");
    f << result.report.table();
  }
  save_model(result.final_train.model, (out / "model.json").string());
  write_manifest(out, "determine", cfg, seed,
                 {"report.json", "report.txt", "model.json"});
  std::cout << result.report.table();
  return 0;
}

int cmd_train(const json& cfg, std::uint64_t seed, const std::string& data_path,
              const std::string& out_dir) {
  const ModalityLayout lay = cfg.contains("layout")
                                 ? parse_layout(cfg.at("layout"))
                                 : world_layout(parse_world(cfg.at("world")).type);
  Dataset data = read_dataset_csv(data_path, lay);
  std::vector<int> in_groups, out_groups;
  if (cfg.contains("in_groups")) {
    in_groups = groups_by_names(lay, cfg.at("in_groups"), "in_groups");
    out_groups = groups_by_names(lay, cfg.at("out_groups"), "out_groups");
  } else {
    for (int g = 0; g < lay.group_count(); ++g) {
      in_groups.push_back(g);
      out_groups.push_back(g);
    }
  }
  const ModelConfig mc = parse_model(cfg.value("model", json::object()), seed);
  std::optional<MaskSet> masks;
  if (cfg.contains("masks")) {
    MaskSet ms(static_cast<int>(in_groups.size()));
    for (const json& mj : cfg.at("masks")) {
      const std::string s = mj.get<std::string>();
      if (s.size() != in_groups.size()) {
        throw std::runtime_error("config: masks entry length mismatch");
      }
      Mask mask(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) mask[i] = s[i] == '1';
      ms.insert(mask);
    }
    masks = std::move(ms);
  }
  GeMuCoModel model = make_model(lay, in_groups, out_groups, mc, std::move(masks));
  model.normalizer = fit_normalizer(data, lay);
  const TrainConfig tc = parse_train(cfg.value("train", json::object()), seed);
  TrainResult result = train(std::move(model), data, tc);

  const fs::path out = ensure_out_dir(out_dir);
  save_model(result.model, (out / "model.json").string());
  {
    std::ofstream f(out / "loss_history.csv");
    f << "epoch,loss\n";
    f.precision(17);
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
      f << e << "," << result.epoch_loss[e] << "\n";
    }
  }
  write_manifest(out, "train", cfg, seed, {"model.json", "loss_history.csv"});
  std::cout << "final epoch loss " << result.epoch_loss.back() << "\n";
  return 0;
}

int cmd_adapt(const json& cfg, std::uint64_t seed, const std::string& model_path,
              const std::string& data_path, const std::string& out_dir) {
  GeMuCoModel model = load_model(model_path);
  Dataset stream = read_dataset_csv(data_path, model.union_layout);
  const OnlineConfig oc = parse_online(cfg.value("online", json::object()), seed);
  Vector pb = parse_pb(cfg, model);
  ConstraintSet constraints;  // constraint samples may come from a csv
  if (cfg.contains("constraints")) {
    Dataset cd = read_dataset_csv(cfg.at("constraints").get<std::string>(),
                                  model.union_layout);
    for (const Episode& e : cd.episodes) {
      constraints.samples.insert(constraints.samples.end(), e.samples.begin(),
                                 e.samples.end());
    }
  }
  OnlineUpdater updater(std::move(model), pb, oc, constraints);

  const fs::path out = ensure_out_dir(out_dir);
  std::ofstream traj(out / "pb_trajectory.csv");
  traj << "step";
  for (int i = 0; i < pb.size(); ++i) traj << ",pb_" << i;
  traj << "\n";
  traj.precision(17);
  int step = 0;
  for (const Episode& e : stream.episodes) {
    for (const Sample& s : e.samples) {
      updater.feed(s);
      traj << step++;
      for (int i = 0; i < updater.pb().size(); ++i) traj << "," << updater.pb()[i];
      traj << "\n";
    }
  }
  save_model(updater.model(), (out / "model.json").string());
  write_manifest(out, "adapt", cfg, seed, {"model.json", "pb_trajectory.csv"});
  std::cout << "adapted over " << step << " samples ("
            << updater.skipped_updates() << " warm-up steps)\n";
  return 0;
}

int cmd_estimate(const json& cfg, std::uint64_t seed, const std::string& model_path,
                 const std::string& data_path, const std::string& out_dir) {
  GeMuCoModel model = load_model(model_path);
  Dataset obs_data = read_dataset_csv(data_path, model.union_layout);
  const Vector pb = parse_pb(cfg, model);
  IterConfig iter = cfg.contains("iter") ? parse_iter(cfg.at("iter")) : IterConfig{};

  const fs::path out = ensure_out_dir(out_dir);
  std::ofstream f(out / "estimates.csv");
  f << "strategy";
  for (int g = 0; g < model.union_layout.group_count(); ++g) {
    for (int c = 0; c < model.union_layout.dim(g); ++c) {
      f << "," << model.union_layout.name(g) << "_" << c;
    }
  }
  f << "\n";
  f.precision(17);
  for (const Episode& e : obs_data.episodes) {
    for (const Sample& s : e.samples) {
      Observation ob{s.values, s.available};
      EstimateResult r = estimate(model, ob, pb, iter);
      f << (r.strategy == Strategy::kDirectMask      ? "direct"
            : r.strategy == Strategy::kLatentIterate ? "latent"
                                                     : "input");
      for (int c = 0; c < r.values.size(); ++c) f << "," << r.values[c];
      f << "\n";
    }
  }
  write_manifest(out, "estimate", cfg, seed, {"estimates.csv"});
  return 0;
}

int cmd_control(const json& cfg, std::uint64_t seed, const std::string& model_path,
                const std::string& out_dir) {
  GeMuCoModel model = load_model(model_path);
  const Vector pb = parse_pb(cfg, model);
  ControlRequest req;
  req.loss = parse_loss(cfg.at("loss"), model);
  const int cg = model.union_layout.index_of(
      cfg.at("control_group").get<std::string>());
  if (cg < 0) throw std::runtime_error("config: unknown control_group");
  req.control_group = cg;
  req.init_control_raw =
      cfg.contains("init_control")
          ? parse_vector(cfg.at("init_control"), "init_control")
          : Vector(Vector::Zero(model.union_layout.dim(cg)));
  req.iter = cfg.contains("iter") ? parse_iter(cfg.at("iter")) : IterConfig{};

  ControlResult r = control(model, req, pb);
  const fs::path out = ensure_out_dir(out_dir);
  std::ofstream f(out / "control.csv");
  f << model.union_layout.name(cg);
  f << "\n";
  f.precision(17);
  for (int c = 0; c < r.control_raw.size(); ++c) {
    f << r.control_raw[c] << (c + 1 < r.control_raw.size() ? "," : "\n");
  }
  write_manifest(out, "control", cfg, seed, {"control.csv"});
  std::cout << "control:";
  for (int c = 0; c < r.control_raw.size(); ++c) std::cout << " " << r.control_raw[c];
  std::cout << "\n";
  return 0;
}

int cmd_simulate(const json& cfg, std::uint64_t seed, const std::string& model_path,
                 const std::string& data_path, const std::string& out_dir) {
  GeMuCoModel model = load_model(model_path);
  const Vector pb = parse_pb(cfg, model);
  const int cg = model.union_layout.index_of(
      cfg.at("command_group").get<std::string>());
  if (cg < 0) throw std::runtime_error("config: unknown command_group");
  LossSpec constraints;
  if (cfg.contains("loss")) constraints = parse_loss(cfg.at("loss"), model);
  IterConfig iter = cfg.contains("iter") ? parse_iter(cfg.at("iter")) : IterConfig{};
  const bool carry = cfg.value("carry_over", true);

  Dataset cmds = read_dataset_csv(data_path, model.union_layout);
  SimulationSession session;
  session.carry_over = carry;

  const fs::path out = ensure_out_dir(out_dir);
  std::ofstream f(out / "simulation.csv");
  for (int g = 0; g < model.out_layout.group_count(); ++g) {
    for (int c = 0; c < model.out_layout.dim(g); ++c) {
      f << (g + c > 0 ? "," : "") << "sim_" << model.out_layout.name(g) << "_" << c;
    }
  }
  f << "\n";
  f.precision(17);
  const int ug_off = model.union_layout.offset(cg);
  const int ug_dim = model.union_layout.dim(cg);
  for (const Episode& e : cmds.episodes) {
    for (const Sample& s : e.samples) {
      const Vector x_send = s.values.segment(ug_off, ug_dim);
      SimulateResult r =
          simulate(model, x_send, cg, constraints, pb, iter, &session);
      for (int c = 0; c < r.x_out_raw.size(); ++c) {
        f << r.x_out_raw[c] << (c + 1 < r.x_out_raw.size() ? "," : "\n");
      }
    }
  }
  write_manifest(out, "simulate", cfg, seed, {"simulation.csv"});
  return 0;
}

int cmd_detect(const json& cfg, std::uint64_t seed, const std::string& data_path,
               const std::string& out_dir) {
  // Residual CSV: header r_0,...,r_{d-1}; the first calibration_rows rows
  // fit the detector, every row is scored.
  std::ifstream in(data_path);
  if (!in) throw std::runtime_error("cannot open " + data_path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty residual csv");
  std::vector<Vector> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> vals;
    std::istringstream is(line);
    std::string tok;
    while (std::getline(is, tok, ',')) vals.push_back(std::stod(tok));
    Vector v(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) v[i] = vals[i];
    rows.push_back(v);
  }
  const int calib_n = cfg.value("calibration_rows", 100);
  if (static_cast<int>(rows.size()) < calib_n) {
    throw std::runtime_error("detect: fewer rows than calibration_rows");
  }
  std::vector<Vector> calib(rows.begin(), rows.begin() + calib_n);
  const AnomalyModel amodel = calibrate(calib);

  const fs::path out = ensure_out_dir(out_dir);
  std::ofstream f(out / "anomaly.csv");
  f << "d,anomaly\n";
  f.precision(17);
  for (const Vector& r : rows) {
    const double d = score(amodel, r);
    f << d << "," << (is_anomalous(amodel, d) ? 1 : 0) << "\n";
  }
  write_manifest(out, "detect", cfg, seed, {"anomaly.csv"});
  std::cout << "threshold " << amodel.threshold << "\n";
  return 0;
}

int cmd_eval(const std::string& scenario, std::uint64_t seed,
             const std::string& out_dir) {
  std::vector<std::string> names;
  if (scenario == "all") {
    names = scenario_names();
  } else {
    names.push_back(scenario);
  }
  const fs::path out = ensure_out_dir(out_dir);
  int failures = 0;
  ordered_json all = ordered_json::array();
  for (const std::string& name : names) {
    ScenarioResult r = run_scenario(name, seed);
    for (const auto& c : r.checks) {
      std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << name << ": " << c.name
                << " (" << c.detail << ")\n";
      if (!c.pass) ++failures;
    }
    all.push_back(r.to_json());
  }
  {
    std::ofstream f(out / "eval.json");
    f << all.dump(1) << "\n";
  }
  write_manifest(out, "eval", json{{"scenario", scenario}}, seed, {"eval.json"});
  return failures == 0 ? 0 : 1;
}

}  // namespace
}  // namespace gemuco

int main(int argc, char** argv) {
  using namespace gemuco;
  CLI::App app{"GeMuCo: correlational body-schema models over robot sensor channels"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", data_path, model_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  app.add_option_function<std::uint64_t>(
         "--seed", [&](std::uint64_t s) { seed = s; seed_set = true; },
         "Seed override");
  app.add_option("--out-dir", out_dir, "Artifact directory");

  if (const char* env = std::getenv("GEMUCO_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) omp_set_num_threads(n);
    } catch (...) {
    }
  }

  auto* collect = app.add_subcommand("collect", "Roll out a world to CSV");
  std::string world_type = "A", state;
  int n_samples = 1000;
  collect->add_option("--world", world_type, "A|B|C")->required();
  collect->add_option("--state", state, "hidden state, e.g. 500,30");
  collect->add_option("--n", n_samples, "sample count");

  auto* determine = app.add_subcommand("determine", "Automatic structure determination");
  determine->add_option("--config", config_path)->required();
  determine->add_option("--data", data_path)->required();

  auto* train_cmd = app.add_subcommand("train", "Offline training");
  train_cmd->add_option("--config", config_path)->required();
  train_cmd->add_option("--data", data_path)->required();

  auto* adapt = app.add_subcommand("adapt", "Online adaptation from a CSV stream");
  adapt->add_option("--config", config_path)->required();
  adapt->add_option("--model", model_path)->required();
  adapt->add_option("--data", data_path)->required();

  auto* estimate_cmd = app.add_subcommand("estimate", "State estimation");
  estimate_cmd->add_option("--config", config_path)->required();
  estimate_cmd->add_option("--model", model_path)->required();
  estimate_cmd->add_option("--data", data_path)->required();

  auto* control_cmd = app.add_subcommand("control", "Compute a control input");
  control_cmd->add_option("--config", config_path)->required();
  control_cmd->add_option("--model", model_path)->required();

  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate commanded values");
  simulate_cmd->add_option("--config", config_path)->required();
  simulate_cmd->add_option("--model", model_path)->required();
  simulate_cmd->add_option("--data", data_path)->required();

  auto* detect = app.add_subcommand("detect", "Score residuals for anomalies");
  detect->add_option("--config", config_path)->required();
  detect->add_option("--data", data_path)->required();

  auto* eval = app.add_subcommand("eval", "Run a named evaluation scenario");
  std::string scenario;
  eval->add_option("--scenario", scenario, "scenario name or 'all'")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    json cfg = json::object();
    if (!config_path.empty()) {
      cfg = load_config(config_path);
      if (cfg.contains("seed") && !seed_set) seed = cfg.at("seed").get<std::uint64_t>();
    }
    if (collect->parsed()) return cmd_collect(world_type, state, n_samples, seed, out_dir);
    if (determine->parsed()) return cmd_determine(cfg, seed, data_path, out_dir);
    if (train_cmd->parsed()) return cmd_train(cfg, seed, data_path, out_dir);
    if (adapt->parsed()) return cmd_adapt(cfg, seed, model_path, data_path, out_dir);
    if (estimate_cmd->parsed()) return cmd_estimate(cfg, seed, model_path, data_path, out_dir);
    if (control_cmd->parsed()) return cmd_control(cfg, seed, model_path, out_dir);
    if (simulate_cmd->parsed()) return cmd_simulate(cfg, seed, model_path, data_path, out_dir);
    if (detect->parsed()) return cmd_detect(cfg, seed, data_path, out_dir);
    if (eval->parsed()) return cmd_eval(scenario, seed, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
