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

#include "gemuco/serialize.hpp"

#include <fstream>
#include <stdexcept>

namespace gemuco {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json layout_to_json(const ModalityLayout& lay) {
  ordered_json groups = ordered_json::array();
  for (const Group& g : lay.groups()) {
    groups.push_back({{"name", g.name}, {"dim", g.dim}});
  }
  return groups;
}

ModalityLayout layout_from_json(const json& j) {
  std::vector<Group> groups;
  for (const auto& g : j) {
    groups.push_back(Group{g.at("name").get<std::string>(), g.at("dim").get<int>()});
  }
  return ModalityLayout(std::move(groups));
}

ordered_json spec_to_json(const NetSpec& s) {
  return ordered_json{
      {"layer_widths", s.layer_widths},
      {"activation", s.hidden_activation == Activation::kTanh ? "tanh" : "identity"}};
}

NetSpec spec_from_json(const json& j) {
  NetSpec s;
  s.layer_widths = j.at("layer_widths").get<std::vector<int>>();
  const std::string act = j.at("activation").get<std::string>();
  if (act == "tanh") {
    s.hidden_activation = Activation::kTanh;
  } else if (act == "identity") {
    s.hidden_activation = Activation::kIdentity;
  } else {
    throw std::runtime_error("model file: unknown activation '" + act + "'");
  }
  s.validate();
  return s;
}

std::vector<double> vec_to_std(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Vector vec_from_std(const std::vector<double>& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

}  // namespace

ordered_json model_to_json(const GeMuCoModel& m) {
  ordered_json j;
  j["format_version"] = kModelFormatVersion;
  j["union_layout"] = layout_to_json(m.union_layout);
  j["in_groups"] = m.in_groups;
  j["out_groups"] = m.out_groups;
  j["pb_dim"] = m.pb_dim;
  j["latent_dim"] = m.latent_dim;
  j["encoder"] = {{"spec", spec_to_json(m.enc_spec)},
                  {"weights", m.enc_w.flatten()}};
  j["decoder"] = {{"spec", spec_to_json(m.dec_spec)},
                  {"weights", m.dec_w.flatten()}};
  j["normalizer"] = {{"mean", vec_to_std(m.normalizer.mean())},
                     {"stddev", vec_to_std(m.normalizer.stddev())}};
  ordered_json masks = ordered_json::array();
  for (const Mask& mask : m.feasible_masks.masks()) {
    masks.push_back(mask_to_string(mask));
  }
  j["feasible_masks"] = masks;
  ordered_json pbs = ordered_json::object();
  for (const auto& [label, pb] : m.pb_table) {
    pbs[label] = vec_to_std(pb.values);
  }
  j["pb_table"] = pbs;
  return j;
}

GeMuCoModel model_from_json(const json& j) {
  const int version = j.at("format_version").get<int>();
  if (version != kModelFormatVersion) {
    throw std::runtime_error("model file: unsupported format_version " +
                             std::to_string(version));
  }
  GeMuCoModel m;
  m.union_layout = layout_from_json(j.at("union_layout"));
  m.in_groups = j.at("in_groups").get<std::vector<int>>();
  m.out_groups = j.at("out_groups").get<std::vector<int>>();
  m.in_layout = m.union_layout.sublayout(m.in_groups);
  m.out_layout = m.union_layout.sublayout(m.out_groups);
  m.finalize_channel_maps();
  m.pb_dim = j.at("pb_dim").get<int>();
  m.latent_dim = j.at("latent_dim").get<int>();
  m.enc_spec = spec_from_json(j.at("encoder").at("spec"));
  m.dec_spec = spec_from_json(j.at("decoder").at("spec"));
  m.enc_w = Weights::unflatten(m.enc_spec,
                               j.at("encoder").at("weights").get<std::vector<double>>());
  m.dec_w = Weights::unflatten(m.dec_spec,
                               j.at("decoder").at("weights").get<std::vector<double>>());
  m.normalizer =
      Normalizer(vec_from_std(j.at("normalizer").at("mean").get<std::vector<double>>()),
                 vec_from_std(j.at("normalizer").at("stddev").get<std::vector<double>>()));
  m.feasible_masks = MaskSet(m.in_layout.group_count());
  for (const auto& ms : j.at("feasible_masks")) {
    const std::string s = ms.get<std::string>();
    if (static_cast<int>(s.size()) != m.in_layout.group_count()) {
      throw std::runtime_error("model file: mask length mismatch");
    }
    Mask mask(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) mask[i] = (s[i] == '1') ? 1 : 0;
    m.feasible_masks.insert(mask);
  }
  for (const auto& [label, vals] : j.at("pb_table").items()) {
    ParametricBias pb;
    pb.label = label;
    pb.values = vec_from_std(vals.get<std::vector<double>>());
    if (pb.values.size() != m.pb_dim) {
      throw std::runtime_error("model file: pb dim mismatch for '" + label + "'");
    }
    m.pb_table[label] = pb;
  }
  m.validate();
  return m;
}

void save_model(const GeMuCoModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  out << model_to_json(m).dump(1) << "\n";
}

GeMuCoModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  json j;
  in >> j;
  return model_from_json(j);
}

}  // namespace gemuco
