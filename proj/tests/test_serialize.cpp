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

#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "gemuco/rng.hpp"

namespace gemuco {
namespace {

GeMuCoModel sample_model() {
  ModalityLayout lay({{"theta", 2}, {"f", 3}});
  ModelConfig mc;
  mc.pb_dim = 2;
  mc.seed = 404;
  GeMuCoModel m = make_model(lay, {0, 1}, {0}, mc);
  Rng rng(1);
  Vector mean(5), stddev(5);
  for (int i = 0; i < 5; ++i) {
    mean[i] = rng.uniform(-2, 2);
    stddev[i] = rng.uniform(0.5, 3.0);
  }
  m.normalizer = Normalizer(mean, stddev);
  ParametricBias pb;
  pb.label = "state_x";
  pb.values = (Vector(2) << 0.125, -0.75).finished();
  m.pb_table["state_x"] = pb;
  return m;
}

TEST_CASE("serialize: save/load round trip is exact, re-save is byte-equal") {
  GeMuCoModel m = sample_model();
  const std::string p1 = "test_model_1.json";
  const std::string p2 = "test_model_2.json";
  save_model(m, p1);
  GeMuCoModel r = load_model(p1);
  save_model(r, p2);

  auto slurp = [](const std::string& p) {
    std::ifstream f(p);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
  };
  CHECK(slurp(p1) == slurp(p2));

  // Behavioral equality at full precision.
  Rng rng(2);
  Vector x(5), pb(2);
  for (int i = 0; i < 5; ++i) x[i] = rng.uniform(-1, 1);
  pb << 0.3, 0.4;
  const Mask mask{1, 0};
  const Vector a = predict(m, x, mask, pb);
  const Vector b = predict(r, x, mask, pb);
  CHECK((a.array() == b.array()).all());
  CHECK(r.pb_table.at("state_x").values[1] == -0.75);
  CHECK(r.feasible_masks.size() == m.feasible_masks.size());

  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("serialize: unsupported format version is rejected") {
  GeMuCoModel m = sample_model();
  auto j = model_to_json(m);
  j["format_version"] = 999;
  CHECK_THROWS(model_from_json(j));
}

TEST_CASE("serialize: corrupted weight array is rejected") {
  GeMuCoModel m = sample_model();
  auto j = model_to_json(m);
  auto w = j["encoder"]["weights"].get<std::vector<double>>();
  w.pop_back();
  j["encoder"]["weights"] = w;
  CHECK_THROWS(model_from_json(j));
}

}  // namespace
}  // namespace gemuco
