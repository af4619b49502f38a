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

#include "gemuco/dataset.hpp"

#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "gemuco/rng.hpp"

namespace gemuco {
namespace {

ModalityLayout lay2() { return ModalityLayout({{"p", 2}, {"q", 1}}); }

Dataset make_data(int per_state, int states, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  for (int k = 0; k < states; ++k) {
    Episode e{"s" + std::to_string(k), {}};
    for (int i = 0; i < per_state; ++i) {
      Sample s;
      s.state_id = e.state_id;
      s.values = Vector(3);
      for (int c = 0; c < 3; ++c) s.values[c] = rng.uniform(-3, 3);
      s.available = {1, static_cast<std::uint8_t>(rng.index(2))};
      if (!s.available[1]) s.values[2] = 0.0;
      e.samples.push_back(s);
    }
    d.episodes.push_back(e);
  }
  return d;
}

TEST_CASE("dataset csv: write/read round trip preserves everything") {
  const ModalityLayout lay = lay2();
  Dataset d = make_data(25, 3, 42);
  const std::string path = "test_dataset_roundtrip.csv";
  write_dataset_csv(d, lay, path);
  Dataset r = read_dataset_csv(path, lay);
  REQUIRE(r.state_count() == 3);
  REQUIRE(r.sample_count() == 75);
  for (int k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < d.episodes[k].samples.size(); ++i) {
      const Sample& a = d.episodes[k].samples[i];
      const Sample& b = r.episodes[k].samples[i];
      CHECK(a.state_id == b.state_id);
      CHECK(a.available == b.available);
      CHECK((a.values - b.values).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    }
  }
  std::remove(path.c_str());
}

TEST_CASE("dataset csv: header mismatch is rejected") {
  const std::string path = "test_dataset_badheader.csv";
  {
    std::ofstream f(path);
    f << "state_id,avail_p,avail_q,wrong_0,p_1,q_0\n";
    f << "s,1,1,0,0,0\n";
  }
  CHECK_THROWS(read_dataset_csv(path, lay2()));
  std::remove(path.c_str());
}

TEST_CASE("dataset csv: short row reports the line number") {
  const std::string path = "test_dataset_shortrow.csv";
  {
    std::ofstream f(path);
    f << "state_id,avail_p,avail_q,p_0,p_1,q_0\n";
    f << "s,1,1,0.5,0.25,1.5\n";
    f << "s,1,1,0.5\n";
  }
  try {
    read_dataset_csv(path, lay2());
    FAIL("expected error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("split_dataset: per-episode trailing eval split") {
  Dataset d = make_data(10, 2, 7);
  Dataset tr, ev;
  split_dataset(d, 0.2, &tr, &ev);
  CHECK(tr.episodes[0].samples.size() == 8);
  CHECK(ev.episodes[0].samples.size() == 2);
  // The eval part is the tail.
  CHECK((ev.episodes[0].samples[0].values -
         d.episodes[0].samples[8].values).cwiseAbs().maxCoeff() ==
        doctest::Approx(0.0));
  CHECK_THROWS(split_dataset(d, 0.0, &tr, &ev));
  CHECK_THROWS(split_dataset(d, 1.0, &tr, &ev));
}

TEST_CASE("dataset validate: rejects shape and id mismatches") {
  Dataset d = make_data(3, 1, 1);
  d.episodes[0].samples[1].state_id = "other";
  CHECK_THROWS(d.validate(lay2()));

  Dataset d2 = make_data(3, 1, 2);
  d2.episodes[0].samples[0].values = Vector::Zero(2);
  CHECK_THROWS(d2.validate(lay2()));

  Dataset d3;
  CHECK_THROWS(d3.validate(lay2()));
}

}  // namespace
}  // namespace gemuco
