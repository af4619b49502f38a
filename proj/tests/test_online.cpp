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

#include "gemuco/online.hpp"

#include "doctest.h"
#include "gemuco/rng.hpp"

namespace gemuco {
namespace {

Sample sample_ab(double a, double b, const std::string& id = "s") {
  Sample s;
  s.state_id = id;
  s.values = Vector(2);
  s.values << a, b;
  s.available = {1, 1};
  return s;
}

GeMuCoModel ab_model(int pb_dim, std::uint64_t seed) {
  ModalityLayout lay({{"a", 1}, {"b", 1}});
  ModelConfig mc;
  mc.pb_dim = pb_dim;
  mc.seed = seed;
  MaskSet masks(1);
  masks.insert(Mask{1});
  GeMuCoModel m = make_model(lay, {0}, {1}, mc, masks);
  m.normalizer = Normalizer(Vector::Zero(2), Vector::Ones(2));
  return m;
}

TEST_CASE("buffer: oldest-first eviction at capacity") {
  OnlineBuffer buf(3);
  for (int i = 1; i <= 4; ++i) buf.push(sample_ab(i, 0));
  REQUIRE(buf.size() == 3);
  CHECK(buf.samples()[0].values[0] == 2.0);
  CHECK(buf.samples()[1].values[0] == 3.0);
  CHECK(buf.samples()[2].values[0] == 4.0);
}

TEST_CASE("buffer: no eviction below capacity, order preserved") {
  OnlineBuffer buf(5);
  buf.push(sample_ab(1, 0));
  buf.push(sample_ab(2, 0));
  CHECK(buf.size() == 2);
  CHECK(buf.samples()[0].values[0] == 1.0);
  CHECK(buf.samples()[1].values[0] == 2.0);
}

TEST_CASE("buffer: randomized FIFO property") {
  Rng rng(606);
  for (int trial = 0; trial < 20; ++trial) {
    const int cap = 1 + static_cast<int>(rng.index(8));
    OnlineBuffer buf(cap);
    std::vector<double> pushed;
    const int n = 1 + static_cast<int>(rng.index(30));
    for (int i = 0; i < n; ++i) {
      const double v = rng.uniform(-10, 10);
      pushed.push_back(v);
      buf.push(sample_ab(v, 0));
    }
    const int expect = std::min(cap, n);
    REQUIRE(buf.size() == expect);
    for (int i = 0; i < expect; ++i) {
      CHECK(buf.samples()[i].values[0] == pushed[n - expect + i]);
    }
  }
}

TEST_CASE("update: below min_start is a silent no-op") {
  GeMuCoModel model = ab_model(1, 2);
  OnlineConfig oc;
  oc.min_start = 10;
  oc.buffer_capacity = 20;
  OnlineUpdater up(model, Vector::Zero(1), oc);
  const auto w_before = up.model().enc_w.flatten();
  for (int i = 0; i < 5; ++i) up.feed(sample_ab(0.1 * i, 0.2 * i));
  CHECK(up.model().enc_w.flatten() == w_before);
  CHECK(up.skipped_updates() == 5);
}

TEST_CASE("update: p_only leaves weights byte-identical, w_only leaves pb") {
  Rng rng(17);
  auto stream = [&](OnlineUpdater& up, int n) {
    for (int i = 0; i < n; ++i) {
      const double a = rng.uniform(-1, 1);
      up.feed(sample_ab(a, 0.7 * a + rng.gaussian(0.0, 0.05)));
    }
  };

  {
    GeMuCoModel model = ab_model(2, 3);
    OnlineConfig oc;
    oc.mode = UpdateMode::kPOnly;
    oc.min_start = 5;
    OnlineUpdater up(model, Vector::Zero(2), oc);
    const auto enc_before = model.enc_w.flatten();
    const auto dec_before = model.dec_w.flatten();
    stream(up, 30);
    CHECK(up.model().enc_w.flatten() == enc_before);
    CHECK(up.model().dec_w.flatten() == dec_before);
    CHECK(up.pb().norm() > 0.0);  // the pb did move
  }
  {
    GeMuCoModel model = ab_model(2, 4);
    OnlineConfig oc;
    oc.mode = UpdateMode::kWOnly;
    oc.min_start = 5;
    Vector pb0(2);
    pb0 << 0.25, -0.125;
    OnlineUpdater up(model, pb0, oc);
    stream(up, 30);
    CHECK((up.pb().array() == pb0.array()).all());
    CHECK(up.model().enc_w.flatten() != model.enc_w.flatten());
  }
}

TEST_CASE("update: pb converges on stationary data") {
  // Train a model over two slope states so that the pb carries the slope,
  // then adapt the pb from zero on a stream from one state: early steps are
  // large, the tail settles near the trained value.
  Rng data_rng(20);
  Dataset d;
  for (int k = 0; k < 2; ++k) {
    Episode e{"s" + std::to_string(k), {}};
    const double slope = k == 0 ? 0.2 : 1.0;
    for (int i = 0; i < 150; ++i) {
      const double a = data_rng.uniform(-1, 1);
      e.samples.push_back(
          sample_ab(a, slope * a + data_rng.gaussian(0.0, 0.005), e.state_id));
    }
    d.episodes.push_back(e);
  }
  GeMuCoModel model = ab_model(2, 9);
  model.normalizer = fit_normalizer(d, model.union_layout);
  TrainConfig tc;
  tc.epochs = 150;
  tc.batch_size = 16;
  tc.learning_rate = 0.05;
  tc.seed = 10;
  GeMuCoModel trained = train(std::move(model), d, tc).model;

  OnlineConfig oc;
  oc.mode = UpdateMode::kPOnly;
  oc.min_start = 10;
  oc.buffer_capacity = 40;
  oc.p_learning_rate = 0.3;
  OnlineUpdater up(trained, Vector::Zero(2), oc);
  Rng rng(21);
  std::vector<double> deltas;
  Vector prev = up.pb();
  for (int i = 0; i < 150; ++i) {
    const double a = rng.uniform(-1, 1);
    up.feed(sample_ab(a, 1.0 * a + rng.gaussian(0.0, 0.005)));
    deltas.push_back((up.pb() - prev).norm());
    prev = up.pb();
  }
  const double max_delta = *std::max_element(deltas.begin(), deltas.end());
  double tail = 0.0;
  for (std::size_t i = deltas.size() - 10; i < deltas.size(); ++i) {
    tail = std::max(tail, deltas[i]);
  }
  CHECK(tail < 0.1 * max_delta);
}

TEST_CASE("update: constraint samples join every batch") {
  // A constraint pin at the origin keeps the model's prediction there even
  // as the stream pulls elsewhere.
  GeMuCoModel model = ab_model(0, 12);
  OnlineConfig p_plain;
  p_plain.mode = UpdateMode::kWOnly;
  p_plain.min_start = 5;
  p_plain.w_learning_rate = 0.3;
  ConstraintSet constraints;
  for (int i = 0; i < 10; ++i) constraints.samples.push_back(sample_ab(0.0, 0.0));

  OnlineUpdater plain(model, Vector(), p_plain);
  OnlineUpdater pinned(model, Vector(), p_plain, constraints);
  Rng rng(13);
  for (int i = 0; i < 60; ++i) {
    const double a = rng.uniform(-1, 1);
    const Sample s = sample_ab(a, 0.9 * a + 0.8);
    plain.feed(s);
    pinned.feed(s);
  }
  auto origin_pred = [&](const GeMuCoModel& m) {
    return std::abs(predict(m, Vector::Zero(1), Mask{1}, Vector())[0]);
  };
  CHECK(origin_pred(pinned.model()) < origin_pred(plain.model()));
}

}  // namespace
}  // namespace gemuco
