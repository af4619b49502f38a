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

#include "gemuco/modality.hpp"

#include "doctest.h"
#include "gemuco/dataset.hpp"
#include "gemuco/rng.hpp"

namespace gemuco {
namespace {

ModalityLayout two_group_layout() {
  return ModalityLayout({{"a", 2}, {"b", 1}});
}

TEST_CASE("layout: offsets, dims and lookups") {
  ModalityLayout lay({{"x", 3}, {"y", 1}, {"z", 2}});
  CHECK(lay.group_count() == 3);
  CHECK(lay.total_dim() == 6);
  CHECK(lay.offset(0) == 0);
  CHECK(lay.offset(1) == 3);
  CHECK(lay.offset(2) == 4);
  CHECK(lay.index_of("y") == 1);
  CHECK(lay.index_of("nope") == -1);
  CHECK_THROWS(ModalityLayout({{"x", 2}, {"x", 1}}));
  CHECK_THROWS(ModalityLayout({{"x", 0}}));
}

TEST_CASE("enumerate_all_masks: sizes and membership") {
  CHECK(enumerate_all_masks(1).size() == 1);
  CHECK(enumerate_all_masks(1).contains(Mask{1}));

  MaskSet m2 = enumerate_all_masks(2);
  CHECK(m2.size() == 3);
  CHECK(m2.contains(Mask{1, 0}));
  CHECK(m2.contains(Mask{0, 1}));
  CHECK(m2.contains(Mask{1, 1}));
  CHECK_FALSE(m2.contains(Mask{0, 0}));

  CHECK(enumerate_all_masks(3).size() == 7);
  CHECK(enumerate_all_masks(4).size() == 15);
  CHECK_THROWS(enumerate_all_masks(0));
  CHECK_THROWS(enumerate_all_masks(17));
}

TEST_CASE("mask set: rejects duplicates and all-zero members") {
  MaskSet s(2);
  CHECK(s.insert(Mask{1, 0}));
  CHECK_FALSE(s.insert(Mask{1, 0}));
  CHECK_FALSE(s.insert(Mask{0, 0}));
  CHECK(s.size() == 1);
}

TEST_CASE("apply_mask: definition cases") {
  ModalityLayout lay = two_group_layout();
  Vector x(3);
  x << 1, 2, 3;

  Vector same = apply_mask(lay, x, Mask{1, 1});
  CHECK((same.array() == x.array()).all());

  Vector only_b = apply_mask(lay, x, Mask{0, 1});
  CHECK(only_b[0] == 0.0);
  CHECK(only_b[1] == 0.0);
  CHECK(only_b[2] == 3.0);

  Vector only_a = apply_mask(lay, x, Mask{1, 0});
  CHECK(only_a[0] == 1.0);
  CHECK(only_a[1] == 2.0);
  CHECK(only_a[2] == 0.0);

  CHECK_THROWS(apply_mask(lay, Vector::Zero(2), Mask{1, 1}));
}

TEST_CASE("apply_mask: idempotence over random vectors and masks") {
  ModalityLayout lay({{"p", 2}, {"q", 3}, {"r", 1}});
  Rng rng(404);
  for (int t = 0; t < 50; ++t) {
    Vector x(6);
    for (int i = 0; i < 6; ++i) x[i] = rng.uniform(-5, 5);
    Mask m(3);
    for (int g = 0; g < 3; ++g) m[g] = rng.index(2);
    Vector once = apply_mask(lay, x, m);
    Vector twice = apply_mask(lay, once, m);
    CHECK((once.array() == twice.array()).all());
  }
}

Dataset one_channel_dataset(const std::vector<double>& values) {
  Dataset d;
  Episode e{"s", {}};
  for (double v : values) {
    Sample s;
    s.state_id = "s";
    s.values = Vector::Constant(1, v);
    s.available = {1};
    e.samples.push_back(s);
  }
  d.episodes.push_back(e);
  return d;
}

TEST_CASE("normalizer: two-point dataset gives mean 1, std 1") {
  ModalityLayout lay({{"c", 1}});
  Normalizer n = fit_normalizer(one_channel_dataset({0.0, 2.0}), lay);
  CHECK(n.mean()[0] == doctest::Approx(1.0));
  CHECK(n.stddev()[0] == doctest::Approx(1.0));
  CHECK(n.normalize(Vector::Constant(1, 0.0))[0] == doctest::Approx(-1.0));
  CHECK(n.normalize(Vector::Constant(1, 2.0))[0] == doctest::Approx(1.0));
}

TEST_CASE("normalizer: constant channel is floored and maps to zero") {
  ModalityLayout lay({{"c", 1}});
  Normalizer n = fit_normalizer(one_channel_dataset({3.5, 3.5, 3.5}), lay);
  CHECK(n.stddev()[0] == doctest::Approx(Normalizer::kStdFloor));
  CHECK(n.normalize(Vector::Constant(1, 3.5))[0] == doctest::Approx(0.0));
}

TEST_CASE("normalizer: round trip within 1e-9") {
  ModalityLayout lay({{"u", 2}, {"v", 1}});
  Dataset d;
  Episode e{"s", {}};
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    Sample s;
    s.state_id = "s";
    s.values = Vector(3);
    for (int c = 0; c < 3; ++c) s.values[c] = rng.uniform(-100, 100);
    s.available = {1, 1};
    e.samples.push_back(s);
  }
  d.episodes.push_back(e);
  Normalizer n = fit_normalizer(d, lay);
  Vector x(3);
  x << 31.4, -2.7, 88.0;
  CHECK((n.denormalize(n.normalize(x)) - x).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("normalizer: statistics use available entries only") {
  ModalityLayout lay({{"a", 1}, {"b", 1}});
  Dataset d;
  Episode e{"s", {}};
  auto add = [&](double a, double b, std::uint8_t avail_b) {
    Sample s;
    s.state_id = "s";
    s.values = Vector(2);
    s.values << a, b;
    s.available = {1, avail_b};
    e.samples.push_back(s);
  };
  add(0.0, 1000.0, 0);  // the 1000 must not leak into b's statistics
  add(2.0, 0.0, 1);
  add(4.0, 2.0, 1);
  d.episodes.push_back(e);
  Normalizer n = fit_normalizer(d, lay);
  CHECK(n.mean()[0] == doctest::Approx(2.0));
  CHECK(n.mean()[1] == doctest::Approx(1.0));
  CHECK(n.stddev()[1] == doctest::Approx(1.0));
}

TEST_CASE("normalizer: a never-observed channel is a named error") {
  ModalityLayout lay({{"a", 1}, {"blind", 2}});
  Dataset d;
  Episode e{"s", {}};
  Sample s;
  s.state_id = "s";
  s.values = Vector::Zero(3);
  s.available = {1, 0};
  e.samples.push_back(s);
  d.episodes.push_back(e);
  try {
    fit_normalizer(d, lay);
    FAIL("expected an exception");
  } catch (const std::runtime_error& err) {
    CHECK(std::string(err.what()).find("blind") != std::string::npos);
  }
}

TEST_CASE("pipeline: masked groups are exactly zero after normalization") {
  // Masking is applied to the normalized vector, so a hidden group reads as
  // exactly zero no matter what raw values it held.
  ModalityLayout lay = two_group_layout();
  Rng rng(99);
  Dataset d;
  Episode e{"s", {}};
  for (int i = 0; i < 50; ++i) {
    Sample s;
    s.state_id = "s";
    s.values = Vector(3);
    for (int c = 0; c < 3; ++c) s.values[c] = rng.uniform(50, 60);
    s.available = {1, 1};
    e.samples.push_back(s);
  }
  d.episodes.push_back(e);
  Normalizer n = fit_normalizer(d, lay);
  for (int t = 0; t < 20; ++t) {
    Vector raw(3);
    for (int c = 0; c < 3; ++c) raw[c] = rng.uniform(-1000, 1000);
    Vector masked = apply_mask(lay, n.normalize(raw), Mask{0, 1});
    CHECK(masked[0] == 0.0);
    CHECK(masked[1] == 0.0);
  }
}

}  // namespace
}  // namespace gemuco
