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

#include "gemuco/worlds.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

#include "doctest.h"

namespace gemuco {
namespace {

constexpr double kPi = 3.14159265358979323846;

TEST_CASE("oracle_error: euclidean basics") {
  Vector a(2), b(2);
  a << 0, 3;
  b << 4, 0;
  CHECK(oracle_error(a, a) == doctest::Approx(0.0));
  CHECK(oracle_error(a, b) == doctest::Approx(5.0));
  CHECK_THROWS(oracle_error(a, Vector::Zero(3)));
}

TEST_CASE("world A: straight arm matches the hand-derived closed form") {
  ArmToolWorld::Params p;
  p.noise = false;
  ArmToolWorld world(p);
  const Vector theta = Vector::Zero(4);
  const Vector tip = world.tool_tip(theta);
  // Links sum to 900 mm along x; the stick adds l cos(phi), l sin(phi);
  // the sensed tip droops a fixed 100 mm.
  const double link_sum = 300 + 300 + 200 + 100;
  const double phi = 30.0 * kPi / 180.0;
  CHECK(std::abs(tip[0] - (link_sum + 500 * std::cos(phi))) < 1e-9);
  CHECK(std::abs(tip[1] - (500 * std::sin(phi) - 100)) < 1e-9);
}

TEST_CASE("world A: observation respects joint limits and availability") {
  ArmToolWorld::Params p;
  p.noise = false;
  ArmToolWorld world(p);
  Rng rng(1);
  Vector bad = Vector::Zero(4);
  bad[2] = 5.0;
  CHECK_THROWS(world.observe(bad, {1, 1}, rng));
  Sample s = world.observe(Vector::Zero(4), {1, 0}, rng);
  CHECK(s.available[1] == 0);
  CHECK(s.values[4] == 0.0);
  CHECK(s.values[5] == 0.0);
}

TEST_CASE("world B: zero tension reduces lengths to the rigid law") {
  TendonArmWorld world(TendonArmWorld::Params::defaults());
  Rng rng(2);
  Vector theta(2);
  theta << 0.4, -0.7;
  const Vector l = world.muscle_length(theta, Vector::Zero(4));
  const Vector expect = world.params().rest_length_mm -
                        world.params().moment_arm_mm * theta;
  CHECK((l - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("world B: closure, any two of (theta, f, l) give the third") {
  TendonArmWorld world(TendonArmWorld::Params::defaults());
  const Matrix& r = world.params().moment_arm_mm;
  const Vector& l0 = world.params().rest_length_mm;
  const double c = world.params().compliance_mm_per_n;
  const Matrix pinv = (r.transpose() * r).inverse() * r.transpose();
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    Vector theta(2);
    theta << rng.uniform(-1, 1), rng.uniform(-1, 1);
    const Vector f = world.sample_tension(theta, rng);
    const Vector l = world.muscle_length(theta, f);
    // f from (theta, l)
    const Vector f_rec = (l - l0 + r * theta) / c;
    CHECK((f_rec - f).cwiseAbs().maxCoeff() < 1e-9);
    // theta from (f, l)
    const Vector theta_rec = pinv * (l0 + c * f - l);
    CHECK((theta_rec - theta).cwiseAbs().maxCoeff() < 1e-9);
    // l from (theta, f) is the defining law itself
    CHECK((world.muscle_length(theta, f) - l).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("world B: sampled tensions balance the gravity torque") {
  TendonArmWorld world(TendonArmWorld::Params::defaults());
  Rng rng(4);
  int checked = 0;
  for (int t = 0; t < 30; ++t) {
    Vector theta(2);
    theta << rng.uniform(-1, 1), rng.uniform(-1, 1);
    const Vector f = world.sample_tension(theta, rng);
    // Skip the rare clamped draws.
    bool clamped = false;
    for (int i = 0; i < 4; ++i) {
      if (f[i] <= 0.5 + 1e-12 || f[i] >= 80.0 - 1e-12) clamped = true;
    }
    if (clamped) continue;
    const Vector tau = world.params().moment_arm_mm.transpose() * f;
    CHECK((tau - world.gravity_torque(theta)).cwiseAbs().maxCoeff() < 1e-9);
    ++checked;
  }
  CHECK(checked > 10);
}

TEST_CASE("world B: frozen muscle zeroes its tension reading only") {
  TendonArmWorld::Params p = TendonArmWorld::Params::defaults();
  p.noise = false;
  p.frozen_muscle = 2;
  TendonArmWorld world(p);
  Rng rng(5);
  Vector cmd(6);
  cmd << 0.1, -0.2, 10, 20, 30, 40;
  Sample s = world.observe(cmd, {1, 1, 1}, rng);
  CHECK(s.values[2 + 2] == 0.0);
  CHECK(s.values[2 + 0] == 10.0);
  // Lengths still reflect the true tension of the frozen muscle.
  TendonArmWorld::Params clean = TendonArmWorld::Params::defaults();
  clean.noise = false;
  TendonArmWorld healthy(clean);
  Sample h = healthy.observe(cmd, {1, 1, 1}, rng);
  CHECK((s.values.tail(4) - h.values.tail(4)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("world C: disabling deflection recovers rigid kinematics") {
  DeflectingBipedWorld::Params p;
  p.noise = false;
  p.deflection_rad_per_nm = 0.0;
  DeflectingBipedWorld rigid(p);
  DeflectingBipedWorld::Params q = p;
  q.deflection_rad_per_nm = 0.5236;
  DeflectingBipedWorld soft(q);
  Vector cmd(4);
  cmd << 0.2, 0.1, 0.3, 0.05;
  CHECK((rigid.tool_tip(cmd) - rigid.rigid_tool_tip(cmd)).cwiseAbs().maxCoeff() <
        1e-12);
  CHECK((soft.tool_tip(cmd) - soft.rigid_tool_tip(cmd)).norm() > 0.5);
}

TEST_CASE("world C: deflection fixed point is consistent") {
  DeflectingBipedWorld::Params p;
  p.noise = false;
  DeflectingBipedWorld world(p);
  Vector cmd(4);
  cmd << 0.3, -0.1, 0.2, 0.1;
  const Vector realized = world.realized_angles(cmd);
  // Deflection moves the joints and is a pure sag (pitch joints deflect in
  // the gravity direction).
  CHECK((realized - cmd).cwiseAbs().maxCoeff() > 1e-4);
  CHECK(realized.allFinite());
}

TEST_CASE("world C: heavier tools sag lower and drag the CoG toward the tool") {
  Rng rng(6);
  for (int t = 0; t < 15; ++t) {
    Vector cmd(4);
    cmd << rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4),
        rng.uniform(0.15, 0.85), rng.uniform(-0.15, 0.15);
    double prev_z = std::numeric_limits<double>::infinity();
    double prev_cog_x = -std::numeric_limits<double>::infinity();
    for (double mass : {40.0, 80.0, 120.0}) {
      DeflectingBipedWorld::Params p;
      p.noise = false;
      p.tool_mass_g = mass;
      DeflectingBipedWorld world(p);
      const Vector tip = world.tool_tip(cmd);
      const Vector cog = world.cog(cmd);
      CHECK(tip[1] < prev_z);       // strictly lower tip
      CHECK(cog[0] > prev_cog_x);   // CoG strictly toward the tool (forward x)
      prev_z = tip[1];
      prev_cog_x = cog[0];
    }
  }
}

TEST_CASE("rollouts: identical seeds are byte-identical, sizes match") {
  ArmToolWorld world(ArmToolWorld::Params{});
  Episode a = world.random_rollout(64, 99);
  Episode b = world.random_rollout(64, 99);
  REQUIRE(a.samples.size() == 64);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK((a.samples[i].values.array() == b.samples[i].values.array()).all());
  }
  Episode c = world.random_rollout(64, 100);
  bool any_diff = false;
  for (std::size_t i = 0; i < c.samples.size(); ++i) {
    if ((c.samples[i].values - a.samples[i].values).norm() > 0) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("world B: perturbed twin differs but keeps shapes") {
  const auto base = TendonArmWorld::Params::defaults();
  const auto twin = base.perturbed(0.3, 42);
  CHECK((twin.moment_arm_mm - base.moment_arm_mm).cwiseAbs().maxCoeff() > 0.1);
  TendonArmWorld w(twin);  // construction validates rank
  CHECK(w.params().rest_length_mm.size() == 4);
}

}  // namespace
}  // namespace gemuco
