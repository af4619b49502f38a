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

#include "gemuco/iteropt.hpp"

#include <cmath>
#include <limits>

#include "doctest.h"
#include "gemuco/rng.hpp"

namespace gemuco {
namespace {

// Identity pipeline over one group: encoder copies the masked input into
// the latent, decoder copies the latent to the output.
GeMuCoModel identity_model(int dim) {
  ModalityLayout lay({{"a", dim}});
  GeMuCoModel m;
  m.union_layout = lay;
  m.in_groups = {0};
  m.out_groups = {0};
  m.in_layout = lay;
  m.out_layout = lay;
  m.finalize_channel_maps();
  m.pb_dim = 0;
  m.latent_dim = dim;
  m.enc_spec = NetSpec{{dim + 1, dim}, Activation::kIdentity};
  m.dec_spec = NetSpec{{dim, dim}, Activation::kIdentity};
  m.enc_w = zeros_like(m.enc_spec);
  m.enc_w.w[0].leftCols(dim) = Matrix::Identity(dim, dim);
  m.dec_w = zeros_like(m.dec_spec);
  m.dec_w.w[0] = Matrix::Identity(dim, dim);
  m.normalizer = Normalizer(Vector::Zero(dim), Vector::Ones(dim));
  MaskSet ms(1);
  ms.insert(Mask{1});
  m.feasible_masks = ms;
  m.validate();
  return m;
}

// theta/f/l pipeline where f passes through and l reproduces theta, so the
// network jacobian of l wrt theta is the identity.
GeMuCoModel torque_toy() {
  ModalityLayout lay({{"theta", 2}, {"f", 2}, {"l", 2}});
  GeMuCoModel m;
  m.union_layout = lay;
  m.in_groups = {0, 1, 2};
  m.out_groups = {0, 1, 2};
  m.in_layout = lay;
  m.out_layout = lay;
  m.finalize_channel_maps();
  m.pb_dim = 0;
  m.latent_dim = 4;
  m.enc_spec = NetSpec{{6 + 3, 4}, Activation::kIdentity};
  m.dec_spec = NetSpec{{4, 6}, Activation::kIdentity};
  m.enc_w = zeros_like(m.enc_spec);
  m.enc_w.w[0].block(0, 0, 2, 2) = Matrix::Identity(2, 2);  // z[0:2] = theta
  m.enc_w.w[0].block(2, 2, 2, 2) = Matrix::Identity(2, 2);  // z[2:4] = f
  m.dec_w = zeros_like(m.dec_spec);
  m.dec_w.w[0].block(0, 0, 2, 2) = Matrix::Identity(2, 2);  // theta_pred
  m.dec_w.w[0].block(2, 2, 2, 2) = Matrix::Identity(2, 2);  // f_pred
  m.dec_w.w[0].block(4, 0, 2, 2) = Matrix::Identity(2, 2);  // l_pred = theta
  m.normalizer = Normalizer(Vector::Zero(6), Vector::Ones(6));
  m.feasible_masks = enumerate_all_masks(3);
  m.validate();
  return m;
}

OptContext full_ctx(const GeMuCoModel& m, const Vector& x_in) {
  OptContext ctx;
  ctx.x_in_norm = x_in;
  ctx.mask = Mask(m.n_sensor_in(), 1);
  ctx.pb = Vector::Zero(m.pb_dim);
  return ctx;
}

TEST_CASE("eval_loss: zero-weight terms and satisfied targets give zero") {
  GeMuCoModel m = identity_model(2);
  Vector x(2);
  x << 0.4, -0.9;
  OptContext ctx = full_ctx(m, x);
  IterConfig cfg;

  LossSpec zero_weight;
  MagnitudeTerm mag;
  mag.out_group = 0;
  mag.weight = 0.0;
  zero_weight.terms.push_back(mag);
  CHECK(eval_loss(m, encode(m, x, Mask{1}, Vector()), zero_weight, cfg, ctx) ==
        doctest::Approx(0.0));

  LossSpec match;
  TargetMatchTerm t;
  t.out_group = 0;
  t.target = x;
  t.map = Matrix::Identity(2, 2);
  match.terms.push_back(t);
  CHECK(eval_loss(m, encode(m, x, Mask{1}, Vector()), match, cfg, ctx) ==
        doctest::Approx(0.0));
}

TEST_CASE("eval_loss: torque balance cancels on the identity-jacobian toy") {
  GeMuCoModel m = torque_toy();
  Rng rng(10);
  Vector x(6);
  for (int i = 0; i < 6; ++i) x[i] = rng.uniform(-1, 1);
  // l entries mirror theta in this toy; keep consistent.
  x[4] = x[0];
  x[5] = x[1];
  LossSpec loss;
  TorqueBalanceTerm tb;
  tb.angle_in_group = 0;
  tb.tension_out_group = 1;
  tb.length_out_group = 2;
  tb.tau_ext = -x.segment(2, 2);  // minus the pass-through tension
  tb.weight = 1.0;
  loss.terms.push_back(tb);
  OptContext ctx = full_ctx(m, x);
  IterConfig cfg;
  const Vector z = encode(m, x, Mask{1, 1, 1}, Vector());
  CHECK(eval_loss(m, z, loss, cfg, ctx) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("optimize: loss already zero keeps the variable unchanged") {
  GeMuCoModel m = identity_model(3);
  Vector x(3);
  x << 0.3, 0.2, -0.5;
  LossSpec loss;
  TargetMatchTerm t;
  t.out_group = 0;
  t.target = x;
  loss.terms.push_back(t);
  OptContext ctx = full_ctx(m, x);
  IterConfig cfg;
  cfg.iterations = 10;
  const Vector z0 = x;  // identity decoder: pred == z
  OptResult r = optimize(m, z0, loss, cfg, ctx);
  CHECK((r.value.array() == z0.array()).all());
  for (double l : r.loss_trajectory) CHECK(l == doctest::Approx(0.0));
  CHECK(r.loss_trajectory.size() == 11);
}

TEST_CASE("optimize: quadratic surrogate converges to the target") {
  GeMuCoModel m = identity_model(1);
  Vector target(1);
  target << 0.62;
  LossSpec loss;
  TargetMatchTerm t;
  t.out_group = 0;
  t.target = target;
  loss.terms.push_back(t);
  OptContext ctx = full_ctx(m, Vector::Zero(1));
  IterConfig cfg;
  cfg.gamma_max = 1.0;
  cfg.n_batch = 16;
  cfg.iterations = 50;
  OptResult r = optimize(m, Vector::Zero(1), loss, cfg, ctx);
  CHECK(std::abs(r.value[0] - target[0]) < 1e-3);
}

TEST_CASE("optimize: trajectories are non-increasing on random problems") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    ModalityLayout lay({{"u", 2}, {"v", 2}});
    ModelConfig mc;
    mc.seed = Rng::mix(500, trial);
    GeMuCoModel m = make_model(lay, {0, 1}, {0, 1}, mc);
    LossSpec loss;
    TargetMatchTerm t;
    t.out_group = static_cast<int>(rng.index(2));
    Vector tv(2);
    tv << rng.uniform(-1, 1), rng.uniform(-1, 1);
    t.target = tv;
    loss.terms.push_back(t);
    MagnitudeTerm mag;
    mag.out_group = 1 - t.out_group;
    mag.weight = 0.1;
    loss.terms.push_back(mag);

    Vector x(4);
    for (int i = 0; i < 4; ++i) x[i] = rng.uniform(-1, 1);
    OptContext ctx = full_ctx(m, x);
    IterConfig cfg;
    cfg.iterations = 15;
    cfg.variable = trial % 2 == 0 ? OptVariable::kLatent : OptVariable::kInput;
    const Vector init = cfg.variable == OptVariable::kLatent
                            ? Vector(Vector::Zero(m.latent_dim))
                            : x;
    OptResult r = optimize(m, init, loss, cfg, ctx);
    for (std::size_t i = 1; i < r.loss_trajectory.size(); ++i) {
      CHECK(r.loss_trajectory[i] <= r.loss_trajectory[i - 1]);
    }
  }
}

TEST_CASE("optimize: frozen input channels stay bit-identical") {
  ModalityLayout lay({{"u", 2}, {"v", 2}});
  ModelConfig mc;
  mc.seed = 61;
  GeMuCoModel m = make_model(lay, {0, 1}, {0, 1}, mc);
  LossSpec loss;
  TargetMatchTerm t;
  t.out_group = 1;
  Vector tv(2);
  tv << 0.8, -0.2;
  t.target = tv;
  loss.terms.push_back(t);
  Vector x(4);
  x << 0.11, -0.22, 0.33, -0.44;
  OptContext ctx = full_ctx(m, x);
  IterConfig cfg;
  cfg.variable = OptVariable::kInput;
  cfg.iterations = 12;
  cfg.frozen_input_channels = {0, 1};  // group u stays put
  OptResult r = optimize(m, x, loss, cfg, ctx);
  CHECK(r.value[0] == x[0]);
  CHECK(r.value[1] == x[1]);
  CHECK((r.value.tail(2) - x.tail(2)).norm() > 0.0);
}

TEST_CASE("optimize: pb mode with pb_dim = 0 is a no-op") {
  GeMuCoModel m = identity_model(2);
  LossSpec loss;
  MagnitudeTerm mag;
  mag.out_group = 0;
  loss.terms.push_back(mag);
  OptContext ctx = full_ctx(m, Vector::Zero(2));
  IterConfig cfg;
  cfg.variable = OptVariable::kPb;
  cfg.iterations = 5;
  OptResult r = optimize(m, Vector::Zero(0), loss, cfg, ctx);
  CHECK(r.value.size() == 0);
  CHECK(r.loss_trajectory.size() == 1);
}

TEST_CASE("opt_gradient: matches finite differences of eval_loss") {
  // Random nonlinear model with a torque-balance term in the loss; the
  // torque term nests a jacobian, so the tolerance is the looser 1e-3.
  ModalityLayout lay({{"theta", 2}, {"f", 2}, {"l", 2}});
  ModelConfig mc;
  mc.seed = 303;
  GeMuCoModel m = make_model(lay, {0, 1, 2}, {0, 1, 2}, mc);
  Rng rng(304);
  Vector x(6);
  for (int i = 0; i < 6; ++i) x[i] = rng.uniform(-0.5, 0.5);
  LossSpec loss;
  {
    TargetMatchTerm t;
    t.out_group = 0;
    Vector tv(2);
    tv << 0.1, -0.3;
    t.target = tv;
    loss.terms.push_back(t);
    MagnitudeTerm mag;
    mag.out_group = 1;
    mag.weight = 0.5;
    loss.terms.push_back(mag);
    TorqueBalanceTerm tb;
    tb.angle_in_group = 0;
    tb.tension_out_group = 1;
    tb.length_out_group = 2;
    Vector tau(2);
    tau << 0.2, -0.1;
    tb.tau_ext = tau;
    tb.weight = 0.7;
    loss.terms.push_back(tb);
  }
  OptContext ctx = full_ctx(m, x);
  for (OptVariable var : {OptVariable::kLatent, OptVariable::kInput}) {
    IterConfig cfg;
    cfg.variable = var;
    const Vector v0 = var == OptVariable::kLatent
                          ? encode(m, x, ctx.mask, Vector())
                          : x;
    const Vector g = opt_gradient(m, v0, loss, cfg, ctx);
    const double h = 1e-5;
    for (int i = 0; i < v0.size(); ++i) {
      Vector vp = v0, vm = v0;
      vp[i] += h;
      vm[i] -= h;
      const double num =
          (eval_loss(m, vp, loss, cfg, ctx) - eval_loss(m, vm, loss, cfg, ctx)) /
          (2 * h);
      const double mag = std::max({std::abs(g[i]), std::abs(num), 1e-6});
      CHECK(std::abs(g[i] - num) / mag < 1e-3);
    }
  }
}

TEST_CASE("optimize: zero iterations returns the initial value") {
  GeMuCoModel m = identity_model(2);
  LossSpec loss;
  MagnitudeTerm mag;
  mag.out_group = 0;
  loss.terms.push_back(mag);
  OptContext ctx = full_ctx(m, Vector::Zero(2));
  IterConfig cfg;
  cfg.iterations = 0;
  Vector z0(2);
  z0 << 0.5, -0.5;
  OptResult r = optimize(m, z0, loss, cfg, ctx);
  CHECK((r.value.array() == z0.array()).all());
  CHECK(r.loss_trajectory.size() == 1);
}

TEST_CASE("optimize: non-finite init is rejected with the iteration index") {
  GeMuCoModel m = identity_model(2);
  LossSpec loss;
  MagnitudeTerm mag;
  mag.out_group = 0;
  loss.terms.push_back(mag);
  OptContext ctx = full_ctx(m, Vector::Zero(2));
  IterConfig cfg;
  Vector bad(2);
  bad << std::numeric_limits<double>::quiet_NaN(), 0.0;
  CHECK_THROWS(optimize(m, bad, loss, cfg, ctx));
}

}  // namespace
}  // namespace gemuco
