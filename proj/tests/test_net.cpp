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

#include "gemuco/net.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"
#include "gemuco/rng.hpp"

namespace gemuco {
namespace {

// Independent straight-line re-implementation of the dense chain, kept
// free of any shared code path with forward().
std::vector<double> reference_forward(const NetSpec& spec, const Weights& w,
                                      const std::vector<double>& input) {
  std::vector<double> a = input;
  for (int l = 0; l < spec.depth(); ++l) {
    const int rows = spec.layer_widths[l + 1];
    const int cols = spec.layer_widths[l];
    std::vector<double> next(rows, 0.0);
    for (int r = 0; r < rows; ++r) {
      double acc = w.b[l][r];
      for (int c = 0; c < cols; ++c) acc += w.w[l](r, c) * a[c];
      next[r] = acc;
    }
    if (l != spec.depth() - 1 && spec.hidden_activation == Activation::kTanh) {
      for (double& v : next) v = std::tanh(v);
    }
    a = next;
  }
  return a;
}

Weights identity_weights(int dim) {
  NetSpec spec{{dim, dim}, Activation::kIdentity};
  Weights w = zeros_like(spec);
  w.w[0] = Matrix::Identity(dim, dim);
  return w;
}

TEST_CASE("forward: identity-initialized single layer reproduces input") {
  NetSpec spec{{2, 2}, Activation::kIdentity};
  Weights w = identity_weights(2);
  Vector in(2);
  in << 0.3, -0.2;
  Vector out = forward(spec, w, in);
  CHECK(out[0] == doctest::Approx(0.3));
  CHECK(out[1] == doctest::Approx(-0.2));
}

TEST_CASE("forward: all-zero weights yield the bias vector") {
  NetSpec spec{{3, 2}, Activation::kTanh};
  Weights w = zeros_like(spec);
  w.b[0] << 0.7, -1.1;
  Vector in(3);
  in << 5.0, -2.0, 9.0;
  Vector out = forward(spec, w, in);
  CHECK(out[0] == doctest::Approx(0.7));
  CHECK(out[1] == doctest::Approx(-1.1));
}

TEST_CASE("forward: seeded 3-4-2 net matches the straight-line oracle") {
  NetSpec spec{{3, 4, 2}, Activation::kTanh};
  Weights w = init_weights(spec, 42);
  Vector in(3);
  in << 0.25, -0.8, 1.3;
  Vector out = forward(spec, w, in);
  auto ref = reference_forward(spec, w, {0.25, -0.8, 1.3});
  REQUIRE(out.size() == 2);
  for (int i = 0; i < 2; ++i) CHECK(out[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("forward: dimension mismatch throws") {
  NetSpec spec{{3, 2}, Activation::kTanh};
  Weights w = init_weights(spec, 1);
  CHECK_THROWS(forward(spec, w, Vector::Zero(4)));
}

TEST_CASE("backward: identity net at the squared-error minimum has zero grads") {
  const int dim = 3;
  NetSpec spec{{dim, dim}, Activation::kIdentity};
  Weights w = identity_weights(dim);
  Vector in(3);
  in << 0.4, -1.0, 2.0;
  ForwardTrace trace;
  Vector out = forward(spec, w, in, &trace);
  // Loss = |out - in|^2, gradient at out == target is zero.
  Vector dl = 2.0 * (out - in);
  auto grads = backward(spec, w, trace, dl);
  CHECK(grads.grad_input.norm() == doctest::Approx(0.0));
  for (const auto& gm : grads.grad_w.w) CHECK(gm.norm() == doctest::Approx(0.0));
}

TEST_CASE("backward: doubling the output gradient doubles every gradient") {
  NetSpec spec{{4, 6, 3}, Activation::kTanh};
  Weights w = init_weights(spec, 7);
  Rng rng(11);
  Vector in(4), dl(3);
  for (int i = 0; i < 4; ++i) in[i] = rng.uniform(-1, 1);
  for (int i = 0; i < 3; ++i) dl[i] = rng.uniform(-1, 1);
  ForwardTrace trace;
  forward(spec, w, in, &trace);
  auto g1 = backward(spec, w, trace, dl);
  auto g2 = backward(spec, w, trace, Vector(2.0 * dl));
  CHECK((g2.grad_input - 2.0 * g1.grad_input).norm() == doctest::Approx(0.0));
  for (std::size_t l = 0; l < g1.grad_w.w.size(); ++l) {
    CHECK((g2.grad_w.w[l] - 2.0 * g1.grad_w.w[l]).norm() == doctest::Approx(0.0));
    CHECK((g2.grad_w.b[l] - 2.0 * g1.grad_w.b[l]).norm() == doctest::Approx(0.0));
  }
}

// Central finite differences of the scalar loss 0.5|out - target|^2.
double loss_at(const NetSpec& spec, const Weights& w, const Vector& in,
               const Vector& target) {
  Vector out = forward(spec, w, in);
  return 0.5 * (out - target).squaredNorm();
}

TEST_CASE("backward/jacobian: gradients match central finite differences") {
  const double h = 1e-5;
  const double rel_tol = 1e-4;
  const double abs_floor = 1e-8;
  int worst_checked = 0;
  Rng seeds(2026);
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(Rng::mix(555, trial));
    const int in_w = 2 + static_cast<int>(rng.index(4));
    const int hid = 3 + static_cast<int>(rng.index(6));
    const int out_w = 1 + static_cast<int>(rng.index(4));
    NetSpec spec{{in_w, hid, out_w}, Activation::kTanh};
    Weights w = init_weights(spec, Rng::mix(99, trial));
    Vector in(in_w), target(out_w);
    for (int i = 0; i < in_w; ++i) in[i] = rng.uniform(-1.5, 1.5);
    for (int i = 0; i < out_w; ++i) target[i] = rng.uniform(-1.5, 1.5);

    ForwardTrace trace;
    Vector out = forward(spec, w, in, &trace);
    auto grads = backward(spec, w, trace, Vector(out - target));

    auto check = [&](double analytic, double numeric) {
      const double mag = std::max(std::abs(analytic), std::abs(numeric));
      if (mag < abs_floor) {
        CHECK(std::abs(analytic - numeric) < abs_floor);
      } else {
        CHECK(std::abs(analytic - numeric) / mag < rel_tol);
      }
      ++worst_checked;
    };

    // Input gradient.
    for (int i = 0; i < in_w; ++i) {
      Vector ip = in, im = in;
      ip[i] += h;
      im[i] -= h;
      const double num =
          (loss_at(spec, w, ip, target) - loss_at(spec, w, im, target)) / (2 * h);
      check(grads.grad_input[i], num);
    }
    // Weight gradient, spot-checked per layer.
    for (int l = 0; l < spec.depth(); ++l) {
      for (int k = 0; k < 3; ++k) {
        const int r = static_cast<int>(rng.index(w.w[l].rows()));
        const int c = static_cast<int>(rng.index(w.w[l].cols()));
        Weights wp = w, wm = w;
        wp.w[l](r, c) += h;
        wm.w[l](r, c) -= h;
        const double num =
            (loss_at(spec, wp, in, target) - loss_at(spec, wm, in, target)) /
            (2 * h);
        check(grads.grad_w.w[l](r, c), num);
      }
      const int r = static_cast<int>(rng.index(w.b[l].size()));
      Weights wp = w, wm = w;
      wp.b[l][r] += h;
      wm.b[l][r] -= h;
      const double num =
          (loss_at(spec, wp, in, target) - loss_at(spec, wm, in, target)) /
          (2 * h);
      check(grads.grad_w.b[l][r], num);
    }
    // Jacobian columns as directional derivatives.
    std::vector<int> all_out(out_w), all_in(in_w);
    for (int i = 0; i < out_w; ++i) all_out[i] = i;
    for (int i = 0; i < in_w; ++i) all_in[i] = i;
    Matrix jac = jacobian(spec, w, in, all_out, all_in);
    for (int j = 0; j < in_w; ++j) {
      Vector ip = in, im = in;
      ip[j] += h;
      im[j] -= h;
      Vector col = (forward(spec, w, ip) - forward(spec, w, im)) / (2 * h);
      for (int i = 0; i < out_w; ++i) check(jac(i, j), col[i]);
    }
  }
  CHECK(worst_checked > 0);
}

TEST_CASE("jacobian: identity net gives the identity submatrix") {
  Weights w = identity_weights(4);
  NetSpec spec{{4, 4}, Activation::kIdentity};
  Vector in = Vector::Constant(4, 0.3);
  Matrix jac = jacobian(spec, w, in, {1, 3}, {1, 3});
  CHECK(jac(0, 0) == doctest::Approx(1.0));
  CHECK(jac(1, 1) == doctest::Approx(1.0));
  CHECK(jac(0, 1) == doctest::Approx(0.0));
  CHECK(jac(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("jacobian: channel subsets are restrictions of the full jacobian") {
  NetSpec spec{{5, 8, 4}, Activation::kTanh};
  Weights w = init_weights(spec, 23);
  Rng rng(5);
  Vector in(5);
  for (int i = 0; i < 5; ++i) in[i] = rng.uniform(-1, 1);
  Matrix full = jacobian(spec, w, in, {0, 1, 2, 3}, {0, 1, 2, 3, 4});
  Matrix sub = jacobian(spec, w, in, {1, 2}, {0, 3});
  CHECK(sub(0, 0) == doctest::Approx(full(1, 0)));
  CHECK(sub(0, 1) == doctest::Approx(full(1, 3)));
  CHECK(sub(1, 0) == doctest::Approx(full(2, 0)));
  CHECK(sub(1, 1) == doctest::Approx(full(2, 3)));
}

TEST_CASE("jacobian: empty index sets throw") {
  NetSpec spec{{2, 2}, Activation::kTanh};
  Weights w = init_weights(spec, 3);
  CHECK_THROWS(jacobian(spec, w, Vector::Zero(2), {}, {0}));
  CHECK_THROWS(jacobian(spec, w, Vector::Zero(2), {0}, {}));
}

TEST_CASE("determinism: identical seeds give bit-identical weights and outputs") {
  NetSpec spec{{4, 10, 3}, Activation::kTanh};
  Weights w1 = init_weights(spec, 77);
  Weights w2 = init_weights(spec, 77);
  for (std::size_t l = 0; l < w1.w.size(); ++l) {
    CHECK((w1.w[l].array() == w2.w[l].array()).all());
    CHECK((w1.b[l].array() == w2.b[l].array()).all());
  }
  Vector in(4);
  in << 0.1, 0.2, 0.3, 0.4;
  Vector o1 = forward(spec, w1, in);
  Vector o2 = forward(spec, w2, in);
  CHECK((o1.array() == o2.array()).all());
}

TEST_CASE("trace replay: re-running forward on the stored input reproduces it") {
  NetSpec spec{{3, 5, 2}, Activation::kTanh};
  Weights w = init_weights(spec, 8);
  Vector in(3);
  in << -0.3, 0.9, 0.02;
  ForwardTrace t1;
  forward(spec, w, in, &t1);
  ForwardTrace t2;
  forward(spec, w, t1.input, &t2);
  REQUIRE(t1.pre.size() == t2.pre.size());
  for (std::size_t l = 0; l < t1.pre.size(); ++l) {
    CHECK((t1.pre[l].array() == t2.pre[l].array()).all());
    CHECK((t1.act[l].array() == t2.act[l].array()).all());
  }
}

TEST_CASE("weights: flatten/unflatten round-trips exactly") {
  NetSpec spec{{3, 4, 2}, Activation::kTanh};
  Weights w = init_weights(spec, 13);
  auto flat = w.flatten();
  Weights w2 = Weights::unflatten(spec, flat);
  for (std::size_t l = 0; l < w.w.size(); ++l) {
    CHECK((w.w[l].array() == w2.w[l].array()).all());
    CHECK((w.b[l].array() == w2.b[l].array()).all());
  }
  flat.push_back(0.0);
  CHECK_THROWS(Weights::unflatten(spec, flat));
}

}  // namespace
}  // namespace gemuco
