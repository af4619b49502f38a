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
#include <stdexcept>

#include "gemuco/rng.hpp"

namespace gemuco {

void NetSpec::validate() const {
  if (layer_widths.size() < 2) {
    throw std::invalid_argument("NetSpec: at least 2 layers required");
  }
  for (int wdt : layer_widths) {
    if (wdt < 1) throw std::invalid_argument("NetSpec: widths must be >= 1");
  }
}

void Weights::add_scaled(const Weights& other, double s) {
  for (std::size_t l = 0; l < w.size(); ++l) {
    w[l] += s * other.w[l];
    b[l] += s * other.b[l];
  }
}

void Weights::setZero() {
  for (auto& m : w) m.setZero();
  for (auto& v : b) v.setZero();
}

bool Weights::all_finite() const {
  for (const auto& m : w) {
    if (!m.allFinite()) return false;
  }
  for (const auto& v : b) {
    if (!v.allFinite()) return false;
  }
  return true;
}

std::vector<double> Weights::flatten() const {
  std::vector<double> flat;
  for (std::size_t l = 0; l < w.size(); ++l) {
    flat.insert(flat.end(), w[l].data(), w[l].data() + w[l].size());
    flat.insert(flat.end(), b[l].data(), b[l].data() + b[l].size());
  }
  return flat;
}

Weights Weights::unflatten(const NetSpec& spec, const std::vector<double>& flat) {
  Weights out = zeros_like(spec);
  std::size_t pos = 0;
  for (int l = 0; l < spec.depth(); ++l) {
    const std::size_t nw = static_cast<std::size_t>(out.w[l].size());
    const std::size_t nb = static_cast<std::size_t>(out.b[l].size());
    if (pos + nw + nb > flat.size()) {
      throw std::invalid_argument("Weights::unflatten: flat array too short");
    }
    std::copy(flat.begin() + pos, flat.begin() + pos + nw, out.w[l].data());
    pos += nw;
    std::copy(flat.begin() + pos, flat.begin() + pos + nb, out.b[l].data());
    pos += nb;
  }
  if (pos != flat.size()) {
    throw std::invalid_argument("Weights::unflatten: flat array too long");
  }
  return out;
}

Weights init_weights(const NetSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  Weights out;
  out.w.reserve(spec.depth());
  out.b.reserve(spec.depth());
  for (int l = 0; l < spec.depth(); ++l) {
    const int in = spec.layer_widths[l];
    const int outw = spec.layer_widths[l + 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    Matrix m(outw, in);
    for (int r = 0; r < outw; ++r) {
      for (int c = 0; c < in; ++c) m(r, c) = rng.uniform(-scale, scale);
    }
    out.w.push_back(std::move(m));
    out.b.push_back(Vector::Zero(outw));
  }
  return out;
}

Weights zeros_like(const NetSpec& spec) {
  Weights out;
  for (int l = 0; l < spec.depth(); ++l) {
    out.w.push_back(Matrix::Zero(spec.layer_widths[l + 1], spec.layer_widths[l]));
    out.b.push_back(Vector::Zero(spec.layer_widths[l + 1]));
  }
  return out;
}

Vector forward(const NetSpec& spec, const Weights& w, const Vector& input,
               ForwardTrace* trace) {
  if (input.size() != spec.input_width()) {
    throw std::invalid_argument("forward: input width mismatch");
  }
  if (static_cast<int>(w.w.size()) != spec.depth()) {
    throw std::invalid_argument("forward: weights do not match spec");
  }
  if (trace) {
    trace->input = input;
    trace->pre.clear();
    trace->act.clear();
  }
  Vector a = input;
  for (int l = 0; l < spec.depth(); ++l) {
    Vector pre = w.w[l] * a + w.b[l];
    const bool last = (l == spec.depth() - 1);
    if (!last && spec.hidden_activation == Activation::kTanh) {
      a = pre.array().tanh().matrix();
    } else {
      a = pre;
    }
    if (trace) {
      trace->pre.push_back(std::move(pre));
      trace->act.push_back(a);
    }
  }
  return a;
}

Vector backward_accumulate(const NetSpec& spec, const Weights& w,
                           const ForwardTrace& trace,
                           const Vector& dloss_doutput, Weights& grad_acc) {
  const int depth = spec.depth();
  if (static_cast<int>(trace.pre.size()) != depth ||
      trace.input.size() != spec.input_width() ||
      dloss_doutput.size() != spec.output_width()) {
    throw std::invalid_argument("backward: trace/spec shape mismatch");
  }
  Vector delta = dloss_doutput;  // gradient wrt current layer pre-activation
  for (int l = depth - 1; l >= 0; --l) {
    const bool last = (l == depth - 1);
    if (!last && spec.hidden_activation == Activation::kTanh) {
      // d tanh(p) = 1 - tanh(p)^2, with tanh(p) already in act.
      delta = delta.cwiseProduct(
          (1.0 - trace.act[l].array().square()).matrix());
    }
    const Vector& below = (l == 0) ? trace.input : trace.act[l - 1];
    grad_acc.w[l].noalias() += delta * below.transpose();
    grad_acc.b[l] += delta;
    delta = w.w[l].transpose() * delta;
  }
  return delta;
}

BackwardResult backward(const NetSpec& spec, const Weights& w,
                        const ForwardTrace& trace,
                        const Vector& dloss_doutput) {
  BackwardResult out;
  out.grad_w = zeros_like(spec);
  out.grad_input =
      backward_accumulate(spec, w, trace, dloss_doutput, out.grad_w);
  return out;
}

Matrix jacobian(const NetSpec& spec, const Weights& w, const Vector& input,
                const std::vector<int>& out_channels,
                const std::vector<int>& in_channels) {
  if (out_channels.empty() || in_channels.empty()) {
    throw std::invalid_argument("jacobian: index sets must be non-empty");
  }
  for (int i : out_channels) {
    if (i < 0 || i >= spec.output_width()) {
      throw std::out_of_range("jacobian: output channel out of bounds");
    }
  }
  for (int j : in_channels) {
    if (j < 0 || j >= spec.input_width()) {
      throw std::out_of_range("jacobian: input channel out of bounds");
    }
  }
  ForwardTrace trace;
  forward(spec, w, input, &trace);
  Weights scratch = zeros_like(spec);
  Matrix jac(out_channels.size(), in_channels.size());
  Vector unit = Vector::Zero(spec.output_width());
  for (std::size_t r = 0; r < out_channels.size(); ++r) {
    unit[out_channels[r]] = 1.0;
    scratch.setZero();
    Vector gin = backward_accumulate(spec, w, trace, unit, scratch);
    unit[out_channels[r]] = 0.0;
    for (std::size_t c = 0; c < in_channels.size(); ++c) {
      jac(r, c) = gin[in_channels[c]];
    }
  }
  return jac;
}

}  // namespace gemuco
