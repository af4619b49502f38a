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

#ifndef GEMUCO_NET_HPP_
#define GEMUCO_NET_HPP_

#include <cstdint>
#include <vector>

#include "gemuco/modality.hpp"

namespace gemuco {

// Hidden-layer nonlinearity. The last layer is always linear.
enum class Activation { kTanh, kIdentity };

struct NetSpec {
  std::vector<int> layer_widths;  // input width first, output width last
  Activation hidden_activation = Activation::kTanh;

  int input_width() const { return layer_widths.front(); }
  int output_width() const { return layer_widths.back(); }
  // Number of weight layers.
  int depth() const { return static_cast<int>(layer_widths.size()) - 1; }

  void validate() const;  // throws std::invalid_argument on bad shape
  bool operator==(const NetSpec&) const = default;
};

// Per-layer dense weights, out x in, plus bias.
struct Weights {
  std::vector<Matrix> w;
  std::vector<Vector> b;

  void add_scaled(const Weights& other, double s);  // *this += s * other
  void setZero();
  bool all_finite() const;
  std::vector<double> flatten() const;
  static Weights unflatten(const NetSpec& spec, const std::vector<double>& flat);
};

// Uniform init scaled by 1/sqrt(fan_in), seeded.
Weights init_weights(const NetSpec& spec, std::uint64_t seed);
Weights zeros_like(const NetSpec& spec);

// Per-layer pre-activations and activations retained for backprop.
struct ForwardTrace {
  Vector input;
  std::vector<Vector> pre;  // one per weight layer
  std::vector<Vector> act;  // post-activation; act.back() is the output
};

// Runs the net. If trace is non-null it is filled for a later backward pass.
Vector forward(const NetSpec& spec, const Weights& w, const Vector& input,
               ForwardTrace* trace = nullptr);

struct BackwardResult {
  Weights grad_w;
  Vector grad_input;
};

// Exact gradients of the scalar loss whose output-gradient is supplied.
BackwardResult backward(const NetSpec& spec, const Weights& w,
                        const ForwardTrace& trace, const Vector& dloss_doutput);

// As backward, but accumulates the weight gradient into grad_acc (which must
// be spec-shaped) and returns only the input gradient. Used by batch kernels.
Vector backward_accumulate(const NetSpec& spec, const Weights& w,
                           const ForwardTrace& trace,
                           const Vector& dloss_doutput, Weights& grad_acc);

// Matrix of partial derivatives d out_i / d in_j at the given input, for the
// selected channel index sets. Index sets must be non-empty and in bounds.
Matrix jacobian(const NetSpec& spec, const Weights& w, const Vector& input,
                const std::vector<int>& out_channels,
                const std::vector<int>& in_channels);

}  // namespace gemuco

#endif  // GEMUCO_NET_HPP_
