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

#ifndef GEMUCO_ITEROPT_HPP_
#define GEMUCO_ITEROPT_HPP_

#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "gemuco/model.hpp"
#include "gemuco/parallel.hpp"

namespace gemuco {

// Which quantity the iterative optimizer updates.
enum class OptVariable { kLatent, kInput, kPb, kWeights };

struct IterConfig {
  double gamma_max = 1.0;
  int n_batch = 16;    // step-size grid resolution, includes gamma = 0
  int iterations = 30;
  OptVariable variable = OptVariable::kLatent;
  std::vector<int> frozen_input_channels;  // input mode only
  Exec exec = Exec::kParallel;

  void validate() const;
};

// Loss terms compose by summation; every term is weight * squared L2.
// Values are in normalized model space.

struct TargetMatchTerm {
  int out_group = 0;
  Vector target;               // in the group's (possibly mapped) space
  double weight = 1.0;
  std::optional<Matrix> map;   // optional linear map applied to the prediction
};

struct MagnitudeTerm {
  int out_group = 0;
  double weight = 1.0;
};

// Penalizes movement of an input group away from a reference (input mode).
struct InputDeviationTerm {
  int in_group = 0;
  Vector reference;
  double weight = 1.0;
};

// weight * |tau_ext + G^T f_pred|^2, with G the network jacobian of the
// length group wrt the angle group, re-evaluated at the current point each
// iteration. Its gradient is taken by central finite differences of the
// composed expression.
struct TorqueBalanceTerm {
  int angle_in_group = 0;
  int tension_out_group = 0;
  int length_out_group = 0;
  Vector tau_ext;
  double weight = 1.0;
};

using LossTerm = std::variant<TargetMatchTerm, MagnitudeTerm,
                              InputDeviationTerm, TorqueBalanceTerm>;

struct LossSpec {
  std::vector<LossTerm> terms;
  void validate(const GeMuCoModel& m) const;
};

// Fixed quantities the optimizer needs around the chosen variable.
struct OptContext {
  Vector x_in_norm;  // normalized; used by input/pb/weights modes and TB
  Mask mask;         // over in groups
  Vector pb;
};

struct OptResult {
  Vector value;                        // final variable value
  std::vector<double> loss_trajectory; // iterations + 1 entries
  Vector x_out_norm;                   // prediction at the final value
};

struct OptError : std::runtime_error {
  int iteration;
  explicit OptError(const std::string& what, int it)
      : std::runtime_error(what), iteration(it) {}
};

// Pure loss evaluation; exactly the value the optimizer minimizes.
double eval_loss(const GeMuCoModel& m, const Vector& candidate,
                 const LossSpec& loss, const IterConfig& cfg,
                 const OptContext& ctx);

// Gradient of eval_loss wrt the variable, exactly as optimize() uses it to
// generate candidates.
Vector opt_gradient(const GeMuCoModel& m, const Vector& v, const LossSpec& loss,
                    const IterConfig& cfg, const OptContext& ctx);

// Iterative forward/backward optimization: per outer iteration one gradient
// is computed, candidates are generated for every step size in the uniform
// grid over [0, gamma_max] (gamma = 0 included), and the minimum-loss
// candidate is kept, so the recorded loss never increases.
OptResult optimize(const GeMuCoModel& m, const Vector& init,
                   const LossSpec& loss, const IterConfig& cfg,
                   const OptContext& ctx);

}  // namespace gemuco

#endif  // GEMUCO_ITEROPT_HPP_
