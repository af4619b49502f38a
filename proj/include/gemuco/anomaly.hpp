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

#ifndef GEMUCO_ANOMALY_HPP_
#define GEMUCO_ANOMALY_HPP_

#include <vector>

#include "gemuco/modality.hpp"

namespace gemuco {

// Mahalanobis-distance detector over estimation residuals.
struct AnomalyModel {
  Vector mu;
  Matrix sigma;      // regularized covariance, symmetric positive definite
  double threshold = 0.0;

  static constexpr double kRegularization = 1e-6;
};

// Fits mu/sigma on residuals from the normal state and sets the threshold to
// mean + 3 std of the calibration distances. Needs at least dim + 2 samples.
AnomalyModel calibrate(const std::vector<Vector>& residuals);

// d = sqrt((e - mu)^T sigma^-1 (e - mu)).
double score(const AnomalyModel& amodel, const Vector& e);

// Strictly above threshold.
bool is_anomalous(const AnomalyModel& amodel, double d);

}  // namespace gemuco

#endif  // GEMUCO_ANOMALY_HPP_
