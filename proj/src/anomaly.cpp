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

#include "gemuco/anomaly.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>

namespace gemuco {

AnomalyModel calibrate(const std::vector<Vector>& residuals) {
  if (residuals.empty()) {
    throw std::invalid_argument("calibrate: no residuals");
  }
  const Eigen::Index dim = residuals.front().size();
  if (static_cast<Eigen::Index>(residuals.size()) < dim + 2) {
    throw std::invalid_argument("calibrate: need at least dim + 2 residuals");
  }
  AnomalyModel a;
  a.mu = Vector::Zero(dim);
  for (const Vector& e : residuals) {
    if (e.size() != dim) throw std::invalid_argument("calibrate: dim mismatch");
    a.mu += e;
  }
  a.mu /= static_cast<double>(residuals.size());

  a.sigma = Matrix::Zero(dim, dim);
  for (const Vector& e : residuals) {
    const Vector d = e - a.mu;
    a.sigma.noalias() += d * d.transpose();
  }
  a.sigma /= static_cast<double>(residuals.size());
  a.sigma += AnomalyModel::kRegularization * Matrix::Identity(dim, dim);

  double sum = 0.0, sumsq = 0.0;
  for (const Vector& e : residuals) {
    const double d = score(a, e);
    sum += d;
    sumsq += d * d;
  }
  const double n = static_cast<double>(residuals.size());
  const double mean = sum / n;
  const double var = std::max(0.0, sumsq / n - mean * mean);
  a.threshold = mean + 3.0 * std::sqrt(var);
  return a;
}

double score(const AnomalyModel& amodel, const Vector& e) {
  if (e.size() != amodel.mu.size()) {
    throw std::invalid_argument("score: dim mismatch");
  }
  const Vector d = e - amodel.mu;
  const Vector x = amodel.sigma.ldlt().solve(d);
  return std::sqrt(std::max(0.0, d.dot(x)));
}

bool is_anomalous(const AnomalyModel& amodel, double d) {
  return d > amodel.threshold;
}

}  // namespace gemuco
