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

#include <cmath>

#include "doctest.h"
#include "gemuco/rng.hpp"

namespace gemuco {
namespace {

TEST_CASE("calibrate: identical residuals give a degenerate zero detector") {
  std::vector<Vector> residuals(10, (Vector(2) << 0.5, -0.5).finished());
  AnomalyModel a = calibrate(residuals);
  CHECK((a.sigma - AnomalyModel::kRegularization * Matrix::Identity(2, 2))
            .cwiseAbs()
            .maxCoeff() < 1e-15);
  CHECK(score(a, residuals[0]) == doctest::Approx(0.0));
  CHECK(a.threshold == doctest::Approx(0.0));
}

TEST_CASE("calibrate: needs at least dim + 2 samples") {
  std::vector<Vector> too_few(4, Vector::Zero(3));
  CHECK_THROWS(calibrate(too_few));
}

TEST_CASE("score: analytic cases") {
  AnomalyModel a;
  a.mu = Vector::Zero(2);
  a.sigma = Matrix::Identity(2, 2);
  a.threshold = 1.0;
  Vector e(2);
  e << 3.0, 4.0;
  CHECK(score(a, e) == doctest::Approx(5.0));  // identity sigma: plain norm
  CHECK(score(a, a.mu) == doctest::Approx(0.0));

  a.sigma = Matrix::Zero(2, 2);
  a.sigma(0, 0) = 4.0;
  a.sigma(1, 1) = 1.0;
  e << 2.0, 1.0;
  CHECK(score(a, e) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("score: covariance scaling equalizes directions") {
  // diag(1, 100): a 10-sigma step along the wide axis scores like a 1-sigma
  // step along the narrow one.
  AnomalyModel a;
  a.mu = Vector::Zero(2);
  a.sigma = Matrix::Zero(2, 2);
  a.sigma(0, 0) = 1.0;
  a.sigma(1, 1) = 100.0;
  Vector e1(2), e2(2);
  e1 << 0.0, 10.0;
  e2 << 1.0, 0.0;
  CHECK(score(a, e1) == doctest::Approx(score(a, e2)).epsilon(1e-9));
}

TEST_CASE("is_anomalous: strictly above the threshold") {
  AnomalyModel a;
  a.mu = Vector::Zero(1);
  a.sigma = Matrix::Identity(1, 1);
  a.threshold = 2.0;
  CHECK_FALSE(is_anomalous(a, 2.0));
  CHECK(is_anomalous(a, 2.0 + 1e-12));
}

TEST_CASE("calibrate: distances follow the chi distribution on gaussian data") {
  const int dim = 3;
  const int n = 10000;
  Rng rng(2718);
  std::vector<Vector> residuals;
  residuals.reserve(n);
  for (int i = 0; i < n; ++i) {
    Vector e(dim);
    for (int c = 0; c < dim; ++c) e[c] = rng.gaussian();
    residuals.push_back(e);
  }
  AnomalyModel a = calibrate(residuals);
  double mean_d = 0.0;
  std::vector<double> ds;
  ds.reserve(n);
  for (const Vector& e : residuals) {
    const double d = score(a, e);
    mean_d += d;
    ds.push_back(d);
  }
  mean_d /= n;
  // chi(3) mean = sqrt(2) Gamma(2) / Gamma(1.5) = 2 sqrt(2/pi).
  const double expected = 2.0 * std::sqrt(2.0 / 3.14159265358979323846);
  CHECK(std::abs(mean_d - expected) / expected < 0.1);

  // Brute-force quantile check: the median of chi(3) is about 1.538.
  std::sort(ds.begin(), ds.end());
  CHECK(std::abs(ds[n / 2] - 1.538) < 0.08);
}

TEST_CASE("affine invariance: distances survive any invertible linear map") {
  const int dim = 3;
  Rng rng(31415);
  std::vector<Vector> residuals;
  for (int i = 0; i < 200; ++i) {
    Vector e(dim);
    for (int c = 0; c < dim; ++c) e[c] = rng.gaussian(0.2 * c, 1.0 + c);
    residuals.push_back(e);
  }
  Matrix map(dim, dim);
  map << 2.0, 0.3, -0.5,
         0.0, 1.5, 0.7,
         0.4, -0.2, 0.9;
  std::vector<Vector> mapped;
  for (const Vector& e : residuals) mapped.push_back(map * e);

  AnomalyModel a = calibrate(residuals);
  AnomalyModel b = calibrate(mapped);
  for (int i = 0; i < 50; ++i) {
    const double da = score(a, residuals[i]);
    const double db = score(b, mapped[i]);
    CHECK(std::abs(da - db) < 1e-6 * std::max(1.0, da));
  }
}

}  // namespace
}  // namespace gemuco
