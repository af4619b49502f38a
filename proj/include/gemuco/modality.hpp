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

#ifndef GEMUCO_MODALITY_HPP_
#define GEMUCO_MODALITY_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace gemuco {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Group {
  std::string name;
  int dim = 0;
};

// Ordered list of named channel groups and their offsets within the
// flattened sensor/actuator vector.
class ModalityLayout {
 public:
  ModalityLayout() = default;
  explicit ModalityLayout(std::vector<Group> groups);

  int group_count() const { return static_cast<int>(groups_.size()); }
  int total_dim() const { return total_dim_; }
  int dim(int g) const { return groups_[g].dim; }
  int offset(int g) const { return offsets_[g]; }
  const std::string& name(int g) const { return groups_[g].name; }
  const std::vector<Group>& groups() const { return groups_; }

  // Index of a named group, -1 if absent.
  int index_of(const std::string& name) const;

  // Sub-layout containing the given groups, in the given order.
  ModalityLayout sublayout(const std::vector<int>& group_indices) const;

  Eigen::VectorBlock<const Vector> segment(const Vector& x, int g) const {
    return x.segment(offsets_[g], groups_[g].dim);
  }
  Eigen::VectorBlock<Vector> segment(Vector& x, int g) const {
    return x.segment(offsets_[g], groups_[g].dim);
  }

  bool operator==(const ModalityLayout& other) const;

 private:
  std::vector<Group> groups_;
  std::vector<int> offsets_;
  int total_dim_ = 0;
};

// One bit per group; 0 hides the group, 1 shows it.
using Mask = std::vector<std::uint8_t>;

bool is_zero_mask(const Mask& m);
std::string mask_to_string(const Mask& m);

// Set of distinct, non-zero masks of uniform length.
class MaskSet {
 public:
  MaskSet() = default;
  explicit MaskSet(int group_count) : group_count_(group_count) {}

  // Rejects duplicates and all-zero masks; returns true when inserted.
  bool insert(const Mask& m);
  bool contains(const Mask& m) const;

  int size() const { return static_cast<int>(masks_.size()); }
  bool empty() const { return masks_.empty(); }
  int group_count() const { return group_count_; }
  const std::vector<Mask>& masks() const { return masks_; }
  const Mask& at(int i) const { return masks_[i]; }

 private:
  int group_count_ = 0;
  std::vector<Mask> masks_;
};

// All 2^n - 1 non-zero masks over n groups. n must be in [1, 16].
MaskSet enumerate_all_masks(int n);

// Zeroes every scalar entry of the groups hidden by m. x must match the
// layout dimension; m must match the group count.
Vector apply_mask(const ModalityLayout& layout, const Vector& x, const Mask& m);

// Per-scalar-channel affine normalization. Statistics are fitted over
// available entries only; the standard deviation is floored.
class Normalizer {
 public:
  static constexpr double kStdFloor = 1e-8;

  Normalizer() = default;
  Normalizer(Vector mean, Vector stddev);

  int dim() const { return static_cast<int>(mean_.size()); }
  const Vector& mean() const { return mean_; }
  const Vector& stddev() const { return stddev_; }

  Vector normalize(const Vector& x) const;
  Vector denormalize(const Vector& xn) const;
  double normalize_at(int ch, double v) const { return (v - mean_[ch]) * inv_std_[ch]; }
  double denormalize_at(int ch, double vn) const { return vn * stddev_[ch] + mean_[ch]; }

 private:
  Vector mean_;
  Vector stddev_;
  Vector inv_std_;
};

}  // namespace gemuco

#endif  // GEMUCO_MODALITY_HPP_
