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

#include "gemuco/modality.hpp"

#include <set>
#include <stdexcept>

namespace gemuco {

ModalityLayout::ModalityLayout(std::vector<Group> groups)
    : groups_(std::move(groups)) {
  if (groups_.empty()) {
    throw std::invalid_argument("ModalityLayout: at least one group required");
  }
  std::set<std::string> names;
  offsets_.reserve(groups_.size());
  for (const Group& g : groups_) {
    if (g.dim < 1) {
      throw std::invalid_argument("ModalityLayout: group '" + g.name +
                                  "' has non-positive dim");
    }
    if (!names.insert(g.name).second) {
      throw std::invalid_argument("ModalityLayout: duplicate group name '" +
                                  g.name + "'");
    }
    offsets_.push_back(total_dim_);
    total_dim_ += g.dim;
  }
}

int ModalityLayout::index_of(const std::string& name) const {
  for (int i = 0; i < group_count(); ++i) {
    if (groups_[i].name == name) return i;
  }
  return -1;
}

ModalityLayout ModalityLayout::sublayout(
    const std::vector<int>& group_indices) const {
  std::vector<Group> sub;
  sub.reserve(group_indices.size());
  for (int g : group_indices) {
    if (g < 0 || g >= group_count()) {
      throw std::out_of_range("ModalityLayout::sublayout: bad group index");
    }
    sub.push_back(groups_[g]);
  }
  return ModalityLayout(std::move(sub));
}

bool ModalityLayout::operator==(const ModalityLayout& other) const {
  if (groups_.size() != other.groups_.size()) return false;
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    if (groups_[i].name != other.groups_[i].name ||
        groups_[i].dim != other.groups_[i].dim) {
      return false;
    }
  }
  return true;
}

bool is_zero_mask(const Mask& m) {
  for (auto b : m) {
    if (b) return false;
  }
  return true;
}

std::string mask_to_string(const Mask& m) {
  std::string s;
  s.reserve(m.size());
  for (auto b : m) s.push_back(b ? '1' : '0');
  return s;
}

bool MaskSet::insert(const Mask& m) {
  if (static_cast<int>(m.size()) != group_count_) {
    throw std::invalid_argument("MaskSet::insert: mask length mismatch");
  }
  if (is_zero_mask(m)) return false;
  if (contains(m)) return false;
  masks_.push_back(m);
  return true;
}

bool MaskSet::contains(const Mask& m) const {
  for (const Mask& x : masks_) {
    if (x == m) return true;
  }
  return false;
}

MaskSet enumerate_all_masks(int n) {
  if (n < 1 || n > 16) {
    throw std::invalid_argument("enumerate_all_masks: group count out of [1,16]");
  }
  MaskSet out(n);
  for (unsigned code = 1; code < (1u << n); ++code) {
    Mask m(n, 0);
    for (int i = 0; i < n; ++i) m[i] = (code >> i) & 1u;
    out.insert(m);
  }
  return out;
}

Vector apply_mask(const ModalityLayout& layout, const Vector& x, const Mask& m) {
  if (x.size() != layout.total_dim()) {
    throw std::invalid_argument("apply_mask: vector length mismatch");
  }
  if (static_cast<int>(m.size()) != layout.group_count()) {
    throw std::invalid_argument("apply_mask: mask length mismatch");
  }
  Vector out = x;
  for (int g = 0; g < layout.group_count(); ++g) {
    if (!m[g]) out.segment(layout.offset(g), layout.dim(g)).setZero();
  }
  return out;
}

Normalizer::Normalizer(Vector mean, Vector stddev)
    : mean_(std::move(mean)), stddev_(std::move(stddev)) {
  if (mean_.size() != stddev_.size()) {
    throw std::invalid_argument("Normalizer: mean/std dim mismatch");
  }
  inv_std_.resize(stddev_.size());
  for (Eigen::Index i = 0; i < stddev_.size(); ++i) {
    if (stddev_[i] < kStdFloor) stddev_[i] = kStdFloor;
    inv_std_[i] = 1.0 / stddev_[i];
  }
}

Vector Normalizer::normalize(const Vector& x) const {
  if (x.size() != mean_.size()) {
    throw std::invalid_argument("Normalizer::normalize: dim mismatch");
  }
  return (x - mean_).cwiseProduct(inv_std_);
}

Vector Normalizer::denormalize(const Vector& xn) const {
  if (xn.size() != mean_.size()) {
    throw std::invalid_argument("Normalizer::denormalize: dim mismatch");
  }
  return xn.cwiseProduct(stddev_) + mean_;
}

}  // namespace gemuco
