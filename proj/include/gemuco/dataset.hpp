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

#ifndef GEMUCO_DATASET_HPP_
#define GEMUCO_DATASET_HPP_

#include <string>
#include <vector>

#include "gemuco/modality.hpp"

namespace gemuco {

// One observation over the union layout. Missing modalities are flagged per
// group, not encoded as sentinel values.
struct Sample {
  Vector values;                        // union-layout dim
  std::vector<std::uint8_t> available;  // one flag per group
  std::string state_id;

  bool group_available(int g) const { return available[g] != 0; }
};

struct Episode {
  std::string state_id;
  std::vector<Sample> samples;
};

struct Dataset {
  std::vector<Episode> episodes;

  int state_count() const { return static_cast<int>(episodes.size()); }
  int sample_count() const;
  void validate(const ModalityLayout& layout) const;  // throws on bad shape
};

// Per-channel mean/std over available entries only. Throws (naming the
// channel) if a channel is never observed.
Normalizer fit_normalizer(const Dataset& data, const ModalityLayout& layout);

// CSV with header: state_id, avail_<group>..., <group>_<i>...
void write_dataset_csv(const Dataset& data, const ModalityLayout& layout,
                       const std::string& path);
Dataset read_dataset_csv(const std::string& path, const ModalityLayout& layout);

// Splits each episode into a leading train part and trailing eval part.
// eval_fraction in (0, 1); every episode keeps at least one train sample.
void split_dataset(const Dataset& data, double eval_fraction, Dataset* train,
                   Dataset* eval);

}  // namespace gemuco

#endif  // GEMUCO_DATASET_HPP_
