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

#ifndef GEMUCO_PARALLEL_HPP_
#define GEMUCO_PARALLEL_HPP_

namespace gemuco {

// Selects between the OpenMP kernels and their serial reference twins.
// The serial path is kept as the ground truth the parallel path is
// tested and benchmarked against.
enum class Exec { kSerial, kParallel };

// Worker thread count: GEMUCO_THREADS if set (clamped to >= 1), otherwise
// the OpenMP default. Read once and cached.
int thread_count();

}  // namespace gemuco

#endif  // GEMUCO_PARALLEL_HPP_
