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

#include "gemuco/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace gemuco {

int thread_count() {
  static const int cached = [] {
    if (const char* env = std::getenv("GEMUCO_THREADS")) {
      try {
        int n = std::stoi(env);
        if (n >= 1) return n;
      } catch (...) {
      }
    }
    return omp_get_max_threads();
  }();
  return cached;
}

}  // namespace gemuco
