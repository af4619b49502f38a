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

// Times the OpenMP kernels against their serial reference twins: the batch
// gradient accumulation, the step-size grid of the iterative optimizer, and
// world rollouts.

#include <chrono>
#include <cstdio>

#include "gemuco/iteropt.hpp"
#include "gemuco/parallel.hpp"
#include "gemuco/rng.hpp"
#include "gemuco/trainer.hpp"
#include "gemuco/worlds.hpp"

namespace gemuco {
namespace {

double seconds_now() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename F>
double time_best_of(int reps, F&& fn) {
  double best = 1e100;
  for (int r = 0; r < reps; ++r) {
    const double t0 = seconds_now();
    fn();
    best = std::min(best, seconds_now() - t0);
  }
  return best;
}

void bench_batch_gradient() {
  ModalityLayout lay({{"theta", 4}, {"f", 6}, {"l", 6}});
  ModelConfig mc;
  mc.pb_dim = 4;
  mc.seed = 7;
  GeMuCoModel model = make_model(lay, {0, 1, 2}, {0, 1, 2}, mc);
  model.normalizer = Normalizer(Vector::Zero(16), Vector::Ones(16));

  Rng rng(11);
  const int n = 4096;
  std::vector<PreparedSample> prepared(n);
  std::vector<BatchItem> items(n);
  const MaskSet& source = model.feasible_masks;
  for (int i = 0; i < n; ++i) {
    PreparedSample& p = prepared[i];
    p.pb_index = 0;
    p.avail_in.assign(3, 1);
    p.avail_out.assign(3, 1);
    p.x_in_norm = Vector(16);
    p.x_out_norm = Vector(16);
    for (int c = 0; c < 16; ++c) {
      p.x_in_norm[c] = rng.uniform(-1, 1);
      p.x_out_norm[c] = rng.uniform(-1, 1);
    }
    items[i] = BatchItem{i, static_cast<int>(rng.index(source.size()))};
  }
  std::vector<Vector> pbs{Vector::Zero(4)};

  const double serial = time_best_of(3, [&] {
    accumulate_batch_gradient(model, prepared, source, items, pbs, Exec::kSerial);
  });
  const double parallel = time_best_of(3, [&] {
    accumulate_batch_gradient(model, prepared, source, items, pbs, Exec::kParallel);
  });
  std::printf("batch_gradient   %6d items   serial %8.2f ms   omp %8.2f ms   speedup %.2fx\n",
              n, serial * 1e3, parallel * 1e3, serial / parallel);
}

void bench_gamma_grid() {
  ModalityLayout lay({{"u", 6}, {"v", 6}});
  ModelConfig mc;
  mc.seed = 3;
  GeMuCoModel model = make_model(lay, {0, 1}, {0, 1}, mc);
  model.normalizer = Normalizer(Vector::Zero(12), Vector::Ones(12));
  Rng rng(5);
  Vector x(12);
  for (int c = 0; c < 12; ++c) x[c] = rng.uniform(-1, 1);
  LossSpec loss;
  TargetMatchTerm t;
  t.out_group = 0;
  t.target = Vector::Zero(6);
  loss.terms.push_back(t);
  OptContext ctx;
  ctx.x_in_norm = x;
  ctx.mask = Mask{1, 1};
  ctx.pb = Vector();

  IterConfig cfg;
  cfg.iterations = 200;
  cfg.n_batch = 64;
  const Vector z0 = encode(model, x, ctx.mask, Vector());

  cfg.exec = Exec::kSerial;
  const double serial =
      time_best_of(3, [&] { optimize(model, z0, loss, cfg, ctx); });
  cfg.exec = Exec::kParallel;
  const double parallel =
      time_best_of(3, [&] { optimize(model, z0, loss, cfg, ctx); });
  std::printf("gamma_grid       %3d x %3d evals  serial %8.2f ms   omp %8.2f ms   speedup %.2fx\n",
              cfg.iterations, cfg.n_batch, serial * 1e3, parallel * 1e3,
              serial / parallel);
}

void bench_rollout() {
  DeflectingBipedWorld world{DeflectingBipedWorld::Params{}};
  const int n = 3000;
  // Rollouts parallelize internally; compare against a single-threaded env.
  const double t0 = seconds_now();
  world.random_rollout(n, 1);
  const double omp = seconds_now() - t0;
  std::printf("world_rollout    %6d samples  omp %8.2f ms (threads: %d)\n", n,
              omp * 1e3, thread_count());
}

}  // namespace
}  // namespace gemuco

int main() {
  std::printf("kernel benchmarks (threads: %d)\n", gemuco::thread_count());
  gemuco::bench_batch_gradient();
  gemuco::bench_gamma_grid();
  gemuco::bench_rollout();
  return 0;
}
