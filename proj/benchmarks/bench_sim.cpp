/*
 * Copyright 2026 The issrsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Host-side throughput of the simulator itself: simulated cycles per
// second for the main kernels and the raw TCDM arbiter.

#include <benchmark/benchmark.h>

#include "issrsim/cluster.hpp"
#include "issrsim/formats.hpp"
#include "issrsim/kernels.hpp"
#include "issrsim/mem.hpp"

using namespace issrsim;

static kernels::KernelDescriptor make_desc(kernels::Kernel k, int variant, int w) {
  kernels::KernelDescriptor d;
  d.kernel = k;
  d.variant = static_cast<kernels::Variant>(variant);
  d.index_width = w;
  return d;
}

static void BM_Spvv(benchmark::State& state) {
  const auto nnz = static_cast<std::uint64_t>(state.range(1));
  auto a = formats::gen_sparse_vector(10000, nnz, 16, 1);
  auto x = formats::gen_dense_vector(10000, 2);
  auto built = kernels::build_spvv(make_desc(kernels::Kernel::kSpvv, static_cast<int>(state.range(0)), 16), a, x);
  std::uint64_t cycles = 0;
  for (auto _ : state) {
    auto r = kernels::run_kernel(built);
    cycles += r.stats.cycles;
    benchmark::DoNotOptimize(r.result);
  }
  state.counters["sim_cycles/s"] = benchmark::Counter(static_cast<double>(cycles), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Spvv)->ArgsProduct({{0, 1, 2}, {100, 1000}})->Unit(benchmark::kMillisecond);

static void BM_Csrmv(benchmark::State& state) {
  auto a = formats::gen_banded_csr(512, 2048, static_cast<std::uint64_t>(state.range(1)), 16, 3);
  auto x = formats::gen_dense_vector(2048, 4);
  auto built = kernels::build_csrmv(make_desc(kernels::Kernel::kCsrmv, static_cast<int>(state.range(0)), 16), a, x);
  std::uint64_t cycles = 0;
  for (auto _ : state) {
    auto r = kernels::run_kernel(built);
    cycles += r.stats.cycles;
    benchmark::DoNotOptimize(r.result);
  }
  state.counters["sim_cycles/s"] = benchmark::Counter(static_cast<double>(cycles), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Csrmv)->ArgsProduct({{0, 2}, {10, 100}})->Unit(benchmark::kMillisecond);

static void BM_ClusterCsrmv(benchmark::State& state) {
  auto a = formats::gen_banded_csr(1024, 4096, static_cast<std::uint64_t>(state.range(0)), 16, 5);
  auto x = formats::gen_dense_vector(4096, 6);
  auto d = make_desc(kernels::Kernel::kCsrmv, 2, 16);
  std::uint64_t cycles = 0;
  for (auto _ : state) {
    auto r = cluster::simulate_cluster_csrmv(a, x, d);
    cycles += r.cycles;
    benchmark::DoNotOptimize(r.y);
  }
  state.counters["sim_cycles/s"] = benchmark::Counter(static_cast<double>(cycles), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_ClusterCsrmv)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

static void BM_TcdmTick(benchmark::State& state) {
  const int ports = static_cast<int>(state.range(0));
  mem::Tcdm tcdm({}, ports);
  formats::Rng rng(7);
  std::uint64_t cycle = 0;
  for (auto _ : state) {
    for (int p = 0; p < ports; ++p) {
      auto& port = tcdm.port(p);
      if (port.granted()) port.retire();
      if (!port.busy()) port.present({.address = 8 * rng.uniform(8192), .size = 8});
    }
    tcdm.tick(cycle++);
  }
  state.counters["conflict_rate"] =
      static_cast<double>(tcdm.bank_conflicts()) / static_cast<double>(std::max<std::uint64_t>(cycle, 1));
}
BENCHMARK(BM_TcdmTick)->Arg(8)->Arg(17);

BENCHMARK_MAIN();
