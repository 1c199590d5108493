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

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "issrsim/cluster.hpp"
#include "issrsim/error.hpp"
#include "issrsim/formats.hpp"
#include "issrsim/kernels.hpp"

using namespace issrsim;
using namespace issrsim::cluster;

namespace {

// CSR matrix with the given row lengths; columns spread over `cols`.
formats::CsrMatrix with_rows(const std::vector<std::uint32_t>& lengths, std::uint64_t cols,
                             std::uint64_t seed) {
  formats::Rng rng(seed);
  formats::CsrMatrix m;
  m.rows = lengths.size();
  m.cols = cols;
  m.ptr = {0};
  for (auto n : lengths) {
    auto cols_sorted = formats::sample_distinct(rng, cols, n);
    std::sort(cols_sorted.begin(), cols_sorted.end());
    for (auto c : cols_sorted) {
      m.indices.push_back(c);
      m.values.push_back(rng.uniform01() - 0.5);
    }
    m.ptr.push_back(static_cast<std::uint32_t>(m.values.size()));
  }
  return m;
}

// Smallest achievable largest part over all contiguous splits.
std::uint64_t optimal_max(const formats::CsrMatrix& a, int parts) {
  std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
  std::vector<std::uint64_t> cuts;
  std::function<void(std::uint64_t, int, std::uint64_t)> rec = [&](std::uint64_t r, int left,
                                                                     std::uint64_t worst) {
    if (left == 1) {
      best = std::min(best, std::max<std::uint64_t>(worst, a.ptr[a.rows] - a.ptr[r]));
      return;
    }
    for (std::uint64_t c = r; c <= a.rows; ++c) {
      rec(c, left - 1, std::max<std::uint64_t>(worst, a.ptr[c] - a.ptr[r]));
    }
  };
  rec(0, parts, 0);
  return best;
}

void check_partition(const std::vector<RowRange>& ranges, const formats::CsrMatrix& a,
                     std::uint64_t begin, std::uint64_t end) {
  std::uint64_t r = begin;
  for (const auto& range : ranges) {
    CHECK(range.begin == r);
    CHECK(range.end >= range.begin);
    CHECK(range.nnz == a.ptr[range.end] - a.ptr[range.begin]);
    r = range.end;
  }
  CHECK(r == end);
}

kernels::KernelDescriptor issr(int w = 16) {
  kernels::KernelDescriptor d;
  d.kernel = kernels::Kernel::kCsrmv;
  d.variant = kernels::Variant::kIssr;
  d.index_width = w;
  return d;
}

}  // namespace

TEST_CASE("uniform rows split evenly") {
  auto a = with_rows(std::vector<std::uint32_t>(64, 5), 100, 1);
  auto ranges = split_rows(a, 0, 64, 8);
  REQUIRE(ranges.size() == 8);
  check_partition(ranges, a, 0, 64);
  for (const auto& r : ranges) CHECK(r.nnz == 40);
}

TEST_CASE("rows without nonzeros split by row count") {
  auto a = with_rows(std::vector<std::uint32_t>(20, 0), 10, 1);
  auto ranges = split_rows(a, 0, 20, 8);
  check_partition(ranges, a, 0, 20);
  for (const auto& r : ranges) CHECK(r.end - r.begin >= 2);
  CHECK_THROWS_AS(split_rows(a, 0, 21, 2), ConfigError);
  CHECK_THROWS_AS(split_rows(a, 0, 20, 0), ConfigError);
}

TEST_CASE("greedy split stays within one row of the optimum") {
  formats::Rng rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const auto rows = 4 + rng.uniform(9);
    std::vector<std::uint32_t> lengths(rows);
    std::uint32_t longest = 0;
    for (auto& n : lengths) {
      n = static_cast<std::uint32_t>(rng.uniform(rng.uniform(2) ? 4 : 30));
      longest = std::max(longest, n);
    }
    auto a = with_rows(lengths, 64, static_cast<std::uint64_t>(trial));
    const int parts = 2 + static_cast<int>(rng.uniform(3));
    auto ranges = split_rows(a, 0, rows, parts);
    REQUIRE(ranges.size() == static_cast<std::size_t>(parts));
    check_partition(ranges, a, 0, rows);
    std::uint64_t worst = 0;
    for (const auto& r : ranges) worst = std::max(worst, r.nnz);
    CAPTURE(trial);
    CHECK(worst <= optimal_max(a, parts) + longest);
  }
}

TEST_CASE("tile plan layout") {
  auto a = formats::gen_banded_csr(600, 1024, 12, 16, 5);
  ClusterConfig cfg;
  TilePlan plan = plan_tiles(a, 16, cfg, 16 * 1024);
  REQUIRE(plan.tiles.size() > 2);
  const std::uint64_t tcdm = static_cast<std::uint64_t>(cfg.tcdm.banks) * cfg.tcdm.bank_bytes;
  CHECK(plan.release_flags + 8u * cfg.workers <= plan.arrival_flags);
  CHECK(plan.arrival_flags + 8u * cfg.workers <= plan.dense_base);
  CHECK(plan.dense_base % 64 == 0);
  CHECK(plan.dense_bytes == 8 * a.cols);
  CHECK(plan.dense_base + plan.dense_bytes <= plan.buffers[0]);
  CHECK(plan.buffers[0] + plan.buffer_bytes <= plan.buffers[1]);
  CHECK(plan.buffers[1] + plan.buffer_bytes <= tcdm);
  CHECK(plan.buffers[0] % 64 == 0);
  CHECK(plan.buffers[1] % 64 == 0);

  std::uint64_t row = 0;
  for (const Tile& t : plan.tiles) {
    CHECK(t.row_begin == row);
    CHECK(t.nnz == a.ptr[t.row_end] - a.ptr[t.row_begin]);
    CHECK(t.buffer_bytes() <= plan.buffer_bytes);
    CHECK(t.blob_bytes == tile_blob_bytes(t.row_end - t.row_begin, t.nnz, 16, cfg.workers));
    CHECK(t.ranges.size() == static_cast<std::size_t>(cfg.workers));
    check_partition(t.ranges, a, t.row_begin, t.row_end);
    row = t.row_end;
  }
  CHECK(row == a.rows);
  CHECK(plan.imbalance() >= 1.0);
  CHECK(plan.describe().find("tile") != std::string::npos);
}

TEST_CASE("infeasible plans are rejected") {
  // x alone fills the scratchpad.
  auto wide = formats::gen_banded_csr(4, 40000, 1, 32, 1);
  CHECK_THROWS_AS(plan_tiles(wide, 32), ConfigError);
  // One row larger than the buffer.
  auto dense_row = with_rows({2000, 1}, 4096, 2);
  CHECK_THROWS_AS(plan_tiles(dense_row, 16, {}, 4096), ConfigError);
  auto ok = formats::gen_banded_csr(8, 64, 2, 16, 1);
  CHECK_THROWS_AS(plan_tiles(ok, 8), ConfigError);
  ClusterConfig none;
  none.workers = 0;
  CHECK_THROWS_AS(plan_tiles(ok, 16, none), ConfigError);
}

TEST_CASE("cluster result is independent of the tiling") {
  auto a = formats::gen_banded_csr(300, 512, 7, 16, 8);
  auto x = formats::gen_dense_vector(512, 9);
  ClusterConfig cfg;
  const auto want = formats::csrmv_ordered(a, x, kernels::resolved_accumulators(issr(), cfg.core.timing));
  for (std::uint64_t buffer : {0u, 6000u, 12000u, 30000u}) {
    ClusterResult r = simulate_cluster_csrmv(a, x, issr(), cfg, plan_tiles(a, 16, cfg, buffer));
    CAPTURE(buffer);
    CHECK(r.y == want);
    CHECK(r.aggregate.fmadds == a.nnz());
  }
}

TEST_CASE("every variant and width computes the same rows as one core") {
  auto a = formats::gen_banded_csr(120, 256, 5, 16, 14);
  auto x = formats::gen_dense_vector(256, 15);
  for (int w : {16, 32}) {
    for (auto v : {kernels::Variant::kBase, kernels::Variant::kSsr, kernels::Variant::kIssr}) {
      kernels::KernelDescriptor d = issr(w);
      d.variant = v;
      auto single = kernels::run_kernel(kernels::build_csrmv(d, a, x));
      ClusterResult r = simulate_cluster_csrmv(a, x, d);
      CAPTURE(w);
      CAPTURE(kernels::variant_name(v));
      CHECK(r.y == single.result);
    }
  }
}

TEST_CASE("cluster timing bounds") {
  auto a = formats::gen_banded_csr(1024, 2048, 20, 16, 3);
  auto x = formats::gen_dense_vector(2048, 4);
  ClusterConfig cfg;
  ClusterResult cl = simulate_cluster_csrmv(a, x, issr(), cfg);
  auto single = kernels::run_kernel(kernels::build_csrmv(issr(), a, x));
  // Eight workers cannot beat eight ideal single cores.
  CHECK(cl.cycles * 8 >= single.stats.cycles);
  CHECK(cl.cycles < single.stats.cycles);
  // No worker beats the indirect-stream ceiling.
  CHECK(cl.utilization() <= 0.8 + 1e-9);
  CHECK(cl.x_ready_cycle >= 2048 * 8 / cfg.dma.beat_bytes);
  CHECK(cl.per_core.size() == static_cast<std::size_t>(cfg.workers));
  // Each tile ends in a flag barrier that costs at least the DM reaction.
  for (auto b : cl.barrier_cycles) CHECK(b >= cfg.dm_poll_cycles);
  CHECK(cl.dma.transfers >= 1 + 2 * cl.plan.tiles.size());
}

TEST_CASE("stats csv has one row per worker and a total") {
  auto a = formats::gen_banded_csr(64, 128, 3, 16, 1);
  auto x = formats::gen_dense_vector(128, 2);
  ClusterResult r = simulate_cluster_csrmv(a, x, issr());
  std::istringstream in(stats_csv(r));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  REQUIRE(lines.size() == 10);
  CHECK(lines.back().rfind("all", 0) == 0);
}
