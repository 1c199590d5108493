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
/**
 * @file cluster.hpp
 * @brief Eight-worker cluster CsrMV: row-block tiling, a scripted
 *        data-mover core driving the DMA with double buffering, and flag
 *        barriers in the shared TCDM.
 *
 * The host lays out every tile as one contiguous blob in main memory:
 *
 *   header  one 32-byte descriptor per worker (buffer-relative offsets of
 *           ptr, ptr end, indices, values, result)
 *   ptr     tile-local row pointers (u32)
 *   idx     column indices (W bits)
 *   val     values (f64)
 *
 * followed in the TCDM buffer by the tile's result slice. One DMA moves a
 * blob in, one moves the result slice out.
 */
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "issrsim/core.hpp"
#include "issrsim/formats.hpp"
#include "issrsim/kernels.hpp"
#include "issrsim/mem.hpp"

namespace issrsim::cluster {

struct ClusterConfig {
  int workers = 8;
  mem::TcdmConfig tcdm;
  mem::DmaConfig dma;
  core::CoreConfig core;
  /// DM core loop that polls the worker arrival flags.
  std::uint64_t dm_poll_cycles = 8;
  /// DM core cycles to set up one DMA descriptor.
  std::uint64_t dm_issue_cycles = 4;
  /// 0 picks a bound from the problem size.
  std::uint64_t max_cycles = 0;
};

struct RowRange {
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
  std::uint64_t nnz = 0;
};

struct Tile {
  std::uint64_t row_begin = 0;
  std::uint64_t row_end = 0;
  std::uint64_t nnz = 0;
  std::uint64_t blob_bytes = 0;    // header + ptr + idx + val as moved in
  std::uint64_t result_offset = 0; // result slice within the buffer
  std::uint64_t idx_offset = 0;
  std::uint64_t val_offset = 0;
  std::vector<RowRange> ranges;    // one per worker, partitions the tile
  std::uint64_t buffer_bytes() const { return result_offset + 8 * (row_end - row_begin); }
};

struct TilePlan {
  int workers = 0;
  int index_width = 16;
  std::uint64_t release_flags = 0;  // worker c polls release_flags + 8 c
  std::uint64_t arrival_flags = 0;  // worker c writes arrival_flags + 8 c
  std::uint64_t dense_base = 0;
  std::uint64_t dense_bytes = 0;
  std::array<std::uint64_t, 2> buffers{};
  std::uint64_t buffer_bytes = 0;
  std::vector<Tile> tiles;

  /// Largest max/min per-worker nonzero ratio over all tiles; ranges
  /// without nonzeros count as one.
  double imbalance() const;
  /// Human-readable dump of the layout and every row range.
  std::string describe() const;
};

/// Bytes a tile occupies in the header, ptr, index and value sections.
std::uint64_t tile_blob_bytes(std::uint64_t rows, std::uint64_t nnz, int index_width,
                              int workers);

/// Splits [begin, end) into `parts` contiguous ranges, cutting each range at
/// the row boundary nearest to its share of the remaining nonzeros.
std::vector<RowRange> split_rows(const formats::CsrMatrix& a, std::uint64_t begin,
                                 std::uint64_t end, int parts);

/// Greedy row packing into tiles of at most `buffer_bytes` (0: the largest
/// buffer that fits next to x). Throws ConfigError if x and two buffers do
/// not fit or a single row exceeds the buffer.
TilePlan plan_tiles(const formats::CsrMatrix& a, int index_width, const ClusterConfig& config = {},
                    std::uint64_t buffer_bytes = 0);

struct ClusterResult {
  std::vector<double> y;
  std::uint64_t cycles = 0;
  std::uint64_t x_ready_cycle = 0;               // x and the first tile resident
  std::vector<core::CycleStats> per_core;
  std::vector<std::uint64_t> barrier_cycles;     // per worker, spent polling
  core::CycleStats aggregate;                    // summed counters, cycles of the run
  mem::DmaStats dma;
  std::uint64_t bank_conflicts = 0;
  TilePlan plan;

  /// Compute ops of all workers / (workers x cycles).
  double utilization() const;
};

/// Runs CsrMV y = A x on the cluster. Each worker runs the single-core
/// kernel body selected by `desc` on its row range of every tile.
ClusterResult simulate_cluster_csrmv(const formats::CsrMatrix& a, std::span<const double> x,
                                     const kernels::KernelDescriptor& desc,
                                     const ClusterConfig& config = {});
/// As above with an explicit plan (from plan_tiles with the same matrix,
/// index width and worker count).
ClusterResult simulate_cluster_csrmv(const formats::CsrMatrix& a, std::span<const double> x,
                                     const kernels::KernelDescriptor& desc,
                                     const ClusterConfig& config, const TilePlan& plan);

/// One CSV row per worker plus an "all" row.
std::string stats_csv(const ClusterResult& result);

}  // namespace issrsim::cluster
