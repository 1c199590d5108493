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
#include "issrsim/cluster.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <memory>
#include <sstream>

#include "issrsim/error.hpp"

namespace issrsim::cluster {

using formats::CsrMatrix;
using isa::ProgramBuilder;
using isa::x;

namespace {

constexpr std::uint64_t kDescriptorBytes = 32;
constexpr std::uint64_t kMainBase = 0x8000'0000;

std::uint64_t align_up(std::uint64_t v, std::uint64_t a) { return (v + a - 1) / a * a; }

std::uint64_t header_bytes(int workers) {
  return static_cast<std::uint64_t>(workers) * kDescriptorBytes;
}

std::uint64_t ptr_bytes(std::uint64_t rows) { return align_up(4 * (rows + 1), 8); }

std::uint64_t idx_bytes(std::uint64_t nnz, int index_width) {
  return align_up(nnz * static_cast<std::uint64_t>(index_width / 8), 8);
}

std::uint64_t tile_bytes(std::uint64_t rows, std::uint64_t nnz, int index_width, int workers) {
  return tile_blob_bytes(rows, nnz, index_width, workers) + 8 * rows;
}

// Worker-side registers; the kernel body leaves x25-x31 alone.
constexpr isa::XReg kBuffer = x(25);
constexpr isa::XReg kTile = x(26);
constexpr isa::XReg kRelease = x(27);
constexpr isa::XReg kArrival = x(28);
constexpr isa::XReg kTiles = x(29);
constexpr isa::XReg kBufferSum = x(30);
constexpr isa::XReg kScratch = x(31);

void li(ProgramBuilder& b, isa::XReg rd, std::uint64_t value) {
  if (value > 0x7fffffffull) throw ConfigError("cluster address does not fit an immediate");
  b.li(rd, static_cast<std::int32_t>(value));
}

struct WorkerProgram {
  isa::Program program;
  int poll_begin = 0;  // instruction range of the release poll loop
  int poll_end = 0;
};

WorkerProgram worker_program(const TilePlan& plan, int worker,
                             const kernels::KernelDescriptor& desc, int accumulators,
                             int unroll) {
  namespace reg = kernels::reg;
  ProgramBuilder b;
  WorkerProgram w;
  li(b, kRelease, plan.release_flags + 8 * static_cast<std::uint64_t>(worker));
  li(b, kArrival, plan.arrival_flags + 8 * static_cast<std::uint64_t>(worker));
  li(b, kTiles, plan.tiles.size());
  li(b, kBufferSum, plan.buffers[0] + plan.buffers[1]);
  li(b, kBuffer, plan.buffers[1]);
  li(b, reg::kDense, plan.dense_base);
  li(b, reg::kResultStride, 8);
  b.li(kTile, 0);

  const std::string tile = b.unique_label("tile");
  const std::string poll = b.unique_label("poll");
  b.label(tile);
  b.addi(kTile, kTile, 1);
  b.sub(kBuffer, kBufferSum, kBuffer);
  w.poll_begin = b.position();
  b.label(poll);
  b.lw(kScratch, kRelease, 0);
  b.blt(kScratch, kTile, poll);
  w.poll_end = b.position();

  b.addi(kScratch, kBuffer, static_cast<std::int32_t>(kDescriptorBytes) * worker);
  const std::array<isa::XReg, 5> fields{reg::kPtr, reg::kPtrEnd, reg::kIdx, reg::kVal,
                                        reg::kResult};
  for (std::size_t i = 0; i < fields.size(); ++i) {
    b.lw(fields[i], kScratch, static_cast<std::int32_t>(4 * i));
    b.add(fields[i], fields[i], kBuffer);
  }
  kernels::emit_csrmv_body(b, desc, accumulators, unroll, 0);
  b.fp_sync();
  b.sw(kTile, kArrival, 0);
  b.bne(kTile, kTiles, tile);
  b.halt();
  w.program = b.finish();
  return w;
}

struct MainLayout {
  std::uint64_t x = 0;
  std::vector<std::uint64_t> blobs;
  std::uint64_t y = 0;
  std::uint64_t end = 0;
};

MainLayout main_layout(const CsrMatrix& a, const TilePlan& plan) {
  MainLayout m;
  m.x = kMainBase;
  std::uint64_t at = align_up(m.x + plan.dense_bytes, 64);
  for (const Tile& t : plan.tiles) {
    m.blobs.push_back(at);
    at = align_up(at + t.blob_bytes, 64);
  }
  m.y = at;
  m.end = align_up(at + 8 * a.rows, 64);
  return m;
}

void write_blob(mem::ByteStore& main, std::uint64_t at, const CsrMatrix& a, const Tile& t,
                int index_width) {
  const std::uint64_t rows = t.row_end - t.row_begin;
  const std::uint64_t ptr0 = a.ptr[t.row_begin];
  const std::uint64_t ptr_off = header_bytes(static_cast<int>(t.ranges.size()));
  for (std::size_t c = 0; c < t.ranges.size(); ++c) {
    const RowRange& r = t.ranges[c];
    const std::uint64_t d = at + kDescriptorBytes * c;
    main.write(d + 0, 4, ptr_off + 4 * (r.begin - t.row_begin));
    main.write(d + 4, 4, ptr_off + 4 * (r.end - t.row_begin));
    main.write(d + 8, 4, t.idx_offset);
    main.write(d + 12, 4, t.val_offset);
    main.write(d + 16, 4, t.result_offset + 8 * (r.begin - t.row_begin));
  }
  for (std::uint64_t i = 0; i <= rows; ++i) {
    main.write(at + ptr_off + 4 * i, 4, a.ptr[t.row_begin + i] - ptr0);
  }
  const auto isz = static_cast<unsigned>(index_width / 8);
  for (std::uint64_t k = 0; k < t.nnz; ++k) {
    main.write(at + t.idx_offset + isz * k, isz, a.indices[ptr0 + k]);
    main.write_f64(at + t.val_offset + 8 * k, a.values[ptr0 + k]);
  }
}

void accumulate(core::CycleStats& sum, const core::CycleStats& s) {
  sum.instructions += s.instructions;
  sum.fp_dispatches += s.fp_dispatches;
  sum.fmadds += s.fmadds;
  sum.fp_compute_ops += s.fp_compute_ops;
  sum.last_fmadd_retire = std::max(sum.last_fmadd_retire, s.last_fmadd_retire);
  for (std::size_t i = 0; i < s.fpu_states.size(); ++i) sum.fpu_states[i] += s.fpu_states[i];
  for (std::size_t i = 0; i < s.core_states.size(); ++i) sum.core_states[i] += s.core_states[i];
  for (std::size_t i = 0; i < 2; ++i) {
    sum.port_requests[i] += s.port_requests[i];
    sum.port_conflicts[i] += s.port_conflicts[i];
  }
  for (std::size_t i = 0; i < s.stream_data.size(); ++i) sum.stream_data[i] += s.stream_data[i];
  sum.index_fetches += s.index_fetches;
}

}  // namespace

std::uint64_t tile_blob_bytes(std::uint64_t rows, std::uint64_t nnz, int index_width,
                              int workers) {
  return header_bytes(workers) + ptr_bytes(rows) + idx_bytes(nnz, index_width) + 8 * nnz;
}

std::vector<RowRange> split_rows(const CsrMatrix& a, std::uint64_t begin, std::uint64_t end,
                                 int parts) {
  if (parts < 1) throw ConfigError("at least one part is required");
  if (begin > end || end > a.rows) throw ConfigError("row range out of bounds");
  std::vector<RowRange> out;
  std::uint64_t r = begin;
  for (int p = 0; p < parts; ++p) {
    const auto left = static_cast<std::uint64_t>(parts - p);
    std::uint64_t cut = end;
    if (p + 1 < parts) {
      const std::uint64_t remaining = a.ptr[end] - a.ptr[r];
      cut = r;
      if (remaining == 0) {
        cut = r + (end - r) / left;
      } else {
        const double target = static_cast<double>(remaining) / static_cast<double>(left);
        double acc = 0.0;
        while (cut < end) {
          const double n = a.row_nnz(cut);
          if (acc + n > target && acc + n - target >= target - acc) break;
          acc += n;
          ++cut;
          if (acc >= target) break;
        }
      }
    }
    out.push_back({.begin = r, .end = cut, .nnz = a.ptr[cut] - a.ptr[r]});
    r = cut;
  }
  return out;
}

TilePlan plan_tiles(const CsrMatrix& a, int index_width, const ClusterConfig& config,
                    std::uint64_t buffer_bytes) {
  a.validate();
  if (index_width != 16 && index_width != 32) throw ConfigError("index width must be 16 or 32");
  formats::require_index_width(a, index_width);
  if (config.workers < 1) throw ConfigError("the cluster needs at least one worker");

  TilePlan plan;
  plan.workers = config.workers;
  plan.index_width = index_width;
  const std::uint64_t base = config.tcdm.base;
  const std::uint64_t capacity =
      config.tcdm.bank_bytes * static_cast<std::uint64_t>(config.tcdm.banks);
  const auto flag_bytes = 8 * static_cast<std::uint64_t>(config.workers);
  plan.release_flags = base;
  plan.arrival_flags = base + flag_bytes;
  plan.dense_base = align_up(plan.arrival_flags + flag_bytes, 64);
  plan.dense_bytes = 8 * a.cols;
  const std::uint64_t buffers = align_up(plan.dense_base + plan.dense_bytes, 64);
  const std::uint64_t room = buffers < base + capacity ? base + capacity - buffers : 0;
  const std::uint64_t largest = room / 2 / 64 * 64;
  if (buffer_bytes == 0) buffer_bytes = largest;
  if (buffer_bytes > largest || buffer_bytes < tile_bytes(1, 0, index_width, config.workers)) {
    throw ConfigError("plan infeasible: x and two tile buffers of " + std::to_string(buffer_bytes) +
                      " bytes do not fit the TCDM");
  }
  plan.buffer_bytes = buffer_bytes;
  plan.buffers = {buffers, align_up(buffers + buffer_bytes, 64)};

  std::uint64_t row = 0;
  while (row < a.rows) {
    std::uint64_t end = row;
    while (end < a.rows &&
           tile_bytes(end + 1 - row, a.ptr[end + 1] - a.ptr[row], index_width, config.workers) <=
               buffer_bytes) {
      ++end;
    }
    if (end == row) {
      throw ConfigError("row " + std::to_string(row) + " does not fit a tile buffer of " +
                        std::to_string(buffer_bytes) + " bytes");
    }
    Tile t;
    t.row_begin = row;
    t.row_end = end;
    t.nnz = a.ptr[end] - a.ptr[row];
    t.idx_offset = header_bytes(config.workers) + ptr_bytes(end - row);
    t.val_offset = t.idx_offset + idx_bytes(t.nnz, index_width);
    t.blob_bytes = t.val_offset + 8 * t.nnz;
    t.result_offset = t.blob_bytes;
    t.ranges = split_rows(a, row, end, config.workers);
    plan.tiles.push_back(std::move(t));
    row = end;
  }
  return plan;
}

double TilePlan::imbalance() const {
  double worst = 1.0;
  for (const Tile& t : tiles) {
    std::uint64_t lo = UINT64_MAX;
    std::uint64_t hi = 0;
    for (const RowRange& r : t.ranges) {
      lo = std::min(lo, std::max<std::uint64_t>(r.nnz, 1));
      hi = std::max(hi, std::max<std::uint64_t>(r.nnz, 1));
    }
    if (!t.ranges.empty()) worst = std::max(worst, static_cast<double>(hi) / static_cast<double>(lo));
  }
  return worst;
}

std::string TilePlan::describe() const {
  std::ostringstream os;
  os << "workers " << workers << ", W " << index_width << "\n"
     << "flags 0x" << std::hex << release_flags << " 0x" << arrival_flags << ", x 0x" << dense_base << " (" << std::dec
     << dense_bytes << " B), buffers 0x" << std::hex << buffers[0] << " 0x" << buffers[1]
     << std::dec << " (" << buffer_bytes << " B each)\n"
     << "tiles " << tiles.size() << ", imbalance " << imbalance() << "\n";
  for (std::size_t k = 0; k < tiles.size(); ++k) {
    const Tile& t = tiles[k];
    os << "tile " << k << ": rows [" << t.row_begin << ", " << t.row_end << ") nnz " << t.nnz
       << " bytes " << t.buffer_bytes() << "\n";
    for (std::size_t c = 0; c < t.ranges.size(); ++c) {
      const RowRange& r = t.ranges[c];
      os << "  core " << c << ": rows [" << r.begin << ", " << r.end << ") nnz " << r.nnz << "\n";
    }
  }
  return os.str();
}

double ClusterResult::utilization() const {
  if (cycles == 0 || per_core.empty()) return 0.0;
  return static_cast<double>(aggregate.fp_compute_ops) /
         (static_cast<double>(cycles) * static_cast<double>(per_core.size()));
}

ClusterResult simulate_cluster_csrmv(const CsrMatrix& a, std::span<const double> x,
                                     const kernels::KernelDescriptor& desc,
                                     const ClusterConfig& config) {
  return simulate_cluster_csrmv(a, x, desc, config, plan_tiles(a, desc.index_width, config));
}

ClusterResult simulate_cluster_csrmv(const CsrMatrix& a, std::span<const double> x,
                                     const kernels::KernelDescriptor& desc,
                                     const ClusterConfig& config, const TilePlan& plan) {
  if (x.size() < a.cols) throw ConfigError("dense vector shorter than the column count");
  if (plan.workers != config.workers || plan.index_width != desc.index_width) {
    throw ConfigError("tile plan does not match the cluster configuration");
  }
  if (desc.result_stride != 8) throw ConfigError("cluster CsrMV writes a contiguous result");
  if (plan.tiles.empty() || plan.tiles.back().row_end != a.rows) {
    throw ConfigError("tile plan does not cover the matrix");
  }
  const int workers = config.workers;
  const auto ntiles = static_cast<int>(plan.tiles.size());
  const int k = kernels::resolved_accumulators(desc, config.core.timing);
  const int unroll = kernels::resolved_unroll(desc, config.core.timing);

  // Main memory image.
  const MainLayout ml = main_layout(a, plan);
  mem::ByteStore main(kMainBase, ml.end - kMainBase);
  for (std::uint64_t i = 0; i < a.cols; ++i) main.write_f64(ml.x + 8 * i, x[i]);
  for (int t = 0; t < ntiles; ++t) {
    write_blob(main, ml.blobs[static_cast<std::size_t>(t)], a,
               plan.tiles[static_cast<std::size_t>(t)], desc.index_width);
  }

  // Two ports per worker (shared, indirection) and one for the DM core.
  mem::Tcdm tcdm(config.tcdm, 2 * workers + 1);
  mem::Port& dm_port = tcdm.port(2 * workers);
  mem::DmaEngine dma(tcdm, main, config.dma);

  std::vector<WorkerProgram> programs;
  std::vector<std::unique_ptr<core::CoreComplex>> cores;
  for (int c = 0; c < workers; ++c) {
    programs.push_back(worker_program(plan, c, desc, k, unroll));
    cores.push_back(std::make_unique<core::CoreComplex>(
        programs.back().program, config.core, tcdm.port(2 * c),
        config.core.has_streamer ? &tcdm.port(2 * c + 1) : nullptr));
  }

  const auto buffer_of = [&](int t) { return plan.buffers[static_cast<std::size_t>(t % 2)]; };
  const auto tile_in = [&](int t, std::uint64_t cycle) {
    const Tile& tile = plan.tiles[static_cast<std::size_t>(t)];
    return dma.submit({.src_space = mem::Space::kMain,
                       .src = ml.blobs[static_cast<std::size_t>(t)],
                       .dst_space = mem::Space::kTcdm,
                       .dst = buffer_of(t),
                       .inner_bytes = tile.blob_bytes},
                      cycle);
  };
  const auto tile_out = [&](int t, std::uint64_t cycle) {
    const Tile& tile = plan.tiles[static_cast<std::size_t>(t)];
    return dma.submit({.src_space = mem::Space::kTcdm,
                       .src = buffer_of(t) + tile.result_offset,
                       .dst_space = mem::Space::kMain,
                       .dst = ml.y + 8 * tile.row_begin,
                       .inner_bytes = 8 * (tile.row_end - tile.row_begin)},
                      cycle);
  };

  // Scripted DM core. Its actions are timed events so that polling and
  // descriptor setup take DM cycles.
  std::vector<int> in_ids(static_cast<std::size_t>(ntiles), -1);
  std::deque<std::pair<std::uint64_t, std::function<void(std::uint64_t)>>> events;
  std::uint64_t dm_free = config.dm_issue_cycles;
  const auto schedule = [&](std::function<void(std::uint64_t)> action) {
    dm_free += config.dm_issue_cycles;
    events.emplace_back(dm_free, std::move(action));
  };
  int x_id = -1;
  events.emplace_back(config.dm_issue_cycles, [&](std::uint64_t t) {
    x_id = dma.submit({.src_space = mem::Space::kMain,
                       .src = ml.x,
                       .dst_space = mem::Space::kTcdm,
                       .dst = plan.dense_base,
                       .inner_bytes = plan.dense_bytes},
                      t);
  });
  for (int t = 0; t < std::min(ntiles, 2); ++t) {
    schedule([&, t](std::uint64_t c) { in_ids[static_cast<std::size_t>(t)] = tile_in(t, c); });
  }
  int next_release = 0;
  int awaiting = -1;  // tile whose arrivals the DM core polls for
  int flag_writes = 0;  // release flags still to write for next_release

  ClusterResult result;
  result.barrier_cycles.assign(static_cast<std::size_t>(workers), 0);
  const std::uint64_t limit =
      config.max_cycles ? config.max_cycles : 200 * (a.nnz() + a.rows) + 1'000'000;

  std::uint64_t cycle = 0;
  for (;; ++cycle) {
    // DM core.
    while (!events.empty() && events.front().first <= cycle) {
      auto action = std::move(events.front().second);
      events.pop_front();
      action(cycle);
    }
    if (events.empty() && cycle >= dm_free) {
      if (awaiting >= 0) {
        bool all = true;
        for (int c = 0; c < workers && all; ++c) {
          all = tcdm.store().read(plan.arrival_flags + 8 * static_cast<std::uint64_t>(c), 4) >=
                static_cast<std::uint64_t>(awaiting) + 1;
        }
        if (all) {
          dm_free = cycle + config.dm_poll_cycles;
          const int done_tile = awaiting;
          schedule([&, done_tile](std::uint64_t c) { tile_out(done_tile, c); });
          if (done_tile + 2 < ntiles) {
            schedule([&, done_tile](std::uint64_t c) {
              in_ids[static_cast<std::size_t>(done_tile + 2)] = tile_in(done_tile + 2, c);
            });
          }
          awaiting = -1;
        }
      } else if (flag_writes == 0 && next_release < ntiles && dma.done(x_id) &&
                 dma.done(in_ids[static_cast<std::size_t>(next_release)])) {
        if (next_release == 0) result.x_ready_cycle = cycle;
        flag_writes = workers;
      }
      if (flag_writes > 0 && !dm_port.busy()) {
        const auto c = static_cast<std::uint64_t>(workers - flag_writes);
        dm_port.present({.address = plan.release_flags + 8 * c,
                         .size = 4,
                         .kind = mem::AccessKind::kWrite,
                         .wdata = static_cast<std::uint64_t>(next_release) + 1});
      }
    }

    for (int c = 0; c < workers; ++c) {
      core::CoreComplex& cc = *cores[static_cast<std::size_t>(c)];
      if (cc.done()) continue;
      const WorkerProgram& w = programs[static_cast<std::size_t>(c)];
      if (cc.pc() >= w.poll_begin && cc.pc() < w.poll_end) {
        ++result.barrier_cycles[static_cast<std::size_t>(c)];
      }
      cc.issue(cycle);
    }
    dma.request(cycle);
    try {
      tcdm.tick(cycle);
    } catch (const SimulationFault& e) {
      throw SimulationFault(cycle, -1, std::string("cluster: ") + e.what());
    }
    dma.complete(cycle);
    for (auto& cc : cores) {
      if (!cc->done()) cc->complete(cycle);
    }
    if (dm_port.granted()) {
      dm_port.retire();
      if (--flag_writes == 0) awaiting = next_release++;
    }

    const bool workers_done =
        std::all_of(cores.begin(), cores.end(), [](const auto& cc) { return cc->done(); });
    if (workers_done && next_release == ntiles && awaiting < 0 && events.empty() && dma.idle()) {
      break;
    }
    if (cycle + 1 >= limit) throw SimulationFault(cycle, -1, "cluster cycle limit reached");
  }

  result.cycles = cycle + 1;
  result.plan = plan;
  result.aggregate.cycles = result.cycles;
  result.aggregate.contract = config.core.timing;
  for (auto& cc : cores) {
    cc->finish(result.cycles);
    result.per_core.push_back(cc->stats());
    accumulate(result.aggregate, cc->stats());
  }
  result.dma = dma.stats();
  result.bank_conflicts = tcdm.bank_conflicts();
  result.y = formats::load_f64(main, ml.y, a.rows, 8);
  return result;
}

std::string stats_csv(const ClusterResult& r) {
  std::ostringstream os;
  os << "core,cycles,instructions,fmadds,fp_compute_ops,utilization,barrier_cycles,"
        "shared_port_conflicts,issr_port_conflicts";
  for (int s = 0; s < core::kNumFpuStates; ++s) {
    os << ",fpu_" << core::fpu_state_name(static_cast<core::FpuState>(s));
  }
  os << "\n";
  const auto row = [&](const std::string& name, const core::CycleStats& s, double util,
                       std::uint64_t barrier) {
    os << name << "," << s.cycles << "," << s.instructions << "," << s.fmadds << ","
       << s.fp_compute_ops << "," << util << "," << barrier << "," << s.port_conflicts[0] << ","
       << s.port_conflicts[1];
    for (auto v : s.fpu_states) os << "," << v;
    os << "\n";
  };
  std::uint64_t barrier = 0;
  for (std::size_t c = 0; c < r.per_core.size(); ++c) {
    row(std::to_string(c), r.per_core[c], r.per_core[c].utilization(), r.barrier_cycles[c]);
    barrier += r.barrier_cycles[c];
  }
  row("all", r.aggregate, r.utilization(), barrier);
  return os.str();
}

}  // namespace issrsim::cluster
