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
 * @file core.hpp
 * @brief Timing model of one core complex: a single-issue integer core,
 *        the decoupled FPU subsystem with its instruction queue and FREP
 *        sequencer, and the two stream units.
 *
 * Per cycle the owner calls issue() (integer core, then FPU, then port
 * requests), ticks the memory, then calls complete() to collect grants.
 * simulate_cc() wraps this loop around an ideal two-port memory.
 */

#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "issrsim/isa.hpp"
#include "issrsim/mem.hpp"
#include "issrsim/stream.hpp"

namespace issrsim::core {

struct TimingContract {
  int fpu_latency = 4;          // FMADD_D / FADD_D / FMUL_D
  int fmv_latency = 1;          // FMV_ZERO
  int fpu_queue_depth = 8;
  int load_use_cycles = 2;      // load issue (grant) to first consumer issue
  int data_fifo_depth = 5;
  int index_fifo_words = 4;
  int config_write_cycles = 3;  // core cycles occupied by one SCFGW
  unsigned address_bits = 18;

  bool operator==(const TimingContract&) const = default;
};

struct CoreConfig {
  TimingContract timing;
  bool has_streamer = true;
  // Cycles without any progress before the run is declared deadlocked.
  std::uint64_t deadlock_cycles = 20000;
  std::uint64_t max_cycles = 2'000'000'000ull;
};

/// What the FPU did in a cycle. Exactly one state per cycle.
enum class FpuState : std::uint8_t {
  kCompute,     // dispatched FMADD_D / FADD_D / FMUL_D
  kOther,       // dispatched any other FP-subsystem instruction
  kStreamWait,  // head op waits for a stream FIFO (empty, or full on write)
  kRaw,         // head op waits for a register result
  kLsu,         // head op waits for the FPU load/store slot
  kIdle,        // nothing to dispatch
};
inline constexpr int kNumFpuStates = 6;
std::string_view fpu_state_name(FpuState s);

/// What the integer core did in a cycle. Exactly one state per cycle.
enum class CoreState : std::uint8_t {
  kIssue,       // issued an instruction
  kLoadUse,     // operand not yet available
  kQueueFull,   // FPU queue full
  kLsu,         // core load/store slot still occupied
  kConfig,      // SCFGW occupancy or job back-pressure
  kSync,        // FP_SYNC waiting for the FPU
  kHalted,
};
inline constexpr int kNumCoreStates = 7;
std::string_view core_state_name(CoreState s);

struct CycleStats {
  std::uint64_t cycles = 0;
  std::uint64_t instructions = 0;       // integer-core issues
  std::uint64_t fp_dispatches = 0;      // FPU dispatches including FREP repeats
  std::uint64_t fmadds = 0;             // FMADD_D only
  std::uint64_t fp_compute_ops = 0;     // FMADD_D + FADD_D + FMUL_D
  std::uint64_t last_fmadd_retire = 0;  // cycle after the last FMADD_D completed
  std::array<std::uint64_t, kNumFpuStates> fpu_states{};
  std::array<std::uint64_t, kNumCoreStates> core_states{};
  std::array<std::uint64_t, 2> port_requests{};   // shared, indirection
  std::array<std::uint64_t, 2> port_conflicts{};  // cycles a presented request waited
  std::array<std::uint64_t, isa::kNumStreamUnits> stream_data{};
  std::uint64_t index_fetches = 0;
  TimingContract contract;

  /// fp_compute_ops / cycles.
  double utilization() const;
  /// fmadds / last_fmadd_retire: the clock stops before the reduction.
  double utilization_reduction_free() const;
  std::uint64_t fpu_state(FpuState s) const { return fpu_states[static_cast<int>(s)]; }
  std::uint64_t core_state(CoreState s) const { return core_states[static_cast<int>(s)]; }
};

class CoreComplex {
 public:
  /// `issr_port` may be null when the streamer is absent.
  CoreComplex(const isa::Program& program, const CoreConfig& config, mem::Port& shared_port,
              mem::Port* issr_port);

  CoreComplex(const CoreComplex&) = delete;
  CoreComplex& operator=(const CoreComplex&) = delete;

  /// Integer core, FPU and stream phases of `cycle`; leaves requests on the
  /// ports for the memory tick.
  void issue(std::uint64_t cycle);
  /// Collects grants after the memory tick of `cycle`.
  void complete(std::uint64_t cycle);

  /// HALT retired and every unit drained.
  bool done() const { return done_; }
  /// True if anything advanced during the last cycle.
  bool progressed() const { return progressed_; }
  int pc() const { return pc_; }
  /// Instruction index of the load/store currently on the shared port, or
  /// -1 if a stream unit or nobody owns it.
  int access_pc() const;

  std::uint64_t xreg(int r) const { return x_[static_cast<std::size_t>(r)]; }
  void set_xreg(int r, std::uint64_t value);
  double freg(int r) const { return f_[static_cast<std::size_t>(r)]; }
  void set_freg(int r, double value) { f_[static_cast<std::size_t>(r)] = value; }

  /// Statistics so far; `cycles` is set by the owner via finish().
  const CycleStats& stats() const { return stats_; }
  void finish(std::uint64_t cycles);
  const stream::StreamUnit* stream_unit(int unit) const;

 private:
  struct QueueEntry {
    isa::Instruction inst;
    int pc = 0;
    std::uint64_t address = 0;  // FLD / FSD effective address
    std::uint64_t count = 0;    // FREP iterations
    std::uint64_t enqueue_cycle = 0;
  };
  struct Sequencer {
    std::vector<QueueEntry> body;
    std::uint64_t iterations = 0;
    std::uint64_t iteration = 0;
    int index = 0;
    std::uint8_t stagger_count = 0;
    std::uint8_t stagger_mask = 0;
  };
  enum class Owner : std::uint8_t { kNone, kCore, kFpu, kStream };
  struct LsuSlot {
    mem::Request request;
    int reg = 0;
    bool half = false;  // LH
    bool fp = false;
    int pc = 0;
  };

  CoreState step_core(std::uint64_t cycle);
  FpuState step_fpu(std::uint64_t cycle);
  FpuState dispatch(const QueueEntry& entry, const isa::Instruction& inst, std::uint64_t cycle,
                    bool& dispatched);
  void step_ports(std::uint64_t cycle);
  bool fpu_idle(std::uint64_t cycle) const;
  bool all_drained(std::uint64_t cycle) const;
  std::optional<int> mapped_unit(int freg) const;
  bool xready(int r, std::uint64_t cycle) const { return x_ready_[static_cast<std::size_t>(r)] <= cycle; }
  [[noreturn]] void fault(std::uint64_t cycle, int pc, const std::string& what) const;

  isa::Program program_;
  CoreConfig config_;
  mem::Port& shared_port_;
  mem::Port* issr_port_;

  // Integer core.
  std::array<std::uint64_t, isa::kNumIntRegs> x_{};
  std::array<std::uint64_t, isa::kNumIntRegs> x_ready_{};
  int pc_;
  bool halted_ = false;
  int config_busy_ = 0;
  std::optional<LsuSlot> core_lsu_;

  // FPU subsystem.
  std::array<double, isa::kNumFpRegs> f_{};
  std::array<std::uint64_t, isa::kNumFpRegs> f_ready_{};
  std::deque<QueueEntry> queue_;
  std::optional<Sequencer> sequencer_;
  std::optional<LsuSlot> fpu_lsu_;
  bool streams_enabled_ = false;
  std::uint64_t last_retire_ = 0;

  std::vector<stream::StreamUnit> units_;

  // Shared-port multiplexer.
  Owner shared_owner_ = Owner::kNone;
  bool issr_presented_ = false;

  bool done_ = false;
  bool progressed_ = false;
  CycleStats stats_;
};

struct CcResult {
  CycleStats stats;
  mem::ByteStore image;
  std::vector<mem::GrantRecord> log;
};

/// Single-core run on an ideal two-port memory holding `image`. Throws
/// SimulationFault on stream faults, bad accesses and deadlock.
CcResult simulate_cc(const isa::Program& program, const CoreConfig& config,
                     const mem::ByteStore& image, bool keep_log = false);

/// Outcome of a run reduced to what comparisons need.
struct RunReport {
  std::string label;
  CycleStats stats;
  std::vector<double> result;
};

/// cycles_baseline / cycles_variant. Throws Error if the results differ by
/// more than `rel_tolerance` (relative, elementwise).
double speedup(const RunReport& baseline, const RunReport& variant,
               double rel_tolerance = 1e-10);

/// Largest elementwise |got - want| / max(|want|, floor). The floor keeps
/// results that cancel to almost zero from dominating.
double max_relative_error(const std::vector<double>& got, const std::vector<double>& want,
                          double floor = 1.0);

}  // namespace issrsim::core
