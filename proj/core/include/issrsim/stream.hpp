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
 * @file stream.hpp
 * @brief Stream semantic register units.
 *
 * A StreamUnit couples an address generator to a data FIFO that the FPU
 * reads (READ jobs) or writes (WRITE jobs) through an architectural FP
 * register. In affine mode four nested loop counters drive a shared
 * pointer. In indirect mode the unit first streams 64-bit index words into
 * an index FIFO, serializes 16- or 32-bit indices out of them and emits
 * `data_base + (index << (3 + shift))`. Index fetches and data accesses
 * share the unit's single memory port through a round-robin multiplexer.
 */

#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "issrsim/isa.hpp"
#include "issrsim/mem.hpp"

namespace issrsim::stream {

enum class Mode : std::uint8_t { kAffine, kIndirect };
enum class Direction : std::uint8_t { kRead, kWrite };

inline constexpr int kLoops = 4;

struct StreamJob {
  Mode mode = Mode::kAffine;
  Direction direction = Direction::kRead;
  // Affine: element counts per loop, innermost first. Indirect: bounds[0]
  // is the number of indices.
  std::array<std::uint64_t, kLoops> bounds{1, 1, 1, 1};
  // Bytes added to the pointer when the corresponding loop advances.
  std::array<std::int64_t, kLoops> strides{0, 0, 0, 0};
  std::uint64_t index_base = 0;
  int index_width = 32;
  std::uint64_t data_base = 0;
  unsigned shift = 0;
  std::uint32_t repeat = 1;

  std::uint64_t element_count() const;
  bool operator==(const StreamJob&) const = default;
};

/// IDXCFG bit packing: bit 0 mode, bit 1 width (0: 32, 1: 16), bit 2
/// direction, bits 7:3 extra shift.
std::uint64_t pack_idxcfg(Mode mode, int index_width, Direction direction, unsigned shift);
/// Decodes the configuration register file of one unit into a job.
StreamJob job_from_registers(const std::array<std::uint64_t, isa::kNumStreamCfgRegs>& regs);
/// Register values that describe `job` (inverse of job_from_registers).
std::array<std::uint64_t, isa::kNumStreamCfgRegs> registers_from_job(const StreamJob& job);

/// Converts per-loop strides measured from the loop origin into the
/// relative strides the hardware adds when a loop advances.
std::array<std::int64_t, kLoops> relative_strides(const std::array<std::uint64_t, kLoops>& bounds,
                                                  const std::array<std::int64_t, kLoops>& absolute);

/// Odometer over up to four nested loops sharing one pointer.
class AffineIterator {
 public:
  explicit AffineIterator(const StreamJob& job);

  /// Address of the next element, or nullopt once all elements were emitted.
  std::optional<std::uint64_t> next();
  std::optional<std::uint64_t> peek() const;
  std::uint64_t emitted() const { return emitted_; }
  bool exhausted() const { return emitted_ >= total_; }

 private:
  std::array<std::uint64_t, kLoops> bounds_;
  std::array<std::int64_t, kLoops> strides_;
  std::array<std::uint64_t, kLoops> counters_{};
  std::uint64_t pointer_;
  std::uint64_t emitted_ = 0;
  std::uint64_t total_;
};

/// Little-endian W-bit lanes of `word` from lane `start_offset` on, clipped
/// to at most `remaining` lanes.
std::vector<std::uint32_t> serialize_indices(std::uint64_t word, int index_width, int start_offset,
                                             std::uint64_t remaining = UINT64_MAX);

enum class Grant : std::uint8_t { kNone, kIndex, kData };

/// Round-robin multiplexer between index fetches and data accesses. The
/// state only changes on contested cycles.
class PortArbiter {
 public:
  Grant peek(bool index_pending, bool data_pending) const;
  Grant arbitrate(bool index_pending, bool data_pending);
  bool prefers_data() const { return prefer_data_; }

 private:
  bool prefer_data_ = true;
};

/// Indirect-mode address generator: index-word prefetch with an
/// outstanding-request counter, index serializer and offset adder.
class IndirectGenerator {
 public:
  IndirectGenerator(const StreamJob& job, int index_fifo_words, unsigned address_bits);

  /// True while index words remain and FIFO space exceeds outstanding fetches.
  bool wants_index_fetch() const;
  std::uint64_t next_index_word_address() const;
  void index_fetch_issued();
  void index_word_arrived(std::uint64_t word, std::uint64_t ready_cycle);

  /// True if a serialized index is available for emission at `cycle`.
  bool has_index(std::uint64_t cycle) const;
  std::uint32_t current_index() const;
  /// data_base + (index << (3 + shift)); throws SimulationFault if the
  /// address does not fit the configured address width.
  std::uint64_t current_data_address(std::uint64_t cycle) const;
  void advance();

  bool exhausted() const { return emitted_ >= count_; }
  std::uint64_t emitted() const { return emitted_; }
  std::uint64_t words_requested() const { return words_requested_; }
  std::uint64_t total_words() const { return total_words_; }
  int fifo_occupancy() const { return static_cast<int>(fifo_.size()); }
  int outstanding() const { return outstanding_; }
  int short_offset() const { return lane_; }

 private:
  struct Word {
    std::uint64_t value;
    std::uint64_t ready_cycle;
  };

  std::uint64_t data_base_;
  unsigned shift_;
  int width_;
  int lanes_per_word_;
  std::uint64_t count_;
  std::uint64_t first_word_address_;
  std::uint64_t total_words_;
  int capacity_;
  unsigned address_bits_;

  std::deque<Word> fifo_;
  int outstanding_ = 0;
  std::uint64_t words_requested_ = 0;
  int lane_;  // short-offset counter
  std::uint64_t emitted_ = 0;
};

struct StreamUnitConfig {
  bool indirection = false;
  int data_fifo_depth = 5;
  int index_fifo_words = 4;
  unsigned address_bits = 18;
};

struct StreamUnitStats {
  std::uint64_t jobs = 0;
  std::uint64_t data_accesses = 0;
  std::uint64_t index_fetches = 0;
  std::uint64_t contested_cycles = 0;
};

/// A request the unit wants to place on its memory port this cycle.
struct Proposal {
  mem::Request request;
  Grant kind = Grant::kNone;
};

class StreamUnit {
 public:
  StreamUnit(int id, const StreamUnitConfig& config);

  int id() const { return id_; }
  const StreamUnitConfig& config() const { return config_; }

  // Configuration interface.
  /// Writes a shadow register. Writing DATA_BASE launches the shadow job;
  /// returns false (and changes nothing) if a job runs and another one is
  /// already waiting, in which case the writer must retry.
  bool write_register(int reg, std::uint64_t value, std::uint64_t cycle);
  std::uint64_t read_register(int reg) const;
  /// Starts `job` directly, bypassing the register file.
  bool launch(const StreamJob& job, std::uint64_t cycle);

  // Register-file side, used by the FPU.
  bool can_pop(std::uint64_t cycle, int count = 1) const;
  double pop(std::uint64_t cycle);
  bool can_reserve(int count = 1) const;
  /// Reserves a FIFO slot for a value the FPU will produce.
  void reserve();
  /// Fills the oldest unfilled reservation.
  void fill(double value, std::uint64_t ready_cycle);

  // Memory side.
  /// Per-cycle bookkeeping; must run before propose().
  void begin_cycle(std::uint64_t cycle);
  std::optional<Proposal> propose(std::uint64_t cycle) const;
  /// The proposal returned by propose() was placed on the port.
  void presented(const Proposal& proposal, std::uint64_t cycle);
  /// The presented request was granted with `rdata`.
  void granted(std::uint64_t rdata, std::uint64_t cycle);

  bool active() const { return active_.has_value(); }
  bool has_pending() const { return pending_.has_value(); }
  bool idle() const { return !active_ && !pending_; }
  /// True when the unit has nothing left to write to memory.
  bool writes_drained() const;
  const std::optional<StreamJob>& active_job() const { return active_; }
  const StreamUnitStats& stats() const { return stats_; }
  int fifo_occupancy() const { return static_cast<int>(fifo_.size()); }
  const PortArbiter& arbiter() const { return arbiter_; }
  const IndirectGenerator* indirect() const { return indirect_ ? &*indirect_ : nullptr; }

 private:
  struct Entry {
    double value = 0.0;
    std::uint64_t ready_cycle = 0;
    std::uint32_t uses_left = 1;
    bool valid = false;
  };

  void activate(const StreamJob& job, std::uint64_t cycle);
  bool job_done() const;
  bool data_pending(std::uint64_t cycle) const;
  std::uint64_t data_address(std::uint64_t cycle) const;

  int id_;
  StreamUnitConfig config_;
  std::array<std::uint64_t, isa::kNumStreamCfgRegs> shadow_{};
  std::optional<StreamJob> active_;
  std::optional<StreamJob> pending_;
  std::uint64_t start_cycle_ = 0;

  std::optional<AffineIterator> affine_;
  std::optional<IndirectGenerator> indirect_;
  PortArbiter arbiter_;
  std::deque<Entry> fifo_;
  std::optional<Grant> in_flight_;
  std::uint64_t elements_done_ = 0;  // stored (WRITE) or requested (READ)
  StreamUnitStats stats_;
};

struct StandaloneRun {
  std::vector<double> values;              // READ: elements in pop order
  std::vector<std::uint64_t> data_cycles;  // grant cycle of every data access
  std::uint64_t cycles = 0;
  mem::ByteStore image{0, 0};
};

/// Runs `job` on a lone unit attached to a single-cycle memory holding
/// `image`. A READ job is consumed one element per cycle as soon as one is
/// ready; a WRITE job is fed from `values` as fast as the FIFO allows.
StandaloneRun run_standalone(const StreamJob& job, const StreamUnitConfig& config,
                             const mem::ByteStore& image, const std::vector<double>& values = {});

}  // namespace issrsim::stream
