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
 * @file mem.hpp
 * @brief Data memory models: flat byte stores, single-cycle ideal memory,
 *        the banked TCDM with per-bank round-robin arbitration, and the
 *        cluster DMA engine.
 *
 * Every model is advanced by one clock owner in two phases per cycle:
 * requesters present requests on their Port, then tick() grants and
 * performs them. A granted read returns its data to the owner in the same
 * tick; owners treat it as arriving in the next cycle.
 */

#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace issrsim::mem {

enum class AccessKind : std::uint8_t { kRead, kWrite };

struct Request {
  std::uint64_t address = 0;
  std::uint8_t size = 8;  // 2, 4 or 8 bytes, naturally aligned
  AccessKind kind = AccessKind::kRead;
  std::uint64_t wdata = 0;
};

/// Flat little-endian byte store covering [base, base + size).
class ByteStore {
 public:
  ByteStore(std::uint64_t base, std::uint64_t size);

  std::uint64_t base() const { return base_; }
  std::uint64_t size() const { return bytes_.size(); }
  bool contains(std::uint64_t address, std::uint64_t length) const;

  std::uint64_t read(std::uint64_t address, unsigned size) const;
  void write(std::uint64_t address, unsigned size, std::uint64_t value);
  double read_f64(std::uint64_t address) const;
  void write_f64(std::uint64_t address, double value);
  void read_bytes(std::uint64_t address, std::span<std::uint8_t> out) const;
  void write_bytes(std::uint64_t address, std::span<const std::uint8_t> data);

  std::span<const std::uint8_t> bytes() const { return bytes_; }

  /// Flat binary image of the whole store; the base address is not encoded.
  void dump_image(const std::string& path) const;
  /// Loads a flat binary image at `address`.
  void load_image(const std::string& path, std::uint64_t address);

  bool operator==(const ByteStore& other) const = default;

 private:
  std::uint64_t base_;
  std::vector<std::uint8_t> bytes_;
};

struct PortStats {
  std::uint64_t granted = 0;
  std::uint64_t conflict_cycles = 0;  // cycles a request waited for a grant
};

/// One memory port. A presented request stays on the port until the memory
/// grants it; the owner then collects the result and retires it.
class Port {
 public:
  bool busy() const { return request_.has_value(); }
  void present(const Request& request);
  const std::optional<Request>& request() const { return request_; }

  bool granted() const { return granted_; }
  std::uint64_t rdata() const { return rdata_; }
  /// Clears a granted request so the port can take a new one.
  void retire();

  const PortStats& stats() const { return stats_; }

  // Memory side.
  void grant(std::uint64_t rdata);
  void note_conflict() { ++stats_.conflict_cycles; }

 private:
  std::optional<Request> request_;
  bool granted_ = false;
  std::uint64_t rdata_ = 0;
  PortStats stats_;
};

/// Granted access as recorded by the optional request log.
struct GrantRecord {
  std::uint64_t cycle = 0;
  int requester = 0;
  std::uint64_t address = 0;
  std::uint8_t size = 0;
  bool write = false;
  std::uint64_t data = 0;  // little-endian bytes of a write
};

/// Replays the writes of `log` onto `image` in grant order.
void replay_writes(ByteStore& image, std::span<const GrantRecord> log);

/// Throws SimulationFault unless the access is naturally aligned and in
/// bounds of `store`.
void check_access(const ByteStore& store, std::uint64_t address, unsigned size,
                  std::uint64_t cycle);

class DataMemory {
 public:
  virtual ~DataMemory() = default;
  virtual int num_ports() const = 0;
  virtual Port& port(int index) = 0;
  virtual const Port& port(int index) const = 0;
  virtual void tick(std::uint64_t cycle) = 0;
  virtual ByteStore& store() = 0;
  virtual const ByteStore& store() const = 0;

  void enable_log(bool on) { logging_ = on; }
  const std::vector<GrantRecord>& log() const { return log_; }

 protected:
  void record(std::uint64_t cycle, int requester, const Request& r);
  void record_raw(const GrantRecord& record) {
    if (logging_) log_.push_back(record);
  }

 private:
  bool logging_ = false;
  std::vector<GrantRecord> log_;
};

/// Single-cycle memory: every port is granted every cycle. Same-cycle
/// accesses are performed in port order.
class IdealMemory final : public DataMemory {
 public:
  IdealMemory(std::uint64_t base, std::uint64_t size, int ports);

  int num_ports() const override { return static_cast<int>(ports_.size()); }
  Port& port(int index) override { return ports_.at(static_cast<std::size_t>(index)); }
  const Port& port(int index) const override { return ports_.at(static_cast<std::size_t>(index)); }
  void tick(std::uint64_t cycle) override;
  ByteStore& store() override { return store_; }
  const ByteStore& store() const override { return store_; }

 private:
  ByteStore store_;
  std::deque<Port> ports_;
};

struct TcdmConfig {
  std::uint64_t base = 0;
  int banks = 32;
  std::uint64_t bank_bytes = 8 * 1024;
  int word_bytes = 8;
  /// DMA words win contested banks outright; otherwise the DMA takes part
  /// in the round robin as the last requester.
  bool dma_priority = true;
};

/// One word-sized slice of a DMA beat presented to the TCDM.
struct DmaWord {
  std::uint64_t address = 0;  // byte address of the first byte touched
  std::uint8_t length = 0;    // bytes within one bank word
  bool write = false;
  std::uint64_t wdata = 0;
  bool granted = false;
  std::uint64_t rdata = 0;
};

/// Word-interleaved multi-banked scratchpad. Each bank serves one access
/// per cycle; contested banks pick a winner round-robin over requesters
/// (ports first, the DMA last) and rotate priority past the winner. With
/// dma_priority the DMA word wins and the ports keep their rotation.
class Tcdm final : public DataMemory {
 public:
  Tcdm(const TcdmConfig& config, int ports);

  int num_ports() const override { return static_cast<int>(ports_.size()); }
  Port& port(int index) override { return ports_.at(static_cast<std::size_t>(index)); }
  const Port& port(int index) const override { return ports_.at(static_cast<std::size_t>(index)); }
  void tick(std::uint64_t cycle) override;
  ByteStore& store() override { return store_; }
  const ByteStore& store() const override { return store_; }

  const TcdmConfig& config() const { return config_; }
  int bank_of(std::uint64_t address) const;

  /// DMA words competing in the next tick(); grant flags are filled in.
  std::vector<DmaWord>& dma_words() { return dma_words_; }

  std::uint64_t bank_conflicts() const { return bank_conflicts_; }
  std::uint64_t words_served() const { return words_served_; }

 private:
  TcdmConfig config_;
  ByteStore store_;
  std::deque<Port> ports_;
  std::vector<int> rr_pointer_;
  std::vector<DmaWord> dma_words_;
  std::uint64_t bank_conflicts_ = 0;
  std::uint64_t words_served_ = 0;
};

enum class Space : std::uint8_t { kTcdm, kMain };

/// 2D transfer: `reps` rows of `inner_bytes`, strided on each side.
struct DmaDescriptor {
  Space src_space = Space::kMain;
  std::uint64_t src = 0;
  Space dst_space = Space::kTcdm;
  std::uint64_t dst = 0;
  std::uint64_t inner_bytes = 0;
  std::uint64_t reps = 1;
  std::uint64_t src_stride = 0;
  std::uint64_t dst_stride = 0;

  std::uint64_t total_bytes() const { return inner_bytes * reps; }
};

struct DmaConfig {
  std::uint64_t beat_bytes = 64;
  std::uint64_t startup_cycles = 4;
};

struct DmaStats {
  std::uint64_t transfers = 0;
  std::uint64_t bytes = 0;
  std::uint64_t beats = 0;
  std::uint64_t busy_cycles = 0;
  std::uint64_t contention_cycles = 0;  // beat cycles that lost at least one bank
};

/// 512-bit DMA between main memory and the TCDM. Transfers run one at a
/// time in submission order: a fixed startup, then one beat per cycle. A
/// beat never crosses a beat-sized boundary of the TCDM-side address, so it
/// touches at most beat_bytes / 8 banks, and completes once all of its
/// words were granted.
class DmaEngine {
 public:
  DmaEngine(Tcdm& tcdm, ByteStore& main, const DmaConfig& config = {});

  /// Queues a transfer; returns its id. Throws ConfigError on descriptors
  /// that are out of bounds or do not cross between the two spaces.
  int submit(const DmaDescriptor& descriptor, std::uint64_t cycle);
  bool done(int id) const;
  /// First cycle at which transfer `id` is observed complete.
  std::optional<std::uint64_t> completion_cycle(int id) const;
  bool idle() const { return !active_ && queue_.empty(); }

  /// Phase A: presents the words of the current beat to the TCDM.
  void request(std::uint64_t cycle);
  /// Phase C: consumes the TCDM grants.
  void complete(std::uint64_t cycle);

  const DmaStats& stats() const { return stats_; }

 private:
  struct Active {
    int id = 0;
    DmaDescriptor desc;
    std::uint64_t start_cycle = 0;
    std::uint64_t rep = 0;
    std::uint64_t offset = 0;
  };

  void start_next(std::uint64_t cycle);
  void build_beat();

  Tcdm& tcdm_;
  ByteStore& main_;
  DmaConfig config_;
  std::deque<std::pair<int, DmaDescriptor>> queue_;
  std::optional<Active> active_;
  std::vector<DmaWord> beat_;  // words of the current beat not yet granted
  std::uint64_t beat_bytes_ = 0;
  std::uint64_t beat_tcdm_start_ = 0;
  std::uint64_t beat_main_start_ = 0;
  std::vector<std::optional<std::uint64_t>> completion_;
  DmaStats stats_;
};

/// Runs one transfer on an otherwise idle TCDM and returns its completion
/// cycle (the transfer is submitted at cycle 0).
std::uint64_t run_dma_standalone(Tcdm& tcdm, ByteStore& main, const DmaDescriptor& descriptor,
                                 const DmaConfig& config = {});

}  // namespace issrsim::mem
