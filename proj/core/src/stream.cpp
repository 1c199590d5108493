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

#include "issrsim/stream.hpp"

#include <algorithm>
#include <bit>
#include <sstream>

#include "issrsim/error.hpp"

namespace issrsim::stream {

namespace {

std::string hex(std::uint64_t value) {
  std::ostringstream os;
  os << "0x" << std::hex << value;
  return os.str();
}

}  // namespace

std::uint64_t StreamJob::element_count() const {
  if (mode == Mode::kIndirect) return bounds[0];
  std::uint64_t n = 1;
  for (auto b : bounds) n *= b;
  return n;
}

std::uint64_t pack_idxcfg(Mode mode, int index_width, Direction direction, unsigned shift) {
  std::uint64_t v = 0;
  if (mode == Mode::kIndirect) v |= 1u;
  if (index_width == 16) v |= 2u;
  if (direction == Direction::kWrite) v |= 4u;
  v |= static_cast<std::uint64_t>(shift & 0x1fu) << 3;
  return v;
}

StreamJob job_from_registers(const std::array<std::uint64_t, isa::kNumStreamCfgRegs>& regs) {
  StreamJob job;
  job.repeat = static_cast<std::uint32_t>(regs[isa::kCfgRepeat]);
  for (int l = 0; l < kLoops; ++l) {
    job.bounds[l] = regs[isa::kCfgBound0 + l];
    job.strides[l] = static_cast<std::int64_t>(regs[isa::kCfgStride0 + l]);
  }
  const std::uint64_t cfg = regs[isa::kCfgIdxCfg];
  job.mode = (cfg & 1u) ? Mode::kIndirect : Mode::kAffine;
  job.index_width = (cfg & 2u) ? 16 : 32;
  job.direction = (cfg & 4u) ? Direction::kWrite : Direction::kRead;
  job.shift = static_cast<unsigned>((cfg >> 3) & 0x1fu);
  job.index_base = regs[isa::kCfgIdxBase];
  job.data_base = regs[isa::kCfgDataBase];
  return job;
}

std::array<std::uint64_t, isa::kNumStreamCfgRegs> registers_from_job(const StreamJob& job) {
  std::array<std::uint64_t, isa::kNumStreamCfgRegs> regs{};
  regs[isa::kCfgRepeat] = job.repeat;
  for (int l = 0; l < kLoops; ++l) {
    regs[isa::kCfgBound0 + l] = job.bounds[l];
    regs[isa::kCfgStride0 + l] = static_cast<std::uint64_t>(job.strides[l]);
  }
  regs[isa::kCfgIdxCfg] = pack_idxcfg(job.mode, job.index_width, job.direction, job.shift);
  regs[isa::kCfgIdxBase] = job.index_base;
  regs[isa::kCfgDataBase] = job.data_base;
  return regs;
}

std::array<std::int64_t, kLoops> relative_strides(const std::array<std::uint64_t, kLoops>& bounds,
                                                  const std::array<std::int64_t, kLoops>& absolute) {
  std::array<std::int64_t, kLoops> rel{};
  std::int64_t travelled = 0;
  for (int l = 0; l < kLoops; ++l) {
    rel[l] = absolute[l] - travelled;
    if (bounds[l] > 0) travelled += static_cast<std::int64_t>(bounds[l] - 1) * absolute[l];
  }
  return rel;
}

// ---------------------------------------------------------------------------
// AffineIterator

AffineIterator::AffineIterator(const StreamJob& job)
    : bounds_(job.bounds), strides_(job.strides), pointer_(job.data_base) {
  total_ = 1;
  for (auto b : bounds_) total_ *= b;
}

std::optional<std::uint64_t> AffineIterator::peek() const {
  if (exhausted()) return std::nullopt;
  return pointer_;
}

std::optional<std::uint64_t> AffineIterator::next() {
  if (exhausted()) return std::nullopt;
  const std::uint64_t address = pointer_;
  ++emitted_;
  for (int l = 0; l < kLoops; ++l) {
    if (++counters_[l] < bounds_[l]) {
      pointer_ += static_cast<std::uint64_t>(strides_[l]);
      break;
    }
    counters_[l] = 0;
  }
  return address;
}

// ---------------------------------------------------------------------------
// Index serializer and port arbiter

std::vector<std::uint32_t> serialize_indices(std::uint64_t word, int index_width, int start_offset,
                                             std::uint64_t remaining) {
  std::vector<std::uint32_t> out;
  const int lanes = 64 / index_width;
  const std::uint64_t mask = index_width == 32 ? 0xffffffffull : 0xffffull;
  for (int lane = start_offset; lane < lanes && out.size() < remaining; ++lane) {
    out.push_back(static_cast<std::uint32_t>((word >> (lane * index_width)) & mask));
  }
  return out;
}

Grant PortArbiter::peek(bool index_pending, bool data_pending) const {
  if (index_pending && data_pending) return prefer_data_ ? Grant::kData : Grant::kIndex;
  if (data_pending) return Grant::kData;
  if (index_pending) return Grant::kIndex;
  return Grant::kNone;
}

Grant PortArbiter::arbitrate(bool index_pending, bool data_pending) {
  const Grant g = peek(index_pending, data_pending);
  if (index_pending && data_pending) prefer_data_ = g != Grant::kData;
  return g;
}

// ---------------------------------------------------------------------------
// IndirectGenerator

IndirectGenerator::IndirectGenerator(const StreamJob& job, int index_fifo_words,
                                     unsigned address_bits)
    : data_base_(job.data_base),
      shift_(job.shift),
      width_(job.index_width),
      lanes_per_word_(64 / job.index_width),
      count_(job.bounds[0]),
      first_word_address_(job.index_base & ~std::uint64_t{7}),
      capacity_(index_fifo_words),
      address_bits_(address_bits),
      lane_(static_cast<int>((job.index_base & 7u) / static_cast<unsigned>(job.index_width / 8))) {
  const std::uint64_t lanes = static_cast<std::uint64_t>(lane_) + count_;
  total_words_ = count_ == 0 ? 0 : (lanes + lanes_per_word_ - 1) / lanes_per_word_;
}

bool IndirectGenerator::wants_index_fetch() const {
  return words_requested_ < total_words_ &&
         capacity_ - static_cast<int>(fifo_.size()) - outstanding_ > 0;
}

std::uint64_t IndirectGenerator::next_index_word_address() const {
  return first_word_address_ + 8 * words_requested_;
}

void IndirectGenerator::index_fetch_issued() {
  ++outstanding_;
  ++words_requested_;
}

void IndirectGenerator::index_word_arrived(std::uint64_t word, std::uint64_t ready_cycle) {
  --outstanding_;
  fifo_.push_back({word, ready_cycle});
}

bool IndirectGenerator::has_index(std::uint64_t cycle) const {
  return !exhausted() && !fifo_.empty() && fifo_.front().ready_cycle <= cycle;
}

std::uint32_t IndirectGenerator::current_index() const {
  const std::uint64_t mask = width_ == 32 ? 0xffffffffull : 0xffffull;
  return static_cast<std::uint32_t>((fifo_.front().value >> (lane_ * width_)) & mask);
}

std::uint64_t IndirectGenerator::current_data_address(std::uint64_t cycle) const {
  const std::uint64_t offset = static_cast<std::uint64_t>(current_index()) << (3 + shift_);
  const std::uint64_t address = data_base_ + offset;
  if (address_bits_ < 64 && (address >> address_bits_) != 0) {
    throw SimulationFault(cycle, -1,
                          "stream fault: data address " + hex(address) + " exceeds " +
                              std::to_string(address_bits_) + "-bit address width");
  }
  return address;
}

void IndirectGenerator::advance() {
  ++emitted_;
  if (++lane_ == lanes_per_word_ || exhausted()) {
    fifo_.pop_front();
    lane_ = 0;
  }
}

// ---------------------------------------------------------------------------
// StreamUnit

StreamUnit::StreamUnit(int id, const StreamUnitConfig& config)
    : id_(id), config_(config), shadow_(registers_from_job(StreamJob{})) {}

bool StreamUnit::write_register(int reg, std::uint64_t value, std::uint64_t cycle) {
  if (reg < 0 || reg >= isa::kNumStreamCfgRegs) {
    throw SimulationFault(cycle, -1, "stream " + std::to_string(id_) + ": bad config register");
  }
  if (reg == isa::kCfgStatus) return true;
  if (reg != isa::kCfgDataBase) {
    shadow_[static_cast<std::size_t>(reg)] = value;
    return true;
  }
  auto regs = shadow_;
  regs[isa::kCfgDataBase] = value;
  if (!launch(job_from_registers(regs), cycle)) return false;
  shadow_[isa::kCfgDataBase] = value;
  return true;
}

std::uint64_t StreamUnit::read_register(int reg) const {
  if (reg == isa::kCfgStatus) {
    return (active_ ? 1u : 0u) | (pending_ ? 2u : 0u);
  }
  return shadow_.at(static_cast<std::size_t>(reg));
}

bool StreamUnit::launch(const StreamJob& job, std::uint64_t cycle) {
  const std::string who = "stream " + std::to_string(id_) + ": ";
  if (job.mode == Mode::kIndirect && !config_.indirection) {
    throw SimulationFault(cycle, -1, who + "indirect job on a unit without indirection");
  }
  if (job.index_width != 16 && job.index_width != 32) {
    throw SimulationFault(cycle, -1, who + "index width must be 16 or 32");
  }
  if (job.mode == Mode::kIndirect &&
      job.index_base % static_cast<std::uint64_t>(job.index_width / 8) != 0) {
    throw SimulationFault(cycle, -1, who + "index base " + hex(job.index_base) + " misaligned");
  }
  if (job.repeat == 0) throw SimulationFault(cycle, -1, who + "repeat count must be >= 1");
  if (active_ && pending_) return false;
  if (active_) {
    pending_ = job;
  } else {
    activate(job, cycle);
  }
  return true;
}

void StreamUnit::activate(const StreamJob& job, std::uint64_t cycle) {
  active_ = job;
  start_cycle_ = cycle + 1;
  elements_done_ = 0;
  affine_.reset();
  indirect_.reset();
  if (job.mode == Mode::kAffine) {
    affine_.emplace(job);
  } else {
    indirect_.emplace(job, config_.index_fifo_words, config_.address_bits);
  }
  ++stats_.jobs;
}

bool StreamUnit::job_done() const {
  if (!active_) return false;
  if (active_->direction == Direction::kWrite) {
    return elements_done_ >= active_->element_count() && !in_flight_;
  }
  const bool exhausted = affine_ ? affine_->exhausted() : indirect_->exhausted();
  return exhausted && !in_flight_ && fifo_.empty();
}

bool StreamUnit::can_pop(std::uint64_t cycle, int count) const {
  if (static_cast<int>(fifo_.size()) < count) return false;
  // Entries before the last one needed must be ready, and multiple pops of
  // one repeated entry count against its remaining uses.
  int needed = count;
  for (const auto& e : fifo_) {
    if (!e.valid || e.ready_cycle > cycle) return false;
    needed -= static_cast<int>(e.uses_left);
    if (needed <= 0) return true;
  }
  return false;
}

double StreamUnit::pop(std::uint64_t cycle) {
  if (!can_pop(cycle)) {
    throw SimulationFault(cycle, -1, "stream " + std::to_string(id_) + ": FIFO underflow");
  }
  Entry& e = fifo_.front();
  const double value = e.value;
  if (--e.uses_left == 0) fifo_.pop_front();
  return value;
}

bool StreamUnit::can_reserve(int count) const {
  return static_cast<int>(fifo_.size()) + count <= config_.data_fifo_depth;
}

void StreamUnit::reserve() {
  if (!can_reserve()) throw SimulationFault(0, -1, "stream " + std::to_string(id_) + ": FIFO overflow");
  fifo_.push_back(Entry{});
}

void StreamUnit::fill(double value, std::uint64_t ready_cycle) {
  for (auto& e : fifo_) {
    if (!e.valid) {
      e.value = value;
      e.ready_cycle = ready_cycle;
      e.valid = true;
      return;
    }
  }
  throw SimulationFault(ready_cycle, -1, "stream " + std::to_string(id_) + ": fill without reservation");
}

void StreamUnit::begin_cycle(std::uint64_t cycle) {
  if (active_ && job_done()) {
    active_.reset();
    affine_.reset();
    indirect_.reset();
  }
  if (!active_ && pending_) {
    const StreamJob next = *pending_;
    pending_.reset();
    activate(next, cycle);
  }
}

bool StreamUnit::data_pending(std::uint64_t cycle) const {
  const bool has_address = affine_ ? !affine_->exhausted() : indirect_->has_index(cycle);
  if (!has_address) return false;
  if (active_->direction == Direction::kRead) {
    return static_cast<int>(fifo_.size()) < config_.data_fifo_depth;
  }
  return !fifo_.empty() && fifo_.front().valid && fifo_.front().ready_cycle <= cycle;
}

std::uint64_t StreamUnit::data_address(std::uint64_t cycle) const {
  return affine_ ? *affine_->peek() : indirect_->current_data_address(cycle);
}

std::optional<Proposal> StreamUnit::propose(std::uint64_t cycle) const {
  if (!active_ || in_flight_ || cycle < start_cycle_) return std::nullopt;
  const bool ip = indirect_ && indirect_->wants_index_fetch();
  const bool dp = data_pending(cycle);
  const Grant g = arbiter_.peek(ip, dp);
  Proposal p;
  p.kind = g;
  switch (g) {
    case Grant::kNone:
      return std::nullopt;
    case Grant::kIndex:
      p.request = {indirect_->next_index_word_address(), 8, mem::AccessKind::kRead, 0};
      break;
    case Grant::kData:
      p.request.address = data_address(cycle);
      p.request.size = 8;
      if (active_->direction == Direction::kWrite) {
        p.request.kind = mem::AccessKind::kWrite;
        p.request.wdata = std::bit_cast<std::uint64_t>(fifo_.front().value);
      }
      break;
  }
  return p;
}

void StreamUnit::presented(const Proposal& proposal, std::uint64_t cycle) {
  const bool ip = indirect_ && indirect_->wants_index_fetch();
  const bool dp = data_pending(cycle);
  if (ip && dp) ++stats_.contested_cycles;
  arbiter_.arbitrate(ip, dp);
  in_flight_ = proposal.kind;
  if (proposal.kind == Grant::kIndex) {
    indirect_->index_fetch_issued();
  } else if (affine_) {
    affine_->next();
  } else {
    indirect_->advance();
  }
}

void StreamUnit::granted(std::uint64_t rdata, std::uint64_t cycle) {
  const Grant kind = *in_flight_;
  in_flight_.reset();
  if (kind == Grant::kIndex) {
    ++stats_.index_fetches;
    indirect_->index_word_arrived(rdata, cycle + 1);
    return;
  }
  ++stats_.data_accesses;
  ++elements_done_;
  if (active_->direction == Direction::kRead) {
    Entry e;
    e.value = std::bit_cast<double>(rdata);
    e.ready_cycle = cycle + 1;
    e.uses_left = active_->repeat;
    e.valid = true;
    fifo_.push_back(e);
  } else {
    fifo_.pop_front();
  }
}

bool StreamUnit::writes_drained() const {
  if (pending_ && pending_->direction == Direction::kWrite) return false;
  if (!active_ || active_->direction != Direction::kWrite) return true;
  return job_done();
}

StandaloneRun run_standalone(const StreamJob& job, const StreamUnitConfig& config,
                             const mem::ByteStore& image, const std::vector<double>& values) {
  const bool read = job.direction == Direction::kRead;
  const std::uint64_t elements = job.element_count();
  if (!read && values.size() < elements) throw ConfigError("write job needs one value per element");
  mem::IdealMemory memory(image.base(), image.size(), 1);
  memory.store() = image;
  mem::Port& port = memory.port(0);
  StreamUnit unit(0, config);
  unit.launch(job, 0);

  StandaloneRun run;
  std::optional<Proposal> presented;
  std::size_t fed = 0;
  const std::uint64_t limit = 64 * (elements + 16) * std::max<std::uint64_t>(job.repeat, 1);
  for (std::uint64_t t = 0;; ++t) {
    unit.begin_cycle(t);
    if (read) {
      if (unit.can_pop(t)) run.values.push_back(unit.pop(t));
    } else if (fed < elements && unit.can_reserve()) {
      unit.reserve();
      unit.fill(values[fed++], t);
    }
    if (!presented) {
      if (auto p = unit.propose(t)) {
        port.present(p->request);
        unit.presented(*p, t);
        presented = p;
      }
    }
    memory.tick(t);
    if (presented && port.granted()) {
      if (presented->kind == Grant::kData) run.data_cycles.push_back(t);
      unit.granted(port.rdata(), t);
      port.retire();
      presented.reset();
    }
    if (unit.idle() && unit.fifo_occupancy() == 0 && !presented) {
      run.cycles = t + 1;
      break;
    }
    if (t >= limit) throw SimulationFault(t, -1, "standalone stream did not finish");
  }
  run.image = memory.store();
  return run;
}

}  // namespace issrsim::stream
