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

#include "issrsim/mem.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "issrsim/error.hpp"

namespace issrsim::mem {

// ---------------------------------------------------------------------------
// ByteStore

ByteStore::ByteStore(std::uint64_t base, std::uint64_t size) : base_(base), bytes_(size, 0) {}

bool ByteStore::contains(std::uint64_t address, std::uint64_t length) const {
  return address >= base_ && length <= bytes_.size() && address - base_ <= bytes_.size() - length;
}

std::uint64_t ByteStore::read(std::uint64_t address, unsigned size) const {
  if (!contains(address, size)) throw Error("read outside of store");
  std::uint64_t value = 0;
  std::memcpy(&value, bytes_.data() + (address - base_), size);
  return value;
}

void ByteStore::write(std::uint64_t address, unsigned size, std::uint64_t value) {
  if (!contains(address, size)) throw Error("write outside of store");
  std::memcpy(bytes_.data() + (address - base_), &value, size);
}

double ByteStore::read_f64(std::uint64_t address) const {
  return std::bit_cast<double>(read(address, 8));
}

void ByteStore::write_f64(std::uint64_t address, double value) {
  write(address, 8, std::bit_cast<std::uint64_t>(value));
}

void ByteStore::read_bytes(std::uint64_t address, std::span<std::uint8_t> out) const {
  if (!contains(address, out.size())) throw Error("read outside of store");
  std::copy_n(bytes_.begin() + static_cast<std::ptrdiff_t>(address - base_), out.size(), out.begin());
}

void ByteStore::write_bytes(std::uint64_t address, std::span<const std::uint8_t> data) {
  if (!contains(address, data.size())) throw Error("write outside of store");
  std::copy(data.begin(), data.end(), bytes_.begin() + static_cast<std::ptrdiff_t>(address - base_));
}

void ByteStore::dump_image(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes_.data()), static_cast<std::streamsize>(bytes_.size()));
}

void ByteStore::load_image(const std::string& path, std::uint64_t address) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  const std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                       std::istreambuf_iterator<char>());
  write_bytes(address, data);
}

// ---------------------------------------------------------------------------
// Port

void Port::present(const Request& request) {
  if (request_) throw Error("port already holds a request");
  request_ = request;
  granted_ = false;
}

void Port::retire() {
  request_.reset();
  granted_ = false;
}

void Port::grant(std::uint64_t rdata) {
  granted_ = true;
  rdata_ = rdata;
  ++stats_.granted;
}

// ---------------------------------------------------------------------------

void replay_writes(ByteStore& image, std::span<const GrantRecord> log) {
  for (const auto& r : log) {
    if (r.write) image.write(r.address, r.size, r.data);
  }
}

void check_access(const ByteStore& store, std::uint64_t address, unsigned size,
                  std::uint64_t cycle) {
  if (size != 1 && size != 2 && size != 4 && size != 8) {
    throw SimulationFault(cycle, -1, "unsupported access width " + std::to_string(size));
  }
  if (address % size != 0) {
    throw SimulationFault(cycle, -1, "misaligned " + std::to_string(size) + "-byte access at 0x" +
                                         [&] {
                                           char buf[32];
                                           std::snprintf(buf, sizeof buf, "%llx",
                                                         static_cast<unsigned long long>(address));
                                           return std::string(buf);
                                         }());
  }
  if (!store.contains(address, size)) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "access out of bounds at 0x%llx",
                  static_cast<unsigned long long>(address));
    throw SimulationFault(cycle, -1, buf);
  }
}

void DataMemory::record(std::uint64_t cycle, int requester, const Request& r) {
  record_raw({.cycle = cycle,
              .requester = requester,
              .address = r.address,
              .size = r.size,
              .write = r.kind == AccessKind::kWrite,
              .data = r.wdata});
}

namespace {

std::uint64_t perform(ByteStore& store, const Request& r, std::uint64_t cycle) {
  check_access(store, r.address, r.size, cycle);
  if (r.kind == AccessKind::kWrite) {
    store.write(r.address, r.size, r.wdata);
    return 0;
  }
  return store.read(r.address, r.size);
}

}  // namespace

// ---------------------------------------------------------------------------
// IdealMemory

IdealMemory::IdealMemory(std::uint64_t base, std::uint64_t size, int ports)
    : store_(base, size), ports_(static_cast<std::size_t>(ports)) {}

void IdealMemory::tick(std::uint64_t cycle) {
  for (std::size_t i = 0; i < ports_.size(); ++i) {
    Port& p = ports_[i];
    if (!p.busy() || p.granted()) continue;
    const Request& r = *p.request();
    const std::uint64_t data = perform(store_, r, cycle);
    record(cycle, static_cast<int>(i), r);
    p.grant(data);
  }
}

// ---------------------------------------------------------------------------
// Tcdm

Tcdm::Tcdm(const TcdmConfig& config, int ports)
    : config_(config),
      store_(config.base, config.bank_bytes * static_cast<std::uint64_t>(config.banks)),
      ports_(static_cast<std::size_t>(ports)),
      rr_pointer_(static_cast<std::size_t>(config.banks), 0) {}

int Tcdm::bank_of(std::uint64_t address) const {
  return static_cast<int>(((address - config_.base) / static_cast<std::uint64_t>(config_.word_bytes)) %
                          static_cast<std::uint64_t>(config_.banks));
}

void Tcdm::tick(std::uint64_t cycle) {
  const int num_ports = static_cast<int>(ports_.size());
  const int dma_id = num_ports;
  const int requesters = num_ports + 1;

  // Candidate requesters per bank; the DMA contributes at most one word per
  // bank because a beat never spans more words than there are banks.
  std::vector<std::vector<int>> candidates(static_cast<std::size_t>(config_.banks));
  std::vector<int> dma_word_of_bank(static_cast<std::size_t>(config_.banks), -1);
  for (int i = 0; i < num_ports; ++i) {
    const Port& p = ports_[static_cast<std::size_t>(i)];
    if (!p.busy() || p.granted()) continue;
    const Request& r = *p.request();
    check_access(store_, r.address, r.size, cycle);
    candidates[static_cast<std::size_t>(bank_of(r.address))].push_back(i);
  }
  for (std::size_t w = 0; w < dma_words_.size(); ++w) {
    DmaWord& word = dma_words_[w];
    word.granted = false;
    const auto bank = static_cast<std::size_t>(bank_of(word.address));
    if (dma_word_of_bank[bank] >= 0) throw Error("DMA beat maps two words onto one bank");
    dma_word_of_bank[bank] = static_cast<int>(w);
    candidates[bank].push_back(dma_id);
  }

  for (int bank = 0; bank < config_.banks; ++bank) {
    auto& cands = candidates[static_cast<std::size_t>(bank)];
    if (cands.empty()) continue;
    int& pointer = rr_pointer_[static_cast<std::size_t>(bank)];
    int winner = cands.front();
    if (cands.size() > 1 && config_.dma_priority && cands.back() == dma_id) {
      winner = dma_id;
      ++bank_conflicts_;
    } else if (cands.size() > 1) {
      int best_distance = requesters;
      for (int c : cands) {
        const int distance = (c - pointer + requesters) % requesters;
        if (distance < best_distance) {
          best_distance = distance;
          winner = c;
        }
      }
      pointer = (winner + 1) % requesters;
      ++bank_conflicts_;
    }
    ++words_served_;
    for (int c : cands) {
      if (c == winner || c == dma_id) continue;
      ports_[static_cast<std::size_t>(c)].note_conflict();
    }
    if (winner == dma_id) {
      DmaWord& word = dma_words_[static_cast<std::size_t>(dma_word_of_bank[static_cast<std::size_t>(bank)])];
      word.granted = true;
      if (word.write) {
        store_.write(word.address, word.length, word.wdata);
        record_raw({.cycle = cycle,
                    .requester = dma_id,
                    .address = word.address,
                    .size = word.length,
                    .write = true,
                    .data = word.wdata});
      } else {
        word.rdata = store_.read(word.address, word.length);
      }
    } else {
      Port& p = ports_[static_cast<std::size_t>(winner)];
      const Request& r = *p.request();
      const std::uint64_t data = perform(store_, r, cycle);
      record(cycle, winner, r);
      p.grant(data);
    }
  }
}

// ---------------------------------------------------------------------------
// DmaEngine

DmaEngine::DmaEngine(Tcdm& tcdm, ByteStore& main, const DmaConfig& config)
    : tcdm_(tcdm), main_(main), config_(config) {}

int DmaEngine::submit(const DmaDescriptor& d, std::uint64_t cycle) {
  if (d.src_space == d.dst_space) {
    throw ConfigError("DMA transfers must move data between main memory and the TCDM");
  }
  const auto check = [&](Space space, std::uint64_t base, std::uint64_t stride) {
    if (d.reps == 0 || d.inner_bytes == 0) return;
    const ByteStore& store = space == Space::kMain ? main_ : tcdm_.store();
    const std::uint64_t last = base + (d.reps - 1) * stride;
    if (!store.contains(base, d.inner_bytes) || !store.contains(last, d.inner_bytes)) {
      throw ConfigError("DMA descriptor out of bounds");
    }
  };
  check(d.src_space, d.src, d.src_stride);
  check(d.dst_space, d.dst, d.dst_stride);

  const int id = static_cast<int>(completion_.size());
  completion_.emplace_back();
  queue_.emplace_back(id, d);
  ++stats_.transfers;
  if (!active_) start_next(cycle);
  return id;
}

bool DmaEngine::done(int id) const {
  return id >= 0 && static_cast<std::size_t>(id) < completion_.size() &&
         completion_[static_cast<std::size_t>(id)].has_value();
}

std::optional<std::uint64_t> DmaEngine::completion_cycle(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= completion_.size()) return std::nullopt;
  return completion_[static_cast<std::size_t>(id)];
}

void DmaEngine::start_next(std::uint64_t cycle) {
  beat_.clear();
  if (queue_.empty()) {
    active_.reset();
    return;
  }
  auto [id, desc] = queue_.front();
  queue_.pop_front();
  active_ = Active{.id = id, .desc = desc, .start_cycle = cycle};
  if (desc.total_bytes() == 0) {
    completion_[static_cast<std::size_t>(id)] = cycle + config_.startup_cycles;
  }
}

void DmaEngine::build_beat() {
  Active& a = *active_;
  const DmaDescriptor& d = a.desc;
  const bool to_tcdm = d.dst_space == Space::kTcdm;
  const std::uint64_t src = d.src + a.rep * d.src_stride + a.offset;
  const std::uint64_t dst = d.dst + a.rep * d.dst_stride + a.offset;
  const std::uint64_t tcdm_addr = to_tcdm ? dst : src;
  const std::uint64_t boundary = (tcdm_addr / config_.beat_bytes + 1) * config_.beat_bytes;
  beat_bytes_ = std::min(d.inner_bytes - a.offset, boundary - tcdm_addr);
  beat_tcdm_start_ = tcdm_addr;
  beat_main_start_ = to_tcdm ? src : dst;

  beat_.clear();
  std::uint64_t done = 0;
  while (done < beat_bytes_) {
    const std::uint64_t addr = tcdm_addr + done;
    const std::uint64_t word_end = (addr / 8 + 1) * 8;
    const auto length = static_cast<std::uint8_t>(std::min(beat_bytes_ - done, word_end - addr));
    DmaWord w{.address = addr, .length = length, .write = to_tcdm};
    if (to_tcdm) w.wdata = main_.read(src + done, length);
    beat_.push_back(w);
    done += length;
  }
}

void DmaEngine::request(std::uint64_t cycle) {
  auto& words = tcdm_.dma_words();
  words.clear();
  if (!active_) return;
  ++stats_.busy_cycles;
  if (cycle < active_->start_cycle + config_.startup_cycles) return;
  if (completion_[static_cast<std::size_t>(active_->id)]) return;
  if (beat_.empty()) build_beat();
  words = beat_;
}

void DmaEngine::complete(std::uint64_t cycle) {
  if (!active_) return;
  const int id = active_->id;
  const auto& slot = completion_[static_cast<std::size_t>(id)];
  if (slot) {
    // Zero-length transfer waiting out its startup.
    if (cycle + 1 >= *slot) start_next(cycle + 1);
    return;
  }
  auto& words = tcdm_.dma_words();
  if (words.empty()) return;

  std::vector<DmaWord> remaining;
  for (const DmaWord& w : words) {
    if (!w.granted) {
      remaining.push_back(w);
      continue;
    }
    if (!w.write) {
      main_.write(beat_main_start_ + (w.address - beat_tcdm_start_), w.length, w.rdata);
    }
  }
  words.clear();
  if (!remaining.empty()) {
    ++stats_.contention_cycles;
    beat_ = std::move(remaining);
    return;
  }

  Active& a = *active_;
  ++stats_.beats;
  stats_.bytes += beat_bytes_;
  beat_.clear();
  a.offset += beat_bytes_;
  if (a.offset == a.desc.inner_bytes) {
    a.offset = 0;
    ++a.rep;
  }
  if (a.rep == a.desc.reps) {
    completion_[static_cast<std::size_t>(id)] = cycle + 1;
    start_next(cycle + 1);
  }
}

std::uint64_t run_dma_standalone(Tcdm& tcdm, ByteStore& main, const DmaDescriptor& descriptor,
                                 const DmaConfig& config) {
  DmaEngine dma(tcdm, main, config);
  const int id = dma.submit(descriptor, 0);
  for (std::uint64_t cycle = 0; !dma.done(id); ++cycle) {
    dma.request(cycle);
    tcdm.tick(cycle);
    dma.complete(cycle);
    if (cycle > 100'000'000) throw Error("DMA did not complete");
  }
  return *dma.completion_cycle(id);
}

}  // namespace issrsim::mem
