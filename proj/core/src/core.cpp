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

#include "issrsim/core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "issrsim/error.hpp"

namespace issrsim::core {

using isa::Instruction;
using isa::Opcode;

namespace {

constexpr std::uint64_t kNever = std::numeric_limits<std::uint64_t>::max();

Instruction staggered(Instruction inst, std::uint64_t iteration, std::uint8_t count,
                      std::uint8_t mask) {
  const auto offset = static_cast<std::uint8_t>(iteration % (static_cast<std::uint64_t>(count) + 1));
  if (mask & isa::kStaggerRd) inst.rd = static_cast<std::uint8_t>(inst.rd + offset);
  if (mask & isa::kStaggerRs1) inst.rs1 = static_cast<std::uint8_t>(inst.rs1 + offset);
  if (mask & isa::kStaggerRs2) inst.rs2 = static_cast<std::uint8_t>(inst.rs2 + offset);
  if (mask & isa::kStaggerRs3) inst.rs3 = static_cast<std::uint8_t>(inst.rs3 + offset);
  return inst;
}

int source_count(Opcode op) {
  switch (op) {
    case Opcode::kFmaddD:
      return 3;
    case Opcode::kFaddD:
    case Opcode::kFmulD:
      return 2;
    default:
      return 0;
  }
}

}  // namespace

std::string_view fpu_state_name(FpuState s) {
  switch (s) {
    case FpuState::kCompute: return "compute";
    case FpuState::kOther: return "other";
    case FpuState::kStreamWait: return "stream_wait";
    case FpuState::kRaw: return "raw";
    case FpuState::kLsu: return "lsu";
    case FpuState::kIdle: return "idle";
  }
  return "?";
}

std::string_view core_state_name(CoreState s) {
  switch (s) {
    case CoreState::kIssue: return "issue";
    case CoreState::kLoadUse: return "load_use";
    case CoreState::kQueueFull: return "queue_full";
    case CoreState::kLsu: return "lsu";
    case CoreState::kConfig: return "config";
    case CoreState::kSync: return "sync";
    case CoreState::kHalted: return "halted";
  }
  return "?";
}

double CycleStats::utilization() const {
  return cycles == 0 ? 0.0 : static_cast<double>(fp_compute_ops) / static_cast<double>(cycles);
}

double CycleStats::utilization_reduction_free() const {
  return last_fmadd_retire == 0
             ? 0.0
             : static_cast<double>(fmadds) / static_cast<double>(last_fmadd_retire);
}

// ---------------------------------------------------------------------------

CoreComplex::CoreComplex(const isa::Program& program, const CoreConfig& config,
                         mem::Port& shared_port, mem::Port* issr_port)
    : program_(program),
      config_(config),
      shared_port_(shared_port),
      issr_port_(issr_port),
      pc_(program.entry()) {
  isa::validate(program_);
  stats_.contract = config.timing;
  if (config.has_streamer) {
    if (issr_port_ == nullptr) throw ConfigError("streamer needs an indirection port");
    const auto& t = config.timing;
    units_.emplace_back(0, stream::StreamUnitConfig{false, t.data_fifo_depth, t.index_fifo_words,
                                                    t.address_bits});
    units_.emplace_back(1, stream::StreamUnitConfig{true, t.data_fifo_depth, t.index_fifo_words,
                                                    t.address_bits});
  }
  if (config.timing.fpu_latency < 1 || config.timing.fmv_latency < 1 ||
      config.timing.fpu_queue_depth < 1 || config.timing.load_use_cycles < 1 ||
      config.timing.config_write_cycles < 1) {
    throw ConfigError("timing contract values must be positive");
  }
}

void CoreComplex::set_xreg(int r, std::uint64_t value) {
  if (r != 0) x_.at(static_cast<std::size_t>(r)) = value;
}

const stream::StreamUnit* CoreComplex::stream_unit(int unit) const {
  if (unit < 0 || unit >= static_cast<int>(units_.size())) return nullptr;
  return &units_[static_cast<std::size_t>(unit)];
}

int CoreComplex::access_pc() const {
  if (shared_owner_ == Owner::kCore && core_lsu_) return core_lsu_->pc;
  if (shared_owner_ == Owner::kFpu && fpu_lsu_) return fpu_lsu_->pc;
  return -1;
}

void CoreComplex::fault(std::uint64_t cycle, int pc, const std::string& what) const {
  throw SimulationFault(cycle, pc, what);
}

std::optional<int> CoreComplex::mapped_unit(int freg) const {
  if (streams_enabled_ && freg < static_cast<int>(units_.size())) return freg;
  return std::nullopt;
}

void CoreComplex::issue(std::uint64_t cycle) {
  progressed_ = false;
  ++stats_.core_states[static_cast<int>(step_core(cycle))];
  ++stats_.fpu_states[static_cast<int>(step_fpu(cycle))];
  step_ports(cycle);
}

CoreState CoreComplex::step_core(std::uint64_t cycle) {
  if (halted_) return CoreState::kHalted;
  if (config_busy_ > 0) {
    --config_busy_;
    progressed_ = true;
    return CoreState::kConfig;
  }
  const Instruction& in = program_.at(pc_);
  const auto rd = in.rd;
  auto write_x = [&](std::uint64_t value) {
    if (rd != 0) {
      x_[rd] = value;
      x_ready_[rd] = cycle + 1;
    }
  };
  int next = pc_ + 1;

  switch (in.opcode) {
    case Opcode::kAdd:
    case Opcode::kSub:
      if (!xready(in.rs1, cycle) || !xready(in.rs2, cycle)) return CoreState::kLoadUse;
      write_x(in.opcode == Opcode::kAdd ? x_[in.rs1] + x_[in.rs2] : x_[in.rs1] - x_[in.rs2]);
      break;
    case Opcode::kAddi:
      if (!xready(in.rs1, cycle)) return CoreState::kLoadUse;
      write_x(x_[in.rs1] + static_cast<std::uint64_t>(static_cast<std::int64_t>(in.imm)));
      break;
    case Opcode::kSlli:
      if (!xready(in.rs1, cycle)) return CoreState::kLoadUse;
      write_x(x_[in.rs1] << in.imm);
      break;
    case Opcode::kLw:
    case Opcode::kLh: {
      if (!xready(in.rs1, cycle)) return CoreState::kLoadUse;
      if (core_lsu_) return CoreState::kLsu;
      const bool half = in.opcode == Opcode::kLh;
      LsuSlot slot;
      slot.request = {x_[in.rs1] + static_cast<std::uint64_t>(static_cast<std::int64_t>(in.imm)),
                      static_cast<std::uint8_t>(half ? 2 : 4), mem::AccessKind::kRead, 0};
      slot.reg = rd;
      slot.half = half;
      slot.pc = pc_;
      core_lsu_ = slot;
      if (rd != 0) x_ready_[rd] = kNever;
      break;
    }
    case Opcode::kSw: {
      if (!xready(in.rs1, cycle) || !xready(in.rs2, cycle)) return CoreState::kLoadUse;
      if (core_lsu_) return CoreState::kLsu;
      LsuSlot slot;
      slot.request = {x_[in.rs1] + static_cast<std::uint64_t>(static_cast<std::int64_t>(in.imm)), 4,
                      mem::AccessKind::kWrite, x_[in.rs2] & 0xffffffffull};
      slot.pc = pc_;
      core_lsu_ = slot;
      break;
    }
    case Opcode::kBne:
    case Opcode::kBlt: {
      if (!xready(in.rs1, cycle) || !xready(in.rs2, cycle)) return CoreState::kLoadUse;
      const bool taken = in.opcode == Opcode::kBne
                             ? x_[in.rs1] != x_[in.rs2]
                             : static_cast<std::int64_t>(x_[in.rs1]) <
                                   static_cast<std::int64_t>(x_[in.rs2]);
      if (taken) next = in.imm;
      break;
    }
    case Opcode::kJump:
      next = in.imm;
      break;
    case Opcode::kScfgw:
      if (units_.empty()) fault(cycle, pc_, "SCFGW without a streamer");
      if (!xready(in.rs1, cycle)) return CoreState::kLoadUse;
      if (!units_[in.unit].write_register(in.cfg_reg, x_[in.rs1], cycle)) return CoreState::kConfig;
      config_busy_ = config_.timing.config_write_cycles - 1;
      break;
    case Opcode::kFpSync:
      if (!fpu_idle(cycle)) return CoreState::kSync;
      break;
    case Opcode::kHalt:
      halted_ = true;
      break;
    default: {
      // FP subsystem instruction: hand it to the FPU queue.
      if ((in.opcode == Opcode::kSsrEnable || in.opcode == Opcode::kSsrDisable) && units_.empty()) {
        fault(cycle, pc_, "stream enable/disable without a streamer");
      }
      if (static_cast<int>(queue_.size()) >= config_.timing.fpu_queue_depth) {
        return CoreState::kQueueFull;
      }
      QueueEntry e;
      e.inst = in;
      e.pc = pc_;
      e.enqueue_cycle = cycle;
      if (in.opcode == Opcode::kFld || in.opcode == Opcode::kFsd || in.opcode == Opcode::kFrep) {
        if (!xready(in.rs1, cycle)) return CoreState::kLoadUse;
        if (in.opcode == Opcode::kFrep) {
          e.count = x_[in.rs1];
        } else {
          e.address = x_[in.rs1] + static_cast<std::uint64_t>(static_cast<std::int64_t>(in.imm));
        }
      }
      queue_.push_back(e);
      break;
    }
  }
  pc_ = next;
  ++stats_.instructions;
  progressed_ = true;
  return CoreState::kIssue;
}

FpuState CoreComplex::step_fpu(std::uint64_t cycle) {
  bool dispatched = false;
  if (sequencer_) {
    Sequencer& s = *sequencer_;
    const QueueEntry& e = s.body[static_cast<std::size_t>(s.index)];
    const Instruction inst = staggered(e.inst, s.iteration, s.stagger_count, s.stagger_mask);
    const FpuState state = dispatch(e, inst, cycle, dispatched);
    if (dispatched && ++s.index == static_cast<int>(s.body.size())) {
      s.index = 0;
      if (++s.iteration == s.iterations) sequencer_.reset();
    }
    return state;
  }
  if (queue_.empty() || queue_.front().enqueue_cycle >= cycle) return FpuState::kIdle;
  const QueueEntry& head = queue_.front();
  if (head.inst.opcode == Opcode::kFrep) {
    const int body = head.inst.body_length;
    if (static_cast<int>(queue_.size()) < body + 1) return FpuState::kIdle;
    Sequencer s;
    s.iterations = head.count;
    s.stagger_count = head.inst.stagger_count;
    s.stagger_mask = head.inst.stagger_mask;
    s.body.assign(queue_.begin() + 1, queue_.begin() + 1 + body);
    queue_.erase(queue_.begin(), queue_.begin() + 1 + body);
    if (s.iterations > 0) sequencer_ = std::move(s);
    ++stats_.fp_dispatches;
    progressed_ = true;
    return FpuState::kOther;
  }
  const FpuState state = dispatch(head, head.inst, cycle, dispatched);
  if (dispatched) queue_.pop_front();
  return state;
}

FpuState CoreComplex::dispatch(const QueueEntry& entry, const Instruction& inst,
                               std::uint64_t cycle, bool& dispatched) {
  const auto& timing = config_.timing;
  auto done = [&](FpuState s) {
    dispatched = true;
    progressed_ = true;
    ++stats_.fp_dispatches;
    return s;
  };

  switch (inst.opcode) {
    case Opcode::kSsrEnable:
      streams_enabled_ = true;
      return done(FpuState::kOther);
    case Opcode::kSsrDisable:
      streams_enabled_ = false;
      return done(FpuState::kOther);
    case Opcode::kFld: {
      if (fpu_lsu_) return FpuState::kLsu;
      if (mapped_unit(inst.rd)) fault(cycle, entry.pc, "FLD into a stream-mapped register");
      if (f_ready_[inst.rd] > cycle + static_cast<std::uint64_t>(timing.load_use_cycles)) {
        return FpuState::kRaw;
      }
      LsuSlot slot;
      slot.request = {entry.address, 8, mem::AccessKind::kRead, 0};
      slot.reg = inst.rd;
      slot.fp = true;
      slot.pc = entry.pc;
      fpu_lsu_ = slot;
      f_ready_[inst.rd] = kNever;
      return done(FpuState::kOther);
    }
    case Opcode::kFsd: {
      if (fpu_lsu_) return FpuState::kLsu;
      double value;
      if (auto u = mapped_unit(inst.rs2)) {
        if (!units_[static_cast<std::size_t>(*u)].can_pop(cycle)) return FpuState::kStreamWait;
        value = units_[static_cast<std::size_t>(*u)].pop(cycle);
      } else {
        if (f_ready_[inst.rs2] > cycle) return FpuState::kRaw;
        value = f_[inst.rs2];
      }
      LsuSlot slot;
      slot.request = {entry.address, 8, mem::AccessKind::kWrite, std::bit_cast<std::uint64_t>(value)};
      slot.fp = true;
      slot.pc = entry.pc;
      fpu_lsu_ = slot;
      return done(FpuState::kOther);
    }
    case Opcode::kFmaddD:
    case Opcode::kFaddD:
    case Opcode::kFmulD:
    case Opcode::kFmvZero: {
      const int n = source_count(inst.opcode);
      const std::array<std::uint8_t, 3> src{inst.rs1, inst.rs2, inst.rs3};
      std::array<int, isa::kNumStreamUnits> pops{};
      for (int i = 0; i < n; ++i) {
        if (auto u = mapped_unit(src[static_cast<std::size_t>(i)])) {
          ++pops[static_cast<std::size_t>(*u)];
        } else if (f_ready_[src[static_cast<std::size_t>(i)]] > cycle) {
          return FpuState::kRaw;
        }
      }
      const std::uint64_t latency = static_cast<std::uint64_t>(
          inst.opcode == Opcode::kFmvZero ? timing.fmv_latency : timing.fpu_latency);
      const auto dest_unit = mapped_unit(inst.rd);
      if (!dest_unit && (f_ready_[inst.rd] == kNever || f_ready_[inst.rd] > cycle + latency)) {
        return FpuState::kRaw;
      }
      for (std::size_t u = 0; u < units_.size(); ++u) {
        if (pops[u] > 0 && !units_[u].can_pop(cycle, pops[u])) return FpuState::kStreamWait;
      }
      if (dest_unit && !units_[static_cast<std::size_t>(*dest_unit)].can_reserve()) {
        return FpuState::kStreamWait;
      }
      std::array<double, 3> v{};
      for (int i = 0; i < n; ++i) {
        const auto r = src[static_cast<std::size_t>(i)];
        if (auto u = mapped_unit(r)) {
          v[static_cast<std::size_t>(i)] = units_[static_cast<std::size_t>(*u)].pop(cycle);
        } else {
          v[static_cast<std::size_t>(i)] = f_[r];
        }
      }
      double result = 0.0;
      switch (inst.opcode) {
        case Opcode::kFmaddD: result = std::fma(v[0], v[1], v[2]); break;
        case Opcode::kFaddD: result = v[0] + v[1]; break;
        case Opcode::kFmulD: result = v[0] * v[1]; break;
        default: break;
      }
      const std::uint64_t ready = cycle + latency;
      if (dest_unit) {
        auto& unit = units_[static_cast<std::size_t>(*dest_unit)];
        unit.reserve();
        unit.fill(result, ready);
      } else {
        f_[inst.rd] = result;
        f_ready_[inst.rd] = ready;
      }
      last_retire_ = std::max(last_retire_, ready);
      if (inst.opcode == Opcode::kFmvZero) return done(FpuState::kOther);
      ++stats_.fp_compute_ops;
      if (inst.opcode == Opcode::kFmaddD) {
        ++stats_.fmadds;
        stats_.last_fmadd_retire = std::max(stats_.last_fmadd_retire, ready);
      }
      return done(FpuState::kCompute);
    }
    default:
      fault(cycle, entry.pc, "instruction not executable by the FPU");
  }
}

void CoreComplex::step_ports(std::uint64_t cycle) {
  for (auto& u : units_) u.begin_cycle(cycle);
  if (shared_owner_ == Owner::kNone) {
    if (core_lsu_) {
      shared_port_.present(core_lsu_->request);
      shared_owner_ = Owner::kCore;
    } else if (fpu_lsu_) {
      shared_port_.present(fpu_lsu_->request);
      shared_owner_ = Owner::kFpu;
    } else if (!units_.empty()) {
      if (auto p = units_[0].propose(cycle)) {
        shared_port_.present(p->request);
        units_[0].presented(*p, cycle);
        shared_owner_ = Owner::kStream;
      }
    }
    if (shared_owner_ != Owner::kNone) {
      ++stats_.port_requests[0];
      progressed_ = true;
    }
  }
  if (units_.size() > 1 && !issr_presented_) {
    if (auto p = units_[1].propose(cycle)) {
      issr_port_->present(p->request);
      units_[1].presented(*p, cycle);
      issr_presented_ = true;
      ++stats_.port_requests[1];
      progressed_ = true;
    }
  }
}

void CoreComplex::complete(std::uint64_t cycle) {
  if (shared_owner_ != Owner::kNone) {
    if (shared_port_.granted()) {
      const std::uint64_t rdata = shared_port_.rdata();
      const std::uint64_t ready = cycle + static_cast<std::uint64_t>(config_.timing.load_use_cycles);
      switch (shared_owner_) {
        case Owner::kCore:
          if (core_lsu_->request.kind == mem::AccessKind::kRead && core_lsu_->reg != 0) {
            const auto r = static_cast<std::size_t>(core_lsu_->reg);
            x_[r] = core_lsu_->half ? (rdata & 0xffffull) : (rdata & 0xffffffffull);
            x_ready_[r] = ready;
          }
          core_lsu_.reset();
          break;
        case Owner::kFpu:
          if (fpu_lsu_->request.kind == mem::AccessKind::kRead) {
            const auto r = static_cast<std::size_t>(fpu_lsu_->reg);
            f_[r] = std::bit_cast<double>(rdata);
            f_ready_[r] = ready;
          }
          fpu_lsu_.reset();
          break;
        case Owner::kStream:
          units_[0].granted(rdata, cycle);
          break;
        case Owner::kNone:
          break;
      }
      shared_port_.retire();
      shared_owner_ = Owner::kNone;
      progressed_ = true;
    } else {
      ++stats_.port_conflicts[0];
    }
  }
  if (issr_presented_) {
    if (issr_port_->granted()) {
      units_[1].granted(issr_port_->rdata(), cycle);
      issr_port_->retire();
      issr_presented_ = false;
      progressed_ = true;
    } else {
      ++stats_.port_conflicts[1];
    }
  }
  done_ = halted_ && all_drained(cycle);
}

bool CoreComplex::fpu_idle(std::uint64_t cycle) const {
  if (!queue_.empty() || sequencer_ || fpu_lsu_) return false;
  if (last_retire_ > cycle) return false;
  for (auto r : f_ready_) {
    if (r == kNever) return false;
  }
  return std::all_of(units_.begin(), units_.end(),
                     [](const stream::StreamUnit& u) { return u.writes_drained(); });
}

bool CoreComplex::all_drained(std::uint64_t cycle) const {
  return fpu_idle(cycle + 1) && !core_lsu_ && shared_owner_ == Owner::kNone && !issr_presented_;
}

void CoreComplex::finish(std::uint64_t cycles) {
  stats_.cycles = cycles;
  stats_.index_fetches = 0;
  for (std::size_t u = 0; u < units_.size(); ++u) {
    stats_.stream_data[u] = units_[u].stats().data_accesses;
    stats_.index_fetches += units_[u].stats().index_fetches;
  }
}

// ---------------------------------------------------------------------------

CcResult simulate_cc(const isa::Program& program, const CoreConfig& config,
                     const mem::ByteStore& image, bool keep_log) {
  mem::IdealMemory memory(image.base(), image.size(), 2);
  memory.store() = image;
  memory.enable_log(keep_log);
  CoreComplex cc(program, config, memory.port(0),
                 config.has_streamer ? &memory.port(1) : nullptr);
  std::uint64_t stalled = 0;
  for (std::uint64_t t = 0;; ++t) {
    cc.issue(t);
    try {
      memory.tick(t);
    } catch (const SimulationFault& e) {
      throw SimulationFault(t, cc.access_pc(), e.what());
    }
    cc.complete(t);
    if (cc.done()) {
      cc.finish(t + 1);
      break;
    }
    stalled = cc.progressed() ? 0 : stalled + 1;
    if (stalled >= config.deadlock_cycles) {
      throw SimulationFault(t, cc.pc(), "deadlock: no progress for " +
                                            std::to_string(stalled) + " cycles");
    }
    if (t + 1 >= config.max_cycles) throw SimulationFault(t, cc.pc(), "cycle limit reached");
  }
  return {cc.stats(), memory.store(), memory.log()};
}

double max_relative_error(const std::vector<double>& got, const std::vector<double>& want,
                          double floor) {
  if (got.size() != want.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (std::isnan(got[i]) != std::isnan(want[i])) return std::numeric_limits<double>::infinity();
    if (got[i] == want[i]) continue;
    worst = std::max(worst, std::abs(got[i] - want[i]) / std::max(std::abs(want[i]), floor));
  }
  return worst;
}

double speedup(const RunReport& baseline, const RunReport& variant, double rel_tolerance) {
  const double err = max_relative_error(variant.result, baseline.result);
  if (!(err <= rel_tolerance)) {
    throw Error("results of '" + variant.label + "' and '" + baseline.label +
                "' differ (relative error " + std::to_string(err) + ")");
  }
  if (variant.stats.cycles == 0) throw Error("variant run has zero cycles");
  return static_cast<double>(baseline.stats.cycles) / static_cast<double>(variant.stats.cycles);
}

}  // namespace issrsim::core
