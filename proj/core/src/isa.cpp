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

#include "issrsim/isa.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "issrsim/error.hpp"

namespace issrsim::isa {
namespace {

struct MnemonicEntry {
  Opcode op;
  std::string_view text;
};

constexpr std::array<MnemonicEntry, 22> kMnemonics{{
    {Opcode::kAdd, "add"},
    {Opcode::kAddi, "addi"},
    {Opcode::kSub, "sub"},
    {Opcode::kSlli, "slli"},
    {Opcode::kLw, "lw"},
    {Opcode::kLh, "lh"},
    {Opcode::kSw, "sw"},
    {Opcode::kBne, "bne"},
    {Opcode::kBlt, "blt"},
    {Opcode::kJump, "j"},
    {Opcode::kFld, "fld"},
    {Opcode::kFsd, "fsd"},
    {Opcode::kFmaddD, "fmadd.d"},
    {Opcode::kFaddD, "fadd.d"},
    {Opcode::kFmulD, "fmul.d"},
    {Opcode::kFmvZero, "fmv.zero"},
    {Opcode::kScfgw, "scfgw"},
    {Opcode::kSsrEnable, "ssr.enable"},
    {Opcode::kSsrDisable, "ssr.disable"},
    {Opcode::kFrep, "frep"},
    {Opcode::kFpSync, "fpsync"},
    {Opcode::kHalt, "halt"},
}};

constexpr std::array<std::string_view, kNumStreamCfgRegs> kCfgNames{
    "status",  "repeat",  "bound0",  "bound1", "bound2",    "bound3",   "stride0",
    "stride1", "stride2", "stride3", "idxcfg", "idx_base", "data_base"};

constexpr std::array<std::string_view, 32> kXAbi{
    "zero", "ra", "sp", "gp", "tp",  "t0",  "t1", "t2", "s0", "s1", "a0",
    "a1",   "a2", "a3", "a4", "a5",  "a6",  "a7", "s2", "s3", "s4", "s5",
    "s6",   "s7", "s8", "s9", "s10", "s11", "t3", "t4", "t5", "t6"};

constexpr std::array<std::string_view, 32> kFAbi{
    "ft0", "ft1", "ft2",  "ft3",  "ft4", "ft5", "ft6", "ft7",
    "fs0", "fs1", "fa0",  "fa1",  "fa2", "fa3", "fa4", "fa5",
    "fa6", "fa7", "fs2",  "fs3",  "fs4", "fs5", "fs6", "fs7",
    "fs8", "fs9", "fs10", "fs11", "ft8", "ft9", "ft10", "ft11"};

std::optional<int> parse_numbered(std::string_view name, char prefix) {
  if (name.size() < 2 || name[0] != prefix) return std::nullopt;
  int value = 0;
  auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), value);
  if (ec != std::errc() || ptr != name.data() + name.size()) return std::nullopt;
  if (value < 0 || value >= 32) return std::nullopt;
  return value;
}

void check_xreg(XReg r) {
  if (r.id >= kNumIntRegs) {
    throw AssemblyError(0, "integer register x" + std::to_string(r.id) + " out of range");
  }
}

void check_freg(FReg r) {
  if (r.id >= kNumFpRegs) {
    throw AssemblyError(0, "FP register f" + std::to_string(r.id) + " out of range");
  }
}

bool frep_body_allowed(Opcode op) {
  return is_fp_compute(op) || op == Opcode::kFmvZero;
}

// Checks that staggering the masked fields of `inst` by up to
// `stagger_count` stays inside the FP register file.
bool stagger_in_range(const Instruction& inst, int stagger_count, std::uint8_t mask) {
  const auto ok = [&](std::uint8_t reg, std::uint8_t bit) {
    return !(mask & bit) || reg + stagger_count < kNumFpRegs;
  };
  return ok(inst.rd, kStaggerRd) && ok(inst.rs1, kStaggerRs1) && ok(inst.rs2, kStaggerRs2) &&
         ok(inst.rs3, kStaggerRs3);
}

}  // namespace

std::string_view mnemonic(Opcode op) {
  for (const auto& entry : kMnemonics) {
    if (entry.op == op) return entry.text;
  }
  return "?";
}

std::optional<Opcode> opcode_from_mnemonic(std::string_view text) {
  for (const auto& entry : kMnemonics) {
    if (entry.text == text) return entry.op;
  }
  return std::nullopt;
}

bool is_fp_subsystem(Opcode op) {
  switch (op) {
    case Opcode::kFld:
    case Opcode::kFsd:
    case Opcode::kFmaddD:
    case Opcode::kFaddD:
    case Opcode::kFmulD:
    case Opcode::kFmvZero:
    case Opcode::kSsrEnable:
    case Opcode::kSsrDisable:
    case Opcode::kFrep:
      return true;
    default:
      return false;
  }
}

bool is_fp_compute(Opcode op) {
  return op == Opcode::kFmaddD || op == Opcode::kFaddD || op == Opcode::kFmulD;
}

bool is_branch(Opcode op) {
  return op == Opcode::kBne || op == Opcode::kBlt || op == Opcode::kJump;
}

std::string_view cfg_reg_name(int reg) {
  if (reg < 0 || reg >= kNumStreamCfgRegs) return "?";
  return kCfgNames[static_cast<std::size_t>(reg)];
}

std::optional<int> cfg_reg_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kCfgNames.size(); ++i) {
    if (kCfgNames[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::optional<XReg> parse_xreg(std::string_view name) {
  if (auto n = parse_numbered(name, 'x')) return x(*n);
  if (name == "fp") return x(8);
  for (std::size_t i = 0; i < kXAbi.size(); ++i) {
    if (kXAbi[i] == name) return x(static_cast<int>(i));
  }
  return std::nullopt;
}

std::optional<FReg> parse_freg(std::string_view name) {
  if (auto n = parse_numbered(name, 'f')) return f(*n);
  for (std::size_t i = 0; i < kFAbi.size(); ++i) {
    if (kFAbi[i] == name) return f(static_cast<int>(i));
  }
  return std::nullopt;
}

std::string xreg_name(XReg r) { return "x" + std::to_string(r.id); }
std::string freg_name(FReg r) { return "f" + std::to_string(r.id); }

Program::Program(std::vector<Instruction> instructions, std::map<std::string, int> labels,
                 int entry)
    : instructions_(std::move(instructions)), labels_(std::move(labels)), entry_(entry) {
  validate(*this);
}

std::optional<std::string> check_instruction(const std::vector<Instruction>& insts, int i) {
  const int n = static_cast<int>(insts.size());
  const Instruction& inst = insts[static_cast<std::size_t>(i)];
  if (is_branch(inst.opcode) && (inst.imm < 0 || inst.imm >= n)) {
    return "branch target out of range";
  }
  if (inst.opcode == Opcode::kSlli && (inst.imm < 0 || inst.imm > 63)) {
    return "shift amount out of range";
  }
  if (inst.opcode == Opcode::kScfgw &&
      (inst.unit >= kNumStreamUnits || inst.cfg_reg >= kNumStreamCfgRegs)) {
    return "invalid stream config target";
  }
  if (inst.opcode == Opcode::kFrep) {
    if (inst.body_length < 1) return "FREP body must be non-empty";
    if (i + inst.body_length >= n) return "FREP body runs past end";
    for (int j = 1; j <= inst.body_length; ++j) {
      const Instruction& body = insts[static_cast<std::size_t>(i + j)];
      if (!frep_body_allowed(body.opcode)) {
        return "FREP body may only hold FP compute instructions";
      }
      if (!stagger_in_range(body, inst.stagger_count, inst.stagger_mask)) {
        return "staggered register leaves the FP register file";
      }
    }
  }
  return std::nullopt;
}

void validate(const Program& program) {
  const auto& insts = program.instructions();
  const int n = program.size();
  if (n == 0) throw AssemblyError(0, "empty program");
  if (program.entry() < 0 || program.entry() >= n) {
    throw AssemblyError(0, "entry point out of range");
  }
  bool has_halt = false;
  for (int i = 0; i < n; ++i) {
    if (insts[static_cast<std::size_t>(i)].opcode == Opcode::kHalt) has_halt = true;
    if (auto error = check_instruction(insts, i)) {
      throw AssemblyError(0, "instruction " + std::to_string(i) + ": " + *error);
    }
  }
  if (!has_halt) throw AssemblyError(0, "program has no HALT");
}

std::string to_string(const Instruction& inst) {
  std::ostringstream os;
  os << mnemonic(inst.opcode);
  const auto xr = [](std::uint8_t r) { return xreg_name(XReg{r}); };
  const auto fr = [](std::uint8_t r) { return freg_name(FReg{r}); };
  switch (inst.opcode) {
    case Opcode::kAdd:
    case Opcode::kSub:
      os << ' ' << xr(inst.rd) << ", " << xr(inst.rs1) << ", " << xr(inst.rs2);
      break;
    case Opcode::kAddi:
    case Opcode::kSlli:
      os << ' ' << xr(inst.rd) << ", " << xr(inst.rs1) << ", " << inst.imm;
      break;
    case Opcode::kLw:
    case Opcode::kLh:
      os << ' ' << xr(inst.rd) << ", " << inst.imm << '(' << xr(inst.rs1) << ')';
      break;
    case Opcode::kSw:
      os << ' ' << xr(inst.rs2) << ", " << inst.imm << '(' << xr(inst.rs1) << ')';
      break;
    case Opcode::kBne:
    case Opcode::kBlt:
      os << ' ' << xr(inst.rs1) << ", " << xr(inst.rs2) << ", @" << inst.imm;
      break;
    case Opcode::kJump:
      os << " @" << inst.imm;
      break;
    case Opcode::kFld:
      os << ' ' << fr(inst.rd) << ", " << inst.imm << '(' << xr(inst.rs1) << ')';
      break;
    case Opcode::kFsd:
      os << ' ' << fr(inst.rs2) << ", " << inst.imm << '(' << xr(inst.rs1) << ')';
      break;
    case Opcode::kFmaddD:
      os << ' ' << fr(inst.rd) << ", " << fr(inst.rs1) << ", " << fr(inst.rs2) << ", "
         << fr(inst.rs3);
      break;
    case Opcode::kFaddD:
    case Opcode::kFmulD:
      os << ' ' << fr(inst.rd) << ", " << fr(inst.rs1) << ", " << fr(inst.rs2);
      break;
    case Opcode::kFmvZero:
      os << ' ' << fr(inst.rd);
      break;
    case Opcode::kScfgw:
      os << ' ' << xr(inst.rs1) << ", " << static_cast<int>(inst.unit) << ", "
         << cfg_reg_name(inst.cfg_reg);
      break;
    case Opcode::kFrep:
      os << ' ' << xr(inst.rs1) << ", " << inst.body_length << ", "
         << static_cast<int>(inst.stagger_count) << ", " << static_cast<int>(inst.stagger_mask);
      break;
    case Opcode::kSsrEnable:
    case Opcode::kSsrDisable:
    case Opcode::kFpSync:
    case Opcode::kHalt:
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// ProgramBuilder

void ProgramBuilder::label(const std::string& name) {
  if (name.empty()) throw AssemblyError(0, "empty label");
  if (!labels_.emplace(name, position()).second) {
    throw AssemblyError(0, "duplicate label '" + name + "'");
  }
}

std::string ProgramBuilder::unique_label(std::string_view stem) {
  return "." + std::string(stem) + "_" + std::to_string(unique_counter_++);
}

void ProgramBuilder::push(Instruction instruction, const std::string& target) {
  if (frep_remaining_ > 0) check_frep_body(instruction);
  if (!target.empty()) fixups_.emplace_back(position(), target);
  instructions_.push_back(instruction);
}

void ProgramBuilder::check_frep_body(const Instruction& instruction) {
  if (!frep_body_allowed(instruction.opcode)) {
    throw AssemblyError(0, "FREP body may only hold FP compute instructions");
  }
  if (!stagger_in_range(instruction, frep_stagger_count_, frep_stagger_mask_)) {
    throw AssemblyError(0, "staggered register leaves the FP register file");
  }
  --frep_remaining_;
}

void ProgramBuilder::add(XReg rd, XReg rs1, XReg rs2) {
  check_xreg(rd), check_xreg(rs1), check_xreg(rs2);
  push({.opcode = Opcode::kAdd, .rd = rd.id, .rs1 = rs1.id, .rs2 = rs2.id});
}

void ProgramBuilder::sub(XReg rd, XReg rs1, XReg rs2) {
  check_xreg(rd), check_xreg(rs1), check_xreg(rs2);
  push({.opcode = Opcode::kSub, .rd = rd.id, .rs1 = rs1.id, .rs2 = rs2.id});
}

void ProgramBuilder::addi(XReg rd, XReg rs1, std::int32_t imm) {
  check_xreg(rd), check_xreg(rs1);
  push({.opcode = Opcode::kAddi, .rd = rd.id, .rs1 = rs1.id, .imm = imm});
}

void ProgramBuilder::slli(XReg rd, XReg rs1, int shamt) {
  check_xreg(rd), check_xreg(rs1);
  if (shamt < 0 || shamt > 63) throw AssemblyError(0, "shift amount out of range");
  push({.opcode = Opcode::kSlli, .rd = rd.id, .rs1 = rs1.id, .imm = shamt});
}

void ProgramBuilder::lw(XReg rd, XReg base, std::int32_t offset) {
  check_xreg(rd), check_xreg(base);
  push({.opcode = Opcode::kLw, .rd = rd.id, .rs1 = base.id, .imm = offset});
}

void ProgramBuilder::lh(XReg rd, XReg base, std::int32_t offset) {
  check_xreg(rd), check_xreg(base);
  push({.opcode = Opcode::kLh, .rd = rd.id, .rs1 = base.id, .imm = offset});
}

void ProgramBuilder::sw(XReg src, XReg base, std::int32_t offset) {
  check_xreg(src), check_xreg(base);
  push({.opcode = Opcode::kSw, .rs1 = base.id, .rs2 = src.id, .imm = offset});
}

void ProgramBuilder::bne(XReg rs1, XReg rs2, const std::string& target) {
  check_xreg(rs1), check_xreg(rs2);
  push({.opcode = Opcode::kBne, .rs1 = rs1.id, .rs2 = rs2.id}, target);
}

void ProgramBuilder::blt(XReg rs1, XReg rs2, const std::string& target) {
  check_xreg(rs1), check_xreg(rs2);
  push({.opcode = Opcode::kBlt, .rs1 = rs1.id, .rs2 = rs2.id}, target);
}

void ProgramBuilder::jump(const std::string& target) {
  push({.opcode = Opcode::kJump}, target);
}

void ProgramBuilder::fld(FReg rd, XReg base, std::int32_t offset) {
  check_freg(rd), check_xreg(base);
  push({.opcode = Opcode::kFld, .rd = rd.id, .rs1 = base.id, .imm = offset});
}

void ProgramBuilder::fsd(FReg src, XReg base, std::int32_t offset) {
  check_freg(src), check_xreg(base);
  push({.opcode = Opcode::kFsd, .rs1 = base.id, .rs2 = src.id, .imm = offset});
}

void ProgramBuilder::fmadd(FReg rd, FReg rs1, FReg rs2, FReg rs3) {
  check_freg(rd), check_freg(rs1), check_freg(rs2), check_freg(rs3);
  push({.opcode = Opcode::kFmaddD, .rd = rd.id, .rs1 = rs1.id, .rs2 = rs2.id, .rs3 = rs3.id});
}

void ProgramBuilder::fadd(FReg rd, FReg rs1, FReg rs2) {
  check_freg(rd), check_freg(rs1), check_freg(rs2);
  push({.opcode = Opcode::kFaddD, .rd = rd.id, .rs1 = rs1.id, .rs2 = rs2.id});
}

void ProgramBuilder::fmul(FReg rd, FReg rs1, FReg rs2) {
  check_freg(rd), check_freg(rs1), check_freg(rs2);
  push({.opcode = Opcode::kFmulD, .rd = rd.id, .rs1 = rs1.id, .rs2 = rs2.id});
}

void ProgramBuilder::fmv_zero(FReg rd) {
  check_freg(rd);
  push({.opcode = Opcode::kFmvZero, .rd = rd.id});
}

void ProgramBuilder::scfgw(XReg value, int unit, int cfg_reg) {
  check_xreg(value);
  if (unit < 0 || unit >= kNumStreamUnits) throw AssemblyError(0, "invalid stream unit");
  if (cfg_reg < 0 || cfg_reg >= kNumStreamCfgRegs) {
    throw AssemblyError(0, "invalid stream config register");
  }
  push({.opcode = Opcode::kScfgw,
        .rs1 = value.id,
        .unit = static_cast<std::uint8_t>(unit),
        .cfg_reg = static_cast<std::uint8_t>(cfg_reg)});
}

void ProgramBuilder::ssr_enable() { push({.opcode = Opcode::kSsrEnable}); }
void ProgramBuilder::ssr_disable() { push({.opcode = Opcode::kSsrDisable}); }

void ProgramBuilder::frep(XReg count, int body_length, int stagger_count,
                          std::uint8_t stagger_mask) {
  check_xreg(count);
  if (frep_remaining_ > 0) throw AssemblyError(0, "nested FREP");
  if (body_length < 1 || body_length > 0xffff) throw AssemblyError(0, "FREP body must be non-empty");
  if (stagger_count < 0 || stagger_count >= kNumFpRegs) {
    throw AssemblyError(0, "stagger count out of range");
  }
  push({.opcode = Opcode::kFrep,
        .rs1 = count.id,
        .body_length = static_cast<std::uint16_t>(body_length),
        .stagger_count = static_cast<std::uint8_t>(stagger_count),
        .stagger_mask = static_cast<std::uint8_t>(stagger_mask & 0xf)});
  frep_remaining_ = body_length;
  frep_stagger_count_ = static_cast<std::uint8_t>(stagger_count);
  frep_stagger_mask_ = static_cast<std::uint8_t>(stagger_mask & 0xf);
}

void ProgramBuilder::fp_sync() { push({.opcode = Opcode::kFpSync}); }
void ProgramBuilder::halt() { push({.opcode = Opcode::kHalt}); }

void ProgramBuilder::emit(const Instruction& instruction) {
  if (instruction.opcode == Opcode::kFrep) {
    frep(XReg{instruction.rs1}, instruction.body_length, instruction.stagger_count,
         instruction.stagger_mask);
    return;
  }
  if (instruction.rd >= 32 || instruction.rs1 >= 32 || instruction.rs2 >= 32 ||
      instruction.rs3 >= 32) {
    throw AssemblyError(0, "register out of range");
  }
  push(instruction);
}

Program ProgramBuilder::finish() {
  if (frep_remaining_ > 0) throw AssemblyError(0, "FREP body incomplete");
  for (const auto& [index, target] : fixups_) {
    auto it = labels_.find(target);
    if (it == labels_.end()) throw AssemblyError(0, "unresolved label '" + target + "'");
    instructions_[static_cast<std::size_t>(index)].imm = it->second;
  }
  return Program(std::move(instructions_), std::move(labels_));
}

}  // namespace issrsim::isa
