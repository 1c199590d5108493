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
 * @file isa.hpp
 * @brief Mini instruction set used by every simulated kernel.
 *
 * The set is a small subset of RV64 integer and D-extension mnemonics plus
 * the stream-register and hardware-loop instructions of the FPU subsystem.
 * Branch targets are absolute instruction indices once a Program is built.
 */

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace issrsim::isa {

inline constexpr int kNumIntRegs = 32;
inline constexpr int kNumFpRegs = 32;
inline constexpr int kNumStreamUnits = 2;
inline constexpr int kNumStreamCfgRegs = 13;

enum class Opcode : std::uint8_t {
  kAdd,
  kAddi,
  kSub,
  kSlli,
  kLw,
  kLh,
  kSw,
  kBne,
  kBlt,
  kJump,
  kFld,
  kFsd,
  kFmaddD,
  kFaddD,
  kFmulD,
  kFmvZero,
  kScfgw,
  kSsrEnable,
  kSsrDisable,
  kFrep,
  kFpSync,
  kHalt,
};

std::string_view mnemonic(Opcode op);
std::optional<Opcode> opcode_from_mnemonic(std::string_view text);

/// Instructions that are handed to the FPU subsystem queue.
bool is_fp_subsystem(Opcode op);
/// FMADD_D, FADD_D and FMUL_D: the ops counted towards FPU utilization.
bool is_fp_compute(Opcode op);
bool is_branch(Opcode op);

/// Per-unit streamer configuration registers written by SCFGW. Writing
/// kDataBase launches the job described by the other registers.
enum CfgReg : std::uint8_t {
  kCfgStatus = 0,
  kCfgRepeat = 1,
  kCfgBound0 = 2,
  kCfgBound1 = 3,
  kCfgBound2 = 4,
  kCfgBound3 = 5,
  kCfgStride0 = 6,
  kCfgStride1 = 7,
  kCfgStride2 = 8,
  kCfgStride3 = 9,
  kCfgIdxCfg = 10,
  kCfgIdxBase = 11,
  kCfgDataBase = 12,
};

std::string_view cfg_reg_name(int reg);
std::optional<int> cfg_reg_from_name(std::string_view name);

/// Bit positions of the FREP stagger mask.
enum StaggerField : std::uint8_t {
  kStaggerRd = 1u << 0,
  kStaggerRs1 = 1u << 1,
  kStaggerRs2 = 1u << 2,
  kStaggerRs3 = 1u << 3,
};

struct Instruction {
  Opcode opcode = Opcode::kHalt;
  std::uint8_t rd = 0;
  std::uint8_t rs1 = 0;
  std::uint8_t rs2 = 0;
  std::uint8_t rs3 = 0;
  // Offset for loads/stores, value for ADDI/SLLI, target index for branches.
  std::int32_t imm = 0;
  // SCFGW: streamer unit and config register written with x[rs1].
  std::uint8_t unit = 0;
  std::uint8_t cfg_reg = 0;
  // FREP: repeats the next `body_length` instructions x[rs1] times.
  std::uint16_t body_length = 0;
  std::uint8_t stagger_count = 0;
  std::uint8_t stagger_mask = 0;

  bool operator==(const Instruction&) const = default;
};

/// Immutable, validated instruction list. Labels are kept for listings only
/// and do not take part in equality.
class Program {
 public:
  Program() = default;
  Program(std::vector<Instruction> instructions,
          std::map<std::string, int> labels, int entry = 0);

  const std::vector<Instruction>& instructions() const { return instructions_; }
  const Instruction& at(int index) const { return instructions_.at(index); }
  int size() const { return static_cast<int>(instructions_.size()); }
  int entry() const { return entry_; }
  const std::map<std::string, int>& labels() const { return labels_; }

  bool operator==(const Program& other) const {
    return entry_ == other.entry_ && instructions_ == other.instructions_;
  }

 private:
  std::vector<Instruction> instructions_;
  std::map<std::string, int> labels_;
  int entry_ = 0;
};

/// Checks the structural invariants of a finished program: branch targets in
/// range, a HALT present, FREP bodies complete and staggering inside the FP
/// register file. Throws AssemblyError.
void validate(const Program& program);

/// Structural check of instruction `index` within `instructions`; returns the
/// problem or nullopt. validate() applies it to every instruction.
std::optional<std::string> check_instruction(const std::vector<Instruction>& instructions,
                                             int index);

/// Parses assembly text. See docs in README for the grammar.
Program assemble(std::string_view text);

/// Renders a program as assembly text that assembles back to an equal
/// program.
std::string disassemble(const Program& program);

/// One-line rendering of an instruction (branch targets shown as indices).
std::string to_string(const Instruction& instruction);

struct XReg {
  std::uint8_t id;
  constexpr bool operator==(const XReg&) const = default;
};
struct FReg {
  std::uint8_t id;
  constexpr bool operator==(const FReg&) const = default;
};

inline constexpr XReg x(int n) { return XReg{static_cast<std::uint8_t>(n)}; }
inline constexpr FReg f(int n) { return FReg{static_cast<std::uint8_t>(n)}; }
inline constexpr XReg zero{0};

/// Programmatic alternative to assemble(). Register and stagger bounds are
/// checked at each call; labels are resolved by finish().
class ProgramBuilder {
 public:
  void label(const std::string& name);
  /// Fresh label name that cannot collide with user labels.
  std::string unique_label(std::string_view stem);
  int position() const { return static_cast<int>(instructions_.size()); }

  void add(XReg rd, XReg rs1, XReg rs2);
  void sub(XReg rd, XReg rs1, XReg rs2);
  void addi(XReg rd, XReg rs1, std::int32_t imm);
  void li(XReg rd, std::int32_t value) { addi(rd, zero, value); }
  void slli(XReg rd, XReg rs1, int shamt);
  void lw(XReg rd, XReg base, std::int32_t offset);
  void lh(XReg rd, XReg base, std::int32_t offset);
  void sw(XReg src, XReg base, std::int32_t offset);
  void bne(XReg rs1, XReg rs2, const std::string& target);
  void blt(XReg rs1, XReg rs2, const std::string& target);
  void jump(const std::string& target);
  void fld(FReg rd, XReg base, std::int32_t offset);
  void fsd(FReg src, XReg base, std::int32_t offset);
  void fmadd(FReg rd, FReg rs1, FReg rs2, FReg rs3);
  void fadd(FReg rd, FReg rs1, FReg rs2);
  void fmul(FReg rd, FReg rs1, FReg rs2);
  void fmv_zero(FReg rd);
  void scfgw(XReg value, int unit, int cfg_reg);
  void ssr_enable();
  void ssr_disable();
  /// Repeats the next `body_length` instructions x[count] times.
  void frep(XReg count, int body_length, int stagger_count, std::uint8_t stagger_mask);
  void fp_sync();
  void halt();
  void emit(const Instruction& instruction);

  Program finish();

 private:
  void push(Instruction instruction, const std::string& target = {});
  void check_frep_body(const Instruction& instruction);

  std::vector<Instruction> instructions_;
  std::map<std::string, int> labels_;
  std::vector<std::pair<int, std::string>> fixups_;
  int unique_counter_ = 0;
  // FREP currently collecting its body.
  int frep_remaining_ = 0;
  std::uint8_t frep_stagger_count_ = 0;
  std::uint8_t frep_stagger_mask_ = 0;
};

/// Register names accepted by the assembler: xN / fN and RISC-V ABI names.
std::optional<XReg> parse_xreg(std::string_view name);
std::optional<FReg> parse_freg(std::string_view name);
std::string xreg_name(XReg r);
std::string freg_name(FReg r);

}  // namespace issrsim::isa
