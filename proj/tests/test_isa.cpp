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

#include <string>

#include "doctest.h"
#include "issrsim/error.hpp"
#include "issrsim/isa.hpp"

using namespace issrsim;
using namespace issrsim::isa;

namespace {

const char* kSample = R"(
start:  addi a0, zero, 5      # count
        li_loop:
        scfgw t0, 1, bound0
        frep a0, 2, 3, 0b1001
        fmadd.d ft3, ft0, ft1, ft3
        fadd.d ft4, ft4, ft5
        lw x5, 8(x6)          ; trailing comment
        bne x5, x0, li_loop   // another
        fld f1, -8(sp)
        fmv.zero f2
        ssr.enable
        fpsync
        halt
)";

int error_line(const char* text) {
  try {
    assemble(text);
  } catch (const AssemblyError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("mnemonics round-trip through the opcode table") {
  for (int i = 0; i <= static_cast<int>(Opcode::kHalt); ++i) {
    auto op = static_cast<Opcode>(i);
    auto back = opcode_from_mnemonic(mnemonic(op));
    REQUIRE(back.has_value());
    CHECK(*back == op);
  }
  CHECK_FALSE(opcode_from_mnemonic("fdiv.d").has_value());
}

TEST_CASE("config register names") {
  for (int r = 0; r < kNumStreamCfgRegs; ++r) {
    CHECK(cfg_reg_from_name(cfg_reg_name(r)) == r);
  }
  CHECK(cfg_reg_from_name("bound2") == kCfgBound2);
  CHECK(cfg_reg_from_name("idx_base") == kCfgIdxBase);
  CHECK_FALSE(cfg_reg_from_name("bound4").has_value());
}

TEST_CASE("register names accept numeric and ABI spellings") {
  CHECK(parse_xreg("x0") == zero);
  CHECK(parse_xreg("a0") == x(10));
  CHECK(parse_xreg("sp") == x(2));
  CHECK(parse_xreg("t6") == x(31));
  CHECK_FALSE(parse_xreg("x32").has_value());
  CHECK(parse_freg("ft0") == f(0));
  CHECK(parse_freg("f31") == f(31));
  CHECK_FALSE(parse_freg("x1").has_value());
}

TEST_CASE("assembler fields") {
  Program p = assemble(kSample);
  REQUIRE(p.size() == 12);
  CHECK(p.labels().at("start") == 0);
  CHECK(p.labels().at("li_loop") == 1);

  CHECK(p.at(0).opcode == Opcode::kAddi);
  CHECK(p.at(0).rd == 10);
  CHECK(p.at(0).imm == 5);

  CHECK(p.at(1).opcode == Opcode::kScfgw);
  CHECK(p.at(1).rs1 == 5);
  CHECK(p.at(1).unit == 1);
  CHECK(p.at(1).cfg_reg == kCfgBound0);

  const Instruction& frep = p.at(2);
  CHECK(frep.opcode == Opcode::kFrep);
  CHECK(frep.rs1 == 10);
  CHECK(frep.body_length == 2);
  CHECK(frep.stagger_count == 3);
  CHECK(frep.stagger_mask == (kStaggerRd | kStaggerRs3));

  CHECK(p.at(5).imm == 8);
  CHECK(p.at(6).opcode == Opcode::kBne);
  CHECK(p.at(6).imm == 1);
  CHECK(p.at(7).imm == -8);
  CHECK(p.at(7).rs1 == 2);
}

TEST_CASE("disassembly round-trips") {
  Program p = assemble(kSample);
  std::string text = disassemble(p);
  Program q = assemble(text);
  CHECK(p == q);
  CHECK(disassemble(q) == text);
}

TEST_CASE("immediate forms") {
  Program p = assemble("addi x1, x0, 0x10\naddi x2, x0, -0b11\naddi x3, x0, +7\nbne x1, x2, @3\nhalt");
  CHECK(p.at(0).imm == 16);
  CHECK(p.at(1).imm == -3);
  CHECK(p.at(2).imm == 7);
  CHECK(p.at(3).imm == 3);
  CHECK(assemble("li a1, -12\nhalt").at(0) == assemble("addi x11, x0, -12\nhalt").at(0));
}

TEST_CASE("assembly errors carry the line") {
  CHECK(error_line("halt\nfdiv.d f0, f1, f2\n") == 2);
  CHECK(error_line("addi x1, x0, 1\n\nbne x1, x0, nowhere\nhalt\n") == 3);
  CHECK(error_line("addi x1, x0\nhalt\n") == 1);
  CHECK(error_line("a:\na:\nhalt\n") == 2);
  CHECK(error_line("addi x40, x0, 1\nhalt\n") == 1);
  CHECK(error_line("scfgw x1, 2, bound0\nhalt\n") == 1);
}

TEST_CASE("program-level validation") {
  CHECK_THROWS_AS(assemble("addi x1, x0, 1\n"), AssemblyError);  // no halt
  CHECK_THROWS_AS(assemble(""), AssemblyError);
  // FREP body holding an integer op.
  CHECK_THROWS_AS(assemble("frep x1, 1, 0, 0\naddi x1, x1, 1\nhalt\n"), AssemblyError);
  // FREP body running past the end.
  CHECK_THROWS_AS(assemble("frep x1, 2, 0, 0\nfadd.d f0, f0, f1\nhalt\n"), AssemblyError);
  // Stagger leaving the register file.
  CHECK_THROWS_AS(assemble("frep x1, 1, 3, 1\nfadd.d f30, f0, f1\nhalt\n"), AssemblyError);
  CHECK_NOTHROW(assemble("frep x1, 1, 3, 1\nfadd.d f28, f0, f1\nhalt\n"));
  CHECK_THROWS_AS(assemble("slli x1, x1, 64\nhalt\n"), AssemblyError);
}

TEST_CASE("builder resolves labels and rejects bad bodies") {
  ProgramBuilder b;
  std::string loop = b.unique_label("loop");
  std::string other = b.unique_label("loop");
  CHECK(loop != other);
  b.li(x(5), 3);
  b.label(loop);
  b.addi(x(5), x(5), -1);
  b.bne(x(5), zero, loop);
  b.halt();
  Program p = b.finish();
  CHECK(p.at(2).imm == 1);

  ProgramBuilder bad;
  bad.frep(x(1), 1, 0, 0);
  CHECK_THROWS_AS(bad.lw(x(2), x(3), 0), AssemblyError);

  ProgramBuilder unresolved;
  unresolved.jump("missing");
  unresolved.halt();
  CHECK_THROWS_AS(unresolved.finish(), AssemblyError);
}

TEST_CASE("check_instruction reports branch range") {
  std::vector<Instruction> insts(2);
  insts[0] = {.opcode = Opcode::kJump, .imm = 7};
  insts[1] = {.opcode = Opcode::kHalt};
  auto error = check_instruction(insts, 0);
  REQUIRE(error.has_value());
  CHECK(error->find("branch") != std::string::npos);
  CHECK_FALSE(check_instruction(insts, 1).has_value());
}
