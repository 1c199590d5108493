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

// Text front end for the mini ISA.
//
// Grammar, one statement per line:
//   line     := { label ':' } [ mnemonic [ operand { ',' operand } ] ] [ comment ]
//   comment  := ('#' | ';' | '//') ...
//   operand  := register | immediate | offset '(' register ')' | label | '@' index
// Immediates accept decimal, 0x hex and 0b binary with an optional sign.

#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

#include "issrsim/error.hpp"
#include "issrsim/isa.hpp"

namespace issrsim::isa {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_label_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$';
}

bool is_label_name(std::string_view s) {
  if (s.empty() || std::isdigit(static_cast<unsigned char>(s.front()))) return false;
  for (char c : s) {
    if (!is_label_char(c)) return false;
  }
  return true;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  s = trim(s);
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    s.remove_prefix(2);
  } else if (s.size() > 2 && s[0] == '0' && (s[1] == 'b' || s[1] == 'B')) {
    base = 2;
    s.remove_prefix(2);
  }
  if (s.empty()) return std::nullopt;
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value, base);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  const auto signed_value = static_cast<std::int64_t>(value);
  return negative ? -signed_value : signed_value;
}

struct Statement {
  int line = 0;
  std::string mnemonic;
  std::vector<std::string> operands;
};

class Parser {
 public:
  explicit Parser(int line) : line_(line) {}

  [[noreturn]] void fail(const std::string& what) const { throw AssemblyError(line_, what); }

  XReg xreg(std::string_view s) const {
    auto r = parse_xreg(trim(s));
    if (!r) fail("bad integer register '" + std::string(s) + "'");
    return *r;
  }

  FReg freg(std::string_view s) const {
    auto r = parse_freg(trim(s));
    if (!r) fail("bad FP register '" + std::string(s) + "'");
    return *r;
  }

  std::int32_t imm(std::string_view s) const {
    auto v = parse_int(s);
    if (!v) fail("bad immediate '" + std::string(s) + "'");
    if (*v < INT32_MIN || *v > INT32_MAX) fail("immediate out of range");
    return static_cast<std::int32_t>(*v);
  }

  // "offset(reg)" with an optional offset.
  std::pair<std::int32_t, XReg> mem(std::string_view s) const {
    s = trim(s);
    const auto open = s.find('(');
    const auto close = s.rfind(')');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
      fail("expected offset(register), got '" + std::string(s) + "'");
    }
    const auto offset_text = trim(s.substr(0, open));
    const std::int32_t offset = offset_text.empty() ? 0 : imm(offset_text);
    return {offset, xreg(s.substr(open + 1, close - open - 1))};
  }

  void arity(const Statement& st, std::size_t n) const {
    if (st.operands.size() != n) {
      fail("'" + st.mnemonic + "' expects " + std::to_string(n) + " operand(s)");
    }
  }

 private:
  int line_;
};

std::vector<std::string> split_operands(std::string_view s) {
  std::vector<std::string> out;
  s = trim(s);
  if (s.empty()) return out;
  std::size_t start = 0;
  int depth = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i < s.size() && s[i] == '(') ++depth;
    if (i < s.size() && s[i] == ')') --depth;
    if (i == s.size() || (s[i] == ',' && depth == 0)) {
      out.emplace_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

std::string_view strip_comment(std::string_view line) {
  std::size_t cut = line.size();
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '#' || line[i] == ';' || (line[i] == '/' && i + 1 < line.size() && line[i + 1] == '/')) {
      cut = i;
      break;
    }
  }
  return line.substr(0, cut);
}

}  // namespace

Program assemble(std::string_view text) {
  std::vector<Instruction> instructions;
  std::vector<int> source_lines;
  std::map<std::string, int> labels;
  std::vector<std::pair<std::size_t, std::string>> fixups;

  int line_number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_number;
    const Parser p(line_number);

    line = trim(strip_comment(line));
    // Leading label definitions.
    while (true) {
      const auto colon = line.find(':');
      if (colon == std::string_view::npos) break;
      const auto name = trim(line.substr(0, colon));
      if (!is_label_name(name)) break;
      if (!labels.emplace(std::string(name), static_cast<int>(instructions.size())).second) {
        p.fail("duplicate label '" + std::string(name) + "'");
      }
      line = trim(line.substr(colon + 1));
    }
    if (line.empty()) continue;

    Statement st;
    st.line = line_number;
    const auto space = line.find_first_of(" \t");
    st.mnemonic = std::string(line.substr(0, space));
    for (auto& c : st.mnemonic) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (space != std::string_view::npos) st.operands = split_operands(line.substr(space));
    // Pseudo-instruction: li rd, imm is addi rd, x0, imm.
    if (st.mnemonic == "li" && st.operands.size() == 2) {
      st.mnemonic = "addi";
      st.operands.insert(st.operands.begin() + 1, "x0");
    }

    const auto op = opcode_from_mnemonic(st.mnemonic);
    if (!op) p.fail("unknown mnemonic '" + st.mnemonic + "'");

    Instruction inst{.opcode = *op};
    std::string target;
    const auto& o = st.operands;
    switch (*op) {
      case Opcode::kAdd:
      case Opcode::kSub:
        p.arity(st, 3);
        inst.rd = p.xreg(o[0]).id, inst.rs1 = p.xreg(o[1]).id, inst.rs2 = p.xreg(o[2]).id;
        break;
      case Opcode::kAddi:
      case Opcode::kSlli:
        p.arity(st, 3);
        inst.rd = p.xreg(o[0]).id, inst.rs1 = p.xreg(o[1]).id, inst.imm = p.imm(o[2]);
        if (*op == Opcode::kSlli && (inst.imm < 0 || inst.imm > 63)) {
          p.fail("shift amount out of range");
        }
        break;
      case Opcode::kLw:
      case Opcode::kLh: {
        p.arity(st, 2);
        inst.rd = p.xreg(o[0]).id;
        const auto [offset, base] = p.mem(o[1]);
        inst.imm = offset, inst.rs1 = base.id;
        break;
      }
      case Opcode::kSw: {
        p.arity(st, 2);
        inst.rs2 = p.xreg(o[0]).id;
        const auto [offset, base] = p.mem(o[1]);
        inst.imm = offset, inst.rs1 = base.id;
        break;
      }
      case Opcode::kBne:
      case Opcode::kBlt:
        p.arity(st, 3);
        inst.rs1 = p.xreg(o[0]).id, inst.rs2 = p.xreg(o[1]).id;
        target = o[2];
        break;
      case Opcode::kJump:
        p.arity(st, 1);
        target = o[0];
        break;
      case Opcode::kFld: {
        p.arity(st, 2);
        inst.rd = p.freg(o[0]).id;
        const auto [offset, base] = p.mem(o[1]);
        inst.imm = offset, inst.rs1 = base.id;
        break;
      }
      case Opcode::kFsd: {
        p.arity(st, 2);
        inst.rs2 = p.freg(o[0]).id;
        const auto [offset, base] = p.mem(o[1]);
        inst.imm = offset, inst.rs1 = base.id;
        break;
      }
      case Opcode::kFmaddD:
        p.arity(st, 4);
        inst.rd = p.freg(o[0]).id, inst.rs1 = p.freg(o[1]).id, inst.rs2 = p.freg(o[2]).id;
        inst.rs3 = p.freg(o[3]).id;
        break;
      case Opcode::kFaddD:
      case Opcode::kFmulD:
        p.arity(st, 3);
        inst.rd = p.freg(o[0]).id, inst.rs1 = p.freg(o[1]).id, inst.rs2 = p.freg(o[2]).id;
        break;
      case Opcode::kFmvZero:
        p.arity(st, 1);
        inst.rd = p.freg(o[0]).id;
        break;
      case Opcode::kScfgw: {
        p.arity(st, 3);
        inst.rs1 = p.xreg(o[0]).id;
        const auto unit = p.imm(o[1]);
        if (unit < 0 || unit >= kNumStreamUnits) p.fail("invalid stream unit");
        inst.unit = static_cast<std::uint8_t>(unit);
        auto reg = cfg_reg_from_name(trim(o[2]));
        if (!reg) reg = p.imm(o[2]);
        if (*reg < 0 || *reg >= kNumStreamCfgRegs) p.fail("invalid stream config register");
        inst.cfg_reg = static_cast<std::uint8_t>(*reg);
        break;
      }
      case Opcode::kFrep: {
        p.arity(st, 4);
        inst.rs1 = p.xreg(o[0]).id;
        const auto body = p.imm(o[1]);
        const auto stagger = p.imm(o[2]);
        const auto mask = p.imm(o[3]);
        if (body < 1 || body > 0xffff) p.fail("FREP body must be non-empty");
        if (stagger < 0 || stagger >= kNumFpRegs) p.fail("stagger count out of range");
        if (mask < 0 || mask > 0xf) p.fail("stagger mask out of range");
        inst.body_length = static_cast<std::uint16_t>(body);
        inst.stagger_count = static_cast<std::uint8_t>(stagger);
        inst.stagger_mask = static_cast<std::uint8_t>(mask);
        break;
      }
      case Opcode::kSsrEnable:
      case Opcode::kSsrDisable:
      case Opcode::kFpSync:
      case Opcode::kHalt:
        p.arity(st, 0);
        break;
    }
    if (!target.empty()) fixups.emplace_back(instructions.size(), target);
    instructions.push_back(inst);
    source_lines.push_back(line_number);
  }

  for (const auto& [index, target] : fixups) {
    const Parser p(source_lines[index]);
    if (!target.empty() && target.front() == '@') {
      instructions[index].imm = p.imm(std::string_view(target).substr(1));
      continue;
    }
    auto it = labels.find(target);
    if (it == labels.end()) p.fail("unresolved label '" + target + "'");
    instructions[index].imm = it->second;
  }

  for (std::size_t i = 0; i < instructions.size(); ++i) {
    if (auto error = check_instruction(instructions, static_cast<int>(i))) {
      throw AssemblyError(source_lines[i], *error);
    }
  }
  return Program(std::move(instructions), std::move(labels));
}

std::string disassemble(const Program& program) {
  std::map<int, std::vector<std::string>> names;
  for (const auto& [name, index] : program.labels()) names[index].push_back(name);

  std::set<int> targets;
  for (const auto& inst : program.instructions()) {
    if (is_branch(inst.opcode)) targets.insert(inst.imm);
  }
  for (int t : targets) {
    if (!names.count(t)) names[t].push_back("L" + std::to_string(t));
  }

  std::ostringstream os;
  for (int i = 0; i < program.size(); ++i) {
    if (auto it = names.find(i); it != names.end()) {
      for (const auto& name : it->second) os << name << ":\n";
    }
    const Instruction& inst = program.at(i);
    std::string text = to_string(inst);
    if (is_branch(inst.opcode)) {
      const auto at = text.rfind('@');
      text = text.substr(0, at) + names.at(inst.imm).front();
    }
    os << "    " << text << '\n';
  }
  return os.str();
}

}  // namespace issrsim::isa
