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

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "doctest.h"
#include "issrsim/core.hpp"
#include "issrsim/error.hpp"
#include "issrsim/isa.hpp"

using namespace issrsim;
using namespace issrsim::core;

namespace {

mem::ByteStore blank() { return mem::ByteStore(0, 1 << 16); }

CcResult run(const std::string& text, const CoreConfig& config = {},
             const mem::ByteStore& image = blank()) {
  return simulate_cc(isa::assemble(text), config, image);
}

// N dependent FMADDs through one FREP, optionally staggered over four
// accumulators.
std::string fmadd_loop(int n, bool staggered) {
  return "li a0, " + std::to_string(n) + R"(
          li sp, 256
          fld f1, 0(sp)
          fld f2, 8(sp)
          frep a0, 1, )" +
         std::string(staggered ? "3, 0b1001" : "0, 0") + R"(
          fmadd.d f3, f1, f2, f3
          fadd.d f3, f3, f4
          fadd.d f5, f5, f6
          fadd.d f3, f3, f5
          fsd f3, 16(sp)
          fpsync
          halt)";
}

mem::ByteStore operands(double a, double b) {
  mem::ByteStore s = blank();
  s.write_f64(256, a);
  s.write_f64(264, b);
  return s;
}

}  // namespace

TEST_CASE("integer loop executes and stores") {
  const int n = 50;
  CcResult r = run("li x5, " + std::to_string(n) + R"(
      loop: addi x6, x6, 2
            addi x5, x5, -1
            bne x5, x0, loop
            sw x6, 64(x0)
            halt)");
  CHECK(r.image.read(64, 4) == 2u * n);
  CHECK(r.stats.instructions == 3u * n + 3);
  CHECK(r.stats.cycles >= r.stats.instructions);
}

TEST_CASE("lh and lw zero-extend, sub subtracts") {
  mem::ByteStore s = blank();
  s.write(32, 2, 0xffff);
  s.write(40, 4, 0xfffffffe);
  CcResult r = run(R"(
      lh x5, 32(x0)
      lw x6, 40(x0)
      sub x7, x6, x5
      sw x5, 64(x0)
      sw x7, 72(x0)
      halt)", {}, s);
  CHECK(r.image.read(64, 4) == 0xffffu);
  CHECK(r.image.read(72, 4) == 0xfffffffeu - 0xffffu);
}

TEST_CASE("dependent FMADD chain runs at one op per latency") {
  const int n = 200;
  CoreConfig cfg;
  CcResult r = run(fmadd_loop(n, false), cfg, operands(1.5, 2.0));
  CHECK(r.stats.fmadds == static_cast<std::uint64_t>(n));
  CHECK(r.image.read_f64(272) == doctest::Approx(3.0 * n));
  const auto latency = static_cast<std::uint64_t>(cfg.timing.fpu_latency);
  CHECK(r.stats.cycles >= latency * n);
  CHECK(r.stats.cycles <= latency * n + 40);
  CHECK(r.stats.fpu_state(FpuState::kRaw) >= (latency - 1) * (n - 1));
}

TEST_CASE("staggered FREP hides the latency") {
  const int n = 400;
  CcResult r = run(fmadd_loop(n, true), {}, operands(1.5, 2.0));
  CHECK(r.stats.fmadds == static_cast<std::uint64_t>(n));
  CHECK(r.image.read_f64(272) == doctest::Approx(3.0 * n));
  CHECK(r.stats.cycles <= static_cast<std::uint64_t>(n) + 40);
  CHECK(r.stats.fp_dispatches >= static_cast<std::uint64_t>(n));
}

TEST_CASE("latency changes shift the chain by one cycle per op") {
  const int n = 100;
  CoreConfig a, b;
  b.timing.fpu_latency = a.timing.fpu_latency + 2;
  const auto ca = run(fmadd_loop(n, false), a, operands(1, 1)).stats.cycles;
  const auto cb = run(fmadd_loop(n, false), b, operands(1, 1)).stats.cycles;
  CHECK(cb - ca >= 2u * (n - 1));
  CHECK(cb - ca <= 2u * (n + 4));
}

TEST_CASE("FREP with a zero count skips its body") {
  CcResult r = run(R"(
      frep x0, 1, 0, 0
      fmadd.d f3, f1, f2, f3
      halt)");
  CHECK(r.stats.fmadds == 0);
}

TEST_CASE("load-use distance follows the contract") {
  const char* text = R"(
      lw x5, 0(x0)
      add x6, x5, x5
      lw x7, 8(x0)
      add x8, x7, x7
      halt)";
  CoreConfig a, b;
  b.timing.load_use_cycles = a.timing.load_use_cycles + 3;
  CcResult ra = run(text, a);
  CcResult rb = run(text, b);
  CHECK(rb.stats.cycles - ra.stats.cycles == 6);
  CHECK(rb.stats.core_state(CoreState::kLoadUse) - ra.stats.core_state(CoreState::kLoadUse) == 6);
}

TEST_CASE("config writes occupy the core") {
  const char* text = R"(
      li x5, 4
      scfgw x5, 0, bound0
      scfgw x5, 0, bound1
      scfgw x5, 0, stride0
      scfgw x5, 1, stride1
      halt)";
  CoreConfig a, b;
  b.timing.config_write_cycles = a.timing.config_write_cycles + 2;
  CHECK(run(text, b).stats.cycles - run(text, a).stats.cycles == 8);
}

TEST_CASE("affine streams feed a dot product") {
  const int n = 64;
  mem::ByteStore s = blank();
  double want = 0.0;
  std::array<double, 4> partial{};
  for (int i = 0; i < n; ++i) {
    const double a = 0.25 * i + 1.0;
    const double b = 3.0 - 0.125 * i;
    s.write_f64(0x1000 + 8u * static_cast<unsigned>(i), a);
    s.write_f64(0x2000 + 8u * static_cast<unsigned>(i), b);
    partial[static_cast<std::size_t>(i % 4)] = std::fma(a, b, partial[static_cast<std::size_t>(i % 4)]);
  }
  want = ((partial[0] + partial[1]) + partial[2]) + partial[3];
  CcResult r = run("li x5, " + std::to_string(n) + R"(
      li x6, 8
      scfgw x5, 0, bound0
      scfgw x6, 0, stride0
      scfgw x5, 1, bound0
      scfgw x6, 1, stride0
      li x7, 0x1000
      scfgw x7, 0, data_base
      li x7, 0x2000
      scfgw x7, 1, data_base
      ssr.enable
      frep x5, 1, 3, 0b1001
      fmadd.d f4, f0, f1, f4
      fadd.d f4, f4, f5
      fadd.d f4, f4, f6
      fadd.d f4, f4, f7
      ssr.disable
      fsd f4, 0x100(x0)
      fpsync
      halt)", {}, s);
  CHECK(r.image.read_f64(0x100) == want);
  CHECK(r.stats.stream_data[0] == static_cast<std::uint64_t>(n));
  CHECK(r.stats.stream_data[1] == static_cast<std::uint64_t>(n));
  CHECK(r.stats.fmadds == static_cast<std::uint64_t>(n));
}

TEST_CASE("reading an unconfigured stream deadlocks") {
  CoreConfig cfg;
  cfg.deadlock_cycles = 500;
  CHECK_THROWS_AS(run("ssr.enable\nfadd.d f3, f0, f0\nfpsync\nhalt\n", cfg), SimulationFault);
}

TEST_CASE("misaligned load faults with its instruction index") {
  try {
    run("addi x1, x0, 1\nlw x5, 2(x0)\nhalt\n");
    FAIL("expected a fault");
  } catch (const SimulationFault& e) {
    CHECK(e.pc() == 1);
  }
}

TEST_CASE("stores outside memory fault") {
  CHECK_THROWS_AS(run("li x5, 0x7ff8\nslli x5, x5, 8\nsw x5, 0(x5)\nhalt\n"), SimulationFault);
}

TEST_CASE("invalid contracts are rejected") {
  CoreConfig cfg;
  cfg.timing.fpu_latency = 0;
  CHECK_THROWS_AS(run("halt\n", cfg), ConfigError);
}

TEST_CASE("speedup and relative error helpers") {
  RunReport base{.label = "base", .stats = {}, .result = {1.0, 2.0}};
  RunReport fast{.label = "fast", .stats = {}, .result = {1.0, 2.0}};
  base.stats.cycles = 300;
  fast.stats.cycles = 100;
  CHECK(speedup(base, fast) == doctest::Approx(3.0));
  CHECK(max_relative_error({1.0, 200.0}, {1.0, 100.0}) == doctest::Approx(1.0));
  CHECK(max_relative_error({0.5}, {0.0}) == doctest::Approx(0.5));
  CHECK(max_relative_error({1.0}, {1.0, 2.0}) == std::numeric_limits<double>::infinity());
}

TEST_CASE("state counters cover every cycle") {
  CcResult r = run(fmadd_loop(64, true), {}, operands(1, 1));
  std::uint64_t fpu = 0, core = 0;
  for (auto c : r.stats.fpu_states) fpu += c;
  for (auto c : r.stats.core_states) core += c;
  CHECK(fpu == r.stats.cycles);
  CHECK(core == r.stats.cycles);
  CHECK(r.stats.utilization() == doctest::Approx(double(r.stats.fp_compute_ops) / double(r.stats.cycles)));
}
