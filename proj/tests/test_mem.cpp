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

#include <cstdint>
#include <deque>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "issrsim/error.hpp"
#include "issrsim/mem.hpp"

using namespace issrsim;
using namespace issrsim::mem;

TEST_CASE("byte store little-endian access") {
  ByteStore s(0x1000, 64);
  s.write(0x1000, 8, 0x0807060504030201ull);
  CHECK(s.read(0x1000, 1) == 0x01);
  CHECK(s.read(0x1002, 2) == 0x0403);
  CHECK(s.read(0x1004, 4) == 0x08070605);
  s.write_f64(0x1008, -2.5);
  CHECK(s.read_f64(0x1008) == -2.5);
  CHECK(s.contains(0x1000, 64));
  CHECK_FALSE(s.contains(0x1001, 64));
  CHECK_FALSE(s.contains(0xfff, 1));
}

TEST_CASE("access checks fault on misalignment and range") {
  ByteStore s(0, 64);
  CHECK_NOTHROW(check_access(s, 8, 8, 0));
  CHECK_THROWS_AS(check_access(s, 4, 8, 3), SimulationFault);
  CHECK_THROWS_AS(check_access(s, 64, 8, 3), SimulationFault);
  CHECK_THROWS_AS(check_access(s, 0, 3, 3), SimulationFault);
}

TEST_CASE("ideal memory grants every port in the same tick") {
  IdealMemory m(0, 256, 2);
  m.enable_log(true);
  m.port(0).present({.address = 8, .size = 8, .kind = AccessKind::kWrite, .wdata = 42});
  m.port(1).present({.address = 8, .size = 8});
  m.tick(0);
  CHECK(m.port(0).granted());
  CHECK(m.port(1).granted());
  CHECK(m.log().size() == 2);
  m.port(0).retire();
  m.port(1).retire();
  m.port(1).present({.address = 8, .size = 8});
  m.tick(1);
  CHECK(m.port(1).rdata() == 42);
}

TEST_CASE("tcdm serves one word per bank per cycle without conflicts") {
  TcdmConfig cfg;
  Tcdm t(cfg, cfg.banks);
  for (int p = 0; p < cfg.banks; ++p) {
    t.port(p).present({.address = 8u * static_cast<unsigned>(p) + 4096, .size = 8});
  }
  t.tick(0);
  for (int p = 0; p < cfg.banks; ++p) CHECK(t.port(p).granted());
  CHECK(t.bank_conflicts() == 0);
  CHECK(t.words_served() == 32);
  CHECK(t.bank_of(0) == t.bank_of(8 * 32));
  CHECK(t.bank_of(4) == t.bank_of(0));
  CHECK(t.bank_of(8) == 1);
}

TEST_CASE("tcdm round-robin is fair under persistent contention") {
  TcdmConfig cfg;
  Tcdm t(cfg, 3);
  std::vector<int> grants(3, 0);
  const int cycles = 30;
  for (int c = 0; c < cycles; ++c) {
    for (int p = 0; p < 3; ++p) {
      if (!t.port(p).busy()) t.port(p).present({.address = 256u * static_cast<unsigned>(p), .size = 8});
    }
    t.tick(static_cast<std::uint64_t>(c));
    int granted_now = 0;
    for (int p = 0; p < 3; ++p) {
      if (t.port(p).granted()) {
        ++grants[static_cast<std::size_t>(p)];
        ++granted_now;
        t.port(p).retire();
      }
    }
    CHECK(granted_now == 1);
  }
  for (int g : grants) CHECK(g == cycles / 3);
  std::uint64_t waited = 0;
  for (int p = 0; p < 3; ++p) waited += t.port(p).stats().conflict_cycles;
  CHECK(waited == 2u * cycles);
}

TEST_CASE("dma copies data and takes one cycle per beat after startup") {
  TcdmConfig cfg;
  Tcdm t(cfg, 0);
  ByteStore main(0x8000'0000ull, 1 << 16);
  std::vector<std::uint8_t> src(1024);
  std::iota(src.begin(), src.end(), 0);
  main.write_bytes(0x8000'0000ull, src);
  DmaConfig dcfg;
  const std::uint64_t done = run_dma_standalone(
      t, main, {.src = 0x8000'0000ull, .dst = 512, .inner_bytes = 1024}, dcfg);
  CHECK(done == dcfg.startup_cycles + 1024 / dcfg.beat_bytes);
  std::vector<std::uint8_t> got(1024);
  t.store().read_bytes(512, got);
  CHECK(got == src);
}

TEST_CASE("dma two-dimensional transfer with unaligned rows") {
  TcdmConfig cfg;
  Tcdm t(cfg, 0);
  ByteStore main(0, 4096);
  for (std::uint64_t i = 0; i < 4096; ++i) main.write(i, 1, i & 0xff);
  const DmaDescriptor d{.src_space = Space::kMain,
                        .src = 3,
                        .dst_space = Space::kTcdm,
                        .dst = 1001,
                        .inner_bytes = 77,
                        .reps = 5,
                        .src_stride = 200,
                        .dst_stride = 100};
  run_dma_standalone(t, main, d);
  for (std::uint64_t r = 0; r < 5; ++r) {
    for (std::uint64_t b = 0; b < 77; ++b) {
      CHECK(t.store().read(1001 + r * 100 + b, 1) == ((3 + r * 200 + b) & 0xff));
    }
  }
  // Bytes just outside the rows stay untouched.
  CHECK(t.store().read(1000, 1) == 0);
  CHECK(t.store().read(1001 + 77, 1) == 0);
}

TEST_CASE("dma wins contested banks when prioritized") {
  for (bool priority : {true, false}) {
    TcdmConfig cfg;
    cfg.dma_priority = priority;
    Tcdm t(cfg, 1);
    ByteStore main(0, 4096);
    DmaEngine dma(t, main);
    const int id = dma.submit({.src = 0, .dst = 0, .inner_bytes = 2048}, 0);
    int core_grants = 0;
    std::uint64_t cycle = 0;
    for (; !dma.done(id); ++cycle) {
      if (!t.port(0).busy()) t.port(0).present({.address = 0, .size = 8});
      dma.request(cycle);
      t.tick(cycle);
      dma.complete(cycle);
      if (t.port(0).granted()) {
        ++core_grants;
        t.port(0).retire();
      }
    }
    if (priority) {
      CHECK(*dma.completion_cycle(id) == 4 + 2048 / 64);
      CHECK(dma.stats().contention_cycles == 0);
    } else {
      CHECK(*dma.completion_cycle(id) > 4 + 2048 / 64);
      CHECK(dma.stats().contention_cycles > 0);
    }
    CHECK(core_grants > 0);
  }
}

TEST_CASE("replaying a write log rebuilds the image") {
  IdealMemory m(0, 128, 1);
  m.enable_log(true);
  for (std::uint64_t i = 0; i < 8; ++i) {
    m.port(0).present({.address = 8 * i, .size = 8, .kind = AccessKind::kWrite, .wdata = i * 3});
    m.tick(i);
    m.port(0).retire();
  }
  ByteStore fresh(0, 128);
  replay_writes(fresh, m.log());
  CHECK(fresh == m.store());
}
