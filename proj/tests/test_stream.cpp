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
#include <vector>

#include "doctest.h"
#include "issrsim/error.hpp"
#include "issrsim/formats.hpp"
#include "issrsim/stream.hpp"

using namespace issrsim;
using namespace issrsim::stream;

namespace {

// Every address of a four-deep affine nest, innermost loop first.
std::vector<std::uint64_t> enumerate(std::uint64_t base, const std::array<std::uint64_t, 4>& bounds,
                                     const std::array<std::int64_t, 4>& absolute) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t i3 = 0; i3 < bounds[3]; ++i3)
    for (std::uint64_t i2 = 0; i2 < bounds[2]; ++i2)
      for (std::uint64_t i1 = 0; i1 < bounds[1]; ++i1)
        for (std::uint64_t i0 = 0; i0 < bounds[0]; ++i0) {
          const std::int64_t off = static_cast<std::int64_t>(i0) * absolute[0] +
                                   static_cast<std::int64_t>(i1) * absolute[1] +
                                   static_cast<std::int64_t>(i2) * absolute[2] +
                                   static_cast<std::int64_t>(i3) * absolute[3];
          out.push_back(base + static_cast<std::uint64_t>(off));
        }
  return out;
}

std::vector<std::uint64_t> drain(AffineIterator it) {
  std::vector<std::uint64_t> out;
  while (auto a = it.next()) out.push_back(*a);
  return out;
}

}  // namespace

TEST_CASE("affine iterator matches nested enumeration") {
  formats::Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::array<std::uint64_t, 4> bounds{};
    std::array<std::int64_t, 4> absolute{};
    for (int l = 0; l < 4; ++l) {
      bounds[l] = 1 + rng.uniform(4);
      absolute[l] = 8 * static_cast<std::int64_t>(rng.uniform(40));
    }
    StreamJob job;
    job.bounds = bounds;
    job.strides = relative_strides(bounds, absolute);
    job.data_base = 0x4000;
    CHECK(drain(AffineIterator(job)) == enumerate(0x4000, bounds, absolute));
  }
}

TEST_CASE("relative strides step from the end of the inner loops") {
  StreamJob job;
  job.bounds = {2, 3, 1, 1};
  job.strides = {8, 64, 0, 0};
  // Raw strides are applied when a loop advances, after inner loops wrap.
  CHECK(drain(AffineIterator(job)) == std::vector<std::uint64_t>{0, 8, 72, 80, 144, 152});
  CHECK(relative_strides({2, 3, 1, 1}, {8, 64, 0, 0}) == std::array<std::int64_t, 4>{8, 56, -136, -136});
}

TEST_CASE("config registers round-trip a job") {
  StreamJob job;
  job.mode = Mode::kIndirect;
  job.direction = Direction::kWrite;
  job.bounds = {17, 1, 1, 1};
  job.index_base = 0x102;
  job.index_width = 16;
  job.data_base = 0x800;
  job.shift = 2;
  job.repeat = 3;
  CHECK(job_from_registers(registers_from_job(job)) == job);
  CHECK(pack_idxcfg(Mode::kAffine, 32, Direction::kRead, 0) == 0);
  CHECK(job.element_count() == 17);
}

TEST_CASE("index serializer lanes") {
  const std::uint64_t word = 0x0004'0003'0002'0001ull;
  CHECK(serialize_indices(word, 16, 0) == std::vector<std::uint32_t>{1, 2, 3, 4});
  CHECK(serialize_indices(word, 16, 2) == std::vector<std::uint32_t>{3, 4});
  CHECK(serialize_indices(word, 16, 1, 2) == std::vector<std::uint32_t>{2, 3});
  CHECK(serialize_indices(word, 32, 0) == std::vector<std::uint32_t>{0x00020001u, 0x00040003u});
}

TEST_CASE("port arbiter alternates only when both sides wait") {
  PortArbiter arb;
  CHECK(arb.arbitrate(true, true) == Grant::kData);
  CHECK(arb.arbitrate(true, true) == Grant::kIndex);
  CHECK(arb.arbitrate(true, true) == Grant::kData);
  CHECK(arb.arbitrate(true, false) == Grant::kIndex);
  CHECK(arb.arbitrate(false, true) == Grant::kData);
  CHECK(arb.arbitrate(false, false) == Grant::kNone);
  CHECK(arb.arbitrate(true, true) == Grant::kIndex);
}

TEST_CASE("standalone affine read returns the strided elements at one per cycle") {
  mem::ByteStore image(0, 4096);
  for (int i = 0; i < 256; ++i) image.write_f64(8u * static_cast<unsigned>(i), i);
  StreamJob job;
  job.bounds = {4, 5, 1, 1};
  job.strides = relative_strides(job.bounds, {16, 128, 0, 0});
  StreamUnitConfig cfg;
  StandaloneRun run = run_standalone(job, cfg, image);
  std::vector<double> want;
  for (auto a : enumerate(0, job.bounds, {16, 128, 0, 0})) want.push_back(static_cast<double>(a / 8));
  CHECK(run.values == want);
  REQUIRE(run.data_cycles.size() == 20);
  CHECK(run.data_cycles.back() - run.data_cycles.front() == 19);
}

TEST_CASE("repeat pops every element several times") {
  mem::ByteStore image(0, 256);
  for (int i = 0; i < 4; ++i) image.write_f64(8u * static_cast<unsigned>(i), i + 1);
  StreamJob job;
  job.bounds = {4, 1, 1, 1};
  job.strides = {8, 0, 0, 0};
  job.repeat = 3;
  StandaloneRun run = run_standalone(job, {}, image);
  CHECK(run.values == std::vector<double>{1, 1, 1, 2, 2, 2, 3, 3, 3, 4, 4, 4});
  CHECK(run.data_cycles.size() == 4);
}

TEST_CASE("indirect read gathers x[idx] for both widths and misaligned bases") {
  for (int width : {16, 32}) {
    for (std::uint64_t misalign : {0u, 2u, 4u, 6u}) {
      if (misalign % static_cast<unsigned>(width / 8) != 0) continue;
      formats::Rng rng(static_cast<std::uint64_t>(width) + misalign);
      const std::uint64_t n = 37;
      std::vector<std::uint32_t> idx(n);
      for (auto& i : idx) i = static_cast<std::uint32_t>(rng.uniform(512));
      mem::ByteStore image(0, 1 << 15);
      std::vector<double> x(512);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.5 * static_cast<double>(i) - 3.0;
      formats::store_f64(image, 0x2000, x);
      formats::store_indices(image, 0x100 + misalign, idx, width);

      StreamJob job;
      job.mode = Mode::kIndirect;
      job.bounds = {n, 1, 1, 1};
      job.index_base = 0x100 + misalign;
      job.index_width = width;
      job.data_base = 0x2000;
      StreamUnitConfig cfg;
      cfg.indirection = true;
      StandaloneRun run = run_standalone(job, cfg, image);
      REQUIRE(run.values.size() == n);
      for (std::uint64_t k = 0; k < n; ++k) CHECK(run.values[k] == x[idx[k]]);

      // One index word per 64/W data accesses shares the port.
      const std::uint64_t lanes = 64 / static_cast<std::uint64_t>(width);
      const std::uint64_t words = (misalign / (static_cast<std::uint64_t>(width) / 8) + n + lanes - 1) / lanes;
      const std::uint64_t span = run.data_cycles.back() - run.data_cycles.front() + 1;
      CHECK(span >= n);
      CHECK(span <= n + words);
    }
  }
}

TEST_CASE("indirect write scatters values") {
  const std::vector<std::uint32_t> idx{5, 0, 9, 3, 12, 7};
  std::vector<double> vals{1.5, 2.5, 3.5, 4.5, 5.5, 6.5};
  mem::ByteStore image(0, 4096);
  formats::store_indices(image, 0x40, idx, 16);
  StreamJob job;
  job.mode = Mode::kIndirect;
  job.direction = Direction::kWrite;
  job.bounds = {idx.size(), 1, 1, 1};
  job.index_base = 0x40;
  job.index_width = 16;
  job.data_base = 0x400;
  job.shift = 1;  // 16-byte elements
  StreamUnitConfig cfg;
  cfg.indirection = true;
  StandaloneRun run = run_standalone(job, cfg, image, vals);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    CHECK(run.image.read_f64(0x400 + 16u * idx[k]) == vals[k]);
  }
  CHECK(run.image.read_f64(0x400 + 16u * 1) == 0.0);
}

TEST_CASE("indirect job on a unit without indirection is rejected") {
  StreamJob job;
  job.mode = Mode::kIndirect;
  job.bounds = {4, 1, 1, 1};
  mem::ByteStore image(0, 256);
  CHECK_THROWS(run_standalone(job, {}, image));
}
