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

#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "issrsim/error.hpp"
#include "issrsim/formats.hpp"
#include "issrsim/kernels.hpp"

using namespace issrsim;
using namespace issrsim::kernels;

namespace {

constexpr Variant kVariants[] = {Variant::kBase, Variant::kSsr, Variant::kIssr};

KernelDescriptor desc(Kernel k, Variant v, int w) {
  KernelDescriptor d;
  d.kernel = k;
  d.variant = v;
  d.index_width = w;
  return d;
}

// Row dot product with `lanes` interleaved accumulators reduced left to
// right.
double lane_dot(const formats::CsrMatrix& a, std::uint64_t row, const std::vector<double>& x,
                std::uint64_t lanes) {
  std::vector<double> acc(lanes, 0.0);
  for (std::uint32_t k = a.ptr[row]; k < a.ptr[row + 1]; ++k) {
    auto& s = acc[(k - a.ptr[row]) % lanes];
    s = std::fma(a.values[k], x[a.indices[k]], s);
  }
  double sum = acc[0];
  for (std::uint64_t j = 1; j < lanes; ++j) sum += acc[j];
  return sum;
}

}  // namespace

TEST_CASE("accumulator count covers latency at the issr ceiling") {
  core::TimingContract t;
  // 16-bit: four indices per word, ceiling 4/5; 32-bit: ceiling 2/3.
  CHECK(default_accumulators(16, t) == static_cast<int>(std::ceil(t.fpu_latency * 0.8)));
  CHECK(default_accumulators(32, t) == static_cast<int>(std::ceil(t.fpu_latency * 2.0 / 3.0)));
  t.fpu_latency = 1;
  CHECK(default_accumulators(16, t) == 1);
  t.fpu_latency = 10;
  CHECK(default_accumulators(16, t) == 8);
  CHECK(default_accumulators(32, t) == 7);
}

TEST_CASE("descriptor resolution and names") {
  core::TimingContract t;
  KernelDescriptor d = desc(Kernel::kCsrmv, Variant::kIssr, 16);
  d.accumulators = 17;
  CHECK_THROWS_AS(resolved_accumulators(d, t), ConfigError);
  d.accumulators = 4;
  d.unroll_threshold = 5;
  CHECK_THROWS_AS(resolved_unroll(d, t), ConfigError);
  d.unroll_threshold = 0;
  CHECK(resolved_unroll(d, t) == 4);
  CHECK(parse_variant("ssr") == Variant::kSsr);
  CHECK_THROWS_AS(parse_variant("fast"), ConfigError);
  CHECK(variant_name(Variant::kIssr) == "issr");
  CHECK(kernel_name(Kernel::kCsrmm) == "csrmm");
}

TEST_CASE("spvv variants are bit-exact to their ordered reference") {
  for (int w : {16, 32}) {
    for (std::uint64_t nnz : {0u, 1u, 3u, 17u, 250u}) {
      auto a = formats::gen_sparse_vector(4000, nnz, w, nnz + 1);
      auto x = formats::gen_dense_vector(4000, 2);
      for (Variant v : kVariants) {
        BuiltKernel k = build_spvv(desc(Kernel::kSpvv, v, w), a, x);
        KernelRun r = run_kernel(k);
        CAPTURE(w);
        CAPTURE(nnz);
        CAPTURE(variant_name(v));
        CHECK(r.bit_exact);
        CHECK(r.naive_error < 1e-12);
        CHECK(r.stats.fmadds == nnz);
        // Only the issr variant splits the sum over several accumulators.
        const int lanes = v == Variant::kIssr ? k.accumulators : 1;
        CHECK(r.result[0] == formats::spvv_ordered(a, x, lanes));
      }
    }
  }
}

TEST_CASE("spvv issr outruns ssr which outruns base") {
  auto a = formats::gen_sparse_vector(10000, 1000, 16, 4);
  auto x = formats::gen_dense_vector(10000, 5);
  std::uint64_t cycles[3];
  for (int i = 0; i < 3; ++i) {
    cycles[i] = run_kernel(build_spvv(desc(Kernel::kSpvv, kVariants[i], 16), a, x)).stats.cycles;
  }
  CHECK(cycles[1] < cycles[0]);
  CHECK(cycles[2] < cycles[1]);
  KernelRun issr = run_kernel(build_spvv(desc(Kernel::kSpvv, Variant::kIssr, 16), a, x));
  CHECK(issr.stats.utilization() <= 0.8 + 1e-9);
  CHECK(issr.stats.utilization() > 0.7);
}

TEST_CASE("csrmv rows match the lane oracle") {
  for (int w : {16, 32}) {
    auto a = formats::gen_banded_csr(40, 300, 6, w, 13);
    // Mix in empty and short rows.
    formats::CsrMatrix m;
    m.rows = 40;
    m.cols = 300;
    m.ptr = {0};
    for (std::uint64_t r = 0; r < a.rows; ++r) {
      const std::uint32_t keep = static_cast<std::uint32_t>(r % 8);
      for (std::uint32_t k = 0; k < std::min(keep, a.row_nnz(r)); ++k) {
        m.indices.push_back(a.indices[a.ptr[r] + k]);
        m.values.push_back(a.values[a.ptr[r] + k]);
      }
      m.ptr.push_back(static_cast<std::uint32_t>(m.values.size()));
    }
    auto x = formats::gen_dense_vector(300, 3);
    for (Variant v : kVariants) {
      BuiltKernel k = build_csrmv(desc(Kernel::kCsrmv, v, w), m, x);
      KernelRun r = run_kernel(k);
      CAPTURE(w);
      CAPTURE(variant_name(v));
      CHECK(r.bit_exact);
      const auto lanes = v == Variant::kIssr ? static_cast<std::uint64_t>(k.accumulators) : 1u;
      for (std::uint64_t row = 0; row < m.rows; ++row) {
        const std::uint64_t n = m.row_nnz(row);
        const std::uint64_t used = (n >= 1 && n <= lanes) ? n : lanes;
        CHECK(r.result[row] == lane_dot(m, row, x, used));
      }
    }
  }
}

TEST_CASE("csrmm matches the reference for every dense column") {
  auto a = formats::gen_banded_csr(24, 128, 5, 16, 6);
  const std::uint64_t bc = 4;
  auto b = formats::gen_dense_vector(128 * bc, 8);
  for (Variant v : kVariants) {
    KernelRun r = run_kernel(build_csrmm(desc(Kernel::kCsrmm, v, 16), a, b, bc));
    CAPTURE(variant_name(v));
    CHECK(r.bit_exact);
    CHECK(r.naive_error < 1e-12);
    CHECK(r.result.size() == 24 * bc);
  }
  CHECK_THROWS_AS(build_csrmm(desc(Kernel::kCsrmm, Variant::kIssr, 16), a, b, 3), ConfigError);
}

TEST_CASE("codebook decode looks up every code") {
  std::vector<double> table(256);
  for (std::size_t i = 0; i < table.size(); ++i) table[i] = std::sqrt(static_cast<double>(i)) - 4.0;
  formats::Rng rng(12);
  std::vector<std::uint32_t> codes(500);
  for (auto& c : codes) c = static_cast<std::uint32_t>(rng.uniform(256));
  for (int w : {16, 32}) {
    KernelRun r = run_kernel(build_codebook_decode(desc(Kernel::kCodebook, Variant::kIssr, w), table, codes));
    REQUIRE(r.result.size() == codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) CHECK(r.result[i] == table[codes[i]]);
  }
  CHECK_THROWS_AS(build_codebook_decode(desc(Kernel::kCodebook, Variant::kBase, 16), table, codes),
                  ConfigError);
}

TEST_CASE("scatter writes each value to its index") {
  formats::Rng rng(21);
  const std::uint64_t n = 1000;
  auto idx = formats::sample_distinct(rng, n, 300);
  std::vector<std::uint32_t> shuffled(idx.begin(), idx.end());
  for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng.uniform(i)]);
  auto vals = formats::gen_dense_vector(300, 22);
  std::vector<double> y(n, -1.0);
  KernelRun r = run_kernel(build_scatter(desc(Kernel::kScatter, Variant::kIssr, 16), vals, shuffled, y));
  std::vector<double> want = y;
  for (std::size_t k = 0; k < shuffled.size(); ++k) want[shuffled[k]] = vals[k];
  CHECK(r.result == want);
  std::vector<std::uint32_t> out_of_range{static_cast<std::uint32_t>(n)};
  CHECK_THROWS_AS(build_scatter(desc(Kernel::kScatter, Variant::kIssr, 16),
                                std::vector<double>{1.0}, out_of_range, y),
                  ConfigError);
}

TEST_CASE("misaligned index arrays and strided results still work") {
  auto a = formats::gen_banded_csr(20, 64, 4, 16, 30);
  auto x = formats::gen_dense_vector(64, 31);
  KernelDescriptor d = desc(Kernel::kCsrmv, Variant::kIssr, 16);
  d.index_offset = 6;
  d.result_stride = 24;
  KernelRun r = run_kernel(build_csrmv(d, a, x));
  CHECK(r.bit_exact);
  d.index_offset = 3;
  CHECK_THROWS_AS(build_csrmv(d, a, x), ConfigError);
}

TEST_CASE("labels are stable") {
  KernelDescriptor d = desc(Kernel::kSpvv, Variant::kSsr, 32);
  CHECK(label(d) == label(d));
  CHECK(label(d) != label(desc(Kernel::kSpvv, Variant::kIssr, 32)));
}
