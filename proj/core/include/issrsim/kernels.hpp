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
 * @file kernels.hpp
 * @brief Program builders for the sparse kernels in their base, SSR and
 *        ISSR variants, plus the codebook-decode and scatter kernels.
 *
 * Register conventions shared with the cluster runtime (CsrMV body):
 *   x10  address of ptr[first row]     x11  address of ptr[end row]
 *   x12  index array base (entry 0)    x13  value array base (entry 0)
 *   x14  dense operand base            x15  result address of the first row
 *   x16  result stride in bytes
 * The body clobbers x5-x9, x17-x24 and f0-f31 and leaves the streams
 * disabled. x25-x31 are never touched.
 */

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "issrsim/core.hpp"
#include "issrsim/formats.hpp"
#include "issrsim/isa.hpp"
#include "issrsim/mem.hpp"

namespace issrsim::kernels {

enum class Kernel : std::uint8_t { kSpvv, kCsrmv, kCsrmm, kCodebook, kScatter };
enum class Variant : std::uint8_t { kBase, kSsr, kIssr };

std::string_view kernel_name(Kernel k);
std::string_view variant_name(Variant v);
/// Accepts "base", "ssr", "issr"; throws ConfigError otherwise.
Variant parse_variant(std::string_view text);

struct KernelDescriptor {
  Kernel kernel = Kernel::kSpvv;
  Variant variant = Variant::kIssr;
  int index_width = 32;
  int accumulators = 0;      // 0: default_accumulators()
  int unroll_threshold = 0;  // rows with at most this many nonzeros skip FREP; 0: accumulators
  std::uint64_t result_stride = 8;  // CsrMV result stride in bytes
  std::uint64_t index_offset = 0;   // extra misalignment of index arrays in bytes
};

/// Smallest K with K >= L * U_peak, where U_peak is the indirection
/// stream's data rate: 4/5 for 16-bit and 2/3 for 32-bit indices.
int default_accumulators(int index_width, const core::TimingContract& contract);
int resolved_accumulators(const KernelDescriptor& desc, const core::TimingContract& contract);
int resolved_unroll(const KernelDescriptor& desc, const core::TimingContract& contract);

namespace reg {
inline constexpr isa::XReg kPtr = isa::x(10);
inline constexpr isa::XReg kPtrEnd = isa::x(11);
inline constexpr isa::XReg kIdx = isa::x(12);
inline constexpr isa::XReg kVal = isa::x(13);
inline constexpr isa::XReg kDense = isa::x(14);
inline constexpr isa::XReg kResult = isa::x(15);
inline constexpr isa::XReg kResultStride = isa::x(16);
}  // namespace reg

/// Emits the CsrMV schedule for the rows between x10 and x11. The dense
/// operand element for index i is read at x14 + (i << (3 + dense_shift)).
void emit_csrmv_body(isa::ProgramBuilder& b, const KernelDescriptor& desc, int accumulators,
                     int unroll, unsigned dense_shift);

struct SpvvAddresses {
  std::uint64_t values = 0;
  std::uint64_t indices = 0;
  std::uint64_t dense = 0;
  std::uint64_t result = 0;
  std::uint64_t nnz = 0;
};
isa::Program spvv_program(const KernelDescriptor& desc, int accumulators, const SpvvAddresses& a);

/// A program together with its memory image and expected results.
struct BuiltKernel {
  KernelDescriptor desc;
  int accumulators = 0;
  isa::Program program;
  mem::ByteStore image{0, 0};
  formats::MemoryLayout layout;
  std::uint64_t result_address = 0;
  std::size_t result_count = 0;
  std::uint64_t result_stride = 8;
  std::vector<double> naive;    // naive reference
  std::vector<double> ordered;  // order-replicating reference
};

BuiltKernel build_spvv(const KernelDescriptor& desc, const formats::SparseFiber& a,
                       std::span<const double> x, const core::TimingContract& contract = {});
BuiltKernel build_csrmv(const KernelDescriptor& desc, const formats::CsrMatrix& a,
                        std::span<const double> x, const core::TimingContract& contract = {});
/// B is row-major with a power-of-two number of columns.
BuiltKernel build_csrmm(const KernelDescriptor& desc, const formats::CsrMatrix& a,
                        std::span<const double> b, std::uint64_t b_cols,
                        const core::TimingContract& contract = {});
/// out[k] = table[codes[k]]. The table ends at the top of the stream
/// address space, so any code past its end faults.
BuiltKernel build_codebook_decode(const KernelDescriptor& desc, std::span<const double> table,
                                  std::span<const std::uint32_t> codes,
                                  const core::TimingContract& contract = {});
/// y[indices[k]] = values[k] in stream order; with duplicate indices the
/// last write wins.
BuiltKernel build_scatter(const KernelDescriptor& desc, std::span<const double> values,
                          std::span<const std::uint32_t> indices, std::span<const double> y,
                          const core::TimingContract& contract = {});

struct KernelRun {
  core::CycleStats stats;
  std::vector<double> result;
  bool bit_exact = false;      // equals the ordered reference bit for bit
  double naive_error = 0.0;    // max relative error against the naive reference
  mem::ByteStore image{0, 0};
};

KernelRun run_kernel(const BuiltKernel& kernel, const core::CoreConfig& config = {});

/// One-line label "kernel/variant/W".
std::string label(const KernelDescriptor& desc);

}  // namespace issrsim::kernels
