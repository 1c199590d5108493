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

#include "issrsim/kernels.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "issrsim/error.hpp"
#include "issrsim/stream.hpp"

namespace issrsim::kernels {

using isa::f;
using isa::FReg;
using isa::ProgramBuilder;
using isa::x;
using isa::XReg;
using isa::zero;

namespace {

// Body-local integer registers.
constexpr XReg kT0 = x(5);
constexpr XReg kT1 = x(6);
constexpr XReg kT2 = x(7);
constexpr XReg kS0 = x(8);
constexpr XReg kS1 = x(9);
constexpr XReg kT3 = x(17);
constexpr XReg kOne = x(18);
constexpr XReg kShortLimit = x(19);
constexpr XReg kIdxPtr = x(20);
constexpr XReg kValPtr = x(21);
constexpr XReg kIdxEnd = x(22);
// Program-level registers of the single-core wrappers.
constexpr XReg kColResult = x(25);
constexpr XReg kColCount = x(26);

// FP registers: f0/f1 are the stream registers while enabled.
constexpr FReg kFt0 = f(0);
constexpr FReg kFt1 = f(1);
constexpr int kAccBase = 2;
constexpr FReg kSum = f(28);
constexpr FReg kZero = f(29);
constexpr FReg kOneF = f(30);
constexpr FReg kAcc = f(2);
constexpr FReg kVal = f(3);
constexpr FReg kDenseVal = f(4);

constexpr int kMaxAccumulators = 16;
constexpr std::uint64_t kMinImage = 1ull << 18;

FReg acc(int j) { return f(kAccBase + j); }

int width_log2(int index_width) { return index_width == 16 ? 1 : 2; }

void li(ProgramBuilder& b, XReg rd, std::uint64_t value) {
  if (value > 0x7fffffffull) throw ConfigError("address does not fit a 32-bit immediate");
  b.li(rd, static_cast<std::int32_t>(value));
}

void check_descriptor(const KernelDescriptor& d) {
  if (d.index_width != 16 && d.index_width != 32) throw ConfigError("index width must be 16 or 32");
  if (d.index_offset % static_cast<std::uint64_t>(d.index_width / 8) != 0) {
    throw ConfigError("index offset must be a multiple of the index size");
  }
  if (d.result_stride == 0 || d.result_stride % 8 != 0) {
    throw ConfigError("result stride must be a positive multiple of 8");
  }
}

// Indirect streams only emit addresses below 2^address_bits.
void check_reach(const KernelDescriptor& d, std::uint64_t dense_end,
                 const core::TimingContract& contract) {
  if (d.variant != Variant::kIssr || contract.address_bits >= 64) return;
  if (dense_end > (1ull << contract.address_bits)) {
    throw ConfigError("dense operand does not fit the " + std::to_string(contract.address_bits) +
                      "-bit indirect address space");
  }
}

void load_index(ProgramBuilder& b, const KernelDescriptor& d, XReg rd, XReg base) {
  if (d.index_width == 16) {
    b.lh(rd, base, 0);
  } else {
    b.lw(rd, base, 0);
  }
}

/// Reduces accumulators 0..count-1 left to right, stores the sum at 0(addr)
/// and, with `rezero`, clears every accumulator it read right after its
/// last use.
void emit_reduce_store(ProgramBuilder& b, int count, bool rezero, XReg addr) {
  if (count == 1) {
    b.fsd(acc(0), addr, 0);
    if (rezero) b.fmv_zero(acc(0));
    return;
  }
  b.fadd(kSum, acc(0), acc(1));
  if (rezero) {
    b.fmv_zero(acc(0));
    b.fmv_zero(acc(1));
  }
  for (int j = 2; j < count; ++j) {
    b.fadd(kSum, kSum, acc(j));
    if (rezero) b.fmv_zero(acc(j));
  }
  b.fsd(kSum, addr, 0);
}

/// Advances the result pointer and loops back to `row` or leaves to `done`.
void emit_row_tail(ProgramBuilder& b, const std::string& row, const std::string& done) {
  b.add(reg::kResult, reg::kResult, reg::kResultStride);
  b.bne(reg::kPtr, reg::kPtrEnd, row);
  b.jump(done);
}

void emit_scfgw(ProgramBuilder& b, XReg value, int unit, int cfg) { b.scfgw(value, unit, cfg); }

void emit_issr_body(ProgramBuilder& b, const KernelDescriptor& d, int k, int unroll,
                    unsigned shift) {
  const std::string row = b.unique_label("row");
  const std::string not_one = b.unique_label("not_one");
  const std::string short_rows = b.unique_label("short");
  const std::string empty = b.unique_label("empty");
  const std::string done = b.unique_label("done");

  b.lw(kS0, reg::kPtr, 0);
  b.lw(kS1, reg::kPtrEnd, 0);
  b.slli(kT0, kS0, width_log2(d.index_width));
  b.add(kT0, kT0, reg::kIdx);
  b.sub(kT1, kS1, kS0);
  b.slli(kT2, kS0, 3);
  b.add(kT2, kT2, reg::kVal);
  emit_scfgw(b, kT1, 0, isa::kCfgBound0);
  b.li(kT3, 8);
  emit_scfgw(b, kT3, 0, isa::kCfgStride0);
  emit_scfgw(b, kT2, 0, isa::kCfgDataBase);
  emit_scfgw(b, kT1, 1, isa::kCfgBound0);
  li(b, kT3,
     stream::pack_idxcfg(stream::Mode::kIndirect, d.index_width, stream::Direction::kRead, shift));
  emit_scfgw(b, kT3, 1, isa::kCfgIdxCfg);
  emit_scfgw(b, kT0, 1, isa::kCfgIdxBase);
  emit_scfgw(b, reg::kDense, 1, isa::kCfgDataBase);
  b.ssr_enable();
  for (int j = 0; j < k; ++j) b.fmv_zero(acc(j));
  b.fmv_zero(kZero);
  b.li(kOne, 1);
  b.li(kShortLimit, unroll + 1);
  b.bne(reg::kPtr, reg::kPtrEnd, row);
  b.jump(done);

  b.label(row);
  b.lw(kS1, reg::kPtr, 4);
  b.addi(reg::kPtr, reg::kPtr, 4);
  b.sub(kT0, kS1, kS0);
  b.addi(kS0, kS1, 0);
  if (unroll >= 1) {
    b.bne(kT0, kOne, not_one);
    b.fmadd(acc(0), kFt0, kFt1, acc(0));
    emit_reduce_store(b, 1, true, reg::kResult);
    emit_row_tail(b, row, done);
  }
  b.label(not_one);
  b.blt(kT0, kShortLimit, short_rows);
  b.frep(kT0, 1, k - 1, isa::kStaggerRd | isa::kStaggerRs3);
  b.fmadd(acc(0), kFt0, kFt1, acc(0));
  emit_reduce_store(b, k, true, reg::kResult);
  emit_row_tail(b, row, done);

  b.label(short_rows);
  for (int r = 2; r <= unroll; ++r) {
    const std::string next = b.unique_label("short");
    b.addi(kT0, kT0, -1);
    b.bne(kT0, kOne, next);
    for (int j = 0; j < r; ++j) b.fmadd(acc(j), kFt0, kFt1, acc(j));
    emit_reduce_store(b, r, true, reg::kResult);
    emit_row_tail(b, row, done);
    b.label(next);
  }
  b.label(empty);
  b.fsd(kZero, reg::kResult, 0);
  b.add(reg::kResult, reg::kResult, reg::kResultStride);
  b.bne(reg::kPtr, reg::kPtrEnd, row);
  b.label(done);
  b.ssr_disable();
}

// Base and SSR variants share the row structure; only the inner loop differs.
void emit_scalar_body(ProgramBuilder& b, const KernelDescriptor& d, unsigned shift) {
  const bool ssr = d.variant == Variant::kSsr;
  const std::string row = b.unique_label("row");
  const std::string inner = b.unique_label("inner");
  const std::string store = b.unique_label("store");
  const std::string done = b.unique_label("done");
  const int wlog = width_log2(d.index_width);

  b.lw(kS0, reg::kPtr, 0);
  if (ssr) b.lw(kS1, reg::kPtrEnd, 0);
  b.slli(kIdxPtr, kS0, wlog);
  b.add(kIdxPtr, kIdxPtr, reg::kIdx);
  b.slli(kT2, kS0, 3);
  b.add(ssr ? kT2 : kValPtr, kT2, reg::kVal);
  if (ssr) {
    b.sub(kT1, kS1, kS0);
    emit_scfgw(b, kT1, 0, isa::kCfgBound0);
    b.li(kT3, 8);
    emit_scfgw(b, kT3, 0, isa::kCfgStride0);
    emit_scfgw(b, kT2, 0, isa::kCfgDataBase);
    b.ssr_enable();
  }
  b.bne(reg::kPtr, reg::kPtrEnd, row);
  b.jump(done);

  b.label(row);
  b.lw(kS1, reg::kPtr, 4);
  b.addi(reg::kPtr, reg::kPtr, 4);
  b.fmv_zero(kAcc);
  b.slli(kIdxEnd, kS1, wlog);
  b.add(kIdxEnd, kIdxEnd, reg::kIdx);
  b.bne(kIdxPtr, kIdxEnd, inner);
  b.jump(store);

  b.label(inner);
  load_index(b, d, kT0, kIdxPtr);
  if (ssr) {
    b.addi(kIdxPtr, kIdxPtr, d.index_width / 8);
    b.slli(kT0, kT0, static_cast<int>(3 + shift));
    b.add(kT0, kT0, reg::kDense);
    b.fld(kDenseVal, kT0, 0);
    b.fmadd(kAcc, kFt0, kDenseVal, kAcc);
  } else {
    b.fld(kVal, kValPtr, 0);
    b.addi(kIdxPtr, kIdxPtr, d.index_width / 8);
    b.slli(kT0, kT0, static_cast<int>(3 + shift));
    b.add(kT0, kT0, reg::kDense);
    b.fld(kDenseVal, kT0, 0);
    b.addi(kValPtr, kValPtr, 8);
    b.fmadd(kAcc, kVal, kDenseVal, kAcc);
  }
  b.bne(kIdxPtr, kIdxEnd, inner);

  b.label(store);
  b.fsd(kAcc, reg::kResult, 0);
  b.add(reg::kResult, reg::kResult, reg::kResultStride);
  b.bne(reg::kPtr, reg::kPtrEnd, row);
  b.label(done);
  if (ssr) b.ssr_disable();
}

std::uint64_t image_size(std::uint64_t end) {
  const std::uint64_t size = std::max(end, kMinImage);
  return (size + 0xfff) & ~std::uint64_t{0xfff};
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  }
  return true;
}

}  // namespace

std::string_view kernel_name(Kernel k) {
  switch (k) {
    case Kernel::kSpvv: return "spvv";
    case Kernel::kCsrmv: return "csrmv";
    case Kernel::kCsrmm: return "csrmm";
    case Kernel::kCodebook: return "codebook";
    case Kernel::kScatter: return "scatter";
  }
  return "?";
}

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kBase: return "base";
    case Variant::kSsr: return "ssr";
    case Variant::kIssr: return "issr";
  }
  return "?";
}

Variant parse_variant(std::string_view text) {
  if (text == "base") return Variant::kBase;
  if (text == "ssr") return Variant::kSsr;
  if (text == "issr") return Variant::kIssr;
  throw ConfigError("unknown variant '" + std::string(text) + "'");
}

std::string label(const KernelDescriptor& d) {
  return std::string(kernel_name(d.kernel)) + "/" + std::string(variant_name(d.variant)) + "/" +
         std::to_string(d.index_width);
}

int default_accumulators(int index_width, const core::TimingContract& contract) {
  const double lanes = 64.0 / index_width;
  const double peak = lanes / (lanes + 1.0);
  return std::max(1, static_cast<int>(std::ceil(contract.fpu_latency * peak - 1e-9)));
}

int resolved_accumulators(const KernelDescriptor& d, const core::TimingContract& contract) {
  const int k = d.accumulators > 0 ? d.accumulators : default_accumulators(d.index_width, contract);
  if (k > kMaxAccumulators) throw ConfigError("at most 16 accumulators are supported");
  return k;
}

int resolved_unroll(const KernelDescriptor& d, const core::TimingContract& contract) {
  const int k = resolved_accumulators(d, contract);
  if (d.unroll_threshold < 0 || d.unroll_threshold > k) {
    throw ConfigError("unroll threshold must lie in [0, accumulators]");
  }
  return d.unroll_threshold == 0 ? k : d.unroll_threshold;
}

void emit_csrmv_body(ProgramBuilder& b, const KernelDescriptor& desc, int accumulators,
                     int unroll, unsigned dense_shift) {
  check_descriptor(desc);
  if (desc.variant == Variant::kIssr) {
    emit_issr_body(b, desc, accumulators, unroll, dense_shift);
  } else {
    emit_scalar_body(b, desc, dense_shift);
  }
}

isa::Program spvv_program(const KernelDescriptor& d, int k, const SpvvAddresses& a) {
  check_descriptor(d);
  ProgramBuilder b;
  li(b, reg::kResult, a.result);
  if (a.nnz == 0) {
    b.fmv_zero(kAcc);
    b.fsd(kAcc, reg::kResult, 0);
    b.halt();
    return b.finish();
  }
  switch (d.variant) {
    case Variant::kIssr: {
      li(b, kT1, a.nnz);
      emit_scfgw(b, kT1, 0, isa::kCfgBound0);
      b.li(kT3, 8);
      emit_scfgw(b, kT3, 0, isa::kCfgStride0);
      li(b, kT2, a.values);
      emit_scfgw(b, kT2, 0, isa::kCfgDataBase);
      emit_scfgw(b, kT1, 1, isa::kCfgBound0);
      li(b, kT3, stream::pack_idxcfg(stream::Mode::kIndirect, d.index_width,
                                     stream::Direction::kRead, 0));
      emit_scfgw(b, kT3, 1, isa::kCfgIdxCfg);
      li(b, kT0, a.indices);
      emit_scfgw(b, kT0, 1, isa::kCfgIdxBase);
      li(b, kT2, a.dense);
      emit_scfgw(b, kT2, 1, isa::kCfgDataBase);
      b.ssr_enable();
      for (int j = 0; j < k; ++j) b.fmv_zero(acc(j));
      b.frep(kT1, 1, k - 1, isa::kStaggerRd | isa::kStaggerRs3);
      b.fmadd(acc(0), kFt0, kFt1, acc(0));
      emit_reduce_store(b, k, false, reg::kResult);
      b.ssr_disable();
      break;
    }
    case Variant::kSsr:
    case Variant::kBase: {
      const bool ssr = d.variant == Variant::kSsr;
      const std::string loop = b.unique_label("loop");
      li(b, kIdxPtr, a.indices);
      li(b, kIdxEnd, a.indices + a.nnz * static_cast<std::uint64_t>(d.index_width / 8));
      li(b, reg::kDense, a.dense);
      if (ssr) {
        li(b, kT1, a.nnz);
        emit_scfgw(b, kT1, 0, isa::kCfgBound0);
        b.li(kT3, 8);
        emit_scfgw(b, kT3, 0, isa::kCfgStride0);
        li(b, kT2, a.values);
        emit_scfgw(b, kT2, 0, isa::kCfgDataBase);
        b.ssr_enable();
      } else {
        li(b, kValPtr, a.values);
      }
      b.fmv_zero(kAcc);
      b.label(loop);
      load_index(b, d, kT0, kIdxPtr);
      if (ssr) {
        b.addi(kIdxPtr, kIdxPtr, d.index_width / 8);
        b.slli(kT0, kT0, 3);
        b.add(kT0, kT0, reg::kDense);
        b.fld(kDenseVal, kT0, 0);
        b.fmadd(kAcc, kFt0, kDenseVal, kAcc);
      } else {
        b.fld(kVal, kValPtr, 0);
        b.addi(kIdxPtr, kIdxPtr, d.index_width / 8);
        b.slli(kT0, kT0, 3);
        b.add(kT0, kT0, reg::kDense);
        b.fld(kDenseVal, kT0, 0);
        b.addi(kValPtr, kValPtr, 8);
        b.fmadd(kAcc, kVal, kDenseVal, kAcc);
      }
      b.bne(kIdxPtr, kIdxEnd, loop);
      b.fsd(kAcc, reg::kResult, 0);
      if (ssr) b.ssr_disable();
      break;
    }
  }
  b.halt();
  return b.finish();
}

// ---------------------------------------------------------------------------
// Built kernels

BuiltKernel build_spvv(const KernelDescriptor& desc, const formats::SparseFiber& a,
                       std::span<const double> x, const core::TimingContract& contract) {
  check_descriptor(desc);
  a.validate();
  if (x.size() < a.dimension) throw ConfigError("dense vector shorter than the fiber dimension");
  if (desc.index_width == 16 && a.dimension > (1ull << 16)) {
    throw ConfigError("fiber dimension too large for 16-bit indices");
  }
  BuiltKernel k;
  k.desc = desc;
  k.desc.kernel = Kernel::kSpvv;
  k.accumulators = resolved_accumulators(desc, contract);
  const std::uint64_t isz = static_cast<std::uint64_t>(desc.index_width / 8);
  SpvvAddresses ad;
  ad.nnz = a.nnz();
  ad.dense = k.layout.place("x", 8 * x.size(), 8, 0x40);
  check_reach(desc, ad.dense + 8 * a.dimension, contract);
  ad.indices = k.layout.place("indices", isz * a.nnz(), 8, desc.index_offset);
  ad.values = k.layout.place("values", 8 * a.nnz());
  ad.result = k.layout.place("result", 8);
  k.program = spvv_program(k.desc, k.accumulators, ad);
  k.image = mem::ByteStore(0, image_size(k.layout.end()));
  formats::store_f64(k.image, ad.dense, x);
  formats::store_indices(k.image, ad.indices, a.indices, desc.index_width);
  formats::store_f64(k.image, ad.values, a.values);
  k.result_address = ad.result;
  k.result_count = 1;
  k.naive = {formats::spvv_ref(a, x)};
  k.ordered = {desc.variant == Variant::kIssr ? formats::spvv_ordered(a, x, k.accumulators)
                                               : formats::spvv_ref(a, x)};
  return k;
}

namespace {

struct CsrAddresses {
  std::uint64_t ptr = 0;
  std::uint64_t indices = 0;
  std::uint64_t values = 0;
  std::uint64_t dense = 0;
  std::uint64_t result = 0;
};

CsrAddresses place_csr(BuiltKernel& k, const formats::CsrMatrix& a, std::span<const double> dense,
                       std::uint64_t result_bytes) {
  const auto& d = k.desc;
  const std::uint64_t isz = static_cast<std::uint64_t>(d.index_width / 8);
  CsrAddresses ad;
  ad.dense = k.layout.place("dense", 8 * dense.size(), 8, 0x40);
  ad.ptr = k.layout.place("ptr", 4 * a.ptr.size());
  ad.indices = k.layout.place("indices", isz * a.nnz(), 8, d.index_offset);
  ad.values = k.layout.place("values", 8 * a.nnz());
  ad.result = k.layout.place("result", result_bytes);
  k.image = mem::ByteStore(0, image_size(k.layout.end()));
  formats::store_f64(k.image, ad.dense, dense);
  formats::store_u32(k.image, ad.ptr, a.ptr);
  formats::store_indices(k.image, ad.indices, a.indices, d.index_width);
  formats::store_f64(k.image, ad.values, a.values);
  return ad;
}

void check_matrix(const KernelDescriptor& d, const formats::CsrMatrix& a) {
  check_descriptor(d);
  a.validate();
  formats::require_index_width(a, d.index_width);
}

}  // namespace

BuiltKernel build_csrmv(const KernelDescriptor& desc, const formats::CsrMatrix& a,
                        std::span<const double> x, const core::TimingContract& contract) {
  check_matrix(desc, a);
  if (x.size() < a.cols) throw ConfigError("dense vector shorter than the column count");
  BuiltKernel k;
  k.desc = desc;
  k.desc.kernel = Kernel::kCsrmv;
  k.accumulators = resolved_accumulators(desc, contract);
  const int unroll = resolved_unroll(desc, contract);
  const auto ad = place_csr(k, a, x.first(a.cols), desc.result_stride * a.rows);
  check_reach(desc, ad.dense + 8 * a.cols, contract);

  ProgramBuilder b;
  li(b, reg::kPtr, ad.ptr);
  li(b, reg::kPtrEnd, ad.ptr + 4 * a.rows);
  li(b, reg::kIdx, ad.indices);
  li(b, reg::kVal, ad.values);
  li(b, reg::kDense, ad.dense);
  li(b, reg::kResult, ad.result);
  li(b, reg::kResultStride, desc.result_stride);
  emit_csrmv_body(b, k.desc, k.accumulators, unroll, 0);
  b.fp_sync();
  b.halt();
  k.program = b.finish();

  k.result_address = ad.result;
  k.result_count = a.rows;
  k.result_stride = desc.result_stride;
  k.naive = formats::csrmv_ref(a, x);
  k.ordered = desc.variant == Variant::kIssr
                  ? formats::csrmv_ordered(a, x, k.accumulators, unroll)
                  : k.naive;
  return k;
}

BuiltKernel build_csrmm(const KernelDescriptor& desc, const formats::CsrMatrix& a,
                        std::span<const double> bmat, std::uint64_t b_cols,
                        const core::TimingContract& contract) {
  check_matrix(desc, a);
  if (b_cols == 0 || !std::has_single_bit(b_cols)) {
    throw ConfigError("dense matrix column count must be a power of two");
  }
  if (bmat.size() < a.cols * b_cols) throw ConfigError("dense matrix smaller than cols x b_cols");
  BuiltKernel k;
  k.desc = desc;
  k.desc.kernel = Kernel::kCsrmm;
  k.desc.result_stride = 8 * b_cols;
  k.accumulators = resolved_accumulators(desc, contract);
  const int unroll = resolved_unroll(desc, contract);
  const auto shift = static_cast<unsigned>(std::countr_zero(b_cols));
  const auto ad = place_csr(k, a, bmat.first(a.cols * b_cols), 8 * b_cols * a.rows);
  check_reach(desc, ad.dense + 8 * a.cols * b_cols, contract);

  ProgramBuilder b;
  const std::string col = b.unique_label("column");
  li(b, reg::kPtrEnd, ad.ptr + 4 * a.rows);
  li(b, reg::kIdx, ad.indices);
  li(b, reg::kVal, ad.values);
  li(b, reg::kDense, ad.dense);
  li(b, kColResult, ad.result);
  li(b, reg::kResultStride, 8 * b_cols);
  li(b, kColCount, b_cols);
  b.label(col);
  li(b, reg::kPtr, ad.ptr);
  b.addi(reg::kResult, kColResult, 0);
  emit_csrmv_body(b, k.desc, k.accumulators, unroll, shift);
  b.addi(reg::kDense, reg::kDense, 8);
  b.addi(kColResult, kColResult, 8);
  b.addi(kColCount, kColCount, -1);
  b.fp_sync();
  b.bne(kColCount, zero, col);
  b.halt();
  k.program = b.finish();

  k.result_address = ad.result;
  k.result_count = a.rows * b_cols;
  k.result_stride = 8;
  k.naive = formats::csrmm_ref(a, bmat, b_cols);
  k.ordered = desc.variant == Variant::kIssr
                  ? formats::csrmm_ordered(a, bmat, b_cols, k.accumulators, unroll)
                  : k.naive;
  return k;
}

BuiltKernel build_codebook_decode(const KernelDescriptor& desc, std::span<const double> table,
                                  std::span<const std::uint32_t> codes,
                                  const core::TimingContract& contract) {
  check_descriptor(desc);
  if (desc.variant != Variant::kIssr) throw ConfigError("codebook decoding needs the issr variant");
  if (table.empty()) throw ConfigError("codebook table is empty");
  const std::uint64_t limit = 1ull << std::min(contract.address_bits, 26u);
  BuiltKernel k;
  k.desc = desc;
  k.desc.kernel = Kernel::kCodebook;
  const std::uint64_t isz = static_cast<std::uint64_t>(desc.index_width / 8);
  const auto out = k.layout.place("out", 8 * codes.size(), 8, 0x40);
  const auto code_base = k.layout.place("codes", isz * codes.size(), 8, desc.index_offset);
  const auto one = k.layout.place("one", 8);
  const auto table_base = k.layout.place_at("table", limit - 8 * table.size(), 8 * table.size());
  k.image = mem::ByteStore(0, image_size(k.layout.end()));
  formats::store_indices(k.image, code_base, codes, desc.index_width);
  k.image.write_f64(one, 1.0);
  formats::store_f64(k.image, table_base, table);

  ProgramBuilder b;
  li(b, kT1, codes.size());
  emit_scfgw(b, kT1, 0, isa::kCfgBound0);
  b.li(kT3, 8);
  emit_scfgw(b, kT3, 0, isa::kCfgStride0);
  li(b, kT3, stream::pack_idxcfg(stream::Mode::kAffine, 32, stream::Direction::kWrite, 0));
  emit_scfgw(b, kT3, 0, isa::kCfgIdxCfg);
  li(b, kT2, out);
  emit_scfgw(b, kT2, 0, isa::kCfgDataBase);
  emit_scfgw(b, kT1, 1, isa::kCfgBound0);
  li(b, kT3, stream::pack_idxcfg(stream::Mode::kIndirect, desc.index_width,
                                 stream::Direction::kRead, 0));
  emit_scfgw(b, kT3, 1, isa::kCfgIdxCfg);
  li(b, kT0, code_base);
  emit_scfgw(b, kT0, 1, isa::kCfgIdxBase);
  li(b, kT2, table_base);
  emit_scfgw(b, kT2, 1, isa::kCfgDataBase);
  li(b, kT0, one);
  b.fld(kOneF, kT0, 0);
  b.ssr_enable();
  b.frep(kT1, 1, 0, 0);
  b.fmul(kFt0, kFt1, kOneF);
  b.ssr_disable();
  b.fp_sync();
  b.halt();
  k.program = b.finish();

  k.result_address = out;
  k.result_count = codes.size();
  for (auto c : codes) k.naive.push_back(c < table.size() ? table[c] * 1.0 : std::nan(""));
  k.ordered = k.naive;
  return k;
}

BuiltKernel build_scatter(const KernelDescriptor& desc, std::span<const double> values,
                          std::span<const std::uint32_t> indices, std::span<const double> y,
                          const core::TimingContract& contract) {
  (void)contract;
  check_descriptor(desc);
  if (desc.variant != Variant::kIssr) throw ConfigError("scatter needs the issr variant");
  if (values.size() != indices.size()) throw ConfigError("values and indices differ in length");
  for (auto i : indices) {
    if (i >= y.size()) throw ConfigError("scatter index outside the target vector");
  }
  BuiltKernel k;
  k.desc = desc;
  k.desc.kernel = Kernel::kScatter;
  const std::uint64_t isz = static_cast<std::uint64_t>(desc.index_width / 8);
  const auto target = k.layout.place("y", 8 * y.size(), 8, 0x40);
  const auto idx_base = k.layout.place("indices", isz * indices.size(), 8, desc.index_offset);
  const auto val_base = k.layout.place("values", 8 * values.size());
  const auto one = k.layout.place("one", 8);
  k.image = mem::ByteStore(0, image_size(k.layout.end()));
  formats::store_f64(k.image, target, y);
  formats::store_indices(k.image, idx_base, indices, desc.index_width);
  formats::store_f64(k.image, val_base, values);
  k.image.write_f64(one, 1.0);

  ProgramBuilder b;
  li(b, kT1, values.size());
  emit_scfgw(b, kT1, 0, isa::kCfgBound0);
  b.li(kT3, 8);
  emit_scfgw(b, kT3, 0, isa::kCfgStride0);
  li(b, kT2, val_base);
  emit_scfgw(b, kT2, 0, isa::kCfgDataBase);
  emit_scfgw(b, kT1, 1, isa::kCfgBound0);
  li(b, kT3, stream::pack_idxcfg(stream::Mode::kIndirect, desc.index_width,
                                 stream::Direction::kWrite, 0));
  emit_scfgw(b, kT3, 1, isa::kCfgIdxCfg);
  li(b, kT0, idx_base);
  emit_scfgw(b, kT0, 1, isa::kCfgIdxBase);
  li(b, kT2, target);
  emit_scfgw(b, kT2, 1, isa::kCfgDataBase);
  li(b, kT0, one);
  b.fld(kOneF, kT0, 0);
  b.ssr_enable();
  b.frep(kT1, 1, 0, 0);
  b.fmul(kFt1, kFt0, kOneF);
  b.ssr_disable();
  b.fp_sync();
  b.halt();
  k.program = b.finish();

  k.result_address = target;
  k.result_count = y.size();
  k.naive.assign(y.begin(), y.end());
  for (std::size_t e = 0; e < values.size(); ++e) k.naive[indices[e]] = values[e] * 1.0;
  k.ordered = k.naive;
  return k;
}

KernelRun run_kernel(const BuiltKernel& kernel, const core::CoreConfig& config) {
  auto cc = core::simulate_cc(kernel.program, config, kernel.image);
  KernelRun run;
  run.stats = cc.stats;
  run.result = formats::load_f64(cc.image, kernel.result_address, kernel.result_count,
                                 kernel.result_stride);
  run.bit_exact = same_bits(run.result, kernel.ordered);
  run.naive_error = core::max_relative_error(run.result, kernel.naive);
  run.image = std::move(cc.image);
  return run;
}

}  // namespace issrsim::kernels
