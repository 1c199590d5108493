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
#include "issrsim/acceptance.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>

#include "issrsim/cluster.hpp"
#include "issrsim/error.hpp"
#include "issrsim/formats.hpp"
#include "issrsim/kernels.hpp"
#include "issrsim/stream.hpp"

namespace issrsim::acceptance {

using formats::CsrMatrix;
using formats::Rng;
using kernels::Kernel;
using kernels::KernelDescriptor;
using kernels::Variant;

namespace {

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

KernelDescriptor desc(Kernel k, Variant v, int w) {
  KernelDescriptor d;
  d.kernel = k;
  d.variant = v;
  d.index_width = w;
  return d;
}

core::CoreConfig config_of(const Options& o) {
  core::CoreConfig c;
  c.timing = o.contract;
  return c;
}

kernels::KernelRun run_checked(const kernels::BuiltKernel& k, const Options& o) {
  auto r = kernels::run_kernel(k, config_of(o));
  if (!r.bit_exact) throw Error(kernels::label(k.desc) + " result differs from its reference");
  return r;
}

// Fixed inputs of the single-core checks.
struct SpvvInput {
  formats::SparseFiber a;
  std::vector<double> x;
};

SpvvInput spvv_input(std::uint64_t nnz, int w, const Options& o) {
  return {formats::gen_sparse_vector(10000, nnz, w, o.seed + 6),
          formats::gen_dense_vector(10000, o.seed + 7)};
}

core::CycleStats spvv_stats(std::uint64_t nnz, Variant v, int w, const Options& o) {
  const auto in = spvv_input(nnz, w, o);
  return run_checked(kernels::build_spvv(desc(Kernel::kSpvv, v, w), in.a, in.x, o.contract), o).stats;
}

core::CycleStats csrmv_stats(const CsrMatrix& a, const std::vector<double>& x, Variant v, int w,
                             const Options& o) {
  return run_checked(kernels::build_csrmv(desc(Kernel::kCsrmv, v, w), a, x, o.contract), o).stats;
}

CsrMatrix synthetic(std::uint64_t rows, std::uint64_t cols, std::uint64_t npr, const Options& o) {
  return formats::gen_banded_csr(rows, cols, npr, 16, o.seed + 10);
}

// ---------------------------------------------------------------------------
// Criteria 1-8

Criterion utilization_check(int id, Variant v) {
  Criterion c;
  c.id = id;
  c.title = std::string(kernels::variant_name(v)) + " SpVV utilization at n_nz=1000";
  return c;
}

Criterion c1(const Options& o) {
  Criterion c = utilization_check(1, Variant::kBase);
  const double u = spvv_stats(1000, Variant::kBase, 16, o).utilization();
  c.pass = std::abs(u - 0.111) <= 0.003;
  c.detail = "util " + fmt("%.4f", u) + " (want 0.111 +- 0.003)";
  return c;
}

Criterion c2(const Options& o) {
  Criterion c = utilization_check(2, Variant::kSsr);
  const double u = spvv_stats(1000, Variant::kSsr, 16, o).utilization();
  c.pass = std::abs(u - 0.143) <= 0.003;
  c.detail = "util " + fmt("%.4f", u) + " (want 0.143 +- 0.003)";
  return c;
}

Criterion c3(const Options& o) {
  Criterion c;
  c.id = 3;
  c.title = "issr SpVV utilization ceilings";
  c.pass = true;
  const std::map<int, std::pair<double, double>> bounds{{16, {0.75, 0.80}}, {32, {0.62, 0.667}}};
  for (const auto& [w, range] : bounds) {
    double prev = -1.0;
    bool increasing = true;
    std::string series;
    for (std::uint64_t n : {10, 100, 1000}) {
      const double u = spvv_stats(n, Variant::kIssr, w, o).utilization();
      increasing = increasing && u > prev;
      prev = u;
      series += (series.empty() ? "" : "/") + fmt("%.4f", u);
    }
    const bool in_range = prev >= range.first && prev <= range.second;
    c.pass = c.pass && in_range && increasing;
    c.detail += "W" + std::to_string(w) + " n=10/100/1000 " + series + " (n=1000 in [" +
                fmt("%.3f", range.first) + ", " + fmt("%.3f", range.second) + "]" +
                (increasing ? ", increasing" : ", NOT increasing") + "); ";
  }
  return c;
}

Criterion c4(const Options& o) {
  Criterion c;
  c.id = 4;
  c.title = "small-n crossover at n_nz=3";
  const double base = spvv_stats(3, Variant::kBase, 16, o).utilization();
  c.pass = true;
  c.detail = "base util " + fmt("%.4f", base);
  for (int w : {16, 32}) {
    const double rf = spvv_stats(3, Variant::kIssr, w, o).utilization_reduction_free();
    c.pass = c.pass && rf < base;
    c.detail += ", issr W" + std::to_string(w) + " reduction-free util " + fmt("%.4f", rf);
  }
  return c;
}

Criterion c5(const Options& o) {
  Criterion c;
  c.id = 5;
  c.title = "CsrMV speedup, 512 rows, mean 100 nonzeros per row";
  const CsrMatrix a = synthetic(512, 2048, 100, o);
  const auto x = formats::gen_dense_vector(2048, o.seed + 11);
  const std::map<int, std::pair<double, double>> bounds{{16, {6.5, 7.2}}, {32, {5.4, 6.0}}};
  c.pass = true;
  const double base = static_cast<double>(csrmv_stats(a, x, Variant::kBase, 16, o).cycles);
  for (const auto& [w, range] : bounds) {
    const double s = base / static_cast<double>(csrmv_stats(a, x, Variant::kIssr, w, o).cycles);
    c.pass = c.pass && s >= range.first && s <= range.second;
    c.detail += "W" + std::to_string(w) + " " + fmt("%.3f", s) + " in [" + fmt("%.1f", range.first) +
                ", " + fmt("%.1f", range.second) + "]; ";
  }
  return c;
}

Criterion c6(const Options& o) {
  Criterion c;
  c.id = 6;
  c.title = "index-width crossover";
  const auto x = formats::gen_dense_vector(2048, o.seed + 11);
  std::map<std::pair<int, int>, std::uint64_t> cycles;
  for (int n : {5, 50}) {
    const CsrMatrix a = synthetic(512, 2048, static_cast<std::uint64_t>(n), o);
    for (int w : {16, 32}) cycles[{n, w}] = csrmv_stats(a, x, Variant::kIssr, w, o).cycles;
  }
  c.pass = cycles[{5, 32}] < cycles[{5, 16}] && cycles[{50, 16}] < cycles[{50, 32}];
  c.detail = "mean 5: W16 " + std::to_string(cycles[{5, 16}]) + " / W32 " +
             std::to_string(cycles[{5, 32}]) + " cycles; mean 50: W16 " +
             std::to_string(cycles[{50, 16}]) + " / W32 " + std::to_string(cycles[{50, 32}]);
  return c;
}

Criterion c7(const Options& o) {
  Criterion c;
  c.id = 7;
  c.title = "CsrMM utilization tracks CsrMV";
  const CsrMatrix a = formats::gen_banded_csr(16, 64, 4, 16, o.seed + 2);
  const auto b = formats::gen_dense_vector(128, o.seed + 3);
  c.pass = true;
  for (int w : {16, 32}) {
    const auto mv = run_checked(kernels::build_csrmv(desc(Kernel::kCsrmv, Variant::kIssr, w), a, b,
                                                     o.contract),
                                o);
    const auto mm = run_checked(kernels::build_csrmm(desc(Kernel::kCsrmm, Variant::kIssr, w), a, b,
                                                     2, o.contract),
                                o);
    const double d = std::abs(mm.stats.utilization() - mv.stats.utilization());
    c.pass = c.pass && d <= 0.005;
    c.detail += "W" + std::to_string(w) + " mv " + fmt("%.4f", mv.stats.utilization()) + " mm " +
                fmt("%.4f", mm.stats.utilization()) + " diff " + fmt("%.4f", d) + "; ";
  }
  return c;
}

Criterion c8(const Options& o) {
  Criterion c;
  c.id = 8;
  c.title = "cluster CsrMV sweep, 4096 rows";
  const auto x = formats::gen_dense_vector(4096, o.seed + 12);
  cluster::ClusterConfig cc;
  cc.core = config_of(o);
  double max_speedup = 0.0;
  double max_util = 0.0;
  bool ok_low = false;
  bool ok_high = true;
  for (std::uint64_t n : {1, 10, 50, 100}) {
    const CsrMatrix a = formats::gen_banded_csr(4096, 4096, n, 16, o.seed + 20 + n);
    const auto base = cluster::simulate_cluster_csrmv(a, x, desc(Kernel::kCsrmv, Variant::kBase, 16), cc);
    const auto issr = cluster::simulate_cluster_csrmv(a, x, desc(Kernel::kCsrmv, Variant::kIssr, 16), cc);
    if (issr.y != formats::csrmv_ordered(a, x, kernels::default_accumulators(16, o.contract))) {
      throw Error("cluster result differs from its reference");
    }
    const double s = static_cast<double>(base.cycles) / static_cast<double>(issr.cycles);
    max_speedup = std::max(max_speedup, s);
    max_util = std::max(max_util, issr.utilization());
    if (n == 1) ok_low = s >= 1.5 && s <= 2.3;
    if (n >= 50) ok_high = ok_high && s >= 5.0;
    c.detail += "mean " + std::to_string(n) + ": " + fmt("%.2f", s) + "x util " +
                fmt("%.3f", issr.utilization()) + "; ";
  }
  const bool ok_max = max_speedup <= 5.8;
  const bool ok_util = max_util <= 0.73;
  c.pass = ok_low && ok_high && ok_max && ok_util;
  c.detail += std::string("mean 1 in [1.5, 2.3] ") + (ok_low ? "ok" : "NO") + ", max " +
              fmt("%.2f", max_speedup) + " <= 5.8 " + (ok_max ? "ok" : "NO") +
              ", >= 5.0 for mean >= 50 " + (ok_high ? "ok" : "NO") + ", util <= 0.73 " +
              (ok_util ? "ok" : "NO") + ", equivalent base cores " + fmt("%.1f", 8 * max_speedup);
  return c;
}

// ---------------------------------------------------------------------------
// Criterion 9: independent oracles

CsrMatrix random_csr(Rng& rng, std::uint64_t rows, std::uint64_t cols, std::uint64_t max_row) {
  CsrMatrix m;
  m.rows = rows;
  m.cols = cols;
  for (std::uint64_t r = 0; r < rows; ++r) {
    const std::uint64_t n = rng.uniform(std::min(cols, max_row) + 1);
    for (auto c : formats::sample_distinct(rng, cols, n)) {
      m.indices.push_back(c);
      m.values.push_back(rng.normal());
    }
    m.ptr.push_back(static_cast<std::uint32_t>(m.indices.size()));
  }
  return m;
}

std::vector<double> random_vector(Rng& rng, std::uint64_t n) {
  std::vector<double> v(n);
  for (auto& e : v) e = rng.normal();
  return v;
}

// One row of the kernel schedules: `lanes` interleaved fma chains from +0
// summed left to right; `lanes` = 1 is the plain scalar chain.
double lane_dot(const std::vector<double>& vals, const std::vector<double>& xs, int lanes) {
  if (vals.empty()) return 0.0;
  std::vector<double> acc(static_cast<std::size_t>(lanes), 0.0);
  for (std::size_t i = 0; i < vals.size(); ++i) {
    double& a = acc[i % static_cast<std::size_t>(lanes)];
    a = std::fma(vals[i], xs[i], a);
  }
  if (lanes == 1) return acc[0];
  double s = acc[0] + acc[1];
  for (std::size_t j = 2; j < acc.size(); ++j) s += acc[j];
  return s;
}

// Lanes of the issr CsrMV schedule for a row with n nonzeros.
int row_lanes(std::uint64_t n, int k, int unroll) {
  if (n >= 1 && n <= static_cast<std::uint64_t>(unroll)) return static_cast<int>(n);
  return k;
}

std::vector<double> oracle_csr(const CsrMatrix& a, const std::vector<double>& b,
                               std::uint64_t b_cols, bool issr, int k, int unroll) {
  std::vector<double> y(a.rows * b_cols);
  for (std::uint64_t col = 0; col < b_cols; ++col) {
    for (std::uint64_t r = 0; r < a.rows; ++r) {
      std::vector<double> vals;
      std::vector<double> xs;
      for (std::uint32_t e = a.ptr[r]; e < a.ptr[r + 1]; ++e) {
        vals.push_back(a.values[e]);
        xs.push_back(b[a.indices[e] * b_cols + col]);
      }
      y[r * b_cols + col] = lane_dot(vals, xs, issr ? row_lanes(vals.size(), k, unroll) : 1);
    }
  }
  return y;
}

std::vector<double> naive_csr(const CsrMatrix& a, const std::vector<double>& b,
                              std::uint64_t b_cols) {
  std::vector<double> y(a.rows * b_cols);
  for (std::uint64_t col = 0; col < b_cols; ++col) {
    for (std::uint64_t r = 0; r < a.rows; ++r) {
      long double s = 0.0L;
      for (std::uint32_t e = a.ptr[r]; e < a.ptr[r + 1]; ++e) {
        s += static_cast<long double>(a.values[e]) * b[a.indices[e] * b_cols + col];
      }
      y[r * b_cols + col] = static_cast<double>(s);
    }
  }
  return y;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](double p, double q) {
           return std::bit_cast<std::uint64_t>(p) == std::bit_cast<std::uint64_t>(q);
         });
}

struct Tally {
  int runs = 0;
  int failures = 0;
  std::string first_failure;
  void record(bool ok, const std::string& what) {
    ++runs;
    if (!ok && failures++ == 0) first_failure = what;
  }
};

void kernel_instances(Variant v, const Options& o, Tally& t) {
  for (int i = 0; i < o.instances; ++i) {
    Rng rng(o.seed * 1'000'003 + static_cast<std::uint64_t>(v) * 10'007 + static_cast<std::uint64_t>(i));
    const int w = rng.uniform(2) ? 32 : 16;
    KernelDescriptor d = desc(Kernel::kCsrmv, v, w);
    const int k = kernels::resolved_accumulators(d, o.contract);
    d.unroll_threshold = static_cast<int>(rng.uniform(static_cast<std::uint64_t>(k) + 1));
    const int unroll = kernels::resolved_unroll(d, o.contract);
    const bool issr = v == Variant::kIssr;
    const std::string what = std::string(kernels::variant_name(v)) + " instance " + std::to_string(i);
    std::vector<double> got;
    std::vector<double> want;
    std::vector<double> naive;
    switch (i % 3) {
      case 0: {
        const std::uint64_t dim = 8 + rng.uniform(2000);
        const std::uint64_t nnz = rng.uniform(std::min<std::uint64_t>(dim, 300) + 1);
        const auto picked = formats::sample_distinct(rng, dim, nnz);
        formats::SparseFiber a;
        a.dimension = dim;
        a.indices.assign(picked.begin(), picked.end());
        a.values = random_vector(rng, nnz);
        const auto x = random_vector(rng, dim);
        d.kernel = Kernel::kSpvv;
        const auto r = kernels::run_kernel(kernels::build_spvv(d, a, x, o.contract), config_of(o));
        got = r.result;
        std::vector<double> xs;
        for (auto c : a.indices) xs.push_back(x[c]);
        want = {lane_dot(a.values, xs, issr ? k : 1)};
        long double s = 0.0L;
        for (std::size_t e = 0; e < nnz; ++e) s += static_cast<long double>(a.values[e]) * xs[e];
        naive = {static_cast<double>(s)};
        break;
      }
      case 1:
      case 2: {
        const std::uint64_t rows = 1 + rng.uniform(24);
        const std::uint64_t cols = 1 + rng.uniform(400);
        const CsrMatrix a = random_csr(rng, rows, cols, 2 * static_cast<std::uint64_t>(k) + 6);
        const std::uint64_t b_cols = i % 3 == 1 ? 1 : (1ull << rng.uniform(3));
        const auto b = random_vector(rng, cols * b_cols);
        if (i % 3 == 1) {
          got = kernels::run_kernel(kernels::build_csrmv(d, a, b, o.contract), config_of(o)).result;
        } else {
          d.kernel = Kernel::kCsrmm;
          got = kernels::run_kernel(kernels::build_csrmm(d, a, b, b_cols, o.contract), config_of(o))
                    .result;
        }
        want = oracle_csr(a, b, b_cols, issr, k, unroll);
        naive = naive_csr(a, b, b_cols);
        break;
      }
    }
    t.record(same_bits(got, want) && core::max_relative_error(got, naive) <= 1e-10, what);
  }
}

void indirect_instances(const Options& o, Tally& t) {
  for (int i = 0; i < o.instances; ++i) {
    Rng rng(o.seed * 7919 + static_cast<std::uint64_t>(i));
    const int w = rng.uniform(2) ? 32 : 16;
    const std::string what = "issr gather/scatter kernel " + std::to_string(i);
    const std::uint64_t n = rng.uniform(200);
    if (i % 2 == 0) {
      const std::uint64_t entries = 1 + rng.uniform(300);
      const auto table = random_vector(rng, entries);
      std::vector<std::uint32_t> codes(n);
      for (auto& c : codes) c = static_cast<std::uint32_t>(rng.uniform(entries));
      const auto r = kernels::run_kernel(
          kernels::build_codebook_decode(desc(Kernel::kCodebook, Variant::kIssr, w), table, codes,
                                         o.contract),
          config_of(o));
      std::vector<double> want;
      for (auto c : codes) want.push_back(table[c]);
      t.record(same_bits(r.result, want), what);
    } else {
      const std::uint64_t dim = 1 + rng.uniform(600);
      std::vector<std::uint32_t> idx(n);
      for (auto& e : idx) e = static_cast<std::uint32_t>(rng.uniform(dim));
      const auto values = random_vector(rng, n);
      const auto y = random_vector(rng, dim);
      const auto r = kernels::run_kernel(
          kernels::build_scatter(desc(Kernel::kScatter, Variant::kIssr, w), values, idx, y,
                                 o.contract),
          config_of(o));
      std::vector<double> want = y;
      for (std::size_t e = 0; e < n; ++e) want[idx[e]] = values[e];
      t.record(same_bits(r.result, want), what);
    }
  }
}

// Raw stream-unit jobs against brute-force address enumeration.
void stream_instances(const Options& o, Tally& t) {
  constexpr std::uint64_t kBytes = 1 << 18;
  for (int i = 0; i < o.instances; ++i) {
    Rng rng(o.seed * 104'729 + static_cast<std::uint64_t>(i));
    const std::string what = "stream job " + std::to_string(i);
    mem::ByteStore image(0, kBytes);
    for (std::uint64_t a = 0; a < kBytes; a += 8) image.write_f64(a, static_cast<double>(a) + 0.5);
    stream::StreamUnitConfig cfg;
    cfg.indirection = true;
    cfg.data_fifo_depth = o.contract.data_fifo_depth;
    cfg.index_fifo_words = o.contract.index_fifo_words;
    stream::StreamJob job;
    std::vector<std::uint64_t> addresses;
    const int kind = i % 3;
    if (kind == 0) {
      // Affine read, relative strides.
      job.mode = stream::Mode::kAffine;
      std::uint64_t p = 0x100 * (1 + rng.uniform(64));
      job.data_base = p;
      for (int l = 0; l < 4; ++l) {
        job.bounds[static_cast<std::size_t>(l)] = 1 + rng.uniform(l == 0 ? 6 : 3);
        job.strides[static_cast<std::size_t>(l)] = 8 * static_cast<std::int64_t>(rng.uniform(9));
      }
      std::array<std::uint64_t, 4> ctr{};
      const std::uint64_t total = job.element_count();
      for (std::uint64_t e = 0; e < total; ++e) {
        addresses.push_back(p);
        for (std::size_t l = 0; l < 4; ++l) {
          if (++ctr[l] < job.bounds[l] || l == 3) {
            p += static_cast<std::uint64_t>(job.strides[l]);
            break;
          }
          ctr[l] = 0;
        }
      }
    } else {
      job.mode = stream::Mode::kIndirect;
      job.index_width = rng.uniform(2) ? 32 : 16;
      job.shift = static_cast<unsigned>(rng.uniform(3));
      const std::uint64_t n = 1 + rng.uniform(120);
      job.bounds = {n, 1, 1, 1};
      const auto isz = static_cast<std::uint64_t>(job.index_width / 8);
      job.index_base = 0x20000 + isz * rng.uniform(64);
      job.data_base = 0x8 * rng.uniform(256);
      const std::uint64_t limit = (0x1f000 - job.data_base) >> (3 + job.shift);
      for (std::uint64_t e = 0; e < n; ++e) {
        const std::uint64_t idx = rng.uniform(std::min<std::uint64_t>(limit, 1ull << job.index_width));
        image.write(job.index_base + isz * e, static_cast<unsigned>(isz), idx);
        addresses.push_back(job.data_base + (idx << (3 + job.shift)));
      }
    }
    const bool write = kind == 2;
    job.direction = write ? stream::Direction::kWrite : stream::Direction::kRead;
    if (!write) job.repeat = static_cast<std::uint32_t>(1 + rng.uniform(3));
    std::vector<double> values;
    if (write) values = random_vector(rng, addresses.size());
    const auto run = stream::run_standalone(job, cfg, image, values);
    bool ok = true;
    if (write) {
      mem::ByteStore want = image;
      for (std::size_t e = 0; e < addresses.size(); ++e) want.write_f64(addresses[e], values[e]);
      ok = run.image == want;
    } else {
      std::vector<double> want;
      for (auto a : addresses) {
        for (std::uint32_t r = 0; r < job.repeat; ++r) want.push_back(image.read_f64(a));
      }
      ok = run.values == want;
    }
    t.record(ok, what);
  }
}

void unit_examples(Tally& t) {
  using stream::serialize_indices;
  const std::uint64_t word = 0xDEADBEEF01234567ull;
  t.record(serialize_indices(word, 16, 0) == std::vector<std::uint32_t>{0x4567, 0x0123, 0xBEEF, 0xDEAD},
           "serializer W16");
  t.record(serialize_indices(word, 32, 0) == std::vector<std::uint32_t>{0x01234567, 0xDEADBEEF},
           "serializer W32");
  t.record(serialize_indices(word, 16, 2) == std::vector<std::uint32_t>{0xBEEF, 0xDEAD},
           "serializer offset");

  const auto affine = [](std::array<std::uint64_t, 4> bounds, std::array<std::int64_t, 4> strides,
                         std::uint64_t base) {
    stream::StreamJob j;
    j.bounds = bounds;
    j.strides = strides;
    j.data_base = base;
    stream::AffineIterator it(j);
    std::vector<std::uint64_t> out;
    while (auto a = it.next()) out.push_back(*a);
    return out;
  };
  t.record(affine({4, 1, 1, 1}, {8, 0, 0, 0}, 0) == std::vector<std::uint64_t>{0, 8, 16, 24},
           "affine contiguous");
  t.record(affine({2, 3, 1, 1}, {8, 64, 0, 0}, 0) ==
               std::vector<std::uint64_t>{0, 8, 72, 80, 144, 152},
           "affine two loops");
  t.record(affine({1, 1, 1, 1}, {0, 0, 0, 0}, 0x2000) == std::vector<std::uint64_t>{0x2000},
           "affine single");

  const auto indirect = [](int w, unsigned shift, std::uint64_t data_base, std::uint64_t index_base,
                           std::uint64_t word, std::uint64_t n) {
    stream::StreamJob j;
    j.mode = stream::Mode::kIndirect;
    j.index_width = w;
    j.shift = shift;
    j.data_base = data_base;
    j.index_base = index_base;
    j.bounds = {n, 1, 1, 1};
    stream::IndirectGenerator g(j, 4, 18);
    std::vector<std::uint64_t> out;
    g.index_fetch_issued();
    g.index_word_arrived(word, 0);
    while (!g.exhausted() && g.has_index(0)) {
      out.push_back(g.current_data_address(0));
      g.advance();
    }
    return std::make_pair(out, g.short_offset());
  };
  t.record(indirect(32, 0, 0x2000, 0, 5 | (9ull << 32), 2).first ==
               std::vector<std::uint64_t>{0x2028, 0x2048},
           "indirect W32");
  t.record(indirect(16, 2, 0, 0, 1 | (2ull << 16) | (3ull << 32) | (4ull << 48), 4).first ==
               std::vector<std::uint64_t>{0x20, 0x40, 0x60, 0x80},
           "indirect W16 shift");
  {
    stream::StreamJob j;
    j.mode = stream::Mode::kIndirect;
    j.index_width = 16;
    j.index_base = 0x1002;
    j.bounds = {3, 1, 1, 1};
    stream::IndirectGenerator g(j, 4, 18);
    const bool aligned = g.next_index_word_address() == 0x1000 && g.short_offset() == 1;
    g.index_fetch_issued();
    g.index_word_arrived(0x0004000300020001ull, 0);
    t.record(aligned && g.current_index() == 2, "indirect unaligned base");
  }

  stream::PortArbiter arb;
  bool ok = arb.arbitrate(false, true) == stream::Grant::kData;
  std::vector<stream::Grant> seq;
  for (int i = 0; i < 4; ++i) seq.push_back(arb.arbitrate(true, true));
  ok = ok && seq[0] != seq[1] && seq[1] != seq[2] && seq[2] != seq[3];
  t.record(ok, "port arbiter alternation");
}

Criterion c9(const Options& o) {
  Criterion c;
  c.id = 9;
  c.title = "functional oracles";
  std::map<std::string, Tally> tallies;
  for (Variant v : {Variant::kBase, Variant::kSsr, Variant::kIssr}) {
    kernel_instances(v, o, tallies[std::string(kernels::variant_name(v))]);
  }
  indirect_instances(o, tallies["issr-gather-scatter"]);
  stream_instances(o, tallies["stream-unit"]);
  unit_examples(tallies["unit-examples"]);
  c.pass = true;
  for (const auto& [name, t] : tallies) {
    c.pass = c.pass && t.failures == 0;
    c.detail += name + " " + std::to_string(t.runs - t.failures) + "/" + std::to_string(t.runs);
    if (t.failures) c.detail += " (first failure: " + t.first_failure + ")";
    c.detail += "; ";
  }
  return c;
}

// ---------------------------------------------------------------------------
// Criterion 10: sliding-window emission rate of a long indirect stream

Criterion c10(const Options& o) {
  Criterion c;
  c.id = 10;
  c.title = "ISSR data emission ceiling";
  c.pass = true;
  constexpr std::uint64_t kWindow = 1000;
  constexpr std::uint64_t kElements = 20000;
  for (int w : {16, 32}) {
    const double lanes = 64.0 / w;
    const double ceiling = lanes / (lanes + 1.0);
    mem::ByteStore image(0, 1 << 18);
    stream::StreamJob job;
    job.mode = stream::Mode::kIndirect;
    job.index_width = w;
    job.index_base = 0x10000;
    job.bounds = {kElements, 1, 1, 1};
    Rng rng(o.seed + static_cast<std::uint64_t>(w));
    for (std::uint64_t e = 0; e < kElements; ++e) {
      image.write(job.index_base + e * static_cast<std::uint64_t>(w / 8),
                  static_cast<unsigned>(w / 8), rng.uniform(4096));
    }
    stream::StreamUnitConfig cfg;
    cfg.indirection = true;
    cfg.data_fifo_depth = o.contract.data_fifo_depth;
    cfg.index_fifo_words = o.contract.index_fifo_words;
    const auto run = stream::run_standalone(job, cfg, image);

    std::vector<std::uint64_t> per_cycle(run.cycles, 0);
    for (auto t : run.data_cycles) ++per_cycle[t];
    // Steady state: skip the first and last 100 emitting cycles.
    const std::uint64_t begin = run.data_cycles.front() + 100;
    const std::uint64_t end = run.data_cycles.back() - 100;
    // A window holds whole emissions, so the ceiling allows the count to
    // round up once.
    const auto max_count = static_cast<std::uint64_t>(std::ceil(ceiling * kWindow - 1e-9));
    std::uint64_t in_window = 0;
    std::uint64_t worst = 0;
    for (std::uint64_t t = begin; t < end; ++t) {
      in_window += per_cycle[t];
      if (t >= begin + kWindow) in_window -= per_cycle[t - kWindow];
      if (t + 1 >= begin + kWindow) worst = std::max(worst, in_window);
    }
    const double max_rate = static_cast<double>(worst) / kWindow;
    const double last_rate = static_cast<double>(in_window) / kWindow;
    const bool ok = worst <= max_count && last_rate >= 0.99 * ceiling;
    c.pass = c.pass && ok;
    c.detail += "W" + std::to_string(w) + " max " + fmt("%.4f", max_rate) + " last " +
                fmt("%.4f", last_rate) + " ceiling " + fmt("%.4f", ceiling) + "; ";
  }
  return c;
}

}  // namespace

Criterion check(int id, const Options& options) {
  static const std::map<int, std::function<Criterion(const Options&)>> checks{
      {1, c1}, {2, c2}, {3, c3}, {4, c4}, {5, c5}, {6, c6}, {7, c7}, {8, c8}, {9, c9}, {10, c10}};
  const auto it = checks.find(id);
  if (it == checks.end()) throw ConfigError("no criterion " + std::to_string(id));
  try {
    return it->second(options);
  } catch (const std::exception& e) {
    Criterion c;
    c.id = id;
    c.title = "criterion " + std::to_string(id);
    c.detail = std::string("error: ") + e.what();
    return c;
  }
}

std::vector<Criterion> run_all(const Options& options) {
  std::vector<Criterion> out;
  for (int id = 1; id <= kNumCriteria; ++id) out.push_back(check(id, options));
  return out;
}

std::string format(const Criterion& c) {
  char head[32];
  std::snprintf(head, sizeof head, "%s %2d  ", c.pass ? "PASS" : "FAIL", c.id);
  std::string detail = c.detail;
  while (!detail.empty() && (detail.back() == ' ' || detail.back() == ';')) detail.pop_back();
  return head + c.title + ": " + detail;
}

}  // namespace issrsim::acceptance
