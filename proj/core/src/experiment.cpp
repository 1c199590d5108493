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
#include "issrsim/experiment.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>
#include <tuple>

#include "issrsim/cluster.hpp"
#include "issrsim/error.hpp"
#include "issrsim/formats.hpp"

namespace issrsim::cli {

using kernels::Variant;

namespace {

constexpr double kNaiveTolerance = 1e-10;
constexpr std::uint64_t kSpvvDimension = 10000;
constexpr std::uint64_t kCodebookEntries = 256;

struct Input {
  std::string name;
  std::uint64_t size = 0;
  formats::CsrMatrix matrix;
};

std::vector<Variant> supported(const std::string& kernel) {
  if (kernel == "codebook" || kernel == "scatter") return {Variant::kIssr};
  return {Variant::kBase, Variant::kSsr, Variant::kIssr};
}

std::vector<std::uint64_t> default_sizes(const std::string& kernel) {
  if (kernel == "csrmv" || kernel == "csrmm") return {100};
  if (kernel == "cluster-csrmv") return {1, 10, 50, 100};
  return {1000};
}

bool is_matrix_kernel(const std::string& kernel) {
  return kernel == "csrmv" || kernel == "csrmm" || kernel == "cluster-csrmv";
}

std::string fmt(double v, const char* format = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

void fill_stats(ResultRow& row, const core::CycleStats& s) {
  row.stats = s;
  row.utilization = s.utilization();
  row.utilization_reduction_free = s.utilization_reduction_free();
}

void finish_row(ResultRow& row, const std::vector<double>& got, const std::vector<double>& ordered,
                const std::vector<double>& naive) {
  row.bit_exact = got.size() == ordered.size() &&
                  std::equal(got.begin(), got.end(), ordered.begin(), [](double a, double b) {
                    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
                  });
  row.naive_error = core::max_relative_error(got, naive);
  row.pass = row.bit_exact && row.naive_error <= kNaiveTolerance;
}

kernels::KernelDescriptor descriptor(const ExperimentSpec& spec, kernels::Kernel kernel, Variant v,
                                     int width) {
  kernels::KernelDescriptor d;
  d.kernel = kernel;
  d.variant = v;
  d.index_width = width;
  d.accumulators = spec.accumulators;
  d.unroll_threshold = spec.unroll;
  return d;
}

void run_kernel_point(ResultRow& row, const kernels::BuiltKernel& k, const core::CoreConfig& config) {
  const kernels::KernelRun r = kernels::run_kernel(k, config);
  row.accumulators = k.accumulators;
  fill_stats(row, r.stats);
  finish_row(row, r.result, k.ordered, k.naive);
}

ResultRow run_point(const ExperimentSpec& spec, const Input& in, Variant v, int width) {
  ResultRow row;
  row.kernel = spec.kernel;
  row.variant = std::string(kernels::variant_name(v));
  row.index_width = width;
  row.input = in.name;
  row.size = in.size;
  core::CoreConfig config;
  config.timing = spec.contract;
  const std::uint64_t seed = spec.seed;

  if (spec.kernel == "spvv") {
    const std::uint64_t dim = std::max(kSpvvDimension, 2 * in.size);
    const auto a = formats::gen_sparse_vector(dim, in.size, width, seed);
    const auto x = formats::gen_dense_vector(dim, seed + 1);
    row.cols = dim;
    row.nnz = in.size;
    run_kernel_point(row, kernels::build_spvv(descriptor(spec, kernels::Kernel::kSpvv, v, width), a, x,
                                              spec.contract),
                     config);
  } else if (spec.kernel == "codebook") {
    formats::Rng rng(seed);
    const auto table = formats::gen_dense_vector(kCodebookEntries, seed + 1);
    std::vector<std::uint32_t> codes(in.size);
    for (auto& c : codes) c = static_cast<std::uint32_t>(rng.uniform(kCodebookEntries));
    row.cols = kCodebookEntries;
    row.nnz = in.size;
    run_kernel_point(row,
                     kernels::build_codebook_decode(
                         descriptor(spec, kernels::Kernel::kCodebook, v, width), table, codes,
                         spec.contract),
                     config);
  } else if (spec.kernel == "scatter") {
    formats::Rng rng(seed);
    const std::uint64_t dim = std::max<std::uint64_t>(4 * in.size, 16);
    if (width == 16 && dim > 65536) throw ConfigError("scatter size too large for 16-bit indices");
    const auto picked = formats::sample_distinct(rng, dim, in.size);
    std::vector<std::uint32_t> idx(picked.begin(), picked.end());
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.uniform(i)]);
    const auto values = formats::gen_dense_vector(in.size, seed + 1);
    const auto y = formats::gen_dense_vector(dim, seed + 2);
    row.cols = dim;
    row.nnz = in.size;
    run_kernel_point(row,
                     kernels::build_scatter(descriptor(spec, kernels::Kernel::kScatter, v, width),
                                            values, idx, y, spec.contract),
                     config);
  } else {
    const formats::CsrMatrix& a = in.matrix;
    formats::require_index_width(a, width);
    row.rows = a.rows;
    row.cols = a.cols;
    row.nnz = a.nnz();
    if (spec.kernel == "csrmv") {
      const auto x = formats::gen_dense_vector(a.cols, seed + 1);
      run_kernel_point(row, kernels::build_csrmv(descriptor(spec, kernels::Kernel::kCsrmv, v, width),
                                                 a, x, spec.contract),
                       config);
    } else if (spec.kernel == "csrmm") {
      const auto b = formats::gen_dense_vector(a.cols * spec.dense_cols, seed + 1);
      run_kernel_point(row,
                       kernels::build_csrmm(descriptor(spec, kernels::Kernel::kCsrmm, v, width), a,
                                            b, spec.dense_cols, spec.contract),
                       config);
    } else {
      const auto x = formats::gen_dense_vector(a.cols, seed + 1);
      const auto d = descriptor(spec, kernels::Kernel::kCsrmv, v, width);
      cluster::ClusterConfig cc;
      cc.core = config;
      const auto r = cluster::simulate_cluster_csrmv(a, x, d, cc);
      row.accumulators = kernels::resolved_accumulators(d, spec.contract);
      core::CycleStats s = r.aggregate;
      fill_stats(row, s);
      row.utilization = r.utilization();
      row.utilization_reduction_free =
          s.last_fmadd_retire ? static_cast<double>(s.fmadds) /
                                    (static_cast<double>(s.last_fmadd_retire) * r.per_core.size())
                              : 0.0;
      const auto naive = formats::csrmv_ref(a, x);
      const auto ordered =
          v == Variant::kIssr
              ? formats::csrmv_ordered(a, x, row.accumulators,
                                       kernels::resolved_unroll(d, spec.contract))
              : naive;
      finish_row(row, r.y, ordered, naive);
    }
  }
  return row;
}

std::vector<Input> inputs(const ExperimentSpec& spec) {
  std::vector<Input> out;
  const bool matrix = is_matrix_kernel(spec.kernel);
  const bool cluster = spec.kernel == "cluster-csrmv";
  const std::uint64_t rows = spec.rows ? spec.rows : (cluster ? 4096 : 512);
  const std::uint64_t cols = spec.cols ? spec.cols : (cluster ? 4096 : 2048);
  std::vector<std::uint64_t> sizes = spec.sizes;
  if (sizes.empty() && spec.matrices.empty()) sizes = default_sizes(spec.kernel);
  for (std::uint64_t n : sizes) {
    Input in;
    in.size = n;
    if (matrix) {
      if (n > cols) throw ConfigError("mean row nonzeros exceed the column count");
      // 16-bit columns so that one matrix serves both index widths.
      in.matrix = formats::gen_banded_csr(rows, cols, n, 16, spec.seed);
      in.name = "synthetic-" + std::to_string(rows) + "x" + std::to_string(cols);
    } else {
      in.name = "synthetic";
    }
    out.push_back(std::move(in));
  }
  for (const std::string& path : spec.matrices) {
    if (!matrix) throw ConfigError("matrix files apply to csrmv, csrmm and cluster-csrmv only");
    Input in;
    in.name = path;
    in.matrix = formats::load_matrix_market(path);
    out.push_back(std::move(in));
  }
  return out;
}

void validate(const ExperimentSpec& spec) {
  const std::vector<std::string> kernels{"spvv",  "csrmv",    "csrmm",
                                         "cluster-csrmv", "codebook", "scatter"};
  if (std::find(kernels.begin(), kernels.end(), spec.kernel) == kernels.end()) {
    throw ConfigError("unknown kernel '" + spec.kernel + "'");
  }
  const auto ok = supported(spec.kernel);
  for (Variant v : spec.variants) {
    if (std::find(ok.begin(), ok.end(), v) == ok.end()) {
      throw ConfigError(spec.kernel + " has no " + std::string(kernels::variant_name(v)) +
                        " variant");
    }
  }
  if (spec.widths.empty()) throw ConfigError("at least one index width is required");
  for (int w : spec.widths) {
    if (w != 16 && w != 32) throw ConfigError("index width must be 16 or 32");
  }
  if (spec.contract.fpu_latency < 1 || spec.contract.fpu_queue_depth < 1 ||
      spec.contract.data_fifo_depth < 1 || spec.contract.index_fifo_words < 1) {
    throw ConfigError("timing contract parameters must be positive");
  }
}

}  // namespace

bool Report::all_passed() const {
  return std::all_of(rows.begin(), rows.end(), [](const ResultRow& r) { return r.pass; });
}

Report run(const ExperimentSpec& spec) {
  validate(spec);
  const std::vector<Variant> variants = spec.variants.empty() ? supported(spec.kernel) : spec.variants;
  Report report;
  for (const Input& in : inputs(spec)) {
    for (int w : spec.widths) {
      std::optional<std::uint64_t> base_cycles;
      const std::size_t first = report.rows.size();
      for (Variant v : variants) {
        ResultRow row = run_point(spec, in, v, w);
        if (v == Variant::kBase) base_cycles = row.stats.cycles;
        if (!row.pass) {
          report.diagnostics.push_back(row.kernel + "/" + row.variant + "/" + std::to_string(w) +
                                       " on " + row.input + " size " + std::to_string(row.size) +
                                       ": bit_exact=" + (row.bit_exact ? "1" : "0") +
                                       " naive_rel_error=" + fmt(row.naive_error, "%.3e"));
        }
        report.rows.push_back(std::move(row));
      }
      if (base_cycles) {
        for (std::size_t i = first; i < report.rows.size(); ++i) {
          ResultRow& r = report.rows[i];
          if (r.stats.cycles) {
            r.speedup = static_cast<double>(*base_cycles) / static_cast<double>(r.stats.cycles);
          }
        }
      }
    }
  }
  return report;
}

std::string csv_header() {
  std::ostringstream os;
  os << "kernel,variant,index_width,input,size,rows,cols,nnz,accumulators,cycles,fmadds,"
        "fp_compute_ops,utilization,utilization_reduction_free,speedup_vs_base,bit_exact,"
        "naive_rel_error,pass";
  for (int s = 0; s < core::kNumFpuStates; ++s) {
    os << ",fpu_" << core::fpu_state_name(static_cast<core::FpuState>(s));
  }
  for (int s = 0; s < core::kNumCoreStates; ++s) {
    os << ",core_" << core::core_state_name(static_cast<core::CoreState>(s));
  }
  os << ",shared_port_requests,issr_port_requests,shared_port_conflicts,issr_port_conflicts,"
        "fpu_latency,fpu_queue_depth,data_fifo_depth,index_fifo_words,load_use_cycles";
  return os.str();
}

std::string csv(const Report& report) {
  std::ostringstream os;
  os << csv_header() << "\n";
  for (const ResultRow& r : report.rows) {
    const core::CycleStats& s = r.stats;
    const core::TimingContract& c = s.contract;
    os << r.kernel << "," << r.variant << "," << r.index_width << "," << r.input << "," << r.size
       << "," << r.rows << "," << r.cols << "," << r.nnz << "," << r.accumulators << ","
       << s.cycles << "," << s.fmadds << "," << s.fp_compute_ops << "," << fmt(r.utilization)
       << "," << fmt(r.utilization_reduction_free) << ","
       << (r.speedup ? fmt(*r.speedup, "%.4f") : std::string()) << "," << (r.bit_exact ? 1 : 0)
       << "," << fmt(r.naive_error, "%.3e") << "," << (r.pass ? 1 : 0);
    for (auto v : s.fpu_states) os << "," << v;
    for (auto v : s.core_states) os << "," << v;
    os << "," << s.port_requests[0] << "," << s.port_requests[1] << "," << s.port_conflicts[0]
       << "," << s.port_conflicts[1] << "," << c.fpu_latency << "," << c.fpu_queue_depth << ","
       << c.data_fifo_depth << "," << c.index_fifo_words << "," << c.load_use_cycles << "\n";
  }
  return os.str();
}

std::string summary(const Report& report) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-14s %-5s %3s %8s %10s %7s %7s %8s %s\n", "kernel", "var",
                "W", "size", "cycles", "util", "rf", "speedup", "check");
  os << line;
  for (const ResultRow& r : report.rows) {
    std::snprintf(line, sizeof line, "%-14s %-5s %3d %8llu %10llu %7.4f %7.4f %8s %s\n",
                  r.kernel.c_str(), r.variant.c_str(), r.index_width,
                  static_cast<unsigned long long>(r.size),
                  static_cast<unsigned long long>(r.stats.cycles), r.utilization,
                  r.utilization_reduction_free,
                  r.speedup ? fmt(*r.speedup, "%.3f").c_str() : "-", r.pass ? "ok" : "FAIL");
    os << line;
  }
  return os.str();
}

std::string default_output_dir() {
  const char* dir = std::getenv(kOutDirEnv);
  return dir && *dir ? dir : ".";
}

}  // namespace issrsim::cli
