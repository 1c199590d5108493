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
 * @file experiment.hpp
 * @brief Experiment runner behind the command-line tool: builds inputs,
 *        runs every (kernel, variant, W, input) point and renders CSV.
 *
 * CSV columns, in order:
 *   kernel, variant, index_width, input, size, rows, cols, nnz,
 *   accumulators, cycles, fmadds, fp_compute_ops, utilization,
 *   utilization_reduction_free, speedup_vs_base, bit_exact,
 *   naive_rel_error, pass, fpu_<state> for every FPU state,
 *   core_<state> for every core state, shared_port_requests,
 *   issr_port_requests, shared_port_conflicts, issr_port_conflicts,
 *   fpu_latency, fpu_queue_depth, data_fifo_depth, index_fifo_words,
 *   load_use_cycles
 *
 * `size` is n_nz for vector kernels and the mean nonzeros per row for the
 * matrix kernels (0 for Matrix Market inputs). speedup_vs_base is empty
 * unless the base variant ran on the same input and index width.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "issrsim/core.hpp"
#include "issrsim/kernels.hpp"

namespace issrsim::cli {

enum ExitCode : int { kExitOk = 0, kExitMismatch = 1, kExitBadInput = 2 };

/// Environment variable naming the default CSV output directory.
inline constexpr const char* kOutDirEnv = "ISSRSIM_OUT_DIR";

struct ExperimentSpec {
  std::string kernel = "spvv";  // spvv | csrmv | csrmm | cluster-csrmv | codebook | scatter
  std::vector<kernels::Variant> variants;  // empty: every variant the kernel supports
  std::vector<int> widths{16};
  std::vector<std::uint64_t> sizes;        // empty: kernel default
  std::vector<std::string> matrices;       // Matrix Market inputs, run after `sizes`
  std::uint64_t rows = 0;                  // synthetic matrices; 0: kernel default
  std::uint64_t cols = 0;
  std::uint64_t dense_cols = 2;            // CsrMM
  std::uint64_t seed = 1;
  core::TimingContract contract;
  int accumulators = 0;                    // 0: derived from the contract
  int unroll = 0;                          // 0: accumulators
};

struct ResultRow {
  std::string kernel;
  std::string variant;
  int index_width = 16;
  std::string input;
  std::uint64_t size = 0;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  std::uint64_t nnz = 0;
  int accumulators = 0;
  core::CycleStats stats;
  double utilization = 0.0;
  double utilization_reduction_free = 0.0;
  std::optional<double> speedup;
  bool bit_exact = false;
  double naive_error = 0.0;
  bool pass = false;
};

struct Report {
  std::vector<ResultRow> rows;
  std::vector<std::string> diagnostics;  // one line per failed point
  bool all_passed() const;
};

/// Throws ConfigError or FormatError on bad input; functional mismatches
/// are reported in the rows and diagnostics instead.
Report run(const ExperimentSpec& spec);

std::string csv_header();
std::string csv(const Report& report);
/// Fixed-width console table.
std::string summary(const Report& report);
/// $ISSRSIM_OUT_DIR, or "." when unset.
std::string default_output_dir();

}  // namespace issrsim::cli
