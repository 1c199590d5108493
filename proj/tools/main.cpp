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
// issrsim command-line tool: kernel runs, sweeps and the acceptance checks.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "issrsim/acceptance.hpp"
#include "issrsim/cluster.hpp"
#include "issrsim/error.hpp"
#include "issrsim/experiment.hpp"
#include "issrsim/formats.hpp"
#include "json.hpp"

namespace {

using issrsim::cli::ExperimentSpec;

struct Common {
  std::vector<std::string> variants;
  std::vector<int> widths;
  std::vector<std::uint64_t> sizes;
  std::vector<std::string> matrices;
  std::string out;
  ExperimentSpec spec;
};

void add_contract_options(CLI::App* app, issrsim::core::TimingContract& c) {
  app->add_option("--latency", c.fpu_latency, "FPU pipeline latency L")->check(CLI::PositiveNumber);
  app->add_option("--queue-depth", c.fpu_queue_depth, "FPU instruction queue depth")
      ->check(CLI::PositiveNumber);
  app->add_option("--data-fifo", c.data_fifo_depth, "stream data FIFO depth")
      ->check(CLI::PositiveNumber);
  app->add_option("--index-fifo", c.index_fifo_words, "ISSR index FIFO words")
      ->check(CLI::PositiveNumber);
}

void add_run_options(CLI::App* app, Common& o, bool matrix, bool vector_sizes) {
  app->add_option("--variant", o.variants, "base, ssr and/or issr")->delimiter(',');
  app->add_option("--w", o.widths, "index widths (16, 32)")->delimiter(',');
  if (vector_sizes) {
    app->add_option("--nnz", o.sizes, "nonzero counts")->delimiter(',');
  }
  if (matrix) {
    app->add_option("--nnz-per-row", o.sizes, "mean nonzeros per row of synthetic matrices")
        ->delimiter(',');
    app->add_option("--matrix", o.matrices, "Matrix Market files")->delimiter(',');
    app->add_option("--rows", o.spec.rows, "rows of synthetic matrices");
    app->add_option("--cols", o.spec.cols, "columns of synthetic matrices");
  }
  app->add_option("--dense-cols", o.spec.dense_cols, "CsrMM dense columns (power of two)");
  app->add_option("--seed", o.spec.seed, "input generator seed");
  app->add_option("--accumulators", o.spec.accumulators, "issr accumulators K (0: derived)");
  app->add_option("--unroll", o.spec.unroll, "issr straight-line row limit (0: K)");
  app->add_option("-o,--out", o.out, "CSV output path");
  add_contract_options(app, o.spec.contract);
}

int run_experiment(Common& o, const std::string& kernel, bool sweep) {
  ExperimentSpec spec = o.spec;
  spec.kernel = kernel;
  for (const auto& v : o.variants) spec.variants.push_back(issrsim::kernels::parse_variant(v));
  spec.widths = o.widths.empty() ? (sweep ? std::vector<int>{16, 32} : std::vector<int>{16})
                                 : o.widths;
  spec.sizes = o.sizes;
  spec.matrices = o.matrices;

  const auto report = issrsim::cli::run(spec);
  const std::string path =
      o.out.empty() ? issrsim::cli::default_output_dir() + "/" + kernel + ".csv" : o.out;
  std::ofstream file(path);
  if (!file) throw issrsim::ConfigError("cannot write " + path);
  file << issrsim::cli::csv(report);
  std::cout << issrsim::cli::summary(report) << "wrote " << path << "\n";
  for (const auto& d : report.diagnostics) std::cerr << "mismatch: " << d << "\n";
  return report.all_passed() ? issrsim::cli::kExitOk : issrsim::cli::kExitMismatch;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"issrsim: cycle-approximate core, stream and cluster simulator"};
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> kernels{
      {"spvv", "sparse-dense dot product"},
      {"csrmv", "CSR matrix times dense vector"},
      {"csrmm", "CSR matrix times dense matrix"},
      {"cluster-csrmv", "CsrMV on the eight-worker cluster"},
      {"codebook", "codebook decoding through an indirect read stream"},
      {"scatter", "scatter through an indirect write stream"}};
  std::vector<Common> options(kernels.size());
  std::vector<CLI::App*> commands;
  std::string plan_out;
  std::string core_stats_out;
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    const auto& [name, help] = kernels[i];
    const bool matrix = name == "csrmv" || name == "csrmm" || name == "cluster-csrmv";
    auto* sub = app.add_subcommand(name, help);
    add_run_options(sub, options[i], matrix, !matrix);
    if (name == "cluster-csrmv") {
      sub->add_option("--plan-out", plan_out, "write the tile plan of the first input");
      sub->add_option("--core-stats", core_stats_out, "per-core CSV of the last issr run");
    }
    commands.push_back(sub);
  }

  Common sweep_options;
  std::string sweep_kernel;
  auto* sweep = app.add_subcommand("sweep", "run a kernel over a size grid (all variants, W 16 and 32)");
  sweep->add_option("kernel", sweep_kernel, "spvv, csrmv, csrmm, cluster-csrmv, codebook or scatter")
      ->required();
  add_run_options(sweep, sweep_options, true, true);

  issrsim::acceptance::Options verify_options;
  std::vector<int> criteria;
  std::string json_out;
  auto* verify = app.add_subcommand("verify", "run the acceptance checks");
  verify->add_option("--criterion", criteria, "criteria to run (default: all)")
      ->delimiter(',')
      ->check(CLI::Range(1, issrsim::acceptance::kNumCriteria));
  verify->add_option("--instances", verify_options.instances, "random instances per variant");
  verify->add_option("--seed", verify_options.seed, "seed of the generated inputs");
  verify->add_option("--json", json_out, "write a JSON report");
  add_contract_options(verify, verify_options.contract);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return issrsim::cli::kExitBadInput;
  }

  try {
    for (std::size_t i = 0; i < kernels.size(); ++i) {
      if (!commands[i]->parsed()) continue;
      const int code = run_experiment(options[i], kernels[i].first, false);
      if (kernels[i].first == "cluster-csrmv" && (!plan_out.empty() || !core_stats_out.empty())) {
        // Re-runs the first input for the debug dumps.
        ExperimentSpec spec = options[i].spec;
        const auto& o = options[i];
        issrsim::formats::CsrMatrix a =
            o.matrices.empty()
                ? issrsim::formats::gen_banded_csr(spec.rows ? spec.rows : 4096,
                                                   spec.cols ? spec.cols : 4096,
                                                   o.sizes.empty() ? 1 : o.sizes.front(), 16,
                                                   spec.seed)
                : issrsim::formats::load_matrix_market(o.matrices.front());
        const int w = o.widths.empty() ? 16 : o.widths.front();
        issrsim::cluster::ClusterConfig cc;
        cc.core.timing = spec.contract;
        if (!plan_out.empty()) {
          std::ofstream(plan_out) << issrsim::cluster::plan_tiles(a, w, cc).describe();
        }
        if (!core_stats_out.empty()) {
          issrsim::kernels::KernelDescriptor d;
          d.variant = issrsim::kernels::Variant::kIssr;
          d.index_width = w;
          d.accumulators = spec.accumulators;
          d.unroll_threshold = spec.unroll;
          const auto x = issrsim::formats::gen_dense_vector(a.cols, spec.seed + 1);
          std::ofstream(core_stats_out)
              << issrsim::cluster::stats_csv(issrsim::cluster::simulate_cluster_csrmv(a, x, d, cc));
        }
      }
      return code;
    }
    if (sweep->parsed()) return run_experiment(sweep_options, sweep_kernel, true);
    if (verify->parsed()) {
      if (criteria.empty()) {
        for (int id = 1; id <= issrsim::acceptance::kNumCriteria; ++id) criteria.push_back(id);
      }
      nlohmann::json report = nlohmann::json::array();
      bool all = true;
      for (int id : criteria) {
        const auto c = issrsim::acceptance::check(id, verify_options);
        std::cout << issrsim::acceptance::format(c) << std::endl;
        all = all && c.pass;
        report.push_back({{"id", c.id}, {"title", c.title}, {"pass", c.pass}, {"detail", c.detail}});
      }
      if (!json_out.empty()) std::ofstream(json_out) << report.dump(2) << "\n";
      return all ? issrsim::cli::kExitOk : issrsim::cli::kExitMismatch;
    }
  } catch (const issrsim::SimulationFault& e) {
    std::cerr << "simulation fault: " << e.what() << "\n";
    return issrsim::cli::kExitMismatch;
  } catch (const issrsim::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return issrsim::cli::kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return issrsim::cli::kExitBadInput;
  }
  return issrsim::cli::kExitOk;
}
