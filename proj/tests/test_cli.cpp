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

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <string>

#include "doctest.h"
#include "issrsim/error.hpp"
#include "issrsim/experiment.hpp"

using namespace issrsim;
using namespace issrsim::cli;

namespace {

std::size_t count_fields(const std::string& line) {
  return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
}

}  // namespace

TEST_CASE("spvv with no nonzeros passes with zero utilization") {
  ExperimentSpec spec;
  spec.kernel = "spvv";
  spec.sizes = {0};
  Report r = run(spec);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.all_passed());
  for (const auto& row : r.rows) {
    CHECK(row.pass);
    CHECK(row.stats.fmadds == 0);
    CHECK(row.utilization == 0.0);
  }
}

TEST_CASE("csv output is deterministic and rectangular") {
  ExperimentSpec spec;
  spec.kernel = "csrmv";
  spec.sizes = {4};
  spec.rows = 64;
  spec.cols = 256;
  spec.widths = {16, 32};
  const std::string a = csv(run(spec));
  const std::string b = csv(run(spec));
  CHECK(a == b);
  std::istringstream in(a);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == csv_header());
  const std::size_t fields = count_fields(line);
  int rows = 0;
  while (std::getline(in, line)) {
    CHECK(count_fields(line) == fields);
    ++rows;
  }
  CHECK(rows == 6);
}

TEST_CASE("speedups are relative to base on the same input and width") {
  ExperimentSpec spec;
  spec.kernel = "spvv";
  spec.sizes = {300};
  spec.widths = {16};
  Report r = run(spec);
  for (const auto& row : r.rows) {
    REQUIRE(row.speedup.has_value());
    if (row.variant == "base") CHECK(*row.speedup == doctest::Approx(1.0));
    else CHECK(*row.speedup > 1.0);
  }
  spec.variants = {kernels::Variant::kIssr};
  for (const auto& row : run(spec).rows) CHECK_FALSE(row.speedup.has_value());
}

TEST_CASE("matrix market inputs run after synthetic sizes") {
  ExperimentSpec spec;
  spec.kernel = "csrmv";
  spec.sizes = {};
  spec.matrices = {std::string(ISSRSIM_TEST_DATA_DIR) + "/symmetric_5x5.mtx"};
  spec.variants = {kernels::Variant::kIssr};
  Report r = run(spec);
  REQUIRE_FALSE(r.rows.empty());
  CHECK(r.rows.back().input.find("symmetric_5x5") != std::string::npos);
  CHECK(r.rows.back().nnz == 10);
  CHECK(r.all_passed());
}

TEST_CASE("bad specs raise input errors") {
  ExperimentSpec spec;
  spec.kernel = "fft";
  CHECK_THROWS_AS(run(spec), ConfigError);
  spec.kernel = "spvv";
  spec.widths = {8};
  CHECK_THROWS_AS(run(spec), ConfigError);
  spec.widths = {16};
  spec.kernel = "csrmv";
  spec.matrices = {std::string(ISSRSIM_TEST_DATA_DIR) + "/truncated.mtx"};
  CHECK_THROWS_AS(run(spec), FormatError);
}

TEST_CASE("summary lists every row") {
  ExperimentSpec spec;
  spec.kernel = "codebook";
  spec.sizes = {64};
  Report r = run(spec);
  CHECK(r.all_passed());
  std::string s = summary(r);
  CHECK(s.find("codebook") != std::string::npos);
}
