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
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "issrsim/error.hpp"
#include "issrsim/formats.hpp"

using namespace issrsim;
using namespace issrsim::formats;

namespace {

const std::string kData = ISSRSIM_TEST_DATA_DIR;

std::vector<std::vector<double>> dense(const CsrMatrix& m) {
  std::vector<std::vector<double>> d(m.rows, std::vector<double>(m.cols, 0.0));
  for (std::uint64_t r = 0; r < m.rows; ++r) {
    for (std::uint32_t k = m.ptr[r]; k < m.ptr[r + 1]; ++k) d[r][m.indices[k]] = m.values[k];
  }
  return d;
}

CsrMatrix parse(const std::string& text) {
  std::istringstream in(text);
  return read_matrix_market(in);
}

// Plain dense product, one fma per column in column order.
std::vector<double> dense_mv(const CsrMatrix& m, const std::vector<double>& x) {
  auto d = dense(m);
  std::vector<double> y(m.rows, 0.0);
  for (std::uint64_t r = 0; r < m.rows; ++r) {
    for (std::uint64_t c = 0; c < m.cols; ++c) {
      if (d[r][c] != 0.0) y[r] = std::fma(d[r][c], x[c], y[r]);
    }
  }
  return y;
}

}  // namespace

TEST_CASE("symmetric files expand to both triangles") {
  CsrMatrix m = load_matrix_market(kData + "/symmetric_5x5.mtx");
  CHECK(m.rows == 5);
  CHECK(m.cols == 5);
  CHECK(m.nnz() == 10);
  auto d = dense(m);
  CHECK(d[0][0] == 4.0);
  CHECK(d[0][1] == -1.0);
  CHECK(d[1][0] == -1.0);
  CHECK(d[1][2] == -1.0);
  CHECK(d[2][1] == -1.0);
  CHECK(d[0][4] == 0.5);
  CHECK(d[4][0] == 0.5);
  CHECK(d[3][3] == 2.5);
  CHECK(d[2][2] == 0.0);
  for (std::uint64_t r = 0; r < 5; ++r)
    for (std::uint64_t c = 0; c < 5; ++c) CHECK(d[r][c] == d[c][r]);
  CHECK_NOTHROW(m.validate());
}

TEST_CASE("general and pattern files") {
  CsrMatrix g = load_matrix_market(kData + "/general_3x4.mtx");
  CHECK(g.ptr == std::vector<std::uint32_t>{0, 2, 3, 5});
  CHECK(g.indices == std::vector<std::uint32_t>{0, 3, 3, 1, 2});
  CHECK(g.values == std::vector<double>{1.0, 2.0, 1e-3, -3.0, 4.5});

  CsrMatrix p = load_matrix_market(kData + "/pattern_4x4.mtx");
  CHECK(p.nnz() == 4);
  for (double v : p.values) CHECK(v == 1.0);
  CHECK(p.indices == std::vector<std::uint32_t>{1, 2, 3, 0});
}

TEST_CASE("duplicate entries are summed") {
  CsrMatrix m = parse("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1\n1 1 2\n2 2 5\n");
  CHECK(m.nnz() == 2);
  CHECK(m.values[0] == 3.0);
}

TEST_CASE("malformed input is rejected") {
  CHECK_THROWS_AS(load_matrix_market(kData + "/truncated.mtx"), FormatError);
  CHECK_THROWS_AS(load_matrix_market(kData + "/does_not_exist.mtx"), FormatError);
  CHECK_THROWS_AS(parse(""), FormatError);
  CHECK_THROWS_AS(parse("%%NotMatrixMarket matrix coordinate real general\n1 1 0\n"), FormatError);
  CHECK_THROWS_AS(parse("%%MatrixMarket matrix array real general\n1 1\n1.0\n"), FormatError);
  CHECK_THROWS_AS(parse("%%MatrixMarket matrix coordinate complex general\n1 1 0\n"), FormatError);
  CHECK_THROWS_AS(parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n"), FormatError);
  CHECK_THROWS_AS(parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1\n"), FormatError);
  CHECK_THROWS_AS(parse("%%MatrixMarket matrix coordinate real general\n2 x 1\n"), FormatError);
}

TEST_CASE("write then read round-trips exactly") {
  CsrMatrix m = gen_banded_csr(40, 70, 6, 32, 3);
  std::ostringstream out;
  write_matrix_market(out, m);
  std::istringstream in(out.str());
  CHECK(read_matrix_market(in) == m);
}

TEST_CASE("sparse vector generator") {
  SparseFiber a = gen_sparse_vector(1000, 100, 16, 5);
  CHECK(a.nnz() == 100);
  CHECK(a.dimension == 1000);
  CHECK_NOTHROW(a.validate());
  CHECK(gen_sparse_vector(1000, 100, 16, 5) == a);
  CHECK_FALSE(gen_sparse_vector(1000, 100, 16, 6) == a);
  CHECK(gen_sparse_vector(1000, 0, 16, 5).nnz() == 0);
  CHECK_THROWS_AS(gen_sparse_vector(10, 11, 16, 1), ConfigError);
  CHECK_THROWS_AS(gen_sparse_vector(70000, 10, 16, 1), ConfigError);
  CHECK_NOTHROW(gen_sparse_vector(70000, 10, 32, 1));
  CHECK_THROWS_AS(gen_sparse_vector(100, 10, 8, 1), ConfigError);
}

TEST_CASE("banded generator") {
  CsrMatrix m = gen_banded_csr(64, 256, 9, 16, 11);
  CHECK_NOTHROW(m.validate());
  for (std::uint64_t r = 0; r < m.rows; ++r) CHECK(m.row_nnz(r) == 9);
  CHECK(m.mean_row_nnz() == doctest::Approx(9.0));
  CsrMatrix d = gen_banded_csr(8, 8, 1, 16, 1, true);
  for (std::uint64_t r = 0; r < 8; ++r) CHECK(d.indices[r] == r);
  CHECK_THROWS_AS(gen_banded_csr(4, 4, 5, 16, 1), ConfigError);
  CHECK_THROWS_AS(gen_banded_csr(4, 70000, 1, 16, 1), ConfigError);
}

TEST_CASE("distinct sampling") {
  Rng rng(3);
  auto s = sample_distinct(rng, 50, 50);
  CHECK(std::set<std::uint32_t>(s.begin(), s.end()).size() == 50);
  CHECK_THROWS_AS(sample_distinct(rng, 5, 6), ConfigError);
}

TEST_CASE("validation catches broken containers") {
  CsrMatrix m = gen_banded_csr(4, 8, 2, 16, 1);
  CsrMatrix bad = m;
  bad.ptr[2] = bad.ptr[1] - 1;
  CHECK_THROWS_AS(bad.validate(), FormatError);
  bad = m;
  bad.indices[0] = 8;
  CHECK_THROWS_AS(bad.validate(), FormatError);
  bad = m;
  std::swap(bad.indices[0], bad.indices[1]);
  CHECK_THROWS_AS(bad.validate(), FormatError);

  SparseFiber f{.values = {1, 2}, .indices = {3, 3}, .dimension = 10};
  CHECK_THROWS_AS(f.validate(), FormatError);
  CHECK_THROWS_AS(require_index_width(gen_banded_csr(2, 70000, 1, 32, 1), 16), FormatError);
}

TEST_CASE("reference kernels agree with dense products") {
  CsrMatrix m = gen_banded_csr(30, 50, 7, 16, 2);
  std::vector<double> x = gen_dense_vector(50, 9);
  CHECK(csrmv_ref(m, x) == dense_mv(m, x));

  const std::uint64_t bc = 3;
  std::vector<double> b = gen_dense_vector(50 * bc, 4);
  std::vector<double> c = csrmm_ref(m, b, bc);
  for (std::uint64_t j = 0; j < bc; ++j) {
    std::vector<double> col(50);
    for (std::uint64_t i = 0; i < 50; ++i) col[i] = b[i * bc + j];
    auto y = dense_mv(m, col);
    for (std::uint64_t r = 0; r < 30; ++r) CHECK(c[r * bc + j] == y[r]);
  }
}

TEST_CASE("ordered references partition by accumulator") {
  SparseFiber a = gen_sparse_vector(500, 37, 32, 8);
  std::vector<double> x = gen_dense_vector(500, 10);
  // One accumulator is the naive fma chain.
  CHECK(spvv_ordered(a, x, 1) == spvv_ref(a, x));
  for (int k : {2, 3, 4, 7}) {
    std::vector<double> lane(static_cast<std::size_t>(k), 0.0);
    for (std::size_t e = 0; e < a.nnz(); ++e) {
      lane[e % static_cast<std::size_t>(k)] =
          std::fma(a.values[e], x[a.indices[e]], lane[e % static_cast<std::size_t>(k)]);
    }
    double sum = lane[0];
    for (int j = 1; j < k; ++j) sum += lane[static_cast<std::size_t>(j)];
    CHECK(spvv_ordered(a, x, k) == sum);
  }
  CHECK(spvv_ordered(SparseFiber{.dimension = 4}, x, 4) == 0.0);
}

TEST_CASE("memory layout places aligned, disjoint regions") {
  MemoryLayout layout(0x100, 0x1000);
  auto a = layout.place("a", 12);
  auto b = layout.place("b", 16, 64);
  auto c = layout.place("c", 8, 8, 2);
  CHECK(a == 0x100);
  CHECK(b % 64 == 0);
  CHECK(b >= a + 12);
  CHECK(c % 8 == 2);
  CHECK(layout.region("b").bytes == 16);
  CHECK_THROWS_AS(layout.region("zz"), ConfigError);
  CHECK_THROWS_AS(layout.place_at("d", b + 8, 8), ConfigError);
  CHECK_THROWS_AS(layout.place("big", 0x2000), ConfigError);
  CHECK_THROWS_AS(layout.place("odd", 8, 3), ConfigError);
  CHECK(layout.describe().find("b") != std::string::npos);
}

TEST_CASE("index packing") {
  mem::ByteStore s(0, 64);
  store_indices(s, 2, std::vector<std::uint32_t>{0x1234, 0xabcd, 7}, 16);
  CHECK(s.read(2, 2) == 0x1234);
  CHECK(s.read(4, 2) == 0xabcd);
  CHECK(s.read(6, 2) == 7);
  store_indices(s, 16, std::vector<std::uint32_t>{0xdeadbeef}, 32);
  CHECK(s.read(16, 4) == 0xdeadbeef);
  store_f64(s, 32, std::vector<double>{1.0, 2.0, 3.0, 4.0});
  CHECK(load_f64(s, 32, 2, 16) == std::vector<double>{1.0, 3.0});
}
