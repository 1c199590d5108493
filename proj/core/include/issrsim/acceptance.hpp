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
 * @file acceptance.hpp
 * @brief The numbered acceptance checks, shared by the `verify` command
 *        and the acceptance test binary.
 */
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "issrsim/core.hpp"

namespace issrsim::acceptance {

inline constexpr int kNumCriteria = 10;

struct Options {
  core::TimingContract contract;
  int instances = 200;  // random instances per variant in the property suite
  std::uint64_t seed = 1;
};

struct Criterion {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;  // measured values
};

/// Runs criterion `id` (1-based). Errors inside a check make it fail with
/// the message as detail.
Criterion check(int id, const Options& options = {});
std::vector<Criterion> run_all(const Options& options = {});

/// "PASS  3  issr ceilings: <detail>"
std::string format(const Criterion& c);

}  // namespace issrsim::acceptance
