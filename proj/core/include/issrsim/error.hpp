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

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace issrsim {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed assembly text or an ill-formed builder call. `line()` is
/// 1-based for assembled text and 0 for builder calls.
class AssemblyError : public Error {
 public:
  AssemblyError(int line, const std::string& what)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Invalid parameters handed to a generator, planner or builder.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed sparse-matrix input.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A fault raised while simulating: stream fault, misaligned or
/// out-of-bounds access, FPU deadlock. Carries the cycle and the
/// instruction index (or -1 when no instruction is involved).
class SimulationFault : public Error {
 public:
  SimulationFault(std::uint64_t cycle, int pc, const std::string& what)
      : Error("cycle " + std::to_string(cycle) +
              (pc >= 0 ? ", pc " + std::to_string(pc) : std::string()) + ": " +
              what),
        cycle_(cycle),
        pc_(pc) {}
  std::uint64_t cycle() const noexcept { return cycle_; }
  int pc() const noexcept { return pc_; }

 private:
  std::uint64_t cycle_;
  int pc_;
};

}  // namespace issrsim
