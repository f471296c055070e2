// Copyright 2026 The ctqw Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctqw/errors.hpp"

namespace ctqw::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitAssertion = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitNumerical = 4;

// Bad or missing configuration; the message names the file and field.
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct RunContext {
  std::string config_name = "config";  // used in error messages
  std::optional<std::uint64_t> seed;   // overrides the config's seed
  int jobs = 1;
};

struct CommandResult {
  nlohmann::json record;  // full experiment record
  std::string csv;        // plot-ready sweep
  bool assertions_hold = false;
};

CommandResult cmd_gluedtrees(const nlohmann::json& config, const RunContext& ctx);
CommandResult cmd_search(const nlohmann::json& config, const RunContext& ctx);
CommandResult cmd_bounds(const nlohmann::json& config, const RunContext& ctx);

struct Invocation {
  std::string command;  // gluedtrees | search | bounds
  std::filesystem::path config;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = ".";
};

// Reads the config, runs the command, writes <out>/<command>.csv and
// <out>/<command>.json, and maps failures onto the exit-code contract.
int run(const Invocation& inv, std::ostream& out, std::ostream& err);

// fn(0), ..., fn(count - 1) on up to `jobs` threads; results in index
// order. The exception of the lowest failing index is rethrown.
template <typename R>
std::vector<R> parallel_map(std::size_t count, int jobs, const std::function<R(std::size_t)>& fn) {
  std::vector<std::optional<R>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, jobs));
  if (threads == 1 || count <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, count); ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<R> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace ctqw::cli
