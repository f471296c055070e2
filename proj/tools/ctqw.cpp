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

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "ctqw/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Continuous-time quantum walk experiments"};
  app.require_subcommand(1);
  ctqw::cli::Invocation inv;
  std::uint64_t seed = 0;
  std::string out = ".";

  for (const char* name : {"gluedtrees", "search", "bounds"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", inv.config, "JSON experiment config")->required();
    sub->add_option("--jobs", inv.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "overrides the config seed");
    sub->add_option("--out", out, "output directory (CTQW_OUT takes precedence)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ctqw::cli::kExitConfig;
  }

  inv.command = app.get_subcommands().front()->get_name();
  if (app.get_subcommands().front()->count("--seed")) inv.seed = seed;
  if (const char* env = std::getenv("CTQW_OUT"); env && *env) out = env;
  inv.out = out;
  return ctqw::cli::run(inv, std::cout, std::cerr);
}
