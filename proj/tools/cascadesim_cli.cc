// Copyright 2026 The cascadesim Authors
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

// cascadesim: command-line front end for the serving pipeline.
//
//   cascadesim <subcommand> --config run.json [--seed N] [--mode AP|EO] [--out DIR]
//
// Subcommands: gen-trace, calibrate, search, skip, plan, simulate, report,
// pipeline. Exit status: 0 ok, 2 missing input, 3 infeasible plan,
// 4 invariant violation, 1 anything else.

#include <fmt/format.h>

#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cascadesim/error.h"
#include "cascadesim/pipeline.h"

namespace {

using cascadesim::RunConfig;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<std::string> out;
};

RunConfig Resolve(const Flags& f) {
  RunConfig c;
  if (!f.config.empty()) {
    c = cascadesim::LoadRunConfig(f.config);
  } else {
    c = cascadesim::RunConfigFromJson({{"schema_version", cascadesim::kSchemaVersion}});
  }
  if (f.seed) {
    c.seed = *f.seed;
    c.workload.seed = *f.seed;
  }
  if (f.mode) c.mode = cascadesim::ParseMode(*f.mode);
  if (f.out) c.out = *f.out;
  return c;
}

void PrintSummary(const cascadesim::PipelineResult& r) {
  fmt::print("retained models:");
  for (const auto& m : r.skip.config.models) fmt::print(" {}", m);
  fmt::print("\n");
  for (const auto& row : r.comparison.rows) {
    fmt::print("{:<20} cascade={:<14.6g} largest_only={:<14.6g} ratio={:.4g}\n", row.metric,
               row.values[0], row.values[1], row.ratios[1]);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-aware cascade serving: trace, calibrate, search, plan, simulate"};
  app.require_subcommand(1);
  Flags flags;

  const std::map<std::string, std::pair<std::string, std::function<void(const RunConfig&)>>>
      stages{
          {"gen-trace", {"Generate a synthetic trace from a joint-accuracy spec",
                         cascadesim::StageGenTrace}},
          {"calibrate", {"Fit per-model temperatures", cascadesim::StageCalibrate}},
          {"search", {"Sample the threshold performance graph and pick an operating point",
                      [](const RunConfig& c) { cascadesim::StageSearch(c); }}},
          {"skip", {"Prune non-beneficial models and assign skip bands",
                    [](const RunConfig& c) { cascadesim::StageSkip(c); }}},
          {"plan", {"Size replicas/partitions and place them on GPUs",
                    [](const RunConfig& c) { cascadesim::StagePlan(c); }}},
          {"simulate", {"Simulate the placed cascade under the configured workload",
                        [](const RunConfig& c) { cascadesim::StageSimulate(c); }}},
          {"report", {"Emit frontier and latency CDF CSVs", cascadesim::StageReport}},
          {"pipeline", {"Run every stage plus a largest-model-only baseline",
                        [](const RunConfig& c) { PrintSummary(cascadesim::RunPipeline(c)); }}},
      };

  std::function<void(const RunConfig&)> action;
  for (const auto& [name, entry] : stages) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", flags.config, "Run config JSON")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "Override the run seed");
    sub->add_option("--mode", flags.mode, "AP or EO");
    sub->add_option("--out", flags.out, "Output directory");
    const auto run = entry.second;
    sub->callback([&action, run] { action = run; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    action(Resolve(flags));
  } catch (const cascadesim::Error& e) {
    cascadesim::Log(cascadesim::LogLevel::kError,
                    fmt::format("{}: {}", cascadesim::ErrorCodeName(e.code()), e.what()));
    return cascadesim::ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    cascadesim::Log(cascadesim::LogLevel::kError, e.what());
    return 1;
  }
  return 0;
}
