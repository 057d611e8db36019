// harness/cli.h
//
// Copyright 2026  The harness authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef HARNESS_CLI_H_
#define HARNESS_CLI_H_

#include <string>
#include <vector>

#include <json.hpp>

#include "harness/distill.h"
#include "harness/manifest.h"

namespace harness {

// One experiment file drives pretrain/distill: seed, paths, the iteration
// schedule, and augmentation toggles. The resolved form (defaults expanded)
// is echoed to <workdir>/config.resolved.json for provenance.
struct ExperimentConfig {
  uint64_t seed = 1;
  std::string workdir;
  std::string manifest;  // default data manifest; iterations may override
  Schedule schedule;
  AugmentOpts augment;

  void validate(const std::string& config_dir) const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

ExperimentConfig load_experiment_config(const std::string& path);

// Runs the experiment's schedule (resumable). Used by both the `pretrain`
// and `distill` subcommands and by tests.
std::vector<IterationReport> run_experiment(const ExperimentConfig& cfg,
                                            const std::string& config_dir);

// Entry point behind main(); takes argv-style args without the program name
// and returns the process exit code. Kept separate so tests can invoke
// subcommands in-process.
int cli_run(const std::vector<std::string>& args);

}  // namespace harness

#endif  // HARNESS_CLI_H_
