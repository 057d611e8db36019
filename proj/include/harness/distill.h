// harness/distill.h
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

#ifndef HARNESS_DISTILL_H_
#define HARNESS_DISTILL_H_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "harness/corpus.h"
#include "harness/encoder.h"
#include "harness/targets.h"
#include "harness/train.h"

namespace harness {

enum class InitStrategy { kRandom, kBlockedAverage };

// One row of the distillation schedule.
struct IterationSpec {
  int index = 1;            // supervision semantics: 1 = MFCC bootstrap, ...
  std::string name;         // output subdirectory; defaults to iter<index>
  EncoderConfig student;
  InitStrategy init = InitStrategy::kRandom;
  TargetOpts targets;
  TrainConfig train;
  std::string manifest;     // per-iteration data subset; empty = schedule default

  std::string dir_name() const { return name.empty() ? "iter" + std::to_string(index) : name; }
};

struct Schedule {
  std::vector<IterationSpec> iterations;

  void validate() const;  // indices strictly increasing from 1
};

struct IterationReport {
  int index = 0;
  std::string name;
  double delta_s = 0.0;  // structural compression vs teacher; 0 for i=1
  double codebook_inertia = 0.0;
  double final_loss = 0.0;
  double masked_acc = 0.0;
  double unmasked_acc = 0.0;
  double wall_s = 0.0;
  std::string checkpoint_hash;
  std::string teacher_hash;  // empty for i=1
  bool skipped = false;      // resumed from an existing checkpoint
};

void to_json(nlohmann::json& j, const IterationReport& r);
void from_json(const nlohmann::json& j, IterationReport& r);

// Student layer j = elementwise mean of the teacher layer block
// [j*b, (j+1)*b) with b = teacher_depth/student_depth; everything outside
// the transformer stack (CNN, positional conv, projections, mask embedding,
// label embeddings) is copied verbatim. Requires equal widths (emb/ffn/heads
// may differ only in head count), identical CNN geometry, and divisible
// depths; width mismatches fail fast with a pointer to random init.
ParamMap32 blocked_average_init(const ParamMap32& teacher_params,
                                const EncoderConfig& teacher_cfg,
                                const EncoderConfig& student_cfg);

// Copy of `base` with the given axes overridden.
struct CompressAxes {
  std::optional<int> depth;
  std::optional<int> emb_dim;
  std::optional<int> num_heads;
  std::optional<int> ffn_dim;
};
struct CompressResult {
  EncoderConfig config;
  int64_t base_params = 0;
  int64_t new_params = 0;
  double delta_s = 0.0;  // 1 - new/base
};
CompressResult compress_config(const EncoderConfig& base, const CompressAxes& axes);

using CorpusLoader = std::function<Corpus(const std::string& manifest)>;

// One full iteration: targets -> init -> train -> checkpoint. Writes
// out_dir/{codebook.hrns, labels/, model.ckpt, train.csv, report.json}.
IterationReport run_iteration(const IterationSpec& spec,
                              const std::optional<std::string>& teacher_ckpt,
                              const Corpus& corpus, const std::string& out_dir);

// Runs the schedule in order under workdir, threading checkpoints.
// A completed iteration (checkpoint + report present, teacher/config hashes
// matching, no upstream re-run) is skipped and its stored report reloaded;
// anything downstream of a re-executed iteration re-executes too.
std::vector<IterationReport> run_schedule(const Schedule& schedule,
                                          const CorpusLoader& loader,
                                          const std::string& default_manifest,
                                          const std::string& workdir);

}  // namespace harness

#endif  // HARNESS_DISTILL_H_
