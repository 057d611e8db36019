// harness/train.h
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

#ifndef HARNESS_TRAIN_H_
#define HARNESS_TRAIN_H_

#include <cstdint>
#include <string>
#include <vector>

#include "harness/adam.h"
#include "harness/corpus.h"
#include "harness/encoder.h"
#include "harness/loss.h"
#include "harness/mask.h"

namespace harness {

struct TrainConfig {
  int64_t steps = 1000;
  int batch_utterances = 4;
  MaskSpec mask;
  LossWeights weights;
  AdamHParams adam;
  uint64_t seed = 1;
  int64_t log_every = 50;
  int64_t checkpoint_every = 0;  // 0 disables periodic checkpoints
  std::string checkpoint_dir;

  void validate() const;
};

struct TrainLogRow {
  int64_t step;
  double loss;
  double masked_acc;
  double unmasked_acc;
  double lr;
};

struct TrainReport {
  std::vector<TrainLogRow> rows;
  int64_t steps = 0;
  double final_loss = 0.0;
  // measured after training: eval-mode pass over the whole corpus with
  // fixed per-utterance masks
  double final_masked_acc = 0.0;
  double final_unmasked_acc = 0.0;
};

// Masked-prediction training of one model. Per step: pick a length bucket of
// utterances, sample spans, forward with mask substitution and dropout,
// cross-entropy, backprop, one Adam update. Utterances inside a batch are
// processed in sorted-id order so gradient accumulation is deterministic;
// two runs with the same seed produce bitwise-identical parameters.
// Throws on label/frame-length mismatch (naming the utterance) and aborts
// on a non-finite loss (naming the step).
TrainReport train(ParamMap32& params, const EncoderConfig& cfg, const Corpus& corpus,
                  const std::vector<PseudoLabelSeq>& labels, const TrainConfig& tc);

// Eval-mode masked accuracy over a corpus with fixed seeded masks.
LossStats eval_masked_accuracy(const ParamMap32& params, const EncoderConfig& cfg,
                               const Corpus& corpus,
                               const std::vector<PseudoLabelSeq>& labels,
                               const MaskSpec& mask_spec, uint64_t seed);

void write_train_csv(const std::string& path, const TrainReport& report);

}  // namespace harness

#endif  // HARNESS_TRAIN_H_
