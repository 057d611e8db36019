// harness/targets.h
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

#ifndef HARNESS_TARGETS_H_
#define HARNESS_TARGETS_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "harness/corpus.h"
#include "harness/encoder.h"
#include "harness/kmeans.h"

namespace harness {

struct TargetOpts {
  int k = 1000;
  bool use_pca = false;
  int d_prime = 512;
  double sample_fraction = 0.3;  // frames used for PCA + k-means fitting
  uint64_t seed = 0;
  // Teacher layer to read embeddings from. Unset follows the iteration
  // convention: layer 9 at i=2, the last layer at i>=3. Small teachers
  // (depth below the convention) must set this explicitly.
  std::optional<int> layer;
  MfccConfig mfcc;      // used only at i=1
  KMeansOpts kmeans;    // seed is overridden from `seed`
  // When set, label sequences are resampled onto this CNN's frame grid
  // (nearest feature frame per encoder frame). Needed at i=1, where MFCC
  // frames run at 100 fps but the encoder consumes 50 fps labels; a no-op
  // when the grids already agree.
  std::optional<CnnSpec> align_cnn;
};

struct TeacherModel {
  const ParamMap32* params;
  const EncoderConfig* config;
};

struct TargetResult {
  Codebook codebook;
  std::vector<PseudoLabelSeq> labels;  // parallel to the corpus
};

// Feature source for the pseudo-labels of iteration `iteration`:
// MFCC(39) at i=1, teacher layer embeddings afterwards (layer 9 at i=2,
// last layer at i>=3 unless overridden). Returns one FeatureSequence per
// utterance, eval mode.
std::vector<FeatureSequence> iteration_features(int iteration,
                                                const std::optional<TeacherModel>& teacher,
                                                const Corpus& corpus,
                                                const TargetOpts& opts);

// Full pseudo-label generation: feature extraction, optional PCA fitted on a
// seeded random frame subset, k-means on the same subset, then assignment
// over every utterance. Deterministic per opts.seed.
TargetResult targets_for_iteration(int iteration,
                                   const std::optional<TeacherModel>& teacher,
                                   const Corpus& corpus, const TargetOpts& opts);

}  // namespace harness

#endif  // HARNESS_TARGETS_H_
