// harness/probe.h
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

#ifndef HARNESS_PROBE_H_
#define HARNESS_PROBE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "harness/adam.h"
#include "harness/encoder.h"
#include "harness/features.h"
#include "harness/tensor.h"

namespace harness {

// Frozen-encoder features: transformer layer outputs averaged elementwise
// per frame (layer 0, the CNN projection, excluded unless requested). The
// model is const; nothing flows back into it.
FeatureSequence extract_frozen(const ParamMap32& params, const EncoderConfig& cfg,
                               const Waveform& wave, bool include_layer0 = false);

// Lightweight classifier over frozen frame features: three temporal convs
// (kernel 5, same padding, ReLU, dropout), self-attention pooling, one
// feed-forward ReLU layer, linear softmax output.
struct ProbeConfig {
  int conv_layers = 3;
  int kernel = 5;
  int hidden = 80;
  double dropout = 0.4;
  int n_classes = 2;
  int batch = 4;
  int64_t steps = 10000;
  AdamHParams adam{.lr = 1e-3};
  uint64_t seed = 1;

  void validate() const;
};

using ProbeParams = ParamMap32;

struct LabeledFeatures {
  std::string utt_id;
  FeatureSequence features;
  int label = 0;
};

ProbeParams probe_init(const ProbeConfig& cfg, size_t feature_dim, uint64_t seed);

// Cross-entropy training, batch cfg.batch for cfg.steps; deterministic per
// seed. Every class must appear at least once and dims must agree.
ProbeParams probe_train(const std::vector<LabeledFeatures>& data, const ProbeConfig& cfg);

struct ProbePrediction {
  std::string utt_id;
  int label = 0;
  int predicted = 0;
};

// Argmax accuracy with dropout disabled; order of examples does not matter.
double probe_eval(const ProbeParams& params, const ProbeConfig& cfg,
                  const std::vector<LabeledFeatures>& data,
                  std::vector<ProbePrediction>* predictions = nullptr);

// Attention-pooling weights for one input (eval mode); sums to 1.
std::vector<float> probe_pooling_weights(const ProbeParams& params,
                                         const ProbeConfig& cfg,
                                         const FeatureSequence& f);

}  // namespace harness

#endif  // HARNESS_PROBE_H_
