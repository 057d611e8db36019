// harness/loss.h
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

#ifndef HARNESS_LOSS_H_
#define HARNESS_LOSS_H_

#include <cstdint>
#include <vector>

#include "harness/kmeans.h"
#include "harness/tensor.h"

namespace harness {

struct LossWeights {
  double w_masked = 1.0;
  double w_unmasked = 0.1;

  void validate() const;
};

struct LossStats {
  double loss = 0.0;          // w_m * meanCE(masked) + w_u * meanCE(unmasked)
  double masked_acc = 0.0;    // argmax agreement on masked frames (0 if none)
  double unmasked_acc = 0.0;  // same over unmasked frames
  size_t n_masked = 0;
  size_t n_unmasked = 0;
};

// Reference (non-autograd) evaluation of the masked-prediction objective;
// the training path computes the same quantity through Graph::weighted_ce
// and the two are cross-checked in tests. `mask` holds sorted frame indices.
template <typename T>
LossStats masked_prediction_loss(const Tensor<T>& logits,
                                 const PseudoLabelSeq& labels,
                                 const std::vector<int32_t>& mask,
                                 const LossWeights& w);

// Accuracy half of the stats only (shared by train-time reporting).
template <typename T>
LossStats prediction_stats(const Tensor<T>& logits, const PseudoLabelSeq& labels,
                           const std::vector<int32_t>& mask);

}  // namespace harness

#endif  // HARNESS_LOSS_H_
