// harness/mask.h
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

#ifndef HARNESS_MASK_H_
#define HARNESS_MASK_H_

#include <cstdint>
#include <vector>

#include "harness/rng.h"

namespace harness {

// Span-budget masking: n_spans = floor(p_mask*T/span + u) span starts drawn
// without replacement; spans may overlap, so realized coverage is below
// p_mask (about 1 - e^-p for long sequences).
struct MaskSpec {
  double p_mask = 0.80;
  int span_len = 10;

  void validate() const;
};

// Returns the masked frame indices, sorted and unique. For T < span_len a
// single sampled span masks the whole sequence.
std::vector<int32_t> sample_mask(int64_t num_frames, const MaskSpec& spec, Rng& rng);

// Analytic expectation of the masked fraction under with-replacement span
// starts: 1 - (1 - span/(T-span+1))^n with n = floor(p*T/span). The sampling
// above draws starts without replacement, so Monte-Carlo means sit within a
// few percent of this value.
double expected_masked_fraction(int64_t num_frames, const MaskSpec& spec);

}  // namespace harness

#endif  // HARNESS_MASK_H_
