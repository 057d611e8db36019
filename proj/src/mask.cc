// harness/mask.cc
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

#include "harness/mask.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace harness {

void MaskSpec::validate() const {
  if (!(p_mask >= 0.0 && p_mask <= 1.0))
    throw std::invalid_argument("mask: p_mask must be in [0, 1]");
  if (span_len < 1) throw std::invalid_argument("mask: span_len must be >= 1");
}

std::vector<int32_t> sample_mask(int64_t num_frames, const MaskSpec& spec, Rng& rng) {
  spec.validate();
  if (num_frames < 1) throw std::invalid_argument("mask: num_frames must be >= 1");
  const double u = rng.uniform();
  const int64_t n_spans = static_cast<int64_t>(
      std::floor(spec.p_mask * static_cast<double>(num_frames) / spec.span_len + u));
  if (n_spans <= 0) return {};

  if (num_frames < spec.span_len) {
    // one span covers everything that exists
    std::vector<int32_t> all(num_frames);
    for (int64_t t = 0; t < num_frames; ++t) all[t] = static_cast<int32_t>(t);
    return all;
  }

  const int64_t num_starts = num_frames - spec.span_len + 1;
  const int64_t take = std::min(n_spans, num_starts);
  // partial Fisher-Yates for sampling starts without replacement
  std::vector<int32_t> starts(num_starts);
  for (int64_t i = 0; i < num_starts; ++i) starts[i] = static_cast<int32_t>(i);
  for (int64_t i = 0; i < take; ++i) {
    const int64_t j = i + rng.uniform_int(num_starts - i);
    std::swap(starts[i], starts[j]);
  }

  std::vector<uint8_t> covered(num_frames, 0);
  for (int64_t s = 0; s < take; ++s)
    for (int32_t t = starts[s]; t < starts[s] + spec.span_len; ++t) covered[t] = 1;

  std::vector<int32_t> out;
  for (int64_t t = 0; t < num_frames; ++t)
    if (covered[t]) out.push_back(static_cast<int32_t>(t));
  return out;
}

double expected_masked_fraction(int64_t num_frames, const MaskSpec& spec) {
  spec.validate();
  if (num_frames < spec.span_len) return spec.p_mask > 0 ? 1.0 : 0.0;
  const int64_t n = static_cast<int64_t>(
      std::floor(spec.p_mask * static_cast<double>(num_frames) / spec.span_len));
  const double s = static_cast<double>(num_frames - spec.span_len + 1);
  return 1.0 - std::pow(1.0 - spec.span_len / s, static_cast<double>(n));
}

}  // namespace harness
