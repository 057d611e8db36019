// harness/loss.cc
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

#include "harness/loss.h"

#include <cmath>
#include <stdexcept>

namespace harness {

void LossWeights::validate() const {
  if (w_masked < 0 || w_unmasked < 0)
    throw std::invalid_argument("loss: weights must be >= 0");
  if (w_masked == 0 && w_unmasked == 0)
    throw std::invalid_argument("loss: weights must not both be 0");
}

namespace {

template <typename T>
void check_inputs(const Tensor<T>& logits, const PseudoLabelSeq& labels,
                  const std::vector<int32_t>& mask) {
  if (logits.rank() != 2 || logits.rows() == 0)
    throw std::invalid_argument("loss: logits must be a non-empty T x K matrix");
  if (labels.size() != logits.rows())
    throw std::invalid_argument("loss: label length " + std::to_string(labels.size()) +
                                " does not match frames " + std::to_string(logits.rows()));
  for (int32_t l : labels.labels)
    if (l < 0 || static_cast<size_t>(l) >= logits.cols())
      throw std::invalid_argument("loss: label " + std::to_string(l) +
                                  " out of range [0, " + std::to_string(logits.cols()) + ")");
  for (int32_t t : mask)
    if (t < 0 || static_cast<size_t>(t) >= logits.rows())
      throw std::invalid_argument("loss: mask index out of range");
}

}  // namespace

template <typename T>
LossStats prediction_stats(const Tensor<T>& logits, const PseudoLabelSeq& labels,
                           const std::vector<int32_t>& mask) {
  check_inputs(logits, labels, mask);
  const size_t Tn = logits.rows(), K = logits.cols();
  std::vector<uint8_t> in_mask(Tn, 0);
  for (int32_t t : mask) in_mask[t] = 1;

  LossStats s;
  size_t hit_m = 0, hit_u = 0;
  for (size_t t = 0; t < Tn; ++t) {
    size_t best = 0;
    for (size_t k = 1; k < K; ++k)
      if (logits.at(t, k) > logits.at(t, best)) best = k;
    const bool hit = static_cast<int32_t>(best) == labels.labels[t];
    if (in_mask[t]) {
      s.n_masked++;
      hit_m += hit;
    } else {
      s.n_unmasked++;
      hit_u += hit;
    }
  }
  s.masked_acc = s.n_masked ? static_cast<double>(hit_m) / s.n_masked : 0.0;
  s.unmasked_acc = s.n_unmasked ? static_cast<double>(hit_u) / s.n_unmasked : 0.0;
  return s;
}

template <typename T>
LossStats masked_prediction_loss(const Tensor<T>& logits,
                                 const PseudoLabelSeq& labels,
                                 const std::vector<int32_t>& mask,
                                 const LossWeights& w) {
  w.validate();
  LossStats s = prediction_stats(logits, labels, mask);
  const size_t Tn = logits.rows(), K = logits.cols();
  std::vector<uint8_t> in_mask(Tn, 0);
  for (int32_t t : mask) in_mask[t] = 1;

  double ce_m = 0, ce_u = 0;
  for (size_t t = 0; t < Tn; ++t) {
    double mx = -1e300;
    for (size_t k = 0; k < K; ++k) mx = std::max(mx, static_cast<double>(logits.at(t, k)));
    double sum = 0;
    for (size_t k = 0; k < K; ++k) sum += std::exp(static_cast<double>(logits.at(t, k)) - mx);
    const double ce = mx + std::log(sum) -
                      static_cast<double>(logits.at(t, labels.labels[t]));
    if (in_mask[t]) ce_m += ce; else ce_u += ce;
  }
  s.loss = 0.0;
  if (s.n_masked) s.loss += w.w_masked * ce_m / static_cast<double>(s.n_masked);
  if (s.n_unmasked) s.loss += w.w_unmasked * ce_u / static_cast<double>(s.n_unmasked);
  return s;
}

template LossStats prediction_stats<float>(const Tensor32&, const PseudoLabelSeq&,
                                           const std::vector<int32_t>&);
template LossStats prediction_stats<double>(const Tensor64&, const PseudoLabelSeq&,
                                            const std::vector<int32_t>&);
template LossStats masked_prediction_loss<float>(const Tensor32&, const PseudoLabelSeq&,
                                                 const std::vector<int32_t>&,
                                                 const LossWeights&);
template LossStats masked_prediction_loss<double>(const Tensor64&, const PseudoLabelSeq&,
                                                  const std::vector<int32_t>&,
                                                  const LossWeights&);

}  // namespace harness
