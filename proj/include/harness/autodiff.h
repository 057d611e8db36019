// harness/autodiff.h
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

#ifndef HARNESS_AUTODIFF_H_
#define HARNESS_AUTODIFF_H_

#include <functional>
#include <map>
#include <string>

#include "harness/graph.h"
#include "harness/rng.h"
#include "harness/tensor.h"

namespace harness {

template <typename T>
using ValueMap = std::map<std::string, typename Graph<T>::Value>;

// Builds a scalar loss from parameter Values living in the given graph.
// The closure must be a pure function of the parameter values (dropout masks
// and mask indices frozen inside it) so it can be re-evaluated.
template <typename T>
using LossBuilder = std::function<typename Graph<T>::Value(Graph<T>&, const ValueMap<T>&)>;

// Exact reverse-mode gradient of the loss for every parameter.
template <typename T>
ParamMap<T> gradients(const ParamMap<T>& params, const LossBuilder<T>& build) {
  Graph<T> g;
  ValueMap<T> vals;
  for (const auto& [name, tensor] : params)
    vals.emplace(name, g.input(tensor, /*requires_grad=*/true));
  auto loss = build(g, vals);
  g.backward(loss);
  ParamMap<T> grads;
  for (const auto& [name, v] : vals) grads.emplace(name, g.grad(v));
  return grads;
}

template <typename T>
T eval_loss(const ParamMap<T>& params, const LossBuilder<T>& build) {
  Graph<T> g;
  ValueMap<T> vals;
  for (const auto& [name, tensor] : params)
    vals.emplace(name, g.input(tensor, /*requires_grad=*/false));
  return g.val(build(g, vals)).data[0];
}

// Compares reverse-mode gradients against central finite differences on a
// random subsample of at least min(coords_per_param, numel) coordinates per
// parameter. Returns the max over sampled coordinates of
// |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|). f64 only.
double finite_diff_check(const ParamMap64& params, const LossBuilder<double>& build,
                         double epsilon, Rng& rng, int coords_per_param = 100);

}  // namespace harness

#endif  // HARNESS_AUTODIFF_H_
