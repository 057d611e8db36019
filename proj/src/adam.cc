// harness/adam.cc
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

#include "harness/adam.h"

#include <cmath>
#include <stdexcept>

namespace harness {

void AdamHParams::validate() const {
  if (!(lr > 0)) throw std::invalid_argument("adam: lr must be > 0");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
    throw std::invalid_argument("adam: betas must be in [0, 1)");
  if (!(eps > 0)) throw std::invalid_argument("adam: eps must be > 0");
}

AdamState AdamState::init(const ParamMap32& params) {
  AdamState s;
  for (const auto& [name, p] : params) {
    s.m.emplace(name, Tensor32::zeros(p.shape));
    s.v.emplace(name, Tensor32::zeros(p.shape));
  }
  s.t = 0;
  return s;
}

double adam_lr_at(const AdamHParams& hp, int64_t t, int64_t total_steps) {
  if (total_steps <= 0) return hp.lr;
  const int64_t warmup = std::llround(hp.warmup_fraction * static_cast<double>(total_steps));
  if (warmup > 0 && t <= warmup)
    return hp.lr * static_cast<double>(t) / static_cast<double>(warmup);
  if (t > total_steps) return 0.0;
  // linear decay reaching 0 one step past the last update, so the final
  // step still moves the parameters
  return hp.lr * static_cast<double>(total_steps - t + 1) /
         static_cast<double>(total_steps - warmup);
}

void adam_update(AdamState& state, ParamMap32& params, const ParamMap32& grads,
                 const AdamHParams& hp, int64_t total_steps) {
  hp.validate();
  if (total_steps > 0 && state.t >= total_steps)
    throw std::runtime_error("adam: schedule exhausted (t >= total_steps)");
  state.t += 1;
  const int64_t t = state.t;
  const double lr_t = adam_lr_at(hp, t, total_steps);
  const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(t));

  for (auto& [name, p] : params) {
    auto git = grads.find(name);
    if (git == grads.end())
      throw std::invalid_argument("adam: missing gradient for " + name);
    const Tensor32& g = git->second;
    Tensor32& m = state.m.at(name);
    Tensor32& v = state.v.at(name);
    if (!g.same_shape(p) || !m.same_shape(p))
      throw std::invalid_argument("adam: shape mismatch for " + name);
    for (size_t i = 0; i < p.data.size(); ++i) {
      const double gi = g.data[i];
      const double mi = hp.beta1 * m.data[i] + (1.0 - hp.beta1) * gi;
      const double vi = hp.beta2 * v.data[i] + (1.0 - hp.beta2) * gi * gi;
      m.data[i] = static_cast<float>(mi);
      v.data[i] = static_cast<float>(vi);
      const double mhat = mi / bc1;
      const double vhat = vi / bc2;
      double upd = lr_t * mhat / (std::sqrt(vhat) + hp.eps);
      if (hp.weight_decay > 0) upd += lr_t * hp.weight_decay * p.data[i];
      p.data[i] = static_cast<float>(p.data[i] - upd);
    }
  }
}

}  // namespace harness
