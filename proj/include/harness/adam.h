// harness/adam.h
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

#ifndef HARNESS_ADAM_H_
#define HARNESS_ADAM_H_

#include <cstdint>

#include "harness/tensor.h"

namespace harness {

struct AdamHParams {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-6;
  double weight_decay = 0.0;
  double warmup_fraction = 0.08;

  void validate() const;
};

struct AdamState {
  ParamMap32 m;
  ParamMap32 v;
  int64_t t = 0;

  static AdamState init(const ParamMap32& params);
};

// Effective learning rate at (1-based) step t: linear warmup over
// warmup_fraction * total_steps, then linear decay to 0 at total_steps.
// total_steps <= 0 disables the schedule (constant lr).
double adam_lr_at(const AdamHParams& hp, int64_t t, int64_t total_steps);

// One Adam step with bias correction; mutates params and state, increments
// state.t by exactly 1. Throws on shape mismatch or when the schedule is
// exhausted (t >= total_steps with a schedule active).
void adam_update(AdamState& state, ParamMap32& params, const ParamMap32& grads,
                 const AdamHParams& hp, int64_t total_steps);

}  // namespace harness

#endif  // HARNESS_ADAM_H_
