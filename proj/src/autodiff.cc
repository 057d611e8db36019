// harness/autodiff.cc
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

#include "harness/autodiff.h"

#include <cmath>
#include <stdexcept>

namespace harness {

double finite_diff_check(const ParamMap64& params, const LossBuilder<double>& build,
                         double epsilon, Rng& rng, int coords_per_param) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-3))
    throw std::invalid_argument("finite_diff_check: epsilon must be in [1e-7, 1e-3]");

  ParamMap64 grads = gradients(params, build);
  ParamMap64 work = params;

  double max_rel = 0.0;
  for (auto& [name, tensor] : work) {
    const size_t n = tensor.numel();
    std::vector<size_t> coords;
    if (n <= static_cast<size_t>(coords_per_param)) {
      coords.resize(n);
      for (size_t i = 0; i < n; ++i) coords[i] = i;
    } else {
      // sample without replacement
      std::vector<size_t> all(n);
      for (size_t i = 0; i < n; ++i) all[i] = i;
      for (int i = 0; i < coords_per_param; ++i) {
        size_t j = i + static_cast<size_t>(rng.uniform_int(n - i));
        std::swap(all[i], all[j]);
        coords.push_back(all[i]);
      }
    }
    const Tensor64& g_ad = grads.at(name);
    for (size_t c : coords) {
      const double saved = tensor.data[c];
      tensor.data[c] = saved + epsilon;
      const double fp = eval_loss<double>(work, build);
      tensor.data[c] = saved - epsilon;
      const double fm = eval_loss<double>(work, build);
      tensor.data[c] = saved;
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw std::runtime_error("finite_diff_check: non-finite loss at perturbed point (" +
                                 name + ")");
      const double g_fd = (fp - fm) / (2.0 * epsilon);
      const double denom = std::max(1e-8, std::fabs(g_ad.data[c]) + std::fabs(g_fd));
      max_rel = std::max(max_rel, std::fabs(g_ad.data[c] - g_fd) / denom);
    }
  }
  return max_rel;
}

}  // namespace harness
