// harness/kmeans.h
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

#ifndef HARNESS_KMEANS_H_
#define HARNESS_KMEANS_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "harness/features.h"
#include "harness/pca.h"

namespace harness {

struct KMeansOpts {
  int max_iters = 100;
  double rel_tol = 1e-4;
  uint64_t seed = 0;
  std::optional<size_t> minibatch;  // points per batch; full Lloyd when unset
};

// K centroids plus the optional PCA transform that maps encoder embeddings
// into the clustering space. inertia_history records the per-iteration sum
// of squared distances for full-Lloyd fits (non-increasing by construction);
// in minibatch mode only the final full-data inertia is recorded.
struct Codebook {
  Mat centroids;  // K x D_c
  std::optional<PcaTransform> pca;
  std::vector<double> inertia_history;

  size_t k() const { return centroids.rows; }
  size_t dim() const { return centroids.cols; }
  double final_inertia() const {
    return inertia_history.empty() ? 0.0 : inertia_history.back();
  }
};

struct PseudoLabelSeq {
  std::vector<int32_t> labels;
  int source_iteration = 0;

  size_t size() const { return labels.size(); }
};

// k-means++ seeding followed by Lloyd iterations until the relative inertia
// change drops below rel_tol or max_iters is reached. Empty clusters are
// reseeded to the point farthest from its assigned centroid. Deterministic
// per seed.
Codebook kmeans_fit(const Mat& points, size_t k, const KMeansOpts& opts);

// Nearest centroid per row; exact ties break toward the smaller index. If the
// codebook carries a PCA transform it is applied first.
PseudoLabelSeq assign(const Codebook& cb, const FeatureSequence& f);
std::vector<int32_t> assign_rows(const Codebook& cb, const Mat& m);

double kmeans_inertia(const Mat& points, const Mat& centroids);

}  // namespace harness

#endif  // HARNESS_KMEANS_H_
