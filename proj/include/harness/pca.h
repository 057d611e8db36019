// harness/pca.h
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

#ifndef HARNESS_PCA_H_
#define HARNESS_PCA_H_

#include <cstddef>
#include <vector>

#include "harness/features.h"

namespace harness {

// Row-major double matrix used by the quantizer (fits in memory at desk
// scale; feature frames are converted from f32 on entry).
struct Mat {
  size_t rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(size_t r, size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
  double& at(size_t i, size_t j) { return a[i * cols + j]; }
  const double& at(size_t i, size_t j) const { return a[i * cols + j]; }
  const double* row(size_t i) const { return &a[i * cols]; }
};

Mat to_mat(const FeatureSequence& f);

struct PcaTransform {
  std::vector<double> mean;              // D
  Mat components;                        // D' x D, orthonormal rows
  std::vector<double> explained_variance;  // D', non-increasing, >= 0
  bool rank_deficient = false;           // requested more components than rank

  size_t in_dim() const { return mean.size(); }
  size_t out_dim() const { return components.rows; }

  // components * (x - mean); x has in_dim entries, out has out_dim.
  void project(const double* x, double* out) const;
  // mean + components^T * y
  void reconstruct(const double* y, double* out) const;
};

// Principal components of the rows of `samples` via eigendecomposition of the
// covariance (cyclic Jacobi). Deterministic component sign: the first entry
// with magnitude > 1e-12 is made positive. explained_variance holds the top
// d_prime covariance eigenvalues (variance is normalized by N-1).
// Requires N > d_prime >= 1. A request beyond the data rank sets
// rank_deficient and clamps trailing variances to zero rather than failing.
PcaTransform fit_pca(const Mat& samples, size_t d_prime);

FeatureSequence apply_pca(const PcaTransform& t, const FeatureSequence& f);
Mat apply_pca(const PcaTransform& t, const Mat& m);

// Symmetric eigendecomposition helper (descending eigenvalues, rows of
// `vectors` are eigenvectors). Exposed for tests.
void jacobi_eigen_symmetric(const Mat& sym, std::vector<double>& values, Mat& vectors);

}  // namespace harness

#endif  // HARNESS_PCA_H_
