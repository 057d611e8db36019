// harness/pca.cc
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

#include "harness/pca.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace harness {

Mat to_mat(const FeatureSequence& f) {
  Mat m(f.num_frames, f.dim);
  for (size_t i = 0; i < f.data.size(); ++i) m.a[i] = f.data[i];
  return m;
}

void PcaTransform::project(const double* x, double* out) const {
  const size_t D = in_dim(), Dp = out_dim();
  for (size_t i = 0; i < Dp; ++i) {
    double acc = 0;
    const double* c = components.row(i);
    for (size_t j = 0; j < D; ++j) acc += c[j] * (x[j] - mean[j]);
    out[i] = acc;
  }
}

void PcaTransform::reconstruct(const double* y, double* out) const {
  const size_t D = in_dim(), Dp = out_dim();
  for (size_t j = 0; j < D; ++j) out[j] = mean[j];
  for (size_t i = 0; i < Dp; ++i) {
    const double* c = components.row(i);
    for (size_t j = 0; j < D; ++j) out[j] += y[i] * c[j];
  }
}

void jacobi_eigen_symmetric(const Mat& sym, std::vector<double>& values, Mat& vectors) {
  const size_t n = sym.rows;
  if (sym.cols != n) throw std::invalid_argument("jacobi: matrix must be square");
  Mat a = sym;
  Mat v(n, n);
  for (size_t i = 0; i < n; ++i) v.at(i, i) = 1.0;

  double frob = 0;
  for (double x : a.a) frob += x * x;
  const double tol = 1e-28 * std::max(frob, 1e-300);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j) off += a.at(i, j) * a.at(i, j);
    if (off <= tol) break;
    for (size_t p = 0; p < n; ++p) {
      for (size_t q = p + 1; q < n; ++q) {
        const double apq = a.at(p, q);
        if (apq == 0.0) continue;
        const double app = a.at(p, p), aqq = a.at(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (size_t k = 0; k < n; ++k) {
          const double akp = a.at(k, p), akq = a.at(k, q);
          a.at(k, p) = c * akp - s * akq;
          a.at(k, q) = s * akp + c * akq;
        }
        for (size_t k = 0; k < n; ++k) {
          const double apk = a.at(p, k), aqk = a.at(q, k);
          a.at(p, k) = c * apk - s * aqk;
          a.at(q, k) = s * apk + c * aqk;
        }
        for (size_t k = 0; k < n; ++k) {
          const double vkp = v.at(k, p), vkq = v.at(k, q);
          v.at(k, p) = c * vkp - s * vkq;
          v.at(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> diag(n);
  for (size_t i = 0; i < n; ++i) diag[i] = a.at(i, i);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t x, size_t y) { return diag[x] > diag[y]; });

  values.resize(n);
  vectors = Mat(n, n);
  for (size_t r = 0; r < n; ++r) {
    values[r] = diag[order[r]];
    for (size_t k = 0; k < n; ++k) vectors.at(r, k) = v.at(k, order[r]);
  }
}

PcaTransform fit_pca(const Mat& samples, size_t d_prime) {
  const size_t N = samples.rows, D = samples.cols;
  if (d_prime < 1 || d_prime > D)
    throw std::invalid_argument("pca: d_prime must be in [1, D]");
  if (N <= d_prime)
    throw std::invalid_argument("pca: need more samples than components (N=" +
                                std::to_string(N) + ", d_prime=" +
                                std::to_string(d_prime) + ")");
  for (double x : samples.a)
    if (!std::isfinite(x)) throw std::invalid_argument("pca: non-finite sample");

  PcaTransform t;
  t.mean.assign(D, 0.0);
  for (size_t i = 0; i < N; ++i)
    for (size_t j = 0; j < D; ++j) t.mean[j] += samples.at(i, j);
  for (double& m : t.mean) m /= static_cast<double>(N);

  // covariance, normalized by N-1
  Mat cov(D, D);
  for (size_t i = 0; i < N; ++i) {
    for (size_t j = 0; j < D; ++j) {
      const double xj = samples.at(i, j) - t.mean[j];
      if (xj == 0.0) continue;
      for (size_t k = j; k < D; ++k)
        cov.at(j, k) += xj * (samples.at(i, k) - t.mean[k]);
    }
  }
  const double inv = 1.0 / static_cast<double>(N - 1);
  for (size_t j = 0; j < D; ++j)
    for (size_t k = j; k < D; ++k) {
      cov.at(j, k) *= inv;
      cov.at(k, j) = cov.at(j, k);
    }

  std::vector<double> values;
  Mat vectors;
  jacobi_eigen_symmetric(cov, values, vectors);

  double total = 0;
  for (double v : values) total += std::max(v, 0.0);
  const double rank_floor = 1e-12 * std::max(total, 1e-300);

  t.components = Mat(d_prime, D);
  t.explained_variance.resize(d_prime);
  for (size_t r = 0; r < d_prime; ++r) {
    double val = values[r];
    if (val <= rank_floor) {
      t.rank_deficient = true;  // zero-padded variance, direction still orthonormal
      val = std::max(val, 0.0);
      if (val <= rank_floor) val = 0.0;
    }
    t.explained_variance[r] = val;
    // deterministic sign: first entry with |v| > 1e-12 made positive
    double sign = 1.0;
    for (size_t k = 0; k < D; ++k) {
      if (std::fabs(vectors.at(r, k)) > 1e-12) {
        sign = vectors.at(r, k) > 0 ? 1.0 : -1.0;
        break;
      }
    }
    for (size_t k = 0; k < D; ++k) t.components.at(r, k) = sign * vectors.at(r, k);
  }
  return t;
}

FeatureSequence apply_pca(const PcaTransform& t, const FeatureSequence& f) {
  if (f.dim != t.in_dim())
    throw std::invalid_argument("pca: feature dim " + std::to_string(f.dim) +
                                " does not match transform dim " +
                                std::to_string(t.in_dim()));
  FeatureSequence out;
  out.num_frames = f.num_frames;
  out.dim = t.out_dim();
  out.frame_rate = f.frame_rate;
  out.source = f.source;
  out.source_layer = f.source_layer;
  out.data.resize(out.num_frames * out.dim);
  std::vector<double> x(f.dim), y(out.dim);
  for (size_t i = 0; i < f.num_frames; ++i) {
    for (size_t j = 0; j < f.dim; ++j) x[j] = f.at(i, j);
    t.project(x.data(), y.data());
    for (size_t j = 0; j < out.dim; ++j) out.at(i, j) = static_cast<float>(y[j]);
  }
  return out;
}

Mat apply_pca(const PcaTransform& t, const Mat& m) {
  if (m.cols != t.in_dim())
    throw std::invalid_argument("pca: matrix dim does not match transform dim");
  Mat out(m.rows, t.out_dim());
  for (size_t i = 0; i < m.rows; ++i) t.project(m.row(i), &out.a[i * out.cols]);
  return out;
}

}  // namespace harness
