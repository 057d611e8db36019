// harness/kmeans.cc
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

#include "harness/kmeans.h"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "harness/rng.h"

namespace harness {

namespace {

double sq_dist(const double* a, const double* b, size_t d) {
  double acc = 0;
  for (size_t i = 0; i < d; ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

// index of nearest centroid, first index wins exact ties
size_t nearest(const Mat& centroids, const double* x, double* dist_out = nullptr) {
  size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (size_t c = 0; c < centroids.rows; ++c) {
    const double d = sq_dist(x, centroids.row(c), centroids.cols);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (dist_out) *dist_out = best_d;
  return best;
}

Mat kmeanspp_seed(const Mat& points, size_t k, Rng& rng) {
  const size_t n = points.rows, d = points.cols;
  Mat centroids(k, d);
  std::vector<double> min_d(n, std::numeric_limits<double>::infinity());

  size_t first = static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(n)));
  for (size_t j = 0; j < d; ++j) centroids.at(0, j) = points.at(first, j);

  for (size_t c = 1; c < k; ++c) {
    double total = 0;
    for (size_t i = 0; i < n; ++i) {
      const double dd = sq_dist(points.row(i), centroids.row(c - 1), d);
      if (dd < min_d[i]) min_d[i] = dd;
      total += min_d[i];
    }
    size_t pick = 0;
    if (total > 0) {
      const double r = rng.uniform() * total;
      double acc = 0;
      pick = n - 1;
      for (size_t i = 0; i < n; ++i) {
        acc += min_d[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(n)));
    }
    for (size_t j = 0; j < d; ++j) centroids.at(c, j) = points.at(pick, j);
  }
  return centroids;
}

}  // namespace

double kmeans_inertia(const Mat& points, const Mat& centroids) {
  double total = 0;
  for (size_t i = 0; i < points.rows; ++i) {
    double d;
    nearest(centroids, points.row(i), &d);
    total += d;
  }
  return total;
}

Codebook kmeans_fit(const Mat& points, size_t k, const KMeansOpts& opts) {
  const size_t n = points.rows, d = points.cols;
  if (k < 2) throw std::invalid_argument("kmeans: k must be >= 2");
  if (n < k)
    throw std::invalid_argument("kmeans: need at least k points (" +
                                std::to_string(n) + " < " + std::to_string(k) + ")");
  for (double x : points.a)
    if (!std::isfinite(x)) throw std::invalid_argument("kmeans: non-finite point");

  Rng rng(opts.seed);
  Codebook cb;
  cb.centroids = kmeanspp_seed(points, k, rng);

  if (opts.minibatch) {
    // Sculley-style online updates with per-centroid learning-rate decay.
    const size_t batch = std::min(*opts.minibatch, n);
    std::vector<size_t> counts(k, 0);
    std::vector<size_t> idx(batch);
    for (int it = 0; it < opts.max_iters; ++it) {
      for (size_t b = 0; b < batch; ++b)
        idx[b] = static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(n)));
      for (size_t b = 0; b < batch; ++b) {
        const double* x = points.row(idx[b]);
        const size_t c = nearest(cb.centroids, x);
        counts[c] += 1;
        const double eta = 1.0 / static_cast<double>(counts[c]);
        for (size_t j = 0; j < d; ++j)
          cb.centroids.at(c, j) += eta * (x[j] - cb.centroids.at(c, j));
      }
    }
    cb.inertia_history.push_back(kmeans_inertia(points, cb.centroids));
    return cb;
  }

  std::vector<size_t> labels(n, 0);
  std::vector<size_t> counts(k, 0);
  double prev_inertia = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_iters; ++it) {
    // assignment (inertia measured against current centroids)
    double inertia = 0;
    for (size_t i = 0; i < n; ++i) {
      double dist;
      labels[i] = nearest(cb.centroids, points.row(i), &dist);
      inertia += dist;
    }
    cb.inertia_history.push_back(inertia);

    // update
    Mat sums(k, d);
    std::fill(counts.begin(), counts.end(), 0);
    for (size_t i = 0; i < n; ++i) {
      counts[labels[i]] += 1;
      const double* x = points.row(i);
      for (size_t j = 0; j < d; ++j) sums.at(labels[i], j) += x[j];
    }
    for (size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // reseed to the point farthest from its assigned centroid
        size_t far_i = 0;
        double far_d = -1;
        for (size_t i = 0; i < n; ++i) {
          const double dd = sq_dist(points.row(i), cb.centroids.row(labels[i]), d);
          if (dd > far_d) {
            far_d = dd;
            far_i = i;
          }
        }
        for (size_t j = 0; j < d; ++j) cb.centroids.at(c, j) = points.at(far_i, j);
      } else {
        const double inv = 1.0 / static_cast<double>(counts[c]);
        for (size_t j = 0; j < d; ++j) cb.centroids.at(c, j) = sums.at(c, j) * inv;
      }
    }

    if (std::isfinite(prev_inertia)) {
      const double rel = (prev_inertia - inertia) / std::max(prev_inertia, 1e-300);
      if (rel < opts.rel_tol) break;
    }
    if (inertia == 0.0) break;
    prev_inertia = inertia;
  }
  return cb;
}

std::vector<int32_t> assign_rows(const Codebook& cb, const Mat& m) {
  const Mat* pts = &m;
  Mat projected;
  if (cb.pca) {
    projected = apply_pca(*cb.pca, m);
    pts = &projected;
  }
  if (pts->cols != cb.dim())
    throw std::invalid_argument("assign: dim " + std::to_string(pts->cols) +
                                " does not match codebook dim " +
                                std::to_string(cb.dim()));
  std::vector<int32_t> labels(pts->rows);
  for (size_t i = 0; i < pts->rows; ++i)
    labels[i] = static_cast<int32_t>(nearest(cb.centroids, pts->row(i)));
  return labels;
}

PseudoLabelSeq assign(const Codebook& cb, const FeatureSequence& f) {
  PseudoLabelSeq out;
  out.labels = assign_rows(cb, to_mat(f));
  return out;
}

}  // namespace harness
