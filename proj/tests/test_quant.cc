// tests/test_quant.cc
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

#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>

#include "harness/kmeans.h"
#include "harness/pca.h"
#include "harness/rng.h"

using namespace harness;

namespace {

Mat random_mat(size_t n, size_t d, Rng& rng, double scale = 1.0) {
  Mat m(n, d);
  for (auto& v : m.a) v = rng.normal() * scale;
  return m;
}

// brute-force nearest-centroid oracle (independent scan, same tie rule)
std::vector<int32_t> brute_force_assign(const Mat& pts, const Mat& centroids) {
  std::vector<int32_t> out(pts.rows);
  for (size_t i = 0; i < pts.rows; ++i) {
    int32_t best = 0;
    double best_d = 1e300;
    for (size_t c = 0; c < centroids.rows; ++c) {
      double d = 0;
      for (size_t j = 0; j < pts.cols; ++j) {
        const double diff = pts.at(i, j) - centroids.at(c, j);
        d += diff * diff;
      }
      if (d < best_d) {
        best_d = d;
        best = static_cast<int32_t>(c);
      }
    }
    out[i] = best;
  }
  return out;
}

}  // namespace

TEST_CASE("pca: components orthonormal, variance non-increasing") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const size_t n = 40 + rng.uniform_int(60);
    const size_t d = 3 + rng.uniform_int(10);
    const size_t dp = 1 + rng.uniform_int(static_cast<int64_t>(d));
    Mat x = random_mat(n, d, rng);
    PcaTransform t = fit_pca(x, dp);
    for (size_t i = 0; i < dp; ++i)
      for (size_t j = 0; j < dp; ++j) {
        double dot = 0;
        for (size_t k = 0; k < d; ++k) dot += t.components.at(i, k) * t.components.at(j, k);
        CHECK(std::fabs(dot - (i == j ? 1.0 : 0.0)) < 1e-6);
      }
    for (size_t i = 1; i < dp; ++i)
      CHECK(t.explained_variance[i] <= t.explained_variance[i - 1] + 1e-12);
    for (double v : t.explained_variance) CHECK(v >= 0.0);
  }
}

TEST_CASE("pca: full-rank round trip reconstructs inputs") {
  Rng rng(12);
  Mat x = random_mat(50, 6, rng);
  PcaTransform t = fit_pca(x, 6);
  std::vector<double> y(6), back(6);
  for (size_t i = 0; i < x.rows; ++i) {
    t.project(x.row(i), y.data());
    t.reconstruct(y.data(), back.data());
    for (size_t j = 0; j < 6; ++j)
      CHECK(std::fabs(back[j] - x.at(i, j)) < 1e-6);
  }
}

TEST_CASE("pca: collinear data explained by one component") {
  Rng rng(13);
  Mat x(60, 2);
  for (size_t i = 0; i < 60; ++i) {
    const double v = rng.normal();
    x.at(i, 0) = v;
    x.at(i, 1) = 2.0 * v;  // y = 2x
  }
  PcaTransform t = fit_pca(x, 2);
  const double total = t.explained_variance[0] + t.explained_variance[1];
  CHECK(t.explained_variance[0] / total == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(t.rank_deficient);  // second direction carries (numerically) nothing
}

TEST_CASE("pca: reconstruction error equals discarded variance (Eckart-Young)") {
  Rng rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const size_t n = 40 + rng.uniform_int(50);
    const size_t d = 4 + rng.uniform_int(8);
    const size_t dp = 1 + rng.uniform_int(static_cast<int64_t>(d - 1));
    Mat x = random_mat(n, d, rng);
    // full decomposition provides the discarded eigenvalues
    PcaTransform full = fit_pca(x, d);
    PcaTransform t = fit_pca(x, dp);
    std::vector<double> y(dp), back(d);
    double sse = 0;
    for (size_t i = 0; i < n; ++i) {
      t.project(x.row(i), y.data());
      t.reconstruct(y.data(), back.data());
      for (size_t j = 0; j < d; ++j) {
        const double diff = back[j] - x.at(i, j);
        sse += diff * diff;
      }
    }
    const double recon = sse / static_cast<double>(n - 1);
    double discarded = 0;
    for (size_t j = dp; j < d; ++j) discarded += full.explained_variance[j];
    const double scale = std::max(1.0, discarded);
    CHECK(std::fabs(recon - discarded) / scale < 1e-6);
  }
}

TEST_CASE("pca: centering and identity behaviors") {
  Rng rng(15);
  Mat x = random_mat(30, 4, rng);
  PcaTransform t = fit_pca(x, 3);

  // projecting the mean gives the zero vector
  std::vector<double> y(3);
  t.project(t.mean.data(), y.data());
  for (double v : y) CHECK(std::fabs(v) < 1e-12);

  // orthonormal projection contracts norms
  std::vector<double> full(4);
  for (size_t i = 0; i < x.rows; ++i) {
    t.project(x.row(i), y.data());
    double ny = 0, nx = 0;
    for (double v : y) ny += v * v;
    for (size_t j = 0; j < 4; ++j) {
      const double c = x.at(i, j) - t.mean[j];
      nx += c * c;
    }
    CHECK(ny <= nx + 1e-9);
  }
}

TEST_CASE("pca: error paths") {
  Rng rng(16);
  Mat x = random_mat(5, 8, rng);
  CHECK_THROWS_WITH_AS(fit_pca(x, 6), doctest::Contains("more samples"),
                       std::invalid_argument);
  Mat ok = random_mat(20, 4, rng);
  CHECK_THROWS_AS(fit_pca(ok, 0), std::invalid_argument);
  CHECK_THROWS_AS(fit_pca(ok, 5), std::invalid_argument);
  FeatureSequence f;
  f.num_frames = 2;
  f.dim = 3;
  f.data.assign(6, 0.0f);
  PcaTransform t = fit_pca(ok, 2);
  CHECK_THROWS_WITH_AS(apply_pca(t, f), doctest::Contains("does not match"),
                       std::invalid_argument);
}

TEST_CASE("kmeans: N==K distinct points reach zero inertia") {
  Rng rng(21);
  Mat x = random_mat(8, 3, rng);
  KMeansOpts opts;
  opts.seed = 1;
  Codebook cb = kmeans_fit(x, 8, opts);
  CHECK(cb.final_inertia() == doctest::Approx(0.0).epsilon(1e-12));
  auto labels = assign_rows(cb, x);
  std::set<int32_t> unique(labels.begin(), labels.end());
  CHECK(unique.size() == 8);
}

TEST_CASE("kmeans: four separated blobs recovered with > 0.99 purity") {
  Rng rng(22);
  const double centers[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  const size_t per = 500;
  Mat x(4 * per, 2);
  std::vector<int> truth(4 * per);
  for (size_t i = 0; i < 4 * per; ++i) {
    const int c = static_cast<int>(i / per);
    truth[i] = c;
    x.at(i, 0) = centers[c][0] + 0.05 * rng.normal();
    x.at(i, 1) = centers[c][1] + 0.05 * rng.normal();
  }
  KMeansOpts opts;
  opts.seed = 3;
  Codebook cb = kmeans_fit(x, 4, opts);
  auto labels = assign_rows(cb, x);
  // purity: dominant true class per cluster
  size_t agree = 0;
  for (int c = 0; c < 4; ++c) {
    std::array<size_t, 4> counts{};
    for (size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) counts[truth[i]]++;
    agree += *std::max_element(counts.begin(), counts.end());
  }
  CHECK(static_cast<double>(agree) / labels.size() > 0.99);
}

TEST_CASE("kmeans: inertia history is non-increasing on random data") {
  Rng rng(23);
  for (int trial = 0; trial < 25; ++trial) {
    const size_t n = 30 + rng.uniform_int(100);
    const size_t d = 2 + rng.uniform_int(6);
    const size_t k = 2 + rng.uniform_int(6);
    Mat x = random_mat(n, d, rng);
    KMeansOpts opts;
    opts.seed = static_cast<uint64_t>(trial);
    Codebook cb = kmeans_fit(x, k, opts);
    REQUIRE(!cb.inertia_history.empty());
    for (size_t i = 1; i < cb.inertia_history.size(); ++i)
      CHECK(cb.inertia_history[i] <= cb.inertia_history[i - 1] + 1e-9);
    CHECK(cb.final_inertia() <= cb.inertia_history.front() + 1e-9);
  }
}

TEST_CASE("kmeans: deterministic per seed, errors on bad input") {
  Rng rng(24);
  Mat x = random_mat(50, 3, rng);
  KMeansOpts opts;
  opts.seed = 9;
  Codebook a = kmeans_fit(x, 5, opts);
  Codebook b = kmeans_fit(x, 5, opts);
  CHECK(a.centroids.a == b.centroids.a);
  CHECK(a.inertia_history == b.inertia_history);

  CHECK_THROWS_WITH_AS(kmeans_fit(random_mat(3, 2, rng), 5, opts),
                       doctest::Contains("at least k"), std::invalid_argument);
  Mat bad = random_mat(10, 2, rng);
  bad.a[3] = std::nan("");
  CHECK_THROWS_WITH_AS(kmeans_fit(bad, 2, opts), doctest::Contains("non-finite"),
                       std::invalid_argument);
}

TEST_CASE("kmeans: minibatch mode converges near the blob optimum") {
  Rng rng(25);
  const double centers[3][2] = {{0, 0}, {3, 0}, {0, 3}};
  Mat x(900, 2);
  for (size_t i = 0; i < 900; ++i) {
    const int c = static_cast<int>(i / 300);
    x.at(i, 0) = centers[c][0] + 0.1 * rng.normal();
    x.at(i, 1) = centers[c][1] + 0.1 * rng.normal();
  }
  KMeansOpts full;
  full.seed = 4;
  KMeansOpts mini = full;
  mini.minibatch = 128;
  mini.max_iters = 60;
  const double inertia_full = kmeans_fit(x, 3, full).final_inertia();
  const double inertia_mini = kmeans_fit(x, 3, mini).final_inertia();
  CHECK(inertia_mini < 2.0 * inertia_full + 1.0);
}

TEST_CASE("assign: exact centroid hit, declared tie-break, brute-force agreement") {
  Codebook cb;
  cb.centroids = Mat(6, 2);
  Rng rng(26);
  for (auto& v : cb.centroids.a) v = rng.normal();

  SUBCASE("point equal to centroid j gets label j") {
    FeatureSequence f;
    f.num_frames = 6;
    f.dim = 2;
    f.data.resize(12);
    for (size_t t = 0; t < 6; ++t)
      for (size_t d = 0; d < 2; ++d) f.at(t, d) = static_cast<float>(cb.centroids.at(t, d));
    auto seq = assign(cb, f);
    for (size_t t = 0; t < 6; ++t) CHECK(seq.labels[t] == static_cast<int32_t>(t));
  }

  SUBCASE("equidistant point breaks toward the smaller index") {
    Codebook tie;
    tie.centroids = Mat(6, 1);
    tie.centroids.at(2, 0) = -1.0;
    tie.centroids.at(5, 0) = 1.0;
    tie.centroids.at(0, 0) = 50.0;
    tie.centroids.at(1, 0) = 51.0;
    tie.centroids.at(3, 0) = 52.0;
    tie.centroids.at(4, 0) = 53.0;
    FeatureSequence f;
    f.num_frames = 1;
    f.dim = 1;
    f.data = {0.0f};  // exactly between centroids 2 and 5
    CHECK(assign(tie, f).labels[0] == 2);
  }

  SUBCASE("random 100-frame sequence matches exhaustive scan") {
    FeatureSequence f;
    f.num_frames = 100;
    f.dim = 2;
    f.data.resize(200);
    for (auto& v : f.data) v = static_cast<float>(rng.normal());
    auto got = assign(cb, f);
    auto expect = brute_force_assign(to_mat(f), cb.centroids);
    CHECK(got.labels == expect);
  }

  SUBCASE("idempotent and equal rows get equal labels") {
    FeatureSequence f;
    f.num_frames = 4;
    f.dim = 2;
    f.data = {0.5f, 0.5f, 0.5f, 0.5f, -1.0f, 2.0f, 0.5f, 0.5f};
    auto a = assign(cb, f);
    auto b = assign(cb, f);
    CHECK(a.labels == b.labels);
    CHECK(a.labels[0] == a.labels[1]);
    CHECK(a.labels[0] == a.labels[3]);
  }

  SUBCASE("dimension mismatch is an error") {
    FeatureSequence f;
    f.num_frames = 1;
    f.dim = 3;
    f.data = {0.0f, 0.0f, 0.0f};
    CHECK_THROWS_WITH_AS(assign(cb, f), doctest::Contains("does not match"),
                         std::invalid_argument);
  }
}

TEST_CASE("assign with full-rank PCA matches centered assignment (rotation invariance)") {
  Rng rng(27);
  for (int trial = 0; trial < 5; ++trial) {
    const size_t n = 120, d = 5, k = 6;
    Mat x = random_mat(n, d, rng);
    PcaTransform t = fit_pca(x, d);

    // centered copy for the raw codebook
    Mat centered = x;
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < d; ++j) centered.at(i, j) -= t.mean[j];
    KMeansOpts opts;
    opts.seed = 100 + trial;
    Codebook raw = kmeans_fit(centered, k, opts);

    // same centroids rotated into PCA space
    Codebook rotated;
    rotated.centroids = Mat(k, d);
    for (size_t c = 0; c < k; ++c)
      for (size_t r = 0; r < d; ++r) {
        double acc = 0;
        for (size_t j = 0; j < d; ++j) acc += t.components.at(r, j) * raw.centroids.at(c, j);
        rotated.centroids.at(c, r) = acc;
      }
    rotated.pca = t;

    FeatureSequence f;
    f.num_frames = n;
    f.dim = d;
    f.data.resize(n * d);
    for (size_t i = 0; i < n * d; ++i) f.data[i] = static_cast<float>(x.a[i]);

    // raw assignment needs centered features
    FeatureSequence fc = f;
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < d; ++j) fc.at(i, j) -= static_cast<float>(t.mean[j]);

    CHECK(assign(raw, fc).labels == assign(rotated, f).labels);
  }
}
