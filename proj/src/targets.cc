// harness/targets.cc
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

#include "harness/targets.h"

#include <cmath>
#include <stdexcept>

#include "harness/rng.h"

namespace harness {

std::vector<FeatureSequence> iteration_features(int iteration,
                                                const std::optional<TeacherModel>& teacher,
                                                const Corpus& corpus,
                                                const TargetOpts& opts) {
  if (iteration < 1) throw std::invalid_argument("targets: iteration must be >= 1");
  std::vector<FeatureSequence> out;
  out.reserve(corpus.size());

  if (iteration == 1) {
    for (const auto& utt : corpus)
      out.push_back(mfcc_with_deltas(utt.wave, opts.mfcc));
    return out;
  }

  if (!teacher)
    throw std::invalid_argument("targets: iteration " + std::to_string(iteration) +
                                " requires a teacher model");
  const EncoderConfig& cfg = *teacher->config;
  const int layer = opts.layer.value_or(iteration == 2 ? 9 : cfg.depth);
  if (layer < 1 || layer > cfg.depth)
    throw std::invalid_argument("targets: layer " + std::to_string(layer) +
                                " requires encoder depth >= " + std::to_string(layer) +
                                ", teacher has depth " + std::to_string(cfg.depth));

  const double frame_rate = 16000.0 /
      [&] {
        double stride = 1;
        for (int s : cfg.cnn.strides) stride *= s;
        return stride;
      }();
  for (const auto& utt : corpus) {
    EncodeResult enc = encode(*teacher->params, cfg, utt.wave);
    const Tensor32& h = enc.layer_outputs.at(static_cast<size_t>(layer));
    FeatureSequence f;
    f.num_frames = h.rows();
    f.dim = h.cols();
    f.data = h.data;
    f.frame_rate = frame_rate;
    f.source = FeatureSource::kEncoderLayer;
    f.source_layer = layer;
    out.push_back(std::move(f));
  }
  return out;
}

TargetResult targets_for_iteration(int iteration,
                                   const std::optional<TeacherModel>& teacher,
                                   const Corpus& corpus, const TargetOpts& opts) {
  if (corpus.empty()) throw std::invalid_argument("targets: empty corpus");
  if (!(opts.sample_fraction > 0.0 && opts.sample_fraction <= 1.0))
    throw std::invalid_argument("targets: sample_fraction must be in (0, 1]");

  std::vector<FeatureSequence> feats = iteration_features(iteration, teacher, corpus, opts);

  // global frame index over all utterances
  size_t total_frames = 0;
  for (const auto& f : feats) total_frames += f.num_frames;
  if (total_frames == 0) throw std::invalid_argument("targets: no frames in corpus");
  const size_t dim = feats.front().dim;

  Rng rng(opts.seed);
  std::vector<size_t> order(total_frames);
  for (size_t i = 0; i < total_frames; ++i) order[i] = i;
  rng.shuffle(order.begin(), order.end());
  size_t n_sample = static_cast<size_t>(
      std::ceil(opts.sample_fraction * static_cast<double>(total_frames)));
  n_sample = std::max<size_t>(n_sample, std::min<size_t>(total_frames, opts.k));
  n_sample = std::min(n_sample, total_frames);
  order.resize(n_sample);
  std::sort(order.begin(), order.end());

  Mat sample(n_sample, dim);
  {
    std::vector<std::pair<size_t, size_t>> spans;  // (first global frame, utt idx)
    size_t base = 0;
    for (size_t u = 0; u < feats.size(); ++u) {
      spans.push_back({base, u});
      base += feats[u].num_frames;
    }
    size_t cursor = 0;
    for (size_t s = 0; s < n_sample; ++s) {
      const size_t g = order[s];
      while (cursor + 1 < spans.size() && spans[cursor + 1].first <= g) ++cursor;
      const size_t u = spans[cursor].second;
      const size_t t = g - spans[cursor].first;
      const float* src = feats[u].row(t);
      for (size_t j = 0; j < dim; ++j) sample.at(s, j) = src[j];
    }
  }

  std::optional<PcaTransform> pca;
  if (opts.use_pca) {
    if (opts.d_prime < 1 || static_cast<size_t>(opts.d_prime) > dim)
      throw std::invalid_argument("targets: d_prime must be in [1, feature dim]");
    pca = fit_pca(sample, static_cast<size_t>(opts.d_prime));
    sample = apply_pca(*pca, sample);
  }

  KMeansOpts ko = opts.kmeans;
  ko.seed = rng.fork(0x6b6d65616e73ull).seed();  // derived stream for k-means
  Codebook cb = kmeans_fit(sample, static_cast<size_t>(opts.k), ko);
  cb.pca = std::move(pca);

  TargetResult result;
  result.codebook = std::move(cb);
  result.labels.reserve(feats.size());
  for (size_t u = 0; u < feats.size(); ++u) {
    PseudoLabelSeq seq = assign(result.codebook, feats[u]);
    seq.source_iteration = iteration;
    if (opts.align_cnn) {
      const int64_t t_enc = cnn_output_length(
          static_cast<int64_t>(corpus[u].wave.size()), *opts.align_cnn);
      if (t_enc != static_cast<int64_t>(seq.labels.size())) {
        const size_t t_feat = seq.labels.size();
        std::vector<int32_t> aligned(static_cast<size_t>(t_enc));
        for (int64_t t = 0; t < t_enc; ++t) {
          size_t idx = static_cast<size_t>(
              (static_cast<uint64_t>(t) * t_feat) / static_cast<uint64_t>(t_enc));
          aligned[t] = seq.labels[std::min(idx, t_feat - 1)];
        }
        seq.labels = std::move(aligned);
      }
    }
    result.labels.push_back(std::move(seq));
  }
  return result;
}

}  // namespace harness
