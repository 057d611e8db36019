// harness/train.cc
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

#include "harness/train.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace harness {

void TrainConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("train: steps must be >= 1");
  if (batch_utterances < 1)
    throw std::invalid_argument("train: batch_utterances must be >= 1");
  mask.validate();
  weights.validate();
  adam.validate();
  if (log_every < 1) throw std::invalid_argument("train: log_every must be >= 1");
  if (checkpoint_every > 0 && checkpoint_dir.empty())
    throw std::invalid_argument("train: checkpoint_every needs checkpoint_dir");
}

namespace {

void check_labels(const EncoderConfig& cfg, const Corpus& corpus,
                  const std::vector<PseudoLabelSeq>& labels) {
  if (labels.size() != corpus.size())
    throw std::invalid_argument("train: labels/corpus size mismatch");
  for (size_t i = 0; i < corpus.size(); ++i) {
    const int64_t frames =
        cnn_output_length(static_cast<int64_t>(corpus[i].wave.size()), cfg.cnn);
    if (static_cast<int64_t>(labels[i].size()) != frames)
      throw std::invalid_argument(
          "train: utterance '" + corpus[i].id + "' has " +
          std::to_string(labels[i].size()) + " labels but " +
          std::to_string(frames) + " frames");
    for (int32_t l : labels[i].labels)
      if (l < 0 || l >= cfg.num_clusters)
        throw std::invalid_argument("train: utterance '" + corpus[i].id +
                                    "' has label " + std::to_string(l) +
                                    " >= num_clusters " +
                                    std::to_string(cfg.num_clusters));
  }
}

// Length buckets of batch size: utterances sorted by (length, id), chopped
// into consecutive groups. Members are kept in sorted-id order.
std::vector<std::vector<size_t>> length_buckets(const Corpus& corpus, int batch) {
  std::vector<size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (corpus[a].wave.size() != corpus[b].wave.size())
      return corpus[a].wave.size() < corpus[b].wave.size();
    return corpus[a].id < corpus[b].id;
  });
  std::vector<std::vector<size_t>> buckets;
  for (size_t i = 0; i < order.size(); i += batch) {
    std::vector<size_t> b(order.begin() + i,
                          order.begin() + std::min(order.size(), i + batch));
    std::sort(b.begin(), b.end(),
              [&](size_t x, size_t y) { return corpus[x].id < corpus[y].id; });
    buckets.push_back(std::move(b));
  }
  return buckets;
}

}  // namespace

TrainReport train(ParamMap32& params, const EncoderConfig& cfg, const Corpus& corpus,
                  const std::vector<PseudoLabelSeq>& labels, const TrainConfig& tc) {
  tc.validate();
  cfg.validate();
  if (corpus.empty()) throw std::invalid_argument("train: empty corpus");
  check_labels(cfg, corpus, labels);

  Rng rng_batch = Rng(tc.seed).fork(1);
  Rng rng_mask = Rng(tc.seed).fork(2);
  Rng rng_drop = Rng(tc.seed).fork(3);

  const auto buckets = length_buckets(corpus, tc.batch_utterances);
  AdamState state = AdamState::init(params);
  TrainReport report;

  for (int64_t step = 1; step <= tc.steps; ++step) {
    const auto& batch =
        buckets[static_cast<size_t>(rng_batch.uniform_int(buckets.size()))];
    const float inv_b = 1.0f / static_cast<float>(batch.size());

    ParamMap32 grad_acc;
    for (const auto& [name, p] : params) grad_acc.emplace(name, Tensor32::zeros(p.shape));

    double batch_loss = 0;
    size_t hits_m = 0, n_m = 0, hits_u = 0, n_u = 0;
    for (size_t ui : batch) {
      const Utterance& utt = corpus[ui];
      const int64_t frames =
          cnn_output_length(static_cast<int64_t>(utt.wave.size()), cfg.cnn);
      const std::vector<int32_t> mask = sample_mask(frames, tc.mask, rng_mask);

      ForwardOptions opt;
      opt.mask = &mask;
      opt.train_mode = true;
      opt.rng = &rng_drop;
      auto fp = encoder_forward<float>(params, cfg, utt.wave.samples, opt);
      auto loss = fp.graph.weighted_ce(fp.logits, labels[ui].labels, mask,
                                       tc.weights.w_masked, tc.weights.w_unmasked);
      const double loss_v = fp.graph.val(loss).data[0];
      if (!std::isfinite(loss_v))
        throw std::runtime_error("train: non-finite loss at step " +
                                 std::to_string(step) + " (utterance '" + utt.id + "')");
      batch_loss += loss_v;

      const LossStats st = prediction_stats(fp.graph.val(fp.logits), labels[ui], mask);
      hits_m += static_cast<size_t>(std::lround(st.masked_acc * st.n_masked));
      n_m += st.n_masked;
      hits_u += static_cast<size_t>(std::lround(st.unmasked_acc * st.n_unmasked));
      n_u += st.n_unmasked;

      fp.graph.backward(loss, inv_b);
      for (auto& [name, acc] : grad_acc) {
        const Tensor32 g = fp.graph.grad(fp.param_values.at(name));
        for (size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += g.data[i];
      }
    }
    batch_loss /= static_cast<double>(batch.size());

    const double lr_t = adam_lr_at(tc.adam, state.t + 1, tc.steps);
    adam_update(state, params, grad_acc, tc.adam, tc.steps);

    if (step % tc.log_every == 0 || step == tc.steps) {
      report.rows.push_back(TrainLogRow{
          step, batch_loss, n_m ? static_cast<double>(hits_m) / n_m : 0.0,
          n_u ? static_cast<double>(hits_u) / n_u : 0.0, lr_t});
    }
    if (tc.checkpoint_every > 0 && step % tc.checkpoint_every == 0)
      save_checkpoint(tc.checkpoint_dir + "/step" + std::to_string(step) + ".ckpt",
                      params, cfg);
    report.final_loss = batch_loss;
  }
  report.steps = tc.steps;

  const LossStats final_stats =
      eval_masked_accuracy(params, cfg, corpus, labels, tc.mask, tc.seed ^ 0xe4a1u);
  report.final_masked_acc = final_stats.masked_acc;
  report.final_unmasked_acc = final_stats.unmasked_acc;
  return report;
}

LossStats eval_masked_accuracy(const ParamMap32& params, const EncoderConfig& cfg,
                               const Corpus& corpus,
                               const std::vector<PseudoLabelSeq>& labels,
                               const MaskSpec& mask_spec, uint64_t seed) {
  Rng rng(seed);
  size_t hits_m = 0, n_m = 0, hits_u = 0, n_u = 0;
  for (size_t i = 0; i < corpus.size(); ++i) {
    const int64_t frames =
        cnn_output_length(static_cast<int64_t>(corpus[i].wave.size()), cfg.cnn);
    const std::vector<int32_t> mask = sample_mask(frames, mask_spec, rng);
    EncodeResult enc = encode(params, cfg, corpus[i].wave, &mask);
    const LossStats st = prediction_stats(enc.logits, labels[i], mask);
    hits_m += static_cast<size_t>(std::lround(st.masked_acc * st.n_masked));
    n_m += st.n_masked;
    hits_u += static_cast<size_t>(std::lround(st.unmasked_acc * st.n_unmasked));
    n_u += st.n_unmasked;
  }
  LossStats out;
  out.n_masked = n_m;
  out.n_unmasked = n_u;
  out.masked_acc = n_m ? static_cast<double>(hits_m) / n_m : 0.0;
  out.unmasked_acc = n_u ? static_cast<double>(hits_u) / n_u : 0.0;
  return out;
}

void write_train_csv(const std::string& path, const TrainReport& report) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("train: cannot write " + path);
  f << "step,loss,masked_acc,unmasked_acc,lr\n";
  char buf[160];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof(buf), "%lld,%.9g,%.6f,%.6f,%.9g\n",
                  static_cast<long long>(r.step), r.loss, r.masked_acc,
                  r.unmasked_acc, r.lr);
    f << buf;
  }
  if (!f) throw std::runtime_error("train: short write to " + path);
}

}  // namespace harness
