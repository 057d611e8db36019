// harness/probe.cc
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

#include "harness/probe.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "harness/graph.h"

namespace harness {

FeatureSequence extract_frozen(const ParamMap32& params, const EncoderConfig& cfg,
                               const Waveform& wave, bool include_layer0) {
  EncodeResult enc = encode(params, cfg, wave);
  const size_t first = include_layer0 ? 0 : 1;
  const size_t count = enc.layer_outputs.size() - first;
  const Tensor32& l0 = enc.layer_outputs[first];

  FeatureSequence out;
  out.num_frames = l0.rows();
  out.dim = l0.cols();
  out.source = FeatureSource::kLayerAverage;
  double total_stride = 1;
  for (int s : cfg.cnn.strides) total_stride *= s;
  out.frame_rate = 16000.0 / total_stride;
  out.data.assign(out.num_frames * out.dim, 0.0f);
  for (size_t l = first; l < enc.layer_outputs.size(); ++l) {
    const Tensor32& h = enc.layer_outputs[l];
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += h.data[i];
  }
  const float inv = 1.0f / static_cast<float>(count);
  for (auto& v : out.data) v *= inv;
  return out;
}

void ProbeConfig::validate() const {
  if (n_classes < 2) throw std::invalid_argument("probe: n_classes must be >= 2");
  if (hidden < 1) throw std::invalid_argument("probe: hidden must be >= 1");
  if (conv_layers < 1 || kernel < 1)
    throw std::invalid_argument("probe: bad conv geometry");
  if (batch < 1 || steps < 1) throw std::invalid_argument("probe: bad train budget");
  if (!(dropout >= 0.0 && dropout < 1.0))
    throw std::invalid_argument("probe: dropout must be in [0, 1)");
}

namespace {

std::vector<std::pair<std::string, std::vector<size_t>>> probe_shapes(
    const ProbeConfig& cfg, size_t feature_dim) {
  std::vector<std::pair<std::string, std::vector<size_t>>> out;
  const size_t H = cfg.hidden, Kk = cfg.kernel;
  for (int l = 0; l < cfg.conv_layers; ++l) {
    const size_t cin = (l == 0) ? feature_dim : H;
    const std::string p = "conv." + std::to_string(l) + ".";
    out.push_back({p + "weight", {H, cin, Kk}});
    out.push_back({p + "bias", {H}});
  }
  out.push_back({"attn.query", {H}});
  out.push_back({"ff.weight", {H, H}});
  out.push_back({"ff.bias", {H}});
  out.push_back({"out.weight", {static_cast<size_t>(cfg.n_classes), H}});
  out.push_back({"out.bias", {static_cast<size_t>(cfg.n_classes)}});
  return out;
}

struct ProbeForward {
  Graph32::Value logits;  // 1 x n_classes
  Tensor32 alpha;         // 1 x T pooling weights
};

ProbeForward probe_forward(Graph32& g, const ValueMap<float>& pv,
                           const ProbeConfig& cfg, const FeatureSequence& f,
                           bool train_mode, Rng* rng) {
  if (f.num_frames < 1) throw std::invalid_argument("probe: empty feature sequence");
  Tensor32 in({f.dim, f.num_frames});
  for (size_t t = 0; t < f.num_frames; ++t)
    for (size_t d = 0; d < f.dim; ++d) in.at(d, t) = f.at(t, d);

  const int pad = cfg.kernel / 2;
  const bool even = cfg.kernel % 2 == 0;
  auto x = g.input(std::move(in));
  for (int l = 0; l < cfg.conv_layers; ++l) {
    const std::string p = "conv." + std::to_string(l) + ".";
    x = g.conv1d(x, pv.at(p + "weight"), pv.at(p + "bias"), 1, pad, 1);
    if (even) x = g.slice_cols(x, 0, f.num_frames);
    x = g.relu(x);
    if (train_mode && cfg.dropout > 0)
      x = g.mul(x, g.input(dropout_mask<float>(g.val(x).shape, cfg.dropout, *rng)));
  }
  auto h = g.transpose(x);  // T x hidden

  // self-attention pooling: alpha = softmax_t(q . h_t), pooled = alpha * h
  auto qrow = g.add_rowvec(g.input(Tensor32({1, static_cast<size_t>(cfg.hidden)})),
                           pv.at("attn.query"));      // query as 1 x hidden
  auto scores = g.matmul_nt(h, qrow);                 // T x 1
  auto alpha = g.softmax_rows(g.transpose(scores));   // 1 x T
  auto pooled = g.matmul(alpha, h);                   // 1 x hidden

  auto ff = g.relu(g.add_rowvec(g.matmul_nt(pooled, pv.at("ff.weight")),
                                pv.at("ff.bias")));
  if (train_mode && cfg.dropout > 0)
    ff = g.mul(ff, g.input(dropout_mask<float>(g.val(ff).shape, cfg.dropout, *rng)));
  auto logits = g.add_rowvec(g.matmul_nt(ff, pv.at("out.weight")), pv.at("out.bias"));
  return ProbeForward{logits, g.val(alpha)};
}

ValueMap<float> push_params(Graph32& g, const ProbeParams& params, bool grads) {
  ValueMap<float> pv;
  for (const auto& [name, t] : params) pv.emplace(name, g.input(t, grads));
  return pv;
}

}  // namespace

ProbeParams probe_init(const ProbeConfig& cfg, size_t feature_dim, uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  ProbeParams params;
  for (const auto& [name, shape] : probe_shapes(cfg, feature_dim)) {
    Tensor32 t(shape);
    if (name.size() >= 4 && name.substr(name.size() - 4) == "bias") {
      // zeros
    } else {
      double fan_in, fan_out;
      if (shape.size() == 3) {
        fan_in = static_cast<double>(shape[1] * shape[2]);
        fan_out = static_cast<double>(shape[0] * shape[2]);
      } else if (shape.size() == 2) {
        fan_in = static_cast<double>(shape[1]);
        fan_out = static_cast<double>(shape[0]);
      } else {
        fan_in = fan_out = static_cast<double>(t.numel());
      }
      const double a = std::sqrt(6.0 / (fan_in + fan_out));
      for (auto& v : t.data) v = static_cast<float>(rng.uniform(-a, a));
    }
    params.emplace(name, std::move(t));
  }
  return params;
}

ProbeParams probe_train(const std::vector<LabeledFeatures>& data, const ProbeConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw std::invalid_argument("probe: no training examples");
  const size_t dim = data.front().features.dim;
  std::set<int> seen;
  for (const auto& ex : data) {
    if (ex.features.dim != dim)
      throw std::invalid_argument("probe: feature dim mismatch for '" + ex.utt_id + "'");
    if (ex.label < 0 || ex.label >= cfg.n_classes)
      throw std::invalid_argument("probe: label out of range for '" + ex.utt_id + "'");
    seen.insert(ex.label);
  }
  if (static_cast<int>(seen.size()) < cfg.n_classes)
    throw std::invalid_argument("probe: every class needs at least one example (" +
                                std::to_string(seen.size()) + " of " +
                                std::to_string(cfg.n_classes) + " present)");

  ProbeParams params = probe_init(cfg, dim, cfg.seed);
  AdamState state = AdamState::init(params);
  Rng rng_batch = Rng(cfg.seed).fork(11);
  Rng rng_drop = Rng(cfg.seed).fork(12);

  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  size_t cursor = order.size();  // forces a shuffle on first use

  for (int64_t step = 1; step <= cfg.steps; ++step) {
    ParamMap32 grad_acc;
    for (const auto& [name, p] : params) grad_acc.emplace(name, Tensor32::zeros(p.shape));
    const int bsz = static_cast<int>(std::min<size_t>(cfg.batch, data.size()));
    const float inv_b = 1.0f / static_cast<float>(bsz);
    for (int b = 0; b < bsz; ++b) {
      if (cursor >= order.size()) {
        rng_batch.shuffle(order.begin(), order.end());
        cursor = 0;
      }
      const LabeledFeatures& ex = data[order[cursor++]];
      Graph32 g;
      auto pv = push_params(g, params, true);
      ProbeForward fw = probe_forward(g, pv, cfg, ex.features, true, &rng_drop);
      auto loss = g.weighted_ce(fw.logits, {ex.label}, {0}, 1.0, 0.0);
      if (!std::isfinite(static_cast<double>(g.val(loss).data[0])))
        throw std::runtime_error("probe: non-finite loss at step " + std::to_string(step));
      g.backward(loss, inv_b);
      for (auto& [name, acc] : grad_acc) {
        const Tensor32 gr = g.grad(pv.at(name));
        for (size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += gr.data[i];
      }
    }
    adam_update(state, params, grad_acc, cfg.adam, 0);  // constant lr
  }
  return params;
}

double probe_eval(const ProbeParams& params, const ProbeConfig& cfg,
                  const std::vector<LabeledFeatures>& data,
                  std::vector<ProbePrediction>* predictions) {
  if (data.empty()) throw std::invalid_argument("probe: empty evaluation set");
  size_t correct = 0;
  if (predictions) predictions->clear();
  for (const auto& ex : data) {
    Graph32 g;
    auto pv = push_params(g, params, false);
    ProbeForward fw = probe_forward(g, pv, cfg, ex.features, false, nullptr);
    const Tensor32& logits = g.val(fw.logits);
    int best = 0;
    for (int k = 1; k < cfg.n_classes; ++k)
      if (logits.at(0, k) > logits.at(0, best)) best = k;
    if (best == ex.label) ++correct;
    if (predictions) predictions->push_back({ex.utt_id, ex.label, best});
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

std::vector<float> probe_pooling_weights(const ProbeParams& params,
                                         const ProbeConfig& cfg,
                                         const FeatureSequence& f) {
  Graph32 g;
  auto pv = push_params(g, params, false);
  ProbeForward fw = probe_forward(g, pv, cfg, f, false, nullptr);
  return fw.alpha.data;
}

}  // namespace harness
