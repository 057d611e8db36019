// harness/config_json.cc
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

#include "harness/config_json.h"

#include <stdexcept>

namespace harness {

void to_json(nlohmann::json& j, const MfccConfig& c) {
  j = nlohmann::json{{"window_ms", c.window_ms}, {"hop_ms", c.hop_ms},
                     {"n_mels", c.n_mels},       {"n_ceps", c.n_ceps},
                     {"delta_window", c.delta_window},
                     {"preemphasis", c.preemphasis}};
}
void from_json(const nlohmann::json& j, MfccConfig& c) {
  MfccConfig d;
  c.window_ms = j.value("window_ms", d.window_ms);
  c.hop_ms = j.value("hop_ms", d.hop_ms);
  c.n_mels = j.value("n_mels", d.n_mels);
  c.n_ceps = j.value("n_ceps", d.n_ceps);
  c.delta_window = j.value("delta_window", d.delta_window);
  c.preemphasis = j.value("preemphasis", d.preemphasis);
}

void to_json(nlohmann::json& j, const MaskSpec& m) {
  j = nlohmann::json{{"p_mask", m.p_mask}, {"span_len", m.span_len}};
}
void from_json(const nlohmann::json& j, MaskSpec& m) {
  MaskSpec d;
  m.p_mask = j.value("p_mask", d.p_mask);
  m.span_len = j.value("span_len", d.span_len);
}

void to_json(nlohmann::json& j, const LossWeights& w) {
  j = nlohmann::json{{"w_masked", w.w_masked}, {"w_unmasked", w.w_unmasked}};
}
void from_json(const nlohmann::json& j, LossWeights& w) {
  LossWeights d;
  w.w_masked = j.value("w_masked", d.w_masked);
  w.w_unmasked = j.value("w_unmasked", d.w_unmasked);
}

void to_json(nlohmann::json& j, const AdamHParams& a) {
  j = nlohmann::json{{"lr", a.lr},
                     {"beta1", a.beta1},
                     {"beta2", a.beta2},
                     {"eps", a.eps},
                     {"weight_decay", a.weight_decay},
                     {"warmup_fraction", a.warmup_fraction}};
}
void from_json(const nlohmann::json& j, AdamHParams& a) {
  AdamHParams d;
  a.lr = j.value("lr", d.lr);
  a.beta1 = j.value("beta1", d.beta1);
  a.beta2 = j.value("beta2", d.beta2);
  a.eps = j.value("eps", d.eps);
  a.weight_decay = j.value("weight_decay", d.weight_decay);
  a.warmup_fraction = j.value("warmup_fraction", d.warmup_fraction);
}

void to_json(nlohmann::json& j, const KMeansOpts& k) {
  j = nlohmann::json{{"max_iters", k.max_iters}, {"rel_tol", k.rel_tol}};
  if (k.minibatch) j["minibatch"] = *k.minibatch;
}
void from_json(const nlohmann::json& j, KMeansOpts& k) {
  KMeansOpts d;
  k.max_iters = j.value("max_iters", d.max_iters);
  k.rel_tol = j.value("rel_tol", d.rel_tol);
  if (j.contains("minibatch") && !j.at("minibatch").is_null())
    k.minibatch = j.at("minibatch").get<size_t>();
}

void to_json(nlohmann::json& j, const TrainConfig& t) {
  j = nlohmann::json{{"steps", t.steps},
                     {"batch_utterances", t.batch_utterances},
                     {"mask", t.mask},
                     {"weights", t.weights},
                     {"adam", t.adam},
                     {"seed", t.seed},
                     {"log_every", t.log_every},
                     {"checkpoint_every", t.checkpoint_every}};
}
void from_json(const nlohmann::json& j, TrainConfig& t) {
  TrainConfig d;
  t.steps = j.value("steps", d.steps);
  t.batch_utterances = j.value("batch_utterances", d.batch_utterances);
  if (j.contains("mask")) j.at("mask").get_to(t.mask);
  if (j.contains("weights")) j.at("weights").get_to(t.weights);
  if (j.contains("adam")) j.at("adam").get_to(t.adam);
  t.seed = j.value("seed", d.seed);
  t.log_every = j.value("log_every", d.log_every);
  t.checkpoint_every = j.value("checkpoint_every", d.checkpoint_every);
}

void to_json(nlohmann::json& j, const TargetOpts& t) {
  j = nlohmann::json{{"k", t.k},
                     {"use_pca", t.use_pca},
                     {"d_prime", t.d_prime},
                     {"sample_fraction", t.sample_fraction},
                     {"seed", t.seed},
                     {"mfcc", t.mfcc},
                     {"kmeans", t.kmeans}};
  if (t.layer) j["layer"] = *t.layer;
  if (t.align_cnn) j["align_cnn"] = *t.align_cnn;
}
void from_json(const nlohmann::json& j, TargetOpts& t) {
  TargetOpts d;
  t.k = j.value("k", d.k);
  t.use_pca = j.value("use_pca", d.use_pca);
  t.d_prime = j.value("d_prime", d.d_prime);
  t.sample_fraction = j.value("sample_fraction", d.sample_fraction);
  t.seed = j.value("seed", d.seed);
  if (j.contains("mfcc")) j.at("mfcc").get_to(t.mfcc);
  if (j.contains("kmeans")) j.at("kmeans").get_to(t.kmeans);
  if (j.contains("layer") && !j.at("layer").is_null())
    t.layer = j.at("layer").get<int>();
  if (j.contains("align_cnn") && !j.at("align_cnn").is_null())
    t.align_cnn = j.at("align_cnn").get<CnnSpec>();
}

void to_json(nlohmann::json& j, const IterationSpec& s) {
  j = nlohmann::json{
      {"index", s.index},
      {"name", s.dir_name()},
      {"student", s.student},
      {"init", s.init == InitStrategy::kRandom ? "random" : "blocked_average"},
      {"targets", s.targets},
      {"train", s.train},
      {"manifest", s.manifest}};
}
void from_json(const nlohmann::json& j, IterationSpec& s) {
  s.index = j.at("index").get<int>();
  s.name = j.value("name", std::string());
  if (j.contains("student")) j.at("student").get_to(s.student);
  const std::string init = j.value("init", std::string("random"));
  if (init == "random") s.init = InitStrategy::kRandom;
  else if (init == "blocked_average") s.init = InitStrategy::kBlockedAverage;
  else throw std::invalid_argument("schedule: unknown init strategy '" + init + "'");
  if (j.contains("targets")) j.at("targets").get_to(s.targets);
  if (j.contains("train")) j.at("train").get_to(s.train);
  s.manifest = j.value("manifest", std::string());
}

void to_json(nlohmann::json& j, const Schedule& s) {
  j = nlohmann::json{{"iterations", s.iterations}};
}
void from_json(const nlohmann::json& j, Schedule& s) {
  s.iterations.clear();
  for (const auto& it : j.at("iterations")) s.iterations.push_back(it.get<IterationSpec>());
}

}  // namespace harness
