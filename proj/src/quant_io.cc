// harness/quant_io.cc
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

#include "harness/quant_io.h"

#include <fstream>
#include <sstream>

#include "harness/container.h"

namespace harness {

namespace {

Tensor64 mat_to_tensor(const Mat& m) {
  return Tensor64({m.rows, m.cols}, m.a);
}

Mat tensor_to_mat(const Tensor64& t) {
  if (t.rank() != 2) throw CheckpointError("codebook: expected rank-2 tensor");
  Mat m(t.shape[0], t.shape[1]);
  m.a = t.data;
  return m;
}

}  // namespace

void save_codebook(const std::string& path, const Codebook& cb) {
  Container c;
  c.config = nlohmann::json{{"kind", "codebook"},
                            {"k", cb.k()},
                            {"dim", cb.dim()},
                            {"has_pca", cb.pca.has_value()},
                            {"inertia_history", cb.inertia_history}};
  c.tensors.push_back(NamedTensor::from("centroids", mat_to_tensor(cb.centroids)));
  if (cb.pca) {
    c.tensors.push_back(NamedTensor::from(
        "pca.mean", Tensor64({cb.pca->mean.size()}, cb.pca->mean)));
    c.tensors.push_back(
        NamedTensor::from("pca.components", mat_to_tensor(cb.pca->components)));
    c.tensors.push_back(NamedTensor::from(
        "pca.explained_variance",
        Tensor64({cb.pca->explained_variance.size()}, cb.pca->explained_variance)));
  }
  write_container(path, c);
}

Codebook load_codebook(const std::string& path) {
  Container c = read_container(path);
  if (c.config.value("kind", "") != "codebook")
    throw CheckpointError("codebook: not a codebook file: " + path);
  Codebook cb;
  cb.centroids = tensor_to_mat(c.require("centroids").as_f64());
  cb.inertia_history =
      c.config.value("inertia_history", std::vector<double>{});
  if (c.config.value("has_pca", false)) {
    PcaTransform t;
    t.mean = c.require("pca.mean").as_f64().data;
    t.components = tensor_to_mat(c.require("pca.components").as_f64());
    t.explained_variance = c.require("pca.explained_variance").as_f64().data;
    cb.pca = std::move(t);
  }
  if (cb.k() != c.config.value("k", cb.k()) || cb.dim() != c.config.value("dim", cb.dim()))
    throw CheckpointError("codebook: config disagrees with centroid shape: " + path);
  return cb;
}

void save_features(const std::string& path, const FeatureSequence& f,
                   const std::string& utt_id, const std::string& input_hash) {
  Container c;
  c.config = nlohmann::json{{"kind", "features"},
                            {"utt_id", utt_id},
                            {"frames", f.num_frames},
                            {"dim", f.dim},
                            {"frame_rate", f.frame_rate},
                            {"source", feature_source_name(f.source, f.source_layer)},
                            {"input_hash", input_hash}};
  c.tensors.push_back(NamedTensor::from(
      "features", Tensor32({f.num_frames, f.dim}, f.data)));
  write_container(path, c);
}

FeatureSequence load_features(const std::string& path, std::string* utt_id,
                              std::string* input_hash) {
  Container c = read_container(path);
  if (c.config.value("kind", "") != "features")
    throw CheckpointError("features: not a feature file: " + path);
  const NamedTensor& t = c.require("features");
  if (t.shape.size() != 2) throw CheckpointError("features: bad tensor rank: " + path);
  FeatureSequence f;
  f.num_frames = t.shape[0];
  f.dim = t.shape[1];
  f.data = t.as_f32().data;
  f.frame_rate = c.config.value("frame_rate", 100.0);
  if (utt_id) *utt_id = c.config.value("utt_id", "");
  if (input_hash) *input_hash = c.config.value("input_hash", "");
  return f;
}

void save_labels(const std::string& path, const PseudoLabelSeq& labels) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("labels: cannot write " + path);
  for (size_t i = 0; i < labels.labels.size(); ++i) {
    if (i) f << ' ';
    f << labels.labels[i];
  }
  f << '\n';
  if (!f) throw std::runtime_error("labels: short write to " + path);
}

PseudoLabelSeq load_labels(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("labels: cannot open " + path);
  PseudoLabelSeq out;
  std::string line;
  std::getline(f, line);
  std::istringstream is(line);
  int32_t v;
  while (is >> v) out.labels.push_back(v);
  return out;
}

}  // namespace harness
