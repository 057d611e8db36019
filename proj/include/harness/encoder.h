// harness/encoder.h
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

#ifndef HARNESS_ENCODER_H_
#define HARNESS_ENCODER_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "harness/autodiff.h"
#include "harness/features.h"
#include "harness/graph.h"
#include "harness/rng.h"
#include "harness/tensor.h"
#include "harness/wav.h"

namespace harness {

// Temporal CNN front-end: 7 strided convolutions, 320x total downsampling at
// the defaults (20 ms frames at 16 kHz).
struct CnnSpec {
  std::vector<int> strides{5, 2, 2, 2, 2, 2, 2};
  std::vector<int> kernels{10, 3, 3, 3, 3, 2, 2};
  int channels = 512;
  bool group_norm_first_layer = true;

  void validate() const;
  bool operator==(const CnnSpec&) const = default;
};

enum class HeadMode { kCosine, kPlainLinear };

struct EncoderConfig {
  CnnSpec cnn;
  int depth = 24;        // transformer layers
  int emb_dim = 1024;
  int ffn_dim = 4096;
  int num_heads = 16;
  int proj_dim = 768;
  int num_clusters = 1000;
  int pos_conv_kernel = 128;
  int pos_conv_groups = 16;
  double dropout = 0.1;
  HeadMode head = HeadMode::kCosine;
  double cosine_temperature = 0.1;

  void validate() const;
  int head_dim() const { return emb_dim / num_heads; }
  bool operator==(const EncoderConfig&) const = default;

  // "h-l", "h-s", "h-st": the large teacher and the two student geometries.
  static EncoderConfig preset(const std::string& name);
};

void to_json(nlohmann::json& j, const CnnSpec& s);
void from_json(const nlohmann::json& j, CnnSpec& s);
void to_json(nlohmann::json& j, const EncoderConfig& c);
void from_json(const nlohmann::json& j, EncoderConfig& c);

// Frames produced by the CNN stack for a given sample count:
// L' = floor((L - kernel)/stride) + 1 per layer, in order.
// Throws if the input is shorter than the receptive-field minimum.
int64_t cnn_output_length(int64_t num_samples, const CnnSpec& spec);

// Smallest sample count for which the CNN yields one frame.
int64_t cnn_min_samples(const CnnSpec& spec);

// Name -> shape of every learnable tensor, fixed by config alone, in
// serialization order.
std::vector<std::pair<std::string, std::vector<size_t>>> param_shapes(
    const EncoderConfig& cfg);

// Xavier-uniform init for matrices/convs, ones/zeros for norms, zeros for
// biases; deterministic per seed.
ParamMap32 init_params(const EncoderConfig& cfg, uint64_t seed);

// Exact number of scalars in ModelParams for this config.
int64_t count_params(const EncoderConfig& cfg);

struct ForwardOptions {
  const std::vector<int32_t>* mask = nullptr;  // frame indices to replace
  bool train_mode = false;                     // enables dropout (needs rng)
  Rng* rng = nullptr;
  bool need_grads = true;
};

template <typename T>
struct ForwardGraphResult {
  std::vector<Tensor<T>> layer_outputs;  // d+1: post-CNN (after mask) + each layer
  typename Graph<T>::Value logits;       // T x K
};

// The full model on a caller-owned graph: CNN -> projection -> mask
// substitution -> positional conv -> pre-LN transformer stack -> projection
// head -> logits over K clusters. Composable with further graph ops (the
// training loss) and with finite_diff_check loss builders.
template <typename T>
ForwardGraphResult<T> encoder_forward_on(Graph<T>& g, const ValueMap<T>& params,
                                         const EncoderConfig& cfg,
                                         const std::vector<float>& samples,
                                         const ForwardOptions& opt);

template <typename T>
struct ForwardPass {
  Graph<T> graph;
  ValueMap<T> param_values;
  std::vector<Tensor<T>> layer_outputs;
  typename Graph<T>::Value logits;
};

// Convenience wrapper owning the graph and the parameter inputs.
template <typename T>
ForwardPass<T> encoder_forward(const ParamMap<T>& params, const EncoderConfig& cfg,
                               const std::vector<float>& samples,
                               const ForwardOptions& opt);

// Eval-mode forward returning plain tensors (deterministic, no dropout).
struct EncodeResult {
  std::vector<Tensor32> layer_outputs;
  Tensor32 logits;
};
EncodeResult encode(const ParamMap32& params, const EncoderConfig& cfg,
                    const Waveform& wave,
                    const std::vector<int32_t>* mask = nullptr);

// Checkpoint persistence (HRNS container; see container.h). load verifies
// that stored tensors match the shapes derived from the stored config.
void save_checkpoint(const std::string& path, const ParamMap32& params,
                     const EncoderConfig& cfg);
std::pair<ParamMap32, EncoderConfig> load_checkpoint(const std::string& path);

}  // namespace harness

#endif  // HARNESS_ENCODER_H_
