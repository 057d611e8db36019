// harness/encoder.cc
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

#include "harness/encoder.h"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "harness/container.h"

namespace harness {

namespace {

std::string layer_prefix(int l) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "layer.%02d.", l);
  return buf;
}

}  // namespace

void CnnSpec::validate() const {
  if (strides.empty() || strides.size() != kernels.size())
    throw std::invalid_argument("cnn: strides/kernels must be equal-length and non-empty");
  for (size_t i = 0; i < strides.size(); ++i) {
    if (strides[i] < 1) throw std::invalid_argument("cnn: strides must be >= 1");
    if (kernels[i] < strides[i])
      throw std::invalid_argument("cnn: kernel must be >= stride per layer");
  }
  if (channels < 1) throw std::invalid_argument("cnn: channels must be >= 1");
}

void EncoderConfig::validate() const {
  cnn.validate();
  if (depth < 1) throw std::invalid_argument("encoder: depth must be >= 1");
  if (emb_dim < 1 || ffn_dim < 1 || proj_dim < 1)
    throw std::invalid_argument("encoder: dims must be >= 1");
  if (num_heads < 1 || emb_dim % num_heads != 0)
    throw std::invalid_argument("encoder: emb_dim (" + std::to_string(emb_dim) +
                                ") must be divisible by num_heads (" +
                                std::to_string(num_heads) + ")");
  if (num_clusters < 2) throw std::invalid_argument("encoder: num_clusters must be >= 2");
  if (pos_conv_kernel < 1 || pos_conv_groups < 1 || emb_dim % pos_conv_groups != 0)
    throw std::invalid_argument("encoder: pos conv groups must divide emb_dim");
  if (!(dropout >= 0.0 && dropout < 1.0))
    throw std::invalid_argument("encoder: dropout must be in [0, 1)");
  if (head == HeadMode::kCosine && !(cosine_temperature > 0))
    throw std::invalid_argument("encoder: cosine temperature must be > 0");
}

EncoderConfig EncoderConfig::preset(const std::string& name) {
  EncoderConfig c;  // defaults are H-L
  if (name == "h-l") {
    return c;
  } else if (name == "h-s") {
    c.depth = 4;
    c.ffn_dim = 2048;
    return c;
  } else if (name == "h-st") {
    c.depth = 4;
    c.emb_dim = 512;
    c.ffn_dim = 2048;
    return c;
  }
  throw std::invalid_argument("encoder: unknown preset '" + name +
                              "' (expected h-l, h-s or h-st)");
}

void to_json(nlohmann::json& j, const CnnSpec& s) {
  j = nlohmann::json{{"strides", s.strides},
                     {"kernels", s.kernels},
                     {"channels", s.channels},
                     {"group_norm_first_layer", s.group_norm_first_layer}};
}

void from_json(const nlohmann::json& j, CnnSpec& s) {
  CnnSpec d;
  s.strides = j.value("strides", d.strides);
  s.kernels = j.value("kernels", d.kernels);
  s.channels = j.value("channels", d.channels);
  s.group_norm_first_layer = j.value("group_norm_first_layer", d.group_norm_first_layer);
}

void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j = nlohmann::json{
      {"cnn", c.cnn},
      {"depth", c.depth},
      {"emb_dim", c.emb_dim},
      {"ffn_dim", c.ffn_dim},
      {"num_heads", c.num_heads},
      {"proj_dim", c.proj_dim},
      {"num_clusters", c.num_clusters},
      {"pos_conv_kernel", c.pos_conv_kernel},
      {"pos_conv_groups", c.pos_conv_groups},
      {"dropout", c.dropout},
      {"head", c.head == HeadMode::kCosine ? "cosine" : "plain_linear"},
      {"cosine_temperature", c.cosine_temperature}};
}

void from_json(const nlohmann::json& j, EncoderConfig& c) {
  EncoderConfig d;
  if (j.contains("preset")) c = EncoderConfig::preset(j.at("preset").get<std::string>());
  else c = d;
  if (j.contains("cnn")) j.at("cnn").get_to(c.cnn);
  c.depth = j.value("depth", c.depth);
  c.emb_dim = j.value("emb_dim", c.emb_dim);
  c.ffn_dim = j.value("ffn_dim", c.ffn_dim);
  c.num_heads = j.value("num_heads", c.num_heads);
  c.proj_dim = j.value("proj_dim", c.proj_dim);
  c.num_clusters = j.value("num_clusters", c.num_clusters);
  c.pos_conv_kernel = j.value("pos_conv_kernel", c.pos_conv_kernel);
  c.pos_conv_groups = j.value("pos_conv_groups", c.pos_conv_groups);
  c.dropout = j.value("dropout", c.dropout);
  const std::string head = j.value("head", std::string("cosine"));
  if (head == "cosine") c.head = HeadMode::kCosine;
  else if (head == "plain_linear") c.head = HeadMode::kPlainLinear;
  else throw std::invalid_argument("encoder: unknown head mode '" + head + "'");
  c.cosine_temperature = j.value("cosine_temperature", c.cosine_temperature);
}

int64_t cnn_output_length(int64_t num_samples, const CnnSpec& spec) {
  spec.validate();
  int64_t len = num_samples;
  for (size_t i = 0; i < spec.strides.size(); ++i) {
    if (len < spec.kernels[i])
      throw std::invalid_argument(
          "cnn_output_length: input too short (" + std::to_string(num_samples) +
          " samples; need at least " + std::to_string(cnn_min_samples(spec)) + ")");
    len = (len - spec.kernels[i]) / spec.strides[i] + 1;
  }
  return len;
}

int64_t cnn_min_samples(const CnnSpec& spec) {
  // invert the length recurrence for a single output frame
  int64_t len = 1;
  for (size_t i = spec.strides.size(); i-- > 0;)
    len = (len - 1) * spec.strides[i] + spec.kernels[i];
  return len;
}

std::vector<std::pair<std::string, std::vector<size_t>>> param_shapes(
    const EncoderConfig& cfg) {
  cfg.validate();
  std::vector<std::pair<std::string, std::vector<size_t>>> out;
  const size_t C = cfg.cnn.channels;
  const size_t E = cfg.emb_dim;
  const size_t F = cfg.ffn_dim;
  const size_t P = cfg.proj_dim;
  const size_t K = cfg.num_clusters;

  for (size_t i = 0; i < cfg.cnn.strides.size(); ++i) {
    const size_t cin = (i == 0) ? 1 : C;
    const std::string p = "cnn." + std::to_string(i) + ".";
    const bool normed = i == 0 && cfg.cnn.group_norm_first_layer;
    out.push_back({p + "weight", {C, cin, static_cast<size_t>(cfg.cnn.kernels[i])}});
    // a conv bias immediately before the channel norm is absorbed by it
    if (!normed) out.push_back({p + "bias", {C}});
    if (normed) {
      out.push_back({p + "norm.gamma", {C}});
      out.push_back({p + "norm.beta", {C}});
    }
  }
  out.push_back({"post.norm.gamma", {C}});
  out.push_back({"post.norm.beta", {C}});
  out.push_back({"post.proj.weight", {E, C}});
  out.push_back({"post.proj.bias", {E}});
  out.push_back({"mask_embedding", {E}});
  out.push_back({"pos_conv.weight",
                 {E, E / cfg.pos_conv_groups, static_cast<size_t>(cfg.pos_conv_kernel)}});
  out.push_back({"pos_conv.bias", {E}});
  for (int l = 0; l < cfg.depth; ++l) {
    const std::string p = layer_prefix(l);
    out.push_back({p + "norm1.gamma", {E}});
    out.push_back({p + "norm1.beta", {E}});
    for (const char* name : {"q", "k", "v", "out"}) {
      out.push_back({p + "attn." + std::string(name) + ".weight", {E, E}});
      // a key bias shifts every score in a row equally and cancels in softmax
      if (std::string(name) != "k")
        out.push_back({p + "attn." + std::string(name) + ".bias", {E}});
    }
    out.push_back({p + "norm2.gamma", {E}});
    out.push_back({p + "norm2.beta", {E}});
    out.push_back({p + "ffn.in.weight", {F, E}});
    out.push_back({p + "ffn.in.bias", {F}});
    out.push_back({p + "ffn.out.weight", {E, F}});
    out.push_back({p + "ffn.out.bias", {E}});
  }
  out.push_back({"final.norm.gamma", {E}});
  out.push_back({"final.norm.beta", {E}});
  out.push_back({"head.proj.weight", {P, E}});
  out.push_back({"head.proj.bias", {P}});
  if (cfg.head == HeadMode::kCosine) {
    out.push_back({"head.labels", {K, P}});
  } else {
    out.push_back({"head.out.weight", {K, P}});
    out.push_back({"head.out.bias", {K}});
  }
  return out;
}

ParamMap32 init_params(const EncoderConfig& cfg, uint64_t seed) {
  Rng rng(seed);
  ParamMap32 params;
  for (const auto& [name, shape] : param_shapes(cfg)) {
    Tensor32 t(shape);
    const bool is_norm = name.find("norm.") != std::string::npos ||
                         name.find("norm1.") != std::string::npos ||
                         name.find("norm2.") != std::string::npos;
    if (is_norm) {
      const bool gamma = name.size() >= 5 && name.substr(name.size() - 5) == "gamma";
      std::fill(t.data.begin(), t.data.end(), gamma ? 1.0f : 0.0f);
    } else if (name.size() >= 4 && name.substr(name.size() - 4) == "bias") {
      // zeros
    } else {
      double fan_in, fan_out;
      if (shape.size() == 3) {  // conv (cout, cin_per_group, k)
        fan_in = static_cast<double>(shape[1] * shape[2]);
        fan_out = static_cast<double>(shape[0] * shape[2]);
      } else if (shape.size() == 2) {  // (out, in)
        fan_in = static_cast<double>(shape[1]);
        fan_out = static_cast<double>(shape[0]);
      } else {  // vectors (mask embedding)
        fan_in = fan_out = static_cast<double>(t.numel());
      }
      const double a = std::sqrt(6.0 / (fan_in + fan_out));
      for (auto& v : t.data) v = static_cast<float>(rng.uniform(-a, a));
    }
    params.emplace(name, std::move(t));
  }
  return params;
}

int64_t count_params(const EncoderConfig& cfg) {
  int64_t n = 0;
  for (const auto& [name, shape] : param_shapes(cfg))
    n += static_cast<int64_t>(Tensor32::numel_of(shape));
  return n;
}

template <typename T>
ForwardGraphResult<T> encoder_forward_on(Graph<T>& g, const ValueMap<T>& params,
                                         const EncoderConfig& cfg,
                                         const std::vector<float>& samples,
                                         const ForwardOptions& opt) {
  cfg.validate();
  if (samples.empty()) throw std::invalid_argument("forward: empty waveform");
  if (opt.train_mode && cfg.dropout > 0 && opt.rng == nullptr)
    throw std::invalid_argument("forward: train mode with dropout needs an rng");
  const int64_t T_frames = cnn_output_length(static_cast<int64_t>(samples.size()), cfg.cnn);
  if (opt.mask) {
    for (int32_t t : *opt.mask)
      if (t < 0 || t >= T_frames)
        throw std::invalid_argument("forward: mask index " + std::to_string(t) +
                                    " out of range [0, " + std::to_string(T_frames) + ")");
  }

  ForwardGraphResult<T> fp;
  using Value = typename Graph<T>::Value;
  auto P = [&](const std::string& name) -> Value {
    auto it = params.find(name);
    if (it == params.end())
      throw std::invalid_argument("forward: missing parameter '" + name + "'");
    return it->second;
  };
  auto linear = [&](Value x, const std::string& prefix) {
    return g.add_rowvec(g.matmul_nt(x, P(prefix + ".weight")), P(prefix + ".bias"));
  };
  const bool use_dropout = opt.train_mode && cfg.dropout > 0;
  auto dropout = [&](Value x) {
    if (!use_dropout) return x;
    return g.mul(x, g.input(dropout_mask<T>(g.val(x).shape, cfg.dropout, *opt.rng)));
  };

  // CNN front-end
  Tensor<T> wave_in({1, samples.size()});
  for (size_t i = 0; i < samples.size(); ++i)
    wave_in.data[i] = static_cast<T>(samples[i]);
  Value x = g.input(std::move(wave_in));
  for (size_t i = 0; i < cfg.cnn.strides.size(); ++i) {
    const std::string p = "cnn." + std::to_string(i) + ".";
    const bool normed = i == 0 && cfg.cnn.group_norm_first_layer;
    Value bias = normed ? Value{} : P(p + "bias");
    x = g.conv1d(x, P(p + "weight"), bias, cfg.cnn.strides[i], 0, 1);
    if (normed)
      x = g.group_norm(x, P(p + "norm.gamma"), P(p + "norm.beta"), cfg.cnn.channels,
                       static_cast<T>(1e-5));
    x = g.gelu(x);
  }

  // to frames: (T x C) -> layer norm -> project to emb_dim
  Value h = g.transpose(x);
  h = g.layer_norm(h, P("post.norm.gamma"), P("post.norm.beta"), static_cast<T>(1e-5));
  h = linear(h, "post.proj");
  h = dropout(h);
  if (opt.mask && !opt.mask->empty())
    h = g.replace_rows(h, P("mask_embedding"), *opt.mask);
  fp.layer_outputs.push_back(g.val(h));

  // convolutional relative positional embedding
  {
    const int k = cfg.pos_conv_kernel;
    Value p = g.transpose(h);  // (E x T)
    p = g.conv1d(p, P("pos_conv.weight"), P("pos_conv.bias"), 1, k / 2,
                 cfg.pos_conv_groups);
    // even kernel with k/2 padding yields one extra frame; drop it
    if (k % 2 == 0) p = g.slice_cols(p, 0, static_cast<size_t>(T_frames));
    p = g.gelu(p);
    h = g.add(h, g.transpose(p));
  }

  // pre-LN transformer stack
  const int H = cfg.num_heads;
  const size_t dh = static_cast<size_t>(cfg.head_dim());
  const T inv_sqrt_dh = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  for (int l = 0; l < cfg.depth; ++l) {
    const std::string p = layer_prefix(l);
    Value r = g.layer_norm(h, P(p + "norm1.gamma"), P(p + "norm1.beta"),
                           static_cast<T>(1e-5));
    Value q = linear(r, p + "attn.q");
    Value kk = g.matmul_nt(r, P(p + "attn.k.weight"));  // no key bias
    Value v = linear(r, p + "attn.v");
    std::vector<Value> heads;
    heads.reserve(H);
    for (int hd = 0; hd < H; ++hd) {
      Value qh = g.slice_cols(q, hd * dh, dh);
      Value kh = g.slice_cols(kk, hd * dh, dh);
      Value vh = g.slice_cols(v, hd * dh, dh);
      Value s = g.scale(g.matmul_nt(qh, kh), inv_sqrt_dh);
      Value a = g.softmax_rows(s);
      heads.push_back(g.matmul(a, vh));
    }
    Value o = g.concat_cols(heads);
    o = linear(o, p + "attn.out");
    o = dropout(o);
    h = g.add(h, o);

    Value r2 = g.layer_norm(h, P(p + "norm2.gamma"), P(p + "norm2.beta"),
                            static_cast<T>(1e-5));
    Value f = g.gelu(linear(r2, p + "ffn.in"));
    f = linear(f, p + "ffn.out");
    f = dropout(f);
    h = g.add(h, f);
    fp.layer_outputs.push_back(g.val(h));
  }

  // prediction head
  Value hf = g.layer_norm(h, P("final.norm.gamma"), P("final.norm.beta"),
                          static_cast<T>(1e-5));
  Value proj = linear(hf, "head.proj");
  if (cfg.head == HeadMode::kCosine) {
    Value pn = g.l2norm_rows(proj, static_cast<T>(1e-8));
    Value en = g.l2norm_rows(P("head.labels"), static_cast<T>(1e-8));
    fp.logits = g.scale(g.matmul_nt(pn, en), static_cast<T>(1.0 / cfg.cosine_temperature));
  } else {
    fp.logits = linear(proj, "head.out");
  }
  return fp;
}

template <typename T>
ForwardPass<T> encoder_forward(const ParamMap<T>& params, const EncoderConfig& cfg,
                               const std::vector<float>& samples,
                               const ForwardOptions& opt) {
  ForwardPass<T> fp;
  for (const auto& [name, tensor] : params)
    fp.param_values.emplace(name, fp.graph.input(tensor, opt.need_grads));
  ForwardGraphResult<T> r =
      encoder_forward_on(fp.graph, fp.param_values, cfg, samples, opt);
  fp.layer_outputs = std::move(r.layer_outputs);
  fp.logits = r.logits;
  return fp;
}

template ForwardGraphResult<float> encoder_forward_on<float>(
    Graph<float>&, const ValueMap<float>&, const EncoderConfig&,
    const std::vector<float>&, const ForwardOptions&);
template ForwardGraphResult<double> encoder_forward_on<double>(
    Graph<double>&, const ValueMap<double>&, const EncoderConfig&,
    const std::vector<float>&, const ForwardOptions&);
template ForwardPass<float> encoder_forward<float>(const ParamMap<float>&,
                                                   const EncoderConfig&,
                                                   const std::vector<float>&,
                                                   const ForwardOptions&);
template ForwardPass<double> encoder_forward<double>(const ParamMap<double>&,
                                                     const EncoderConfig&,
                                                     const std::vector<float>&,
                                                     const ForwardOptions&);

EncodeResult encode(const ParamMap32& params, const EncoderConfig& cfg,
                    const Waveform& wave, const std::vector<int32_t>* mask) {
  ForwardOptions opt;
  opt.mask = mask;
  opt.train_mode = false;
  opt.need_grads = false;
  auto fp = encoder_forward<float>(params, cfg, wave.samples, opt);
  EncodeResult r;
  r.layer_outputs = std::move(fp.layer_outputs);
  r.logits = fp.graph.val(fp.logits);
  return r;
}

void save_checkpoint(const std::string& path, const ParamMap32& params,
                     const EncoderConfig& cfg) {
  Container c;
  c.config = nlohmann::json{{"kind", "model"}, {"encoder", cfg}};
  for (const auto& [name, shape] : param_shapes(cfg)) {
    auto it = params.find(name);
    if (it == params.end())
      throw CheckpointError("checkpoint: params missing tensor '" + name + "'");
    if (it->second.shape != shape)
      throw CheckpointError("checkpoint: tensor '" + name + "' has shape " +
                            shape_str(it->second) + ", config requires different shape");
    if (!it->second.all_finite())
      throw CheckpointError("checkpoint: tensor '" + name + "' contains non-finite values");
    c.tensors.push_back(NamedTensor::from(name, it->second));
  }
  write_container(path, c);
}

std::pair<ParamMap32, EncoderConfig> load_checkpoint(const std::string& path) {
  Container c = read_container(path);
  if (c.config.value("kind", "") != "model")
    throw CheckpointError("checkpoint: not a model checkpoint: " + path);
  EncoderConfig cfg = c.config.at("encoder").get<EncoderConfig>();
  ParamMap32 params;
  auto shapes = param_shapes(cfg);
  if (shapes.size() != c.tensors.size())
    throw CheckpointError("checkpoint: tensor count " + std::to_string(c.tensors.size()) +
                          " does not match config (" + std::to_string(shapes.size()) +
                          "): " + path);
  for (const auto& [name, shape] : shapes) {
    const NamedTensor& t = c.require(name);
    if (t.shape != shape)
      throw CheckpointError("checkpoint: tensor '" + name +
                            "' disagrees with config shape in " + path);
    params.emplace(name, t.as_f32());
  }
  return {std::move(params), cfg};
}

}  // namespace harness
