// harness/audio.cc
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

#include "harness/audio.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace harness {

namespace {

// Linear interpolation at fractional position; positions past the last
// sample clamp to it.
float interp_at(const std::vector<float>& s, double pos) {
  if (s.empty()) return 0.0f;
  if (pos <= 0) return s.front();
  const size_t i = static_cast<size_t>(pos);
  if (i + 1 >= s.size()) return s.back();
  const double frac = pos - static_cast<double>(i);
  return static_cast<float>(s[i] + (s[i + 1] - s[i]) * frac);
}

}  // namespace

Waveform speed_perturb(const Waveform& w, double factor) {
  if (!(factor >= 0.5 && factor <= 2.0))
    throw std::invalid_argument("speed_perturb: factor must be in [0.5, 2.0]");
  if (factor == 1.0) return w;
  Waveform out;
  out.sample_rate = w.sample_rate;
  const size_t n = static_cast<size_t>(
      std::llround(static_cast<double>(w.samples.size()) / factor));
  out.samples.resize(n);
  for (size_t i = 0; i < n; ++i)
    out.samples[i] = interp_at(w.samples, static_cast<double>(i) * factor);
  return out;
}

Waveform add_noise(const Waveform& w, const Waveform& noise, double snr_db) {
  if (w.sample_rate != noise.sample_rate)
    throw std::invalid_argument("add_noise: sample-rate mismatch");
  const double p_w = w.power();
  const double p_n = noise.power();
  if (p_n <= 0) throw std::invalid_argument("add_noise: zero-power noise");
  if (p_w <= 0) throw std::invalid_argument("add_noise: zero-power signal (snr undefined)");
  const double g = std::sqrt(p_w / (p_n * std::pow(10.0, snr_db / 10.0)));
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.resize(w.samples.size());
  const size_t nn = noise.samples.size();
  for (size_t i = 0; i < w.samples.size(); ++i) {
    const double v = w.samples[i] + g * noise.samples[i % nn];  // tiled
    out.samples[i] = static_cast<float>(std::clamp(v, -1.0, 1.0));
  }
  return out;
}

Waveform resample(const Waveform& w, int new_rate) {
  if (new_rate <= 0) throw std::invalid_argument("resample: rate must be positive");
  if (new_rate == w.sample_rate) return w;
  Waveform out;
  out.sample_rate = new_rate;
  const double ratio = static_cast<double>(w.sample_rate) / new_rate;
  const size_t n = static_cast<size_t>(
      std::llround(static_cast<double>(w.samples.size()) / ratio));
  out.samples.resize(n);
  for (size_t i = 0; i < n; ++i)
    out.samples[i] = interp_at(w.samples, static_cast<double>(i) * ratio);
  return out;
}

}  // namespace harness
