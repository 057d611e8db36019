// harness/features.h
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

#ifndef HARNESS_FEATURES_H_
#define HARNESS_FEATURES_H_

#include <string>
#include <vector>

#include "harness/wav.h"

namespace harness {

enum class FeatureSource { kMfcc, kEncoderLayer, kLayerAverage };

std::string feature_source_name(FeatureSource s, int layer);

// T x D frame matrix, row-major.
struct FeatureSequence {
  size_t num_frames = 0;
  size_t dim = 0;
  std::vector<float> data;
  double frame_rate = 100.0;  // frames per second
  FeatureSource source = FeatureSource::kMfcc;
  int source_layer = -1;  // valid for kEncoderLayer

  float& at(size_t t, size_t d) { return data[t * dim + d]; }
  const float& at(size_t t, size_t d) const { return data[t * dim + d]; }
  const float* row(size_t t) const { return &data[t * dim]; }
};

struct MfccConfig {
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int n_mels = 23;
  int n_ceps = 13;      // C0 is the first coefficient
  int delta_window = 2;
  double preemphasis = 0.97;
  double log_floor = 1e-10;

  void validate() const;
  int window_samples(int sample_rate) const;
  int hop_samples(int sample_rate) const;
};

// Static MFCCs: pre-emphasis, Hann window, magnitude FFT, mel filterbank,
// log, DCT-II keeping n_ceps coefficients. T = floor((N - window)/hop) + 1.
// Requires 16 kHz input (resample upstream first) and at least one full
// window of samples.
FeatureSequence mfcc(const Waveform& w, const MfccConfig& cfg);

// Appends first- and second-order regression deltas (edge replication);
// output dim = 3 * input dim.
FeatureSequence deltas(const FeatureSequence& f, int window);

// mfcc + deltas at cfg defaults: the 39-dim bootstrap features.
FeatureSequence mfcc_with_deltas(const Waveform& w, const MfccConfig& cfg);

// Radix-2 FFT helper (n must be a power of two). Exposed for tests.
void fft_inplace(std::vector<double>& re, std::vector<double>& im);

}  // namespace harness

#endif  // HARNESS_FEATURES_H_
