// harness/wav.h
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

#ifndef HARNESS_WAV_H_
#define HARNESS_WAV_H_

#include <stdexcept>
#include <string>
#include <vector>

namespace harness {

// Mono PCM audio. Samples are in [-1, 1]: clipped on write, asserted on read.
struct Waveform {
  std::vector<float> samples;
  int sample_rate = 16000;

  size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
  // Mean squared sample value.
  double power() const;
};

struct WavError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Reads a RIFF/WAVE file. Only 16-bit PCM mono is accepted; each failure
// mode (corrupt header, non-PCM encoding, channel count, bit depth,
// truncated data chunk) is reported distinctly. Samples are scaled by
// 1/32768.
Waveform load_wav(const std::string& path);

// Writes 16-bit PCM mono; samples clipped to [-1, 1] before quantization.
void save_wav(const std::string& path, const Waveform& w);

}  // namespace harness

#endif  // HARNESS_WAV_H_
