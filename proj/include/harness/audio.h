// harness/audio.h
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

#ifndef HARNESS_AUDIO_H_
#define HARNESS_AUDIO_H_

#include "harness/wav.h"

namespace harness {

// Resample-style speed change (sox "speed" semantics: pitch shifts with
// speed, sample rate unchanged). Output has round(len/factor) samples taken
// by linear interpolation at fractional positions i*factor.
// factor must be in [0.5, 2.0]; factor 1.0 returns the input unchanged.
Waveform speed_perturb(const Waveform& w, double factor);

// Mixes `noise` into `w` at the given SNR: out = w + g*noise with
// g = sqrt(P_w / (P_noise * 10^(snr_db/10))). Noise is tiled or truncated to
// the signal length; the result is clipped to [-1, 1].
Waveform add_noise(const Waveform& w, const Waveform& noise, double snr_db);

// Linear-interpolation resampling to a new rate (used behind the CLI's
// --resample flag; features reject non-16 kHz input otherwise).
Waveform resample(const Waveform& w, int new_rate);

}  // namespace harness

#endif  // HARNESS_AUDIO_H_
