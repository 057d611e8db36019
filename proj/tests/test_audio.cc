// tests/test_audio.cc
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

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "harness/audio.h"
#include "harness/features.h"
#include "harness/rng.h"
#include "harness/wav.h"

using namespace harness;
namespace fs = std::filesystem;

namespace {

std::string tmp_path(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "harness_test_audio";
  fs::create_directories(dir);
  return (dir / name).string();
}

Waveform tone(double freq, double seconds, int rate = 16000, double amp = 0.5) {
  Waveform w;
  w.sample_rate = rate;
  const size_t n = static_cast<size_t>(seconds * rate);
  w.samples.resize(n);
  for (size_t i = 0; i < n; ++i)
    w.samples[i] = static_cast<float>(amp * std::sin(2.0 * M_PI * freq * i / rate));
  return w;
}

}  // namespace

TEST_CASE("wav: 1 second mono file round-trips with 16000 samples") {
  const std::string path = tmp_path("one_sec.wav");
  save_wav(path, tone(440.0, 1.0));
  Waveform w = load_wav(path);
  CHECK(w.samples.size() == 16000);
  CHECK(w.sample_rate == 16000);
  for (float v : w.samples) {
    CHECK(std::isfinite(v));
    CHECK(std::fabs(v) <= 1.0f);
  }
}

TEST_CASE("wav: quantization round trip is within one LSB") {
  const std::string path = tmp_path("rt.wav");
  Waveform in = tone(313.0, 0.25);
  save_wav(path, in);
  Waveform out = load_wav(path);
  REQUIRE(out.samples.size() == in.samples.size());
  for (size_t i = 0; i < in.samples.size(); ++i)
    CHECK(std::fabs(out.samples[i] - in.samples[i]) <= 1.5f / 32768.0f);
}

TEST_CASE("wav: stereo file rejected with channel-count error") {
  // hand-built 2-channel header
  const std::string path = tmp_path("stereo.wav");
  std::string bytes;
  auto u32 = [&](uint32_t v) { for (int i = 0; i < 4; ++i) bytes.push_back(char((v >> (8*i)) & 0xff)); };
  auto u16 = [&](uint16_t v) { for (int i = 0; i < 2; ++i) bytes.push_back(char((v >> (8*i)) & 0xff)); };
  bytes += "RIFF"; u32(36 + 8); bytes += "WAVE";
  bytes += "fmt "; u32(16); u16(1); u16(2); u32(16000); u32(64000); u16(4); u16(16);
  bytes += "data"; u32(8); for (int i = 0; i < 8; ++i) bytes.push_back(0);
  std::ofstream(path, std::ios::binary) << bytes;
  CHECK_THROWS_WITH_AS(load_wav(path), doctest::Contains("channel count"), WavError);
}

TEST_CASE("wav: truncated data chunk reported distinctly") {
  const std::string path = tmp_path("trunc.wav");
  save_wav(path, tone(440.0, 0.1));
  // chop the file below its declared data size
  std::string bytes;
  {
    std::ifstream f(path, std::ios::binary);
    bytes.assign((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  }
  std::ofstream(path, std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  CHECK_THROWS_WITH_AS(load_wav(path), doctest::Contains("truncated data"), WavError);
}

TEST_CASE("wav: non-PCM and garbage headers reported distinctly") {
  const std::string path = tmp_path("float.wav");
  std::string bytes;
  auto u32 = [&](uint32_t v) { for (int i = 0; i < 4; ++i) bytes.push_back(char((v >> (8*i)) & 0xff)); };
  auto u16 = [&](uint16_t v) { for (int i = 0; i < 2; ++i) bytes.push_back(char((v >> (8*i)) & 0xff)); };
  bytes += "RIFF"; u32(36); bytes += "WAVE";
  bytes += "fmt "; u32(16); u16(3) /* IEEE float */; u16(1); u32(16000); u32(64000); u16(4); u16(32);
  bytes += "data"; u32(0);
  std::ofstream(path, std::ios::binary) << bytes;
  CHECK_THROWS_WITH_AS(load_wav(path), doctest::Contains("non-PCM"), WavError);

  const std::string bad = tmp_path("bad.wav");
  std::ofstream(bad, std::ios::binary) << "this is not a wav file";
  CHECK_THROWS_WITH_AS(load_wav(bad), doctest::Contains("RIFF"), WavError);
}

TEST_CASE("speed_perturb: identity at factor 1.0, exact lengths otherwise") {
  Waveform w = tone(200.0, 1.0);
  REQUIRE(w.samples.size() == 16000);
  Waveform same = speed_perturb(w, 1.0);
  CHECK(same.samples == w.samples);
  CHECK(speed_perturb(w, 1.1).samples.size() == 14545);
  CHECK(speed_perturb(w, 0.9).samples.size() == 17778);
  CHECK_THROWS_AS(speed_perturb(w, 2.5), std::invalid_argument);
  CHECK_THROWS_AS(speed_perturb(w, 0.25), std::invalid_argument);
}

TEST_CASE("speed_perturb: length law holds across random factors") {
  Rng rng(31);
  Waveform w = tone(120.0, 0.7);
  for (int i = 0; i < 50; ++i) {
    const double f = rng.uniform(0.5, 2.0);
    CHECK(speed_perturb(w, f).samples.size() ==
          static_cast<size_t>(std::llround(w.samples.size() / f)));
  }
}

TEST_CASE("add_noise: gain follows the SNR formula") {
  Waveform sig = tone(300.0, 0.5, 16000, 0.5);
  Waveform noise = tone(77.0, 0.5, 16000, 0.25);

  SUBCASE("equal power at 0 dB means unit gain") {
    Waveform n2 = sig;  // identical power
    Waveform out = add_noise(sig, n2, 0.0);
    for (size_t i = 0; i < 100; ++i)
      CHECK(out.samples[i] == doctest::Approx(2.0 * sig.samples[i]).epsilon(1e-5));
  }

  SUBCASE("very high SNR approximates the clean signal") {
    Waveform out = add_noise(sig, noise, 100.0);
    for (size_t i = 0; i < sig.samples.size(); ++i)
      CHECK(std::fabs(out.samples[i] - sig.samples[i]) < 1e-4);
  }

  SUBCASE("closed-form gain: P_w=1, P_n=4, snr=6.0206 -> g=0.25") {
    Waveform s, n;
    s.sample_rate = n.sample_rate = 16000;
    s.samples.assign(256, 1.0f);
    n.samples.assign(256, 0.0f);
    for (size_t i = 0; i < n.samples.size(); ++i) n.samples[i] = (i % 2) ? 2.0f : -2.0f;
    // out would clip at 1; verify the mixing law pre-clip via small signal
    for (auto& v : s.samples) v = 0.1f;
    for (auto& v : n.samples) v *= 0.1f;  // keeps P_w/P_n ratio = 1/4
    Waveform out = add_noise(s, n, 6.0205999132796239);
    for (size_t i = 0; i < out.samples.size(); ++i) {
      const double expect = 0.1 + 0.25 * n.samples[i];
      CHECK(out.samples[i] == doctest::Approx(expect).epsilon(1e-5));
    }
  }

  SUBCASE("snr identity holds for random snr values") {
    Rng rng(7);
    for (int i = 0; i < 20; ++i) {
      const double snr = rng.uniform(-10.0, 30.0);
      const double pw = sig.power(), pn = noise.power();
      const double g = std::sqrt(pw / (pn * std::pow(10.0, snr / 10.0)));
      CHECK(10.0 * std::log10(pw / (g * g * pn)) == doctest::Approx(snr).epsilon(1e-9));
    }
  }

  SUBCASE("error paths") {
    Waveform silent;
    silent.sample_rate = 16000;
    silent.samples.assign(100, 0.0f);
    CHECK_THROWS_WITH_AS(add_noise(sig, silent, 10.0),
                         doctest::Contains("zero-power noise"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(add_noise(silent, noise, 10.0),
                         doctest::Contains("zero-power signal"), std::invalid_argument);
    Waveform wrong_rate = noise;
    wrong_rate.sample_rate = 8000;
    CHECK_THROWS_WITH_AS(add_noise(sig, wrong_rate, 10.0),
                         doctest::Contains("sample-rate"), std::invalid_argument);
  }
}

TEST_CASE("mfcc: frame count and dimensions") {
  MfccConfig cfg;
  Waveform w = tone(440.0, 1.0);
  FeatureSequence f = mfcc(w, cfg);
  CHECK(f.num_frames == 98);  // floor((16000-400)/160)+1
  CHECK(f.dim == 13);
  FeatureSequence d = deltas(f, cfg.delta_window);
  CHECK(d.dim == 39);
  CHECK(d.num_frames == 98);

  // frame-count law across lengths
  Rng rng(5);
  for (int i = 0; i < 30; ++i) {
    const size_t n = 400 + static_cast<size_t>(rng.uniform_int(20000));
    Waveform wn = tone(200.0, 1.0);
    wn.samples.resize(n);
    CHECK(mfcc(wn, cfg).num_frames == (n - 400) / 160 + 1);
  }
}

TEST_CASE("mfcc: silence maps to identical frames at the log floor") {
  Waveform w;
  w.sample_rate = 16000;
  w.samples.assign(16000, 0.0f);
  FeatureSequence f = mfcc(w, MfccConfig{});
  for (size_t t = 1; t < f.num_frames; ++t)
    for (size_t d = 0; d < f.dim; ++d)
      CHECK(f.at(t, d) == f.at(0, d));
}

TEST_CASE("mfcc: errors on short input and non-16k rate") {
  MfccConfig cfg;
  Waveform w = tone(100.0, 0.01);  // 160 samples < one window
  CHECK_THROWS_WITH_AS(mfcc(w, cfg), doctest::Contains("shorter than one window"),
                       std::invalid_argument);
  Waveform w8 = tone(100.0, 1.0, 8000);
  CHECK_THROWS_WITH_AS(mfcc(w8, cfg), doctest::Contains("16 kHz"), std::invalid_argument);
  MfccConfig bad;
  bad.n_ceps = 30;  // > n_mels
  CHECK_THROWS_AS(mfcc(tone(100.0, 1.0), bad), std::invalid_argument);
}

TEST_CASE("deltas: constant input gives exactly zero deltas") {
  FeatureSequence f;
  f.num_frames = 7;
  f.dim = 3;
  f.data.assign(21, 0.0f);
  for (size_t t = 0; t < 7; ++t)
    for (size_t d = 0; d < 3; ++d) f.at(t, d) = static_cast<float>(d) - 1.5f;
  FeatureSequence out = deltas(f, 2);
  for (size_t t = 0; t < 7; ++t)
    for (size_t d = 3; d < 9; ++d) CHECK(out.at(t, d) == 0.0f);
}

TEST_CASE("deltas: single frame handled via edge replication") {
  FeatureSequence f;
  f.num_frames = 1;
  f.dim = 4;
  f.data = {1.0f, -2.0f, 0.5f, 3.0f};
  FeatureSequence out = deltas(f, 2);
  CHECK(out.num_frames == 1);
  CHECK(out.dim == 12);
  for (size_t d = 4; d < 12; ++d) CHECK(out.at(0, d) == 0.0f);
}

TEST_CASE("fft: matches a direct DFT on a small input") {
  Rng rng(9);
  const size_t n = 64;
  std::vector<double> re(n), im(n, 0.0);
  for (auto& v : re) v = rng.normal();
  std::vector<double> re0 = re;
  fft_inplace(re, im);
  for (size_t k = 0; k < n; ++k) {
    double er = 0, ei = 0;
    for (size_t t = 0; t < n; ++t) {
      const double ang = -2.0 * M_PI * k * t / n;
      er += re0[t] * std::cos(ang);
      ei += re0[t] * std::sin(ang);
    }
    CHECK(re[k] == doctest::Approx(er).epsilon(1e-9));
    CHECK(im[k] == doctest::Approx(ei).epsilon(1e-9));
  }
}

TEST_CASE("resample: halving the rate halves the length") {
  Waveform w = tone(100.0, 1.0);
  Waveform r = resample(w, 8000);
  CHECK(r.sample_rate == 8000);
  CHECK(r.samples.size() == 8000);
}
