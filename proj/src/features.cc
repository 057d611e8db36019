// harness/features.cc
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

#include "harness/features.h"

#include <cmath>
#include <stdexcept>

namespace harness {

namespace {

constexpr double kPi = 3.14159265358979323846;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Triangular mel filterbank over FFT bins [0, nfft/2].
std::vector<std::vector<double>> mel_filterbank(int n_mels, size_t nfft,
                                                int sample_rate) {
  const double f_lo = 0.0, f_hi = sample_rate / 2.0;
  const double m_lo = hz_to_mel(f_lo), m_hi = hz_to_mel(f_hi);
  std::vector<double> centers(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i)
    centers[i] = mel_to_hz(m_lo + (m_hi - m_lo) * i / (n_mels + 1));
  const size_t nbins = nfft / 2 + 1;
  const double bin_hz = static_cast<double>(sample_rate) / nfft;
  std::vector<std::vector<double>> bank(n_mels, std::vector<double>(nbins, 0.0));
  for (int m = 0; m < n_mels; ++m) {
    const double left = centers[m], mid = centers[m + 1], right = centers[m + 2];
    for (size_t b = 0; b < nbins; ++b) {
      const double f = b * bin_hz;
      if (f > left && f < mid)
        bank[m][b] = (f - left) / (mid - left);
      else if (f >= mid && f < right)
        bank[m][b] = (right - f) / (right - mid);
    }
  }
  return bank;
}

}  // namespace

std::string feature_source_name(FeatureSource s, int layer) {
  switch (s) {
    case FeatureSource::kMfcc: return "mfcc";
    case FeatureSource::kEncoderLayer: return "encoder_layer(" + std::to_string(layer) + ")";
    case FeatureSource::kLayerAverage: return "layer_average";
  }
  return "unknown";
}

void MfccConfig::validate() const {
  if (n_ceps > n_mels)
    throw std::invalid_argument("mfcc: n_ceps must be <= n_mels");
  if (window_ms < hop_ms)
    throw std::invalid_argument("mfcc: window_ms must be >= hop_ms");
  if (n_ceps < 1 || n_mels < 1 || delta_window < 1)
    throw std::invalid_argument("mfcc: bad config values");
}

int MfccConfig::window_samples(int sample_rate) const {
  return static_cast<int>(std::lround(window_ms * sample_rate / 1000.0));
}
int MfccConfig::hop_samples(int sample_rate) const {
  return static_cast<int>(std::lround(hop_ms * sample_rate / 1000.0));
}

void fft_inplace(std::vector<double>& re, std::vector<double>& im) {
  const size_t n = re.size();
  if (n == 0 || (n & (n - 1)) != 0 || im.size() != n)
    throw std::invalid_argument("fft: size must be a power of two");
  // bit reversal
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const double wr = std::cos(ang), wi = std::sin(ang);
    for (size_t i = 0; i < n; i += len) {
      double cr = 1.0, ci = 0.0;
      for (size_t j = 0; j < len / 2; ++j) {
        const size_t a = i + j, b = i + j + len / 2;
        const double tr = re[b] * cr - im[b] * ci;
        const double ti = re[b] * ci + im[b] * cr;
        re[b] = re[a] - tr;
        im[b] = im[a] - ti;
        re[a] += tr;
        im[a] += ti;
        const double ncr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = ncr;
      }
    }
  }
}

FeatureSequence mfcc(const Waveform& w, const MfccConfig& cfg) {
  cfg.validate();
  if (w.sample_rate != 16000)
    throw std::invalid_argument("mfcc: expected 16 kHz input, got " +
                                std::to_string(w.sample_rate) +
                                " Hz (use --resample upstream)");
  const int win = cfg.window_samples(w.sample_rate);
  const int hop = cfg.hop_samples(w.sample_rate);
  const size_t n = w.samples.size();
  if (n < static_cast<size_t>(win))
    throw std::invalid_argument("mfcc: utterance shorter than one window (" +
                                std::to_string(n) + " < " + std::to_string(win) + ")");
  const size_t num_frames = (n - win) / hop + 1;
  const size_t nfft = next_pow2(static_cast<size_t>(win));
  const size_t nbins = nfft / 2 + 1;

  // Hann window
  std::vector<double> hann(win);
  for (int i = 0; i < win; ++i)
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / (win - 1));

  const auto bank = mel_filterbank(cfg.n_mels, nfft, w.sample_rate);

  // Orthonormal DCT-II basis, n_ceps x n_mels. Row 0 is C0.
  std::vector<std::vector<double>> dct(cfg.n_ceps, std::vector<double>(cfg.n_mels));
  const double norm0 = std::sqrt(1.0 / cfg.n_mels);
  const double normk = std::sqrt(2.0 / cfg.n_mels);
  for (int k = 0; k < cfg.n_ceps; ++k)
    for (int m = 0; m < cfg.n_mels; ++m)
      dct[k][m] = (k == 0 ? norm0 : normk) *
                  std::cos(kPi * k * (m + 0.5) / cfg.n_mels);

  FeatureSequence out;
  out.num_frames = num_frames;
  out.dim = static_cast<size_t>(cfg.n_ceps);
  out.frame_rate = 1000.0 / cfg.hop_ms;
  out.source = FeatureSource::kMfcc;
  out.data.resize(num_frames * out.dim);

  std::vector<double> re(nfft), im(nfft), mel_e(cfg.n_mels);
  for (size_t t = 0; t < num_frames; ++t) {
    const size_t off = t * hop;
    std::fill(re.begin(), re.end(), 0.0);
    std::fill(im.begin(), im.end(), 0.0);
    for (int i = 0; i < win; ++i) {
      const double cur = w.samples[off + i];
      const double prev = (off + i == 0) ? 0.0 : w.samples[off + i - 1];
      re[i] = (cur - cfg.preemphasis * prev) * hann[i];
    }
    fft_inplace(re, im);
    for (int m = 0; m < cfg.n_mels; ++m) {
      double e = 0;
      for (size_t b = 0; b < nbins; ++b) {
        const double mag = std::sqrt(re[b] * re[b] + im[b] * im[b]);
        e += bank[m][b] * mag;
      }
      mel_e[m] = std::log(std::max(e, cfg.log_floor));
    }
    for (int k = 0; k < cfg.n_ceps; ++k) {
      double c = 0;
      for (int m = 0; m < cfg.n_mels; ++m) c += dct[k][m] * mel_e[m];
      out.at(t, k) = static_cast<float>(c);
    }
  }
  return out;
}

FeatureSequence deltas(const FeatureSequence& f, int window) {
  if (f.num_frames < 1) throw std::invalid_argument("deltas: need at least one frame");
  if (window < 1) throw std::invalid_argument("deltas: window must be >= 1");
  const size_t T = f.num_frames, D = f.dim;
  double denom = 0;
  for (int n = 1; n <= window; ++n) denom += 2.0 * n * n;

  auto clamp_t = [&](int64_t t) {
    return static_cast<size_t>(std::clamp<int64_t>(t, 0, static_cast<int64_t>(T) - 1));
  };
  // regression delta of an arbitrary T x D buffer
  auto regress = [&](const std::vector<float>& src, std::vector<float>& dst) {
    for (size_t t = 0; t < T; ++t)
      for (size_t d = 0; d < D; ++d) {
        double acc = 0;
        for (int n = 1; n <= window; ++n) {
          const float fwd = src[clamp_t(static_cast<int64_t>(t) + n) * D + d];
          const float bwd = src[clamp_t(static_cast<int64_t>(t) - n) * D + d];
          acc += n * (fwd - bwd);
        }
        dst[t * D + d] = static_cast<float>(acc / denom);
      }
  };

  std::vector<float> d1(T * D), d2(T * D);
  regress(f.data, d1);
  regress(d1, d2);

  FeatureSequence out;
  out.num_frames = T;
  out.dim = 3 * D;
  out.frame_rate = f.frame_rate;
  out.source = f.source;
  out.source_layer = f.source_layer;
  out.data.resize(T * out.dim);
  for (size_t t = 0; t < T; ++t) {
    for (size_t d = 0; d < D; ++d) {
      out.at(t, d) = f.at(t, d);
      out.at(t, D + d) = d1[t * D + d];
      out.at(t, 2 * D + d) = d2[t * D + d];
    }
  }
  return out;
}

FeatureSequence mfcc_with_deltas(const Waveform& w, const MfccConfig& cfg) {
  return deltas(mfcc(w, cfg), cfg.delta_window);
}

}  // namespace harness
