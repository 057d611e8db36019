// harness/wav.cc
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

#include "harness/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace harness {

namespace {

uint32_t read_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
uint16_t read_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& s, uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u16(std::string& s, uint16_t v) {
  for (int i = 0; i < 2; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace

double Waveform::power() const {
  double s = 0;
  for (float v : samples) s += static_cast<double>(v) * v;
  return samples.empty() ? 0.0 : s / samples.size();
}

Waveform load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavError("wav: cannot open file: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw WavError("wav: missing or corrupt RIFF/WAVE header: " + path);

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  size_t pos = 12;
  const uint8_t* data_ptr = nullptr;
  uint32_t data_len = 0;

  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(&bytes[pos]);
    const uint32_t chunk_len = read_u32(&bytes[pos + 4]);
    const size_t body = pos + 8;
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (body + 16 > bytes.size()) throw WavError("wav: truncated fmt chunk: " + path);
      format = read_u16(&bytes[body]);
      channels = read_u16(&bytes[body + 2]);
      sample_rate = read_u32(&bytes[body + 4]);
      bits = read_u16(&bytes[body + 14]);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_ptr = &bytes[body];
      data_len = chunk_len;
      if (body + chunk_len > bytes.size())
        throw WavError("wav: truncated data chunk (declared " + std::to_string(chunk_len) +
                       " bytes, file has " + std::to_string(bytes.size() - body) + "): " + path);
    }
    pos = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt) throw WavError("wav: missing fmt chunk: " + path);
  if (format != 1) throw WavError("wav: non-PCM encoding (format tag " +
                                  std::to_string(format) + "): " + path);
  if (channels != 1) throw WavError("wav: unsupported channel count " +
                                    std::to_string(channels) + " (mono required): " + path);
  if (bits != 16) throw WavError("wav: unsupported bit depth " + std::to_string(bits) +
                                 " (16-bit PCM required): " + path);
  if (sample_rate == 0) throw WavError("wav: zero sample rate: " + path);
  if (data_ptr == nullptr) throw WavError("wav: missing data chunk: " + path);

  Waveform w;
  w.sample_rate = static_cast<int>(sample_rate);
  const size_t n = data_len / 2;
  w.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const int16_t s = static_cast<int16_t>(read_u16(data_ptr + 2 * i));
    w.samples[i] = static_cast<float>(s) / 32768.0f;
  }
  return w;
}

void save_wav(const std::string& path, const Waveform& w) {
  if (w.sample_rate <= 0) throw WavError("wav: sample_rate must be positive");
  std::string out;
  const uint32_t data_len = static_cast<uint32_t>(w.samples.size() * 2);
  out.reserve(44 + data_len);
  out += "RIFF";
  put_u32(out, 36 + data_len);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<uint32_t>(w.sample_rate));
  put_u32(out, static_cast<uint32_t>(w.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_len);
  for (float v : w.samples) {
    const float c = std::clamp(v, -1.0f, 1.0f);
    const int s = static_cast<int>(std::lrint(c * 32767.0f));
    put_u16(out, static_cast<uint16_t>(static_cast<int16_t>(s)));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw WavError("wav: cannot write file: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw WavError("wav: short write: " + path);
}

}  // namespace harness
