// harness/container.cc
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

#include "harness/container.h"

#include <cstring>
#include <fstream>

namespace harness {

namespace {

constexpr char kMagic[4] = {'H', 'R', 'N', 'S'};

void put_u32(std::string& s, uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& s, uint64_t v) {
  for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

// Bounds-checked little-endian reader over the payload.
class Reader {
 public:
  Reader(const uint8_t* p, size_t n, const std::string& origin)
      : p_(p), n_(n), origin_(origin) {}

  uint8_t u8() { return take(1)[0]; }
  uint32_t u32() {
    const uint8_t* b = take(4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
  }
  uint64_t u64() {
    uint64_t v = 0;
    const uint8_t* b = take(8);
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
  }
  std::string str(size_t len) {
    const uint8_t* b = take(len);
    return std::string(reinterpret_cast<const char*>(b), len);
  }
  const uint8_t* take(size_t len) {
    if (pos_ + len > n_)
      throw CheckpointError("checkpoint: truncated payload in " + origin_);
    const uint8_t* b = p_ + pos_;
    pos_ += len;
    return b;
  }
  bool done() const { return pos_ == n_; }

 private:
  const uint8_t* p_;
  size_t n_, pos_ = 0;
  std::string origin_;
};

}  // namespace

uint32_t crc32(const uint8_t* data, size_t len) {
  static uint32_t table[256];
  static bool init = [] {
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
      table[i] = c;
    }
    return true;
  }();
  (void)init;
  uint32_t c = 0xffffffffu;
  for (size_t i = 0; i < len; ++i) c = table[(c ^ data[i]) & 0xff] ^ (c >> 8);
  return c ^ 0xffffffffu;
}

Tensor32 NamedTensor::as_f32() const {
  if (is_f32()) return Tensor32(shape, std::get<0>(data));
  const auto& d = std::get<1>(data);
  std::vector<float> out(d.begin(), d.end());
  return Tensor32(shape, std::move(out));
}

Tensor64 NamedTensor::as_f64() const {
  if (!is_f32()) return Tensor64(shape, std::get<1>(data));
  const auto& d = std::get<0>(data);
  std::vector<double> out(d.begin(), d.end());
  return Tensor64(shape, std::move(out));
}

const NamedTensor* Container::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

const NamedTensor& Container::require(const std::string& name) const {
  const NamedTensor* t = find(name);
  if (!t) throw CheckpointError("checkpoint: missing tensor '" + name + "'");
  return *t;
}

std::string serialize_container(const Container& c) {
  std::string payload;
  const std::string cfg = c.config.dump();
  put_u32(payload, static_cast<uint32_t>(cfg.size()));
  payload += cfg;
  put_u32(payload, static_cast<uint32_t>(c.tensors.size()));
  for (const auto& t : c.tensors) {
    put_u32(payload, static_cast<uint32_t>(t.name.size()));
    payload += t.name;
    payload.push_back(t.is_f32() ? '\x00' : '\x01');
    payload.push_back(static_cast<char>(t.shape.size()));
    for (size_t e : t.shape) put_u64(payload, e);
    if (t.is_f32()) {
      const auto& d = std::get<0>(t.data);
      payload.append(reinterpret_cast<const char*>(d.data()), d.size() * sizeof(float));
    } else {
      const auto& d = std::get<1>(t.data);
      payload.append(reinterpret_cast<const char*>(d.data()), d.size() * sizeof(double));
    }
  }
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kContainerVersion);
  put_u32(out, crc32(reinterpret_cast<const uint8_t*>(payload.data()), payload.size()));
  out += payload;
  return out;
}

Container parse_container(const std::string& bytes, const std::string& origin) {
  if (bytes.size() < 12)
    throw CheckpointError("checkpoint: file too small to be valid: " + origin);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw CheckpointError("checkpoint: bad magic (not an HRNS container): " + origin);
  const uint8_t* raw = reinterpret_cast<const uint8_t*>(bytes.data());
  const uint32_t version = raw[4] | (raw[5] << 8) | (raw[6] << 16) |
                           (static_cast<uint32_t>(raw[7]) << 24);
  if (version != kContainerVersion)
    throw CheckpointError("checkpoint: unsupported format version " +
                          std::to_string(version) + ": " + origin);
  const uint32_t stored_crc = raw[8] | (raw[9] << 8) | (raw[10] << 16) |
                              (static_cast<uint32_t>(raw[11]) << 24);
  const uint8_t* payload = raw + 12;
  const size_t payload_len = bytes.size() - 12;
  if (crc32(payload, payload_len) != stored_crc)
    throw CheckpointError("checkpoint: checksum mismatch (corrupt or truncated): " + origin);

  Reader r(payload, payload_len, origin);
  Container c;
  const uint32_t cfg_len = r.u32();
  const std::string cfg = r.str(cfg_len);
  c.config = nlohmann::json::parse(cfg, nullptr, /*allow_exceptions=*/false);
  if (c.config.is_discarded())
    throw CheckpointError("checkpoint: malformed config JSON: " + origin);
  const uint32_t count = r.u32();
  c.tensors.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.str(r.u32());
    const uint8_t dtype = r.u8();
    const uint8_t rank = r.u8();
    t.shape.resize(rank);
    size_t numel = 1;
    for (int d = 0; d < rank; ++d) {
      t.shape[d] = static_cast<size_t>(r.u64());
      if (t.shape[d] == 0 || t.shape[d] > (1ull << 40))
        throw CheckpointError("checkpoint: implausible tensor extent: " + origin);
      numel *= t.shape[d];
    }
    if (dtype == 0) {
      std::vector<float> d(numel);
      std::memcpy(d.data(), r.take(numel * sizeof(float)), numel * sizeof(float));
      t.data = std::move(d);
    } else if (dtype == 1) {
      std::vector<double> d(numel);
      std::memcpy(d.data(), r.take(numel * sizeof(double)), numel * sizeof(double));
      t.data = std::move(d);
    } else {
      throw CheckpointError("checkpoint: unknown dtype tag " + std::to_string(dtype) +
                            ": " + origin);
    }
    c.tensors.push_back(std::move(t));
  }
  if (!r.done())
    throw CheckpointError("checkpoint: trailing bytes after tensor table: " + origin);
  return c;
}

void write_container(const std::string& path, const Container& c) {
  const std::string bytes = serialize_container(c);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError("checkpoint: cannot write " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  f.flush();
  if (!f) throw CheckpointError("checkpoint: short write to " + path);
}

Container read_container(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("checkpoint: cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_container(bytes, path);
}

}  // namespace harness
