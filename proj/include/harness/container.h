// harness/container.h
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

#ifndef HARNESS_CONTAINER_H_
#define HARNESS_CONTAINER_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "harness/tensor.h"

namespace harness {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One self-describing binary container backs every persistent artifact
// (model checkpoints, codebooks, feature dumps):
//
//   magic "HRNS" | u32 version | u32 crc32(payload) | payload
//   payload: u32 json_len | config JSON (UTF-8)
//            u32 tensor_count
//            per tensor: u32 name_len | name | u8 dtype (0=f32, 1=f64)
//                        u8 rank | u64 extents[rank] | raw LE data
//
// All integers little-endian. The CRC covers the whole payload, so any
// truncation or bit flip after the header is a checksum error.
struct NamedTensor {
  std::string name;
  std::vector<size_t> shape;
  std::variant<std::vector<float>, std::vector<double>> data;

  bool is_f32() const { return data.index() == 0; }
  size_t numel() const { return Tensor32::numel_of(shape); }

  static NamedTensor from(const std::string& name, const Tensor32& t) {
    return NamedTensor{name, t.shape, t.data};
  }
  static NamedTensor from(const std::string& name, const Tensor64& t) {
    return NamedTensor{name, t.shape, t.data};
  }
  Tensor32 as_f32() const;
  Tensor64 as_f64() const;
};

struct Container {
  nlohmann::json config;
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const;
  const NamedTensor& require(const std::string& name) const;
};

constexpr uint32_t kContainerVersion = 1;

std::string serialize_container(const Container& c);
Container parse_container(const std::string& bytes, const std::string& origin);

void write_container(const std::string& path, const Container& c);
Container read_container(const std::string& path);

uint32_t crc32(const uint8_t* data, size_t len);

}  // namespace harness

#endif  // HARNESS_CONTAINER_H_
