// harness/util.h
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

#ifndef HARNESS_UTIL_H_
#define HARNESS_UTIL_H_

#include <cstdint>
#include <string>

namespace harness {

uint64_t fnv1a64(const void* data, size_t len);
std::string hex64(uint64_t v);

std::string read_file_bytes(const std::string& path);
// Content hash used for up-to-date checks and lineage records.
std::string file_hash(const std::string& path);
std::string string_hash(const std::string& s);

}  // namespace harness

#endif  // HARNESS_UTIL_H_
