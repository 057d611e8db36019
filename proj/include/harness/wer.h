// harness/wer.h
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

#ifndef HARNESS_WER_H_
#define HARNESS_WER_H_

#include <string>
#include <vector>

namespace harness {

std::vector<std::string> tokenize_ws(const std::string& s);

// (substitutions + deletions + insertions) / len(reference) over whitespace
// tokens. The reference must be non-empty; values above 1 are possible.
double wer(const std::string& reference, const std::string& hypothesis);
double wer_tokens(const std::vector<std::string>& reference,
                  const std::vector<std::string>& hypothesis);

}  // namespace harness

#endif  // HARNESS_WER_H_
