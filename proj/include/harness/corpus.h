// harness/corpus.h
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

#ifndef HARNESS_CORPUS_H_
#define HARNESS_CORPUS_H_

#include <string>
#include <vector>

#include "harness/wav.h"

namespace harness {

struct Utterance {
  std::string id;
  Waveform wave;
  std::string label;  // optional downstream class label
};

// Utterances sorted by id: every cross-utterance aggregation walks this
// order so results are independent of manifest row order.
using Corpus = std::vector<Utterance>;

}  // namespace harness

#endif  // HARNESS_CORPUS_H_
