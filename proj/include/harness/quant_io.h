// harness/quant_io.h
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

#ifndef HARNESS_QUANT_IO_H_
#define HARNESS_QUANT_IO_H_

#include <string>

#include "harness/features.h"
#include "harness/kmeans.h"

namespace harness {

// Codebooks and feature dumps share the checkpoint container format.
void save_codebook(const std::string& path, const Codebook& cb);
Codebook load_codebook(const std::string& path);

void save_features(const std::string& path, const FeatureSequence& f,
                   const std::string& utt_id, const std::string& input_hash);
FeatureSequence load_features(const std::string& path, std::string* utt_id = nullptr,
                              std::string* input_hash = nullptr);

// Label dumps: one text file per utterance, space-separated cluster IDs.
void save_labels(const std::string& path, const PseudoLabelSeq& labels);
PseudoLabelSeq load_labels(const std::string& path);

}  // namespace harness

#endif  // HARNESS_QUANT_IO_H_
