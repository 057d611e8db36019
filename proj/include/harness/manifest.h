// harness/manifest.h
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

#ifndef HARNESS_MANIFEST_H_
#define HARNESS_MANIFEST_H_

#include <optional>
#include <string>
#include <vector>

#include "harness/corpus.h"

namespace harness {

// TSV with header "utt_id<TAB>path<TAB>duration_s[<TAB>label]".
// Relative paths resolve against the manifest's directory.
struct ManifestRow {
  std::string utt_id;
  std::string path;      // resolved
  double duration_s = 0;
  std::string label;     // empty when absent
};

struct Manifest {
  std::vector<ManifestRow> rows;
  bool has_labels = false;

  const ManifestRow* find(const std::string& utt_id) const;
};

// Parses and validates: unique ids, positive durations, and (when
// `check_paths`) audio files that exist.
Manifest load_manifest(const std::string& path, bool check_paths = true);

void save_manifest(const std::string& path, const Manifest& m);

// Loads every utterance, sorted by id.
Corpus load_corpus(const Manifest& m);

struct AugmentOpts {
  std::vector<double> speed_factors;  // e.g. {0.9, 1.1}
  std::string noise_manifest;         // empty disables noise mixing
  double snr_lo = 5.0, snr_hi = 20.0;
  uint64_t seed = 0;
};

// Appends augmented copies (ids suffixed "#sp<factor>" / "#noise") and
// re-sorts by id. Noise SNR is drawn per utterance from [snr_lo, snr_hi].
Corpus augment_corpus(const Corpus& base, const AugmentOpts& opts);

}  // namespace harness

#endif  // HARNESS_MANIFEST_H_
