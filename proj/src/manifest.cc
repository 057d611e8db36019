// harness/manifest.cc
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

#include "harness/manifest.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "harness/audio.h"
#include "harness/rng.h"
#include "harness/util.h"

namespace fs = std::filesystem;

namespace harness {

const ManifestRow* Manifest::find(const std::string& utt_id) const {
  for (const auto& r : rows)
    if (r.utt_id == utt_id) return &r;
  return nullptr;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == '\t') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Manifest load_manifest(const std::string& path, bool check_paths) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("manifest: cannot open " + path);
  const fs::path base = fs::path(path).parent_path();

  std::string line;
  if (!std::getline(f, line))
    throw std::runtime_error("manifest: empty file: " + path);
  auto header = split_tabs(line);
  if (header.size() < 3 || header[0] != "utt_id" || header[1] != "path" ||
      header[2] != "duration_s")
    throw std::runtime_error(
        "manifest: header must be utt_id<TAB>path<TAB>duration_s[<TAB>label]: " + path);
  Manifest m;
  m.has_labels = header.size() >= 4 && header[3] == "label";

  std::set<std::string> ids;
  size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() < 3 || (m.has_labels && cols.size() < 4))
      throw std::runtime_error("manifest: line " + std::to_string(lineno) +
                               " has too few columns: " + path);
    ManifestRow r;
    r.utt_id = cols[0];
    fs::path p = cols[1];
    r.path = p.is_absolute() ? p.string() : (base / p).string();
    try {
      r.duration_s = std::stod(cols[2]);
    } catch (...) {
      throw std::runtime_error("manifest: line " + std::to_string(lineno) +
                               " has non-numeric duration: " + path);
    }
    if (!(r.duration_s > 0))
      throw std::runtime_error("manifest: duration must be > 0 for '" + r.utt_id + "'");
    if (m.has_labels) r.label = cols[3];
    if (!ids.insert(r.utt_id).second)
      throw std::runtime_error("manifest: duplicate utt_id '" + r.utt_id + "'");
    if (check_paths && !fs::exists(r.path))
      throw std::runtime_error("manifest: missing audio file for '" + r.utt_id +
                               "': " + r.path);
    m.rows.push_back(std::move(r));
  }
  if (m.rows.empty()) throw std::runtime_error("manifest: no rows: " + path);
  return m;
}

void save_manifest(const std::string& path, const Manifest& m) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("manifest: cannot write " + path);
  f << "utt_id\tpath\tduration_s";
  if (m.has_labels) f << "\tlabel";
  f << "\n";
  char buf[32];
  for (const auto& r : m.rows) {
    std::snprintf(buf, sizeof(buf), "%.3f", r.duration_s);
    f << r.utt_id << '\t' << r.path << '\t' << buf;
    if (m.has_labels) f << '\t' << r.label;
    f << "\n";
  }
}

Corpus load_corpus(const Manifest& m) {
  Corpus corpus;
  corpus.reserve(m.rows.size());
  for (const auto& r : m.rows)
    corpus.push_back(Utterance{r.utt_id, load_wav(r.path), r.label});
  std::sort(corpus.begin(), corpus.end(),
            [](const Utterance& a, const Utterance& b) { return a.id < b.id; });
  return corpus;
}

Corpus augment_corpus(const Corpus& base, const AugmentOpts& opts) {
  Corpus out = base;
  char buf[32];
  for (double factor : opts.speed_factors) {
    for (const auto& utt : base) {
      std::snprintf(buf, sizeof(buf), "#sp%.2f", factor);
      out.push_back(Utterance{utt.id + buf, speed_perturb(utt.wave, factor), utt.label});
    }
  }
  if (!opts.noise_manifest.empty()) {
    const Manifest nm = load_manifest(opts.noise_manifest);
    const Corpus noises = load_corpus(nm);
    if (noises.empty()) throw std::runtime_error("augment: empty noise manifest");
    for (const auto& utt : base) {
      // utterance-keyed stream so corpus order does not matter
      Rng rng(opts.seed ^ fnv1a64(utt.id.data(), utt.id.size()));
      const auto& noise = noises[rng.uniform_int(static_cast<int64_t>(noises.size()))];
      const double snr = rng.uniform(opts.snr_lo, opts.snr_hi);
      out.push_back(Utterance{utt.id + "#noise", add_noise(utt.wave, noise.wave, snr),
                              utt.label});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const Utterance& a, const Utterance& b) { return a.id < b.id; });
  return out;
}

}  // namespace harness
