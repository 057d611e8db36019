// harness/cli.cc
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

#include "harness/cli.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <CLI11.hpp>

#include "harness/audio.h"
#include "harness/config_json.h"
#include "harness/container.h"
#include "harness/probe.h"
#include "harness/quant_io.h"
#include "harness/util.h"
#include "harness/wer.h"

namespace fs = std::filesystem;

namespace harness {

namespace {

std::string default_workdir() {
  const char* env = std::getenv("HARNESS_WORKDIR");
  return env && *env ? env : "harness_work";
}

// ---- features ----

struct FeatureCmdOpts {
  std::string manifest;
  std::string out_dir;
  MfccConfig mfcc;
  bool with_deltas = true;
  bool allow_resample = false;
  int jobs = 1;
};

int cmd_features(const FeatureCmdOpts& o) {
  const Manifest m = load_manifest(o.manifest);
  fs::create_directories(o.out_dir);

  nlohmann::json cfg_json = o.mfcc;
  cfg_json["with_deltas"] = o.with_deltas;
  cfg_json["resample"] = o.allow_resample;
  const std::string cfg_hash = string_hash(cfg_json.dump());

  struct Row {
    std::string utt_id, path, hash, error;
    size_t frames = 0, dim = 0;
    bool skipped = false;
  };
  std::vector<Row> rows(m.rows.size());

  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= m.rows.size()) return;
      Row& r = rows[i];
      r.utt_id = m.rows[i].utt_id;
      r.path = m.rows[i].path;
      try {
        const std::string wav_bytes = read_file_bytes(m.rows[i].path);
        r.hash = hex64(fnv1a64(wav_bytes.data(), wav_bytes.size())) + "-" + cfg_hash;
        const std::string out_path = o.out_dir + "/" + r.utt_id + ".feat";
        if (fs::exists(out_path)) {
          std::string stored_hash;
          try {
            FeatureSequence f = load_features(out_path, nullptr, &stored_hash);
            if (stored_hash == r.hash) {
              r.frames = f.num_frames;
              r.dim = f.dim;
              r.skipped = true;
              continue;
            }
          } catch (const CheckpointError&) {
            // stale or corrupt output: recompute below
          }
        }
        Waveform w = load_wav(m.rows[i].path);
        if (w.sample_rate != 16000) {
          if (!o.allow_resample)
            throw std::runtime_error("sample rate " + std::to_string(w.sample_rate) +
                                     " != 16000 (pass --resample to convert)");
          w = resample(w, 16000);
        }
        FeatureSequence f = o.with_deltas ? mfcc_with_deltas(w, o.mfcc) : mfcc(w, o.mfcc);
        save_features(out_path, f, r.utt_id, r.hash);
        r.frames = f.num_frames;
        r.dim = f.dim;
      } catch (const std::exception& e) {
        r.error = e.what();
      }
    }
  };
  if (o.jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < o.jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // index rows in manifest order (ids are unique; content is order-free)
  std::ofstream index(o.out_dir + "/index.tsv", std::ios::trunc);
  index << "utt_id\tframes\tdim\thash\n";
  size_t failures = 0, skipped = 0;
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      ++failures;
      std::cerr << "features: " << r.utt_id << ": " << r.error << "\n";
      continue;
    }
    if (r.skipped) ++skipped;
    index << r.utt_id << '\t' << r.frames << '\t' << r.dim << '\t' << r.hash << "\n";
  }
  std::cout << "features: " << (rows.size() - failures) << " ok (" << skipped
            << " up to date), " << failures << " failed, dim="
            << (o.with_deltas ? 3 * o.mfcc.n_ceps : o.mfcc.n_ceps) << "\n";
  return failures == 0 ? 0 : 1;
}

// ---- targets ----

struct TargetsCmdOpts {
  std::string manifest;
  std::string out_dir;
  std::string teacher;
  int iter = 1;
  TargetOpts targets;
};

int cmd_targets(const TargetsCmdOpts& o) {
  const Corpus corpus = load_corpus(load_manifest(o.manifest));
  std::optional<std::pair<ParamMap32, EncoderConfig>> teacher;
  std::optional<TeacherModel> teacher_model;
  if (!o.teacher.empty()) {
    teacher = load_checkpoint(o.teacher);
    teacher_model = TeacherModel{&teacher->first, &teacher->second};
  }
  TargetResult res = targets_for_iteration(o.iter, teacher_model, corpus, o.targets);
  fs::create_directories(o.out_dir + "/labels");
  save_codebook(o.out_dir + "/codebook.hrns", res.codebook);
  for (size_t i = 0; i < corpus.size(); ++i)
    save_labels(o.out_dir + "/labels/" + corpus[i].id + ".labels", res.labels[i]);
  std::cout << "targets: iter " << o.iter << ", K=" << res.codebook.k()
            << ", dim=" << res.codebook.dim()
            << ", inertia=" << res.codebook.final_inertia() << ", "
            << corpus.size() << " utterances\n";
  return 0;
}

// ---- pretrain / distill ----

int cmd_schedule(const std::string& config_path, bool single_iteration) {
  const ExperimentConfig cfg = load_experiment_config(config_path);
  if (single_iteration && cfg.schedule.iterations.size() != 1) {
    std::cerr << "pretrain: config must contain exactly one iteration (got "
              << cfg.schedule.iterations.size() << "); use `distill` for schedules\n";
    return 2;
  }
  const std::string config_dir = fs::path(config_path).parent_path().string();
  const auto reports = run_experiment(cfg, config_dir);
  for (const auto& r : reports) {
    if (r.skipped) {
      std::cout << r.name << ": skipped (up to date)\n";
    } else {
      std::printf("%s: done  loss=%.4f masked_acc=%.4f dS=%.3f wall=%.1fs\n",
                  r.name.c_str(), r.final_loss, r.masked_acc, r.delta_s, r.wall_s);
    }
  }
  return 0;
}

// ---- probe ----

struct ProbeCmdOpts {
  std::string checkpoint;
  std::string manifest;
  std::string eval_manifest;
  std::string out_dir;
  ProbeConfig probe;
  bool include_layer0 = false;
};

std::vector<LabeledFeatures> frozen_features(const ParamMap32& params,
                                             const EncoderConfig& cfg,
                                             const std::string& manifest_path,
                                             bool include_layer0,
                                             std::map<std::string, int>& class_ids,
                                             bool grow_classes) {
  const Manifest m = load_manifest(manifest_path);
  if (!m.has_labels)
    throw std::runtime_error("probe: manifest has no label column: " + manifest_path);
  const Corpus corpus = load_corpus(m);
  std::vector<LabeledFeatures> out;
  for (const auto& utt : corpus) {
    if (!class_ids.count(utt.label)) {
      if (!grow_classes)
        throw std::runtime_error("probe: label '" + utt.label +
                                 "' absent from training manifest");
      const int id = static_cast<int>(class_ids.size());
      class_ids[utt.label] = id;
    }
    LabeledFeatures lf;
    lf.utt_id = utt.id;
    lf.features = extract_frozen(params, cfg, utt.wave, include_layer0);
    lf.label = class_ids.at(utt.label);
    out.push_back(std::move(lf));
  }
  return out;
}

int cmd_probe(const ProbeCmdOpts& o) {
  auto [params, enc_cfg] = load_checkpoint(o.checkpoint);

  std::map<std::string, int> class_ids;
  auto train_set = frozen_features(params, enc_cfg, o.manifest, o.include_layer0,
                                   class_ids, /*grow_classes=*/true);
  ProbeConfig pc = o.probe;
  pc.n_classes = static_cast<int>(class_ids.size());
  pc.validate();

  ProbeParams probe = probe_train(train_set, pc);
  const double train_acc = probe_eval(probe, pc, train_set);
  std::printf("probe: train accuracy %.4f (%d classes, %zu examples)\n", train_acc,
              pc.n_classes, train_set.size());

  auto eval_set = o.eval_manifest.empty()
                      ? train_set
                      : frozen_features(params, enc_cfg, o.eval_manifest,
                                        o.include_layer0, class_ids, false);
  std::vector<ProbePrediction> preds;
  const double eval_acc = probe_eval(probe, pc, eval_set, &preds);
  if (!o.eval_manifest.empty())
    std::printf("probe: eval accuracy %.4f (%zu examples)\n", eval_acc, eval_set.size());

  fs::create_directories(o.out_dir);
  std::vector<std::string> names(class_ids.size());
  for (const auto& [name, id] : class_ids) names[id] = name;
  std::ofstream csv(o.out_dir + "/predictions.csv", std::ios::trunc);
  csv << "utt_id,true,pred,correct\n";
  for (const auto& p : preds)
    csv << p.utt_id << ',' << names[p.label] << ',' << names[p.predicted] << ','
        << (p.label == p.predicted ? 1 : 0) << "\n";
  return 0;
}

// ---- inspect ----

std::pair<EncoderConfig, std::string> resolve_config(const std::string& spec) {
  if (spec == "h-l" || spec == "h-s" || spec == "h-st")
    return {EncoderConfig::preset(spec), "preset " + spec};
  if (fs::exists(spec) && spec.size() > 5 && spec.substr(spec.size() - 5) == ".json") {
    std::ifstream f(spec);
    nlohmann::json j = nlohmann::json::parse(f);
    return {j.get<EncoderConfig>(), spec};
  }
  auto [params, cfg] = load_checkpoint(spec);
  return {cfg, spec};
}

int cmd_inspect(const std::string& target, const std::string& baseline) {
  auto [cfg, origin] = resolve_config(target);
  const int64_t n = count_params(cfg);
  nlohmann::json j = cfg;
  std::cout << "config (" << origin << "):\n" << j.dump(2) << "\n";
  std::printf("parameters: %lld (%.1fM)\n", static_cast<long long>(n), n / 1e6);
  if (!baseline.empty()) {
    auto [base_cfg, base_origin] = resolve_config(baseline);
    const int64_t nb = count_params(base_cfg);
    std::printf("baseline (%s): %lld (%.1fM)\n", base_origin.c_str(),
                static_cast<long long>(nb), nb / 1e6);
    std::printf("delta_s: %.4f (1 - %lld/%lld)\n",
                1.0 - static_cast<double>(n) / static_cast<double>(nb),
                static_cast<long long>(n), static_cast<long long>(nb));
  }
  return 0;
}

}  // namespace

void ExperimentConfig::validate(const std::string& config_dir) const {
  if (workdir.empty()) throw std::invalid_argument("config: workdir must be set");
  schedule.validate();
  auto resolve = [&](const std::string& p) {
    if (p.empty()) return p;
    fs::path fp = p;
    return fp.is_absolute() ? p : (fs::path(config_dir) / fp).string();
  };
  if (manifest.empty()) {
    for (const auto& it : schedule.iterations)
      if (it.manifest.empty())
        throw std::invalid_argument("config: iteration " + std::to_string(it.index) +
                                    " has no manifest and no default is set");
  } else if (!fs::exists(resolve(manifest))) {
    throw std::invalid_argument("config: manifest not found: " + manifest);
  }
  for (const auto& it : schedule.iterations) {
    if (!it.manifest.empty() && !fs::exists(resolve(it.manifest)))
      throw std::invalid_argument("config: manifest not found: " + it.manifest);
    it.student.validate();
    it.train.validate();
  }
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{{"seed", c.seed},
                     {"workdir", c.workdir},
                     {"manifest", c.manifest},
                     {"schedule", c.schedule},
                     {"augment",
                      {{"speed_factors", c.augment.speed_factors},
                       {"noise_manifest", c.augment.noise_manifest},
                       {"snr_lo", c.augment.snr_lo},
                       {"snr_hi", c.augment.snr_hi},
                       {"seed", c.augment.seed}}}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  c.seed = j.value("seed", uint64_t{1});
  c.workdir = j.value("workdir", std::string());
  c.manifest = j.value("manifest", std::string());
  if (j.contains("schedule")) j.at("schedule").get_to(c.schedule);
  if (j.contains("augment")) {
    const auto& a = j.at("augment");
    c.augment.speed_factors = a.value("speed_factors", std::vector<double>{});
    c.augment.noise_manifest = a.value("noise_manifest", std::string());
    c.augment.snr_lo = a.value("snr_lo", 5.0);
    c.augment.snr_hi = a.value("snr_hi", 20.0);
    c.augment.seed = a.value("seed", uint64_t{0});
  }
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(f, nullptr, false);
  if (j.is_discarded()) throw std::runtime_error("config: malformed JSON in " + path);
  return j.get<ExperimentConfig>();
}

std::vector<IterationReport> run_experiment(const ExperimentConfig& cfg,
                                            const std::string& config_dir) {
  cfg.validate(config_dir);
  auto resolve = [&](const std::string& p) {
    fs::path fp = p;
    return fp.is_absolute() ? p : (fs::path(config_dir) / fp).string();
  };
  const std::string workdir = resolve(cfg.workdir);
  fs::create_directories(workdir);
  {
    nlohmann::json echo = cfg;
    std::ofstream f(workdir + "/config.resolved.json", std::ios::trunc);
    f << echo.dump(2) << "\n";
  }
  CorpusLoader loader = [&](const std::string& manifest) {
    Corpus base = load_corpus(load_manifest(resolve(manifest)));
    return augment_corpus(base, cfg.augment);
  };
  return run_schedule(cfg.schedule, loader, cfg.manifest, workdir);
}

int cli_run(const std::vector<std::string>& args) {
  CLI::App app{"self-distilled speech encoder workbench"};
  app.require_subcommand(1);

  // features
  FeatureCmdOpts fo;
  fo.out_dir = default_workdir() + "/features";
  auto* feat = app.add_subcommand("features", "compute MFCC features for a manifest");
  feat->add_option("--manifest", fo.manifest, "input manifest (TSV)")->required();
  feat->add_option("--out", fo.out_dir, "output directory");
  feat->add_option("--window-ms", fo.mfcc.window_ms);
  feat->add_option("--hop-ms", fo.mfcc.hop_ms);
  feat->add_option("--n-mels", fo.mfcc.n_mels);
  feat->add_option("--n-ceps", fo.mfcc.n_ceps);
  feat->add_option("--delta-window", fo.mfcc.delta_window);
  feat->add_flag("--no-deltas", [&fo](int64_t) { fo.with_deltas = false; },
                 "emit static coefficients only");
  feat->add_flag("--resample", fo.allow_resample, "resample non-16kHz input");
  feat->add_option("--jobs", fo.jobs, "parallel workers")->check(CLI::Range(1, 64));

  // targets
  TargetsCmdOpts to;
  auto* tgt = app.add_subcommand("targets", "fit a codebook and dump pseudo-labels");
  tgt->add_option("--manifest", to.manifest)->required();
  tgt->add_option("--iter", to.iter, "iteration index (1 = MFCC bootstrap)")->required();
  tgt->add_option("--teacher", to.teacher, "teacher checkpoint (required for iter >= 2)");
  tgt->add_option("--k", to.targets.k, "number of clusters");
  int pca_dim = 0;
  tgt->add_option("--pca", pca_dim, "enable PCA supervision compression to this dim");
  int layer_override = -1;
  tgt->add_option("--layer", layer_override, "teacher layer override");
  tgt->add_option("--sample-fraction", to.targets.sample_fraction);
  tgt->add_option("--seed", to.targets.seed);
  size_t minibatch = 0;
  tgt->add_option("--minibatch", minibatch, "k-means minibatch size (0 = full Lloyd)");
  bool raw_grid = false;
  tgt->add_flag("--raw-grid", raw_grid,
                "keep labels on the feature grid instead of the encoder frame grid");
  tgt->add_option("--out", to.out_dir, "output directory");

  // pretrain / distill
  std::string pretrain_config, distill_config;
  auto* pre = app.add_subcommand("pretrain", "train a single model from a config");
  pre->add_option("--config", pretrain_config, "experiment config (JSON)")->required();
  auto* dis = app.add_subcommand("distill", "run an iterative distillation schedule");
  dis->add_option("--config", distill_config, "experiment config (JSON)")->required();

  // probe
  ProbeCmdOpts po;
  po.out_dir = default_workdir() + "/probe";
  auto* prb = app.add_subcommand("probe", "frozen-encoder classification probe");
  prb->add_option("--checkpoint", po.checkpoint)->required();
  prb->add_option("--manifest", po.manifest, "labeled training manifest")->required();
  prb->add_option("--eval-manifest", po.eval_manifest, "labeled eval manifest");
  prb->add_option("--steps", po.probe.steps);
  prb->add_option("--batch", po.probe.batch);
  prb->add_option("--hidden", po.probe.hidden);
  prb->add_option("--dropout", po.probe.dropout);
  prb->add_option("--seed", po.probe.seed);
  prb->add_option("--lr", po.probe.adam.lr);
  prb->add_flag("--include-layer0", po.include_layer0,
                "include the CNN projection in the layer average");
  prb->add_option("--out", po.out_dir, "output directory for predictions.csv");

  // inspect
  std::string inspect_target, inspect_baseline;
  auto* ins = app.add_subcommand("inspect", "show config and parameter counts");
  ins->add_option("target", inspect_target,
                  "checkpoint, encoder-config JSON, or preset (h-l, h-s, h-st)")
      ->required();
  ins->add_option("--baseline", inspect_baseline,
                  "baseline for structural-compression delta");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*feat) return cmd_features(fo);
    if (*tgt) {
      if (to.iter >= 2 && to.teacher.empty()) {
        std::cerr << "targets: --iter " << to.iter << " requires --teacher\n";
        return 2;
      }
      if (to.iter == 1 && !to.teacher.empty()) {
        std::cerr << "targets: --iter 1 takes no --teacher\n";
        return 2;
      }
      if (pca_dim > 0) {
        to.targets.use_pca = true;
        to.targets.d_prime = pca_dim;
      }
      if (layer_override > 0) to.targets.layer = layer_override;
      if (minibatch > 0) to.targets.kmeans.minibatch = minibatch;
      if (!raw_grid) to.targets.align_cnn = CnnSpec{};
      if (to.out_dir.empty())
        to.out_dir = default_workdir() + "/iter" + std::to_string(to.iter);
      return cmd_targets(to);
    }
    if (*pre) return cmd_schedule(pretrain_config, true);
    if (*dis) return cmd_schedule(distill_config, false);
    if (*prb) return cmd_probe(po);
    if (*ins) return cmd_inspect(inspect_target, inspect_baseline);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace harness
