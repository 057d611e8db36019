// harness/distill.cc
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

#include "harness/distill.h"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

#include "harness/config_json.h"
#include "harness/quant_io.h"
#include "harness/util.h"

namespace fs = std::filesystem;

namespace harness {

void Schedule::validate() const {
  if (iterations.empty()) throw std::invalid_argument("schedule: no iterations");
  int prev = 0;
  for (const auto& it : iterations) {
    if (it.index != prev + 1)
      throw std::invalid_argument(
          "schedule: iteration indices must increase strictly from 1 (got " +
          std::to_string(it.index) + " after " + std::to_string(prev) + ")");
    prev = it.index;
  }
}

void to_json(nlohmann::json& j, const IterationReport& r) {
  j = nlohmann::json{{"index", r.index},
                     {"name", r.name},
                     {"delta_s", r.delta_s},
                     {"codebook_inertia", r.codebook_inertia},
                     {"final_loss", r.final_loss},
                     {"masked_acc", r.masked_acc},
                     {"unmasked_acc", r.unmasked_acc},
                     {"wall_s", r.wall_s},
                     {"checkpoint_hash", r.checkpoint_hash},
                     {"teacher_hash", r.teacher_hash}};
}

void from_json(const nlohmann::json& j, IterationReport& r) {
  r.index = j.value("index", 0);
  r.name = j.value("name", std::string());
  r.delta_s = j.value("delta_s", 0.0);
  r.codebook_inertia = j.value("codebook_inertia", 0.0);
  r.final_loss = j.value("final_loss", 0.0);
  r.masked_acc = j.value("masked_acc", 0.0);
  r.unmasked_acc = j.value("unmasked_acc", 0.0);
  r.wall_s = j.value("wall_s", 0.0);
  r.checkpoint_hash = j.value("checkpoint_hash", std::string());
  r.teacher_hash = j.value("teacher_hash", std::string());
}

ParamMap32 blocked_average_init(const ParamMap32& teacher_params,
                                const EncoderConfig& teacher_cfg,
                                const EncoderConfig& student_cfg) {
  if (teacher_cfg.emb_dim != student_cfg.emb_dim ||
      teacher_cfg.ffn_dim != student_cfg.ffn_dim)
    throw std::invalid_argument(
        "blocked_average: undefined across widths (teacher emb/ffn " +
        std::to_string(teacher_cfg.emb_dim) + "/" + std::to_string(teacher_cfg.ffn_dim) +
        " vs student " + std::to_string(student_cfg.emb_dim) + "/" +
        std::to_string(student_cfg.ffn_dim) + "); use random init for thin students");
  if (teacher_cfg.num_heads != student_cfg.num_heads)
    throw std::invalid_argument(
        "blocked_average: attention head counts differ (teacher " +
        std::to_string(teacher_cfg.num_heads) + " vs student " +
        std::to_string(student_cfg.num_heads) + "); use random init");
  if (!(teacher_cfg.cnn == student_cfg.cnn))
    throw std::invalid_argument("blocked_average: CNN specs must be identical");
  if (teacher_cfg.proj_dim != student_cfg.proj_dim ||
      teacher_cfg.num_clusters != student_cfg.num_clusters ||
      teacher_cfg.head != student_cfg.head ||
      teacher_cfg.pos_conv_kernel != student_cfg.pos_conv_kernel ||
      teacher_cfg.pos_conv_groups != student_cfg.pos_conv_groups)
    throw std::invalid_argument(
        "blocked_average: head/projection/positional-conv geometry must match");
  if (student_cfg.depth > teacher_cfg.depth || teacher_cfg.depth % student_cfg.depth != 0)
    throw std::invalid_argument(
        "blocked_average: teacher depth " + std::to_string(teacher_cfg.depth) +
        " must be a multiple of student depth " + std::to_string(student_cfg.depth));

  const int block = teacher_cfg.depth / student_cfg.depth;
  ParamMap32 student;
  for (const auto& [name, shape] : param_shapes(student_cfg)) {
    if (name.rfind("layer.", 0) == 0) {
      const int j = std::stoi(name.substr(6, 2));
      const std::string suffix = name.substr(8);  // ".norm1.gamma" etc.
      Tensor32 acc(shape);
      for (int b = 0; b < block; ++b) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "layer.%02d", j * block + b);
        const Tensor32& src = teacher_params.at(std::string(buf) + suffix);
        for (size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += src.data[i];
      }
      const float inv = 1.0f / static_cast<float>(block);
      for (auto& v : acc.data) v *= inv;
      student.emplace(name, std::move(acc));
    } else {
      student.emplace(name, teacher_params.at(name));
    }
  }
  return student;
}

CompressResult compress_config(const EncoderConfig& base, const CompressAxes& axes) {
  CompressResult r;
  r.config = base;
  if (axes.depth) r.config.depth = *axes.depth;
  if (axes.emb_dim) r.config.emb_dim = *axes.emb_dim;
  if (axes.num_heads) r.config.num_heads = *axes.num_heads;
  if (axes.ffn_dim) r.config.ffn_dim = *axes.ffn_dim;
  r.config.validate();  // divisibility etc.
  r.base_params = count_params(base);
  r.new_params = count_params(r.config);
  r.delta_s = 1.0 - static_cast<double>(r.new_params) / static_cast<double>(r.base_params);
  return r;
}

namespace {

std::string spec_hash(const IterationSpec& spec) {
  nlohmann::json j = spec;
  return string_hash(j.dump());
}

void write_report(const std::string& path, const IterationReport& r,
                  const std::string& spec_h) {
  nlohmann::json j = r;
  j["report_version"] = 1;
  j["spec_hash"] = spec_h;
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("report: cannot write " + path);
  f << j.dump(2) << "\n";
}

}  // namespace

IterationReport run_iteration(const IterationSpec& spec,
                              const std::optional<std::string>& teacher_ckpt,
                              const Corpus& corpus, const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  if (spec.index >= 2 && !teacher_ckpt)
    throw std::invalid_argument("iteration " + std::to_string(spec.index) +
                                " requires a teacher checkpoint");
  if (spec.index == 1 && teacher_ckpt)
    throw std::invalid_argument("iteration 1 takes no teacher");
  spec.student.validate();
  spec.train.validate();

  fs::create_directories(out_dir);
  fs::create_directories(out_dir + "/labels");

  std::optional<std::pair<ParamMap32, EncoderConfig>> teacher;
  std::optional<TeacherModel> teacher_model;
  if (teacher_ckpt) {
    teacher = load_checkpoint(*teacher_ckpt);
    teacher_model = TeacherModel{&teacher->first, &teacher->second};
  }

  TargetOpts topts = spec.targets;
  if (!topts.align_cnn) topts.align_cnn = spec.student.cnn;  // labels on the student grid
  TargetResult targets = targets_for_iteration(spec.index, teacher_model, corpus, topts);
  save_codebook(out_dir + "/codebook.hrns", targets.codebook);
  for (size_t i = 0; i < corpus.size(); ++i)
    save_labels(out_dir + "/labels/" + corpus[i].id + ".labels", targets.labels[i]);

  ParamMap32 params;
  if (spec.init == InitStrategy::kBlockedAverage) {
    if (!teacher)
      throw std::invalid_argument("blocked_average init requires a teacher");
    params = blocked_average_init(teacher->first, teacher->second, spec.student);
  } else {
    params = init_params(spec.student, spec.train.seed);
  }

  TrainConfig tc = spec.train;
  if (tc.checkpoint_every > 0 && tc.checkpoint_dir.empty()) tc.checkpoint_dir = out_dir;
  TrainReport tr = train(params, spec.student, corpus, targets.labels, tc);
  save_checkpoint(out_dir + "/model.ckpt", params, spec.student);
  write_train_csv(out_dir + "/train.csv", tr);

  IterationReport rep;
  rep.index = spec.index;
  rep.name = spec.dir_name();
  rep.delta_s =
      teacher ? 1.0 - static_cast<double>(count_params(spec.student)) /
                          static_cast<double>(count_params(teacher->second))
              : 0.0;
  rep.codebook_inertia = targets.codebook.final_inertia();
  rep.final_loss = tr.final_loss;
  rep.masked_acc = tr.final_masked_acc;
  rep.unmasked_acc = tr.final_unmasked_acc;
  rep.checkpoint_hash = file_hash(out_dir + "/model.ckpt");
  rep.teacher_hash = teacher_ckpt ? file_hash(*teacher_ckpt) : "";
  rep.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_report(out_dir + "/report.json", rep, spec_hash(spec));
  return rep;
}

std::vector<IterationReport> run_schedule(const Schedule& schedule,
                                          const CorpusLoader& loader,
                                          const std::string& default_manifest,
                                          const std::string& workdir) {
  schedule.validate();
  fs::create_directories(workdir);

  std::map<std::string, Corpus> corpus_cache;
  auto get_corpus = [&](const std::string& manifest) -> const Corpus& {
    auto it = corpus_cache.find(manifest);
    if (it == corpus_cache.end())
      it = corpus_cache.emplace(manifest, loader(manifest)).first;
    return it->second;
  };

  std::vector<IterationReport> reports;
  std::optional<std::string> teacher_ckpt;
  bool upstream_rerun = false;

  for (const auto& spec : schedule.iterations) {
    const std::string out_dir = workdir + "/" + spec.dir_name();
    const std::string ckpt_path = out_dir + "/model.ckpt";
    const std::string report_path = out_dir + "/report.json";
    const std::string expect_teacher_hash =
        teacher_ckpt ? file_hash(*teacher_ckpt) : "";

    bool skip = false;
    if (!upstream_rerun && fs::exists(ckpt_path) && fs::exists(report_path)) {
      std::ifstream f(report_path);
      nlohmann::json j = nlohmann::json::parse(f, nullptr, false);
      if (!j.is_discarded()) {
        IterationReport stored = j.get<IterationReport>();
        const std::string stored_spec_hash = j.value("spec_hash", std::string());
        if (stored_spec_hash == spec_hash(spec) &&
            stored.teacher_hash == expect_teacher_hash) {
          const std::string actual = file_hash(ckpt_path);
          if (actual != stored.checkpoint_hash)
            throw std::runtime_error(
                "schedule: lineage hash mismatch on resume for " + ckpt_path +
                " (checkpoint was modified after its report was written)");
          stored.skipped = true;
          reports.push_back(stored);
          skip = true;
        }
      }
    }
    if (!skip) {
      const std::string manifest =
          spec.manifest.empty() ? default_manifest : spec.manifest;
      reports.push_back(run_iteration(spec, teacher_ckpt, get_corpus(manifest), out_dir));
      upstream_rerun = true;
    }
    teacher_ckpt = ckpt_path;
  }
  return reports;
}

}  // namespace harness
