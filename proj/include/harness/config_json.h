// harness/config_json.h
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

#ifndef HARNESS_CONFIG_JSON_H_
#define HARNESS_CONFIG_JSON_H_

#include <json.hpp>

#include "harness/adam.h"
#include "harness/distill.h"
#include "harness/features.h"
#include "harness/kmeans.h"
#include "harness/loss.h"
#include "harness/mask.h"
#include "harness/targets.h"
#include "harness/train.h"

namespace harness {

// JSON round trips for every config type that appears in experiment files.
// Missing fields fall back to the declared defaults so configs stay short;
// the resolved (fully expanded) form is what gets echoed into the workdir.

void to_json(nlohmann::json& j, const MfccConfig& c);
void from_json(const nlohmann::json& j, MfccConfig& c);

void to_json(nlohmann::json& j, const MaskSpec& m);
void from_json(const nlohmann::json& j, MaskSpec& m);

void to_json(nlohmann::json& j, const LossWeights& w);
void from_json(const nlohmann::json& j, LossWeights& w);

void to_json(nlohmann::json& j, const AdamHParams& a);
void from_json(const nlohmann::json& j, AdamHParams& a);

void to_json(nlohmann::json& j, const KMeansOpts& k);
void from_json(const nlohmann::json& j, KMeansOpts& k);

void to_json(nlohmann::json& j, const TrainConfig& t);
void from_json(const nlohmann::json& j, TrainConfig& t);

void to_json(nlohmann::json& j, const TargetOpts& t);
void from_json(const nlohmann::json& j, TargetOpts& t);

void to_json(nlohmann::json& j, const IterationSpec& s);
void from_json(const nlohmann::json& j, IterationSpec& s);

void to_json(nlohmann::json& j, const Schedule& s);
void from_json(const nlohmann::json& j, Schedule& s);

}  // namespace harness

#endif  // HARNESS_CONFIG_JSON_H_
