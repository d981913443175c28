/*
 * Copyright 2026 The IFTX Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "iftx/pipeline/config.h"

#include <filesystem>
#include <set>

#include "iftx/influence/tracin.h"
#include "iftx/util/hash.h"
#include "iftx/util/status_macros.h"
#include "iftx/util/text_io.h"
#include "json.hpp"

namespace iftx::pipeline {
namespace {

using nlohmann::json;

// Typed access to one JSON object that remembers which keys were read.
class Section {
 public:
  Section(const json& obj, std::string where)
      : obj_(obj), where_(std::move(where)) {}

  template <typename T>
  absl::Status Get(const std::string& key, T* out) {
    used_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return absl::OkStatus();
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!it->is_number()) throw std::runtime_error("expected a number");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!it->is_number_integer()) throw std::runtime_error("expected an integer");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw std::runtime_error("expected true or false");
      } else {
        if (!it->is_string()) throw std::runtime_error("expected a string");
      }
      *out = it->get<T>();
    } catch (const std::exception& e) {
      return absl::InvalidArgumentError(
          util::StrCat(where_, ".", key, ": ", e.what()));
    }
    return absl::OkStatus();
  }

  // Parses a named enum through `parse` when the key is present.
  template <typename E, typename Parse>
  absl::Status GetEnum(const std::string& key, E* out, Parse parse) {
    std::string name;
    IFTX_RETURN_IF_ERROR(Get(key, &name));
    if (name.empty()) return absl::OkStatus();
    absl::StatusOr<E> v = parse(name);
    if (!v.ok()) {
      return absl::InvalidArgumentError(
          util::StrCat(where_, ".", key, ": ", v.status().message()));
    }
    *out = *v;
    return absl::OkStatus();
  }

  absl::StatusOr<Section> Child(const std::string& key) {
    used_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return Section(kEmpty, Path(key));
    if (!it->is_object()) {
      return absl::InvalidArgumentError(
          util::StrCat(Path(key), ": expected an object"));
    }
    return Section(*it, Path(key));
  }

  const json* Raw(const std::string& key) {
    used_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  absl::Status Finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!used_.contains(key)) {
        return absl::InvalidArgumentError(
            util::StrCat(where_, ": unknown key '", key, "'"));
      }
    }
    return absl::OkStatus();
  }

  std::string Path(const std::string& key) const {
    return util::StrCat(where_, ".", key);
  }

 private:
  static inline const json kEmpty = json::object();
  const json& obj_;
  std::string where_;
  std::set<std::string> used_;
};

absl::Status ParseTrain(Section s, trainer::TrainConfig* t) {
  IFTX_RETURN_IF_ERROR(s.Get("lr0", &t->lr0));
  IFTX_RETURN_IF_ERROR(s.Get("batch_size", &t->batch_size));
  IFTX_RETURN_IF_ERROR(s.Get("epochs", &t->epochs));
  IFTX_RETURN_IF_ERROR(s.Get("t_max", &t->t_max));
  IFTX_RETURN_IF_ERROR(s.Get("checkpoint_every", &t->checkpoint_every));
  IFTX_RETURN_IF_ERROR(s.GetEnum("schedule", &t->schedule,
                                 [](std::string_view n) -> absl::StatusOr<trainer::LrSchedule> {
                                   if (n == "cosine") return trainer::LrSchedule::kCosine;
                                   if (n == "step") return trainer::LrSchedule::kStep;
                                   return absl::InvalidArgumentError(
                                       util::StrCat("unknown schedule '", n, "'"));
                                 }));
  IFTX_RETURN_IF_ERROR(s.Get("step_every", &t->step_every));
  IFTX_RETURN_IF_ERROR(s.Get("step_gamma", &t->step_gamma));
  return s.Finish();
}

}  // namespace

absl::StatusOr<Backend> ParseBackend(std::string_view name) {
  if (name == "fixture") return Backend::kFixture;
  if (name == "openai") return Backend::kOpenAi;
  if (name == "cache_only") return Backend::kCacheOnly;
  if (name == "file") return Backend::kFile;
  return absl::InvalidArgumentError(util::StrCat("unknown backend '", name, "'"));
}

std::string_view BackendName(Backend b) {
  switch (b) {
    case Backend::kFixture:
      return "fixture";
    case Backend::kOpenAi:
      return "openai";
    case Backend::kCacheOnly:
      return "cache_only";
    case Backend::kFile:
      return "file";
  }
  return "";
}

std::string PipelineConfig::Resolve(const std::string& path) const {
  if (path.empty()) return path;
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(config_dir) / p).lexically_normal().string();
}

std::string PipelineConfig::OutPath(std::string_view name) const {
  return (std::filesystem::path(output_dir) / std::string(name)).string();
}

std::string PipelineConfig::CacheDir() const {
  return paths.cache.empty() ? OutPath("cache") : Resolve(paths.cache);
}

absl::StatusOr<PipelineConfig> ParseConfig(std::string_view json_text,
                                           std::string config_dir) {
  const json doc = json::parse(json_text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    return absl::InvalidArgumentError("config is not a JSON object");
  }
  PipelineConfig cfg;
  cfg.config_dir = std::move(config_dir);
  Section root(doc, "config");
  IFTX_RETURN_IF_ERROR(root.Get("seed", &cfg.seed));
  IFTX_RETURN_IF_ERROR(root.Get("output", &cfg.output_dir));
  IFTX_RETURN_IF_ERROR(root.Get("normalize_inputs", &cfg.normalize_inputs));
  IFTX_RETURN_IF_ERROR(root.Get("export_projection", &cfg.export_projection));

  {
    IFTX_ASSIGN_OR_RETURN(Section s, root.Child("paths"));
    Paths& p = cfg.paths;
    IFTX_RETURN_IF_ERROR(s.Get("manifest", &p.manifest));
    IFTX_RETURN_IF_ERROR(s.Get("image_embeddings", &p.image_embeddings));
    IFTX_RETURN_IF_ERROR(s.Get("text_embeddings", &p.text_embeddings));
    IFTX_RETURN_IF_ERROR(s.Get("descriptions", &p.descriptions));
    IFTX_RETURN_IF_ERROR(s.Get("llm_fixture", &p.llm_fixture));
    IFTX_RETURN_IF_ERROR(s.Get("judge_fixture", &p.judge_fixture));
    IFTX_RETURN_IF_ERROR(s.Get("cache", &p.cache));
    IFTX_RETURN_IF_ERROR(s.Finish());
    if (p.manifest.empty() || p.image_embeddings.empty()) {
      return absl::InvalidArgumentError(
          "config.paths: manifest and image_embeddings are required");
    }
  }
  if (const json* b = root.Raw("baselines"); b != nullptr && !b->is_null()) {
    if (!b->is_array()) {
      return absl::InvalidArgumentError("config.baselines: expected an array");
    }
    std::set<std::string> names = {"ours"};
    for (size_t i = 0; i < b->size(); ++i) {
      if (!(*b)[i].is_object()) {
        return absl::InvalidArgumentError(
            util::StrCat("config.baselines[", i, "]: expected an object"));
      }
      Section s((*b)[i], util::StrCat("config.baselines[", i, "]"));
      BaselineSpec spec;
      IFTX_RETURN_IF_ERROR(s.Get("method", &spec.method));
      IFTX_RETURN_IF_ERROR(s.Get("descriptions", &spec.descriptions));
      IFTX_RETURN_IF_ERROR(s.Get("embeddings", &spec.embeddings));
      IFTX_RETURN_IF_ERROR(s.Finish());
      if (spec.method.empty() || spec.descriptions.empty() ||
          spec.embeddings.empty()) {
        return absl::InvalidArgumentError(util::StrCat(
            "config.baselines[", i, "]: method, descriptions and embeddings "
            "are required"));
      }
      if (!names.insert(spec.method).second) {
        return absl::InvalidArgumentError(
            util::StrCat("config.baselines: duplicate method ", spec.method));
      }
      cfg.baselines.push_back(std::move(spec));
    }
  }
  {
    IFTX_ASSIGN_OR_RETURN(Section s, root.Child("split"));
    corpus::SplitMode mode{};
    std::string mode_name;
    IFTX_RETURN_IF_ERROR(s.Get("mode", &mode_name));
    if (!mode_name.empty()) {
      IFTX_ASSIGN_OR_RETURN(mode, corpus::ParseSplitMode(mode_name));
      cfg.split_mode = mode;
    }
    double frac = -1.0;
    IFTX_RETURN_IF_ERROR(s.Get("val_fraction", &frac));
    if (frac >= 0.0) cfg.val_fraction = frac;
    IFTX_RETURN_IF_ERROR(s.Finish());
  }
  {
    IFTX_ASSIGN_OR_RETURN(Section s, root.Child("describe"));
    DescribeConfig& d = cfg.describe;
    IFTX_RETURN_IF_ERROR(s.GetEnum("backend", &d.backend, ParseBackend));
    IFTX_RETURN_IF_ERROR(s.Get("model", &d.model));
    IFTX_RETURN_IF_ERROR(s.Get("wiki", &d.wiki));
    IFTX_RETURN_IF_ERROR(s.Get("max_retries", &d.max_retries));
    IFTX_RETURN_IF_ERROR(s.Get("concurrency", &d.concurrency));
    IFTX_RETURN_IF_ERROR(s.Finish());
  }
  {
    IFTX_ASSIGN_OR_RETURN(Section s, root.Child("train"));
    IFTX_RETURN_IF_ERROR(ParseTrain(std::move(s), &cfg.train));
  }
  {
    IFTX_ASSIGN_OR_RETURN(Section s, root.Child("influence"));
    IFTX_RETURN_IF_ERROR(s.Get("include_bias", &cfg.include_bias));
    IFTX_RETURN_IF_ERROR(s.Finish());
  }
  {
    IFTX_ASSIGN_OR_RETURN(Section s, root.Child("ift"));
    ift::ScoringMode& m = cfg.scoring;
    IFTX_RETURN_IF_ERROR(s.GetEnum("mode", &m.mode, ift::ParseScoreMode));
    IFTX_RETURN_IF_ERROR(s.GetEnum("image_scope", &m.image_scope, ift::ParseImageScope));
    IFTX_RETURN_IF_ERROR(
        s.GetEnum("proponent_mode", &m.proponent_mode, influence::ParseProponentMode));
    IFTX_RETURN_IF_ERROR(s.Get("proponent_k", &m.proponent_k));
    IFTX_RETURN_IF_ERROR(s.Get("texts_per_class", &cfg.texts_per_class));
    IFTX_RETURN_IF_ERROR(s.Finish());
  }
  {
    IFTX_ASSIGN_OR_RETURN(Section s, root.Child("xmodal"));
    xmodal::XModalConfig& x = cfg.xmodal;
    IFTX_RETURN_IF_ERROR(s.Get("text_epochs", &x.text_epochs));
    IFTX_RETURN_IF_ERROR(s.Get("text_lr0", &x.text_lr0));
    IFTX_RETURN_IF_ERROR(s.Get("text_batch_size", &x.text_batch_size));
    IFTX_RETURN_IF_ERROR(s.GetEnum("weight_application", &x.weight_application,
                                   xmodal::ParseWeightApplication));
    IFTX_RETURN_IF_ERROR(s.Get("text_replication", &x.text_replication));
    IFTX_RETURN_IF_ERROR(s.Finish());
  }
  {
    IFTX_ASSIGN_OR_RETURN(Section s, root.Child("judge"));
    JudgeConfig& j = cfg.judge;
    IFTX_RETURN_IF_ERROR(s.Get("enabled", &j.enabled));
    IFTX_RETURN_IF_ERROR(s.GetEnum("backend", &j.backend, ParseBackend));
    IFTX_RETURN_IF_ERROR(s.Get("model", &j.model));
    IFTX_RETURN_IF_ERROR(s.Get("num_classes", &j.num_classes));
    IFTX_RETURN_IF_ERROR(s.Get("instances_per_class", &j.instances_per_class));
    IFTX_RETURN_IF_ERROR(s.Get("max_retries", &j.max_retries));
    IFTX_RETURN_IF_ERROR(s.Get("concurrency", &j.concurrency));
    IFTX_RETURN_IF_ERROR(s.Finish());
    if (j.backend == Backend::kFile) {
      return absl::InvalidArgumentError("config.judge.backend: 'file' is not allowed");
    }
  }
  IFTX_RETURN_IF_ERROR(root.Finish());

  cfg.train.seed = cfg.seed;
  IFTX_RETURN_IF_ERROR(trainer::ValidateTrainConfig(cfg.train));
  cfg.xmodal.image_stage = cfg.train;
  IFTX_RETURN_IF_ERROR(xmodal::ValidateXModalConfig(cfg.xmodal));
  if (cfg.texts_per_class < 1) {
    return absl::InvalidArgumentError("config.ift.texts_per_class must be >= 1");
  }
  return cfg;
}

absl::StatusOr<PipelineConfig> LoadConfig(const std::string& path) {
  absl::StatusOr<std::string> text = util::ReadFile(path);
  if (!text.ok()) {
    return absl::InvalidArgumentError(
        util::StrCat("cannot read config ", path, ": ", text.status().message()));
  }
  std::string dir = std::filesystem::path(path).parent_path().string();
  if (dir.empty()) dir = ".";
  absl::StatusOr<PipelineConfig> cfg = ParseConfig(*text, dir);
  if (!cfg.ok()) {
    return absl::Status(cfg.status().code(),
                        util::StrCat(path, ": ", cfg.status().message()));
  }
  return cfg;
}

std::string CanonicalJson(const PipelineConfig& cfg) {
  json baselines = json::array();
  for (const BaselineSpec& b : cfg.baselines) {
    baselines.push_back({{"method", b.method},
                         {"descriptions", b.descriptions},
                         {"embeddings", b.embeddings}});
  }
  const trainer::TrainConfig& t = cfg.train;
  const json doc = {
      {"seed", cfg.seed},
      {"normalize_inputs", cfg.normalize_inputs},
      {"export_projection", cfg.export_projection},
      {"paths",
       {{"manifest", cfg.paths.manifest},
        {"image_embeddings", cfg.paths.image_embeddings},
        {"text_embeddings", cfg.paths.text_embeddings},
        {"descriptions", cfg.paths.descriptions},
        {"llm_fixture", cfg.paths.llm_fixture},
        {"judge_fixture", cfg.paths.judge_fixture},
        {"cache", cfg.paths.cache}}},
      {"baselines", baselines},
      {"split",
       {{"mode", cfg.split_mode.has_value()
                     ? std::string(corpus::SplitModeName(*cfg.split_mode))
                     : std::string("manifest")},
        {"val_fraction", cfg.val_fraction.value_or(-1.0)}}},
      {"describe",
       {{"backend", std::string(BackendName(cfg.describe.backend))},
        {"model", cfg.describe.model},
        {"wiki", cfg.describe.wiki},
        {"max_retries", cfg.describe.max_retries},
        {"concurrency", cfg.describe.concurrency}}},
      {"train",
       {{"lr0", t.lr0},
        {"batch_size", t.batch_size},
        {"epochs", t.epochs},
        {"t_max", t.t_max},
        {"checkpoint_every", t.checkpoint_every},
        {"schedule", t.schedule == trainer::LrSchedule::kCosine ? "cosine" : "step"},
        {"step_every", t.step_every},
        {"step_gamma", t.step_gamma}}},
      {"influence", {{"include_bias", cfg.include_bias}}},
      {"ift",
       {{"mode", std::string(ift::ScoreModeName(cfg.scoring.mode))},
        {"image_scope", std::string(ift::ImageScopeName(cfg.scoring.image_scope))},
        {"proponent_mode",
         std::string(influence::ProponentModeName(cfg.scoring.proponent_mode))},
        {"proponent_k", cfg.scoring.proponent_k},
        {"texts_per_class", cfg.texts_per_class}}},
      {"xmodal",
       {{"text_epochs", cfg.xmodal.text_epochs},
        {"text_lr0", cfg.xmodal.text_lr0},
        {"text_batch_size", cfg.xmodal.text_batch_size},
        {"weight_application",
         std::string(xmodal::WeightApplicationName(cfg.xmodal.weight_application))},
        {"text_replication", cfg.xmodal.text_replication}}},
      {"judge",
       {{"enabled", cfg.judge.enabled},
        {"backend", std::string(BackendName(cfg.judge.backend))},
        {"model", cfg.judge.model},
        {"num_classes", cfg.judge.num_classes},
        {"instances_per_class", cfg.judge.instances_per_class},
        {"max_retries", cfg.judge.max_retries},
        {"concurrency", cfg.judge.concurrency}}},
  };
  return doc.dump();
}

std::string Fingerprint(const PipelineConfig& cfg) {
  return util::Sha256Hex(CanonicalJson(cfg));
}

absl::StatusOr<ift::ScoreMode> ParseModeFlag(std::string_view flag) {
  if (flag == "ift") return ift::ScoreMode::kIft;
  if (flag == "if") return ift::ScoreMode::kInfluenceOnly;
  if (flag == "clip") return ift::ScoreMode::kClipOnly;
  return absl::InvalidArgumentError(
      util::StrCat("--mode must be ift, if or clip, got '", flag, "'"));
}

absl::StatusOr<xmodal::WeightApplication> ParseWeightFlag(std::string_view flag) {
  if (flag == "loss") return xmodal::WeightApplication::kLossWeight;
  if (flag == "scale") return xmodal::WeightApplication::kEmbeddingScale;
  return absl::InvalidArgumentError(util::StrCat(
      "--weight-application must be loss or scale, got '", flag, "'"));
}

}  // namespace iftx::pipeline
