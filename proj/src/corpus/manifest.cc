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

#include "iftx/corpus/manifest.h"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "iftx/util/rng.h"
#include "iftx/util/status_macros.h"
#include "iftx/util/text_io.h"
#include "json.hpp"

namespace iftx::corpus {
namespace {

using json = nlohmann::json;

// Guards against val_fraction * n landing a hair below an integer.
constexpr double kFloorSlack = 1e-9;

absl::StatusOr<std::string> RequireString(const json& obj, const char* key,
                                          const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    return absl::InvalidArgumentError(
        util::StrCat(where, ": missing string field '", key, "'"));
  }
  return it->get<std::string>();
}

absl::StatusOr<int64_t> RequireInt(const json& obj, const char* key,
                                   const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number_integer()) {
    return absl::InvalidArgumentError(
        util::StrCat(where, ": missing integer field '", key, "'"));
  }
  return it->get<int64_t>();
}

std::optional<std::string> OptionalString(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

}  // namespace

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "?";
}

absl::StatusOr<Split> ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  return absl::InvalidArgumentError(util::StrCat("unknown split '", name, "'"));
}

std::string_view SplitModeName(SplitMode mode) {
  switch (mode) {
    case SplitMode::kOfficial:
      return "official";
    case SplitMode::kCarveValFromTrain:
      return "carve_val_from_train";
    case SplitMode::kRandom:
      return "random";
  }
  return "?";
}

absl::StatusOr<SplitMode> ParseSplitMode(std::string_view name) {
  if (name == "official") return SplitMode::kOfficial;
  if (name == "carve_val_from_train") return SplitMode::kCarveValFromTrain;
  if (name == "random") return SplitMode::kRandom;
  return absl::InvalidArgumentError(
      util::StrCat("unknown split mode '", name, "'"));
}

std::array<size_t, 3> DatasetManifest::SplitSizes() const {
  std::array<size_t, 3> sizes{0, 0, 0};
  for (const SampleRecord& s : samples) ++sizes[static_cast<size_t>(s.split)];
  return sizes;
}

std::vector<const SampleRecord*> DatasetManifest::SamplesIn(Split split) const {
  std::vector<const SampleRecord*> out;
  for (const SampleRecord& s : samples) {
    if (s.split == split) out.push_back(&s);
  }
  return out;
}

std::optional<int> DatasetManifest::FindClass(std::string_view name) const {
  const std::string folded = util::FoldName(name);
  for (const ClassEntry& c : classes) {
    if (util::FoldName(c.name) == folded) return c.index;
  }
  return std::nullopt;
}

absl::Status ValidateManifest(const DatasetManifest& manifest) {
  for (size_t i = 0; i < manifest.classes.size(); ++i) {
    const ClassEntry& c = manifest.classes[i];
    if (c.index != static_cast<int>(i)) {
      return absl::InvalidArgumentError(util::StrCat(
          "classes[", i, "]: class indices must be contiguous from 0, found ",
          c.index));
    }
    if (util::TrimWhitespace(c.name).empty()) {
      return absl::InvalidArgumentError(
          util::StrCat("classes[", i, "]: empty class name"));
    }
  }
  const int num_classes = manifest.num_classes();
  std::unordered_set<std::string> seen;
  for (size_t i = 0; i < manifest.samples.size(); ++i) {
    const SampleRecord& s = manifest.samples[i];
    if (s.class_index < 0 || s.class_index >= num_classes) {
      return absl::InvalidArgumentError(
          util::StrCat("samples[", i, "] (id '", s.sample_id,
                       "'): dangling class index ", s.class_index,
                       " (classes: ", num_classes, ")"));
    }
    if (!seen.insert(s.sample_id).second) {
      return absl::InvalidArgumentError(util::StrCat(
          "samples[", i, "]: duplicate sample id '", s.sample_id, "'"));
    }
  }
  const SplitSpec& policy = manifest.split_policy;
  if (policy.mode != SplitMode::kOfficial &&
      !(policy.val_fraction > 0.0 && policy.val_fraction < 1.0)) {
    return absl::InvalidArgumentError(util::StrCat(
        "split: val_fraction must be in (0,1), got ", policy.val_fraction));
  }
  return absl::OkStatus();
}

absl::StatusOr<DatasetManifest> ParseManifest(std::string_view json_text) {
  json doc = json::parse(json_text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    // Re-parse with exceptions only to recover the byte position.
    try {
      (void)json::parse(json_text);
    } catch (const json::parse_error& e) {
      return absl::InvalidArgumentError(
          util::StrCat("manifest parse error: ", e.what()));
    }
    return absl::InvalidArgumentError("manifest parse error");
  }
  if (!doc.is_object()) {
    return absl::InvalidArgumentError("manifest: top level must be an object");
  }

  DatasetManifest manifest;
  IFTX_ASSIGN_OR_RETURN(manifest.dataset_name,
                        RequireString(doc, "dataset", "manifest"));

  const auto classes_it = doc.find("classes");
  if (classes_it == doc.end() || !classes_it->is_array()) {
    return absl::InvalidArgumentError("manifest: missing array 'classes'");
  }
  std::vector<ClassEntry> classes;
  for (size_t i = 0; i < classes_it->size(); ++i) {
    const json& item = (*classes_it)[i];
    const std::string where = util::StrCat("classes[", i, "]");
    if (!item.is_object()) {
      return absl::InvalidArgumentError(util::StrCat(where, ": not an object"));
    }
    ClassEntry entry;
    IFTX_ASSIGN_OR_RETURN(const int64_t index, RequireInt(item, "index", where));
    entry.index = static_cast<int>(index);
    IFTX_ASSIGN_OR_RETURN(entry.name, RequireString(item, "name", where));
    entry.superclass = OptionalString(item, "superclass");
    entry.wikipedia_url = OptionalString(item, "wikipedia_url");
    classes.push_back(std::move(entry));
  }
  std::stable_sort(classes.begin(), classes.end(),
                   [](const ClassEntry& a, const ClassEntry& b) {
                     return a.index < b.index;
                   });
  for (size_t i = 0; i + 1 < classes.size(); ++i) {
    if (classes[i].index == classes[i + 1].index) {
      return absl::InvalidArgumentError(util::StrCat(
          "classes: duplicate class index ", classes[i].index));
    }
  }
  manifest.classes = std::move(classes);

  const auto samples_it = doc.find("samples");
  if (samples_it == doc.end() || !samples_it->is_array()) {
    return absl::InvalidArgumentError("manifest: missing array 'samples'");
  }
  manifest.samples.reserve(samples_it->size());
  for (size_t i = 0; i < samples_it->size(); ++i) {
    const json& item = (*samples_it)[i];
    const std::string where = util::StrCat("samples[", i, "]");
    if (!item.is_object()) {
      return absl::InvalidArgumentError(util::StrCat(where, ": not an object"));
    }
    SampleRecord record;
    IFTX_ASSIGN_OR_RETURN(record.sample_id, RequireString(item, "id", where));
    IFTX_ASSIGN_OR_RETURN(const int64_t cls, RequireInt(item, "class", where));
    record.class_index = static_cast<int>(cls);
    IFTX_ASSIGN_OR_RETURN(const std::string split_name,
                          RequireString(item, "split", where));
    auto split = ParseSplit(split_name);
    if (!split.ok()) {
      return absl::InvalidArgumentError(
          util::StrCat(where, ": ", split.status().message()));
    }
    record.split = *split;
    record.source_path = OptionalString(item, "path").value_or("");
    manifest.samples.push_back(std::move(record));
  }

  if (auto it = doc.find("split"); it != doc.end()) {
    if (!it->is_object()) {
      return absl::InvalidArgumentError("split: not an object");
    }
    IFTX_ASSIGN_OR_RETURN(const std::string mode_name,
                          RequireString(*it, "mode", "split"));
    IFTX_ASSIGN_OR_RETURN(manifest.split_policy.mode,
                          ParseSplitMode(mode_name));
    if (auto f = it->find("val_fraction"); f != it->end()) {
      if (!f->is_number()) {
        return absl::InvalidArgumentError("split: val_fraction not a number");
      }
      manifest.split_policy.val_fraction = f->get<double>();
    }
    if (auto s = it->find("seed"); s != it->end()) {
      if (!s->is_number_integer()) {
        return absl::InvalidArgumentError("split: seed not an integer");
      }
      manifest.split_policy.seed = s->get<uint64_t>();
    }
  }

  IFTX_RETURN_IF_ERROR(ValidateManifest(manifest));
  return manifest;
}

absl::StatusOr<DatasetManifest> LoadManifest(const std::string& path) {
  IFTX_ASSIGN_OR_RETURN(const std::string text, util::ReadFile(path));
  auto manifest = ParseManifest(text);
  if (!manifest.ok()) {
    return absl::Status(manifest.status().code(),
                        util::StrCat(path, ": ", manifest.status().message()));
  }
  return manifest;
}

std::string SerializeManifest(const DatasetManifest& manifest) {
  json doc;
  doc["dataset"] = manifest.dataset_name;
  json classes = json::array();
  for (const ClassEntry& c : manifest.classes) {
    json item;
    item["index"] = c.index;
    item["name"] = c.name;
    if (c.superclass) item["superclass"] = *c.superclass;
    if (c.wikipedia_url) item["wikipedia_url"] = *c.wikipedia_url;
    classes.push_back(std::move(item));
  }
  doc["classes"] = std::move(classes);
  json samples = json::array();
  for (const SampleRecord& s : manifest.samples) {
    json item;
    item["id"] = s.sample_id;
    item["class"] = s.class_index;
    item["split"] = std::string(SplitName(s.split));
    item["path"] = s.source_path;
    samples.push_back(std::move(item));
  }
  doc["samples"] = std::move(samples);
  doc["split"] = {{"mode", std::string(SplitModeName(manifest.split_policy.mode))},
                  {"val_fraction", manifest.split_policy.val_fraction},
                  {"seed", manifest.split_policy.seed}};
  return doc.dump(1) + "\n";
}

absl::Status SaveManifest(const DatasetManifest& manifest,
                          const std::string& path) {
  return util::WriteFile(path, SerializeManifest(manifest));
}

size_t CarvedCount(size_t class_train_count, double val_fraction) {
  return static_cast<size_t>(std::floor(
      val_fraction * static_cast<double>(class_train_count) + kFloorSlack));
}

absl::StatusOr<DatasetManifest> CarveValidation(const DatasetManifest& manifest,
                                                const SplitSpec& spec) {
  if (spec.mode != SplitMode::kCarveValFromTrain) {
    return absl::FailedPreconditionError(
        "carve_validation requires split mode carve_val_from_train");
  }
  if (!(spec.val_fraction > 0.0 && spec.val_fraction < 1.0)) {
    return absl::InvalidArgumentError(util::StrCat(
        "val_fraction must be in (0,1), got ", spec.val_fraction));
  }
  if (manifest.SplitSizes()[static_cast<size_t>(Split::kVal)] != 0) {
    return absl::FailedPreconditionError(
        "manifest already has validation samples; refusing to re-split");
  }

  std::vector<std::vector<size_t>> train_by_class(manifest.classes.size());
  for (size_t i = 0; i < manifest.samples.size(); ++i) {
    const SampleRecord& s = manifest.samples[i];
    if (s.split == Split::kTrain) train_by_class[s.class_index].push_back(i);
  }

  DatasetManifest out = manifest;
  out.split_policy = spec;
  for (size_t c = 0; c < train_by_class.size(); ++c) {
    std::vector<size_t>& members = train_by_class[c];
    if (members.size() < 2) {
      return absl::FailedPreconditionError(util::StrCat(
          "class ", c, " ('", manifest.classes[c].name, "') has ",
          members.size(), " train samples; cannot stratify"));
    }
    util::Rng rng(util::MixSeed(spec.seed, c));
    rng.Shuffle(std::span<size_t>(members));
    const size_t carved = CarvedCount(members.size(), spec.val_fraction);
    for (size_t k = 0; k < carved; ++k) {
      out.samples[members[k]].split = Split::kVal;
    }
  }
  return out;
}

absl::StatusOr<DatasetManifest> AssignRandomSplit(
    const DatasetManifest& manifest, const SplitSpec& spec) {
  if (spec.mode != SplitMode::kRandom) {
    return absl::FailedPreconditionError(
        "random split requires split mode random");
  }
  if (!(spec.val_fraction > 0.0 && spec.val_fraction < 0.5)) {
    return absl::InvalidArgumentError(util::StrCat(
        "random split needs val_fraction in (0,0.5), got ", spec.val_fraction));
  }
  std::vector<std::vector<size_t>> by_class(manifest.classes.size());
  for (size_t i = 0; i < manifest.samples.size(); ++i) {
    by_class[manifest.samples[i].class_index].push_back(i);
  }
  DatasetManifest out = manifest;
  out.split_policy = spec;
  for (size_t c = 0; c < by_class.size(); ++c) {
    std::vector<size_t>& members = by_class[c];
    if (members.size() < 3) {
      return absl::FailedPreconditionError(util::StrCat(
          "class ", c, " ('", manifest.classes[c].name, "') has ",
          members.size(), " samples; cannot split three ways"));
    }
    util::Rng rng(util::MixSeed(spec.seed, c));
    rng.Shuffle(std::span<size_t>(members));
    const size_t held = CarvedCount(members.size(), spec.val_fraction);
    for (size_t k = 0; k < members.size(); ++k) {
      out.samples[members[k]].split = k < held       ? Split::kVal
                                      : k < 2 * held ? Split::kTest
                                                     : Split::kTrain;
    }
  }
  return out;
}

}  // namespace iftx::corpus
