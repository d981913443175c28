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

#include "iftx/pipeline/stages.h"

#include <filesystem>
#include <map>
#include <memory>

#include "iftx/corpus/descriptions.h"
#include "iftx/corpus/manifest.h"
#include "iftx/descgen/generate.h"
#include "iftx/descgen/llm_client.h"
#include "iftx/descgen/openai_client.h"
#include "iftx/embed/kernels.h"
#include "iftx/embed/xemb_io.h"
#include "iftx/ift/ift.h"
#include "iftx/influence/tracin.h"
#include "iftx/judge/judge.h"
#include "iftx/pipeline/artifacts.h"
#include "iftx/pipeline/report.h"
#include "iftx/trainer/train.h"
#include "iftx/util/status_macros.h"
#include "iftx/util/text_io.h"
#include "iftx/xmodal/xmodal.h"
#include "json.hpp"

namespace iftx::pipeline {
namespace {

using nlohmann::json;

constexpr char kManifestFile[] = "manifest.json";
constexpr char kDescriptionsFile[] = "descriptions_ours.tsv";
constexpr char kDescribeErrorsFile[] = "describe_errors.tsv";
constexpr char kCheckpointIndex[] = "checkpoints.tsv";
constexpr char kTrainLog[] = "train_log.tsv";
constexpr char kInfluenceFile[] = "influence.tsv";
constexpr char kIftFile[] = "ift_scores.tsv";
constexpr char kProponentsFile[] = "proponents.tsv";
constexpr char kWeightsFile[] = "class_weights.tsv";
constexpr char kXModalResults[] = "results_xmodal.tsv";
constexpr char kZeroShotResults[] = "results_zeroshot.tsv";
constexpr char kJudgmentsFile[] = "judgments.jsonl";
constexpr char kJudgeMetricsFile[] = "judge_metrics.tsv";
constexpr char kProjectionFile[] = "projection.csv";
constexpr char kReportFile[] = "report.md";
constexpr char kOursMethod[] = "ours";

absl::Status WriteStamped(const PipelineConfig& cfg, std::string_view name,
                          std::string_view body) {
  return util::WriteFile(cfg.OutPath(name), Stamp(Fingerprint(cfg), body));
}

// Prefixes a status message, keeping its code.
absl::Status Context(const absl::Status& s, std::string_view what) {
  if (s.ok()) return s;
  return absl::Status(s.code(), util::StrCat(what, ": ", s.message()));
}

absl::StatusOr<corpus::DatasetManifest> LoadSplitManifest(
    const PipelineConfig& cfg) {
  IFTX_ASSIGN_OR_RETURN(const StampedText t,
                        ReadArtifact(cfg.OutPath(kManifestFile), "split"));
  return corpus::ParseManifest(t.body);
}

absl::StatusOr<embed::EmbeddingMatrix> LoadEmbeddings(const PipelineConfig& cfg,
                                                      const std::string& path,
                                                      std::string_view what) {
  IFTX_ASSIGN_OR_RETURN(const std::string bytes, ReadInput(path, what));
  absl::StatusOr<embed::EmbeddingMatrix> m = embed::DecodeEmbeddings(bytes);
  if (!m.ok()) return Context(m.status(), path);
  if (!cfg.normalize_inputs) return m;
  return embed::L2Normalize(*m);
}

absl::StatusOr<embed::EmbeddingMatrix> LoadImages(const PipelineConfig& cfg) {
  return LoadEmbeddings(cfg, cfg.Resolve(cfg.paths.image_embeddings),
                        "image embeddings");
}

// Rows named by `ids`; missing rows point at the encoder.
absl::StatusOr<embed::EmbeddingMatrix> LoadTextRows(
    const PipelineConfig& cfg, const std::string& path,
    const std::vector<std::string>& ids) {
  IFTX_ASSIGN_OR_RETURN(const embed::EmbeddingMatrix all,
                        LoadEmbeddings(cfg, path, "text embeddings"));
  absl::StatusOr<embed::EmbeddingMatrix> rows = all.SelectByIds(ids);
  if (!rows.ok()) {
    return Context(rows.status(),
                   util::StrCat(path, " (re-encode the descriptions)"));
  }
  return rows;
}

struct Labeled {
  embed::EmbeddingMatrix x;
  std::vector<int> labels;
};

absl::StatusOr<Labeled> SplitRows(const corpus::DatasetManifest& m,
                                  const embed::EmbeddingMatrix& images,
                                  corpus::Split split) {
  std::vector<std::string> ids;
  Labeled out;
  for (const corpus::SampleRecord* s : m.SamplesIn(split)) {
    ids.push_back(s->sample_id);
    out.labels.push_back(s->class_index);
  }
  absl::StatusOr<embed::EmbeddingMatrix> x = images.SelectByIds(ids);
  if (!x.ok()) {
    return Context(x.status(), util::StrCat(corpus::SplitName(split),
                                            " images (re-encode the images)"));
  }
  out.x = *std::move(x);
  return out;
}

absl::StatusOr<std::vector<corpus::DescriptionRecord>> LoadOurDescriptions(
    const PipelineConfig& cfg, const corpus::DatasetManifest& m) {
  IFTX_ASSIGN_OR_RETURN(const StampedText t,
                        ReadArtifact(cfg.OutPath(kDescriptionsFile), "describe"));
  return corpus::ParseDescriptions(t.body, kOursMethod, m);
}

struct Proponents {
  std::vector<ift::ProponentSet> sets;
  std::vector<double> weights;
};

absl::StatusOr<Proponents> LoadProponents(const PipelineConfig& cfg,
                                          const corpus::DatasetManifest& m) {
  IFTX_ASSIGN_OR_RETURN(const StampedText p,
                        ReadArtifact(cfg.OutPath(kProponentsFile), "select"));
  IFTX_ASSIGN_OR_RETURN(const std::vector<ift::IftRecord> records,
                        ift::ParseIftReport(p.body, m));
  Proponents out;
  std::map<int, size_t> slot;
  for (const ift::IftRecord& r : records) {
    const auto [it, fresh] = slot.emplace(r.class_index, out.sets.size());
    if (fresh) out.sets.push_back({r.class_index, {}, 0.0});
    out.sets[it->second].texts.push_back(r);
  }
  for (ift::ProponentSet& s : out.sets) {
    double sum = 0.0;
    for (const ift::IftRecord& r : s.texts) sum += r.total;
    s.class_weight_raw = sum / static_cast<double>(s.texts.size());
  }
  IFTX_ASSIGN_OR_RETURN(const StampedText w,
                        ReadArtifact(cfg.OutPath(kWeightsFile), "select"));
  out.weights.assign(m.num_classes(), 0.0);
  std::vector<bool> seen(m.num_classes(), false);
  bool header = false;
  for (std::string_view line : util::SplitLines(w.body)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    const std::vector<std::string_view> f = util::SplitFields(line, '\t');
    const std::optional<int> c = f.size() == 3 ? m.FindClass(f[0]) : std::nullopt;
    if (!c.has_value()) {
      return absl::DataLossError(util::StrCat("bad class weight line: ", line));
    }
    IFTX_ASSIGN_OR_RETURN(out.weights[*c], util::ParseDouble(f[2]));
    seen[*c] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    return absl::DataLossError("class_weights.tsv does not cover every class");
  }
  return out;
}

std::vector<std::string> ProponentIds(const Proponents& p) {
  std::vector<std::string> ids;
  for (const ift::ProponentSet& s : p.sets) {
    for (const ift::IftRecord& r : s.texts) ids.push_back(r.text_id);
  }
  return ids;
}

struct Baseline {
  std::string method;
  std::vector<corpus::DescriptionRecord> records;
  embed::EmbeddingMatrix embeddings;  // rows in record order
};

absl::StatusOr<std::vector<Baseline>> LoadBaselines(
    const PipelineConfig& cfg, const corpus::DatasetManifest& m) {
  std::vector<Baseline> out;
  for (const BaselineSpec& spec : cfg.baselines) {
    Baseline b;
    b.method = spec.method;
    IFTX_ASSIGN_OR_RETURN(const std::string text,
                          ReadInput(cfg.Resolve(spec.descriptions),
                                    util::StrCat(spec.method, " descriptions")));
    absl::StatusOr<std::vector<corpus::DescriptionRecord>> records =
        corpus::ParseDescriptions(text, spec.method, m);
    if (!records.ok()) return Context(records.status(), spec.descriptions);
    b.records = *std::move(records);
    std::vector<std::string> ids;
    for (const auto& r : b.records) ids.push_back(r.text_id);
    IFTX_ASSIGN_OR_RETURN(b.embeddings,
                          LoadTextRows(cfg, cfg.Resolve(spec.embeddings), ids));
    out.push_back(std::move(b));
  }
  return out;
}

// All of a method's descriptions as one unweighted set per class.
std::vector<ift::ProponentSet> SetsOf(
    const std::vector<corpus::DescriptionRecord>& records) {
  std::map<int, ift::ProponentSet> by_class;
  for (const corpus::DescriptionRecord& r : records) {
    ift::ProponentSet& s = by_class[r.class_index];
    s.class_index = r.class_index;
    s.texts.push_back({r.text_id, r.class_index, 0.0, 0.0, 0.0});
  }
  std::vector<ift::ProponentSet> out;
  for (auto& [c, s] : by_class) out.push_back(std::move(s));
  return out;
}

std::vector<int> ClassesOfRecords(
    const std::vector<corpus::DescriptionRecord>& records) {
  std::vector<int> out;
  for (const auto& r : records) out.push_back(r.class_index);
  return out;
}

absl::StatusOr<trainer::LinearHead> LoadImageHead(const PipelineConfig& cfg) {
  IFTX_ASSIGN_OR_RETURN(const StampedText index,
                        ReadArtifact(cfg.OutPath(kCheckpointIndex), "train"));
  for (std::string_view line : util::SplitLines(index.body)) {
    const std::vector<std::string_view> f = util::SplitFields(line, '\t');
    if (f.size() == 4 && f[0] == "final") {
      IFTX_ASSIGN_OR_RETURN(const trainer::Checkpoint ckpt,
                            trainer::ReadCheckpoint(cfg.OutPath(f[3])));
      return ckpt.params;
    }
  }
  return absl::DataLossError("checkpoints.tsv has no final head");
}

class CacheOnlyClient : public descgen::LlmClient {
 public:
  absl::StatusOr<std::string> Complete(const descgen::LlmRequest&) override {
    return absl::NotFoundError("response not cached and backend is cache_only");
  }
};

absl::StatusOr<std::unique_ptr<descgen::LlmClient>> MakeClient(
    const PipelineConfig& cfg, Backend backend, const std::string& fixture) {
  switch (backend) {
    case Backend::kFixture: {
      if (fixture.empty()) {
        return absl::InvalidArgumentError("fixture backend needs a fixture path");
      }
      IFTX_ASSIGN_OR_RETURN(const std::string text,
                            ReadInput(cfg.Resolve(fixture), "LLM fixture"));
      IFTX_ASSIGN_OR_RETURN(descgen::FixtureClient client,
                            descgen::FixtureClient::Parse(text));
      return std::unique_ptr<descgen::LlmClient>(
          new descgen::FixtureClient(std::move(client)));
    }
    case Backend::kOpenAi: {
      absl::StatusOr<std::unique_ptr<descgen::OpenAiClient>> client =
          descgen::OpenAiClient::FromEnvironment();
      if (!client.ok()) {
        return absl::InvalidArgumentError(client.status().message());
      }
      return std::unique_ptr<descgen::LlmClient>(std::move(*client));
    }
    case Backend::kCacheOnly:
      return std::unique_ptr<descgen::LlmClient>(new CacheOnlyClient());
    case Backend::kFile:
      break;
  }
  return absl::InvalidArgumentError("backend has no client");
}

// Subcommand that writes a report input, by file name.
std::string_view ProducerOf(const std::string& path) {
  const std::string name = std::filesystem::path(path).filename().string();
  if (name == kZeroShotResults) return "zeroshot";
  if (name == kJudgeMetricsFile) return "judge";
  return "xmodal";
}

std::string ResultsBody(const std::vector<std::string>& lines) {
  std::string out = "method\tdataset\ttrack\taccuracy\n";
  for (const std::string& l : lines) out += l;
  return out;
}

}  // namespace

absl::Status RunSplit(const PipelineConfig& cfg) {
  IFTX_ASSIGN_OR_RETURN(const std::string text,
                        ReadInput(cfg.Resolve(cfg.paths.manifest), "manifest"));
  absl::StatusOr<corpus::DatasetManifest> m = corpus::ParseManifest(text);
  if (!m.ok()) return Context(m.status(), cfg.paths.manifest);
  corpus::SplitSpec spec = m->split_policy;
  if (cfg.split_mode.has_value()) spec.mode = *cfg.split_mode;
  if (cfg.val_fraction.has_value()) spec.val_fraction = *cfg.val_fraction;
  spec.seed = cfg.seed;
  corpus::DatasetManifest out;
  switch (spec.mode) {
    case corpus::SplitMode::kOfficial:
      out = *m;
      out.split_policy = spec;
      break;
    case corpus::SplitMode::kCarveValFromTrain: {
      IFTX_ASSIGN_OR_RETURN(out, corpus::CarveValidation(*m, spec));
      break;
    }
    case corpus::SplitMode::kRandom: {
      IFTX_ASSIGN_OR_RETURN(out, corpus::AssignRandomSplit(*m, spec));
      break;
    }
  }
  json doc = json::parse(corpus::SerializeManifest(out));
  doc["fingerprint"] = Fingerprint(cfg);
  return util::WriteFile(cfg.OutPath(kManifestFile), doc.dump(2) + "\n");
}

absl::Status RunDescribe(const PipelineConfig& cfg) {
  IFTX_ASSIGN_OR_RETURN(const corpus::DatasetManifest m, LoadSplitManifest(cfg));
  std::vector<corpus::DescriptionRecord> records;
  std::vector<descgen::GenerationError> errors;
  if (cfg.describe.backend == Backend::kFile) {
    if (cfg.paths.descriptions.empty()) {
      return absl::InvalidArgumentError(
          "describe.backend 'file' needs paths.descriptions");
    }
    IFTX_ASSIGN_OR_RETURN(const std::string text,
                          ReadInput(cfg.Resolve(cfg.paths.descriptions),
                                    "descriptions"));
    IFTX_ASSIGN_OR_RETURN(records, corpus::ParseDescriptions(text, kOursMethod, m));
  } else {
    IFTX_ASSIGN_OR_RETURN(
        std::unique_ptr<descgen::LlmClient> client,
        MakeClient(cfg, cfg.describe.backend, cfg.paths.llm_fixture));
    descgen::ResponseCache cache(cfg.CacheDir());
    descgen::GenerationRequest req;
    req.model = cfg.describe.model;
    req.wiki_grounded = cfg.describe.wiki;
    req.max_retries = cfg.describe.max_retries;
    req.concurrency = cfg.describe.concurrency;
    req.method = kOursMethod;
    IFTX_ASSIGN_OR_RETURN(descgen::GenerationResult result,
                          descgen::GenerateDescriptions(m, req, *client, &cache));
    records = std::move(result.records);
    errors = std::move(result.errors);
  }
  IFTX_RETURN_IF_ERROR(WriteStamped(
      cfg, kDescriptionsFile,
      corpus::FormatDescriptions(
          records, m,
          {"method: ours",
           util::StrCat("wiki_grounded: ", cfg.describe.wiki ? "true" : "false")})));
  if (!errors.empty()) {
    IFTX_RETURN_IF_ERROR(WriteStamped(cfg, kDescribeErrorsFile,
                                      descgen::FormatErrors(errors, m)));
    return absl::UnavailableError(util::StrCat(
        errors.size(), " description request(s) failed; see ",
        cfg.OutPath(kDescribeErrorsFile)));
  }
  std::filesystem::remove(cfg.OutPath(kDescribeErrorsFile));
  return absl::OkStatus();
}

absl::Status RunTrain(const PipelineConfig& cfg) {
  IFTX_ASSIGN_OR_RETURN(const corpus::DatasetManifest m, LoadSplitManifest(cfg));
  IFTX_ASSIGN_OR_RETURN(const embed::EmbeddingMatrix images, LoadImages(cfg));
  IFTX_ASSIGN_OR_RETURN(const Labeled train,
                        SplitRows(m, images, corpus::Split::kTrain));
  if (train.x.empty()) return absl::FailedPreconditionError("no train samples");
  trainer::TrainConfig tc = cfg.train;
  tc.normalize_inputs = false;  // already applied on load
  IFTX_ASSIGN_OR_RETURN(
      const trainer::TrainResult result,
      trainer::Train(trainer::LinearHead::Zeros(m.num_classes(), train.x.dim()),
                     train.x, train.labels, tc));
  std::string index = "kind\tepoch\tlr\tfile\n";
  std::filesystem::remove_all(cfg.OutPath("checkpoints"));
  for (const trainer::Checkpoint& c : result.checkpoints) {
    const std::string name = fmt::format("checkpoints/epoch_{:04d}.xckpt", c.epoch);
    IFTX_RETURN_IF_ERROR(trainer::WriteCheckpoint(c, cfg.OutPath(name)));
    util::StrAppend(&index, "checkpoint\t", c.epoch, "\t",
                    util::FormatDouble(c.lr_at_save), "\t", name, "\n");
  }
  trainer::Checkpoint final_head{result.head, trainer::LearningRate(tc.epochs - 1, tc),
                                 tc.epochs};
  IFTX_RETURN_IF_ERROR(
      trainer::WriteCheckpoint(final_head, cfg.OutPath("head_images.xckpt")));
  util::StrAppend(&index, "final\t", tc.epochs, "\t",
                  util::FormatDouble(final_head.lr_at_save),
                  "\thead_images.xckpt\n");
  IFTX_RETURN_IF_ERROR(WriteStamped(cfg, kCheckpointIndex, index));
  std::string log = "epoch\tloss\n";
  for (size_t e = 0; e < result.epoch_losses.size(); ++e) {
    util::StrAppend(&log, e + 1, "\t", util::FormatDouble(result.epoch_losses[e]), "\n");
  }
  util::StrAppend(&log, "# train_accuracy: ",
                  util::FormatDouble(trainer::Accuracy(result.head, train.x, train.labels)),
                  "\n");
  return WriteStamped(cfg, kTrainLog, log);
}

absl::Status RunInfluence(const PipelineConfig& cfg) {
  IFTX_ASSIGN_OR_RETURN(const corpus::DatasetManifest m, LoadSplitManifest(cfg));
  IFTX_ASSIGN_OR_RETURN(const StampedText index,
                        ReadArtifact(cfg.OutPath(kCheckpointIndex), "train"));
  influence::CheckpointSet set;
  for (std::string_view line : util::SplitLines(index.body)) {
    const std::vector<std::string_view> f = util::SplitFields(line, '\t');
    if (f.size() != 4 || f[0] != "checkpoint") continue;
    absl::StatusOr<trainer::Checkpoint> c = trainer::ReadCheckpoint(cfg.OutPath(f[3]));
    if (!c.ok()) {
      if (c.status().code() == absl::StatusCode::kNotFound) {
        return absl::NotFoundError(util::StrCat(
            "missing checkpoint ", cfg.OutPath(f[3]), "; run `iftx train` first"));
      }
      return c.status();
    }
    set.checkpoints.push_back(*std::move(c));
  }
  IFTX_ASSIGN_OR_RETURN(const embed::EmbeddingMatrix images, LoadImages(cfg));
  IFTX_ASSIGN_OR_RETURN(const Labeled train,
                        SplitRows(m, images, corpus::Split::kTrain));
  IFTX_ASSIGN_OR_RETURN(const Labeled val, SplitRows(m, images, corpus::Split::kVal));
  if (val.x.empty()) {
    return absl::InvalidArgumentError(
        "the manifest has no validation samples; set split.mode to "
        "carve_val_from_train or random");
  }
  influence::TracInOptions opts;
  opts.include_bias = cfg.include_bias;
  IFTX_ASSIGN_OR_RETURN(
      const influence::InfluenceMatrix infl,
      influence::TracInMatrix(set, train.x, train.labels, val.x, val.labels, opts));
  return WriteStamped(cfg, kInfluenceFile, influence::FormatInfluenceMatrix(infl));
}

absl::Status RunIft(const PipelineConfig& cfg) {
  IFTX_ASSIGN_OR_RETURN(const corpus::DatasetManifest m, LoadSplitManifest(cfg));
  IFTX_ASSIGN_OR_RETURN(const StampedText it,
                        ReadArtifact(cfg.OutPath(kInfluenceFile), "influence"));
  IFTX_ASSIGN_OR_RETURN(const influence::InfluenceMatrix infl,
                        influence::ParseInfluenceMatrix(it.body));
  IFTX_ASSIGN_OR_RETURN(const std::vector<corpus::DescriptionRecord> ours,
                        LoadOurDescriptions(cfg, m));
  if (cfg.paths.text_embeddings.empty()) {
    return absl::InvalidArgumentError("paths.text_embeddings is required");
  }
  std::vector<std::string> text_ids;
  for (const auto& r : ours) text_ids.push_back(r.text_id);
  IFTX_ASSIGN_OR_RETURN(
      const embed::EmbeddingMatrix texts,
      LoadTextRows(cfg, cfg.Resolve(cfg.paths.text_embeddings), text_ids));
  IFTX_ASSIGN_OR_RETURN(const embed::EmbeddingMatrix images, LoadImages(cfg));
  IFTX_ASSIGN_OR_RETURN(const embed::EmbeddingMatrix train_images,
                        images.SelectByIds(infl.train_ids));
  IFTX_ASSIGN_OR_RETURN(const ift::ClipScoreTable clip,
                        ift::ClipTable(train_images, texts));
  IFTX_ASSIGN_OR_RETURN(const std::vector<int> train_classes,
                        ift::ClassesOf(m, infl.train_ids));
  IFTX_ASSIGN_OR_RETURN(const std::vector<int> val_classes,
                        ift::ClassesOf(m, infl.val_ids));
  const std::vector<int> text_classes = ClassesOfRecords(ours);
  IFTX_ASSIGN_OR_RETURN(
      const std::vector<ift::IftRecord> records,
      ift::IftScores(infl, clip, train_classes, val_classes, text_classes,
                     cfg.scoring));
  const std::vector<ift::ProponentSet> sets =
      ift::SelectProponentTexts(records, cfg.texts_per_class);
  return WriteStamped(cfg, kIftFile, ift::FormatIftReport(records, sets, m));
}

absl::Status RunSelect(const PipelineConfig& cfg) {
  IFTX_ASSIGN_OR_RETURN(const corpus::DatasetManifest m, LoadSplitManifest(cfg));
  IFTX_ASSIGN_OR_RETURN(const StampedText t, ReadArtifact(cfg.OutPath(kIftFile), "ift"));
  IFTX_ASSIGN_OR_RETURN(const std::vector<ift::IftRecord> records,
                        ift::ParseIftReport(t.body, m));
  const std::vector<ift::ProponentSet> sets =
      ift::SelectProponentTexts(records, cfg.texts_per_class);
  IFTX_ASSIGN_OR_RETURN(const ift::ClassWeights weights,
                        ift::DeriveClassWeights(sets, m.num_classes()));
  std::vector<ift::IftRecord> selected;
  for (const ift::ProponentSet& s : sets) {
    selected.insert(selected.end(), s.texts.begin(), s.texts.end());
  }
  IFTX_RETURN_IF_ERROR(
      WriteStamped(cfg, kProponentsFile, ift::FormatIftReport(selected, sets, m)));
  std::string body = "class\traw\tweight\n";
  if (weights.degenerate) body.insert(0, "# degenerate: uniform weights\n");
  for (const ift::ProponentSet& s : sets) {
    util::StrAppend(&body, m.classes[s.class_index].name, "\t",
                    util::FormatDouble(s.class_weight_raw), "\t",
                    util::FormatDouble(weights.weights[s.class_index]), "\n");
  }
  return WriteStamped(cfg, kWeightsFile, body);
}

absl::Status RunXModal(const PipelineConfig& cfg) {
  IFTX_ASSIGN_OR_RETURN(const corpus::DatasetManifest m, LoadSplitManifest(cfg));
  IFTX_ASSIGN_OR_RETURN(const Proponents p, LoadProponents(cfg, m));
  IFTX_ASSIGN_OR_RETURN(const trainer::LinearHead head, LoadImageHead(cfg));
  IFTX_ASSIGN_OR_RETURN(const embed::EmbeddingMatrix images, LoadImages(cfg));
  IFTX_ASSIGN_OR_RETURN(const Labeled train,
                        SplitRows(m, images, corpus::Split::kTrain));
  IFTX_ASSIGN_OR_RETURN(const Labeled test, SplitRows(m, images, corpus::Split::kTest));
  IFTX_ASSIGN_OR_RETURN(
      const embed::EmbeddingMatrix texts,
      LoadTextRows(cfg, cfg.Resolve(cfg.paths.text_embeddings), ProponentIds(p)));
  xmodal::XModalConfig x = cfg.xmodal;
  x.image_stage = cfg.train;
  x.normalize_inputs = false;  // already applied on load
  IFTX_ASSIGN_OR_RETURN(
      const xmodal::XModalResult ours,
      xmodal::RunCrossModal(train.x, train.labels, test.x, test.labels, texts,
                            p.sets, p.weights, m.num_classes(), x, head));
  std::vector<std::string> lines = {
      xmodal::FormatResultLine("only_images", m.dataset_name,
                               xmodal::Track::kOnlyImages,
                               ours.after_images.accuracy),
  };
  IFTX_ASSIGN_OR_RETURN(const std::vector<Baseline> baselines, LoadBaselines(cfg, m));
  // Baselines get uniform weights on the same scale as ours.
  const std::vector<double> uniform(m.num_classes(), 1.0 / m.num_classes());
  for (const Baseline& b : baselines) {
    IFTX_ASSIGN_OR_RETURN(
        const trainer::LinearHead tuned,
        xmodal::TrainTextStage(head, b.embeddings, SetsOf(b.records), uniform, x));
    lines.push_back(xmodal::FormatResultLine(
        b.method, m.dataset_name, xmodal::Track::kXModal,
        xmodal::EvaluateHead(tuned, test.x, test.labels).accuracy));
  }
  lines.push_back(xmodal::FormatResultLine(kOursMethod, m.dataset_name,
                                           xmodal::Track::kXModal,
                                           ours.after_texts.accuracy));
  return WriteStamped(cfg, kXModalResults, ResultsBody(lines));
}

absl::Status RunZeroShot(const PipelineConfig& cfg) {
  IFTX_ASSIGN_OR_RETURN(const corpus::DatasetManifest m, LoadSplitManifest(cfg));
  IFTX_ASSIGN_OR_RETURN(const Proponents p, LoadProponents(cfg, m));
  IFTX_ASSIGN_OR_RETURN(const embed::EmbeddingMatrix images, LoadImages(cfg));
  IFTX_ASSIGN_OR_RETURN(const Labeled test, SplitRows(m, images, corpus::Split::kTest));
  std::vector<xmodal::MethodDescriptions> methods;
  IFTX_ASSIGN_OR_RETURN(const std::vector<Baseline> baselines, LoadBaselines(cfg, m));
  for (const Baseline& b : baselines) {
    methods.push_back({b.method, b.embeddings, ClassesOfRecords(b.records)});
  }
  xmodal::MethodDescriptions ours{kOursMethod, {}, {}};
  IFTX_ASSIGN_OR_RETURN(
      ours.embeddings,
      LoadTextRows(cfg, cfg.Resolve(cfg.paths.text_embeddings), ProponentIds(p)));
  for (const ift::ProponentSet& s : p.sets) {
    for (size_t i = 0; i < s.texts.size(); ++i) ours.classes.push_back(s.class_index);
  }
  methods.push_back(std::move(ours));
  IFTX_ASSIGN_OR_RETURN(
      const std::vector<xmodal::MethodAccuracy> acc,
      xmodal::CompareMethods(methods, test.x, test.labels, m.num_classes()));
  std::vector<std::string> lines;
  for (const xmodal::MethodAccuracy& a : acc) {
    lines.push_back(xmodal::FormatResultLine(a.method, m.dataset_name,
                                             xmodal::Track::kZeroShot, a.accuracy));
  }
  return WriteStamped(cfg, kZeroShotResults, ResultsBody(lines));
}

absl::StatusOr<std::vector<judge::EvalInstance>> BuildJudgeInstances(
    const PipelineConfig& cfg) {
  IFTX_ASSIGN_OR_RETURN(const corpus::DatasetManifest m, LoadSplitManifest(cfg));
  IFTX_ASSIGN_OR_RETURN(const Proponents p, LoadProponents(cfg, m));
  IFTX_ASSIGN_OR_RETURN(const std::vector<corpus::DescriptionRecord> ours_all,
                        LoadOurDescriptions(cfg, m));
  std::map<std::string, const corpus::DescriptionRecord*> by_id;
  for (const auto& r : ours_all) by_id.emplace(r.text_id, &r);
  judge::MethodPool ours{kOursMethod, {}};
  for (const std::string& id : ProponentIds(p)) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) {
      return absl::DataLossError(util::StrCat(
          "proponent ", id, " is not in ", kDescriptionsFile,
          "; rerun `iftx ift` and `iftx select`"));
    }
    ours.records.push_back(*it->second);
  }
  std::vector<judge::MethodPool> pools;
  IFTX_ASSIGN_OR_RETURN(const std::vector<Baseline> baselines, LoadBaselines(cfg, m));
  for (const Baseline& b : baselines) pools.push_back({b.method, b.records});
  pools.push_back(std::move(ours));
  if (static_cast<int>(pools.size()) != judge::kEntriesPerInstance) {
    return absl::InvalidArgumentError(util::StrCat(
        "judge needs ", judge::kEntriesPerInstance - 1,
        " baselines besides ours, config has ", baselines.size()));
  }
  judge::SamplingOptions sampling;
  sampling.num_classes = cfg.judge.num_classes;
  sampling.instances_per_class = cfg.judge.instances_per_class;
  sampling.seed = cfg.seed;
  return judge::SampleInstances(m, pools, sampling);
}

absl::Status RunJudgeStage(const PipelineConfig& cfg) {
  if (!cfg.judge.enabled) return absl::OkStatus();
  IFTX_ASSIGN_OR_RETURN(std::vector<judge::EvalInstance> instances,
                        BuildJudgeInstances(cfg));
  if (cfg.judge.backend == Backend::kOpenAi) {
    // Sample paths are relative to the manifest.
    const std::string base =
        std::filesystem::path(cfg.Resolve(cfg.paths.manifest)).parent_path().string();
    for (judge::EvalInstance& inst : instances) {
      for (std::string* ref : {&inst.image_ref_a, &inst.image_ref_b}) {
        if (!std::filesystem::path(*ref).is_absolute()) {
          *ref = (std::filesystem::path(base) / *ref).string();
        }
      }
    }
  }
  IFTX_ASSIGN_OR_RETURN(
      std::unique_ptr<descgen::LlmClient> client,
      MakeClient(cfg, cfg.judge.backend, cfg.paths.judge_fixture));
  descgen::ResponseCache cache(cfg.CacheDir());
  judge::JudgeOptions opts;
  opts.model = cfg.judge.model;
  opts.max_retries = cfg.judge.max_retries;
  opts.concurrency = cfg.judge.concurrency;
  IFTX_ASSIGN_OR_RETURN(const judge::JudgeRun run,
                        judge::RunJudge(instances, opts, *client, &cache));
  IFTX_RETURN_IF_ERROR(
      WriteStamped(cfg, kJudgmentsFile, judge::FormatJudgments(run.records)));
  if (!run.errors.empty()) {
    return absl::UnavailableError(fmt::format(
        "{} judge instance(s) failed, e.g. {}", run.errors.size(), run.errors[0]));
  }
  std::vector<judge::JudgedInstance> judged;
  for (const judge::JudgmentRecord& r : run.records) {
    IFTX_ASSIGN_OR_RETURN(judge::JudgedInstance j, judge::Interpret(r));
    judged.push_back(std::move(j));
  }
  IFTX_ASSIGN_OR_RETURN(const std::vector<judge::JudgeMetric> metrics,
                        judge::Aggregate(std::move(judged)));
  return WriteStamped(cfg, kJudgeMetricsFile, judge::FormatMetrics(metrics));
}

absl::Status RunExportProjection(const PipelineConfig& cfg) {
  IFTX_ASSIGN_OR_RETURN(const corpus::DatasetManifest m, LoadSplitManifest(cfg));
  IFTX_ASSIGN_OR_RETURN(const Proponents p, LoadProponents(cfg, m));
  IFTX_ASSIGN_OR_RETURN(const embed::EmbeddingMatrix images, LoadImages(cfg));
  IFTX_ASSIGN_OR_RETURN(const Labeled test, SplitRows(m, images, corpus::Split::kTest));
  std::vector<std::string> ids = ProponentIds(p);
  std::vector<ProjectionText> info;
  for (const ift::ProponentSet& s : p.sets) {
    for (size_t i = 0; i < s.texts.size(); ++i) {
      info.push_back({s.class_index, kOursMethod});
    }
  }
  IFTX_ASSIGN_OR_RETURN(
      const embed::EmbeddingMatrix ours,
      LoadTextRows(cfg, cfg.Resolve(cfg.paths.text_embeddings), ids));
  std::vector<float> data(ours.data().begin(), ours.data().end());
  IFTX_ASSIGN_OR_RETURN(const std::vector<Baseline> baselines, LoadBaselines(cfg, m));
  for (const Baseline& b : baselines) {
    for (int r = 0; r < b.embeddings.count(); ++r) {
      ids.push_back(b.embeddings.id(r));
      info.push_back({b.records[r].class_index, b.method});
      data.insert(data.end(), b.embeddings.row(r).begin(), b.embeddings.row(r).end());
    }
  }
  IFTX_ASSIGN_OR_RETURN(
      const embed::EmbeddingMatrix texts,
      embed::EmbeddingMatrix::Create(ours.dim(), ids, std::move(data), false));
  std::vector<std::string> names;
  for (const corpus::ClassEntry& c : m.classes) names.push_back(c.name);
  IFTX_ASSIGN_OR_RETURN(
      const std::string csv,
      ExportProjection(test.x, test.labels, texts, info, names));
  return WriteStamped(cfg, kProjectionFile, csv);
}

std::vector<std::string> DefaultReportInputs(const PipelineConfig& cfg) {
  std::vector<std::string> out;
  for (const char* name : {kZeroShotResults, kXModalResults, kJudgeMetricsFile}) {
    if (util::FileExists(cfg.OutPath(name))) out.push_back(cfg.OutPath(name));
  }
  return out;
}

absl::Status RunReport(const std::vector<std::string>& inputs, bool force,
                       const std::string& output_path) {
  if (inputs.empty()) {
    return absl::NotFoundError(
        "no results to report; run `iftx xmodal` or `iftx zeroshot` first");
  }
  std::vector<xmodal::ResultRow> rows;
  std::vector<judge::JudgeMetric> metrics;
  std::string fingerprint;
  for (size_t i = 0; i < inputs.size(); ++i) {
    IFTX_ASSIGN_OR_RETURN(const StampedText t,
                          ReadArtifact(inputs[i], ProducerOf(inputs[i])));
    if (i == 0) {
      fingerprint = t.fingerprint;
    } else if (!force) {
      absl::Status s = CheckFingerprint(inputs[i], fingerprint, t.fingerprint);
      if (!s.ok()) {
        return absl::FailedPreconditionError(util::StrCat(
            s.message(), " (first input ", inputs[0], "); pass --force to merge"));
      }
    }
    if (std::string_view(t.body).starts_with("method\tcriterion\t")) {
      IFTX_ASSIGN_OR_RETURN(std::vector<judge::JudgeMetric> m, ParseMetrics(t.body));
      metrics.insert(metrics.end(), m.begin(), m.end());
      continue;
    }
    std::string body = t.body;
    if (std::string_view(body).starts_with("method\tdataset\t")) {
      body = body.substr(body.find('\n') + 1);
    }
    absl::StatusOr<std::vector<xmodal::ResultRow>> r = xmodal::ParseResults(body);
    if (!r.ok()) return Context(r.status(), inputs[i]);
    rows.insert(rows.end(), r->begin(), r->end());
  }
  std::string md = util::StrCat("<!-- iftx-fingerprint: ",
                                force ? "mixed" : fingerprint, " -->\n\n");
  md += FormatResultTables(rows);
  if (!metrics.empty()) {
    if (!rows.empty()) md += "\n";
    md += FormatJudgeTable(metrics);
  }
  return util::WriteFile(output_path, md);
}

absl::Status RunPipeline(const PipelineConfig& cfg) {
  const json resolved = {{"fingerprint", Fingerprint(cfg)},
                         {"config", json::parse(CanonicalJson(cfg))}};
  IFTX_RETURN_IF_ERROR(
      util::WriteFile(cfg.OutPath("config.resolved.json"), resolved.dump(2) + "\n"));
  const std::pair<const char*, absl::Status (*)(const PipelineConfig&)> stages[] = {
      {"split", RunSplit},         {"describe", RunDescribe},
      {"train", RunTrain},         {"influence", RunInfluence},
      {"ift", RunIft},             {"select", RunSelect},
      {"xmodal", RunXModal},       {"zeroshot", RunZeroShot},
      {"judge", RunJudgeStage},    {"export-proj", RunExportProjection},
  };
  for (const auto& [name, run] : stages) {
    if (std::string_view(name) == "export-proj" && !cfg.export_projection) continue;
    IFTX_RETURN_IF_ERROR(Context(run(cfg), name));
  }
  return RunReport(DefaultReportInputs(cfg), /*force=*/false, cfg.OutPath(kReportFile));
}

}  // namespace iftx::pipeline
