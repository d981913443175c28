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

// Writes the small synthetic corpus used by the end-to-end tests: a manifest
// with two superclasses, clustered image embeddings, LLM and judge fixtures
// recorded from scripted responses, our description embeddings of varying
// quality and four baseline methods.
//
//   make_synthetic --out testdata/synthetic

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "fmt/ranges.h"
#include "iftx/corpus/descriptions.h"
#include "iftx/corpus/manifest.h"
#include "iftx/descgen/generate.h"
#include "iftx/descgen/llm_client.h"
#include "iftx/embed/xemb_io.h"
#include "iftx/judge/judge.h"
#include "iftx/pipeline/config.h"
#include "iftx/pipeline/stages.h"
#include "iftx/util/rng.h"
#include "iftx/util/status_macros.h"
#include "iftx/util/text_io.h"
#include "json.hpp"

namespace iftx {
namespace {

using nlohmann::ordered_json;

constexpr int kDim = 16;
constexpr int kTrainPerClass = 20;
constexpr int kTestPerClass = 8;
constexpr uint64_t kSeed = 7;

struct ClassSpec {
  const char* name;
  const char* superclass;
  const char* url;
};

constexpr ClassSpec kClasses[] = {
    {"Alpha Finch", "finch", "https://en.wikipedia.org/wiki/Alpha_finch"},
    {"Beta Finch", "finch", "https://en.wikipedia.org/wiki/Beta_finch"},
    {"Gamma Terrier", "terrier", "https://en.wikipedia.org/wiki/Gamma_terrier"},
    {"Delta Terrier", "terrier", "https://en.wikipedia.org/wiki/Delta_terrier"},
};

const std::map<std::string, std::vector<std::string>>& Components() {
  static const auto* m = new std::map<std::string, std::vector<std::string>>{
      {"finch", {"Beak", "Crown", "Wing Bars", "Tail", "Breast", "Legs"}},
      {"terrier", {"Coat", "Ears", "Muzzle", "Tail", "Legs", "Eyes"}},
  };
  return *m;
}

// Alignment of our j-th component text with its class center; the last two
// point elsewhere.
constexpr double kComponentQuality[] = {1.0, 0.8, 0.6, 0.3, 0.0, -0.3};

struct BaselineSpec {
  const char* method;
  double quality;
  const char* features[3];
};

constexpr BaselineSpec kBaselines[] = {
    {"menon", 0.5, {"a {} which has a small head", "a {} which has short legs",
                    "a {} which is brown"}},
    {"labo", 0.4, {"a photo of a {}, distinctive shape", "a photo of a {}, fine texture",
                   "a photo of a {}, muted colors"}},
    {"cupl", 0.6, {"What does a {} look like? Compact and sturdy",
                   "Identifying a {}: look for the markings",
                   "A {} seen from the side"}},
    {"vdt", 0.3, {"{}, plain", "{}, outdoors", "{}, close up"}},
};

std::vector<float> Noisy(const std::vector<float>& center, double scale,
                         double noise, util::Rng& rng) {
  std::vector<float> v(center.size());
  for (size_t d = 0; d < v.size(); ++d) {
    v[d] = static_cast<float>(scale * center[d] + noise * rng.Normal());
  }
  return v;
}

std::vector<std::vector<float>> Centers(util::Rng& rng) {
  std::vector<std::vector<float>> centers;
  for (size_t c = 0; c < std::size(kClasses); ++c) {
    std::vector<float> v(kDim);
    double norm = 0.0;
    for (float& x : v) {
      x = static_cast<float>(rng.Normal());
      norm += x * x;
    }
    for (float& x : v) x = static_cast<float>(x / std::sqrt(norm));
    centers.push_back(std::move(v));
  }
  return centers;
}

absl::Status WriteMatrix(const std::vector<std::string>& ids,
                         const std::vector<std::vector<float>>& rows,
                         const std::string& path) {
  std::vector<float> data;
  for (const auto& r : rows) data.insert(data.end(), r.begin(), r.end());
  IFTX_ASSIGN_OR_RETURN(
      const embed::EmbeddingMatrix m,
      embed::EmbeddingMatrix::Create(kDim, ids, std::move(data), false));
  return embed::WriteEmbeddings(m, path);
}

// Records every answered request as a fixture entry.
class RecordingClient : public descgen::LlmClient {
 public:
  explicit RecordingClient(descgen::ScriptedClient::Script script)
      : script_(std::move(script)) {}

  absl::StatusOr<std::string> Complete(const descgen::LlmRequest& r) override {
    IFTX_ASSIGN_OR_RETURN(std::string response, script_(r));
    std::lock_guard<std::mutex> lock(mu_);
    entries_.emplace(descgen::PromptKey(r), response);
    return response;
  }

  std::string Fixture(const std::string& label) const {
    std::string out;
    for (const auto& [key, response] : entries_) {
      out += descgen::FormatFixtureEntry(key, label, response);
    }
    return out;
  }

 private:
  descgen::ScriptedClient::Script script_;
  std::mutex mu_;
  std::map<std::string, std::string> entries_;
};

std::string_view Between(std::string_view s, std::string_view open,
                         std::string_view close) {
  const size_t a = s.find(open);
  if (a == std::string_view::npos) return {};
  const size_t from = a + open.size();
  return s.substr(from, s.find(close, from) - from);
}

absl::StatusOr<std::string> DescribeScript(const descgen::LlmRequest& r) {
  const std::string_view tail =
      std::string_view(r.prompt).substr(r.prompt.rfind("Q : "));
  if (tail.starts_with("Q : Can you tell me the components of ")) {
    const std::string subject(
        Between(tail, "components of ", " from the perspective"));
    const auto it = Components().find(subject);
    if (it == Components().end()) return absl::NotFoundError(subject);
    std::string out = "A : ";
    for (size_t i = 0; i < it->second.size(); ++i) {
      util::StrAppend(&out, i + 1, ". ", it->second[i], "\n");
    }
    return out;
  }
  const std::string_view component = Between(tail, "about ", " in this url ");
  const std::string_view url = Between(tail, " in this url ", " in one line");
  for (const ClassSpec& c : kClasses) {
    if (url == c.url) {
      return util::StrCat("A : ", component, " of the ", c.name,
                          ", distinctive shape and color pattern");
    }
  }
  return absl::NotFoundError(util::StrCat("no class for url ", url));
}

// Judge responses favor our description on helpfulness and relevance;
// informativeness goes to the first baseline shown.
absl::StatusOr<std::string> JudgeScript(
    const std::map<std::string, const judge::EvalInstance*>& by_prompt,
    const descgen::LlmRequest& r) {
  const auto it = by_prompt.find(r.prompt);
  if (it == by_prompt.end()) return absl::NotFoundError("unknown judge prompt");
  const judge::EvalInstance& inst = *it->second;
  int ours = 0, other = 0;
  for (int i = 0; i < judge::kEntriesPerInstance; ++i) {
    if (inst.entries[i].method == "ours") {
      ours = i + 1;
    } else if (other == 0) {
      other = i + 1;
    }
  }
  const bool top1 = r.prompt.find("Top-1") != std::string::npos &&
                    r.prompt.find("Rank 1") == std::string::npos;
  std::string out;
  for (judge::Criterion c : judge::kCriteria) {
    const std::string name(judge::CriterionName(c));
    const int best = c == judge::Criterion::kInformative ? other : ours;
    if (top1) {
      util::StrAppend(&out, "### ", name, " Ranking:\n\n**Top-1**: Description ",
                      best, "\n\n");
      continue;
    }
    std::vector<int> rest;
    for (int p = 1; p <= judge::kEntriesPerInstance; ++p) {
      if (p != best) rest.push_back(p);
    }
    util::StrAppend(&out, "### ", name, " Ranking:\n\n**Rank 1**: Description ",
                    best, "\n**Rank 2**: Descriptions ", fmt::format("{}", fmt::join(rest, ", ")),
                    "\n\n");
  }
  return out;
}

absl::Status Run(const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const auto path = [&](std::string_view name) {
    return (fs::path(out_dir) / name).string();
  };
  util::Rng rng(kSeed);
  const std::vector<std::vector<float>> centers = Centers(rng);

  corpus::DatasetManifest m;
  m.dataset_name = "synthetic";
  std::vector<std::string> image_ids;
  std::vector<std::vector<float>> images;
  for (int c = 0; c < static_cast<int>(std::size(kClasses)); ++c) {
    m.classes.push_back({c, kClasses[c].name, kClasses[c].superclass, kClasses[c].url});
    for (int i = 0; i < kTrainPerClass + kTestPerClass; ++i) {
      const std::string id = fmt::format("img_{}_{:02d}", c, i);
      m.samples.push_back({id, c,
                           i < kTrainPerClass ? corpus::Split::kTrain
                                              : corpus::Split::kTest,
                           fmt::format("images/{}.jpg", id)});
      image_ids.push_back(id);
      images.push_back(Noisy(centers[c], 1.0, 0.3, rng));
    }
  }
  IFTX_RETURN_IF_ERROR(corpus::SaveManifest(m, path("manifest.json")));
  IFTX_RETURN_IF_ERROR(WriteMatrix(image_ids, images, path("images.xemb")));

  ordered_json config = {
      {"seed", 0},
      {"paths",
       {{"manifest", "manifest.json"},
        {"image_embeddings", "images.xemb"},
        {"text_embeddings", "texts_ours.xemb"},
        {"llm_fixture", "llm_fixture.tsv"},
        {"judge_fixture", "judge_fixture.tsv"}}},
      {"baselines", ordered_json::array()},
      {"split", {{"mode", "carve_val_from_train"}, {"val_fraction", 0.25}}},
      {"describe", {{"backend", "fixture"}, {"wiki", true}}},
      {"train",
       {{"lr0", 0.5}, {"batch_size", 16}, {"epochs", 30}, {"checkpoint_every", 5}}},
      {"ift", {{"mode", "ift"}, {"texts_per_class", 3}}},
      {"xmodal", {{"text_epochs", 10}, {"text_lr0", 0.05}, {"text_batch_size", 8}}},
      {"judge", {{"enabled", true}, {"backend", "fixture"}, {"num_classes", 4},
                 {"instances_per_class", 2}}},
      {"export_projection", true},
  };

  // Baselines: three descriptions per class.
  for (const BaselineSpec& b : kBaselines) {
    std::vector<corpus::DescriptionRecord> records;
    std::vector<std::string> ids;
    std::vector<std::vector<float>> rows;
    for (int c = 0; c < m.num_classes(); ++c) {
      for (int k = 0; k < 3; ++k) {
        corpus::DescriptionRecord r;
        r.class_index = c;
        r.method = b.method;
        r.text = fmt::format(fmt::runtime(b.features[k]), kClasses[c].name);
        r.text_id = corpus::MakeTextId(b.method, c, k);
        ids.push_back(r.text_id);
        rows.push_back(Noisy(centers[c], b.quality, 0.3, rng));
        records.push_back(std::move(r));
      }
    }
    const std::string desc = util::StrCat(b.method, "_descriptions.tsv");
    const std::string emb = util::StrCat(b.method, ".xemb");
    IFTX_RETURN_IF_ERROR(util::WriteFile(
        path(desc), corpus::FormatDescriptions(
                        records, m, {util::StrCat("method: ", b.method)})));
    IFTX_RETURN_IF_ERROR(WriteMatrix(ids, rows, path(emb)));
    config["baselines"].push_back(
        {{"method", b.method}, {"descriptions", desc}, {"embeddings", emb}});
  }
  IFTX_RETURN_IF_ERROR(util::WriteFile(path("config.json"), config.dump(2) + "\n"));

  const std::string work = path(".work");
  fs::remove_all(work);
  IFTX_ASSIGN_OR_RETURN(pipeline::PipelineConfig cfg,
                        pipeline::LoadConfig(path("config.json")));
  cfg.output_dir = work;

  // Our descriptions, as the describe stage will request them.
  RecordingClient llm(DescribeScript);
  descgen::GenerationRequest req;
  req.model = cfg.describe.model;
  req.wiki_grounded = cfg.describe.wiki;
  req.max_retries = 0;
  IFTX_ASSIGN_OR_RETURN(const descgen::GenerationResult gen,
                        descgen::GenerateDescriptions(m, req, llm, nullptr));
  if (!gen.errors.empty()) return absl::InternalError(gen.errors[0].message);
  IFTX_RETURN_IF_ERROR(util::WriteFile(path("llm_fixture.tsv"), llm.Fixture("describe")));
  std::vector<std::string> text_ids;
  std::vector<std::vector<float>> texts;
  std::map<int, int> seen;
  for (const corpus::DescriptionRecord& r : gen.records) {
    const int j = seen[r.class_index]++;
    text_ids.push_back(r.text_id);
    texts.push_back(Noisy(centers[r.class_index], kComponentQuality[j], 0.3, rng));
  }
  IFTX_RETURN_IF_ERROR(WriteMatrix(text_ids, texts, path("texts_ours.xemb")));

  // Judge responses for the instances the recorded pipeline will sample.
  for (auto stage : {pipeline::RunSplit, pipeline::RunDescribe, pipeline::RunTrain,
                     pipeline::RunInfluence, pipeline::RunIft, pipeline::RunSelect}) {
    IFTX_RETURN_IF_ERROR(stage(cfg));
  }
  IFTX_ASSIGN_OR_RETURN(const std::vector<judge::EvalInstance> instances,
                        pipeline::BuildJudgeInstances(cfg));
  std::map<std::string, const judge::EvalInstance*> by_prompt;
  for (const judge::EvalInstance& inst : instances) {
    IFTX_ASSIGN_OR_RETURN(std::string top1, judge::BuildTop1Prompt(inst));
    IFTX_ASSIGN_OR_RETURN(std::string rank, judge::BuildRankPrompt(inst));
    by_prompt[top1] = &inst;
    by_prompt[rank] = &inst;
  }
  RecordingClient judge_client([&](const descgen::LlmRequest& r) {
    return JudgeScript(by_prompt, r);
  });
  judge::JudgeOptions opts;
  opts.model = cfg.judge.model;
  opts.max_retries = 0;
  IFTX_ASSIGN_OR_RETURN(const judge::JudgeRun run,
                        judge::RunJudge(instances, opts, judge_client, nullptr));
  if (!run.errors.empty()) return absl::InternalError(run.errors[0]);
  IFTX_RETURN_IF_ERROR(
      util::WriteFile(path("judge_fixture.tsv"), judge_client.Fixture("judge")));
  fs::remove_all(work);
  return absl::OkStatus();
}

}  // namespace
}  // namespace iftx

int main(int argc, char** argv) {
  CLI::App app{"Writes the synthetic test corpus."};
  std::string out;
  app.add_option("--out", out, "Output directory")->required();
  CLI11_PARSE(app, argc, argv);
  const absl::Status s = iftx::Run(out);
  if (!s.ok()) {
    std::cerr << "make_synthetic: " << s << "\n";
    return 1;
  }
  return 0;
}
