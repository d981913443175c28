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

#include "iftx/judge/judge.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "iftx/util/parallel.h"
#include "iftx/util/rng.h"
#include "iftx/util/status_macros.h"
#include "iftx/util/text_io.h"
#include "json.hpp"

namespace iftx::judge {
namespace {

using nlohmann::json;

constexpr std::string_view kPreamble =
    "You are a vision-language model evaluator.\n\n"
    "Given two images and five textual descriptions, your task is to rank the "
    "descriptions for each of the following three criteria";

constexpr std::string_view kTop1Task =
    " and output only the top-1 ranking description (or group of "
    "descriptions if equally best) along with a short rationale. The "
    "criteria are:\n\n";

constexpr std::string_view kCriteriaBlock =
    "1. **Helpful**: Does the description help distinguish or understand the "
    "two images effectively?\n\n"
    "2. **Informative**: Does the description provide detailed and "
    "meaningful content?\n\n"
    "3. **Relevant**: Does the description accurately reflect the visual "
    "content of the two images?\n\n"
    "You are allowed to assign the same rank to multiple descriptions if you "
    "believe they are equally strong for a given criterion";

constexpr std::string_view kImages =
    "Images:\n\n"
    "Image A: <Insert Image A>\n\n"
    "Image B: <Insert Image B>\n\n"
    "Descriptions:\n\n";

constexpr std::string_view kTop1Output =
    "For each criterion, please output only the top-1 ranking description(s) "
    "along with a short rationale for why these descriptions are the best.\n\n"
    "Output format:\n\n"
    "### Helpful Ranking:\n\n"
    "**Top-1**: Descriptions 1\n\n"
    "Reason: \"These descriptions clearly highlight key differences between "
    "the two images, such as beak shape and feather patterns.\"\n\n"
    "---\n\n"
    "### Informative Ranking:\n\n"
    "**Top-1**: Descriptions 2\n\n"
    "Reason: \"They include specific visual details such as color, size, and "
    "structural features.\"\n\n"
    "---\n\n"
    "### Relevant Ranking:\n\n"
    "**Top-1**: Description 5\n\n"
    "Reason: \"Highly aligned with actual visible features in both "
    "images.\"\n\n"
    "Please ensure your ranking is thoughtful and grounded in what is visible "
    "in the two images.\n";

constexpr std::string_view kRankOutput =
    "For each criterion, please list the descriptions grouped by rank, with "
    "a short rationale for each group.\n\n"
    "Output format:\n\n"
    "### Helpful Ranking:\n\n"
    "**Rank 1**: Descriptions 2, 5\n\n"
    "Reason: \"These descriptions clearly highlight key differences between "
    "the two images, such as beak shape and feather patterns.\"\n\n"
    "**Rank 2**: Description 1\n\n"
    "Reason: \"Provides some useful context but lacks comparative "
    "elements.\"\n\n"
    "**Rank 3**: Descriptions 3, 4\n\n"
    "Reason: \"These are vague or unrelated to distinguishing the "
    "images.\"\n\n"
    "---\n\n"
    "### Informative Ranking:\n\n"
    "**Rank 1**: Descriptions 1, 5\n\n"
    "Reason: \"They include specific visual details such as color, size, and "
    "structural features.\"\n\n"
    "...\n\n"
    "### Relevant Ranking:\n\n"
    "**Rank 1**: Description 5\n\n"
    "Reason: \"Highly aligned with actual visible features in both "
    "images.\"\n\n"
    "...\n\n"
    "Please make sure your ranking is thoughtful and grounded in what is "
    "visible in the two images.\n";

std::string DescriptionList(const EvalInstance& inst) {
  std::string out;
  for (size_t k = 0; k < inst.entries.size(); ++k) {
    util::StrAppend(&out, k + 1, ". \"", inst.entries[k].text, "\"\n\n");
  }
  return out;
}

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

// Lower-cased line without markdown emphasis and surrounding space.
std::string Plain(std::string_view line) {
  std::string out;
  for (char ch : line) {
    if (ch != '*' && ch != '_') out.push_back(ch);
  }
  return Lower(util::TrimWhitespace(out));
}

std::optional<Criterion> HeadingOf(const std::string& plain) {
  std::string_view s = plain;
  while (!s.empty() && (s.front() == '#' || s.front() == ' ')) s.remove_prefix(1);
  for (Criterion c : kCriteria) {
    const std::string name = Lower(CriterionName(c));
    if (s.starts_with(name) && s.find("rank", name.size()) != std::string_view::npos) {
      return c;
    }
  }
  return std::nullopt;
}

// "descriptions 2, 5" / "description 1" / "2 and 5" -> {2, 5}.
absl::StatusOr<std::vector<int>> Positions(std::string_view s) {
  s = util::TrimWhitespace(s);
  for (std::string_view word : {"descriptions", "description"}) {
    if (s.starts_with(word)) {
      s.remove_prefix(word.size());
      break;
    }
  }
  std::vector<int> out;
  std::string token;
  auto flush = [&]() -> absl::Status {
    if (token.empty()) return absl::OkStatus();
    if (token != "and") {
      absl::StatusOr<int64_t> v = util::ParseInt(token);
      if (!v.ok()) {
        return absl::InvalidArgumentError(
            util::StrCat("bad description position '", token, "'"));
      }
      out.push_back(static_cast<int>(*v));
    }
    token.clear();
    return absl::OkStatus();
  };
  for (char ch : s) {
    if (ch == ',' || ch == ' ' || ch == '&' || ch == '.' || ch == '\t') {
      IFTX_RETURN_IF_ERROR(flush());
    } else {
      token.push_back(ch);
    }
  }
  IFTX_RETURN_IF_ERROR(flush());
  if (out.empty()) return absl::InvalidArgumentError("no description positions");
  for (int p : out) {
    if (p < 1 || p > kEntriesPerInstance) {
      return absl::InvalidArgumentError(
          util::StrCat("description position ", p, " out of range 1..",
                       kEntriesPerInstance));
    }
  }
  return out;
}

struct Section {
  std::vector<std::string> lines;  // plain form
  bool seen = false;
};

std::array<Section, 3> Sections(std::string_view response) {
  std::array<Section, 3> out;
  Section* current = nullptr;
  for (std::string_view raw : util::SplitLines(response)) {
    const std::string plain = Plain(raw);
    if (const auto c = HeadingOf(plain); c.has_value()) {
      current = &out[static_cast<int>(*c)];
      current->seen = true;
      continue;
    }
    if (current != nullptr && !plain.empty()) current->lines.push_back(plain);
  }
  return out;
}

absl::Status WithRaw(const absl::Status& s, std::string_view response) {
  return absl::Status(s.code(), util::StrCat(s.message(), "; response: ",
                                             util::EscapeLine(response)));
}

// Splits "label: rest" where the label starts with `prefix`.
std::optional<std::pair<std::string_view, std::string_view>> Labeled(
    std::string_view line, std::string_view prefix) {
  if (!line.starts_with(prefix)) return std::nullopt;
  const size_t colon = line.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  return std::make_pair(util::TrimWhitespace(line.substr(prefix.size(), colon - prefix.size())),
                        line.substr(colon + 1));
}

absl::Status CheckDistinct(const std::vector<int>& positions) {
  std::set<int> seen;
  for (int p : positions) {
    if (!seen.insert(p).second) {
      return absl::InvalidArgumentError(
          util::StrCat("description ", p, " listed twice"));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<Top1Judgment> ParseTop1Impl(std::string_view response) {
  const std::array<Section, 3> sections = Sections(response);
  Top1Judgment out;
  for (Criterion c : kCriteria) {
    const Section& s = sections[static_cast<int>(c)];
    if (!s.seen) {
      return absl::InvalidArgumentError(
          util::StrCat("missing ", CriterionName(c), " ranking"));
    }
    std::optional<std::vector<int>> winners;
    for (const std::string& line : s.lines) {
      std::optional<std::pair<std::string_view, std::string_view>> parts;
      for (std::string_view prefix : {"top-1", "top 1", "top1"}) {
        parts = Labeled(line, prefix);
        if (parts.has_value()) break;
      }
      if (!parts.has_value()) continue;
      if (winners.has_value()) {
        return absl::InvalidArgumentError(
            util::StrCat(CriterionName(c), ": more than one Top-1 line"));
      }
      IFTX_ASSIGN_OR_RETURN(winners, Positions(parts->second));
      IFTX_RETURN_IF_ERROR(CheckDistinct(*winners));
    }
    if (!winners.has_value()) {
      return absl::InvalidArgumentError(
          util::StrCat(CriterionName(c), ": no Top-1 line"));
    }
    std::sort(winners->begin(), winners->end());
    out.winners[static_cast<int>(c)] = *std::move(winners);
  }
  return out;
}

absl::StatusOr<RankGroups> ParseRankGroupsImpl(std::string_view response) {
  const std::array<Section, 3> sections = Sections(response);
  RankGroups out;
  for (Criterion c : kCriteria) {
    const Section& s = sections[static_cast<int>(c)];
    if (!s.seen) {
      return absl::InvalidArgumentError(
          util::StrCat("missing ", CriterionName(c), " ranking"));
    }
    std::vector<std::vector<int>>& groups = out.groups[static_cast<int>(c)];
    int64_t last_label = 0;
    std::set<int> covered;
    for (const std::string& line : s.lines) {
      const auto parts = Labeled(line, "rank");
      if (!parts.has_value()) continue;
      absl::StatusOr<int64_t> label = util::ParseInt(parts->first);
      if (!label.ok()) continue;  // "ranking:" and similar prose
      if (*label <= last_label) {
        return absl::InvalidArgumentError(util::StrCat(
            CriterionName(c), ": rank ", *label, " after rank ", last_label));
      }
      last_label = *label;
      IFTX_ASSIGN_OR_RETURN(std::vector<int> group, Positions(parts->second));
      for (int p : group) {
        if (!covered.insert(p).second) {
          return absl::InvalidArgumentError(util::StrCat(
              CriterionName(c), ": description ", p, " appears in two groups"));
        }
      }
      std::sort(group.begin(), group.end());
      groups.push_back(std::move(group));
    }
    if (static_cast<int>(covered.size()) != kEntriesPerInstance) {
      std::vector<int> missing;
      for (int p = 1; p <= kEntriesPerInstance; ++p) {
        if (!covered.contains(p)) missing.push_back(p);
      }
      return absl::InvalidArgumentError(
          fmt::format("{}: groups do not cover description(s) {}",
                      CriterionName(c), fmt::join(missing, ", ")));
    }
  }
  return out;
}

}  // namespace

std::string_view CriterionName(Criterion c) {
  switch (c) {
    case Criterion::kHelpful:
      return "Helpful";
    case Criterion::kInformative:
      return "Informative";
    case Criterion::kRelevant:
      return "Relevant";
  }
  return "";
}

absl::Status ValidateInstance(const EvalInstance& inst) {
  if (static_cast<int>(inst.entries.size()) != kEntriesPerInstance) {
    return absl::InvalidArgumentError(
        util::StrCat("instance ", inst.instance_id, " has ",
                     inst.entries.size(), " entries, expected ",
                     kEntriesPerInstance));
  }
  std::set<std::string_view> methods;
  for (const JudgeEntry& e : inst.entries) {
    if (!methods.insert(e.method).second) {
      return absl::InvalidArgumentError(util::StrCat(
          "instance ", inst.instance_id, " repeats method ", e.method));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<EvalInstance> MakeInstance(std::string instance_id,
                                          int class_index, std::string image_a,
                                          std::string image_b,
                                          std::vector<JudgeEntry> entries,
                                          uint64_t seed) {
  EvalInstance inst{std::move(instance_id), class_index, std::move(image_a),
                    std::move(image_b), std::move(entries)};
  IFTX_RETURN_IF_ERROR(ValidateInstance(inst));
  util::Rng rng(seed);
  rng.Shuffle(std::span<JudgeEntry>(inst.entries));
  return inst;
}

absl::StatusOr<std::vector<EvalInstance>> SampleInstances(
    const corpus::DatasetManifest& manifest,
    const std::vector<MethodPool>& pools, const SamplingOptions& options) {
  if (static_cast<int>(pools.size()) != kEntriesPerInstance) {
    return absl::InvalidArgumentError(util::StrCat(
        "need ", kEntriesPerInstance, " methods, got ", pools.size()));
  }
  if (options.instances_per_class < 1) {
    return absl::InvalidArgumentError("instances_per_class must be >= 1");
  }
  util::Rng rng(util::MixSeed(options.seed, 0));
  std::vector<int> classes(manifest.num_classes());
  for (int c = 0; c < manifest.num_classes(); ++c) classes[c] = c;
  rng.Shuffle(std::span<int>(classes));
  if (options.num_classes > 0 &&
      options.num_classes < static_cast<int>(classes.size())) {
    classes.resize(options.num_classes);
  }
  std::sort(classes.begin(), classes.end());

  std::vector<EvalInstance> out;
  for (int c : classes) {
    std::vector<const corpus::SampleRecord*> images;
    for (const corpus::SampleRecord& s : manifest.samples) {
      if (s.class_index == c && s.split == corpus::Split::kTest) {
        images.push_back(&s);
      }
    }
    if (images.size() < 2) {
      images.clear();
      for (const corpus::SampleRecord& s : manifest.samples) {
        if (s.class_index == c) images.push_back(&s);
      }
    }
    if (images.size() < 2) {
      return absl::FailedPreconditionError(util::StrCat(
          "class ", manifest.classes[c].name, " has fewer than two images"));
    }
    rng.Shuffle(std::span<const corpus::SampleRecord*>(images));

    std::vector<std::vector<const corpus::DescriptionRecord*>> per_method;
    for (const MethodPool& pool : pools) {
      std::vector<const corpus::DescriptionRecord*> texts =
          corpus::RecordsOfClass(pool.records, c);
      if (texts.empty()) {
        return absl::FailedPreconditionError(
            util::StrCat("method ", pool.method, " has no description for class ",
                         manifest.classes[c].name));
      }
      rng.Shuffle(std::span<const corpus::DescriptionRecord*>(texts));
      per_method.push_back(std::move(texts));
    }
    for (int k = 0; k < options.instances_per_class; ++k) {
      std::vector<JudgeEntry> entries;
      for (size_t m = 0; m < pools.size(); ++m) {
        const auto& texts = per_method[m];
        entries.push_back({pools[m].method, texts[k % texts.size()]->text});
      }
      IFTX_ASSIGN_OR_RETURN(
          EvalInstance inst,
          MakeInstance(fmt::format("{:04d}-{:02d}", c, k), c,
                       images[0]->source_path, images[1]->source_path,
                       std::move(entries), rng.NextU64()));
      out.push_back(std::move(inst));
    }
  }
  return out;
}

absl::StatusOr<std::string> BuildTop1Prompt(const EvalInstance& inst) {
  IFTX_RETURN_IF_ERROR(ValidateInstance(inst));
  return util::StrCat(kPreamble, kTop1Task, kCriteriaBlock,
                      ", but please output only the top-ranked group for each "
                      "criterion.\n\n",
                      kImages, DescriptionList(inst), kTop1Output);
}

absl::StatusOr<std::string> BuildRankPrompt(const EvalInstance& inst) {
  IFTX_RETURN_IF_ERROR(ValidateInstance(inst));
  return util::StrCat(kPreamble, ":\n\n", kCriteriaBlock, ".\n\n", kImages,
                      DescriptionList(inst), kRankOutput);
}

std::array<int, kEntriesPerInstance + 1> RankGroups::RanksOf(Criterion c) const {
  std::array<int, kEntriesPerInstance + 1> ranks{};
  const auto& g = groups[static_cast<int>(c)];
  for (size_t r = 0; r < g.size(); ++r) {
    for (int p : g[r]) ranks[p] = static_cast<int>(r) + 1;
  }
  return ranks;
}

absl::StatusOr<Top1Judgment> ParseTop1(std::string_view response) {
  absl::StatusOr<Top1Judgment> out = ParseTop1Impl(response);
  if (!out.ok()) return WithRaw(out.status(), response);
  return out;
}

absl::StatusOr<RankGroups> ParseRankGroups(std::string_view response) {
  absl::StatusOr<RankGroups> out = ParseRankGroupsImpl(response);
  if (!out.ok()) return WithRaw(out.status(), response);
  return out;
}

absl::StatusOr<std::vector<JudgeMetric>> Aggregate(
    std::vector<JudgedInstance> instances) {
  if (instances.empty()) {
    return absl::InvalidArgumentError("no judged instances");
  }
  std::sort(instances.begin(), instances.end(),
            [](const JudgedInstance& a, const JudgedInstance& b) {
              return a.instance_id < b.instance_id;
            });
  struct Tally {
    int n = 0;
    int wins = 0;
    int ranked = 0;
    double rank_sum = 0.0;
  };
  std::map<std::string, std::array<Tally, 3>> tally;
  for (const JudgedInstance& inst : instances) {
    if (static_cast<int>(inst.methods.size()) != kEntriesPerInstance ||
        std::set<std::string>(inst.methods.begin(), inst.methods.end()).size() !=
            inst.methods.size()) {
      return absl::InvalidArgumentError(util::StrCat(
          "instance ", inst.instance_id, " needs ", kEntriesPerInstance,
          " distinct methods"));
    }
    for (Criterion c : kCriteria) {
      const int ci = static_cast<int>(c);
      std::vector<int> winners;
      if (inst.top1.has_value()) {
        winners = inst.top1->winners[ci];
      } else if (inst.ranks.has_value() && !inst.ranks->groups[ci].empty()) {
        winners = inst.ranks->groups[ci].front();
      }
      std::array<int, kEntriesPerInstance + 1> ranks{};
      if (inst.ranks.has_value()) ranks = inst.ranks->RanksOf(c);
      for (int p = 1; p <= kEntriesPerInstance; ++p) {
        Tally& t = tally[inst.methods[p - 1]][ci];
        ++t.n;
        if (std::find(winners.begin(), winners.end(), p) != winners.end()) {
          ++t.wins;
        }
        if (ranks[p] > 0) {
          ++t.ranked;
          t.rank_sum += ranks[p];
        }
      }
    }
  }
  std::vector<JudgeMetric> out;
  for (const auto& [method, per] : tally) {
    for (Criterion c : kCriteria) {
      const Tally& t = per[static_cast<int>(c)];
      JudgeMetric m;
      m.method = method;
      m.criterion = c;
      m.n_instances = t.n;
      m.top1_rate = static_cast<double>(t.wins) / t.n;
      m.mean_rank = t.ranked > 0 ? t.rank_sum / t.ranked : std::nan("");
      out.push_back(m);
    }
  }
  return out;
}

std::string FormatMetrics(const std::vector<JudgeMetric>& metrics) {
  std::string out = "method\tcriterion\ttop1_rate\tmean_rank\n";
  for (const JudgeMetric& m : metrics) {
    util::StrAppend(&out, m.method, "\t", CriterionName(m.criterion), "\t",
                    fmt::format("{:.6f}", m.top1_rate), "\t",
                    std::isnan(m.mean_rank) ? std::string("nan")
                                            : fmt::format("{:.6f}", m.mean_rank),
                    "\n");
  }
  return out;
}

std::string FormatJudgments(const std::vector<JudgmentRecord>& records) {
  std::string out;
  for (const JudgmentRecord& r : records) {
    json methods = json::array();
    json texts = json::array();
    for (const JudgeEntry& e : r.instance.entries) {
      methods.push_back(e.method);
      texts.push_back(e.text);
    }
    const json j = {
        {"instance_id", r.instance.instance_id},
        {"class_index", r.instance.class_index},
        {"image_refs", {r.instance.image_ref_a, r.instance.image_ref_b}},
        {"methods", methods},
        {"descriptions", texts},
        {"top1_response", r.top1_response},
        {"rank_response", r.rank_response},
    };
    util::StrAppend(&out, j.dump(), "\n");
  }
  return out;
}

absl::StatusOr<std::vector<JudgmentRecord>> ParseJudgmentsFile(
    std::string_view jsonl) {
  std::vector<JudgmentRecord> out;
  int line_no = 0;
  for (std::string_view line : util::SplitLines(jsonl)) {
    ++line_no;
    if (util::TrimWhitespace(line).empty()) continue;
    const json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    const auto bad = [&](std::string_view what) {
      return absl::InvalidArgumentError(
          util::StrCat("judgments line ", line_no, ": ", what));
    };
    if (j.is_discarded() || !j.is_object()) return bad("not a JSON object");
    for (const char* key : {"instance_id", "class_index", "image_refs", "methods",
                            "descriptions", "top1_response", "rank_response"}) {
      if (!j.contains(key)) return bad(util::StrCat("missing ", key));
    }
    try {
      JudgmentRecord r;
      r.instance.instance_id = j["instance_id"].get<std::string>();
      r.instance.class_index = j["class_index"].get<int>();
      const auto refs = j["image_refs"].get<std::vector<std::string>>();
      if (refs.size() != 2) return bad("image_refs must have two entries");
      r.instance.image_ref_a = refs[0];
      r.instance.image_ref_b = refs[1];
      const auto methods = j["methods"].get<std::vector<std::string>>();
      const auto texts = j["descriptions"].get<std::vector<std::string>>();
      if (methods.size() != texts.size()) return bad("methods/descriptions size");
      for (size_t k = 0; k < methods.size(); ++k) {
        r.instance.entries.push_back({methods[k], texts[k]});
      }
      r.top1_response = j["top1_response"].get<std::string>();
      r.rank_response = j["rank_response"].get<std::string>();
      IFTX_RETURN_IF_ERROR(ValidateInstance(r.instance));
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      return bad(e.what());
    }
  }
  return out;
}

absl::StatusOr<JudgedInstance> Interpret(const JudgmentRecord& record) {
  JudgedInstance out;
  out.instance_id = record.instance.instance_id;
  out.class_index = record.instance.class_index;
  for (const JudgeEntry& e : record.instance.entries) out.methods.push_back(e.method);
  if (!record.top1_response.empty()) {
    IFTX_ASSIGN_OR_RETURN(out.top1, ParseTop1(record.top1_response));
  }
  if (!record.rank_response.empty()) {
    IFTX_ASSIGN_OR_RETURN(out.ranks, ParseRankGroups(record.rank_response));
  }
  if (!out.top1.has_value() && !out.ranks.has_value()) {
    return absl::InvalidArgumentError(
        util::StrCat("instance ", out.instance_id, " has no responses"));
  }
  return out;
}

absl::StatusOr<JudgeRun> RunJudge(const std::vector<EvalInstance>& instances,
                                  const JudgeOptions& options,
                                  descgen::LlmClient& client,
                                  descgen::ResponseCache* cache) {
  if (options.max_retries < 0 || options.concurrency < 1) {
    return absl::InvalidArgumentError("bad retry or concurrency setting");
  }
  for (const EvalInstance& inst : instances) {
    IFTX_RETURN_IF_ERROR(ValidateInstance(inst));
  }
  descgen::CallStats stats;
  std::vector<JudgmentRecord> records(instances.size());
  std::vector<std::string> errors(instances.size());
  util::ParallelFor(instances.size(), options.concurrency, [&](size_t i) {
    const EvalInstance& inst = instances[i];
    records[i].instance = inst;
    const std::vector<std::string> images = {inst.image_ref_a, inst.image_ref_b};
    for (const bool top1 : {true, false}) {
      absl::StatusOr<std::string> prompt =
          top1 ? BuildTop1Prompt(inst) : BuildRankPrompt(inst);
      absl::StatusOr<std::string> answer =
          prompt.ok() ? descgen::CompleteWithRetry(
                            {options.model, *prompt, 0.0, images},
                            options.max_retries, client, cache, stats)
                      : prompt.status();
      if (!answer.ok()) {
        errors[i] = util::StrCat(inst.instance_id, ": ", answer.status().message());
        return;
      }
      (top1 ? records[i].top1_response : records[i].rank_response) = *answer;
    }
  });
  JudgeRun run;
  for (size_t i = 0; i < instances.size(); ++i) {
    if (errors[i].empty()) {
      run.records.push_back(std::move(records[i]));
    } else {
      run.errors.push_back(std::move(errors[i]));
    }
  }
  std::sort(run.records.begin(), run.records.end(),
            [](const JudgmentRecord& a, const JudgmentRecord& b) {
              return a.instance.instance_id < b.instance.instance_id;
            });
  std::sort(run.errors.begin(), run.errors.end());
  run.client_calls = stats.client_calls.load();
  run.cache_hits = stats.cache_hits.load();
  return run;
}

}  // namespace iftx::judge
