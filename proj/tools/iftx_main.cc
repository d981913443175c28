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

// iftx: command-line front end. Every subcommand reads one JSON config;
// flags override individual settings.
//
// Exit codes: 0 success, 2 bad configuration or flags, 3 missing input or
// upstream artifact, 4 any other failure.

#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "iftx/pipeline/config.h"
#include "iftx/pipeline/stages.h"
#include "iftx/util/status_macros.h"

namespace iftx {
namespace {

constexpr int kExitConfig = 2;
constexpr int kExitMissing = 3;
constexpr int kExitFailure = 4;

int ExitCode(const absl::Status& s) {
  switch (s.code()) {
    case absl::StatusCode::kOk:
      return 0;
    case absl::StatusCode::kInvalidArgument:
      return kExitConfig;
    case absl::StatusCode::kNotFound:
      return kExitMissing;
    default:
      return kExitFailure;
  }
}

struct Overrides {
  std::string config;
  std::optional<uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> mode;
  std::optional<bool> wiki;
  std::optional<std::string> weight_application;
};

void AddCommonFlags(CLI::App* cmd, Overrides* o) {
  cmd->add_option("--config", o->config, "Pipeline config (JSON)")->required();
  cmd->add_option("--seed", o->seed, "Global seed");
  cmd->add_option("--out", o->out, "Output directory");
  cmd->add_option("--mode", o->mode, "Text scoring: ift, if or clip");
  cmd->add_flag("--wiki,!--no-wiki", o->wiki, "Ground prompts in Wikipedia");
  cmd->add_option("--weight-application", o->weight_application,
                  "Class weights in the text stage: loss or scale");
}

absl::StatusOr<pipeline::PipelineConfig> Load(const Overrides& o) {
  IFTX_ASSIGN_OR_RETURN(pipeline::PipelineConfig cfg, pipeline::LoadConfig(o.config));
  if (o.seed.has_value()) {
    cfg.seed = *o.seed;
    cfg.train.seed = *o.seed;
  }
  if (o.out.has_value()) cfg.output_dir = *o.out;
  if (o.mode.has_value()) {
    IFTX_ASSIGN_OR_RETURN(cfg.scoring.mode, pipeline::ParseModeFlag(*o.mode));
  }
  if (o.wiki.has_value()) cfg.describe.wiki = *o.wiki;
  if (o.weight_application.has_value()) {
    IFTX_ASSIGN_OR_RETURN(cfg.xmodal.weight_application,
                          pipeline::ParseWeightFlag(*o.weight_application));
  }
  cfg.xmodal.image_stage = cfg.train;
  return cfg;
}

int Report(const absl::Status& s) {
  if (!s.ok()) std::cerr << "iftx: " << s.message() << "\n";
  return ExitCode(s);
}

int Main(int argc, char** argv) {
  CLI::App app{"Influence-guided class descriptions for image classification."};
  app.require_subcommand(1);

  using Stage = std::function<absl::Status(const pipeline::PipelineConfig&)>;
  struct Command {
    const char* name;
    const char* help;
    Stage run;
  };
  const std::vector<Command> commands = {
      {"split", "Resolve the train/val/test split", pipeline::RunSplit},
      {"describe", "Generate our class descriptions", pipeline::RunDescribe},
      {"train", "Train the image head and keep checkpoints", pipeline::RunTrain},
      {"influence", "TracIn influence of train on val images",
       pipeline::RunInfluence},
      {"ift", "Score every description", pipeline::RunIft},
      {"select", "Pick proponent texts and class weights", pipeline::RunSelect},
      {"xmodal", "Cross-modal transfer evaluation", pipeline::RunXModal},
      {"zeroshot", "Zero-shot evaluation", pipeline::RunZeroShot},
      {"judge", "Judge descriptions with a vision-language model",
       pipeline::RunJudgeStage},
      {"export-proj", "Export embeddings for a 2-D projection",
       pipeline::RunExportProjection},
      {"pipeline", "Run every stage, then the report", pipeline::RunPipeline},
  };
  std::vector<Overrides> overrides(commands.size());
  std::optional<int> result;
  for (size_t i = 0; i < commands.size(); ++i) {
    CLI::App* cmd = app.add_subcommand(commands[i].name, commands[i].help);
    AddCommonFlags(cmd, &overrides[i]);
    cmd->callback([&, i] {
      absl::StatusOr<pipeline::PipelineConfig> cfg = Load(overrides[i]);
      result = Report(cfg.ok() ? commands[i].run(*cfg) : cfg.status());
    });
  }

  // report takes explicit inputs or derives them from a config.
  std::string report_config;
  std::vector<std::string> inputs;
  bool force = false;
  std::string report_out;
  CLI::App* report = app.add_subcommand("report", "Merge results into markdown");
  report->add_option("--config", report_config, "Pipeline config (JSON)");
  report->add_option("--inputs", inputs, "Result or judge-metric files");
  report->add_flag("--force", force, "Merge inputs with different fingerprints");
  report->add_option("--out", report_out, "Markdown output path");
  report->callback([&] {
    if (inputs.empty() || report_out.empty()) {
      if (report_config.empty()) {
        result = Report(absl::InvalidArgumentError(
            "report needs --config or both --inputs and --out"));
        return;
      }
      absl::StatusOr<pipeline::PipelineConfig> cfg =
          pipeline::LoadConfig(report_config);
      if (!cfg.ok()) {
        result = Report(cfg.status());
        return;
      }
      if (inputs.empty()) inputs = pipeline::DefaultReportInputs(*cfg);
      if (report_out.empty()) report_out = cfg->OutPath("report.md");
    }
    result = Report(pipeline::RunReport(inputs, force, report_out));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  return result.value_or(0);
}

}  // namespace
}  // namespace iftx

int main(int argc, char** argv) { return iftx::Main(argc, argv); }
