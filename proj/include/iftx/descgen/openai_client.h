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

// Chat-completions backend for any OpenAI-compatible endpoint. The key comes
// from the IFTX_LLM_API_KEY environment variable and nowhere else.

#ifndef IFTX_DESCGEN_OPENAI_CLIENT_H_
#define IFTX_DESCGEN_OPENAI_CLIENT_H_

#include <memory>
#include <string>

#include "absl/status/statusor.h"
#include "iftx/descgen/llm_client.h"

namespace iftx::descgen {

inline constexpr char kApiKeyEnv[] = "IFTX_LLM_API_KEY";

struct OpenAiOptions {
  std::string base_url = "https://api.openai.com/v1";
  long timeout_seconds = 120;
};

// Request body for one chat completion. Image references become image_url
// parts; local paths are sent as data URLs.
absl::StatusOr<std::string> BuildChatBody(const LlmRequest& request);

// Text of the first choice in a chat-completions response.
absl::StatusOr<std::string> ParseChatResponse(std::string_view body);

class OpenAiClient : public LlmClient {
 public:
  // Fails with FailedPrecondition when the key variable is unset or empty.
  static absl::StatusOr<std::unique_ptr<OpenAiClient>> FromEnvironment(
      OpenAiOptions options = {});

  absl::StatusOr<std::string> Complete(const LlmRequest& request) override;

 private:
  OpenAiClient(std::string key, OpenAiOptions options)
      : key_(std::move(key)), options_(std::move(options)) {}

  std::string key_;
  OpenAiOptions options_;
};

}  // namespace iftx::descgen

#endif  // IFTX_DESCGEN_OPENAI_CLIENT_H_
