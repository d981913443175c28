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

#include "iftx/descgen/openai_client.h"

#include <curl/curl.h>

#include <cstdlib>
#include <mutex>

#include "absl/strings/escaping.h"
#include "iftx/util/status_macros.h"
#include "iftx/util/text_io.h"
#include "json.hpp"

namespace iftx::descgen {
namespace {

using nlohmann::json;

size_t Collect(char* data, size_t size, size_t n, void* out) {
  static_cast<std::string*>(out)->append(data, size * n);
  return size * n;
}

std::string MimeFor(std::string_view path) {
  if (path.ends_with(".png")) return "image/png";
  if (path.ends_with(".webp")) return "image/webp";
  if (path.ends_with(".gif")) return "image/gif";
  return "image/jpeg";
}

absl::StatusOr<std::string> ImageUrl(const std::string& ref) {
  if (ref.starts_with("http://") || ref.starts_with("https://") ||
      ref.starts_with("data:")) {
    return ref;
  }
  IFTX_ASSIGN_OR_RETURN(const std::string bytes, util::ReadFile(ref));
  std::string encoded;
  absl::Base64Escape(bytes, &encoded);
  return util::StrCat("data:", MimeFor(ref), ";base64,", encoded);
}

}  // namespace

absl::StatusOr<std::string> BuildChatBody(const LlmRequest& request) {
  json content;
  if (request.image_refs.empty()) {
    content = request.prompt;
  } else {
    content = json::array();
    content.push_back({{"type", "text"}, {"text", request.prompt}});
    for (const std::string& ref : request.image_refs) {
      IFTX_ASSIGN_OR_RETURN(const std::string url, ImageUrl(ref));
      content.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
    }
  }
  const json body = {
      {"model", request.model},
      {"temperature", request.temperature},
      {"messages", json::array({{{"role", "user"}, {"content", content}}})},
  };
  return body.dump();
}

absl::StatusOr<std::string> ParseChatResponse(std::string_view body) {
  const json parsed = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded()) {
    return absl::DataLossError("response is not JSON");
  }
  if (parsed.contains("error")) {
    return absl::UnavailableError(
        util::StrCat("backend error: ", parsed["error"].dump()));
  }
  const json* text = nullptr;
  if (parsed.contains("choices") && parsed["choices"].is_array() &&
      !parsed["choices"].empty()) {
    const json& first = parsed["choices"][0];
    if (first.contains("message") && first["message"].contains("content")) {
      text = &first["message"]["content"];
    }
  }
  if (text == nullptr || !text->is_string()) {
    return absl::DataLossError("response has no choices[0].message.content");
  }
  return text->get<std::string>();
}

absl::StatusOr<std::unique_ptr<OpenAiClient>> OpenAiClient::FromEnvironment(
    OpenAiOptions options) {
  const char* key = std::getenv(kApiKeyEnv);
  if (key == nullptr || *key == '\0') {
    return absl::FailedPreconditionError(
        util::StrCat(kApiKeyEnv, " is not set"));
  }
  static std::once_flag init;
  std::call_once(init, [] { curl_global_init(CURL_GLOBAL_DEFAULT); });
  return std::unique_ptr<OpenAiClient>(
      new OpenAiClient(key, std::move(options)));
}

absl::StatusOr<std::string> OpenAiClient::Complete(const LlmRequest& request) {
  IFTX_ASSIGN_OR_RETURN(const std::string body, BuildChatBody(request));
  CURL* curl = curl_easy_init();
  if (curl == nullptr) return absl::InternalError("curl_easy_init failed");
  const std::string url = util::StrCat(options_.base_url, "/chat/completions");
  const std::string auth = util::StrCat("Authorization: Bearer ", key_);
  curl_slist* headers = nullptr;
  headers = curl_slist_append(headers, "Content-Type: application/json");
  headers = curl_slist_append(headers, auth.c_str());
  std::string received;
  curl_easy_setopt(curl, CURLOPT_URL, url.c_str());
  curl_easy_setopt(curl, CURLOPT_HTTPHEADER, headers);
  curl_easy_setopt(curl, CURLOPT_POSTFIELDS, body.c_str());
  curl_easy_setopt(curl, CURLOPT_POSTFIELDSIZE, static_cast<long>(body.size()));
  curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, Collect);
  curl_easy_setopt(curl, CURLOPT_WRITEDATA, &received);
  curl_easy_setopt(curl, CURLOPT_TIMEOUT, options_.timeout_seconds);
  curl_easy_setopt(curl, CURLOPT_NOSIGNAL, 1L);
  const CURLcode rc = curl_easy_perform(curl);
  long http_status = 0;
  curl_easy_getinfo(curl, CURLINFO_RESPONSE_CODE, &http_status);
  curl_slist_free_all(headers);
  curl_easy_cleanup(curl);
  if (rc != CURLE_OK) {
    return absl::UnavailableError(
        util::StrCat("request failed: ", curl_easy_strerror(rc)));
  }
  if (http_status != 200) {
    return absl::UnavailableError(util::StrCat(
        "HTTP ", http_status, ": ", util::EscapeLine(received.substr(0, 500))));
  }
  return ParseChatResponse(received);
}

}  // namespace iftx::descgen
