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

#include "iftx/descgen/llm_client.h"

#include "iftx/util/hash.h"
#include "iftx/util/status_macros.h"
#include "iftx/util/text_io.h"

namespace iftx::descgen {

constexpr std::string_view kHashComment = "# prompt-hash:";

std::string PromptKey(const LlmRequest& request) {
  std::string material = util::StrCat("model=", request.model, "\n");
  for (const std::string& ref : request.image_refs) {
    util::StrAppend(&material, "image=", util::EscapeLine(ref), "\n");
  }
  util::StrAppend(&material, "prompt=", request.prompt);
  return util::Sha256Hex(material);
}

FixtureClient::FixtureClient(FixtureClient&& other) noexcept
    : responses_(std::move(other.responses_)), calls_(other.calls_.load()) {}

absl::StatusOr<FixtureClient> FixtureClient::Parse(std::string_view contents) {
  FixtureClient client;
  std::string pending;
  int line_no = 0;
  for (std::string_view raw : util::SplitLines(contents)) {
    ++line_no;
    const std::string_view line = util::TrimWhitespace(raw);
    if (line.empty()) continue;
    if (line.starts_with(kHashComment)) {
      if (!pending.empty()) {
        return absl::InvalidArgumentError(
            util::StrCat("line ", line_no, ": hash without entry before it"));
      }
      pending = std::string(util::TrimWhitespace(line.substr(kHashComment.size())));
      if (pending.empty()) {
        return absl::InvalidArgumentError(
            util::StrCat("line ", line_no, ": empty prompt hash"));
      }
      continue;
    }
    if (line[0] == '#') continue;
    if (pending.empty()) continue;  // plain description line
    const size_t tab = raw.find('\t');
    if (tab == std::string_view::npos) {
      return absl::InvalidArgumentError(
          util::StrCat("line ", line_no, ": expected label<TAB>response"));
    }
    absl::StatusOr<std::string> response = util::UnescapeLine(raw.substr(tab + 1));
    if (!response.ok()) {
      return absl::InvalidArgumentError(util::StrCat(
          "line ", line_no, ": ", response.status().message()));
    }
    if (client.responses_.contains(pending)) {
      return absl::InvalidArgumentError(
          util::StrCat("line ", line_no, ": duplicate prompt hash ", pending));
    }
    client.responses_.emplace(std::move(pending), *std::move(response));
    pending.clear();
  }
  if (!pending.empty()) {
    return absl::InvalidArgumentError("prompt hash at end of file has no entry");
  }
  return client;
}

absl::StatusOr<FixtureClient> FixtureClient::Load(const std::string& path) {
  IFTX_ASSIGN_OR_RETURN(const std::string contents, util::ReadFile(path));
  absl::StatusOr<FixtureClient> client = Parse(contents);
  if (!client.ok()) {
    return absl::Status(client.status().code(),
                        util::StrCat(path, ": ", client.status().message()));
  }
  return client;
}

void FixtureClient::Add(const std::string& key, std::string response) {
  responses_[key] = std::move(response);
}

absl::StatusOr<std::string> FixtureClient::Complete(const LlmRequest& request) {
  ++calls_;
  const std::string key = PromptKey(request);
  const auto it = responses_.find(key);
  if (it == responses_.end()) {
    return absl::NotFoundError(
        util::StrCat("no fixture response for prompt hash ", key));
  }
  return it->second;
}

std::string FormatFixtureEntry(std::string_view key, std::string_view label,
                               std::string_view response) {
  return util::StrCat(kHashComment, " ", key, "\n", label, "\t",
                      util::EscapeLine(response), "\n");
}

std::string ResponseCache::PathFor(const std::string& key) const {
  return util::StrCat(dir_, "/", key, ".txt");
}

absl::StatusOr<std::string> ResponseCache::Lookup(const std::string& key) {
  absl::StatusOr<std::string> contents = util::ReadFile(PathFor(key));
  if (!contents.ok()) {
    ++misses_;
    return contents.status();
  }
  const size_t nl = contents->find('\n');
  if (nl == std::string::npos || std::string_view(*contents).substr(0, nl) != key) {
    ++misses_;
    return absl::DataLossError(
        util::StrCat("cache entry ", PathFor(key), " does not carry its key"));
  }
  ++hits_;
  return contents->substr(nl + 1);
}

absl::Status ResponseCache::Store(const std::string& key,
                                  std::string_view response) {
  std::lock_guard<std::mutex> lock(write_mu_);
  return util::WriteFile(PathFor(key), util::StrCat(key, "\n", response));
}

absl::StatusOr<std::string> CompleteWithRetry(const LlmRequest& request,
                                              int max_retries,
                                              LlmClient& client,
                                              ResponseCache* cache,
                                              CallStats& stats) {
  const std::string key = PromptKey(request);
  if (cache != nullptr) {
    absl::StatusOr<std::string> hit = cache->Lookup(key);
    if (hit.ok()) {
      ++stats.cache_hits;
      return hit;
    }
  }
  absl::Status last;
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    ++stats.client_calls;
    absl::StatusOr<std::string> response = client.Complete(request);
    if (response.ok()) {
      if (cache != nullptr) {
        IFTX_RETURN_IF_ERROR(cache->Store(key, *response));
      }
      return response;
    }
    last = response.status();
  }
  return absl::Status(last.code(),
                      util::StrCat("failed after ", max_retries + 1,
                                   " attempt(s): ", last.message()));
}

}  // namespace iftx::descgen
