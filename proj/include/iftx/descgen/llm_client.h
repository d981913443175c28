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

// Text-in, text-out access to a language model, plus the two offline
// backends used by tests and reproducible runs: a fixture table keyed by
// prompt hash, and an on-disk response cache.

#ifndef IFTX_DESCGEN_LLM_CLIENT_H_
#define IFTX_DESCGEN_LLM_CLIENT_H_

#include <atomic>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"

namespace iftx::descgen {

struct LlmRequest {
  std::string model;
  std::string prompt;
  double temperature = 0.0;
  // Image references (paths or URLs) for vision-capable models.
  std::vector<std::string> image_refs;
};

// Implementations must be safe to call from several threads at once.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual absl::StatusOr<std::string> Complete(const LlmRequest& request) = 0;
};

// SHA-256 over model, prompt and image references. Used as the cache and
// fixture key.
std::string PromptKey(const LlmRequest& request);

// Replays canned responses. The fixture file is a description file in which
// each entry is preceded by its key:
//
//   # prompt-hash: <hex>
//   <label><TAB><escaped response>
//
// Other comment lines and blank lines are ignored. A request without an
// entry fails with NotFound.
class FixtureClient : public LlmClient {
 public:
  static absl::StatusOr<FixtureClient> Parse(std::string_view contents);
  static absl::StatusOr<FixtureClient> Load(const std::string& path);

  FixtureClient() = default;
  FixtureClient(FixtureClient&& other) noexcept;

  void Add(const std::string& key, std::string response);
  absl::StatusOr<std::string> Complete(const LlmRequest& request) override;

  size_t size() const { return responses_.size(); }
  int calls() const { return calls_.load(); }

 private:
  std::map<std::string, std::string> responses_;
  std::atomic<int> calls_{0};
};

// One fixture entry in the format read by FixtureClient::Parse.
std::string FormatFixtureEntry(std::string_view key, std::string_view label,
                               std::string_view response);

// Directory of one file per key: the first line is the key, the rest is the
// raw response. Writes are serialized; reads may run concurrently.
class ResponseCache {
 public:
  explicit ResponseCache(std::string dir) : dir_(std::move(dir)) {}

  // Corrupt entries (wrong first line) are reported as errors, missing ones
  // as NotFound.
  absl::StatusOr<std::string> Lookup(const std::string& key);
  absl::Status Store(const std::string& key, std::string_view response);

  const std::string& dir() const { return dir_; }
  int hits() const { return hits_.load(); }
  int misses() const { return misses_.load(); }

 private:
  std::string PathFor(const std::string& key) const;

  std::string dir_;
  std::mutex write_mu_;
  std::atomic<int> hits_{0};
  std::atomic<int> misses_{0};
};

struct CallStats {
  std::atomic<int> cache_hits{0};
  std::atomic<int> client_calls{0};
};

// Cache first, then up to 1 + max_retries client attempts. A fresh answer is
// stored before it is returned. The last failure is returned with the attempt
// count prepended.
absl::StatusOr<std::string> CompleteWithRetry(const LlmRequest& request,
                                              int max_retries,
                                              LlmClient& client,
                                              ResponseCache* cache,
                                              CallStats& stats);

// Test double: answers with a function of the request and counts calls.
class ScriptedClient : public LlmClient {
 public:
  using Script = std::function<absl::StatusOr<std::string>(const LlmRequest&)>;
  explicit ScriptedClient(Script script) : script_(std::move(script)) {}

  absl::StatusOr<std::string> Complete(const LlmRequest& request) override {
    ++calls_;
    return script_(request);
  }
  int calls() const { return calls_.load(); }

 private:
  Script script_;
  std::atomic<int> calls_{0};
};

}  // namespace iftx::descgen

#endif  // IFTX_DESCGEN_LLM_CLIENT_H_
