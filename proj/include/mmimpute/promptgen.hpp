// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mmimpute {

struct PerformerSet {
  std::vector<std::string> performers;

  static PerformerSet defaults();    // man, woman, child, person, group of people
  static PerformerSet restricted();  // man, woman
};

struct DomainSet {
  std::vector<std::string> domains;

  static DomainSet single();       // photo
  static DomainSet multi_domain(); // photo + nine artistic domains
  bool contains(std::string_view domain) const;
};

struct GuidanceScalePolicy {
  enum class Mode { fixed, uniform_random };
  Mode mode = Mode::fixed;
  double fixed_value = 5.0;
  double low = 1.0;
  double high = 5.0;

  static GuidanceScalePolicy fixed(double value = 5.0);
  static GuidanceScalePolicy uniform(double low = 1.0, double high = 5.0);
  void validate() const;
};

enum class PromptStrategy { label, label_multidomain, llm_assisted };
enum class PerformerAssignment { balanced, uniform };

std::string_view to_string(PromptStrategy s);
PromptStrategy parse_prompt_strategy(std::string_view s);
std::string_view to_string(PerformerAssignment a);
PerformerAssignment parse_performer_assignment(std::string_view s);

struct PromptSpec {
  int class_index = 0;
  std::string text;
  std::string performer;
  std::string domain = "photo";
  double guidance_scale = 5.0;
  std::uint64_t generation_seed = 0;
  PromptStrategy strategy = PromptStrategy::label;

  bool operator==(const PromptSpec&) const = default;
};

// "A photo of {performer} {action_name}"
std::string build_label_prompt(std::string_view action_name, std::string_view performer);

// "A {domain} of {performer} {action_name}"; throws for domains outside `domains`.
std::string build_domain_prompt(std::string_view action_name, std::string_view performer, std::string_view domain,
                                const DomainSet& domains = DomainSet::multi_domain());

// "Provide 5 definitions of action class {action_name}"; throws on empty input.
std::string build_llm_request(std::string_view action_name);

// Up to five definitions from a numbered or bulleted list. Throws ParseError
// (carrying the raw text) when nothing parses.
std::vector<std::string> parse_llm_definitions(std::string_view response);

using LlmDefinitions = std::map<std::string, std::vector<std::string>>;

struct PromptBatchOptions {
  int per_class = 100;
  PerformerSet performers = PerformerSet::defaults();
  DomainSet domains = DomainSet::single();
  GuidanceScalePolicy guidance = GuidanceScalePolicy::fixed();
  PromptStrategy strategy = PromptStrategy::label;
  PerformerAssignment assignment = PerformerAssignment::balanced;
  std::uint64_t seed = 0;
};

// per_class specs for every class, in class-major order. Under balanced
// assignment every performer and domain is used floor(per_class/|set|) or
// ceil(per_class/|set|) times per class.
std::vector<PromptSpec> enumerate_prompt_batch(const std::vector<std::string>& class_names,
                                               const PromptBatchOptions& options,
                                               const LlmDefinitions* llm_definitions = nullptr);

// Text-generation backend used for LLM-assisted prompts.
class TextGenerationClient {
 public:
  virtual ~TextGenerationClient() = default;
  virtual std::string name() const = 0;
  virtual std::string complete(const std::string& request) = 0;
};

// Offline client: answers from a fixed request -> response table, or with a
// generated five-item numbered list when the request is not in the table.
class CannedTextClient : public TextGenerationClient {
 public:
  explicit CannedTextClient(std::map<std::string, std::string> responses = {});
  std::string name() const override { return "canned"; }
  std::string complete(const std::string& request) override;
  int calls() const { return calls_; }

 private:
  std::map<std::string, std::string> responses_;
  int calls_ = 0;
};

// POSTs {"prompt": request} to `url` and reads {"text": ...} back.
// A bearer token is taken from MMIMPUTE_LLM_TOKEN when set.
class HttpTextClient : public TextGenerationClient {
 public:
  explicit HttpTextClient(std::string url);
  std::string name() const override { return "http:" + url_; }
  std::string complete(const std::string& request) override;

 private:
  std::string url_;
};

struct LlmCacheEntry {
  std::string class_name;
  std::vector<std::string> definitions;
  std::string backend;
  std::string timestamp;
};

// Line-delimited {class_name, definitions, backend, timestamp}.
std::vector<LlmCacheEntry> load_llm_cache(const std::filesystem::path& path);
void append_llm_cache(const std::filesystem::path& path, const LlmCacheEntry& entry);

// Fills definitions for every class, asking `client` only for classes absent
// from the cache at `cache_path` (when non-empty) and appending new answers.
LlmDefinitions fetch_llm_definitions(const std::vector<std::string>& class_names, TextGenerationClient& client,
                                     const std::filesystem::path& cache_path = {});

std::string utc_timestamp();

}  // namespace mmimpute
