// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
#include "mmimpute/promptgen.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "http_util.hpp"
#include "mmimpute/error.hpp"
#include "mmimpute/rng.hpp"

namespace mmimpute {

using nlohmann::json;

PerformerSet PerformerSet::defaults() {
  return {{"a man", "a woman", "a child", "a person", "a group of people"}};
}

PerformerSet PerformerSet::restricted() { return {{"a man", "a woman"}}; }

DomainSet DomainSet::single() { return {{"photo"}}; }

DomainSet DomainSet::multi_domain() {
  return {{"photo", "drawing", "painting", "sketch", "collage", "poster", "digital art image", "rock drawing",
           "stick figure", "3D rendering"}};
}

bool DomainSet::contains(std::string_view domain) const {
  return std::find(domains.begin(), domains.end(), domain) != domains.end();
}

GuidanceScalePolicy GuidanceScalePolicy::fixed(double value) {
  GuidanceScalePolicy p;
  p.mode = Mode::fixed;
  p.fixed_value = value;
  return p;
}

GuidanceScalePolicy GuidanceScalePolicy::uniform(double low, double high) {
  GuidanceScalePolicy p;
  p.mode = Mode::uniform_random;
  p.low = low;
  p.high = high;
  return p;
}

void GuidanceScalePolicy::validate() const {
  if (mode == Mode::fixed && !(fixed_value > 0.0)) {
    throw ValidationError("guidance scale must be positive, got " + std::to_string(fixed_value));
  }
  if (mode == Mode::uniform_random && !(low <= high)) {
    throw ValidationError("guidance range requires low <= high");
  }
}

std::string_view to_string(PromptStrategy s) {
  switch (s) {
    case PromptStrategy::label:
      return "label";
    case PromptStrategy::label_multidomain:
      return "label_multidomain";
    case PromptStrategy::llm_assisted:
      return "llm_assisted";
  }
  return "?";
}

PromptStrategy parse_prompt_strategy(std::string_view s) {
  if (s == "label") return PromptStrategy::label;
  if (s == "label_multidomain") return PromptStrategy::label_multidomain;
  if (s == "llm_assisted") return PromptStrategy::llm_assisted;
  throw ValidationError("unknown prompt strategy '" + std::string(s) + "'");
}

std::string_view to_string(PerformerAssignment a) {
  return a == PerformerAssignment::balanced ? "balanced" : "uniform";
}

PerformerAssignment parse_performer_assignment(std::string_view s) {
  if (s == "balanced") return PerformerAssignment::balanced;
  if (s == "uniform") return PerformerAssignment::uniform;
  throw ValidationError("unknown performer assignment '" + std::string(s) + "'");
}

std::string build_label_prompt(std::string_view action_name, std::string_view performer) {
  std::string out = "A photo of ";
  out += performer;
  out += ' ';
  out += action_name;
  return out;
}

std::string build_domain_prompt(std::string_view action_name, std::string_view performer, std::string_view domain,
                                const DomainSet& domains) {
  if (!domains.contains(domain)) throw ValidationError("unknown domain '" + std::string(domain) + "'");
  std::string out = "A ";
  out += domain;
  out += " of ";
  out += performer;
  out += ' ';
  out += action_name;
  return out;
}

std::string build_llm_request(std::string_view action_name) {
  if (action_name.empty()) throw ValidationError("build_llm_request: empty action name");
  return "Provide 5 definitions of action class " + std::string(action_name);
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Strips a list marker ("1.", "2)", "(3)", "-", "*", "+", U+2022). Returns
// nullopt when the line is not a list item.
std::optional<std::string_view> strip_list_marker(std::string_view line) {
  if (line.empty()) return std::nullopt;
  if (line.starts_with("\xE2\x80\xA2")) return trim(line.substr(3));
  if (line[0] == '-' || line[0] == '*' || line[0] == '+') return trim(line.substr(1));
  std::size_t i = 0;
  const bool paren = line[0] == '(';
  if (paren) ++i;
  const auto digits_start = i;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i == digits_start || i >= line.size()) return std::nullopt;
  if (paren) {
    if (line[i] != ')') return std::nullopt;
  } else if (line[i] != '.' && line[i] != ')' && line[i] != ':') {
    return std::nullopt;
  }
  return trim(line.substr(i + 1));
}

}  // namespace

std::vector<std::string> parse_llm_definitions(std::string_view response) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= response.size() && out.size() < 5) {
    const auto nl = response.find('\n', pos);
    const auto line = trim(response.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    if (auto item = strip_list_marker(line); item && !item->empty()) out.emplace_back(*item);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (out.empty()) {
    throw ParseError("no definitions found in LLM response: \"" + std::string(response) + "\"");
  }
  return out;
}

namespace {

// n indices into a set of size m: floor(n/m) full rounds plus n%m distinct
// random extras, then shuffled.
std::vector<std::size_t> balanced_indices(std::size_t m, std::size_t n, Rng& rng) {
  std::vector<std::size_t> out;
  out.reserve(n);
  for (std::size_t round = 0; round < n / m; ++round) {
    for (std::size_t k = 0; k < m; ++k) out.push_back(k);
  }
  std::vector<std::size_t> extras(m);
  for (std::size_t k = 0; k < m; ++k) extras[k] = k;
  rng.shuffle(extras.begin(), extras.end());
  for (std::size_t k = 0; k < n % m; ++k) out.push_back(extras[k]);
  rng.shuffle(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> uniform_indices(std::size_t m, std::size_t n, Rng& rng) {
  std::vector<std::size_t> out(n);
  for (auto& x : out) x = rng.below(m);
  return out;
}

}  // namespace

std::vector<PromptSpec> enumerate_prompt_batch(const std::vector<std::string>& class_names,
                                               const PromptBatchOptions& options,
                                               const LlmDefinitions* llm_definitions) {
  if (options.per_class < 1) {
    throw ValidationError("per_class must be >= 1, got " + std::to_string(options.per_class));
  }
  if (options.performers.performers.empty()) throw ValidationError("performer set is empty");
  if (options.domains.domains.empty()) throw ValidationError("domain set is empty");
  options.guidance.validate();
  const bool llm = options.strategy == PromptStrategy::llm_assisted;
  if (llm && llm_definitions == nullptr) {
    throw ValidationError("llm_assisted prompts require LLM definitions");
  }
  if (!llm && llm_definitions != nullptr) {
    throw ValidationError("LLM definitions given for non-LLM prompt strategy");
  }
  if (options.strategy == PromptStrategy::label && options.domains.domains != DomainSet::single().domains) {
    throw ValidationError("label strategy uses the photo domain only; use label_multidomain");
  }

  const auto n = static_cast<std::size_t>(options.per_class);
  auto pick = [&](std::size_t m, Rng& rng) {
    return options.assignment == PerformerAssignment::balanced ? balanced_indices(m, n, rng)
                                                               : uniform_indices(m, n, rng);
  };

  std::vector<PromptSpec> specs;
  specs.reserve(n * class_names.size());
  std::set<std::uint64_t> used_seeds;
  Rng seed_rng(derive_seed(options.seed, 0x7365656473 /* seeds */));
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    const auto& action = class_names[c];
    Rng rng(derive_seed(options.seed, 0x70726f6d7074 /* prompt */, c));
    const auto performer_idx = pick(options.performers.performers.size(), rng);
    const auto domain_idx = pick(options.domains.domains.size(), rng);
    const std::vector<std::string>* defs = nullptr;
    std::vector<std::size_t> def_idx;
    if (llm) {
      auto it = llm_definitions->find(action);
      if (it == llm_definitions->end() || it->second.empty()) {
        throw ValidationError("no LLM definitions for class '" + action + "'");
      }
      defs = &it->second;
      def_idx = balanced_indices(defs->size(), n, rng);
    }
    for (std::size_t j = 0; j < n; ++j) {
      PromptSpec spec;
      spec.class_index = static_cast<int>(c);
      spec.strategy = options.strategy;
      spec.performer = options.performers.performers[performer_idx[j]];
      spec.domain = options.domains.domains[domain_idx[j]];
      if (llm) {
        spec.text = (*defs)[def_idx[j]];
      } else {
        spec.text = build_domain_prompt(action, spec.performer, spec.domain, options.domains);
      }
      spec.guidance_scale = options.guidance.mode == GuidanceScalePolicy::Mode::fixed
                                ? options.guidance.fixed_value
                                : rng.uniform(options.guidance.low, options.guidance.high);
      std::uint64_t gs;
      do {
        gs = seed_rng.next() >> 1;  // keep seeds representable as signed 64-bit
      } while (!used_seeds.insert(gs).second);
      spec.generation_seed = gs;
      specs.push_back(std::move(spec));
    }
  }
  return specs;
}

CannedTextClient::CannedTextClient(std::map<std::string, std::string> responses)
    : responses_(std::move(responses)) {}

std::string CannedTextClient::complete(const std::string& request) {
  ++calls_;
  if (auto it = responses_.find(request); it != responses_.end()) return it->second;
  static constexpr std::string_view kPrefix = "Provide 5 definitions of action class ";
  std::string action = request.starts_with(kPrefix) ? request.substr(kPrefix.size()) : request;
  std::string out;
  for (int k = 1; k <= 5; ++k) {
    out += std::to_string(k) + ". " + action + ", variation " + std::to_string(k) + "\n";
  }
  return out;
}

HttpTextClient::HttpTextClient(std::string url) : url_(std::move(url)) {}

std::string HttpTextClient::complete(const std::string& request) {
  const auto parts = detail::split_url(url_);
  httplib::Client client(parts.origin);
  client.set_read_timeout(120, 0);
  httplib::Headers headers;
  if (const char* token = std::getenv("MMIMPUTE_LLM_TOKEN")) {
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  const json body = {{"prompt", request}};
  auto res = client.Post(parts.path, headers, body.dump(), "application/json");
  if (!res) throw BackendError("LLM request to " + url_ + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw BackendError("LLM backend returned HTTP " + std::to_string(res->status));
  try {
    return json::parse(res->body).at("text").get<std::string>();
  } catch (const json::exception& e) {
    throw BackendError(std::string("LLM backend response: ") + e.what());
  }
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<LlmCacheEntry> load_llm_cache(const std::filesystem::path& path) {
  std::vector<LlmCacheEntry> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      out.push_back({j.at("class_name").get<std::string>(), j.at("definitions").get<std::vector<std::string>>(),
                     j.value("backend", ""), j.value("timestamp", "")});
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
  }
  return out;
}

void append_llm_cache(const std::filesystem::path& path, const LlmCacheEntry& entry) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const json j = {{"class_name", entry.class_name},
                  {"definitions", entry.definitions},
                  {"backend", entry.backend},
                  {"timestamp", entry.timestamp}};
  std::ofstream out(path, std::ios::app);
  out << j.dump() << '\n';
}

LlmDefinitions fetch_llm_definitions(const std::vector<std::string>& class_names, TextGenerationClient& client,
                                     const std::filesystem::path& cache_path) {
  LlmDefinitions defs;
  if (!cache_path.empty()) {
    for (auto& e : load_llm_cache(cache_path)) defs[e.class_name] = std::move(e.definitions);
  }
  for (const auto& name : class_names) {
    if (defs.contains(name)) continue;
    auto parsed = parse_llm_definitions(client.complete(build_llm_request(name)));
    if (!cache_path.empty()) append_llm_cache(cache_path, {name, parsed, client.name(), utc_timestamp()});
    defs[name] = std::move(parsed);
  }
  return defs;
}

}  // namespace mmimpute
