// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
#include "mmimpute/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <future>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mmimpute/error.hpp"
#include "mmimpute/genclient.hpp"
#include "mmimpute/hash.hpp"
#include "mmimpute/payload.hpp"
#include "mmimpute/plot.hpp"
#include "mmimpute/rng.hpp"

namespace mmimpute {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::array<std::pair<BaselinePreset, std::string_view>, 10> kPresetNames{{
    {BaselinePreset::audio_training, "audio_training"},
    {BaselinePreset::low_resource_visual, "low_resource_visual"},
    {BaselinePreset::low_resource_multimodal, "low_resource_multimodal"},
    {BaselinePreset::zero_filling, "zero_filling"},
    {BaselinePreset::gti_mm, "gti_mm"},
    {BaselinePreset::zs_visual, "zs_visual"},
    {BaselinePreset::zs_multimodal, "zs_multimodal"},
    {BaselinePreset::mm_dropout, "mm_dropout"},
    {BaselinePreset::gti_mm_dropout, "gti_mm_dropout"},
    {BaselinePreset::mm_zero_imputation, "mm_zero_imputation"},
}};

// Shortest representation that parses back to the same double.
std::string num(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, const char* what) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(std::string("bad ") + what + " '" + std::string(s) + "'");
  }
  return v;
}

std::uint64_t parse_u64(std::string_view s, const char* what) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(std::string("bad ") + what + " '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

void log(const HarnessOptions& options, const std::string& line) {
  if (!options.quiet) std::fprintf(stderr, "[mmimpute] %s\n", line.c_str());
}

std::string_view to_string(PromptTableMode m) { return m == PromptTableMode::patterned ? "patterned" : "single"; }
std::string_view to_string(MissingTreatment m) { return m == MissingTreatment::zero_fill ? "zero_fill" : "skip"; }
std::string_view to_string(ZeroSpace z) { return z == ZeroSpace::payload ? "payload" : "embedding"; }
std::string_view to_string(ImputationSchedule s) { return s == ImputationSchedule::per_epoch ? "per_epoch" : "frozen"; }

template <typename E>
E parse_enum(std::string_view s, std::initializer_list<std::pair<std::string_view, E>> table, const char* what) {
  for (const auto& [name, value] : table) {
    if (s == name) return value;
  }
  throw ValidationError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

ModalityKind surviving_of(const DatasetManifest& m, ModalityKind target) { return m.other_modality(target); }

}  // namespace

std::string_view to_string(BaselinePreset p) {
  for (const auto& [value, name] : kPresetNames) {
    if (value == p) return name;
  }
  return "?";
}

BaselinePreset parse_preset(std::string_view s) {
  for (const auto& [value, name] : kPresetNames) {
    if (name == s) return value;
  }
  std::string known;
  for (const auto& [value, name] : kPresetNames) known += (known.empty() ? "" : ", ") + std::string(name);
  throw ValidationError("unknown preset '" + std::string(s) + "' (known: " + known + ")");
}

const std::vector<BaselinePreset>& all_presets() {
  static const std::vector<BaselinePreset> presets = [] {
    std::vector<BaselinePreset> v;
    for (const auto& [value, name] : kPresetNames) v.push_back(value);
    return v;
  }();
  return presets;
}

PresetPlan preset_plan(BaselinePreset preset, double dropout_rate) {
  PresetPlan plan;
  switch (preset) {
    case BaselinePreset::audio_training:
      plan.view = ViewStrategy::modality_only;
      plan.keep_target = false;
      break;
    case BaselinePreset::low_resource_visual:
      plan.view = ViewStrategy::complete_only;
      plan.keep_surviving = false;
      break;
    case BaselinePreset::low_resource_multimodal:
      plan.view = ViewStrategy::complete_only;
      break;
    case BaselinePreset::zero_filling:
      plan.imputation = ImputationKind::zero_fill;
      break;
    case BaselinePreset::gti_mm:
      plan.imputation = ImputationKind::gti;
      break;
    case BaselinePreset::zs_visual:
      plan.imputation = ImputationKind::gti;
      plan.keep_surviving = false;
      plan.requires_full_missing = true;
      break;
    case BaselinePreset::zs_multimodal:
      plan.imputation = ImputationKind::gti;
      plan.requires_full_missing = true;
      break;
    case BaselinePreset::mm_dropout:
      plan.dropout = true;
      plan.train_p_is_zero = true;
      plan.per_q_model = dropout_rate < 0;
      break;
    case BaselinePreset::gti_mm_dropout:
      plan.imputation = ImputationKind::gti;
      plan.dropout = true;
      plan.per_q_model = dropout_rate < 0;
      break;
    case BaselinePreset::mm_zero_imputation:
      plan.imputation = ImputationKind::zero_fill;
      plan.train_p_is_q = true;
      plan.per_q_model = true;
      break;
  }
  return plan;
}

// ---------------------------------------------------------------- config

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["dataset"] = c.dataset;
  j["toy"] = {{"num_classes", c.toy.num_classes},
              {"per_class", c.toy.per_class},
              {"dim", c.toy.dim},
              {"noise", c.toy.noise},
              {"seed", c.toy.seed},
              {"modalities", {to_string(c.toy.modalities[0]), to_string(c.toy.modalities[1])}},
              {"name", c.toy.name}};
  j["features"] = c.features;
  j["target"] = to_string(c.target);
  j["p"] = c.p;
  j["q"] = c.q;
  j["preset"] = to_string(c.preset);
  j["schedule"] = to_string(c.schedule);
  j["pool"] = {{"per_class", c.pool.per_class},
               {"ugc", c.pool.ugc},
               {"multidomain", c.pool.multidomain},
               {"llm", c.pool.llm},
               {"performer_set", c.pool.performer_set},
               {"assignment", c.pool.assignment},
               {"stub_noise", c.pool.stub_noise},
               {"seed", c.pool.seed},
               {"llm_url", c.pool.llm_url},
               {"backend_url", c.pool.backend_url},
               {"dir", c.pool.dir}};
  j["dropout_rate"] = c.dropout_rate;
  j["prompting"] = c.prompting;
  j["prompt_len"] = c.prompt_len;
  j["prompt_mode"] = to_string(c.prompt_mode);
  j["token_count"] = c.token_count;
  j["missing_treatment"] = to_string(c.missing_treatment);
  j["zero_space"] = to_string(c.zero_space);
  j["optimizer"] = {{"lr", c.optimizer.lr},
                    {"weight_decay", c.optimizer.weight_decay},
                    {"beta1", c.optimizer.beta1},
                    {"beta2", c.optimizer.beta2},
                    {"eps", c.optimizer.eps},
                    {"batch_size", c.optimizer.batch_size},
                    {"epochs", c.optimizer.epochs}};
  j["seeds"] = c.seeds;
  j["mask_reuse"] = c.mask_reuse;
  j["mask_seed"] = c.mask_seed;
  j["encoder_seed"] = c.encoder_seed;
  j["encoder"] = c.encoder;
  j["select_best_val"] = c.select_best_val;
  j["ks"] = c.ks;
  j["threads"] = c.threads;
  return j.dump(2);
}

namespace {

using FieldSetters = std::map<std::string, std::function<void(const json&)>>;

void apply_fields(const json& j, const FieldSetters& setters, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) throw ValidationError("unknown config key '" + where + key + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw ValidationError("config key '" + where + key + "': " + e.what());
    }
  }
}

}  // namespace

ExperimentConfig config_from_json(std::string_view text, const ExperimentConfig& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c = base;
  FieldSetters toy{
      {"num_classes", [&](const json& v) { c.toy.num_classes = v.get<int>(); }},
      {"per_class", [&](const json& v) { c.toy.per_class = v.get<int>(); }},
      {"dim", [&](const json& v) { c.toy.dim = v.get<int>(); }},
      {"noise", [&](const json& v) { c.toy.noise = v.get<double>(); }},
      {"seed", [&](const json& v) { c.toy.seed = v.get<std::uint64_t>(); }},
      {"modalities",
       [&](const json& v) {
         const auto names = v.get<std::vector<std::string>>();
         if (names.size() != 2) throw ValidationError("toy.modalities needs exactly two entries");
         c.toy.modalities = {parse_modality(names[0]), parse_modality(names[1])};
       }},
      {"name", [&](const json& v) { c.toy.name = v.get<std::string>(); }},
  };
  FieldSetters pool{
      {"per_class", [&](const json& v) { c.pool.per_class = v.get<int>(); }},
      {"ugc", [&](const json& v) { c.pool.ugc = v.get<bool>(); }},
      {"multidomain", [&](const json& v) { c.pool.multidomain = v.get<bool>(); }},
      {"llm", [&](const json& v) { c.pool.llm = v.get<bool>(); }},
      {"performer_set", [&](const json& v) { c.pool.performer_set = v.get<std::string>(); }},
      {"assignment", [&](const json& v) { c.pool.assignment = v.get<std::string>(); }},
      {"stub_noise", [&](const json& v) { c.pool.stub_noise = v.get<double>(); }},
      {"seed", [&](const json& v) { c.pool.seed = v.get<std::uint64_t>(); }},
      {"llm_url", [&](const json& v) { c.pool.llm_url = v.get<std::string>(); }},
      {"backend_url", [&](const json& v) { c.pool.backend_url = v.get<std::string>(); }},
      {"dir", [&](const json& v) { c.pool.dir = v.get<std::string>(); }},
  };
  FieldSetters optimizer{
      {"lr", [&](const json& v) { c.optimizer.lr = v.get<double>(); }},
      {"weight_decay", [&](const json& v) { c.optimizer.weight_decay = v.get<double>(); }},
      {"beta1", [&](const json& v) { c.optimizer.beta1 = v.get<double>(); }},
      {"beta2", [&](const json& v) { c.optimizer.beta2 = v.get<double>(); }},
      {"eps", [&](const json& v) { c.optimizer.eps = v.get<double>(); }},
      {"batch_size", [&](const json& v) { c.optimizer.batch_size = v.get<int>(); }},
      {"epochs", [&](const json& v) { c.optimizer.epochs = v.get<int>(); }},
  };
  FieldSetters top{
      {"dataset", [&](const json& v) { c.dataset = v.get<std::string>(); }},
      {"toy", [&](const json& v) { apply_fields(v, toy, "toy."); }},
      {"features", [&](const json& v) { c.features = v.get<std::string>(); }},
      {"target", [&](const json& v) { c.target = parse_modality(v.get<std::string>()); }},
      {"p", [&](const json& v) { c.p = v.get<double>(); }},
      {"q", [&](const json& v) { c.q = v.get<std::vector<double>>(); }},
      {"preset", [&](const json& v) { c.preset = parse_preset(v.get<std::string>()); }},
      {"schedule",
       [&](const json& v) {
         c.schedule = parse_enum<ImputationSchedule>(
             v.get<std::string>(),
             {{"per_epoch", ImputationSchedule::per_epoch}, {"frozen", ImputationSchedule::frozen}}, "schedule");
       }},
      {"pool", [&](const json& v) { apply_fields(v, pool, "pool."); }},
      {"dropout_rate", [&](const json& v) { c.dropout_rate = v.get<double>(); }},
      {"prompting", [&](const json& v) { c.prompting = v.get<bool>(); }},
      {"prompt_len", [&](const json& v) { c.prompt_len = v.get<int>(); }},
      {"prompt_mode",
       [&](const json& v) {
         c.prompt_mode = parse_enum<PromptTableMode>(
             v.get<std::string>(), {{"patterned", PromptTableMode::patterned}, {"single", PromptTableMode::single}},
             "prompt_mode");
       }},
      {"token_count", [&](const json& v) { c.token_count = v.get<int>(); }},
      {"missing_treatment",
       [&](const json& v) {
         c.missing_treatment = parse_enum<MissingTreatment>(
             v.get<std::string>(), {{"zero_fill", MissingTreatment::zero_fill}, {"skip", MissingTreatment::skip}},
             "missing_treatment");
       }},
      {"zero_space",
       [&](const json& v) {
         c.zero_space = parse_enum<ZeroSpace>(v.get<std::string>(),
                                              {{"payload", ZeroSpace::payload}, {"embedding", ZeroSpace::embedding}},
                                              "zero_space");
       }},
      {"optimizer", [&](const json& v) { apply_fields(v, optimizer, "optimizer."); }},
      {"seeds", [&](const json& v) { c.seeds = v.get<std::vector<std::uint64_t>>(); }},
      {"mask_reuse", [&](const json& v) { c.mask_reuse = v.get<bool>(); }},
      {"mask_seed", [&](const json& v) { c.mask_seed = v.get<std::uint64_t>(); }},
      {"encoder_seed", [&](const json& v) { c.encoder_seed = v.get<std::uint64_t>(); }},
      {"encoder", [&](const json& v) { c.encoder = v.get<std::string>(); }},
      {"select_best_val", [&](const json& v) { c.select_best_val = v.get<bool>(); }},
      {"ks", [&](const json& v) { c.ks = v.get<std::vector<int>>(); }},
      {"threads", [&](const json& v) { c.threads = v.get<int>(); }},
      // written into run snapshots; recomputed, never trusted
      {"config_hash", [](const json&) {}},
  };
  apply_fields(j, top, "");
  return c;
}

ExperimentConfig load_config(const fs::path& path, const ExperimentConfig& base) {
  return config_from_json(read_file(path), base);
}

std::string config_hash(const ExperimentConfig& config) {
  auto copy = config;
  copy.threads = 0;  // parallelism never changes results
  return short_hash(config_to_json(copy), 16);
}

void validate_config(const ExperimentConfig& c) {
  auto fail = [](const std::string& msg) { throw ValidationError(msg); };
  auto is_fraction = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (c.dataset.empty()) fail("dataset must be set");
  if (!is_fraction(c.p)) fail("p must be in [0, 1], got " + num(c.p));
  if (c.q.empty()) fail("q list must not be empty");
  for (double q : c.q) {
    if (!is_fraction(q)) fail("q must be in [0, 1], got " + num(q));
  }
  if (c.seeds.empty()) fail("seeds list must not be empty");
  if (std::set<std::uint64_t>(c.seeds.begin(), c.seeds.end()).size() != c.seeds.size()) fail("seeds must be distinct");
  if (c.pool.per_class < 1) fail("pool.per_class must be >= 1, got " + std::to_string(c.pool.per_class));
  if (c.pool.stub_noise < 0) fail("pool.stub_noise must be >= 0");
  if (c.pool.performer_set != "default" && c.pool.performer_set != "restricted") {
    fail("pool.performer_set must be default or restricted, got '" + c.pool.performer_set + "'");
  }
  parse_performer_assignment(c.pool.assignment);
  if (c.pool.llm && c.pool.multidomain) {
    fail("LLM-assisted prompts use each definition verbatim; they cannot be combined with multidomain prompts");
  }
  if (c.dropout_rate > 1.0) fail("dropout_rate must be <= 1 (negative means: equal to q)");
  if (c.prompt_len < 0) fail("prompt_len must be >= 0");
  if (c.prompting && c.token_count < 1) fail("prompting needs token_count >= 1");
  if (c.encoder != "toy" && c.encoder != "adapter") fail("encoder must be toy or adapter (got " + c.encoder + ")");
  if (c.encoder == "adapter" && c.prompting) fail("prompting needs token-mode toy encoders, not the adapter");
  if (c.optimizer.lr <= 0) fail("optimizer.lr must be positive");
  if (c.optimizer.weight_decay < 0) fail("optimizer.weight_decay must be >= 0");
  if (c.optimizer.batch_size < 1) fail("optimizer.batch_size must be >= 1");
  if (c.optimizer.epochs < 0) fail("optimizer.epochs must be >= 0");
  if (!(c.optimizer.beta1 >= 0 && c.optimizer.beta1 < 1 && c.optimizer.beta2 >= 0 && c.optimizer.beta2 < 1)) {
    fail("optimizer betas must be in [0, 1)");
  }
  for (int k : c.ks) {
    if (k < 1) fail("ks entries must be >= 1");
  }
  if (c.threads < 0) fail("threads must be >= 0");

  const auto plan = preset_plan(c.preset, c.dropout_rate);
  const std::string name(to_string(c.preset));
  if (plan.requires_full_missing && c.p < 1.0) {
    fail(name + " trains without any real " + std::string(to_string(c.target)) +
         " data, so p must be 1 (got p=" + num(c.p) + "); use gti_mm for partial missingness");
  }
  if (plan.train_p_is_zero && c.p != 0.0) {
    fail(name + " trains on complete data; set p=0 (got p=" + num(c.p) + ")");
  }
  if (c.dataset == "toy-gauss") {
    if (c.toy.modalities[0] == c.toy.modalities[1]) fail("toy.modalities must differ");
    if (c.target != c.toy.modalities[0] && c.target != c.toy.modalities[1]) {
      fail("target modality " + std::string(to_string(c.target)) + " is not one of the toy dataset's modalities");
    }
    if (c.prompting && c.toy.dim % c.token_count != 0) {
      fail("token_count " + std::to_string(c.token_count) + " must divide toy.dim " + std::to_string(c.toy.dim));
    }
  }
}

ExperimentConfig with_preset(const ExperimentConfig& base, BaselinePreset preset) {
  auto c = base;
  c.preset = preset;
  const auto plan = preset_plan(preset, c.dropout_rate);
  if (plan.requires_full_missing) c.p = 1.0;
  if (plan.train_p_is_zero) c.p = 0.0;
  return c;
}

// ---------------------------------------------------------------- data + pool

PreparedData prepare_dataset(const ExperimentConfig& config, const HarnessOptions& options) {
  PreparedData data;
  if (config.dataset == "toy-gauss") {
    json id{{"num_classes", config.toy.num_classes},
            {"per_class", config.toy.per_class},
            {"dim", config.toy.dim},
            {"noise", config.toy.noise},
            {"seed", config.toy.seed},
            {"modalities", {to_string(config.toy.modalities[0]), to_string(config.toy.modalities[1])}},
            {"name", config.toy.name}};
    data.dataset_id = "toy-" + short_hash(id.dump(), 12);
    const auto dir = options.out / "datasets" / data.dataset_id;
    data.manifest_path = dir / "manifest.jsonl";
    const auto features_path = dir / "class_means.json";
    if (!fs::exists(data.manifest_path) || !fs::exists(features_path)) {
      log(options, "writing toy dataset " + dir.string());
      // Build next to the final location, then move into place.
      auto tmp = dir;
      tmp += ".tmp-" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
      fs::remove_all(tmp);
      make_toy_dataset(config.toy, tmp);
      fs::create_directories(dir.parent_path());
      std::error_code ec;
      fs::rename(tmp, dir, ec);
      if (ec) fs::remove_all(tmp);  // another writer won; its copy is identical
    }
    data.manifest = load_manifest(data.manifest_path);
    data.features = load_class_features(features_path);
  } else {
    data.manifest_path = config.dataset;
    data.manifest = load_manifest(data.manifest_path, LoadOptions{MissingPayloadPolicy::error, true});
    data.dataset_id = "ds-" + short_hash(read_file(data.manifest_path), 12);
    if (!config.features.empty()) data.features = load_class_features(config.features);
  }
  if (!data.manifest.has_modality(config.target)) {
    throw ValidationError("dataset " + data.manifest.name + " has no " + std::string(to_string(config.target)) +
                          " modality");
  }
  if (config.prompting) {
    for (auto m : data.manifest.modalities) {
      const int d = data.manifest.dims.at(m);
      if (d % config.token_count != 0) {
        throw ValidationError("token_count " + std::to_string(config.token_count) + " must divide the " +
                              std::string(to_string(m)) + " dim " + std::to_string(d));
      }
    }
  }
  return data;
}

namespace {

PromptBatchOptions prompt_options(const PoolConfig& pool) {
  PromptBatchOptions o;
  o.per_class = pool.per_class;
  o.performers = pool.performer_set == "restricted" ? PerformerSet::restricted() : PerformerSet::defaults();
  o.domains = pool.multidomain ? DomainSet::multi_domain() : DomainSet::single();
  o.guidance = pool.ugc ? GuidanceScalePolicy::uniform() : GuidanceScalePolicy::fixed();
  o.strategy = pool.llm ? PromptStrategy::llm_assisted
                        : (pool.multidomain ? PromptStrategy::label_multidomain : PromptStrategy::label);
  o.assignment = parse_performer_assignment(pool.assignment);
  o.seed = pool.seed;
  return o;
}

fs::path pool_dir_for(const ExperimentConfig& c, const PreparedData& data, const HarnessOptions& options) {
  if (!c.pool.dir.empty()) return c.pool.dir;
  json id{{"dataset", data.dataset_id},
          {"modality", to_string(c.target)},
          {"per_class", c.pool.per_class},
          {"ugc", c.pool.ugc},
          {"multidomain", c.pool.multidomain},
          {"llm", c.pool.llm},
          {"performer_set", c.pool.performer_set},
          {"assignment", c.pool.assignment},
          {"stub_noise", c.pool.stub_noise},
          {"seed", c.pool.seed},
          {"llm_url", c.pool.llm_url},
          {"backend_url", c.pool.backend_url}};
  return options.out / "pools" / ("pool-" + short_hash(id.dump(), 12));
}

}  // namespace

SyntheticPool prepare_pool(const ExperimentConfig& c, const PreparedData& data, const HarnessOptions& options) {
  PoolBuildOptions build;
  build.prompts = prompt_options(c.pool);
  build.pool_dir = pool_dir_for(c, data, options);
  build.modality = c.target;
  build.expected_dim = data.manifest.dims.at(c.target);

  LlmDefinitions definitions;
  if (c.pool.llm) {
    std::unique_ptr<TextGenerationClient> client;
    if (c.pool.llm_url.empty()) {
      client = std::make_unique<CannedTextClient>();
    } else {
      client = std::make_unique<HttpTextClient>(c.pool.llm_url);
    }
    const auto cache = options.out / "llm" / ("definitions-" + short_hash(client->name(), 12) + ".jsonl");
    fs::create_directories(cache.parent_path());
    definitions = fetch_llm_definitions(data.manifest.class_names, *client, cache);
    build.llm_definitions = &definitions;
  }

  std::unique_ptr<GenerationBackend> backend;
  std::unique_ptr<ImageEmbedder> embedder;
  if (c.pool.backend_url.empty()) {
    if (!data.features) {
      throw ValidationError("the stub backend needs a class feature table; set `features` for dataset " +
                            c.dataset);
    }
    backend = std::make_unique<StubBackend>(c.target, *data.features, c.pool.stub_noise);
  } else {
    backend = std::make_unique<HttpGenerationBackend>(c.pool.backend_url, backend_kind_for(c.target));
    const int dim = build.expected_dim;
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(dim))));
    if (side * side == dim) {
      embedder = std::make_unique<DownsampleImageEmbedder>(side);
      build.embedder = embedder.get();
    }
  }
  log(options, "pool " + build.pool_dir.string() + " (" + std::to_string(c.pool.per_class) + "/class)");
  auto result = build_pool(data.manifest.class_names, *backend, build);
  if (result.interrupted) throw BackendError("pool build interrupted");
  return result.pool;
}

// ---------------------------------------------------------------- views

TrainingView make_training_view(const ExperimentConfig& c, const PreparedData& data, const SyntheticPool* pool,
                                Split split, double p, double dropout, std::uint64_t seed) {
  const auto plan_def = preset_plan(c.preset, c.dropout_rate);
  TrainingView view;
  view.surviving = surviving_of(data.manifest, c.target);
  const std::uint64_t mask_base = c.mask_reuse ? c.mask_seed : seed;
  view.plan = apply_missingness(data.manifest, split, c.target, p, mask_base);
  switch (plan_def.view) {
    case ViewStrategy::keep_all:
      view.base = masked_split(data.manifest, view.plan);
      break;
    case ViewStrategy::complete_only:
      if (split == Split::train) {
        view.base = training_view(data.manifest, view.plan, ViewStrategy::complete_only);
      } else {
        for (const auto* r : data.manifest.split_records(split)) {
          if (!view.plan.masks(r->id)) view.base.push_back(*r);
        }
      }
      break;
    case ViewStrategy::modality_only:
      view.base = training_view(data.manifest, view.plan, ViewStrategy::modality_only, view.surviving);
      break;
  }
  view.imputation.kind = plan_def.imputation;
  view.imputation.pool = pool;
  view.imputation.dim = data.manifest.dims.at(c.target);
  view.imputation.schedule = c.schedule;
  if (plan_def.imputation == ImputationKind::gti && pool == nullptr) {
    throw ValidationError(std::string(to_string(c.preset)) + " needs a synthetic pool");
  }
  view.dropout = plan_def.dropout ? dropout : 0.0;
  if (plan_def.keep_surviving) view.model_modalities.push_back(view.surviving);
  if (plan_def.keep_target) view.model_modalities.push_back(c.target);
  std::sort(view.model_modalities.begin(), view.model_modalities.end());
  return view;
}

std::vector<MultimodalSample> view_epoch(const TrainingView& view, int epoch, std::uint64_t seed, int target_dim,
                                         std::map<std::string, std::string>* assignment) {
  auto imputed = impute_epoch(view.base, view.plan, view.imputation, epoch,
                              derive_seed(seed, 0x696d702d7374726dULL /* imp-strm */));
  if (assignment) *assignment = std::move(imputed.assignment);
  auto samples = std::move(imputed.samples);
  if (view.model_modalities.size() == 1) samples = strip_to(std::move(samples), view.model_modalities.front());
  if (view.dropout > 0.0) {
    samples = modality_dropout(std::move(samples), view.plan.target_modality, view.dropout,
                               derive_seed(seed, 0x64726f702d73ULL /* drop-s */, static_cast<std::uint64_t>(epoch)),
                               target_dim);
  }
  return samples;
}

ViewAudit audit_view(const std::vector<MultimodalSample>& samples, ModalityKind target, ModalityKind surviving,
                     const SyntheticPool* pool) {
  std::map<std::string, int> asset_class;
  if (pool) {
    for (const auto& [cls, assets] : pool->per_class) {
      for (const auto& a : assets) asset_class[a.asset_id] = a.class_index;
    }
  }
  ViewAudit a;
  for (const auto& s : samples) {
    ++a.samples;
    const auto t = s.payloads.find(target);
    const bool has_surviving = s.payloads.contains(surviving) &&
                               s.payloads.at(surviving).provenance == Provenance::real;
    if (s.payloads.contains(surviving)) {
      ++a.surviving_present;
    } else {
      ++a.surviving_absent;
    }
    if (t == s.payloads.end()) {
      ++a.target_absent;
      continue;
    }
    switch (t->second.provenance) {
      case Provenance::real:
        ++a.target_real;
        if (has_surviving) ++a.complete_real;
        break;
      case Provenance::synthetic: {
        ++a.target_synthetic;
        auto it = asset_class.find(t->second.asset_id);
        if (pool && (it == asset_class.end() || it->second != s.label)) ++a.label_mismatches;
        break;
      }
      case Provenance::zero:
        ++a.target_zero;
        break;
    }
  }
  return a;
}

std::string audit_to_json(const ViewAudit& a) {
  json j{{"samples", a.samples},
         {"complete_real", a.complete_real},
         {"target_real", a.target_real},
         {"target_synthetic", a.target_synthetic},
         {"target_zero", a.target_zero},
         {"target_absent", a.target_absent},
         {"surviving_present", a.surviving_present},
         {"surviving_absent", a.surviving_absent},
         {"label_mismatches", a.label_mismatches}};
  return j.dump();
}

// ---------------------------------------------------------------- metrics

double metric_value(const MetricReport& r, const std::string& metric) {
  if (metric == "top1") return r.top1;
  if (metric == "macro_f1") return r.macro_f1;
  if (metric.rfind("top", 0) == 0) {
    const int k = static_cast<int>(parse_u64(std::string_view(metric).substr(3), "metric"));
    auto it = r.topk.find(k);
    if (it != r.topk.end()) return it->second;
  }
  throw ValidationError("unknown metric '" + metric + "'");
}

Aggregate aggregate(const ExperimentResult& result, double q, const std::string& metric) {
  Aggregate a;
  std::vector<double> values;
  for (const auto& run : result.runs) {
    auto it = run.by_q.find(q);
    if (it == run.by_q.end()) throw ValidationError("no evaluation at q=" + num(q));
    values.push_back(metric_value(it->second, metric));
    a.seeds.push_back(run.seed);
  }
  if (values.empty()) return a;
  double sum = 0;
  for (double v : values) sum += v;
  a.mean = sum / static_cast<double>(values.size());
  double ss = 0;
  for (double v : values) ss += (v - a.mean) * (v - a.mean);
  a.std = std::sqrt(ss / static_cast<double>(values.size()));
  return a;
}

// ---------------------------------------------------------------- experiment

namespace {

struct Shared {
  const ExperimentConfig& config;
  const HarnessOptions& options;
  const PreparedData& data;
  const SyntheticPool* pool;
  std::string hash;
  fs::path run_dir;
  std::map<ModalityKind, std::shared_ptr<const BackboneEncoder>> encoders;
  std::shared_ptr<EmbeddingCache> cache;
  std::shared_ptr<PayloadStore> store;
};

std::vector<int> usable_ks(const std::vector<int>& ks, int num_classes) {
  std::set<int> out{1};
  for (int k : ks) {
    if (k <= num_classes) out.insert(k);
  }
  return {out.begin(), out.end()};
}

std::string q_tag(double q) { return "q" + num(q); }

void append_assignments(const fs::path& path, int epoch, const std::map<std::string, std::string>& assignment) {
  if (assignment.empty()) return;
  std::string rows;
  for (const auto& [sample, asset] : assignment) {
    rows += json{{"epoch", epoch}, {"sample_id", sample}, {"asset_id", asset}}.dump() + "\n";
  }
  std::ofstream out(path, std::ios::app | std::ios::binary);
  out << rows;
  if (!out) throw BackendError("cannot append to " + path.string());
}

FusionModel build_model(const Shared& sh, const std::vector<ModalityKind>& modalities) {
  const auto& c = sh.config;
  ModelConfig mc;
  mc.modalities = modalities;
  mc.num_classes = sh.data.manifest.num_classes;
  mc.target = c.target;
  mc.prompting = c.prompting;
  mc.prompt_len = c.prompt_len;
  mc.prompt_mode = c.prompt_mode;
  mc.missing_treatment = c.missing_treatment;
  mc.zero_space = c.zero_space;
  std::map<ModalityKind, std::shared_ptr<const BackboneEncoder>> encoders;
  for (auto mod : mc.modalities) encoders.emplace(mod, sh.encoders.at(mod));
  return FusionModel(mc, encoders, sh.cache, sh.store);
}

MetricReport evaluate_at(const Shared& sh, const FusionModel& model, const ModelParams& params, std::uint64_t seed,
                         double q, const fs::path& seed_dir) {
  const auto& m = sh.data.manifest;
  const auto target = sh.config.target;
  const int target_dim = m.dims.at(target);
  const auto test_plan = apply_missingness(m, Split::test, target, q, seed);
  write_file_atomic(seed_dir / ("mask_test_" + q_tag(q) + ".json"), serialize_mask_plan(test_plan));
  std::vector<Eigen::VectorXd> logits;
  std::vector<int> labels;
  for (const auto* s : m.split_records(Split::test)) {
    logits.push_back(predict(model, params, *s, &test_plan, target_dim).logits);
    labels.push_back(s->label);
  }
  auto report = compute_metrics(logits, labels, m.num_classes, usable_ks(sh.config.ks, m.num_classes));
  report.seed = seed;
  report.config_hash = sh.hash;
  return report;
}

json report_json(const MetricReport& report) {
  json r{{"top1", report.top1}, {"macro_f1", report.macro_f1}, {"per_class_accuracy", report.per_class_accuracy}};
  for (const auto& [k, v] : report.topk) r["top" + std::to_string(k)] = v;
  return r;
}

std::vector<ModalityKind> model_modalities_for(const ExperimentConfig& c, const DatasetManifest& m) {
  const auto plan = preset_plan(c.preset, c.dropout_rate);
  std::vector<ModalityKind> out;
  if (plan.keep_surviving) out.push_back(m.other_modality(c.target));
  if (plan.keep_target) out.push_back(c.target);
  std::sort(out.begin(), out.end());
  return out;
}

Shared make_shared_state(const ExperimentConfig& config, const HarnessOptions& options, const PreparedData& data,
                         const SyntheticPool* pool, const std::string& hash, const fs::path& run_dir) {
  Shared sh{config, options, data, pool, hash, run_dir, {}, {}, {}};
  sh.cache = std::make_shared<EmbeddingCache>();
  sh.store = std::make_shared<PayloadStore>();
  for (auto mod : data.manifest.modalities) {
    const int dim = data.manifest.dims.at(mod);
    if (config.encoder == "adapter") {
      sh.encoders.emplace(mod, std::make_shared<AdapterEncoder>(mod, dim));
    } else {
      sh.encoders.emplace(mod, make_toy_encoder(mod, dim, config.encoder_seed, config.prompting ? config.token_count : 0));
    }
  }
  return sh;
}

SeedRun run_seed(const Shared& sh, std::uint64_t seed) {
  const auto& c = sh.config;
  const auto& m = sh.data.manifest;
  const auto plan_def = preset_plan(c.preset, c.dropout_rate);
  const int target_dim = m.dims.at(c.target);
  const auto seed_dir = sh.run_dir / ("seed" + std::to_string(seed));
  fs::create_directories(seed_dir);
  SeedRun out;
  out.seed = seed;

  // (train p, dropout, q values evaluated by this model)
  struct Group {
    double p;
    double dropout;
    std::vector<double> qs;
    std::string tag;
  };
  std::vector<Group> groups;
  const double fixed_dropout = c.dropout_rate < 0 ? 0.0 : c.dropout_rate;
  if (plan_def.per_q_model) {
    for (double q : c.q) {
      const double p = plan_def.train_p_is_q ? q : (plan_def.train_p_is_zero ? 0.0 : c.p);
      const double dropout = plan_def.dropout ? (c.dropout_rate < 0 ? q : c.dropout_rate) : 0.0;
      groups.push_back({p, dropout, {q}, "_" + q_tag(q)});
    }
  } else {
    groups.push_back({plan_def.train_p_is_zero ? 0.0 : c.p, fixed_dropout, c.q, ""});
  }

  bool first = true;
  for (const auto& g : groups) {
    const auto view = make_training_view(c, sh.data, sh.pool, Split::train, g.p, g.dropout, seed);
    write_file_atomic(seed_dir / ("mask_train" + g.tag + ".json"), serialize_mask_plan(view.plan));

    const auto model = build_model(sh, view.model_modalities);

    TrainOptions topt;
    topt.seed = seed;
    // Validation goes through the training transform, dropout included.
    if (c.select_best_val) {
      auto val_view = make_training_view(c, sh.data, sh.pool, Split::val, g.p, g.dropout, seed);
      topt.val = view_epoch(val_view, 0, derive_seed(seed, 0x76616c /* val */), target_dim);
    }

    const auto assign_log = seed_dir / ("assignments" + g.tag + ".jsonl");
    if (sh.options.write_assignments) fs::remove(assign_log);
    EpochSource source = [&](int epoch) {
      std::map<std::string, std::string> assignment;
      auto samples = view_epoch(view, epoch, seed, target_dim, &assignment);
      if (sh.options.write_assignments) append_assignments(assign_log, epoch, assignment);
      return samples;
    };
    if (view.base.empty()) {
      throw ValidationError(std::string(to_string(c.preset)) + ": training view is empty at p=" + num(g.p));
    }
    if (first) {
      out.train_view = view_epoch(view, 0, seed, target_dim);
      out.audit = audit_view(out.train_view, c.target, view.surviving, sh.pool);
      write_file_atomic(seed_dir / "audit.json", audit_to_json(out.audit));
      first = false;
    }
    const auto state = train(model, source, c.optimizer, topt);
    const auto& params = state.eval_params();

    json metrics = json::object();
    for (double q : g.qs) {
      auto report = evaluate_at(sh, model, params, seed, q, seed_dir);
      metrics[q_tag(q)] = report_json(report);
      out.by_q[q] = std::move(report);
    }
    save_checkpoint(seed_dir / ("model" + g.tag + ".ckpt"), state, sh.hash, metrics.dump());
    log(sh.options, std::string(to_string(c.preset)) + " seed " + std::to_string(seed) + g.tag + " done");
  }
  return out;
}

std::string metrics_table(const ExperimentResult& r) {
  std::set<int> ks;
  for (const auto& run : r.runs) {
    for (const auto& [q, rep] : run.by_q) {
      for (const auto& [k, v] : rep.topk) ks.insert(k);
    }
  }
  std::string out = "seed,q,top1,macro_f1";
  for (int k : ks) out += ",top" + std::to_string(k);
  out += ",config_hash\n";
  for (const auto& run : r.runs) {
    for (const auto& [q, rep] : run.by_q) {
      out += std::to_string(run.seed) + "," + num(q) + "," + num(rep.top1) + "," + num(rep.macro_f1);
      for (int k : ks) out += "," + (rep.topk.contains(k) ? num(rep.topk.at(k)) : std::string());
      out += "," + r.hash + "\n";
    }
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const HarnessOptions& options) {
  validate_config(config);
  ExperimentResult result;
  result.config = config;
  result.hash = config_hash(config);
  result.run_dir = options.out / "runs" / result.hash;
  fs::create_directories(result.run_dir);

  const auto data = prepare_dataset(config, options);
  json snapshot = json::parse(config_to_json(config));
  snapshot["config_hash"] = result.hash;
  write_file_atomic(result.run_dir / "config.json", snapshot.dump(2) + "\n");

  const auto plan_def = preset_plan(config.preset, config.dropout_rate);
  std::optional<SyntheticPool> pool;
  if (plan_def.imputation == ImputationKind::gti) {
    pool = prepare_pool(config, data, options);
    result.pool_assets = pool->total();
    write_file_atomic(result.run_dir / "pool_ref.txt", fs::absolute(pool->manifest_path).string() + "\n");
  }

  const auto sh = make_shared_state(config, options, data, pool ? &*pool : nullptr, result.hash, result.run_dir);

  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t threads =
      config.threads > 0 ? static_cast<std::size_t>(config.threads) : std::min(config.seeds.size(), hw);
  result.runs.resize(config.seeds.size());
  for (std::size_t start = 0; start < config.seeds.size(); start += threads) {
    std::vector<std::future<SeedRun>> futures;
    const auto end = std::min(config.seeds.size(), start + threads);
    for (auto i = start; i < end; ++i) {
      futures.push_back(std::async(std::launch::async, [&sh, seed = config.seeds[i]] { return run_seed(sh, seed); }));
    }
    for (auto i = start; i < end; ++i) result.runs[i] = futures[i - start].get();
  }
  write_file_atomic(result.run_dir / "metrics.csv", metrics_table(result));
  return result;
}

ExperimentResult evaluate_run(const ExperimentConfig& config, const std::vector<double>& qs,
                              const HarnessOptions& options) {
  validate_config(config);
  if (qs.empty()) throw ValidationError("evaluation needs at least one q");
  for (double q : qs) {
    if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("q must be in [0, 1], got " + num(q));
  }
  ExperimentResult result;
  result.config = config;
  result.config.q = qs;
  result.hash = config_hash(config);
  result.run_dir = options.out / "runs" / result.hash;
  if (!fs::exists(result.run_dir / "config.json")) {
    throw ValidationError("no finished run for this config under " + result.run_dir.string() + "; train it first");
  }
  const auto data = prepare_dataset(config, options);
  const auto sh = make_shared_state(config, options, data, nullptr, result.hash, result.run_dir);
  const auto plan = preset_plan(config.preset, config.dropout_rate);
  const auto model = build_model(sh, model_modalities_for(config, data.manifest));
  for (auto seed : config.seeds) {
    SeedRun run;
    run.seed = seed;
    const auto seed_dir = result.run_dir / ("seed" + std::to_string(seed));
    for (double q : qs) {
      std::string tag;
      if (plan.per_q_model) {
        if (std::find(config.q.begin(), config.q.end(), q) == config.q.end()) {
          throw ValidationError(std::string(to_string(config.preset)) + " trains one model per q; q=" + num(q) +
                                " was not part of the run");
        }
        tag = "_" + q_tag(q);
      }
      std::string stored_hash;
      const auto state = load_checkpoint(seed_dir / ("model" + tag + ".ckpt"), model, &stored_hash);
      if (stored_hash != result.hash) throw ValidationError("checkpoint belongs to config " + stored_hash);
      run.by_q[q] = evaluate_at(sh, model, state.eval_params(), seed, q, seed_dir);
    }
    result.runs.push_back(std::move(run));
  }
  return result;
}

// ---------------------------------------------------------------- suite + sweep

const std::vector<BaselinePreset>& suite_presets() {
  static const std::vector<BaselinePreset> presets{
      BaselinePreset::audio_training, BaselinePreset::low_resource_visual, BaselinePreset::low_resource_multimodal,
      BaselinePreset::zero_filling,   BaselinePreset::gti_mm,              BaselinePreset::zs_visual,
      BaselinePreset::zs_multimodal,
  };
  return presets;
}

SuiteResult run_baseline_suite(const ExperimentConfig& base, const HarnessOptions& options,
                               const std::vector<BaselinePreset>& presets) {
  if (presets.empty()) throw ValidationError("suite needs at least one preset");
  SuiteResult suite;
  for (auto preset : presets) {
    auto config = with_preset(base, preset);
    auto result = run_experiment(config, options);
    const bool p_follows_q = preset_plan(preset, config.dropout_rate).train_p_is_q;
    for (double q : config.q) {
      suite.rows.push_back({preset, p_follows_q ? q : config.p, q, aggregate(result, q)});
    }
    suite.experiments.push_back(std::move(result));
  }
  return suite;
}

std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::p: return "p";
    case SweepAxis::q: return "q";
    case SweepAxis::per_class: return "per_class";
    case SweepAxis::diversity: return "diversity";
    case SweepAxis::performer_set: return "performer_set";
    case SweepAxis::prompt_strategy: return "prompt_strategy";
  }
  return "?";
}

SweepAxis parse_axis(std::string_view s) {
  for (auto a : {SweepAxis::p, SweepAxis::q, SweepAxis::per_class, SweepAxis::diversity, SweepAxis::performer_set,
                 SweepAxis::prompt_strategy}) {
    if (to_string(a) == s) return a;
  }
  throw ValidationError("unknown sweep axis '" + std::string(s) +
                        "' (known: p, q, per_class, diversity, performer_set, prompt_strategy)");
}

ExperimentConfig apply_axis(const ExperimentConfig& base, SweepAxis axis, const std::string& value) {
  auto c = base;
  try {
    switch (axis) {
      case SweepAxis::p:
        c.p = parse_double(value, "p");
        break;
      case SweepAxis::q:
        c.q = {parse_double(value, "q")};
        break;
      case SweepAxis::per_class:
        c.pool.per_class = static_cast<int>(parse_u64(value, "per_class"));
        break;
      case SweepAxis::diversity:
        c.pool.ugc = false;
        c.pool.multidomain = false;
        if (value != "base") {
          for (const auto& part : split(value, '+')) {
            if (part == "ugc") {
              c.pool.ugc = true;
            } else if (part == "multidomain") {
              c.pool.multidomain = true;
            } else {
              throw ValidationError("diversity value '" + value + "': expected base or a '+'-joined subset of "
                                    "ugc, multidomain");
            }
          }
        }
        break;
      case SweepAxis::performer_set:
        c.pool.performer_set = value;
        break;
      case SweepAxis::prompt_strategy:
        if (value == "label") {
          c.pool.llm = false;
        } else if (value == "llm" || value == "llm_assisted") {
          c.pool.llm = true;
          c.pool.multidomain = false;
        } else {
          throw ValidationError("prompt_strategy value '" + value + "': expected label or llm");
        }
        break;
    }
  } catch (const ParseError& e) {
    throw ValidationError(e.what());
  }
  return c;
}

SweepResult sweep(const ExperimentConfig& base, SweepAxis axis, const std::vector<std::string>& values,
                  const HarnessOptions& options, const std::vector<BaselinePreset>& presets_in) {
  if (values.empty()) throw ValidationError("sweep needs at least one value");
  const auto presets = presets_in.empty() ? std::vector<BaselinePreset>{base.preset} : presets_in;
  for (const auto& v : values) {
    if (v.find_first_of(",\"\n") != std::string::npos) throw ValidationError("sweep value '" + v + "' is not plain");
  }
  const bool pool_axis = axis == SweepAxis::per_class || axis == SweepAxis::diversity ||
                         axis == SweepAxis::performer_set || axis == SweepAxis::prompt_strategy;
  // Validate every point before running any of them.
  std::vector<std::vector<ExperimentConfig>> configs;
  for (const auto& v : values) {
    auto& row = configs.emplace_back();
    for (auto preset : presets) {
      auto c = apply_axis(axis == SweepAxis::p ? [&] {
        auto b = base;
        b.preset = preset;
        return b;
      }() : with_preset(base, preset), axis, v);
      if (pool_axis && preset_plan(preset, c.dropout_rate).imputation != ImputationKind::gti) {
        throw ValidationError("axis " + std::string(to_string(axis)) + " varies the synthetic pool, which preset " +
                              std::string(to_string(preset)) + " does not use");
      }
      validate_config(c);
      row.push_back(std::move(c));
    }
  }

  SweepResult out;
  out.axis = axis;
  out.values = values;
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (const auto& c : configs[i]) {
      auto result = run_experiment(c, options);
      const bool p_follows_q = preset_plan(c.preset, c.dropout_rate).train_p_is_q;
      for (const auto& run : result.runs) {
        for (const auto& [q, report] : run.by_q) {
          std::vector<std::string> metrics{"top1", "macro_f1"};
          for (const auto& [k, v] : report.topk) {
            if (k != 1) metrics.push_back("top" + std::to_string(k));
          }
          for (const auto& metric : metrics) {
            out.records.push_back({std::string(to_string(axis)), values[i], std::string(to_string(c.preset)),
                                   p_follows_q ? q : c.p, q, run.seed, metric, metric_value(report, metric),
                                   result.hash});
          }
        }
      }
      out.experiments.push_back(std::move(result));
    }
  }
  return out;
}

// ---------------------------------------------------------------- tables

std::string format_suite_table(const std::vector<SuiteRow>& rows) {
  std::string out = "preset,p,q,mean,std,seeds\n";
  for (const auto& r : rows) {
    std::string seeds;
    for (auto s : r.score.seeds) seeds += (seeds.empty() ? "" : ";") + std::to_string(s);
    out += std::string(to_string(r.preset)) + "," + num(r.p) + "," + num(r.q) + "," + num(r.score.mean) + "," +
           num(r.score.std) + "," + seeds + "\n";
  }
  return out;
}

namespace {

std::vector<std::vector<std::string>> parse_csv(std::string_view csv, const std::string& header) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw ParseError("table header must be '" + header + "', got '" + line + "'");
  }
  const auto width = split(header, ',').size();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != width) throw ParseError("table row has " + std::to_string(cells.size()) + " cells: " + line);
    rows.push_back(std::move(cells));
  }
  return rows;
}

constexpr const char* kSweepHeader = "axis,value,preset,p,q,seed,metric,score,config_hash";

}  // namespace

std::vector<SuiteRow> parse_suite_table(std::string_view csv) {
  std::vector<SuiteRow> rows;
  for (const auto& cells : parse_csv(csv, "preset,p,q,mean,std,seeds")) {
    SuiteRow r{parse_preset(cells[0]), parse_double(cells[1], "p"), parse_double(cells[2], "q"), {}};
    r.score.mean = parse_double(cells[3], "mean");
    r.score.std = parse_double(cells[4], "std");
    if (!cells[5].empty()) {
      for (const auto& s : split(cells[5], ';')) r.score.seeds.push_back(parse_u64(s, "seed"));
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string format_sweep_table(const std::vector<SweepRecord>& records) {
  std::string out = std::string(kSweepHeader) + "\n";
  for (const auto& r : records) {
    out += r.axis + "," + r.value + "," + r.preset + "," + num(r.p) + "," + num(r.q) + "," + std::to_string(r.seed) +
           "," + r.metric + "," + num(r.score) + "," + r.config_hash + "\n";
  }
  return out;
}

std::vector<SweepRecord> parse_sweep_table(std::string_view csv) {
  std::vector<SweepRecord> records;
  for (const auto& c : parse_csv(csv, kSweepHeader)) {
    records.push_back({c[0], c[1], c[2], parse_double(c[3], "p"), parse_double(c[4], "q"), parse_u64(c[5], "seed"),
                       c[6], parse_double(c[7], "score"), c[8]});
  }
  return records;
}

// ---------------------------------------------------------------- emit

namespace {

void ensure_writable(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw BackendError("cannot create output directory " + dir.string());
  const auto probe = dir / ".write-probe";
  std::ofstream f(probe);
  if (!f) throw BackendError("output directory " + dir.string() + " is not writable");
  f.close();
  fs::remove(probe, ec);
}

int preset_style(const std::string& preset) {
  for (std::size_t i = 0; i < kPresetNames.size(); ++i) {
    if (kPresetNames[i].second == preset) return static_cast<int>(i);
  }
  return 0;
}

std::vector<fs::path> plot_rows_by_q(const std::vector<SuiteRow>& rows, const fs::path& dir,
                                     const std::string& title) {
  PlotSpec spec;
  spec.title = title;
  spec.x_label = "test missing ratio q";
  spec.y_label = "top-1 accuracy";
  std::map<std::string, PlotSeries> series;
  for (const auto& r : rows) {
    const std::string name(to_string(r.preset));
    auto& s = series[name];
    s.label = name;
    s.style = preset_style(name);
    s.xs.push_back(r.q);
    s.ys.push_back(r.score.mean);
    s.errors.push_back(r.score.std);
  }
  for (auto& [name, s] : series) spec.series.push_back(std::move(s));
  return write_plot(spec, dir / "top1");
}

}  // namespace

std::vector<fs::path> emit_results(const SuiteResult& suite, const fs::path& dir) {
  if (suite.rows.empty()) throw ValidationError("no results to emit");
  ensure_writable(dir);
  std::vector<fs::path> written{dir / "results.csv"};
  write_file_atomic(written[0], format_suite_table(suite.rows));
  for (auto& p : plot_rows_by_q(suite.rows, dir, "baseline comparison")) written.push_back(std::move(p));
  return written;
}

std::vector<fs::path> emit_results(const ExperimentResult& result, const fs::path& dir) {
  if (result.runs.empty()) throw ValidationError("no results to emit");
  SuiteResult suite;
  const bool p_follows_q = preset_plan(result.config.preset, result.config.dropout_rate).train_p_is_q;
  for (double q : result.config.q) {
    suite.rows.push_back({result.config.preset, p_follows_q ? q : result.config.p, q, aggregate(result, q)});
  }
  return emit_results(suite, dir);
}

std::vector<fs::path> emit_results(const SweepResult& sw, const fs::path& dir) {
  if (sw.records.empty()) throw ValidationError("no results to emit");
  ensure_writable(dir);
  std::vector<fs::path> written{dir / "results.csv"};
  write_file_atomic(written[0], format_sweep_table(sw.records));

  bool numeric = true;
  std::map<std::string, double> x_of;
  for (std::size_t i = 0; i < sw.values.size(); ++i) {
    double v = 0;
    const auto& s = sw.values[i];
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) numeric = false;
    x_of[s] = v;
  }
  if (!numeric) {
    for (std::size_t i = 0; i < sw.values.size(); ++i) x_of[sw.values[i]] = static_cast<double>(i);
  }

  std::set<std::string> metrics;
  std::set<double> qs;
  for (const auto& r : sw.records) {
    metrics.insert(r.metric);
    qs.insert(r.q);
  }
  for (const auto& metric : metrics) {
    // (preset, q) -> value -> scores across seeds
    std::map<std::pair<std::string, double>, std::map<std::string, std::vector<double>>> grouped;
    for (const auto& r : sw.records) {
      if (r.metric == metric) grouped[{r.preset, r.q}][r.value].push_back(r.score);
    }
    PlotSpec spec;
    spec.title = metric + " vs " + std::string(to_string(sw.axis));
    spec.x_label = std::string(to_string(sw.axis));
    spec.y_label = metric;
    if (!numeric) spec.x_categories = sw.values;
    for (const auto& [key, by_value] : grouped) {
      PlotSeries s;
      s.label = key.first + (qs.size() > 1 && sw.axis != SweepAxis::q ? " q=" + num(key.second) : "");
      s.style = preset_style(key.first);
      for (const auto& v : sw.values) {
        auto it = by_value.find(v);
        if (it == by_value.end()) continue;
        double sum = 0;
        for (double x : it->second) sum += x;
        const double mean = sum / static_cast<double>(it->second.size());
        double ss = 0;
        for (double x : it->second) ss += (x - mean) * (x - mean);
        s.xs.push_back(x_of[v]);
        s.ys.push_back(mean);
        s.errors.push_back(std::sqrt(ss / static_cast<double>(it->second.size())));
      }
      spec.series.push_back(std::move(s));
    }
    for (auto& p : write_plot(spec, dir / metric)) written.push_back(std::move(p));
  }
  return written;
}

}  // namespace mmimpute
