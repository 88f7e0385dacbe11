// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mmimpute/data.hpp"
#include "mmimpute/imputation.hpp"
#include "mmimpute/metrics.hpp"
#include "mmimpute/model.hpp"
#include "mmimpute/promptgen.hpp"

namespace mmimpute {

enum class BaselinePreset {
  audio_training,
  low_resource_visual,
  low_resource_multimodal,
  zero_filling,
  gti_mm,
  zs_visual,
  zs_multimodal,
  mm_dropout,
  gti_mm_dropout,
  mm_zero_imputation,
};

std::string_view to_string(BaselinePreset p);
BaselinePreset parse_preset(std::string_view s);
const std::vector<BaselinePreset>& all_presets();

// What a preset trains on. "audio" in the preset names stands for the
// surviving modality and "visual" for the missing one, so the same presets
// run with the roles swapped.
struct PresetPlan {
  ViewStrategy view = ViewStrategy::keep_all;
  ImputationKind imputation = ImputationKind::none;
  bool keep_target = true;      // model sees the missing-side modality
  bool keep_surviving = true;   // model sees the surviving modality
  bool dropout = false;         // target dropout during training
  bool train_p_is_q = false;    // training ratio follows each evaluated q
  bool train_p_is_zero = false; // trained on complete data regardless of p
  bool requires_full_missing = false;  // p must be 1
  bool per_q_model = false;     // a separate model is trained for every q
};

PresetPlan preset_plan(BaselinePreset preset, double dropout_rate);

struct PoolConfig {
  int per_class = 100;
  bool ugc = false;          // guidance scale uniform in [1, 5]; fixed 5 otherwise
  bool multidomain = false;
  bool llm = false;          // LLM-assisted prompts
  std::string performer_set = "default";  // default | restricted
  std::string assignment = "balanced";    // balanced | uniform
  double stub_noise = 0.6;
  std::uint64_t seed = 0;
  std::string llm_url;       // empty: offline canned definitions
  std::string backend_url;   // empty: stub backend
  std::string dir;           // empty: derived under the output root
};

struct ExperimentConfig {
  std::string dataset = "toy-gauss";  // "toy-gauss" or a manifest path
  ToyOptions toy;
  std::string features;  // class feature table for the stub backend (external datasets)
  ModalityKind target = ModalityKind::visual;
  double p = 0.95;
  std::vector<double> q{0.0};
  BaselinePreset preset = BaselinePreset::gti_mm;
  ImputationSchedule schedule = ImputationSchedule::per_epoch;
  PoolConfig pool;
  double dropout_rate = -1.0;  // < 0: equal to the evaluated q
  bool prompting = false;
  int prompt_len = 5;
  PromptTableMode prompt_mode = PromptTableMode::patterned;
  int token_count = 4;  // encoder tokens when prompting
  MissingTreatment missing_treatment = MissingTreatment::zero_fill;
  ZeroSpace zero_space = ZeroSpace::payload;
  OptimizerConfig optimizer;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  bool mask_reuse = false;  // one train mask for all seeds instead of one per seed
  std::uint64_t mask_seed = 0;
  std::uint64_t encoder_seed = 0;
  std::string encoder = "toy";  // toy | adapter (payloads are precomputed embeddings)
  bool select_best_val = true;
  std::vector<int> ks{1, 3};
  int threads = 0;  // 0: one per seed, capped by hardware
};

std::string config_to_json(const ExperimentConfig& config);
// Missing keys keep their defaults; unknown keys are a validation error.
ExperimentConfig config_from_json(std::string_view json_text, const ExperimentConfig& base = {});
ExperimentConfig load_config(const std::filesystem::path& path, const ExperimentConfig& base = {});
std::string config_hash(const ExperimentConfig& config);
void validate_config(const ExperimentConfig& config);

// Sample counts of one training view. "target" is the missing-side modality.
struct ViewAudit {
  long samples = 0;
  long complete_real = 0;
  long target_real = 0;
  long target_synthetic = 0;
  long target_zero = 0;
  long target_absent = 0;
  long surviving_present = 0;
  long surviving_absent = 0;
  long label_mismatches = 0;  // synthetic assets whose class differs from the sample label
  bool operator==(const ViewAudit&) const = default;
};

std::string audit_to_json(const ViewAudit& audit);

struct SeedRun {
  std::uint64_t seed = 0;
  std::map<double, MetricReport> by_q;
  ViewAudit audit;  // epoch-0 training view (of the first q for per-q presets)
  std::vector<MultimodalSample> train_view;  // that view itself
};

struct ExperimentResult {
  ExperimentConfig config;
  std::string hash;
  std::filesystem::path run_dir;
  std::vector<SeedRun> runs;
  std::size_t pool_assets = 0;
};

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;  // population
  std::vector<std::uint64_t> seeds;
};

// "top1", "macro_f1" or "top<k>".
double metric_value(const MetricReport& report, const std::string& metric);
Aggregate aggregate(const ExperimentResult& result, double q, const std::string& metric = "top1");

struct HarnessOptions {
  std::filesystem::path out = "runs";
  bool write_assignments = true;
  bool quiet = true;
};

// Everything needed to train one preset on one dataset; exposed for audits.
struct PreparedData {
  DatasetManifest manifest;
  std::filesystem::path manifest_path;
  std::optional<ClassFeatureTable> features;
  std::string dataset_id;
};

PreparedData prepare_dataset(const ExperimentConfig& config, const HarnessOptions& options);

// Builds or reuses the synthetic pool the config asks for.
SyntheticPool prepare_pool(const ExperimentConfig& config, const PreparedData& data, const HarnessOptions& options);

// The epoch-`epoch` training samples of a preset at train ratio `p`.
struct TrainingView {
  MaskPlan plan;
  std::vector<MultimodalSample> base;
  ImputationStrategy imputation;
  double dropout = 0.0;
  std::vector<ModalityKind> model_modalities;
  ModalityKind surviving = ModalityKind::audio;
};

TrainingView make_training_view(const ExperimentConfig& config, const PreparedData& data, const SyntheticPool* pool,
                                Split split, double p, double dropout, std::uint64_t seed);
// Imputation, modality stripping and dropout for one epoch. Imputation and
// dropout draw from streams of their own, so they never shift the shuffle.
std::vector<MultimodalSample> view_epoch(const TrainingView& view, int epoch, std::uint64_t seed, int target_dim,
                                         std::map<std::string, std::string>* assignment = nullptr);
ViewAudit audit_view(const std::vector<MultimodalSample>& samples, ModalityKind target, ModalityKind surviving,
                     const SyntheticPool* pool = nullptr);

ExperimentResult run_experiment(const ExperimentConfig& config, const HarnessOptions& options = {});

// Re-evaluates the checkpoints of a finished run at the given test ratios.
// Presets that train one model per q only accept q values they were run with.
ExperimentResult evaluate_run(const ExperimentConfig& config, const std::vector<double>& qs,
                              const HarnessOptions& options = {});

struct SuiteRow {
  BaselinePreset preset;
  double p = 0.0;
  double q = 0.0;
  Aggregate score;
};

struct SuiteResult {
  std::vector<ExperimentResult> experiments;
  std::vector<SuiteRow> rows;
};

// `base` switched to `preset`, with p forced where the preset fixes it
// (1 for the zero-shot presets, 0 for mm_dropout).
ExperimentConfig with_preset(const ExperimentConfig& base, BaselinePreset preset);

// The five comparison presets and both zero-shot presets (the latter at p = 1).
const std::vector<BaselinePreset>& suite_presets();
SuiteResult run_baseline_suite(const ExperimentConfig& base, const HarnessOptions& options = {},
                               const std::vector<BaselinePreset>& presets = suite_presets());

enum class SweepAxis { p, q, per_class, diversity, performer_set, prompt_strategy };
std::string_view to_string(SweepAxis a);
SweepAxis parse_axis(std::string_view s);

// Applies one swept value to a config. diversity values are "base" or a
// '+'-joined subset of {ugc, multidomain}; prompt_strategy is label or llm.
ExperimentConfig apply_axis(const ExperimentConfig& base, SweepAxis axis, const std::string& value);

struct SweepRecord {
  std::string axis;
  std::string value;
  std::string preset;
  double p = 0.0;
  double q = 0.0;
  std::uint64_t seed = 0;
  std::string metric;
  double score = 0.0;
  std::string config_hash;
  bool operator==(const SweepRecord&) const = default;
};

struct SweepResult {
  SweepAxis axis;
  std::vector<std::string> values;
  std::vector<ExperimentResult> experiments;
  std::vector<SweepRecord> records;
};

SweepResult sweep(const ExperimentConfig& base, SweepAxis axis, const std::vector<std::string>& values,
                  const HarnessOptions& options = {}, const std::vector<BaselinePreset>& presets = {});

// Comparison table, columns preset,p,q,mean,std,seeds (seeds ';'-joined).
std::string format_suite_table(const std::vector<SuiteRow>& rows);
std::vector<SuiteRow> parse_suite_table(std::string_view csv);
// Long-form sweep table, one row per (value, preset, q, seed, metric).
std::string format_sweep_table(const std::vector<SweepRecord>& records);
std::vector<SweepRecord> parse_sweep_table(std::string_view csv);

// Writes <dir>/results.csv plus one .svg and .png plot per metric. For a
// suite the x axis is q; for a sweep it is the swept value. Returns the
// written paths.
std::vector<std::filesystem::path> emit_results(const SuiteResult& suite, const std::filesystem::path& dir);
std::vector<std::filesystem::path> emit_results(const SweepResult& sweep, const std::filesystem::path& dir);
std::vector<std::filesystem::path> emit_results(const ExperimentResult& result, const std::filesystem::path& dir);

}  // namespace mmimpute
