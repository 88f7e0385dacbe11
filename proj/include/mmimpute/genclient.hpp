// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mmimpute/data.hpp"
#include "mmimpute/promptgen.hpp"

namespace mmimpute {

enum class BackendKind { text_to_image, text_to_audio, text_to_text };

std::string_view to_string(BackendKind k);
BackendKind backend_kind_for(ModalityKind m);

struct GeneratedPayload {
  Vector vector;           // embedded payload, may be empty when `image_png` is set
  std::string image_png;   // raw PNG bytes from image backends
  std::string request;     // verbatim request for live backends
};

class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual BackendKind kind() const = 0;
  virtual std::string name() const = 0;
  // Must be safe to call from several threads at once.
  virtual GeneratedPayload generate(const PromptSpec& spec) = 0;
};

// Class mean + sigma * N(0, I), with sigma = stub_noise * guidance_scale / 5 and
// the noise stream seeded by the asset id of (spec, backend_name).
Vector stub_generate(const PromptSpec& spec, const ClassFeatureTable& table, ModalityKind modality,
                     double stub_noise, std::string_view backend_name);

// Deterministic stand-in for a text-to-image / text-to-audio model.
class StubBackend : public GenerationBackend {
 public:
  StubBackend(ModalityKind modality, ClassFeatureTable table, double stub_noise);
  BackendKind kind() const override { return backend_kind_for(modality_); }
  std::string name() const override;
  GeneratedPayload generate(const PromptSpec& spec) override;

 private:
  ModalityKind modality_;
  ClassFeatureTable table_;
  double stub_noise_;
};

// POSTs {"prompt", "guidance_scale", "seed", "class_index", "performer", "domain"}
// to `url`. A response with Content-Type image/png is kept as an image; any
// other 200 response must be a payload vector. Bearer token from
// MMIMPUTE_GEN_TOKEN when set.
class HttpGenerationBackend : public GenerationBackend {
 public:
  HttpGenerationBackend(std::string url, BackendKind kind);
  BackendKind kind() const override { return kind_; }
  std::string name() const override { return "http:" + url_; }
  GeneratedPayload generate(const PromptSpec& spec) override;

 private:
  std::string url_;
  BackendKind kind_;
};

// Converts stored images into payload vectors at pool-build time.
class ImageEmbedder {
 public:
  virtual ~ImageEmbedder() = default;
  virtual std::string name() const = 0;
  virtual Vector embed_png(std::string_view png_bytes) const = 0;
};

// Grayscale image average-pooled onto a side x side grid, centred to [-0.5, 0.5].
class DownsampleImageEmbedder : public ImageEmbedder {
 public:
  explicit DownsampleImageEmbedder(int side) : side_(side) {}
  std::string name() const override { return "downsample" + std::to_string(side_); }
  Vector embed_png(std::string_view png_bytes) const override;

 private:
  int side_;
};

struct SyntheticAsset {
  std::string asset_id;
  int class_index = 0;
  std::filesystem::path payload_path;
  std::filesystem::path image_path;
  PromptSpec spec;
  std::string backend;
  std::string created_at;
  std::string request;
};

struct SyntheticPool {
  ModalityKind modality = ModalityKind::visual;
  std::map<int, std::vector<SyntheticAsset>> per_class;
  std::filesystem::path manifest_path;

  std::size_t total() const;
  const std::vector<SyntheticAsset>& assets_for(int class_index) const;
};

// Content hash of the spec's canonical form and the backend name.
std::string asset_id_for(const PromptSpec& spec, std::string_view backend_name);

std::string spec_to_json(const PromptSpec& spec);

// Appends one manifest row per call; a row is written with a single write
// under a lock, so concurrent appenders never interleave.
class PoolManifestWriter {
 public:
  explicit PoolManifestWriter(std::filesystem::path manifest_path);
  void append(const SyntheticAsset& asset);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
};

std::string asset_row(const SyntheticAsset& asset, const std::filesystem::path& pool_dir);
SyntheticAsset parse_asset_row(std::string_view line, const std::filesystem::path& pool_dir);

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds base_delay{2000};
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to std::this_thread::sleep_for
};

struct GenerateContext {
  std::filesystem::path pool_dir;
  ModalityKind modality = ModalityKind::visual;
  int expected_dim = 0;  // 0 = accept any
  RetryPolicy retry;
  const ImageEmbedder* embedder = nullptr;
  PoolManifestWriter* writer = nullptr;
  std::atomic<long>* backend_calls = nullptr;
};

// Generates one asset, writes its payload under <pool_dir>/assets/ and appends
// the manifest row. Backend exceptions are retried with exponential backoff.
SyntheticAsset generate(GenerationBackend& backend, const PromptSpec& spec, const GenerateContext& context);

struct PoolBuildOptions {
  PromptBatchOptions prompts;
  const LlmDefinitions* llm_definitions = nullptr;
  std::filesystem::path pool_dir;
  ModalityKind modality = ModalityKind::visual;
  int expected_dim = 0;
  int concurrency = 4;
  RetryPolicy retry;
  const ImageEmbedder* embedder = nullptr;
  std::function<bool()> should_stop;  // checked before each new asset
};

struct PoolBuildResult {
  SyntheticPool pool;
  long backend_calls = 0;
  long new_assets = 0;
  bool interrupted = false;
  std::map<int, std::vector<std::string>> failures;
};

// Builds (or resumes) a pool of exactly per_class assets per class. Assets
// already present in <pool_dir>/pool.jsonl are reused by id. Throws
// BackendError with a per-class report if any class ends with zero assets.
PoolBuildResult build_pool(const std::vector<std::string>& class_names, GenerationBackend& backend,
                           const PoolBuildOptions& options);

SyntheticPool load_pool(const std::filesystem::path& manifest_path, ModalityKind modality);

}  // namespace mmimpute
