// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <unordered_map>
#include <string>
#include <string_view>
#include <vector>

#include "mmimpute/payload.hpp"

namespace mmimpute {

enum class ModalityKind { audio, visual, text };
enum class Provenance { real, synthetic, zero };
enum class Split { train, val, test };

std::string_view to_string(ModalityKind m);
std::string_view to_string(Provenance p);
std::string_view to_string(Split s);
ModalityKind parse_modality(std::string_view s);
Provenance parse_provenance(std::string_view s);
Split parse_split(std::string_view s);

// One modality's payload for a sample. File-backed payloads carry a path;
// imputed zero payloads are held inline.
struct PayloadSlot {
  std::filesystem::path path;
  Provenance provenance = Provenance::real;
  std::shared_ptr<const Vector> inline_data;
  std::string asset_id;  // set for synthetic payloads

  bool operator==(const PayloadSlot& other) const;
};

struct MultimodalSample {
  std::string id;
  int label = 0;
  Split split = Split::train;
  std::map<ModalityKind, PayloadSlot> payloads;

  bool has(ModalityKind m) const { return payloads.contains(m); }
  // Least-real provenance over the present slots (zero > synthetic > real).
  Provenance provenance() const;
  bool operator==(const MultimodalSample& other) const = default;
};

struct DatasetManifest {
  std::string name;
  int num_classes = 0;
  std::vector<std::string> class_names;
  std::array<ModalityKind, 2> modalities{ModalityKind::audio, ModalityKind::visual};
  std::map<ModalityKind, int> dims;
  std::vector<MultimodalSample> records;

  bool has_modality(ModalityKind m) const;
  ModalityKind other_modality(ModalityKind m) const;
  std::vector<const MultimodalSample*> split_records(Split s) const;
  std::vector<MultimodalSample> split_samples(Split s) const;
  bool operator==(const DatasetManifest& other) const = default;
};

enum class MissingPayloadPolicy { warn, error };

struct LoadOptions {
  MissingPayloadPolicy missing_payload = MissingPayloadPolicy::warn;
  bool check_payloads = true;  // open and parse every referenced payload file
};

struct ManifestLoad {
  DatasetManifest manifest;
  std::vector<std::string> warnings;
};

// Loads file-backed payloads once and shares them; inline payloads pass
// through. Safe for concurrent readers.
class PayloadStore {
 public:
  std::shared_ptr<const Vector> get(const PayloadSlot& slot) const;
  std::size_t cached() const;

 private:
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<std::string, std::shared_ptr<const Vector>> cache_;
};

// Line-delimited JSON. Line 1 is the header
//   {"name", "num_classes", "class_names", "modalities", "dims"}
// and each further line one record
//   {"id", "label", "split", "payload": {"audio": path, "visual": path, "text": path}}.
// Payload paths are relative to the manifest's directory.
ManifestLoad load_manifest_checked(const std::filesystem::path& path, const LoadOptions& options = {});
DatasetManifest load_manifest(const std::filesystem::path& path, const LoadOptions& options = {});
std::string serialize_manifest(const DatasetManifest& manifest, const std::filesystem::path& base_dir);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
void validate_manifest(const DatasetManifest& manifest);

struct MaskPlan {
  ModalityKind target_modality = ModalityKind::visual;
  double ratio = 0.0;
  std::uint64_t seed = 0;
  Split split = Split::train;
  std::set<std::string> masked_ids;

  bool masks(const std::string& id) const { return masked_ids.contains(id); }
};

// round-half-up(ratio * n).
std::size_t masked_count(double ratio, std::size_t n);

MaskPlan apply_missingness(const DatasetManifest& manifest, Split split, ModalityKind modality, double ratio,
                           std::uint64_t seed);

std::string serialize_mask_plan(const MaskPlan& plan);
MaskPlan parse_mask_plan(std::string_view json_text);

enum class ViewStrategy { keep_all, complete_only, modality_only };

// The plan's split with masked payloads removed.
std::vector<MultimodalSample> masked_split(const DatasetManifest& manifest, const MaskPlan& plan);

// keep_all: every sample, masked payloads absent.
// complete_only: only unmasked samples (throws if none remain).
// modality_only: every sample, stripped to `kept` (default: the non-target modality).
std::vector<MultimodalSample> training_view(const DatasetManifest& manifest, const MaskPlan& plan,
                                            ViewStrategy strategy,
                                            std::optional<ModalityKind> kept = std::nullopt);

std::vector<MultimodalSample> strip_to(std::vector<MultimodalSample> samples, ModalityKind kept);

struct ToyOptions {
  int num_classes = 4;
  int per_class = 200;
  int dim = 16;
  double noise = 0.6;
  std::uint64_t seed = 1;
  std::array<ModalityKind, 2> modalities{ModalityKind::audio, ModalityKind::visual};
  std::string name = "toy-gauss";
};

// Per-class modality means of a toy dataset; also the stub backends' feature table.
struct ClassFeatureTable {
  std::map<ModalityKind, std::vector<Vector>> means;

  const Vector& mean(ModalityKind m, int class_index) const;
};

void save_class_features(const ClassFeatureTable& table, const std::filesystem::path& path);
ClassFeatureTable load_class_features(const std::filesystem::path& path);

struct ToyDataset {
  DatasetManifest manifest;
  ClassFeatureTable features;
  std::filesystem::path manifest_path;
  std::filesystem::path features_path;
};

// Writes <out_dir>/manifest.jsonl, <out_dir>/class_means.json and one payload
// file per sample and modality under <out_dir>/payloads/<modality>/.
ToyDataset make_toy_dataset(const ToyOptions& options, const std::filesystem::path& out_dir);

}  // namespace mmimpute
