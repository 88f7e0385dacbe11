// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
#include "mmimpute/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "mmimpute/error.hpp"
#include "mmimpute/rng.hpp"

namespace mmimpute {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(ModalityKind m) {
  switch (m) {
    case ModalityKind::audio:
      return "audio";
    case ModalityKind::visual:
      return "visual";
    case ModalityKind::text:
      return "text";
  }
  return "?";
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::real:
      return "real";
    case Provenance::synthetic:
      return "synthetic";
    case Provenance::zero:
      return "zero";
  }
  return "?";
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train:
      return "train";
    case Split::val:
      return "val";
    case Split::test:
      return "test";
  }
  return "?";
}

ModalityKind parse_modality(std::string_view s) {
  if (s == "audio") return ModalityKind::audio;
  if (s == "visual") return ModalityKind::visual;
  if (s == "text") return ModalityKind::text;
  throw ParseError("unknown modality '" + std::string(s) + "'");
}

Provenance parse_provenance(std::string_view s) {
  if (s == "real") return Provenance::real;
  if (s == "synthetic") return Provenance::synthetic;
  if (s == "zero") return Provenance::zero;
  throw ParseError("unknown provenance '" + std::string(s) + "'");
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw ParseError("unknown split '" + std::string(s) + "'");
}

bool PayloadSlot::operator==(const PayloadSlot& other) const {
  if (path != other.path || provenance != other.provenance || asset_id != other.asset_id) return false;
  if (static_cast<bool>(inline_data) != static_cast<bool>(other.inline_data)) return false;
  return !inline_data || *inline_data == *other.inline_data;
}

Provenance MultimodalSample::provenance() const {
  Provenance worst = Provenance::real;
  for (const auto& [m, slot] : payloads) {
    if (slot.provenance == Provenance::zero) return Provenance::zero;
    if (slot.provenance == Provenance::synthetic) worst = Provenance::synthetic;
  }
  return worst;
}

bool DatasetManifest::has_modality(ModalityKind m) const {
  return modalities[0] == m || modalities[1] == m;
}

ModalityKind DatasetManifest::other_modality(ModalityKind m) const {
  if (modalities[0] == m) return modalities[1];
  if (modalities[1] == m) return modalities[0];
  throw ValidationError("modality " + std::string(to_string(m)) + " not in dataset " + name);
}

std::vector<const MultimodalSample*> DatasetManifest::split_records(Split s) const {
  std::vector<const MultimodalSample*> out;
  for (const auto& r : records) {
    if (r.split == s) out.push_back(&r);
  }
  return out;
}

std::vector<MultimodalSample> DatasetManifest::split_samples(Split s) const {
  std::vector<MultimodalSample> out;
  for (const auto& r : records) {
    if (r.split == s) out.push_back(r);
  }
  return out;
}

std::shared_ptr<const Vector> PayloadStore::get(const PayloadSlot& slot) const {
  if (slot.inline_data) return slot.inline_data;
  const auto key = slot.path.string();
  {
    std::shared_lock lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  auto loaded = std::make_shared<const Vector>(read_payload(slot.path));
  std::unique_lock lock(mutex_);
  return cache_.try_emplace(key, std::move(loaded)).first->second;
}

std::size_t PayloadStore::cached() const {
  std::shared_lock lock(mutex_);
  return cache_.size();
}

void validate_manifest(const DatasetManifest& manifest) {
  if (manifest.num_classes <= 0) throw ValidationError("manifest: num_classes must be positive");
  if (static_cast<int>(manifest.class_names.size()) != manifest.num_classes) {
    throw ValidationError("manifest: class_names has " + std::to_string(manifest.class_names.size()) +
                          " entries, num_classes is " + std::to_string(manifest.num_classes));
  }
  if (manifest.modalities[0] == manifest.modalities[1]) {
    throw ValidationError("manifest: the two modalities must differ");
  }
  std::unordered_set<std::string> seen;
  for (const auto& r : manifest.records) {
    if (r.id.empty()) throw ValidationError("manifest: record with empty id");
    if (!seen.insert(r.id).second) throw ValidationError("manifest: duplicate id '" + r.id + "'");
    if (r.label < 0 || r.label >= manifest.num_classes) {
      throw ValidationError("manifest: record '" + r.id + "' label " + std::to_string(r.label) +
                            " out of range [0, " + std::to_string(manifest.num_classes) + ")");
    }
    for (const auto& [m, slot] : r.payloads) {
      if (!manifest.has_modality(m)) {
        throw ValidationError("manifest: record '" + r.id + "' has payload for undeclared modality " +
                              std::string(to_string(m)));
      }
    }
  }
}

namespace {

json header_json(const DatasetManifest& manifest) {
  json header;
  header["name"] = manifest.name;
  header["num_classes"] = manifest.num_classes;
  header["class_names"] = manifest.class_names;
  header["modalities"] = {to_string(manifest.modalities[0]), to_string(manifest.modalities[1])};
  json dims = json::object();
  for (const auto& [m, d] : manifest.dims) dims[std::string(to_string(m))] = d;
  header["dims"] = dims;
  return header;
}

std::string relative_to(const fs::path& p, const fs::path& base) {
  if (p.empty()) return {};
  auto rel = p.lexically_relative(base);
  if (rel.empty() || *rel.begin() == "..") return p.generic_string();
  return rel.generic_string();
}

}  // namespace

std::string serialize_manifest(const DatasetManifest& manifest, const fs::path& base_dir) {
  const fs::path base = fs::absolute(base_dir).lexically_normal();
  std::string out = header_json(manifest).dump() + "\n";
  for (const auto& r : manifest.records) {
    json row;
    row["id"] = r.id;
    row["label"] = r.label;
    row["split"] = to_string(r.split);
    json payload = json::object();
    for (const auto& [m, slot] : r.payloads) payload[std::string(to_string(m))] = relative_to(slot.path, base);
    row["payload"] = payload;
    out += row.dump();
    out += '\n';
  }
  return out;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  const auto dir = fs::absolute(path).parent_path();
  write_file_atomic(path, serialize_manifest(manifest, dir));
}

ManifestLoad load_manifest_checked(const fs::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open manifest " + path.string());
  const fs::path base = fs::absolute(path).parent_path().lexically_normal();

  ManifestLoad result;
  auto& manifest = result.manifest;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto where = [&] { return path.string() + ":" + std::to_string(line_no); };
    json row;
    try {
      row = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where() + ": malformed record: " + e.what());
    }
    try {
      if (!have_header) {
        manifest.name = row.at("name").get<std::string>();
        manifest.num_classes = row.at("num_classes").get<int>();
        manifest.class_names = row.at("class_names").get<std::vector<std::string>>();
        const auto mods = row.at("modalities").get<std::vector<std::string>>();
        if (mods.size() != 2) throw ValidationError(where() + ": exactly two modalities required");
        manifest.modalities = {parse_modality(mods[0]), parse_modality(mods[1])};
        if (row.contains("dims")) {
          for (const auto& [k, v] : row["dims"].items()) manifest.dims[parse_modality(k)] = v.get<int>();
        }
        have_header = true;
        continue;
      }
      MultimodalSample s;
      s.id = row.at("id").get<std::string>();
      s.label = row.at("label").get<int>();
      if (!row.contains("split")) throw ValidationError(where() + ": record '" + s.id + "' has no split");
      s.split = parse_split(row.at("split").get<std::string>());
      if (row.contains("payload")) {
        for (const auto& [k, v] : row["payload"].items()) {
          if (v.is_null()) continue;
          const auto ref = v.get<std::string>();
          if (ref.empty()) continue;
          fs::path p(ref);
          if (p.is_relative()) p = base / p;
          s.payloads[parse_modality(k)].path = p.lexically_normal();
        }
      }
      manifest.records.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw ParseError(where() + ": malformed record: " + e.what());
    }
  }
  if (!have_header) throw ParseError(path.string() + ": empty manifest");
  validate_manifest(manifest);

  if (options.check_payloads) {
    for (const auto& r : manifest.records) {
      for (const auto& [m, slot] : r.payloads) {
        std::string problem;
        if (!fs::exists(slot.path)) {
          problem = "missing payload file " + slot.path.string();
        } else {
          try {
            const auto v = read_payload(slot.path);
            auto [it, inserted] = manifest.dims.try_emplace(m, static_cast<int>(v.size()));
            if (!inserted && it->second != static_cast<int>(v.size())) {
              problem = "payload " + slot.path.string() + " has dim " + std::to_string(v.size()) + ", expected " +
                        std::to_string(it->second);
            }
          } catch (const ParseError& e) {
            problem = e.what();
          }
        }
        if (problem.empty()) continue;
        problem = "record '" + r.id + "': " + problem;
        if (options.missing_payload == MissingPayloadPolicy::error) throw ValidationError(problem);
        result.warnings.push_back(std::move(problem));
      }
    }
  }
  return result;
}

DatasetManifest load_manifest(const fs::path& path, const LoadOptions& options) {
  return load_manifest_checked(path, options).manifest;
}

std::size_t masked_count(double ratio, std::size_t n) {
  // The epsilon absorbs representation error, e.g. 0.15 * 10 = 1.4999999999999998.
  const double k = std::floor(ratio * static_cast<double>(n) + 0.5 + 1e-9);
  return std::min(n, static_cast<std::size_t>(std::max(0.0, k)));
}

MaskPlan apply_missingness(const DatasetManifest& manifest, Split split, ModalityKind modality, double ratio,
                           std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw ValidationError("missing ratio must be in [0, 1], got " + std::to_string(ratio));
  }
  if (!manifest.has_modality(modality)) {
    throw ValidationError("modality " + std::string(to_string(modality)) + " not in dataset " + manifest.name);
  }
  MaskPlan plan{modality, ratio, seed, split, {}};
  std::vector<std::string> ids;
  for (const auto* r : manifest.split_records(split)) ids.push_back(r->id);
  const auto k = masked_count(ratio, ids.size());

  // Partial Fisher-Yates: the first k slots are a uniform draw without replacement.
  Rng rng(derive_seed(seed, 0x6d61736b /* mask */, static_cast<std::uint64_t>(split)));
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + rng.below(ids.size() - i);
    std::swap(ids[i], ids[j]);
    plan.masked_ids.insert(ids[i]);
  }
  return plan;
}

std::string serialize_mask_plan(const MaskPlan& plan) {
  json j;
  j["target_modality"] = to_string(plan.target_modality);
  j["ratio"] = plan.ratio;
  j["seed"] = plan.seed;
  j["split"] = to_string(plan.split);
  j["masked_ids"] = plan.masked_ids;
  return j.dump();
}

MaskPlan parse_mask_plan(std::string_view json_text) {
  try {
    const auto j = json::parse(json_text);
    MaskPlan plan;
    plan.target_modality = parse_modality(j.at("target_modality").get<std::string>());
    plan.ratio = j.at("ratio").get<double>();
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.split = parse_split(j.at("split").get<std::string>());
    plan.masked_ids = j.at("masked_ids").get<std::set<std::string>>();
    return plan;
  } catch (const json::exception& e) {
    throw ParseError(std::string("mask plan: ") + e.what());
  }
}

std::vector<MultimodalSample> masked_split(const DatasetManifest& manifest, const MaskPlan& plan) {
  auto samples = manifest.split_samples(plan.split);
  for (auto& s : samples) {
    if (plan.masks(s.id)) s.payloads.erase(plan.target_modality);
  }
  return samples;
}

std::vector<MultimodalSample> strip_to(std::vector<MultimodalSample> samples, ModalityKind kept) {
  for (auto& s : samples) {
    std::erase_if(s.payloads, [&](const auto& kv) { return kv.first != kept; });
  }
  return samples;
}

std::vector<MultimodalSample> training_view(const DatasetManifest& manifest, const MaskPlan& plan,
                                            ViewStrategy strategy, std::optional<ModalityKind> kept) {
  switch (strategy) {
    case ViewStrategy::keep_all:
      return masked_split(manifest, plan);
    case ViewStrategy::complete_only: {
      std::vector<MultimodalSample> out;
      for (const auto* r : manifest.split_records(plan.split)) {
        if (!plan.masks(r->id)) out.push_back(*r);
      }
      if (out.empty()) {
        throw ValidationError("complete_only view is empty: every " + std::string(to_string(plan.split)) +
                              " sample is missing " + std::string(to_string(plan.target_modality)) +
                              " (ratio " + std::to_string(plan.ratio) + ")");
      }
      return out;
    }
    case ViewStrategy::modality_only: {
      const auto keep = kept.value_or(manifest.other_modality(plan.target_modality));
      return strip_to(masked_split(manifest, plan), keep);
    }
  }
  throw ValidationError("unknown view strategy");
}

const Vector& ClassFeatureTable::mean(ModalityKind m, int class_index) const {
  auto it = means.find(m);
  if (it == means.end()) {
    throw ValidationError("feature table has no " + std::string(to_string(m)) + " means");
  }
  if (class_index < 0 || class_index >= static_cast<int>(it->second.size())) {
    throw ValidationError("feature table has no entry for class " + std::to_string(class_index));
  }
  return it->second[static_cast<std::size_t>(class_index)];
}

void save_class_features(const ClassFeatureTable& table, const fs::path& path) {
  json j = json::object();
  for (const auto& [m, rows] : table.means) j[std::string(to_string(m))] = rows;
  write_file_atomic(path, j.dump() + "\n");
}

ClassFeatureTable load_class_features(const fs::path& path) {
  ClassFeatureTable table;
  try {
    const auto j = json::parse(read_file(path));
    for (const auto& [k, v] : j.items()) table.means[parse_modality(k)] = v.get<std::vector<Vector>>();
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return table;
}

ToyDataset make_toy_dataset(const ToyOptions& options, const fs::path& out_dir) {
  if (options.num_classes <= 0 || options.per_class <= 0 || options.dim <= 0 || options.noise < 0.0) {
    throw ValidationError("make_toy_dataset: arguments must be positive");
  }
  if (options.per_class < 5) {
    throw ValidationError("make_toy_dataset: per_class must be >= 5 for a 70/10/20 split, got " +
                          std::to_string(options.per_class));
  }
  if (options.modalities[0] == options.modalities[1]) {
    throw ValidationError("make_toy_dataset: the two modalities must differ");
  }
  const fs::path root = fs::absolute(out_dir).lexically_normal();
  fs::create_directories(root);

  ToyDataset toy;
  auto& manifest = toy.manifest;
  manifest.name = options.name;
  manifest.num_classes = options.num_classes;
  manifest.modalities = options.modalities;
  for (int c = 0; c < options.num_classes; ++c) manifest.class_names.push_back("class_" + std::to_string(c));
  for (auto m : options.modalities) manifest.dims[m] = options.dim;

  Rng mean_rng(derive_seed(options.seed, 1));
  for (auto m : options.modalities) {
    auto& rows = toy.features.means[m];
    for (int c = 0; c < options.num_classes; ++c) {
      Vector mu(static_cast<std::size_t>(options.dim));
      for (auto& x : mu) x = static_cast<float>(mean_rng.normal());
      rows.push_back(std::move(mu));
    }
  }

  const int per = options.per_class;
  const int n_test = std::max(1, (2 * per + 5) / 10);
  const int n_val = std::max(1, (per + 5) / 10);
  const int n_train = per - n_test - n_val;

  Rng sample_rng(derive_seed(options.seed, 2));
  Rng split_rng(derive_seed(options.seed, 3));
  int global = 0;
  for (int c = 0; c < options.num_classes; ++c) {
    std::vector<int> order(static_cast<std::size_t>(per));
    for (int i = 0; i < per; ++i) order[static_cast<std::size_t>(i)] = i;
    split_rng.shuffle(order.begin(), order.end());
    std::vector<Split> split_of(static_cast<std::size_t>(per));
    for (int r = 0; r < per; ++r) {
      split_of[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] =
          r < n_train ? Split::train : (r < n_train + n_val ? Split::val : Split::test);
    }
    for (int i = 0; i < per; ++i, ++global) {
      char id[32];
      std::snprintf(id, sizeof id, "s%05d", global);
      MultimodalSample s;
      s.id = id;
      s.label = c;
      s.split = split_of[static_cast<std::size_t>(i)];
      for (auto m : options.modalities) {
        const auto& mu = toy.features.mean(m, c);
        Vector x(mu.size());
        for (std::size_t k = 0; k < x.size(); ++k) {
          x[k] = static_cast<float>(mu[k] + options.noise * sample_rng.normal());
        }
        const auto path = root / "payloads" / std::string(to_string(m)) / (s.id + ".vec");
        write_payload(path, x);
        s.payloads[m].path = path;
      }
      manifest.records.push_back(std::move(s));
    }
  }
  toy.manifest_path = root / "manifest.jsonl";
  toy.features_path = root / "class_means.json";
  save_manifest(manifest, toy.manifest_path);
  save_class_features(toy.features, toy.features_path);
  return toy;
}

}  // namespace mmimpute
