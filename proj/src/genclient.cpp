// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
#include "mmimpute/genclient.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "http_util.hpp"
#include "mmimpute/error.hpp"
#include "mmimpute/hash.hpp"
#include "mmimpute/rng.hpp"

namespace mmimpute {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(BackendKind k) {
  switch (k) {
    case BackendKind::text_to_image:
      return "text_to_image";
    case BackendKind::text_to_audio:
      return "text_to_audio";
    case BackendKind::text_to_text:
      return "text_to_text";
  }
  return "?";
}

BackendKind backend_kind_for(ModalityKind m) {
  switch (m) {
    case ModalityKind::visual:
      return BackendKind::text_to_image;
    case ModalityKind::audio:
      return BackendKind::text_to_audio;
    case ModalityKind::text:
      return BackendKind::text_to_text;
  }
  return BackendKind::text_to_image;
}

namespace {

json spec_json(const PromptSpec& spec) {
  return {{"class_index", spec.class_index},         {"text", spec.text},
          {"performer", spec.performer},             {"domain", spec.domain},
          {"guidance_scale", spec.guidance_scale},   {"generation_seed", spec.generation_seed},
          {"strategy", to_string(spec.strategy)}};
}

PromptSpec spec_from_json(const json& j) {
  PromptSpec spec;
  spec.class_index = j.at("class_index").get<int>();
  spec.text = j.at("text").get<std::string>();
  spec.performer = j.at("performer").get<std::string>();
  spec.domain = j.at("domain").get<std::string>();
  spec.guidance_scale = j.at("guidance_scale").get<double>();
  spec.generation_seed = j.at("generation_seed").get<std::uint64_t>();
  spec.strategy = parse_prompt_strategy(j.at("strategy").get<std::string>());
  return spec;
}

}  // namespace

std::string spec_to_json(const PromptSpec& spec) { return spec_json(spec).dump(); }

std::string asset_id_for(const PromptSpec& spec, std::string_view backend_name) {
  std::string key = spec_to_json(spec);
  key += '|';
  key += backend_name;
  return short_hash(key, 20);
}

Vector stub_generate(const PromptSpec& spec, const ClassFeatureTable& table, ModalityKind modality,
                     double stub_noise, std::string_view backend_name) {
  const auto& mu = table.mean(modality, spec.class_index);
  const double sigma = stub_noise * spec.guidance_scale / 5.0;
  const auto id = asset_id_for(spec, backend_name);
  Rng rng(fnv1a(id));
  Vector out(mu.size());
  for (std::size_t k = 0; k < mu.size(); ++k) out[k] = static_cast<float>(mu[k] + sigma * rng.normal());
  return out;
}

StubBackend::StubBackend(ModalityKind modality, ClassFeatureTable table, double stub_noise)
    : modality_(modality), table_(std::move(table)), stub_noise_(stub_noise) {
  if (!table_.means.contains(modality_)) {
    throw ValidationError("stub backend: feature table has no " + std::string(to_string(modality_)) + " means");
  }
}

std::string StubBackend::name() const {
  std::ostringstream os;
  os << "stub-" << to_string(kind()) << "-n" << stub_noise_;
  return os.str();
}

GeneratedPayload StubBackend::generate(const PromptSpec& spec) {
  return {stub_generate(spec, table_, modality_, stub_noise_, name()), {}, {}};
}

HttpGenerationBackend::HttpGenerationBackend(std::string url, BackendKind kind) : url_(std::move(url)), kind_(kind) {}

GeneratedPayload HttpGenerationBackend::generate(const PromptSpec& spec) {
  const auto parts = detail::split_url(url_);
  httplib::Client client(parts.origin);
  client.set_read_timeout(300, 0);
  httplib::Headers headers;
  if (const char* token = std::getenv("MMIMPUTE_GEN_TOKEN")) {
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  const json body = {{"prompt", spec.text},          {"guidance_scale", spec.guidance_scale},
                     {"seed", spec.generation_seed}, {"class_index", spec.class_index},
                     {"performer", spec.performer},  {"domain", spec.domain}};
  GeneratedPayload out;
  out.request = body.dump();
  auto res = client.Post(parts.path, headers, out.request, "application/json");
  if (!res) throw BackendError("generation request to " + url_ + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw BackendError("generation backend returned HTTP " + std::to_string(res->status));
  if (res->get_header_value("Content-Type").starts_with("image/png")) {
    out.image_png = res->body;
  } else {
    out.vector = decode_payload(res->body);
  }
  return out;
}

Vector DownsampleImageEmbedder::embed_png(std::string_view png_bytes) const {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, png_bytes.data(), png_bytes.size())) {
    throw ParseError(std::string("png decode: ") + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  std::vector<unsigned char> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw ParseError(std::string("png decode: ") + image.message);
  }
  const auto w = static_cast<int>(image.width);
  const auto h = static_cast<int>(image.height);
  Vector out(static_cast<std::size_t>(side_ * side_), 0.0f);
  std::vector<int> counts(out.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto cell = static_cast<std::size_t>((y * side_ / h) * side_ + (x * side_ / w));
      out[cell] += pixels[static_cast<std::size_t>(y * w + x)] / 255.0f;
      ++counts[cell];
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = counts[i] ? out[i] / counts[i] - 0.5f : 0.0f;
  return out;
}

std::size_t SyntheticPool::total() const {
  std::size_t n = 0;
  for (const auto& [c, assets] : per_class) n += assets.size();
  return n;
}

const std::vector<SyntheticAsset>& SyntheticPool::assets_for(int class_index) const {
  static const std::vector<SyntheticAsset> kEmpty;
  auto it = per_class.find(class_index);
  return it == per_class.end() ? kEmpty : it->second;
}

PoolManifestWriter::PoolManifestWriter(fs::path manifest_path) : path_(std::move(manifest_path)) {
  if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
}

void PoolManifestWriter::append(const SyntheticAsset& asset) {
  const std::string line = asset_row(asset, path_.parent_path()) + "\n";
  std::lock_guard lock(mutex_);
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  out.flush();
  if (!out) throw std::runtime_error("cannot append to " + path_.string());
}

std::string asset_row(const SyntheticAsset& asset, const fs::path& pool_dir) {
  json row = spec_json(asset.spec);
  row["asset_id"] = asset.asset_id;
  row["payload_path"] = asset.payload_path.lexically_relative(pool_dir).generic_string();
  if (!asset.image_path.empty()) row["image_path"] = asset.image_path.lexically_relative(pool_dir).generic_string();
  row["backend"] = asset.backend;
  row["created_at"] = asset.created_at;
  if (!asset.request.empty()) row["request"] = asset.request;
  return row.dump();
}

SyntheticAsset parse_asset_row(std::string_view line, const fs::path& pool_dir) {
  try {
    const auto row = json::parse(line);
    SyntheticAsset a;
    a.spec = spec_from_json(row);
    a.asset_id = row.at("asset_id").get<std::string>();
    a.class_index = a.spec.class_index;
    a.payload_path = (pool_dir / row.at("payload_path").get<std::string>()).lexically_normal();
    if (row.contains("image_path")) a.image_path = (pool_dir / row["image_path"].get<std::string>()).lexically_normal();
    a.backend = row.at("backend").get<std::string>();
    a.created_at = row.value("created_at", "");
    a.request = row.value("request", "");
    return a;
  } catch (const json::exception& e) {
    throw ParseError(std::string("pool manifest row: ") + e.what());
  }
}

namespace {

void validate_generated(const Vector& v, int expected_dim, const std::string& id) {
  if (v.empty()) throw BackendError("asset " + id + ": backend produced an empty payload");
  if (expected_dim > 0 && static_cast<int>(v.size()) != expected_dim) {
    throw BackendError("asset " + id + ": payload dim " + std::to_string(v.size()) + ", expected " +
                       std::to_string(expected_dim));
  }
  for (float x : v) {
    if (!std::isfinite(x)) throw BackendError("asset " + id + ": payload contains non-finite values");
  }
}

}  // namespace

SyntheticAsset generate(GenerationBackend& backend, const PromptSpec& spec, const GenerateContext& context) {
  if (backend.kind() != backend_kind_for(context.modality)) {
    throw ValidationError("backend " + backend.name() + " (" + std::string(to_string(backend.kind())) +
                          ") cannot produce " + std::string(to_string(context.modality)) + " payloads");
  }
  SyntheticAsset asset;
  asset.spec = spec;
  asset.class_index = spec.class_index;
  asset.backend = backend.name();
  asset.asset_id = asset_id_for(spec, asset.backend);

  GeneratedPayload out;
  for (int attempt = 0;; ++attempt) {
    try {
      if (context.backend_calls) context.backend_calls->fetch_add(1);
      out = backend.generate(spec);
      break;
    } catch (const std::exception& e) {
      if (attempt >= context.retry.max_retries) {
        throw BackendError("asset " + asset.asset_id + ": backend " + asset.backend + " failed after " +
                           std::to_string(attempt + 1) + " attempts: " + e.what());
      }
      const auto delay = context.retry.base_delay * (1LL << attempt);
      if (context.retry.sleep) {
        context.retry.sleep(delay);
      } else {
        std::this_thread::sleep_for(delay);
      }
    }
  }

  const auto class_dir = context.pool_dir / "assets" / std::to_string(spec.class_index);
  if (!out.image_png.empty()) {
    if (context.embedder == nullptr) {
      throw BackendError("asset " + asset.asset_id + ": image returned but no embedder configured");
    }
    asset.image_path = class_dir / (asset.asset_id + ".png");
    write_file_atomic(asset.image_path, out.image_png);
    out.vector = context.embedder->embed_png(out.image_png);
  }
  validate_generated(out.vector, context.expected_dim, asset.asset_id);
  asset.payload_path = class_dir / (asset.asset_id + ".vec");
  write_payload(asset.payload_path, out.vector);
  asset.created_at = utc_timestamp();
  asset.request = std::move(out.request);
  if (context.writer) context.writer->append(asset);
  return asset;
}

SyntheticPool load_pool(const fs::path& manifest_path, ModalityKind modality) {
  SyntheticPool pool;
  pool.modality = modality;
  pool.manifest_path = manifest_path;
  const auto dir = fs::absolute(manifest_path).parent_path().lexically_normal();
  std::ifstream in(manifest_path);
  if (!in) throw ParseError("cannot open pool manifest " + manifest_path.string());
  std::set<std::string> seen;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto asset = parse_asset_row(line, dir);
    if (!seen.insert(asset.asset_id).second) continue;
    pool.per_class[asset.class_index].push_back(std::move(asset));
  }
  return pool;
}

PoolBuildResult build_pool(const std::vector<std::string>& class_names, GenerationBackend& backend,
                           const PoolBuildOptions& options) {
  if (options.prompts.per_class < 1) {
    throw ValidationError("per_class must be >= 1, got " + std::to_string(options.prompts.per_class));
  }
  if (options.pool_dir.empty()) throw ValidationError("build_pool: pool_dir is required");
  if (backend.kind() != backend_kind_for(options.modality)) {
    throw ValidationError("backend " + backend.name() + " cannot produce " +
                          std::string(to_string(options.modality)) + " payloads");
  }
  const auto pool_dir = fs::absolute(options.pool_dir).lexically_normal();
  fs::create_directories(pool_dir);
  const auto manifest_path = pool_dir / "pool.jsonl";

  const auto specs = enumerate_prompt_batch(class_names, options.prompts, options.llm_definitions);

  std::map<std::string, SyntheticAsset> existing;
  if (fs::exists(manifest_path)) {
    for (auto& [c, assets] : load_pool(manifest_path, options.modality).per_class) {
      for (auto& a : assets) {
        if (fs::exists(a.payload_path)) existing.emplace(a.asset_id, std::move(a));
      }
    }
  }

  const auto backend_name = backend.name();
  std::vector<std::string> ids;
  ids.reserve(specs.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    ids.push_back(asset_id_for(specs[i], backend_name));
    if (!existing.contains(ids.back())) pending.push_back(i);
  }

  PoolManifestWriter writer(manifest_path);
  std::atomic<long> calls{0};
  std::atomic<long> created{0};
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stopped{false};
  std::mutex result_mutex;
  std::map<std::string, SyntheticAsset> fresh;
  std::map<int, std::vector<std::string>> failures;

  GenerateContext ctx;
  ctx.pool_dir = pool_dir;
  ctx.modality = options.modality;
  ctx.expected_dim = options.expected_dim;
  ctx.retry = options.retry;
  ctx.embedder = options.embedder;
  ctx.writer = &writer;
  ctx.backend_calls = &calls;

  auto worker = [&] {
    for (;;) {
      if (stopped.load()) return;
      if (options.should_stop) {
        std::lock_guard lock(result_mutex);
        if (options.should_stop()) {
          stopped = true;
          return;
        }
      }
      const auto k = next.fetch_add(1);
      if (k >= pending.size()) return;
      const auto& spec = specs[pending[k]];
      try {
        auto asset = generate(backend, spec, ctx);
        created.fetch_add(1);
        std::lock_guard lock(result_mutex);
        fresh.emplace(asset.asset_id, std::move(asset));
      } catch (const std::exception& e) {
        std::lock_guard lock(result_mutex);
        failures[spec.class_index].push_back(e.what());
      }
    }
  };
  const int threads = std::max(1, std::min<int>(options.concurrency, static_cast<int>(pending.size())));
  if (!pending.empty()) {
    std::vector<std::jthread> pool_threads;
    for (int t = 0; t < threads; ++t) pool_threads.emplace_back(worker);
  }

  PoolBuildResult result;
  result.pool.modality = options.modality;
  result.pool.manifest_path = manifest_path;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    auto it = existing.find(ids[i]);
    if (it != existing.end()) {
      result.pool.per_class[specs[i].class_index].push_back(it->second);
    } else if (auto jt = fresh.find(ids[i]); jt != fresh.end()) {
      result.pool.per_class[specs[i].class_index].push_back(jt->second);
    }
  }
  result.backend_calls = calls.load();
  result.new_assets = created.load();
  result.interrupted = stopped.load();
  result.failures = std::move(failures);

  if (!result.interrupted) {
    std::ostringstream report;
    bool empty_class = false;
    for (int c = 0; c < static_cast<int>(class_names.size()); ++c) {
      if (!result.pool.assets_for(c).empty()) continue;
      empty_class = true;
      report << "\n  class " << c << " (" << class_names[static_cast<std::size_t>(c)] << "): 0 assets";
      if (auto f = result.failures.find(c); f != result.failures.end() && !f->second.empty()) {
        report << ", " << f->second.size() << " failures, last: " << f->second.back();
      }
    }
    if (empty_class) throw BackendError("pool build failed:" + report.str());
  }
  return result;
}

}  // namespace mmimpute
