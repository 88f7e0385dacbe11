// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstring>
#include <fstream>
#include <limits>

#include "mmimpute/data.hpp"
#include "mmimpute/error.hpp"
#include "mmimpute/payload.hpp"
#include "mmimpute/rng.hpp"
#include "test_util.hpp"

using namespace mmimpute;
using mmimpute::testing::TempDir;

namespace {

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << s;
}

// In-memory manifest with n records in one split; payload files are never read.
DatasetManifest synthetic_manifest(int n, Split split = Split::train, int classes = 2) {
  DatasetManifest m;
  m.name = "synthetic";
  m.num_classes = classes;
  for (int c = 0; c < classes; ++c) m.class_names.push_back("c" + std::to_string(c));
  m.dims = {{ModalityKind::audio, 4}, {ModalityKind::visual, 4}};
  for (int i = 0; i < n; ++i) {
    MultimodalSample s;
    s.id = "r" + std::to_string(i);
    s.label = i % classes;
    s.split = split;
    s.payloads[ModalityKind::audio].path = "a/" + s.id + ".vec";
    s.payloads[ModalityKind::visual].path = "v/" + s.id + ".vec";
    m.records.push_back(s);
  }
  return m;
}

std::string hand_manifest(const std::string& extra_records = "") {
  std::string s =
      R"({"name":"hand","num_classes":2,"class_names":["sit","run"],"modalities":["audio","visual"]})"
      "\n";
  for (int i = 0; i < 4; ++i) {
    s += R"({"id":"s)" + std::to_string(i) + R"(","label":)" + std::to_string(i % 2) +
         R"(,"split":")" + (i < 2 ? "train" : "test") + R"(","payload":{"audio":"a)" + std::to_string(i) +
         R"(.vec","visual":"v)" + std::to_string(i) + R"(.vec"}})" + "\n";
  }
  return s + extra_records;
}

void write_hand_payloads(const TempDir& dir) {
  for (int i = 0; i < 4; ++i) {
    write_payload(dir / ("a" + std::to_string(i) + ".vec"), std::vector<float>{1, 2, 3});
    write_payload(dir / ("v" + std::to_string(i) + ".vec"), std::vector<float>{4, 5});
  }
}

}  // namespace

TEST_CASE("payload: byte layout is magic, LE dim, LE float32") {
  const std::vector<float> v{1.0f, -2.5f};
  const auto bytes = encode_payload(v);
  REQUIRE(bytes.size() == 8 + 2 * 4);
  CHECK(bytes.substr(0, 4) == "MMPV");
  CHECK(static_cast<unsigned char>(bytes[4]) == 2);
  CHECK(bytes[5] == 0);
  CHECK(bytes[6] == 0);
  CHECK(bytes[7] == 0);
  // 1.0f = 0x3f800000, little-endian
  CHECK(static_cast<unsigned char>(bytes[8]) == 0x00);
  CHECK(static_cast<unsigned char>(bytes[11]) == 0x3f);
  CHECK(decode_payload(bytes) == v);
}

TEST_CASE("payload: malformed inputs are parse errors") {
  CHECK_THROWS_AS(decode_payload("MMP"), ParseError);
  CHECK_THROWS_AS(decode_payload(std::string("XXXX\x01\x00\x00\x00" "abcd", 12)), ParseError);
  auto bytes = encode_payload(std::vector<float>{1, 2, 3});
  CHECK_THROWS_AS(decode_payload(bytes.substr(0, bytes.size() - 1)), ParseError);
  CHECK_THROWS_AS(decode_payload(bytes + "x"), ParseError);
}

TEST_CASE("payload: f64 arrays round-trip exactly and concatenate") {
  const std::vector<double> a{0.1, -1e300, std::numeric_limits<double>::denorm_min()};
  const std::vector<double> b{};
  const auto joined = encode_payload_f64(a) + encode_payload_f64(b);
  std::string_view rest(joined);
  CHECK(consume_payload_f64(rest) == a);
  CHECK(consume_payload_f64(rest) == b);
  CHECK(rest.empty());
}

TEST_CASE("manifest: hand-written 4-record file loads") {
  TempDir dir("manifest");
  write_hand_payloads(dir);
  write_text(dir / "m.jsonl", hand_manifest());
  auto loaded = load_manifest_checked(dir / "m.jsonl");
  CHECK(loaded.warnings.empty());
  CHECK(loaded.manifest.num_classes == 2);
  CHECK(loaded.manifest.records.size() == 4);
  CHECK(loaded.manifest.dims.at(ModalityKind::audio) == 3);
  CHECK(loaded.manifest.dims.at(ModalityKind::visual) == 2);
  CHECK(loaded.manifest.records[1].payloads.at(ModalityKind::audio).path == dir / "a1.vec");
}

TEST_CASE("manifest: duplicate id is a validation error") {
  TempDir dir("manifest");
  write_hand_payloads(dir);
  write_text(dir / "m.jsonl",
             hand_manifest(R"({"id":"s1","label":0,"split":"val","payload":{"audio":"a0.vec"}})"
                           "\n"));
  CHECK_THROWS_AS(load_manifest(dir / "m.jsonl"), ValidationError);
}

TEST_CASE("manifest: label out of range is a validation error") {
  TempDir dir("manifest");
  write_hand_payloads(dir);
  write_text(dir / "m.jsonl", hand_manifest(R"({"id":"s9","label":2,"split":"val","payload":{}})"
                                            "\n"));
  CHECK_THROWS_AS(load_manifest(dir / "m.jsonl"), ValidationError);
}

TEST_CASE("manifest: malformed record is a parse error") {
  TempDir dir("manifest");
  write_hand_payloads(dir);
  write_text(dir / "m.jsonl", hand_manifest("{\"id\": \n"));
  CHECK_THROWS_AS(load_manifest(dir / "m.jsonl"), ParseError);
}

TEST_CASE("manifest: missing payload warns by default, errors when asked") {
  TempDir dir("manifest");
  write_hand_payloads(dir);
  std::filesystem::remove(dir / "v3.vec");
  write_text(dir / "m.jsonl", hand_manifest());
  auto loaded = load_manifest_checked(dir / "m.jsonl");
  REQUIRE(loaded.warnings.size() == 1);
  CHECK(loaded.warnings[0].find("v3.vec") != std::string::npos);
  LoadOptions strict;
  strict.missing_payload = MissingPayloadPolicy::error;
  CHECK_THROWS(load_manifest(dir / "m.jsonl", strict));
}

TEST_CASE("toy dataset: split arithmetic and reload") {
  TempDir dir("toy");
  ToyOptions o;
  o.num_classes = 2;
  o.per_class = 50;
  o.dim = 16;
  o.noise = 0.1;
  o.seed = 1;
  auto ds = make_toy_dataset(o, dir.path());
  CHECK(ds.manifest.records.size() == 100);
  CHECK(ds.manifest.split_records(Split::train).size() == 70);
  CHECK(ds.manifest.split_records(Split::val).size() == 10);
  CHECK(ds.manifest.split_records(Split::test).size() == 20);

  auto loaded = load_manifest_checked(ds.manifest_path);
  CHECK(loaded.warnings.empty());
  CHECK(loaded.manifest == ds.manifest);
  auto features = load_class_features(ds.features_path);
  CHECK(features.means == ds.features.means);
}

TEST_CASE("toy dataset: same call twice gives byte-identical files") {
  TempDir a("toy"), b("toy");
  ToyOptions o;
  o.per_class = 10;
  auto da = make_toy_dataset(o, a.path());
  auto db = make_toy_dataset(o, b.path());
  CHECK(read_file(da.manifest_path) == read_file(db.manifest_path));
  CHECK(read_file(da.features_path) == read_file(db.features_path));
  for (const auto& r : da.manifest.records) {
    const auto rel = std::filesystem::relative(r.payloads.at(ModalityKind::visual).path, a.path());
    CHECK(read_file(a.path() / rel) == read_file(b.path() / rel));
  }
}

TEST_CASE("toy dataset: noise 0 is solved by the nearest class mean") {
  TempDir dir("toy");
  ToyOptions o;
  o.noise = 0.0;
  o.per_class = 20;
  auto ds = make_toy_dataset(o, dir.path());
  for (auto m : ds.manifest.modalities) {
    int correct = 0, total = 0;
    for (const auto* r : ds.manifest.split_records(Split::test)) {
      const auto x = read_payload(r->payloads.at(m).path);
      int best = -1;
      double best_d = 0;
      for (int c = 0; c < o.num_classes; ++c) {
        const auto& mu = ds.features.mean(m, c);
        double d = 0;
        for (std::size_t i = 0; i < x.size(); ++i) d += (x[i] - mu[i]) * (x[i] - mu[i]);
        if (best < 0 || d < best_d) {
          best = c;
          best_d = d;
        }
      }
      correct += best == r->label;
      ++total;
    }
    CHECK(total > 0);
    CHECK(correct == total);
  }
}

TEST_CASE("toy dataset: per_class < 5 is rejected") {
  TempDir dir("toy");
  ToyOptions o;
  o.per_class = 4;
  CHECK_THROWS_AS(make_toy_dataset(o, dir.path()), ValidationError);
}

TEST_CASE("masking: zero, full and seeded partial masks") {
  const auto m = synthetic_manifest(10);
  CHECK(apply_missingness(m, Split::train, ModalityKind::visual, 0.0, 1).masked_ids.empty());
  CHECK(apply_missingness(m, Split::train, ModalityKind::visual, 1.0, 1).masked_ids.size() == 10);

  const auto p7 = apply_missingness(m, Split::train, ModalityKind::visual, 0.3, 7);
  CHECK(p7.masked_ids.size() == 3);
  CHECK(apply_missingness(m, Split::train, ModalityKind::visual, 0.3, 7).masked_ids == p7.masked_ids);
  bool some_differs = false;
  for (std::uint64_t s = 8; s < 18; ++s) {
    some_differs |= apply_missingness(m, Split::train, ModalityKind::visual, 0.3, s).masked_ids != p7.masked_ids;
  }
  CHECK(some_differs);
  for (const auto& id : p7.masked_ids) CHECK(id.rfind("r", 0) == 0);
}

TEST_CASE("masking: modality outside the manifest and bad ratios are rejected") {
  const auto m = synthetic_manifest(10);
  CHECK_THROWS_AS(apply_missingness(m, Split::train, ModalityKind::text, 0.5, 1), ValidationError);
  CHECK_THROWS_AS(apply_missingness(m, Split::train, ModalityKind::visual, -0.1, 1), ValidationError);
  CHECK_THROWS_AS(apply_missingness(m, Split::train, ModalityKind::visual, 1.1, 1), ValidationError);
}

TEST_CASE("masking: count equals round-half-up over the full ratio x N grid") {
  // Integer oracle: round-half-up(k/100 * N) = floor((2kN + 100) / 200).
  for (int k = 0; k <= 100; ++k) {
    const double ratio = k / 100.0;
    for (std::size_t n = 1; n <= 1000; ++n) {
      const std::size_t expected = (2 * static_cast<std::size_t>(k) * n + 100) / 200;
      if (masked_count(ratio, n) != expected) {
        FAIL("ratio " << ratio << " N " << n << ": got " << masked_count(ratio, n) << ", want " << expected);
      }
    }
  }
}

TEST_CASE("masking: only the requested split is touched") {
  auto m = synthetic_manifest(10);
  auto extra = synthetic_manifest(6, Split::test);
  for (auto& r : extra.records) {
    r.id = "t" + r.id;
    m.records.push_back(r);
  }
  const auto plan = apply_missingness(m, Split::test, ModalityKind::visual, 0.5, 3);
  CHECK(plan.masked_ids.size() == 3);
  for (const auto& id : plan.masked_ids) CHECK(id.rfind("tr", 0) == 0);
}

TEST_CASE("mask plan serialization round-trips") {
  const auto m = synthetic_manifest(20);
  const auto plan = apply_missingness(m, Split::train, ModalityKind::audio, 0.45, 99);
  const auto back = parse_mask_plan(serialize_mask_plan(plan));
  CHECK(back.masked_ids == plan.masked_ids);
  CHECK(back.ratio == plan.ratio);
  CHECK(back.seed == plan.seed);
  CHECK(back.split == plan.split);
  CHECK(back.target_modality == plan.target_modality);
}

TEST_CASE("views: complete_only at 95% of 100 keeps 5 complete samples") {
  const auto m = synthetic_manifest(100);
  const auto plan = apply_missingness(m, Split::train, ModalityKind::visual, 0.95, 1);
  const auto view = training_view(m, plan, ViewStrategy::complete_only);
  CHECK(view.size() == 5);
  for (const auto& s : view) {
    CHECK(s.has(ModalityKind::audio));
    CHECK(s.has(ModalityKind::visual));
    CHECK_FALSE(plan.masks(s.id));
  }
}

TEST_CASE("views: keep_all at ratio 0 is the split itself") {
  const auto m = synthetic_manifest(10);
  const auto plan = apply_missingness(m, Split::train, ModalityKind::visual, 0.0, 1);
  CHECK(training_view(m, plan, ViewStrategy::keep_all) == m.split_samples(Split::train));
}

TEST_CASE("views: keep_all at 0.3 of 10 has exactly 3 samples without the target") {
  const auto m = synthetic_manifest(10);
  const auto plan = apply_missingness(m, Split::train, ModalityKind::visual, 0.3, 5);
  const auto view = training_view(m, plan, ViewStrategy::keep_all);
  CHECK(view.size() == 10);
  int absent = 0;
  for (const auto& s : view) {
    absent += !s.has(ModalityKind::visual);
    CHECK(s.has(ModalityKind::audio));
  }
  CHECK(absent == 3);
}

TEST_CASE("views: complete_only with everything masked is an explicit error") {
  const auto m = synthetic_manifest(10);
  const auto plan = apply_missingness(m, Split::train, ModalityKind::visual, 1.0, 1);
  CHECK_THROWS_AS(training_view(m, plan, ViewStrategy::complete_only), ValidationError);
}

TEST_CASE("views: modality_only strips the other modality") {
  const auto m = synthetic_manifest(10);
  const auto plan = apply_missingness(m, Split::train, ModalityKind::visual, 0.5, 1);
  const auto view = training_view(m, plan, ViewStrategy::modality_only);
  CHECK(view.size() == 10);
  for (const auto& s : view) {
    CHECK(s.has(ModalityKind::audio));
    CHECK_FALSE(s.has(ModalityKind::visual));
  }
}

TEST_CASE("views: complete_only and the masked set partition the split, source untouched") {
  const auto m = synthetic_manifest(37);
  const auto before = serialize_manifest(m, "/");
  for (double ratio : {0.1, 0.5, 0.9}) {
    const auto plan = apply_missingness(m, Split::train, ModalityKind::visual, ratio, 17);
    const auto complete = training_view(m, plan, ViewStrategy::complete_only);
    std::set<std::string> ids;
    for (const auto& s : complete) ids.insert(s.id);
    for (const auto& id : plan.masked_ids) {
      CHECK_FALSE(ids.contains(id));
      ids.insert(id);
    }
    CHECK(ids.size() == 37);
    training_view(m, plan, ViewStrategy::keep_all);
    training_view(m, plan, ViewStrategy::modality_only);
  }
  CHECK(serialize_manifest(m, "/") == before);
}
