// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>
#include <json.hpp>

#include <fstream>
#include <map>

#include "mmimpute/error.hpp"
#include "mmimpute/imputation.hpp"
#include "mmimpute/model.hpp"
#include "mmimpute/rng.hpp"
#include "test_util.hpp"

using namespace mmimpute;
using mmimpute::testing::TempDir;

namespace {

std::vector<MultimodalSample> samples(int n, int classes = 2) {
  std::vector<MultimodalSample> out;
  for (int i = 0; i < n; ++i) {
    MultimodalSample s;
    s.id = "s" + std::to_string(i);
    s.label = i % classes;
    s.payloads[ModalityKind::audio].path = "a" + std::to_string(i);
    s.payloads[ModalityKind::visual].path = "v" + std::to_string(i);
    out.push_back(s);
  }
  return out;
}

MaskPlan mask_of(const std::vector<MultimodalSample>& src, std::initializer_list<int> idx) {
  MaskPlan p;
  p.target_modality = ModalityKind::visual;
  for (int i : idx) p.masked_ids.insert(src[static_cast<std::size_t>(i)].id);
  return p;
}

MaskPlan mask_all(const std::vector<MultimodalSample>& src) {
  MaskPlan p;
  p.target_modality = ModalityKind::visual;
  p.ratio = 1.0;
  for (const auto& s : src) p.masked_ids.insert(s.id);
  return p;
}

SyntheticPool pool_of(std::map<int, int> sizes) {
  SyntheticPool pool;
  pool.modality = ModalityKind::visual;
  for (auto [c, n] : sizes) {
    for (int k = 0; k < n; ++k) {
      SyntheticAsset a;
      a.class_index = c;
      a.asset_id = "c" + std::to_string(c) + "-" + std::to_string(k);
      a.payload_path = "assets/" + a.asset_id + ".vec";
      pool.per_class[c].push_back(a);
    }
  }
  return pool;
}

ImputationStrategy gti(const SyntheticPool& pool, ImputationSchedule sched = ImputationSchedule::per_epoch) {
  ImputationStrategy s;
  s.kind = ImputationKind::gti;
  s.pool = &pool;
  s.schedule = sched;
  return s;
}

int asset_index(const std::string& asset_id) { return std::stoi(asset_id.substr(asset_id.find('-') + 1)); }

}  // namespace

TEST_CASE("gti: nothing masked is the identity") {
  const auto src = samples(10);
  const auto pool = pool_of({{0, 3}, {1, 3}});
  const auto view = impute_epoch(src, mask_of(src, {}), gti(pool), 0, 1);
  CHECK(view.samples == src);
  CHECK(view.assignment.empty());
}

TEST_CASE("gti: singleton pool always yields that asset") {
  const auto src = samples(20);
  const auto pool = pool_of({{0, 1}, {1, 1}});
  for (int epoch = 0; epoch < 5; ++epoch) {
    const auto view = impute_epoch(src, mask_all(src), gti(pool), epoch, 3);
    for (const auto& s : view.samples) {
      const auto& slot = s.payloads.at(ModalityKind::visual);
      CHECK(slot.asset_id == "c" + std::to_string(s.label) + "-0");
      CHECK(slot.provenance == Provenance::synthetic);
      CHECK(slot.path == pool.assets_for(s.label)[0].payload_path);
    }
  }
}

TEST_CASE("gti: draws are uniform over the class pool (chi-square, 19 dof)") {
  const auto src = samples(1, 1);
  const auto pool = pool_of({{0, 20}});
  const int epochs = 10000;
  std::vector<int> counts(20, 0);
  for (int e = 0; e < epochs; ++e) {
    const auto view = impute_epoch(src, mask_all(src), gti(pool), e, 9);
    ++counts[static_cast<std::size_t>(asset_index(view.assignment.at("s0")))];
  }
  const double expected = epochs / 20.0;
  double chi2 = 0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 36.19);  // 0.99 quantile
}

TEST_CASE("gti: consecutive epochs draw independently (joint chi-square, 24 dof)") {
  const auto src = samples(1, 1);
  const auto pool = pool_of({{0, 5}});
  const int epochs = 10001;
  std::vector<int> draws;
  for (int e = 0; e < epochs; ++e) {
    draws.push_back(asset_index(impute_epoch(src, mask_all(src), gti(pool), e, 21).assignment.at("s0")));
  }
  std::vector<int> joint(25, 0);
  for (int e = 0; e + 1 < epochs; ++e) ++joint[static_cast<std::size_t>(draws[e] * 5 + draws[e + 1])];
  const double expected = (epochs - 1) / 25.0;
  double chi2 = 0;
  for (int c : joint) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 42.98);  // 0.99 quantile
}

TEST_CASE("gti: labels are consistent and only masked samples change") {
  auto src = samples(40, 4);
  const auto before = src;
  const auto pool = pool_of({{0, 7}, {1, 7}, {2, 7}, {3, 7}});
  const auto plan = mask_of(src, {1, 2, 5, 8, 13, 21, 34});
  const auto view = impute_epoch(src, plan, gti(pool), 2, 4);
  CHECK(src == before);
  REQUIRE(view.samples.size() == src.size());
  std::set<std::string> assigned;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto& s = view.samples[i];
    CHECK(s.id == src[i].id);
    CHECK(s.label == src[i].label);
    CHECK(s.payloads.at(ModalityKind::audio) == src[i].payloads.at(ModalityKind::audio));
    if (!plan.masks(s.id)) {
      CHECK(s == src[i]);
      continue;
    }
    assigned.insert(s.id);
    const auto& aid = s.payloads.at(ModalityKind::visual).asset_id;
    CHECK(aid.rfind("c" + std::to_string(s.label) + "-", 0) == 0);
    CHECK(view.assignment.at(s.id) == aid);
  }
  std::set<std::string> keys;
  for (const auto& [k, v] : view.assignment) keys.insert(k);
  CHECK(keys == plan.masked_ids);
  CHECK(assigned == plan.masked_ids);
}

TEST_CASE("gti: per-epoch redraws, frozen schedule repeats epoch 0") {
  const auto src = samples(30);
  const auto pool = pool_of({{0, 50}, {1, 50}});
  const auto plan = mask_all(src);
  const auto e0 = impute_epoch(src, plan, gti(pool), 0, 1).assignment;
  CHECK(impute_epoch(src, plan, gti(pool), 0, 1).assignment == e0);
  CHECK(impute_epoch(src, plan, gti(pool), 1, 1).assignment != e0);
  CHECK(impute_epoch(src, plan, gti(pool), 0, 2).assignment != e0);
  for (int e = 1; e < 4; ++e) {
    CHECK(impute_epoch(src, plan, gti(pool, ImputationSchedule::frozen), e, 1).assignment == e0);
  }
}

TEST_CASE("gti: an empty class pool is an error naming the class") {
  const auto src = samples(6, 3);
  const auto pool = pool_of({{0, 2}, {1, 2}});
  try {
    impute_epoch(src, mask_all(src), gti(pool), 0, 1);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("class 2") != std::string::npos);
  }
  ImputationStrategy missing;
  missing.kind = ImputationKind::gti;
  CHECK_THROWS_AS(impute_epoch(src, mask_all(src), missing, 0, 1), ValidationError);
  auto audio_pool = pool_of({{0, 1}, {1, 1}, {2, 1}});
  audio_pool.modality = ModalityKind::audio;
  CHECK_THROWS_AS(impute_epoch(src, mask_all(src), gti(audio_pool), 0, 1), ValidationError);
}

TEST_CASE("zero fill, drop and none") {
  const auto src = samples(10);
  const auto plan = mask_of(src, {0, 3, 7});
  ImputationStrategy zf;
  zf.kind = ImputationKind::zero_fill;
  zf.dim = 6;
  const auto zero_view = impute_epoch(src, plan, zf, 0, 1);
  REQUIRE(zero_view.samples.size() == 10);
  PayloadStore store;
  for (const auto& s : zero_view.samples) {
    if (!plan.masks(s.id)) continue;
    const auto& slot = s.payloads.at(ModalityKind::visual);
    CHECK(slot.provenance == Provenance::zero);
    CHECK(*store.get(slot) == Vector(6, 0.0f));
    CHECK(s.provenance() == Provenance::zero);
  }
  zf.dim = 0;
  CHECK_THROWS_AS(impute_epoch(src, plan, zf, 0, 1), ValidationError);

  ImputationStrategy drop;
  drop.kind = ImputationKind::drop_incomplete;
  const auto dropped = impute_epoch(src, plan, drop, 0, 1);
  CHECK(dropped.samples.size() == 7);
  for (const auto& s : dropped.samples) CHECK_FALSE(plan.masks(s.id));

  ImputationStrategy none;
  const auto absent = impute_epoch(src, plan, none, 0, 1);
  CHECK(absent.samples.size() == 10);
  for (const auto& s : absent.samples) CHECK(s.has(ModalityKind::visual) == !plan.masks(s.id));
}

TEST_CASE("zero payload encodes to zero and contributes only its bias") {
  CHECK(zero_payload(ModalityKind::visual, 3) == Vector{0, 0, 0});
  CHECK_THROWS_AS(zero_payload(ModalityKind::visual, 0), ValidationError);

  const int dim = 8, classes = 3;
  auto enc = make_toy_encoder(ModalityKind::visual, dim, 5);
  const auto z = enc->encode(zero_payload(ModalityKind::visual, dim));
  CHECK(z.isZero(0.0));

  Rng rng(3);
  std::map<ModalityKind, LinearHead> heads;
  for (auto m : {ModalityKind::audio, ModalityKind::visual}) {
    LinearHead h{MatrixXd(classes, dim), VectorXd(classes)};
    for (int i = 0; i < h.weight.size(); ++i) h.weight.data()[i] = rng.normal();
    for (int i = 0; i < classes; ++i) h.bias[i] = rng.normal();
    heads[m] = h;
  }
  VectorXd ea(dim);
  for (int i = 0; i < dim; ++i) ea[i] = rng.normal();
  const auto fused = fuse_logits(heads, {{ModalityKind::audio, ea}, {ModalityKind::visual, z}});
  const VectorXd expected = (heads[ModalityKind::audio].weight * ea + heads[ModalityKind::audio].bias +
                             heads[ModalityKind::visual].bias) /
                            2.0;
  CHECK((fused - expected).norm() < 1e-12);
}

TEST_CASE("assignment log rows") {
  TempDir dir("log");
  const auto src = samples(4);
  const auto pool = pool_of({{0, 3}, {1, 3}});
  const auto view = impute_epoch(src, mask_of(src, {1, 2}), gti(pool), 5, 1);
  append_assignment_log(dir / "sub/assign.jsonl", view);
  append_assignment_log(dir / "sub/assign.jsonl", view);
  std::ifstream in(dir / "sub/assign.jsonl");
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("epoch") == 5);
    CHECK(view.assignment.at(j.at("sample_id").get<std::string>()) == j.at("asset_id").get<std::string>());
    ++rows;
  }
  CHECK(rows == 4);
}
