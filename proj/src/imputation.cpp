// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
#include "mmimpute/imputation.hpp"

#include <fstream>

#include <json.hpp>

#include "mmimpute/error.hpp"
#include "mmimpute/rng.hpp"

namespace mmimpute {

std::string_view to_string(ImputationKind k) {
  switch (k) {
    case ImputationKind::gti:
      return "gti";
    case ImputationKind::zero_fill:
      return "zero_fill";
    case ImputationKind::drop_incomplete:
      return "drop_incomplete";
    case ImputationKind::none:
      return "none";
  }
  return "?";
}

ImputationKind parse_imputation(std::string_view s) {
  if (s == "gti") return ImputationKind::gti;
  if (s == "zero_fill") return ImputationKind::zero_fill;
  if (s == "drop_incomplete") return ImputationKind::drop_incomplete;
  if (s == "none") return ImputationKind::none;
  throw ValidationError("unknown imputation strategy '" + std::string(s) + "'");
}

Vector zero_payload(ModalityKind modality, int dim) {
  if (dim <= 0) {
    throw ValidationError("zero payload for " + std::string(to_string(modality)) + " needs dim > 0");
  }
  return Vector(static_cast<std::size_t>(dim), 0.0f);
}

ImputedView impute_epoch(const std::vector<MultimodalSample>& source, const MaskPlan& plan,
                         const ImputationStrategy& strategy, int epoch, std::uint64_t seed) {
  const auto target = plan.target_modality;
  ImputedView view;
  view.epoch = epoch;
  view.samples.reserve(source.size());

  if (strategy.kind == ImputationKind::gti) {
    if (strategy.pool == nullptr) throw ValidationError("gti imputation requires a synthetic pool");
    if (strategy.pool->modality != target) {
      throw ValidationError("pool holds " + std::string(to_string(strategy.pool->modality)) +
                            " assets but the missing modality is " + std::string(to_string(target)));
    }
  }
  std::shared_ptr<const Vector> zeros;
  if (strategy.kind == ImputationKind::zero_fill) {
    zeros = std::make_shared<const Vector>(zero_payload(target, strategy.dim));
  }

  const int draw_epoch = strategy.schedule == ImputationSchedule::frozen ? 0 : epoch;
  Rng rng(derive_seed(seed, 0x696d70757465 /* impute */, static_cast<std::uint64_t>(draw_epoch)));

  for (const auto& s : source) {
    if (!plan.masks(s.id)) {
      view.samples.push_back(s);
      continue;
    }
    switch (strategy.kind) {
      case ImputationKind::none: {
        auto copy = s;
        copy.payloads.erase(target);
        view.samples.push_back(std::move(copy));
        break;
      }
      case ImputationKind::drop_incomplete:
        break;
      case ImputationKind::zero_fill: {
        auto copy = s;
        auto& slot = copy.payloads[target];
        slot = PayloadSlot{};
        slot.provenance = Provenance::zero;
        slot.inline_data = zeros;
        view.samples.push_back(std::move(copy));
        break;
      }
      case ImputationKind::gti: {
        const auto& assets = strategy.pool->assets_for(s.label);
        if (assets.empty()) {
          throw ValidationError("gti: synthetic pool has no assets for class " + std::to_string(s.label) +
                                " (needed by sample '" + s.id + "')");
        }
        const auto& asset = assets[rng.below(assets.size())];
        auto copy = s;
        auto& slot = copy.payloads[target];
        slot = PayloadSlot{};
        slot.path = asset.payload_path;
        slot.provenance = Provenance::synthetic;
        slot.asset_id = asset.asset_id;
        view.assignment.emplace(s.id, asset.asset_id);
        view.samples.push_back(std::move(copy));
        break;
      }
    }
  }
  return view;
}

void append_assignment_log(const std::filesystem::path& path, const ImputedView& view) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::string rows;
  for (const auto& [sample, asset] : view.assignment) {
    rows += nlohmann::json{{"epoch", view.epoch}, {"sample_id", sample}, {"asset_id", asset}}.dump();
    rows += '\n';
  }
  std::ofstream out(path, std::ios::app);
  out << rows;
}

}  // namespace mmimpute
