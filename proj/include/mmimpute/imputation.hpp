// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mmimpute/data.hpp"
#include "mmimpute/genclient.hpp"

namespace mmimpute {

enum class ImputationKind { gti, zero_fill, drop_incomplete, none };
enum class ImputationSchedule { per_epoch, frozen };

std::string_view to_string(ImputationKind k);
ImputationKind parse_imputation(std::string_view s);

struct ImputationStrategy {
  ImputationKind kind = ImputationKind::none;
  const SyntheticPool* pool = nullptr;  // required for gti
  int dim = 0;                          // payload dim of the target modality (zero_fill)
  ImputationSchedule schedule = ImputationSchedule::per_epoch;
};

struct ImputedView {
  int epoch = 0;
  std::vector<MultimodalSample> samples;
  std::map<std::string, std::string> assignment;  // sample id -> asset id (gti only)
};

Vector zero_payload(ModalityKind modality, int dim);

// Fills the plan's target payload of every masked sample in `source`.
// gti draws uniformly with replacement from the pool entries of the sample's
// own class, freshly per epoch (seeded by seed and epoch); zero_fill uses an
// all-zeros payload; drop_incomplete removes masked samples; none leaves
// them absent.
ImputedView impute_epoch(const std::vector<MultimodalSample>& source, const MaskPlan& plan,
                         const ImputationStrategy& strategy, int epoch, std::uint64_t seed);

// Appends {epoch, sample_id, asset_id} rows.
void append_assignment_log(const std::filesystem::path& path, const ImputedView& view);

}  // namespace mmimpute
