// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mmimpute {

struct MetricReport {
  double top1 = 0.0;
  std::map<int, double> topk;  // always contains k = 1
  double macro_f1 = 0.0;
  std::vector<double> per_class_accuracy;
  std::uint64_t seed = 0;
  std::string config_hash;
};

// Rank of the true label counts ties toward the lower class index, so a hit
// at k means fewer than k classes beat the true label under that ordering.
// Macro-F1 averages 2tp / (2tp + fp + fn) over classes, 0 where undefined.
MetricReport compute_metrics(const std::vector<Eigen::VectorXd>& logits, const std::vector<int>& labels,
                             int num_classes, const std::vector<int>& ks = {1});

}  // namespace mmimpute
