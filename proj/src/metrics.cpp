// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
#include "mmimpute/metrics.hpp"

#include <algorithm>
#include <set>

#include "mmimpute/error.hpp"

namespace mmimpute {

MetricReport compute_metrics(const std::vector<Eigen::VectorXd>& logits, const std::vector<int>& labels,
                             int num_classes, const std::vector<int>& ks) {
  if (logits.empty()) throw ValidationError("compute_metrics: no predictions");
  if (logits.size() != labels.size()) {
    throw ValidationError("compute_metrics: " + std::to_string(logits.size()) + " predictions but " +
                          std::to_string(labels.size()) + " labels");
  }
  if (num_classes <= 0) throw ValidationError("compute_metrics: num_classes must be positive");
  std::set<int> kset(ks.begin(), ks.end());
  kset.insert(1);
  for (int k : kset) {
    if (k < 1) throw ValidationError("compute_metrics: k must be >= 1");
  }

  std::vector<long> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0), support(num_classes, 0);
  std::map<int, long> hits;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const auto& z = logits[i];
    const int y = labels[i];
    if (z.size() != num_classes) throw ValidationError("compute_metrics: logit vector has wrong length");
    if (y < 0 || y >= num_classes) throw ValidationError("compute_metrics: label out of range");
    // rank = number of classes ordered before y
    int rank = 0;
    int pred = 0;
    for (int c = 0; c < num_classes; ++c) {
      if (z(c) > z(y) || (z(c) == z(y) && c < y)) ++rank;
      if (z(c) > z(pred)) pred = c;
    }
    for (int k : kset) hits[k] += rank < k;
    ++support[y];
    if (pred == y) {
      ++tp[y];
    } else {
      ++fp[pred];
      ++fn[y];
    }
  }

  MetricReport r;
  const double n = static_cast<double>(logits.size());
  for (int k : kset) r.topk[k] = static_cast<double>(hits[k]) / n;
  r.top1 = r.topk.at(1);
  double f1_sum = 0.0;
  r.per_class_accuracy.resize(num_classes, 0.0);
  for (int c = 0; c < num_classes; ++c) {
    const long denom = 2 * tp[c] + fp[c] + fn[c];
    f1_sum += denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom);
    r.per_class_accuracy[c] = support[c] == 0 ? 0.0 : static_cast<double>(tp[c]) / static_cast<double>(support[c]);
  }
  r.macro_f1 = f1_sum / num_classes;
  return r;
}

}  // namespace mmimpute
