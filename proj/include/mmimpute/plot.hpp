// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace mmimpute {

struct PlotSeries {
  std::string label;
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> errors;  // optional, same length as ys
  int style = 0;               // selects the dash pattern and marker
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  // When non-empty, x values are indices into these tick labels.
  std::vector<std::string> x_categories;
  int width = 640;
  int height = 420;
};

std::string render_svg(const PlotSpec& spec);
// 8-bit RGB PNG bytes.
std::string render_png(const PlotSpec& spec);
// Writes <stem>.svg and <stem>.png; returns both paths.
std::vector<std::filesystem::path> write_plot(const PlotSpec& spec, const std::filesystem::path& stem);

}  // namespace mmimpute
