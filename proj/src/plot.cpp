// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
#include "mmimpute/plot.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "glyphs.hpp"
#include "mmimpute/error.hpp"
#include "mmimpute/payload.hpp"

namespace mmimpute {

namespace {

struct Rgb {
  std::uint8_t r, g, b;
};

constexpr std::array<Rgb, 6> kPalette{{{31, 119, 180}, {214, 39, 40}, {44, 160, 44},
                                       {148, 103, 189}, {255, 127, 14}, {23, 23, 23}}};
// on/off run lengths in pixels; {0} = solid
const std::array<std::vector<int>, 5> kDashes{{{0}, {8, 5}, {2, 4}, {10, 4, 2, 4}, {14, 6}}};

Rgb color_of(int style) { return kPalette[static_cast<std::size_t>(style) % kPalette.size()]; }
const std::vector<int>& dash_of(int style) { return kDashes[static_cast<std::size_t>(style) % kDashes.size()]; }

struct Frame {
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;  // data bounds
  int left = 64, right = 170, top = 36, bottom = 52;
  int width = 640, height = 420;

  double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
  double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

Frame make_frame(const PlotSpec& spec) {
  Frame f;
  f.width = spec.width;
  f.height = spec.height;
  bool any = false;
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  for (const auto& s : spec.series) {
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      const double e = i < s.errors.size() ? s.errors[i] : 0.0;
      if (!any) {
        xmin = xmax = s.xs[i];
        ymin = s.ys[i] - e;
        ymax = s.ys[i] + e;
        any = true;
      }
      xmin = std::min(xmin, s.xs[i]);
      xmax = std::max(xmax, s.xs[i]);
      ymin = std::min(ymin, s.ys[i] - e);
      ymax = std::max(ymax, s.ys[i] + e);
    }
  }
  if (!spec.x_categories.empty()) {
    xmin = 0;
    xmax = static_cast<double>(spec.x_categories.size() - 1);
  }
  if (!any) return f;
  if (xmax - xmin < 1e-12) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  const double pad = std::max(ymax - ymin, 1e-3) * 0.08;
  f.x0 = xmin - (xmax - xmin) * 0.04;
  f.x1 = xmax + (xmax - xmin) * 0.04;
  f.y0 = ymin - pad;
  f.y1 = ymax + pad;
  return f;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::vector<double> ticks(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i <= n; ++i) out.push_back(lo + (hi - lo) * i / n);
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string dash_attr(int style) {
  const auto& d = dash_of(style);
  if (d.size() == 1) return "";
  std::string s = " stroke-dasharray=\"";
  for (std::size_t i = 0; i < d.size(); ++i) s += (i ? "," : "") + std::to_string(d[i]);
  return s + "\"";
}

std::string rgb(Rgb c) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

std::vector<std::pair<double, std::string>> x_ticks(const PlotSpec& spec, const Frame& f) {
  std::vector<std::pair<double, std::string>> out;
  if (!spec.x_categories.empty()) {
    for (std::size_t i = 0; i < spec.x_categories.size(); ++i) out.emplace_back(i, spec.x_categories[i]);
    return out;
  }
  std::vector<double> xs;
  for (const auto& s : spec.series) xs.insert(xs.end(), s.xs.begin(), s.xs.end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  if (xs.size() > 12 || xs.empty()) xs = ticks(f.x0, f.x1, 5);
  for (double x : xs) out.emplace_back(x, fmt(x));
  return out;
}

// Minimal raster canvas.
class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), pixels_(static_cast<std::size_t>(w) * h * 3, 255) {}

  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
    auto* p = &pixels_[(static_cast<std::size_t>(y) * w_ + x) * 3];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  void line(double x0, double y0, double x1, double y1, Rgb c, const std::vector<int>& dash, int thick,
            double* phase) {
    const double len = std::hypot(x1 - x0, y1 - y0);
    const int steps = std::max(1, static_cast<int>(std::ceil(len)));
    int period = 0;
    for (int d : dash) period += d;
    for (int i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      const double pos = *phase + t * len;
      if (period > 0 && !on(dash, std::fmod(pos, period))) continue;
      const int x = static_cast<int>(std::lround(x0 + t * (x1 - x0)));
      const int y = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
      for (int dx = -(thick / 2); dx <= thick / 2; ++dx) {
        for (int dy = -(thick / 2); dy <= thick / 2; ++dy) set(x + dx, y + dy, c);
      }
    }
    *phase += len;
  }

  void marker(double x, double y, int style, Rgb c) {
    const int cx = static_cast<int>(std::lround(x));
    const int cy = static_cast<int>(std::lround(y));
    for (int dx = -3; dx <= 3; ++dx) {
      for (int dy = -3; dy <= 3; ++dy) {
        const bool ink = style % 2 == 0 ? dx * dx + dy * dy <= 10 : true;
        if (ink) set(cx + dx, cy + dy, c);
      }
    }
  }

  void text(int x, int y, const std::string& s, Rgb c) {
    for (char ch : s) {
      const int code = static_cast<unsigned char>(ch);
      if (code >= 32 && code < 127) {
        const auto& g = detail::kGlyphs[code - 32];
        for (int gy = 0; gy < detail::kGlyphHeight; ++gy) {
          for (int gx = 0; gx < detail::kGlyphWidth; ++gx) {
            if (g[gy] & (1u << gx)) set(x + gx, y + gy, c);
          }
        }
      }
      x += detail::kGlyphWidth;
    }
  }

  std::string encode() const {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w_);
    image.height = static_cast<png_uint_32>(h_);
    image.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels_.data(), 0, nullptr)) {
      throw BackendError(std::string("png encode failed: ") + image.message);
    }
    std::string out(size, '\0');
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels_.data(), 0, nullptr)) {
      throw BackendError(std::string("png encode failed: ") + image.message);
    }
    out.resize(size);
    return out;
  }

 private:
  static bool on(const std::vector<int>& dash, double pos) {
    bool ink = true;
    for (int d : dash) {
      if (pos < d) return ink;
      pos -= d;
      ink = !ink;
    }
    return ink;
  }

  int w_, h_;
  std::vector<std::uint8_t> pixels_;
};

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  const Frame f = make_frame(spec);
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\"" << f.height
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << f.width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << xml_escape(spec.title)
     << "</text>\n";
  const double xl = f.left, xr = f.width - f.right, yt = f.top, yb = f.height - f.bottom;
  os << "<rect x=\"" << xl << "\" y=\"" << yt << "\" width=\"" << xr - xl << "\" height=\"" << yb - yt
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (const auto& [x, label] : x_ticks(spec, f)) {
    os << "<line x1=\"" << f.px(x) << "\" y1=\"" << yb << "\" x2=\"" << f.px(x) << "\" y2=\"" << yb + 4
       << "\" stroke=\"#444\"/>\n";
    os << "<text x=\"" << f.px(x) << "\" y=\"" << yb + 16 << "\" text-anchor=\"middle\">" << xml_escape(label)
       << "</text>\n";
  }
  for (double y : ticks(f.y0, f.y1, 5)) {
    os << "<line x1=\"" << xl - 4 << "\" y1=\"" << f.py(y) << "\" x2=\"" << xl << "\" y2=\"" << f.py(y)
       << "\" stroke=\"#444\"/>\n";
    os << "<text x=\"" << xl - 6 << "\" y=\"" << f.py(y) + 4 << "\" text-anchor=\"end\">" << fmt(y) << "</text>\n";
  }
  os << "<text x=\"" << (xl + xr) / 2 << "\" y=\"" << f.height - 10 << "\" text-anchor=\"middle\">"
     << xml_escape(spec.x_label) << "</text>\n";
  os << "<text transform=\"translate(14," << (yt + yb) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << xml_escape(spec.y_label) << "</text>\n";

  int legend_y = f.top + 8;
  for (const auto& s : spec.series) {
    const auto color = rgb(color_of(s.style));
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"" << dash_attr(s.style)
       << " points=\"";
    for (std::size_t i = 0; i < s.xs.size(); ++i) os << (i ? " " : "") << f.px(s.xs[i]) << "," << f.py(s.ys[i]);
    os << "\"/>\n";
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (i < s.errors.size() && s.errors[i] > 0) {
        os << "<line x1=\"" << f.px(s.xs[i]) << "\" y1=\"" << f.py(s.ys[i] - s.errors[i]) << "\" x2=\""
           << f.px(s.xs[i]) << "\" y2=\"" << f.py(s.ys[i] + s.errors[i]) << "\" stroke=\"" << color << "\"/>\n";
      }
      if (s.style % 2 == 0) {
        os << "<circle cx=\"" << f.px(s.xs[i]) << "\" cy=\"" << f.py(s.ys[i]) << "\" r=\"3\" fill=\"" << color
           << "\"/>\n";
      } else {
        os << "<rect x=\"" << f.px(s.xs[i]) - 3 << "\" y=\"" << f.py(s.ys[i]) - 3
           << "\" width=\"6\" height=\"6\" fill=\"" << color << "\"/>\n";
      }
    }
    os << "<line x1=\"" << xr + 10 << "\" y1=\"" << legend_y << "\" x2=\"" << xr + 34 << "\" y2=\"" << legend_y
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"" << dash_attr(s.style) << "/>\n";
    os << "<text x=\"" << xr + 38 << "\" y=\"" << legend_y + 4 << "\">" << xml_escape(s.label) << "</text>\n";
    legend_y += 16;
  }
  os << "</svg>\n";
  return os.str();
}

std::string render_png(const PlotSpec& spec) {
  const Frame f = make_frame(spec);
  Canvas c(f.width, f.height);
  const Rgb ink{68, 68, 68};
  const double xl = f.left, xr = f.width - f.right, yt = f.top, yb = f.height - f.bottom;
  double phase = 0;
  const std::vector<int> solid{0};
  c.line(xl, yt, xr, yt, ink, solid, 1, &phase);
  c.line(xr, yt, xr, yb, ink, solid, 1, &phase);
  c.line(xr, yb, xl, yb, ink, solid, 1, &phase);
  c.line(xl, yb, xl, yt, ink, solid, 1, &phase);
  c.text(f.width / 2 - static_cast<int>(spec.title.size()) * 3, 10, spec.title, ink);
  for (const auto& [x, label] : x_ticks(spec, f)) {
    c.line(f.px(x), yb, f.px(x), yb + 4, ink, solid, 1, &phase);
    c.text(static_cast<int>(f.px(x)) - static_cast<int>(label.size()) * 3, static_cast<int>(yb) + 6, label, ink);
  }
  for (double y : ticks(f.y0, f.y1, 5)) {
    const auto label = fmt(y);
    c.line(xl - 4, f.py(y), xl, f.py(y), ink, solid, 1, &phase);
    c.text(static_cast<int>(xl) - 6 - static_cast<int>(label.size()) * 6, static_cast<int>(f.py(y)) - 6, label, ink);
  }
  c.text(static_cast<int>((xl + xr) / 2) - static_cast<int>(spec.x_label.size()) * 3, f.height - 20, spec.x_label, ink);
  c.text(4, static_cast<int>(yt) - 16, spec.y_label, ink);

  int legend_y = f.top + 8;
  for (const auto& s : spec.series) {
    const auto color = color_of(s.style);
    phase = 0;
    for (std::size_t i = 1; i < s.xs.size(); ++i) {
      c.line(f.px(s.xs[i - 1]), f.py(s.ys[i - 1]), f.px(s.xs[i]), f.py(s.ys[i]), color, dash_of(s.style), 2, &phase);
    }
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (i < s.errors.size() && s.errors[i] > 0) {
        double ph = 0;
        c.line(f.px(s.xs[i]), f.py(s.ys[i] - s.errors[i]), f.px(s.xs[i]), f.py(s.ys[i] + s.errors[i]), color, solid,
               1, &ph);
      }
      c.marker(f.px(s.xs[i]), f.py(s.ys[i]), s.style, color);
    }
    phase = 0;
    c.line(xr + 10, legend_y, xr + 34, legend_y, color, dash_of(s.style), 2, &phase);
    c.text(static_cast<int>(xr) + 38, legend_y - 6, s.label, ink);
    legend_y += 16;
  }
  return c.encode();
}

std::vector<std::filesystem::path> write_plot(const PlotSpec& spec, const std::filesystem::path& stem) {
  auto svg = stem;
  svg += ".svg";
  auto png = stem;
  png += ".png";
  write_file_atomic(svg, render_svg(spec));
  write_file_atomic(png, render_png(spec));
  return {svg, png};
}

}  // namespace mmimpute
