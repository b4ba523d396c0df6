#pragma once

// Minimal SVG renderer: line plots (linear/log x), shaded bands, heatmaps.
// Deterministic output, no timestamps, so identical inputs give identical
// bytes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "delayfb/errors.hpp"

namespace delayfb::svg {

struct Series {
  std::vector<double> x, y;
  std::string color = "#1f77b4";
  std::string label;
  double width = 1.5;
  bool dashed = false;
};

struct Band {
  std::vector<double> x, lower, upper;
  std::string color = "#1f77b4";
  double opacity = 0.25;
};

class Plot {
 public:
  Plot(std::string title, std::string xlabel, std::string ylabel, bool log_x = false)
      : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)),
        log_x_(log_x) {}

  void add(Series s) { series_.push_back(std::move(s)); }
  void add(Band b) { bands_.push_back(std::move(b)); }

  std::string render(int width = 860, int height = 540) const {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    auto scan = [&](const std::vector<double>& xs, const std::vector<double>& ys) {
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) continue;
        xmin = std::min(xmin, xs[i]);
        xmax = std::max(xmax, xs[i]);
        ymin = std::min(ymin, ys[i]);
        ymax = std::max(ymax, ys[i]);
      }
    };
    for (const auto& s : series_) scan(s.x, s.y);
    for (const auto& b : bands_) {
      scan(b.x, b.lower);
      scan(b.x, b.upper);
    }
    if (xmin > xmax) throw Error("svg: nothing to plot");
    if (ymin == ymax) {
      ymin -= 1;
      ymax += 1;
    }
    const double pad_y = 0.06 * (ymax - ymin);
    ymin -= pad_y;
    ymax += pad_y;

    const int ml = 78, mr = 24, mt = 42, mb = 58;
    const double pw = width - ml - mr, ph = height - mt - mb;
    auto tx = [&](double x) {
      const double u = log_x_ ? (std::log10(x) - std::log10(xmin)) /
                                    (std::log10(xmax) - std::log10(xmin))
                              : (x - xmin) / (xmax - xmin);
      return ml + u * pw;
    };
    auto ty = [&](double y) { return mt + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

    std::ostringstream os;
    os.precision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\" "
          "font-family=\"sans-serif\">"
       << title_ << "</text>\n";

    // axes + ticks
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double f : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const double y = ymin + f * (ymax - ymin);
      os << "<line x1=\"" << ml - 4 << "\" y1=\"" << ty(y) << "\" x2=\"" << ml << "\" y2=\""
         << ty(y) << "\" stroke=\"black\"/>\n";
      os << "<text x=\"" << ml - 8 << "\" y=\"" << ty(y) + 4
         << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
         << short_num(y) << "</text>\n";
      const double x = log_x_ ? std::pow(10.0, std::log10(xmin) +
                                                   f * (std::log10(xmax) - std::log10(xmin)))
                              : xmin + f * (xmax - xmin);
      os << "<line x1=\"" << tx(x) << "\" y1=\"" << mt + ph << "\" x2=\"" << tx(x) << "\" y2=\""
         << mt + ph + 4 << "\" stroke=\"black\"/>\n";
      os << "<text x=\"" << tx(x) << "\" y=\"" << mt + ph + 18
         << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
         << short_num(x) << "</text>\n";
    }
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 16
       << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" << xlabel_
       << "</text>\n";
    os << "<text x=\"20\" y=\"" << mt + ph / 2
       << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" "
          "transform=\"rotate(-90 20 "
       << mt + ph / 2 << ")\">" << ylabel_ << "</text>\n";

    for (const auto& b : bands_) {
      os << "<polygon fill=\"" << b.color << "\" fill-opacity=\"" << b.opacity
         << "\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < b.x.size(); ++i)
        os << tx(b.x[i]) << "," << ty(b.upper[i]) << " ";
      for (std::size_t i = b.x.size(); i-- > 0;)
        os << tx(b.x[i]) << "," << ty(b.lower[i]) << " ";
      os << "\"/>\n";
    }
    for (const auto& s : series_) {
      os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"" << s.width
         << "\"";
      if (s.dashed) os << " stroke-dasharray=\"6 4\"";
      os << " points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.y[i])) continue;
        os << tx(s.x[i]) << "," << ty(s.y[i]) << " ";
      }
      os << "\"/>\n";
    }
    // legend
    int ly = mt + 14;
    for (const auto& s : series_) {
      if (s.label.empty()) continue;
      os << "<line x1=\"" << ml + 10 << "\" y1=\"" << ly << "\" x2=\"" << ml + 34 << "\" y2=\""
         << ly << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"";
      if (s.dashed) os << " stroke-dasharray=\"6 4\"";
      os << "/>\n<text x=\"" << ml + 40 << "\" y=\"" << ly + 4
         << "\" font-size=\"11\" font-family=\"sans-serif\">" << s.label << "</text>\n";
      ly += 16;
    }
    os << "</svg>\n";
    return os.str();
  }

  void write(const std::string& path, int width = 860, int height = 540) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    out << render(width, height);
  }

 private:
  static std::string short_num(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
  }

  std::string title_, xlabel_, ylabel_;
  bool log_x_;
  std::vector<Series> series_;
  std::vector<Band> bands_;
};

/// Heatmap over a rectilinear grid; values mapped through a blue-white-red
/// ramp centered on `center` (useful for T_eff/T0 maps around 1).
class Heatmap {
 public:
  Heatmap(std::string title, std::string xlabel, std::string ylabel)
      : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

  // values[iy][ix]
  void set_data(std::vector<double> xs, std::vector<double> ys,
                std::vector<std::vector<double>> values, double center) {
    xs_ = std::move(xs);
    ys_ = std::move(ys);
    values_ = std::move(values);
    center_ = center;
  }

  void add_overlay(Series s) { overlays_.push_back(std::move(s)); }

  std::string render(int width = 900, int height = 620) const {
    if (xs_.empty() || ys_.empty()) throw Error("heatmap: no data");
    double vmin = 1e300, vmax = -1e300;
    for (const auto& row : values_)
      for (double v : row)
        if (std::isfinite(v)) {
          vmin = std::min(vmin, v);
          vmax = std::max(vmax, v);
        }
    const double span = std::max(vmax - center_, center_ - vmin);
    const int ml = 84, mr = 30, mt = 44, mb = 60;
    const double pw = width - ml - mr, ph = height - mt - mb;
    auto tx = [&](double lx) {
      return ml + (lx - std::log10(xs_.front())) /
                      (std::log10(xs_.back()) - std::log10(xs_.front())) * pw;
    };
    auto ty = [&](double ly) {
      return mt + (1.0 - (ly - std::log10(ys_.front())) /
                             (std::log10(ys_.back()) - std::log10(ys_.front()))) *
                      ph;
    };
    std::ostringstream os;
    os.precision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"26\" text-anchor=\"middle\" font-size=\"15\" "
          "font-family=\"sans-serif\">"
       << title_ << "</text>\n";
    for (std::size_t iy = 0; iy < ys_.size(); ++iy) {
      for (std::size_t ix = 0; ix < xs_.size(); ++ix) {
        const double v = values_[iy][ix];
        const double x0 = edge(xs_, ix, false), x1 = edge(xs_, ix, true);
        const double y0 = edge(ys_, iy, false), y1 = edge(ys_, iy, true);
        os << "<rect x=\"" << tx(x0) << "\" y=\"" << ty(y1) << "\" width=\""
           << tx(x1) - tx(x0) + 0.5 << "\" height=\"" << ty(y0) - ty(y1) + 0.5 << "\" fill=\""
           << (std::isfinite(v) ? ramp((v - center_) / (span > 0 ? span : 1.0)) : "#bbbbbb")
           << "\"/>\n";
      }
    }
    for (const auto& s : overlays_) {
      os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"" << s.width
         << "\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        os << tx(std::log10(s.x[i])) << "," << ty(std::log10(s.y[i])) << " ";
      }
      os << "\"/>\n";
    }
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 18
       << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" << xlabel_
       << "</text>\n";
    os << "<text x=\"22\" y=\"" << mt + ph / 2
       << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" "
          "transform=\"rotate(-90 22 "
       << mt + ph / 2 << ")\">" << ylabel_ << "</text>\n";
    os << "</svg>\n";
    return os.str();
  }

  void write(const std::string& path, int width = 900, int height = 620) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    out << render(width, height);
  }

 private:
  double edge(const std::vector<double>& v, std::size_t i, bool upper) const {
    const auto lg = [&](std::size_t k) { return std::log10(v[k]); };
    if (!upper) return i == 0 ? lg(0) - 0.5 * (lg(1) - lg(0)) : 0.5 * (lg(i - 1) + lg(i));
    const std::size_t n = v.size();
    return i + 1 == n ? lg(n - 1) + 0.5 * (lg(n - 1) - lg(n - 2)) : 0.5 * (lg(i) + lg(i + 1));
  }

  static std::string ramp(double u) {
    u = std::clamp(u, -1.0, 1.0);
    int r, g, b;
    if (u < 0) {  // blue -> white
      const double t = 1.0 + u;
      r = int(255 * (0.23 + 0.77 * t));
      g = int(255 * (0.40 + 0.60 * t));
      b = 255;
    } else {  // white -> red
      const double t = 1.0 - u;
      r = 255;
      g = int(255 * (0.26 + 0.74 * t));
      b = int(255 * (0.23 + 0.77 * t));
    }
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
  }

  std::string title_, xlabel_, ylabel_;
  std::vector<double> xs_, ys_;
  std::vector<std::vector<double>> values_;
  std::vector<Series> overlays_;
  double center_ = 0.0;
};

}  // namespace delayfb::svg
