#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rtpt/errors.hpp"

namespace rtpt {

// Minimal SVG emission for the two diagnostic figures the harness supports:
// per-view ensembling weight bars and hyperparameter sensitivity curves.

namespace detail {

inline std::string svg_header(int w, int h, const std::string& title) {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << " " << h << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << w / 2 << "\" y=\"16\" text-anchor=\"middle\" font-size=\"13\" "
      << "font-family=\"sans-serif\">" << title << "</text>\n";
  return out.str();
}

}  // namespace detail

/// Bar chart of per-view ensembling weights. Index 0 (the original test
/// instance) is drawn in a distinct color and a dashed rule marks the
/// uniform weight 1/(N+1).
inline void write_weight_bars_svg(const Eigen::VectorXd& weights, const std::string& path,
                                  const std::string& title = "per-view ensembling weights") {
  if (weights.size() == 0) throw InputError("no weights to plot");
  const int w = 640, h = 320, left = 40, bottom = 40, top = 30;
  const int plot_w = w - left - 20, plot_h = h - top - bottom;
  const double wmax = std::max(weights.maxCoeff(), 1e-12);
  const double uniform = 1.0 / static_cast<double>(weights.size());

  std::ofstream out(path);
  if (!out) throw InputError("cannot open plot file: " + path);
  out << detail::svg_header(w, h, title);
  const double bar_w = static_cast<double>(plot_w) / static_cast<double>(weights.size());
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    const double frac = weights[i] / wmax;
    const double bh = frac * plot_h;
    out << "<rect x=\"" << left + static_cast<double>(i) * bar_w << "\" y=\""
        << top + plot_h - bh << "\" width=\"" << std::max(bar_w - 1.0, 0.5)
        << "\" height=\"" << bh << "\" fill=\"" << (i == 0 ? "#c0392b" : "#2e86c1")
        << "\"/>\n";
  }
  const double uy = top + plot_h - (uniform / wmax) * plot_h;
  out << "<line x1=\"" << left << "\" y1=\"" << uy << "\" x2=\"" << left + plot_w
      << "\" y2=\"" << uy << "\" stroke=\"#555\" stroke-dasharray=\"5,4\"/>\n"
      << "<text x=\"" << left + plot_w << "\" y=\"" << uy - 4
      << "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">uniform "
      << uniform << "</text>\n"
      << "<text x=\"" << left << "\" y=\"" << h - 8
      << "\" font-size=\"10\" font-family=\"sans-serif\">view index (0 = original, red)"
      << "</text>\n</svg>\n";
}

/// Line chart with one series per label; x values shared across series.
inline void write_curves_svg(const std::vector<double>& xs,
                             const std::map<std::string, std::vector<double>>& series,
                             const std::string& path, const std::string& title,
                             const std::string& x_label, const std::string& y_label) {
  if (xs.size() < 2 || series.empty()) throw InputError("need >= 2 points to plot curves");
  const int w = 640, h = 360, left = 50, bottom = 46, top = 30;
  const int plot_w = w - left - 130, plot_h = h - top - bottom;

  double ymin = 1e300, ymax = -1e300;
  for (const auto& [label, ys] : series) {
    if (ys.size() != xs.size()) throw InputError("series length mismatch: " + label);
    for (double v : ys) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  if (ymax - ymin < 1e-12) {
    ymax += 1.0;
    ymin -= 1.0;
  }
  const double xmin = xs.front(), xmax = xs.back();
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * plot_w; };
  auto py = [&](double y) { return top + plot_h - (y - ymin) / (ymax - ymin) * plot_h; };

  static const char* kColors[] = {"#c0392b", "#2e86c1", "#27ae60", "#8e44ad",
                                  "#d68910", "#17202a"};
  std::ofstream out(path);
  if (!out) throw InputError("cannot open plot file: " + path);
  out << detail::svg_header(w, h, title);
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"#999\"/>\n";
  int color = 0;
  for (const auto& [label, ys] : series) {
    std::ostringstream pts;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      pts << px(xs[i]) << "," << py(ys[i]) << " ";
    }
    const char* col = kColors[color % 6];
    out << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << col
        << "\" stroke-width=\"2\"/>\n";
    for (std::size_t i = 0; i < xs.size(); ++i) {
      out << "<circle cx=\"" << px(xs[i]) << "\" cy=\"" << py(ys[i])
          << "\" r=\"3\" fill=\"" << col << "\"/>\n";
    }
    out << "<text x=\"" << left + plot_w + 8 << "\" y=\"" << top + 14 + 16 * color
        << "\" font-size=\"11\" font-family=\"sans-serif\" fill=\"" << col << "\">"
        << label << "</text>\n";
    ++color;
  }
  out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << h - 10
      << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
      << x_label << "</text>\n"
      << "<text x=\"14\" y=\"" << top + plot_h / 2
      << "\" font-size=\"11\" font-family=\"sans-serif\" transform=\"rotate(-90 14 "
      << top + plot_h / 2 << ")\" text-anchor=\"middle\">" << y_label << "</text>\n"
      << "<text x=\"" << left << "\" y=\"" << top + plot_h + 14
      << "\" font-size=\"10\" font-family=\"sans-serif\">" << xmin << "</text>\n"
      << "<text x=\"" << left + plot_w << "\" y=\"" << top + plot_h + 14
      << "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">" << xmax
      << "</text>\n"
      << "<text x=\"" << left - 4 << "\" y=\"" << py(ymin)
      << "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">" << ymin
      << "</text>\n"
      << "<text x=\"" << left - 4 << "\" y=\"" << py(ymax) + 8
      << "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">" << ymax
      << "</text>\n</svg>\n";
}

}  // namespace rtpt
