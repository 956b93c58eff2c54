// SPDX-License-Identifier: Apache-2.0
#include "qcl/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "qcl/metrics.hpp"

namespace qcl {

namespace {

std::string g6(double v) {
  char b[32];
  std::snprintf(b, sizeof(b), "%.6g", v);
  return b;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out.push_back(c);
  }
  return out;
}

}  // namespace

PlotSeries compute_plot_series(const Eigen::Ref<const Eigen::VectorXd>& series,
                               int window) {
  const Eigen::Index n = series.size();
  if (n < 1) throw std::invalid_argument("compute_plot_series: empty series");
  const int w = std::max(1, std::min(window, static_cast<int>(n)));
  const WindowStats ws = moving_stats(series, w);
  PlotSeries out;
  out.raw = series;
  out.mean = ws.mean;
  out.lo = ws.mean - ws.stddev;
  out.hi = ws.mean + ws.stddev;
  out.x.resize(ws.mean.size());
  for (Eigen::Index i = 0; i < out.x.size(); ++i)
    out.x[i] = static_cast<double>(i) + (w - 1) / 2.0;
  return out;
}

std::string render_line_plot(const std::string& title, const std::string& y_label,
                             const std::vector<NamedSeries>& series) {
  if (series.empty()) throw std::invalid_argument("render_line_plot: no series");
  for (const auto& ns : series) {
    const PlotSeries& s = ns.series;
    if (s.raw.size() < 1 || s.mean.size() < 1 || s.mean.size() != s.x.size())
      throw std::invalid_argument("render_line_plot: malformed series");
  }
  static const char* kMeanColor[] = {"#1f77b4", "#d62728", "#2ca02c",
                                     "#9467bd", "#8c564b", "#e377c2"};
  static const char* kBandColor[] = {"#7aa6d2", "#e08a8a", "#8fcf9f",
                                     "#c0a8dc", "#bf9e97", "#eeafd8"};
  constexpr int kPalette = 6;
  const double kW = 720.0, kH = 440.0;
  const double ml = 72.0, mr = 24.0, mt = 48.0, mb = 56.0;

  const double xmin = 0.0;
  double xmax = 1.0;
  double ymin = series[0].series.raw.minCoeff();
  double ymax = series[0].series.raw.maxCoeff();
  for (const auto& ns : series) {
    const PlotSeries& s = ns.series;
    if (s.raw.size() > 1) xmax = std::max(xmax, static_cast<double>(s.raw.size() - 1));
    ymin = std::min({ymin, s.raw.minCoeff(), s.lo.minCoeff()});
    ymax = std::max({ymax, s.raw.maxCoeff(), s.hi.maxCoeff()});
  }
  if (!(ymax > ymin)) {
    const double bump = std::max(1e-12, std::abs(ymax) * 0.1 + 1e-12);
    ymin -= bump;
    ymax += bump;
  } else {
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
  }

  const auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (kW - ml - mr); };
  const auto py = [&](double y) { return kH - mb - (y - ymin) / (ymax - ymin) * (kH - mt - mb); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"440\" "
       "viewBox=\"0 0 720 440\" font-family=\"Helvetica,Arial,sans-serif\">\n";
  o << "<rect x=\"0\" y=\"0\" width=\"720\" height=\"440\" fill=\"#ffffff\"/>\n";
  o << "<text x=\"360\" y=\"26\" text-anchor=\"middle\" font-size=\"16\" fill=\"#202020\">"
    << xml_escape(title) << "</text>\n";
  o << "<text x=\"18\" y=\"216\" text-anchor=\"middle\" font-size=\"12\" fill=\"#202020\" "
       "transform=\"rotate(-90 18 216)\">"
    << xml_escape(y_label) << "</text>\n";
  o << "<text x=\"384\" y=\"430\" text-anchor=\"middle\" font-size=\"12\" "
       "fill=\"#202020\">task</text>\n";
  o << "<rect x=\"" << g6(ml) << "\" y=\"" << g6(mt) << "\" width=\"" << g6(kW - ml - mr)
    << "\" height=\"" << g6(kH - mt - mb) << "\" fill=\"none\" stroke=\"#808080\"/>\n";

  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    o << "<line x1=\"" << g6(px(xv)) << "\" y1=\"" << g6(kH - mb) << "\" x2=\""
      << g6(px(xv)) << "\" y2=\"" << g6(kH - mb + 4) << "\" stroke=\"#808080\"/>\n";
    o << "<text x=\"" << g6(px(xv)) << "\" y=\"" << g6(kH - mb + 18)
      << "\" text-anchor=\"middle\" font-size=\"11\" fill=\"#404040\">" << g6(xv)
      << "</text>\n";
    o << "<line x1=\"" << g6(ml - 4) << "\" y1=\"" << g6(py(yv)) << "\" x2=\"" << g6(ml)
      << "\" y2=\"" << g6(py(yv)) << "\" stroke=\"#808080\"/>\n";
    o << "<text x=\"" << g6(ml - 8) << "\" y=\"" << g6(py(yv) + 4)
      << "\" text-anchor=\"end\" font-size=\"11\" fill=\"#404040\">" << g6(yv)
      << "</text>\n";
  }

  for (size_t k = 0; k < series.size(); ++k) {
    const PlotSeries& s = series[k].series;
    const char* band = kBandColor[k % kPalette];
    if (s.x.size() >= 2) {
      o << "<polygon fill=\"" << band << "\" fill-opacity=\"0.35\" stroke=\"none\" points=\"";
      for (Eigen::Index i = 0; i < s.x.size(); ++i)
        o << g6(px(s.x[i])) << "," << g6(py(s.hi[i])) << " ";
      for (Eigen::Index i = s.x.size(); i-- > 0;)
        o << g6(px(s.x[i])) << "," << g6(py(s.lo[i])) << (i ? " " : "");
      o << "\"/>\n";
    }
  }

  if (series.size() == 1 && series[0].series.raw.size() >= 2) {
    const PlotSeries& s = series[0].series;
    const Eigen::Index n = s.raw.size();
    o << "<polyline fill=\"none\" stroke=\"#b8b8b8\" stroke-width=\"1\" points=\"";
    for (Eigen::Index i = 0; i < n; ++i)
      o << g6(px(static_cast<double>(i))) << "," << g6(py(s.raw[i])) << (i + 1 < n ? " " : "");
    o << "\"/>\n";
  }

  for (size_t k = 0; k < series.size(); ++k) {
    const PlotSeries& s = series[k].series;
    const char* color = kMeanColor[k % kPalette];
    if (s.x.size() >= 2) {
      o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
      for (Eigen::Index i = 0; i < s.x.size(); ++i)
        o << g6(px(s.x[i])) << "," << g6(py(s.mean[i])) << (i + 1 < s.x.size() ? " " : "");
      o << "\"/>\n";
    } else {
      o << "<circle cx=\"" << g6(px(s.x[0])) << "\" cy=\"" << g6(py(s.mean[0]))
        << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
  }

  double ly = mt + 16.0;
  for (size_t k = 0; k < series.size(); ++k) {
    if (series[k].label.empty()) continue;
    const char* color = kMeanColor[k % kPalette];
    o << "<line x1=\"" << g6(kW - mr - 150) << "\" y1=\"" << g6(ly - 4) << "\" x2=\""
      << g6(kW - mr - 126) << "\" y2=\"" << g6(ly - 4) << "\" stroke=\"" << color
      << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << g6(kW - mr - 120) << "\" y=\"" << g6(ly)
      << "\" font-size=\"12\" fill=\"#202020\">" << xml_escape(series[k].label)
      << "</text>\n";
    ly += 18.0;
  }

  o << "</svg>\n";
  return o.str();
}

std::string render_line_plot(const std::string& title, const std::string& y_label,
                             const PlotSeries& series) {
  return render_line_plot(title, y_label, std::vector<NamedSeries>{{"", series}});
}

}  // namespace qcl
