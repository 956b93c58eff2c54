// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace qcl {

/// Raw series plus its moving mean and a +/- one-std band. Smoothed points
/// sit at the window centers.
struct PlotSeries {
  Eigen::VectorXd raw;
  Eigen::VectorXd x;
  Eigen::VectorXd mean;
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

/// Window is clamped to the series length.
PlotSeries compute_plot_series(const Eigen::Ref<const Eigen::VectorXd>& series,
                               int window);

struct NamedSeries {
  std::string label;
  PlotSeries series;
};

/// Self-contained SVG: per series a band polygon and a smoothed polyline,
/// plus a legend when labels are present; a lone series also shows its raw
/// polyline. Output depends only on the inputs.
std::string render_line_plot(const std::string& title, const std::string& y_label,
                             const std::vector<NamedSeries>& series);

/// Single unlabeled series.
std::string render_line_plot(const std::string& title, const std::string& y_label,
                             const PlotSeries& series);

}  // namespace qcl
