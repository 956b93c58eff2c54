// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcl/metrics.hpp"
#include "qcl/training.hpp"

namespace qcl {

struct ScaleSweepPoint {
  double lambda = 1.0;
  double fim_trace = 0.0;      // analytic BCE form on the probe
  double mean_abs_logit = 0.0;
  double max_abs_logit = 0.0;
  double mean_xi = 0.0;        // mean sigmoid'(f) = p(1-p)
};

using ScaleSweepResult = std::vector<ScaleSweepPoint>;

/// Rescales all weights of a trained single-logit MLP by each lambda and
/// reports the FIM trace collapse. Rejects models whose unscaled logits are
/// all below 1e-3 in magnitude (nothing to saturate).
ScaleSweepResult classical_collapse_sweep(const MlpModel& model, const Dataset& probe,
                                          const std::vector<double>& lambdas);

struct BoundsReport {
  int n_samples = 0;
  int m_params = 0;
  double scale = 1.0;
  double logit_ceiling = 0.0;        // |s|
  double grad_ceiling = 0.0;         // |s|
  double trace_ceiling = 0.0;        // 0.25 * M * s^2
  double xi_floor = 0.0;             // sigmoid(|s|) (1 - sigmoid(|s|))
  double xi_ceiling = 0.25;
  double observed_max_abs_logit = 0.0;
  double observed_max_abs_grad = 0.0;
  double observed_max_fim_trace = 0.0;  // max over draws of xi * ||grad f||^2
  double observed_xi_min = 0.0;
  double observed_xi_max = 0.0;
  bool logit_ok = false;
  bool grad_ok = false;
  bool trace_ok = false;
  bool xi_ok = false;

  bool all_ok() const { return logit_ok && grad_ok && trace_ok && xi_ok; }
};

struct BoundsOptions {
  int n_samples = 1000;
  std::uint64_t seed = 0;
  int readout_qubit = 0;
  bool zero_input = false;  // use |0..0> instead of random states
};

/// Random (theta, input) draws through a product-form circuit (RY/RZ/CRX
/// placements only) with the Z readout at the given scale; checks each
/// observation against its ceiling with 1e-9 slack.
BoundsReport qnn_bounds_check(const CircuitSpec& spec, double scale,
                              const BoundsOptions& opt);

struct HaarStats {
  int n_samples = 0;
  double mean_sq = 0.0;
  double stderr_mean = 0.0;
  double mean_sq_shifted = 0.0;
  double stderr_shifted = 0.0;
};

/// Estimates E[(d f / d theta_k)^2] under theta ~ U[0, 2pi]^M and under the
/// same draws offset by `offset` in every coordinate, with matched seeds.
/// f = <Z_0> on input |0..0>. Product-form circuits only.
HaarStats haar_gradient_stats(const CircuitSpec& spec, int k, int n_samples,
                              double offset, std::uint64_t seed);

std::string scale_sweep_to_json(const ScaleSweepResult& sweep);
std::string bounds_report_to_json(const BoundsReport& report);
std::string haar_stats_to_json(const HaarStats& stats);

}  // namespace qcl
