// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include "qcl/training.hpp"

namespace qcl {

/// One JSONL row per task; keys match these names exactly.
struct MetricsRecord {
  int task_index = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double weight_norm = 0.0;
  double grad_norm = 0.0;
  double fim_trace = 0.0;
  double wall_time_seconds = 0.0;
};

/// Classical: mean over layers of the per-matrix Frobenius norm, biases
/// excluded. Quantum: L2 norm of the parameter vector.
double weight_l2(const Model& model);

/// L2 norm of the mean loss gradient over the batch.
double grad_l2(const Model& model, const Dataset& batch);

/// Empirical trace mean_i || grad log p(y_i | x_i) ||^2. For BCE the score is
/// (y - p) grad f; for CCE it is the negated loss gradient; either way the
/// squared norm of the per-sample loss gradient.
double fim_trace_empirical(const Model& model, const Dataset& probe);

/// Analytic BCE form mean_i p_i (1 - p_i) || grad f(x_i) ||^2, p = sigmoid(f).
/// Needs a single-logit model.
double fim_trace_bce_analytic(const Model& model, const Dataset& probe);

struct WindowStats {
  int window = 1;
  Eigen::VectorXd mean;    // length n - window + 1
  Eigen::VectorXd stddev;  // population std per window
};

WindowStats moving_stats(const Eigen::Ref<const Eigen::VectorXd>& series, int window);

/// Divides by the mean of the first baseline_window entries.
Eigen::VectorXd relative_normalize(const Eigen::Ref<const Eigen::VectorXd>& series,
                                   int baseline_window = 10);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;
};

/// OLS of series against 0..n-1; two-sided p for slope = 0 with n - 2 dof.
/// Exact fits: p = 1 when the slope is zero, else p = 0.
SlopeFit slope_pvalue(const Eigen::Ref<const Eigen::VectorXd>& series);

struct AccuracyDrop {
  double drop = 0.0;          // mean of first 10 minus mean of last 10 in horizon
  double rate_per_100 = 0.0;  // -100 * fitted slope over the horizon
};

AccuracyDrop accuracy_drop(const Eigen::Ref<const Eigen::VectorXd>& series, int horizon);

/// Two-sided tail probability of Student's t with dof degrees of freedom.
double student_t_two_sided_p(double t, double dof);

}  // namespace qcl
