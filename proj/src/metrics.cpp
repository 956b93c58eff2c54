// SPDX-License-Identifier: Apache-2.0
#include "qcl/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "qcl/parallel.hpp"

namespace qcl {

namespace {

// sigma(f) sigma(-f), written to stay positive for |f| up to ~745
double logistic_xi(double f) {
  const double e = std::exp(-std::abs(f));
  return e / ((1.0 + e) * (1.0 + e));
}

// Regularized incomplete beta I_x(a, b) by Lentz continued fraction.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16, kFpMin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("incomplete beta did not converge");
}

double reg_inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double student_t_two_sided_p(double t, double dof) {
  if (dof <= 0.0) throw std::invalid_argument("student_t_two_sided_p: dof must be > 0");
  if (std::isinf(t)) return 0.0;
  return reg_inc_beta(0.5 * dof, 0.5, dof / (dof + t * t));
}

double weight_l2(const Model& model) {
  if (const auto* q = std::get_if<QnnModel>(&model)) return q->params.norm();
  const auto& m = std::get<MlpModel>(model);
  if (m.params.w.empty()) throw std::invalid_argument("weight_l2: empty model");
  double sum = 0.0;
  for (const auto& w : m.params.w) sum += w.norm();
  return sum / double(m.params.w.size());
}

double grad_l2(const Model& model, const Dataset& batch) {
  if (batch.size() == 0) throw std::invalid_argument("grad_l2: empty batch");
  std::vector<Eigen::Index> idx(batch.size());
  for (Eigen::Index i = 0; i < batch.size(); ++i) idx[i] = i;
  Eigen::VectorXd grad;
  loss_and_grad(model, batch, idx, grad);
  return grad.norm();
}

double fim_trace_empirical(const Model& model, const Dataset& probe) {
  const Eigen::Index n = probe.size();
  if (n == 0) throw std::invalid_argument("fim_trace_empirical: empty probe");
  model_loss_kind(model, probe);  // validates pairing
  std::vector<double> sq(n);
  parallel_for(n, [&](Eigen::Index i) {
    Eigen::VectorXd g;
    sample_loss_grad(model, probe, i, g);
    sq[i] = g.squaredNorm();
  });
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) total += sq[i];
  return total / double(n);
}

double fim_trace_bce_analytic(const Model& model, const Dataset& probe) {
  const Eigen::Index n = probe.size();
  if (n == 0) throw std::invalid_argument("fim_trace_bce_analytic: empty probe");
  std::vector<double> term(n);
  parallel_for(n, [&](Eigen::Index i) {
    Eigen::VectorXd g;
    const double f = sample_logit_grad(model, probe, i, g);
    term[i] = logistic_xi(f) * g.squaredNorm();
  });
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) total += term[i];
  return total / double(n);
}

WindowStats moving_stats(const Eigen::Ref<const Eigen::VectorXd>& series, int window) {
  if (window < 1) throw std::invalid_argument("moving_stats: window must be >= 1");
  if (series.size() < window)
    throw std::invalid_argument("moving_stats: series shorter than window");
  const Eigen::Index out_len = series.size() - window + 1;
  WindowStats ws;
  ws.window = window;
  ws.mean.resize(out_len);
  ws.stddev.resize(out_len);
  for (Eigen::Index i = 0; i < out_len; ++i) {
    const auto seg = series.segment(i, window);
    const double mu = seg.mean();
    ws.mean[i] = mu;
    ws.stddev[i] = std::sqrt((seg.array() - mu).square().sum() / double(window));
  }
  return ws;
}

Eigen::VectorXd relative_normalize(const Eigen::Ref<const Eigen::VectorXd>& series,
                                   int baseline_window) {
  if (baseline_window < 1)
    throw std::invalid_argument("relative_normalize: baseline_window must be >= 1");
  if (series.size() < baseline_window)
    throw std::invalid_argument("relative_normalize: series shorter than baseline");
  const double base = series.head(baseline_window).mean();
  if (base == 0.0)
    throw std::invalid_argument("relative_normalize: zero baseline mean");
  return series / base;
}

SlopeFit slope_pvalue(const Eigen::Ref<const Eigen::VectorXd>& series) {
  const Eigen::Index n = series.size();
  if (n < 3) throw std::invalid_argument("slope_pvalue: need at least 3 points");
  const double nn = double(n);
  const double x_mean = (nn - 1.0) / 2.0;
  const double y_mean = series.mean();
  double sxx = 0.0, sxy = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double dx = double(i) - x_mean;
    sxx += dx * dx;
    sxy += dx * (series[i] - y_mean);
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = y_mean - fit.slope * x_mean;
  double rss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = series[i] - (fit.intercept + fit.slope * double(i));
    rss += r * r;
  }
  const double scale = std::max(1.0, series.squaredNorm());
  if (rss <= 1e-24 * scale) {
    // Exact fit: degenerate t statistic by convention.
    fit.t_stat = fit.slope == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    fit.p_value = fit.slope == 0.0 ? 1.0 : 0.0;
    return fit;
  }
  const double dof = nn - 2.0;
  const double se = std::sqrt(rss / dof / sxx);
  fit.t_stat = fit.slope / se;
  fit.p_value = student_t_two_sided_p(fit.t_stat, dof);
  return fit;
}

AccuracyDrop accuracy_drop(const Eigen::Ref<const Eigen::VectorXd>& series, int horizon) {
  if (horizon < 20)
    throw std::invalid_argument("accuracy_drop: horizon must cover both 10-task windows");
  if (series.size() < horizon)
    throw std::invalid_argument("accuracy_drop: series shorter than horizon");
  const auto h = series.head(horizon);
  AccuracyDrop out;
  out.drop = h.head(10).mean() - h.tail(10).mean();
  out.rate_per_100 = -100.0 * slope_pvalue(h).slope;
  return out;
}

}  // namespace qcl
