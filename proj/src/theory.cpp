// SPDX-License-Identifier: Apache-2.0
#include "qcl/theory.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

#include "qcl/parallel.hpp"
#include "qcl/rng.hpp"

namespace qcl {

using json = nlohmann::json;

namespace {

// sigma(f) sigma(-f), written to stay positive for |f| up to ~745
double logistic_xi(double f) {
  const double e = std::exp(-std::abs(f));
  return e / ((1.0 + e) * (1.0 + e));
}

void require_product_form(const CircuitSpec& spec, const char* where) {
  for (const auto& pl : spec.gates)
    if (pl.kind == GateKind::Su4)
      throw std::invalid_argument(std::string(where) +
                                  ": needs a product-form circuit (no SU4 blocks)");
}

QState random_state(int n_qubits, Rng& rng) {
  const Eigen::Index dim = Eigen::Index(1) << n_qubits;
  Eigen::VectorXcd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    v[i] = Amplitude(rng.normal(), rng.normal());
  v /= v.norm();
  QState s;
  s.n_qubits = n_qubits;
  s.amplitudes = v;
  return s;
}

}  // namespace

ScaleSweepResult classical_collapse_sweep(const MlpModel& model, const Dataset& probe,
                                          const std::vector<double>& lambdas) {
  if (model.spec.output != 1)
    throw std::invalid_argument("classical_collapse_sweep: needs a single-logit head");
  if (lambdas.empty())
    throw std::invalid_argument("classical_collapse_sweep: empty lambda list");
  // Degenerate-model guard: an untrained or collapsed net has no confident
  // logits and the sweep would certify nothing.
  {
    Model m = model;
    double max_abs = 0.0;
    for (Eigen::Index i = 0; i < probe.size(); ++i)
      max_abs = std::max(max_abs, std::abs(model_logits(m, probe, i)[0]));
    if (max_abs < 1e-3)
      throw std::invalid_argument(
          "classical_collapse_sweep: probe logits are all ~0; train the model first");
  }

  ScaleSweepResult out;
  for (const double lambda : lambdas) {
    MlpModel scaled = model;
    scaled.params = scale_weights(model.params, lambda);
    Model m = scaled;
    ScaleSweepPoint pt;
    pt.lambda = lambda;
    pt.fim_trace = fim_trace_bce_analytic(m, probe);
    double abs_sum = 0.0, xi_sum = 0.0, abs_max = 0.0;
    for (Eigen::Index i = 0; i < probe.size(); ++i) {
      const double f = model_logits(m, probe, i)[0];
      abs_sum += std::abs(f);
      xi_sum += logistic_xi(f);
      abs_max = std::max(abs_max, std::abs(f));
    }
    pt.mean_abs_logit = abs_sum / double(probe.size());
    pt.max_abs_logit = abs_max;
    pt.mean_xi = xi_sum / double(probe.size());
    out.push_back(pt);
  }
  return out;
}

BoundsReport qnn_bounds_check(const CircuitSpec& spec, double scale,
                              const BoundsOptions& opt) {
  require_product_form(spec, "qnn_bounds_check");
  if (opt.n_samples < 1)
    throw std::invalid_argument("qnn_bounds_check: n_samples must be >= 1");

  BoundsReport rep;
  rep.n_samples = opt.n_samples;
  rep.m_params = spec.param_count;
  rep.scale = scale;
  rep.logit_ceiling = std::abs(scale);
  rep.grad_ceiling = std::abs(scale);
  rep.trace_ceiling = 0.25 * spec.param_count * scale * scale;
  rep.xi_floor = logistic_xi(scale);
  rep.observed_xi_min = 0.25;
  rep.observed_xi_max = 0.0;

  CotangentSpec cot;
  cot.kind = CotangentSpec::Kind::RawZLogit;
  cot.qubit = opt.readout_qubit;
  cot.scale = scale;

  struct Draw {
    double abs_logit, max_abs_grad, trace, xi;
  };
  std::vector<Draw> draws(opt.n_samples);
  const Rng base = Rng(opt.seed).fork(streams::kTheory);
  parallel_for(opt.n_samples, [&](Eigen::Index d) {
    Rng rng = base.fork(static_cast<std::uint64_t>(d));
    Eigen::VectorXd theta =
        rng.uniform_vector(spec.param_count, 0.0, 2.0 * 3.14159265358979323846);
    const QState input =
        opt.zero_input ? QState::zero(spec.n_qubits) : random_state(spec.n_qubits, rng);
    Eigen::VectorXd grad;
    const double f = adjoint_gradient(spec, theta, input, cot, grad);
    const double xi = logistic_xi(f);
    draws[d] = {std::abs(f),
                spec.param_count > 0 ? grad.cwiseAbs().maxCoeff() : 0.0,
                xi * grad.squaredNorm(), xi};
  });

  for (const auto& d : draws) {
    rep.observed_max_abs_logit = std::max(rep.observed_max_abs_logit, d.abs_logit);
    rep.observed_max_abs_grad = std::max(rep.observed_max_abs_grad, d.max_abs_grad);
    rep.observed_max_fim_trace = std::max(rep.observed_max_fim_trace, d.trace);
    rep.observed_xi_min = std::min(rep.observed_xi_min, d.xi);
    rep.observed_xi_max = std::max(rep.observed_xi_max, d.xi);
  }
  constexpr double kSlack = 1e-9;
  rep.logit_ok = rep.observed_max_abs_logit <= rep.logit_ceiling + kSlack;
  rep.grad_ok = rep.observed_max_abs_grad <= rep.grad_ceiling + kSlack;
  rep.trace_ok = rep.observed_max_fim_trace <= rep.trace_ceiling + kSlack;
  rep.xi_ok = rep.observed_xi_min >= rep.xi_floor - kSlack &&
              rep.observed_xi_max <= rep.xi_ceiling + kSlack;
  return rep;
}

HaarStats haar_gradient_stats(const CircuitSpec& spec, int k, int n_samples,
                              double offset, std::uint64_t seed) {
  require_product_form(spec, "haar_gradient_stats");
  if (k < 0 || k >= spec.param_count)
    throw std::out_of_range("haar_gradient_stats: parameter index out of range");
  if (n_samples < 2)
    throw std::invalid_argument("haar_gradient_stats: n_samples must be >= 2");

  CotangentSpec cot;
  cot.kind = CotangentSpec::Kind::RawZLogit;
  cot.qubit = 0;
  cot.scale = 1.0;

  std::vector<double> sq(n_samples), sq_shifted(n_samples);
  const Rng base = Rng(seed).fork(streams::kTheory);
  parallel_for(n_samples, [&](Eigen::Index d) {
    Rng rng = base.fork(static_cast<std::uint64_t>(d));
    const Eigen::VectorXd theta =
        rng.uniform_vector(spec.param_count, 0.0, 2.0 * 3.14159265358979323846);
    Eigen::VectorXd grad;
    adjoint_gradient(spec, theta, QState::zero(spec.n_qubits), cot, grad);
    sq[d] = grad[k] * grad[k];
    const Eigen::VectorXd shifted = theta.array() + offset;
    adjoint_gradient(spec, shifted, QState::zero(spec.n_qubits), cot, grad);
    sq_shifted[d] = grad[k] * grad[k];
  });

  auto summarize = [&](const std::vector<double>& xs, double& mean, double& se) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    mean = sum / double(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= double(xs.size() - 1);
    se = std::sqrt(var / double(xs.size()));
  };
  HaarStats st;
  st.n_samples = n_samples;
  summarize(sq, st.mean_sq, st.stderr_mean);
  summarize(sq_shifted, st.mean_sq_shifted, st.stderr_shifted);
  return st;
}

std::string scale_sweep_to_json(const ScaleSweepResult& sweep) {
  json arr = json::array();
  for (const auto& pt : sweep) {
    arr.push_back({{"lambda", pt.lambda},
                   {"fim_trace", pt.fim_trace},
                   {"mean_abs_logit", pt.mean_abs_logit},
                   {"max_abs_logit", pt.max_abs_logit},
                   {"mean_xi", pt.mean_xi}});
  }
  return arr.dump();
}

std::string bounds_report_to_json(const BoundsReport& r) {
  const json j{{"n_samples", r.n_samples},
               {"m_params", r.m_params},
               {"scale", r.scale},
               {"logit_ceiling", r.logit_ceiling},
               {"grad_ceiling", r.grad_ceiling},
               {"trace_ceiling", r.trace_ceiling},
               {"xi_floor", r.xi_floor},
               {"xi_ceiling", r.xi_ceiling},
               {"observed_max_abs_logit", r.observed_max_abs_logit},
               {"observed_max_abs_grad", r.observed_max_abs_grad},
               {"observed_max_fim_trace", r.observed_max_fim_trace},
               {"observed_xi_min", r.observed_xi_min},
               {"observed_xi_max", r.observed_xi_max},
               {"logit_ok", r.logit_ok},
               {"grad_ok", r.grad_ok},
               {"trace_ok", r.trace_ok},
               {"xi_ok", r.xi_ok}};
  return j.dump();
}

std::string haar_stats_to_json(const HaarStats& s) {
  const json j{{"n_samples", s.n_samples},
               {"mean_sq", s.mean_sq},
               {"stderr_mean", s.stderr_mean},
               {"mean_sq_shifted", s.mean_sq_shifted},
               {"stderr_shifted", s.stderr_shifted}};
  return j.dump();
}

}  // namespace qcl
