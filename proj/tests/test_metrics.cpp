#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "qcl/ansatz.hpp"
#include "qcl/metrics.hpp"
#include "qcl/rng.hpp"
#include "qcl/training.hpp"

using namespace qcl;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

namespace {

Dataset binary_ds(int n, int dim, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.inputs = MatrixXd(n, dim);
  ds.labels = VectorXi(n);
  ds.class_count = 2;
  for (int i = 0; i < n; ++i) {
    ds.inputs.row(i) = rng.uniform_vector(dim, -1.0, 1.0).transpose();
    ds.labels[i] = i % 2;
  }
  return ds;
}

Model linear_model(const MatrixXd& w, bool with_bias) {
  MLPSpec spec;
  spec.input = int(w.cols());
  spec.output = int(w.rows());
  spec.with_bias = with_bias;
  MlpModel m;
  m.spec = spec;
  m.params.w.push_back(w);
  m.params.b.push_back(VectorXd::Zero(w.rows()));
  return m;
}

Model qnn_model(std::uint64_t seed) {
  QnnModel q;
  q.circuit = build_circuit(LayoutKind::HeaRing, 3, 1);
  q.params = init_params(q.circuit, InitScheme::Uniform0To2Pi, seed);
  q.readout.kind = ReadoutKind::ZQubitSigmoid;
  q.readout.qubit = 0;
  q.readout.scale = 2.0;
  return q;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// two-sided Student-t tail by Simpson integration of the density
double t_two_sided_oracle(double t, double dof) {
  const double at = std::abs(t);
  if (at == 0.0) return 1.0;
  const double ln_norm = std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
                         0.5 * std::log(dof * 3.14159265358979323846);
  auto density = [&](double u) {
    return std::exp(ln_norm - 0.5 * (dof + 1.0) * std::log1p(u * u / dof));
  };
  const int steps = 200000;  // even
  const double h = at / steps;
  double acc = density(0.0) + density(at);
  for (int k = 1; k < steps; ++k) acc += density(k * h) * (k % 2 ? 4.0 : 2.0);
  const double cdf_half = acc * h / 3.0;  // integral from 0 to |t|
  return 1.0 - 2.0 * cdf_half;
}

}  // namespace

TEST_CASE("weight norms use the documented conventions") {
  Model q = qnn_model(1);
  ParamVector theta = ParamVector::Zero(std::get<QnnModel>(q).circuit.param_count);
  theta[0] = 3.0;
  theta[1] = 4.0;
  std::get<QnnModel>(q).params = theta;
  CHECK(weight_l2(q) == doctest::Approx(5.0).epsilon(1e-15));

  CHECK(weight_l2(linear_model((MatrixXd(1, 1) << 3.0).finished(), true)) == 3.0);

  // mean of per-layer Frobenius norms, biases excluded
  MLPSpec spec;
  spec.input = 1;
  spec.hidden = {1};
  spec.output = 1;
  MlpModel m;
  m.spec = spec;
  m.params.w.push_back((MatrixXd(1, 1) << 3.0).finished());
  m.params.b.push_back((VectorXd(1) << 100.0).finished());
  m.params.w.push_back((MatrixXd(1, 1) << 4.0).finished());
  m.params.b.push_back((VectorXd(1) << -50.0).finished());
  CHECK(weight_l2(Model(m)) == doctest::Approx(3.5).epsilon(1e-15));

  // scaling the weights scales the norm
  MlpModel doubled = m;
  doubled.params = scale_weights(m.params, 2.0);
  CHECK(weight_l2(Model(doubled)) == doctest::Approx(7.0).epsilon(1e-14));
}

TEST_CASE("gradient norm of a perfectly ambivalent batch vanishes") {
  Model m = linear_model(MatrixXd::Zero(1, 2), false);
  Dataset ds;
  ds.inputs = (MatrixXd(2, 2) << 1, 0, 1, 0).finished();
  ds.labels = (VectorXi(2) << 0, 1).finished();
  ds.class_count = 2;
  CHECK(grad_l2(m, ds) == doctest::Approx(0.0).epsilon(1e-16));

  Dataset empty;
  empty.inputs = MatrixXd(0, 2);
  empty.labels = VectorXi(0);
  CHECK_THROWS_AS(grad_l2(m, empty), std::invalid_argument);
}

TEST_CASE("single-sample gradient norm matches the per-sample gradient") {
  const Dataset ds = binary_ds(1, 8, 3);
  Model q = qnn_model(4);
  VectorXd g;
  sample_loss_grad(q, ds, 0, g);
  CHECK(grad_l2(q, ds) == doctest::Approx(g.norm()).epsilon(1e-13));
}

TEST_CASE("empirical fim trace closed forms") {
  // p = 1/2, bias-free: grad f = x = (1, 0), squared norm 1, trace 1/4
  Model m = linear_model(MatrixXd::Zero(1, 2), false);
  Dataset ds;
  ds.inputs = (MatrixXd(1, 2) << 1, 0).finished();
  ds.labels = (VectorXi(1) << 0).finished();
  ds.class_count = 2;
  CHECK(fim_trace_empirical(m, ds) == doctest::Approx(0.25).epsilon(1e-15));

  // a saturated confident model scores almost zero
  Model conf = linear_model((MatrixXd(1, 1) << 10.0).finished(), false);
  Dataset one;
  one.inputs = (MatrixXd(1, 1) << 1.0).finished();
  one.labels = (VectorXi(1) << 1).finished();
  one.class_count = 2;
  CHECK(fim_trace_empirical(conf, one) < 1e-8);

  Dataset empty;
  empty.inputs = MatrixXd(0, 2);
  empty.labels = VectorXi(0);
  CHECK_THROWS_AS(fim_trace_empirical(m, empty), std::invalid_argument);
}

TEST_CASE("empirical fim trace matches finite-difference scores") {
  const Dataset ds = binary_ds(4, 4, 11);
  MLPSpec spec;
  spec.input = 4;
  spec.hidden = {3};
  spec.output = 1;
  MlpModel mm;
  mm.spec = spec;
  mm.params = mlp_init(spec, 12);
  Model m = mm;

  const VectorXd base = model_flat_params(m);
  Model work = m;
  double want = 0.0;
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    VectorXd fd(base.size()), unused;
    for (Eigen::Index k = 0; k < base.size(); ++k) {
      VectorXd up = base, dn = base;
      up[k] += 1e-6;
      dn[k] -= 1e-6;
      set_model_flat_params(work, up);
      const double lu = sample_loss_grad(work, ds, i, unused);
      set_model_flat_params(work, dn);
      const double ld = sample_loss_grad(work, ds, i, unused);
      fd[k] = (lu - ld) / 2e-6;
    }
    want += fd.squaredNorm();
  }
  want /= double(ds.size());
  CHECK(fim_trace_empirical(m, ds) == doctest::Approx(want).epsilon(1e-4));
}

TEST_CASE("analytic bce fim trace closed form and fd cross-check") {
  // p = 1/2, grad f = (2, 0): trace = 0.25 * 4 = 1
  Model m = linear_model(MatrixXd::Zero(1, 2), false);
  Dataset ds;
  ds.inputs = (MatrixXd(1, 2) << 2, 0).finished();
  ds.labels = (VectorXi(1) << 0).finished();
  ds.class_count = 2;
  CHECK(fim_trace_bce_analytic(m, ds) == doctest::Approx(1.0).epsilon(1e-15));

  // against finite differences of the raw logit on a quantum model
  const Dataset probe = binary_ds(3, 8, 21);
  Model q = qnn_model(22);
  const VectorXd base = model_flat_params(q);
  Model work = q;
  double want = 0.0;
  for (Eigen::Index i = 0; i < probe.size(); ++i) {
    VectorXd fd(base.size());
    for (Eigen::Index k = 0; k < base.size(); ++k) {
      VectorXd up = base, dn = base;
      up[k] += 1e-5;
      dn[k] -= 1e-5;
      set_model_flat_params(work, up);
      const double fu = model_logits(work, probe, i)[0];
      set_model_flat_params(work, dn);
      const double fl = model_logits(work, probe, i)[0];
      fd[k] = (fu - fl) / 2e-5;
    }
    set_model_flat_params(work, base);
    const double f = model_logits(work, probe, i)[0];
    const double p = sigmoid(f);
    want += p * (1.0 - p) * fd.squaredNorm();
  }
  want /= double(probe.size());
  CHECK(fim_trace_bce_analytic(q, probe) == doctest::Approx(want).epsilon(1e-6));

  // multi-logit heads cannot produce a raw binary logit
  MLPSpec wide;
  wide.input = 2;
  wide.output = 3;
  MlpModel w3;
  w3.spec = wide;
  w3.params = mlp_init(wide, 30);
  CHECK_THROWS_AS(fim_trace_bce_analytic(Model(w3), ds), std::invalid_argument);
}

TEST_CASE("moving statistics windows") {
  VectorXd constant = VectorXd::Constant(12, 3.25);
  const WindowStats cs = moving_stats(constant, 4);
  REQUIRE(cs.mean.size() == 9);
  for (int i = 0; i < 9; ++i) {
    CHECK(cs.mean[i] == doctest::Approx(3.25).epsilon(1e-15));
    CHECK(cs.stddev[i] == doctest::Approx(0.0).epsilon(1e-15));
  }

  VectorXd pair(2);
  pair << 0.0, 1.0;
  const WindowStats ps = moving_stats(pair, 2);
  REQUIRE(ps.mean.size() == 1);
  CHECK(ps.mean[0] == 0.5);
  CHECK(ps.stddev[0] == 0.5);  // population std

  Rng rng(5);
  const VectorXd series = rng.uniform_vector(40, -2.0, 2.0);
  const int w = 5;
  const WindowStats ws = moving_stats(series, w);
  REQUIRE(ws.mean.size() == 36);
  for (int i = 0; i < 36; ++i) {
    double mu = 0.0;
    for (int k = 0; k < w; ++k) mu += series[i + k];
    mu /= w;
    double var = 0.0;
    for (int k = 0; k < w; ++k) var += (series[i + k] - mu) * (series[i + k] - mu);
    var /= w;
    CHECK(ws.mean[i] == doctest::Approx(mu).epsilon(1e-13));
    CHECK(ws.stddev[i] == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
  }

  const WindowStats unit = moving_stats(series, 1);
  CHECK(unit.mean == series);
  CHECK(unit.stddev.cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(moving_stats(pair, 3), std::invalid_argument);
  CHECK_THROWS_AS(moving_stats(pair, 0), std::invalid_argument);
}

TEST_CASE("relative normalization divides by the early mean") {
  VectorXd series = VectorXd::Ones(30);
  series[15] = 2.0;
  const VectorXd rel = relative_normalize(series);
  CHECK(rel[0] == 1.0);
  CHECK(rel[15] == 2.0);
  CHECK(rel[29] == 1.0);

  VectorXd ramp(12);
  for (int i = 0; i < 12; ++i) ramp[i] = double(i + 1);
  const VectorXd r3 = relative_normalize(ramp, 3);  // baseline mean 2
  CHECK(r3[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r3[11] == doctest::Approx(6.0).epsilon(1e-15));

  VectorXd zero = VectorXd::Zero(12);
  CHECK_THROWS_AS(relative_normalize(zero), std::invalid_argument);
  VectorXd balanced(12);
  balanced << -1, 1, -1, 1, -1, 1, -1, 1, -1, 1, 0, 0;
  CHECK_THROWS_AS(relative_normalize(balanced), std::invalid_argument);
  VectorXd tiny(5);
  tiny.setOnes();
  CHECK_THROWS_AS(relative_normalize(tiny, 6), std::invalid_argument);
  CHECK_THROWS_AS(relative_normalize(tiny, 0), std::invalid_argument);
}

TEST_CASE("slope fit handles exact lines by convention") {
  VectorXd line(15);
  for (int i = 0; i < 15; ++i) line[i] = 2.0 * i + 1.0;
  const SlopeFit fit = slope_pvalue(line);
  CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(fit.intercept == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.p_value == 0.0);
  CHECK(std::isinf(fit.t_stat));

  const SlopeFit flat = slope_pvalue(VectorXd::Constant(20, 0.83));
  CHECK(flat.slope == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(flat.p_value == 1.0);
  CHECK(flat.t_stat == 0.0);

  VectorXd two(2);
  two << 0.0, 1.0;
  CHECK_THROWS_AS(slope_pvalue(two), std::invalid_argument);
}

TEST_CASE("slope fit agrees with the normal equations and t tail") {
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 25;
    VectorXd y(n);
    const double a = rng.uniform(-0.05, 0.05), b = rng.uniform(-1.0, 1.0);
    for (int i = 0; i < n; ++i) y[i] = a * i + b + 0.3 * rng.normal();

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
      sx += i;
      sy += y[i];
      sxx += double(i) * i;
      sxy += i * y[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    double rss = 0;
    for (int i = 0; i < n; ++i) {
      const double r = y[i] - intercept - slope * i;
      rss += r * r;
    }
    const double sxx_c = sxx - sx * sx / n;
    const double se = std::sqrt(rss / (n - 2) / sxx_c);
    const double t = slope / se;

    const SlopeFit fit = slope_pvalue(y);
    CHECK(fit.slope == doctest::Approx(slope).epsilon(1e-11));
    CHECK(fit.intercept == doctest::Approx(intercept).epsilon(1e-11));
    CHECK(fit.t_stat == doctest::Approx(t).epsilon(1e-10));
    CHECK(fit.p_value == doctest::Approx(t_two_sided_oracle(t, n - 2)).epsilon(1e-8));
  }
}

TEST_CASE("accuracy drop statistics") {
  const AccuracyDrop none = accuracy_drop(VectorXd::Constant(40, 0.9), 30);
  CHECK(none.drop == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(none.rate_per_100 == doctest::Approx(0.0).epsilon(1e-13));

  // linear fade 0.9 -> 0.8 across a 100-task horizon
  VectorXd fade(100);
  for (int i = 0; i < 100; ++i) fade[i] = 0.9 - 0.1 * i / 99.0;
  const AccuracyDrop fd = accuracy_drop(fade, 100);
  CHECK(fd.drop == doctest::Approx(0.1 * 90.0 / 99.0).epsilon(1e-12));
  CHECK(fd.rate_per_100 == doctest::Approx(100.0 * 0.1 / 99.0).epsilon(1e-10));

  // only the horizon matters
  VectorXd padded(130);
  padded.head(100) = fade;
  padded.tail(30).setConstant(5.0);
  const AccuracyDrop pd = accuracy_drop(padded, 100);
  CHECK(pd.drop == fd.drop);
  CHECK(pd.rate_per_100 == fd.rate_per_100);

  CHECK_THROWS_AS(accuracy_drop(fade, 19), std::invalid_argument);
  CHECK_THROWS_AS(accuracy_drop(VectorXd::Ones(19), 20), std::invalid_argument);
}

TEST_CASE("student t tail probabilities") {
  CHECK(student_t_two_sided_p(0.0, 5.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(student_t_two_sided_p(1.5, 7.0) ==
        doctest::Approx(student_t_two_sided_p(-1.5, 7.0)).epsilon(1e-14));
  CHECK(student_t_two_sided_p(50.0, 4.0) < 1e-5);
  CHECK(student_t_two_sided_p(1.0, 8.0) > student_t_two_sided_p(2.0, 8.0));

  // dof = 1 is Cauchy: p = 1 - 2 atan(t) / pi
  CHECK(student_t_two_sided_p(1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
  // dof = 2 closed form: p = 1 - t / sqrt(2 + t^2)
  CHECK(student_t_two_sided_p(1.0, 2.0) ==
        doctest::Approx(1.0 - 1.0 / std::sqrt(3.0)).epsilon(1e-12));

  CHECK_THROWS_AS(student_t_two_sided_p(1.0, 0.0), std::invalid_argument);
}
