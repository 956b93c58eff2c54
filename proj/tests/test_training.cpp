#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "qcl/ansatz.hpp"
#include "qcl/rng.hpp"
#include "qcl/statevector.hpp"
#include "qcl/training.hpp"

using namespace qcl;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

namespace {

Dataset random_real_ds(int n, int dim, int classes, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.inputs = MatrixXd(n, dim);
  ds.labels = VectorXi(n);
  ds.class_count = classes;
  for (int i = 0; i < n; ++i) {
    ds.inputs.row(i) = rng.uniform_vector(dim, -1.0, 1.0).transpose();
    ds.labels[i] = i % classes;
  }
  return ds;
}

Model qnn_binary_model(std::uint64_t seed) {
  QnnModel q;
  q.circuit = build_circuit(LayoutKind::HeaRing, 3, 1);
  q.params = init_params(q.circuit, InitScheme::Uniform0To2Pi, seed);
  q.readout.kind = ReadoutKind::ZQubitSigmoid;
  q.readout.qubit = 2;
  q.readout.scale = 1.5;
  return q;
}

Model mlp_model(const MLPSpec& spec, std::uint64_t seed) {
  MlpModel m;
  m.spec = spec;
  m.params = mlp_init(spec, seed);
  return m;
}

VectorXd fd_loss_grad(const Model& model, const Dataset& ds,
                      const std::vector<Eigen::Index>& idx, double h) {
  Model work = model;
  const VectorXd base = model_flat_params(model);
  VectorXd g(base.size()), unused;
  for (Eigen::Index k = 0; k < base.size(); ++k) {
    VectorXd up = base, dn = base;
    up[k] += h;
    dn[k] -= h;
    set_model_flat_params(work, up);
    const double lu = loss_and_grad(work, ds, idx, unused);
    set_model_flat_params(work, dn);
    const double ld = loss_and_grad(work, ds, idx, unused);
    g[k] = (lu - ld) / (2 * h);
  }
  return g;
}

void check_close(const VectorXd& a, const VectorXd& b, double rel, double abs_tol) {
  REQUIRE(a.size() == b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (std::abs(b[i]) > 1e-8)
      CHECK(std::abs(a[i] - b[i]) / std::abs(b[i]) < rel);
    else
      CHECK(std::abs(a[i] - b[i]) < abs_tol);
  }
}

}  // namespace

TEST_CASE("log-prob readout on basis and uniform states") {
  ReadoutSpec top10;
  top10.kind = ReadoutKind::LogProbTop10;

  const QState ground = QState::zero(4);
  const VectorXd l = readout_logits(ground, top10);
  REQUIRE(l.size() == 10);
  CHECK(l[0] == 0.0);
  for (int c = 1; c < 10; ++c) CHECK(l[c] == doctest::Approx(std::log(1e-12)).epsilon(1e-14));
  // after softmax essentially all mass sits on class 0
  const VectorXd e = (l.array() - l.maxCoeff()).exp();
  CHECK(e[0] / e.sum() > 0.999999);

  const QState uniform = encode_complex(Eigen::VectorXcd::Ones(1024), 10);
  const VectorXd lu = readout_logits(uniform, top10);
  for (int c = 0; c < 10; ++c)
    CHECK(lu[c] == doctest::Approx(std::log(1.0 / 1024.0)).epsilon(1e-12));
}

TEST_CASE("z-sigmoid readout reads the named qubit times the scale") {
  ReadoutSpec z;
  z.kind = ReadoutKind::ZQubitSigmoid;
  z.qubit = 0;
  z.scale = 2.5;
  CHECK(readout_logits(QState::zero(1), z)[0] == doctest::Approx(2.5).epsilon(1e-15));

  // |01> : qubit 0 up, qubit 1 down
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(4);
  v[1] = 1.0;
  const QState s = encode_complex(v, 2);
  z.scale = 1.0;
  CHECK(readout_logits(s, z)[0] == doctest::Approx(1.0).epsilon(1e-14));
  z.qubit = 1;
  CHECK(readout_logits(s, z)[0] == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("readout error paths") {
  ReadoutSpec top10;
  top10.kind = ReadoutKind::LogProbTop10;
  CHECK_THROWS_AS(readout_logits(QState::zero(3), top10), std::invalid_argument);
  ReadoutSpec classical;
  classical.kind = ReadoutKind::ClassicalLogits;
  CHECK_THROWS_AS(readout_logits(QState::zero(3), classical), std::invalid_argument);
}

TEST_CASE("loss kind follows the class count and model pairing is enforced") {
  const Dataset binary = random_real_ds(6, 8, 2, 1);
  const Dataset ten = random_real_ds(10, 8, 10, 2);

  Model q = qnn_binary_model(3);
  CHECK(model_loss_kind(q, binary) == LossKind::BinaryCrossEntropy);
  CHECK_THROWS_AS(model_loss_kind(q, ten), std::invalid_argument);

  QnnModel top;
  top.circuit = build_circuit(LayoutKind::HeaRing, 4, 1);
  top.params = init_params(top.circuit, InitScheme::Uniform0To2Pi, 4);
  top.readout.kind = ReadoutKind::LogProbTop10;
  Model mq = top;
  CHECK(model_loss_kind(mq, ten) == LossKind::CategoricalCrossEntropy);
  CHECK_THROWS_AS(model_loss_kind(mq, binary), std::invalid_argument);

  MLPSpec one;
  one.input = 8;
  one.output = 1;
  Model m1 = mlp_model(one, 5);
  CHECK(model_loss_kind(m1, binary) == LossKind::BinaryCrossEntropy);
  CHECK_THROWS_AS(model_loss_kind(m1, ten), std::invalid_argument);

  MLPSpec wide = one;
  wide.output = 10;
  Model m10 = mlp_model(wide, 6);
  CHECK(model_loss_kind(m10, ten) == LossKind::CategoricalCrossEntropy);
  CHECK_THROWS_AS(model_loss_kind(m10, binary), std::invalid_argument);
}

TEST_CASE("flat parameter views round-trip for both model kinds") {
  Model q = qnn_binary_model(7);
  const VectorXd qp = model_flat_params(q);
  CHECK(qp.size() == model_param_count(q));
  VectorXd shifted = qp.array() + 0.25;
  set_model_flat_params(q, shifted);
  CHECK(model_flat_params(q) == shifted);
  CHECK_THROWS_AS(set_model_flat_params(q, VectorXd::Zero(qp.size() + 1)),
                  std::invalid_argument);

  MLPSpec spec;
  spec.input = 4;
  spec.hidden = {3};
  spec.output = 2;
  Model m = mlp_model(spec, 8);
  const VectorXd mp = model_flat_params(m);
  CHECK(mp.size() == model_param_count(m));
  VectorXd bumped = mp.array() * 2.0;
  set_model_flat_params(m, bumped);
  CHECK(model_flat_params(m) == bumped);
}

TEST_CASE("adam closed-form first step and no-op on zero gradient") {
  VectorXd p = VectorXd::Zero(3);
  AdamState st = AdamState::zeros(3);
  adam_step(p, VectorXd::Zero(3), st, 0.1);
  CHECK(st.t == 1);
  CHECK(p.cwiseAbs().maxCoeff() == 0.0);

  VectorXd q = VectorXd::Zero(1);
  AdamState st2 = AdamState::zeros(1);
  VectorXd g(1);
  g << 1.0;
  adam_step(q, g, st2, 0.1);
  CHECK(q[0] == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-15));

  AdamState bad = AdamState::zeros(2);
  CHECK_THROWS_AS(adam_step(q, g, bad, 0.1), std::invalid_argument);
}

TEST_CASE("adam trajectories are reproducible") {
  Rng rng(99);
  VectorXd a = VectorXd::Zero(5), b = VectorXd::Zero(5);
  AdamState sa = AdamState::zeros(5), sb = AdamState::zeros(5);
  std::vector<VectorXd> grads;
  for (int i = 0; i < 20; ++i) grads.push_back(rng.uniform_vector(5, -1.0, 1.0));
  for (const auto& g : grads) adam_step(a, g, sa, 0.01);
  for (const auto& g : grads) adam_step(b, g, sb, 0.01);
  CHECK(a == b);
  CHECK(sa.t == 20);
}

TEST_CASE("loss values match the stable closed forms") {
  const Dataset binary = random_real_ds(1, 4, 2, 11);
  MLPSpec spec;
  spec.input = 4;
  spec.output = 1;
  Model m = mlp_model(spec, 12);
  const double f = model_logits(m, binary, 0)[0];
  const int y = binary.labels[0];
  VectorXd grad;
  const double loss = loss_and_grad(m, binary, {0}, grad);
  const double expect = std::log1p(std::exp(-std::abs(f))) + std::max(f, 0.0) - y * f;
  CHECK(loss == doctest::Approx(expect).epsilon(1e-14));

  const Dataset three = random_real_ds(1, 4, 3, 13);
  MLPSpec spec3;
  spec3.input = 4;
  spec3.output = 3;
  Model m3 = mlp_model(spec3, 14);
  const VectorXd l3 = model_logits(m3, three, 0);
  VectorXd grad3;
  const double loss3 = loss_and_grad(m3, three, {0}, grad3);
  const double mx = l3.maxCoeff();
  const double expect3 =
      -l3[three.labels[0]] + mx + std::log((l3.array() - mx).exp().sum());
  CHECK(loss3 == doctest::Approx(expect3).epsilon(1e-14));
}

TEST_CASE("mean batch gradient matches finite differences") {
  const Dataset binary = random_real_ds(6, 8, 2, 21);
  Model q = qnn_binary_model(22);
  std::vector<Eigen::Index> idx = {0, 1, 2, 3, 4, 5};
  VectorXd grad;
  loss_and_grad(q, binary, idx, grad);
  check_close(grad, fd_loss_grad(q, binary, idx, 1e-5), 1e-5, 1e-7);

  const Dataset three = random_real_ds(8, 4, 3, 23);
  MLPSpec spec;
  spec.input = 4;
  spec.hidden = {5};
  spec.output = 3;
  Model m = mlp_model(spec, 24);
  std::vector<Eigen::Index> all(8);
  for (int i = 0; i < 8; ++i) all[i] = i;
  loss_and_grad(m, three, all, grad);
  check_close(grad, fd_loss_grad(m, three, all, 1e-6), 1e-5, 1e-7);

  CHECK_THROWS_AS(loss_and_grad(m, three, {}, grad), std::invalid_argument);
}

TEST_CASE("batch loss and gradient are the sample means") {
  const Dataset binary = random_real_ds(5, 8, 2, 31);
  Model q = qnn_binary_model(32);
  std::vector<Eigen::Index> idx = {0, 1, 2, 3, 4};
  VectorXd batch;
  const double mean_loss = loss_and_grad(q, binary, idx, batch);

  VectorXd sum = VectorXd::Zero(batch.size());
  double total = 0.0;
  for (Eigen::Index i : idx) {
    VectorXd g;
    total += sample_loss_grad(q, binary, i, g);
    sum += g;
  }
  CHECK(mean_loss == doctest::Approx(total / 5.0).epsilon(1e-13));
  CHECK((batch - sum / 5.0).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("logit gradients for the raw single-logit output") {
  const Dataset binary = random_real_ds(3, 8, 2, 41);

  Model q = qnn_binary_model(42);
  VectorXd grad;
  const double f = sample_logit_grad(q, binary, 1, grad);
  CHECK(f == doctest::Approx(model_logits(q, binary, 1)[0]).epsilon(1e-13));
  // central differences of the raw logit
  Model work = q;
  const VectorXd base = model_flat_params(q);
  for (Eigen::Index k = 0; k < base.size(); ++k) {
    VectorXd up = base, dn = base;
    up[k] += 1e-5;
    dn[k] -= 1e-5;
    set_model_flat_params(work, up);
    const double fu = model_logits(work, binary, 1)[0];
    set_model_flat_params(work, dn);
    const double fd = model_logits(work, binary, 1)[0];
    const double want = (fu - fd) / 2e-5;
    if (std::abs(want) > 1e-8)
      CHECK(std::abs(grad[k] - want) / std::abs(want) < 1e-5);
    else
      CHECK(std::abs(grad[k] - want) < 1e-7);
  }

  MLPSpec spec;
  spec.input = 8;
  spec.hidden = {4};
  spec.output = 1;
  Model m = mlp_model(spec, 43);
  const double fm = sample_logit_grad(m, binary, 0, grad);
  CHECK(fm == doctest::Approx(model_logits(m, binary, 0)[0]).epsilon(1e-13));

  MLPSpec wide = spec;
  wide.output = 3;
  Model bad = mlp_model(wide, 44);
  CHECK_THROWS_AS(sample_logit_grad(bad, binary, 0, grad), std::invalid_argument);
}

TEST_CASE("cotangent specs mirror the readout") {
  QnnModel q;
  q.circuit = build_circuit(LayoutKind::HeaRing, 3, 1);
  q.params = ParamVector::Zero(q.circuit.param_count);
  q.readout.kind = ReadoutKind::ZQubitSigmoid;
  q.readout.qubit = 1;
  q.readout.scale = 2.0;

  const CotangentSpec bce = qnn_cotangent(q, LossKind::BinaryCrossEntropy, 1);
  CHECK(bce.kind == CotangentSpec::Kind::BceZLogit);
  CHECK(bce.qubit == 1);
  CHECK(bce.scale == 2.0);
  CHECK(bce.label == 1);
  CHECK_THROWS_AS(qnn_cotangent(q, LossKind::CategoricalCrossEntropy, 0),
                  std::invalid_argument);

  q.readout.kind = ReadoutKind::LogProbTop10;
  const CotangentSpec cce = qnn_cotangent(q, LossKind::CategoricalCrossEntropy, 7);
  CHECK(cce.kind == CotangentSpec::Kind::CceLogProbTop10);
  CHECK(cce.label == 7);
  CHECK_THROWS_AS(qnn_cotangent(q, LossKind::BinaryCrossEntropy, 0),
                  std::invalid_argument);
}

TEST_CASE("evaluate follows the documented tie conventions") {
  // zero MLP emits logit 0 everywhere: binary predicts class 1
  MLPSpec spec;
  spec.input = 2;
  spec.output = 1;
  MlpModel zero;
  zero.spec = spec;
  zero.params = mlp_init(spec, 1);
  for (auto& w : zero.params.w) w.setZero();
  Model m = zero;

  Dataset ds = random_real_ds(10, 2, 2, 51);  // labels alternate 0,1
  CHECK(evaluate(m, ds) == doctest::Approx(0.5).epsilon(1e-15));

  // multiclass all-equal logits resolve to the lowest index
  MLPSpec spec3;
  spec3.input = 2;
  spec3.output = 3;
  MlpModel zero3;
  zero3.spec = spec3;
  zero3.params = mlp_init(spec3, 2);
  for (auto& w : zero3.params.w) w.setZero();
  Model m3 = zero3;
  Dataset all0 = random_real_ds(6, 2, 3, 52);
  all0.labels.setZero();
  CHECK(evaluate(m3, all0) == 1.0);
  all0.labels.setConstant(1);
  CHECK(evaluate(m3, all0) == 0.0);

  Dataset empty;
  empty.inputs = MatrixXd(0, 2);
  empty.labels = VectorXi(0);
  CHECK_THROWS_AS(evaluate(m, empty), std::invalid_argument);
}

TEST_CASE("an untrained wide head guesses at chance level") {
  MLPSpec spec;
  spec.input = 16;
  spec.hidden = {8};
  spec.output = 10;
  Model m = mlp_model(spec, 61);
  const Dataset ds = random_real_ds(1000, 16, 10, 62);
  const double acc = evaluate(m, ds);
  CHECK(acc > 0.05);
  CHECK(acc < 0.17);
}

TEST_CASE("train_task with zero learning rate changes nothing") {
  const Dataset train = random_real_ds(12, 8, 2, 71);
  const Dataset test = random_real_ds(8, 8, 2, 72);
  TaskData task{train, test};

  Model q = qnn_binary_model(73);
  const VectorXd before = model_flat_params(q);
  const double acc_train = evaluate(q, train);
  const double acc_test = evaluate(q, test);

  AdamState opt = AdamState::zeros(before.size());
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.batch_size = 4;
  cfg.epochs = 2;
  cfg.seed = 5;
  const TaskMetrics tm = train_task(q, opt, task, cfg, 0);
  CHECK(model_flat_params(q) == before);
  CHECK(tm.train_accuracy == acc_train);
  CHECK(tm.test_accuracy == acc_test);
  CHECK(tm.mean_grad_norm > 0.0);
}

TEST_CASE("train_task validates its config") {
  const Dataset ds = random_real_ds(4, 4, 2, 81);
  TaskData task{ds, ds};
  MLPSpec spec;
  spec.input = 4;
  spec.output = 1;
  Model m = mlp_model(spec, 82);
  AdamState opt = AdamState::zeros(model_param_count(m));
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(train_task(m, opt, task, cfg, 0), std::invalid_argument);
  cfg.epochs = 1;
  cfg.batch_size = 0;
  CHECK_THROWS_AS(train_task(m, opt, task, cfg, 0), std::invalid_argument);
  cfg.batch_size = 4;
  TaskData empty;
  empty.train.inputs = MatrixXd(0, 4);
  empty.train.labels = VectorXi(0);
  CHECK_THROWS_AS(train_task(m, opt, empty, cfg, 0), std::invalid_argument);
}

TEST_CASE("training separates a separable toy task") {
  Rng rng(91);
  const int per_class = 20;
  Dataset ds;
  ds.inputs = MatrixXd(2 * per_class, 2);
  ds.labels = VectorXi(2 * per_class);
  ds.class_count = 2;
  for (int i = 0; i < 2 * per_class; ++i) {
    const int y = i % 2;
    ds.inputs(i, 0) = (y == 1 ? 1.0 : -1.0) + rng.uniform(-0.3, 0.3);
    ds.inputs(i, 1) = rng.uniform(-0.5, 0.5);
    ds.labels[i] = y;
  }
  TaskData task{ds, ds};

  MLPSpec spec;
  spec.input = 2;
  spec.hidden = {8};
  spec.output = 1;
  Model m = mlp_model(spec, 92);
  AdamState opt = AdamState::zeros(model_param_count(m));
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 8;
  cfg.epochs = 50;
  cfg.seed = 93;
  const TaskMetrics tm = train_task(m, opt, task, cfg, 0);
  CHECK(tm.train_accuracy == 1.0);
  CHECK(tm.test_accuracy == 1.0);
}

TEST_CASE("train_task is deterministic and task index feeds the shuffle") {
  const Dataset train = random_real_ds(16, 8, 2, 94);
  const Dataset test = random_real_ds(8, 8, 2, 95);
  TaskData task{train, test};
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 4;
  cfg.epochs = 1;
  cfg.seed = 96;

  Model a = qnn_binary_model(97);
  Model b = qnn_binary_model(97);
  AdamState oa = AdamState::zeros(model_param_count(a));
  AdamState ob = AdamState::zeros(model_param_count(b));
  train_task(a, oa, task, cfg, 3);
  train_task(b, ob, task, cfg, 3);
  CHECK(model_flat_params(a) == model_flat_params(b));

  Model c = qnn_binary_model(97);
  AdamState oc = AdamState::zeros(model_param_count(c));
  train_task(c, oc, task, cfg, 4);
  CHECK(model_flat_params(a) != model_flat_params(c));
}

TEST_CASE("per-task optimizer reset zeroes the step counter") {
  const Dataset ds = random_real_ds(8, 4, 2, 98);
  TaskData task{ds, ds};
  MLPSpec spec;
  spec.input = 4;
  spec.hidden = {3};
  spec.output = 1;
  Model m = mlp_model(spec, 99);
  AdamState opt = AdamState::zeros(model_param_count(m));
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.batch_size = 4;
  cfg.epochs = 2;
  cfg.seed = 100;
  train_task(m, opt, task, cfg, 0);
  CHECK(opt.t == 4);  // 2 epochs x 2 minibatches
  train_task(m, opt, task, cfg, 1);
  CHECK(opt.t == 8);

  cfg.reset = OptimizerReset::PerTask;
  train_task(m, opt, task, cfg, 2);
  CHECK(opt.t == 4);
}
