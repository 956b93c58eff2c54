// SPDX-License-Identifier: Apache-2.0
#include "qcl/training.hpp"

#include <cmath>
#include <stdexcept>

#include "qcl/parallel.hpp"
#include "qcl/rng.hpp"

namespace qcl {

namespace {

double stable_bce_from_logit(double f, int y) {
  return std::log1p(std::exp(-std::abs(f))) + std::max(f, 0.0) - y * f;
}

double stable_cce_from_logits(const Eigen::Ref<const Eigen::VectorXd>& l, int y) {
  const double m = l.maxCoeff();
  return -l[y] + m + std::log((l.array() - m).exp().sum());
}

Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& l) {
  const double m = l.maxCoeff();
  Eigen::VectorXd e = (l.array() - m).exp();
  return e / e.sum();
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

QState qnn_input(const QnnModel& q, const Dataset& ds, Eigen::Index i) {
  if (ds.complex_inputs()) return encode_complex(ds.states[i], q.circuit.n_qubits);
  return amplitude_encode(ds.inputs.row(i), q.circuit.n_qubits);
}

Eigen::VectorXd mlp_features(const Dataset& ds, Eigen::Index i) {
  if (ds.complex_inputs()) return complex_to_real_features(ds.states[i]);
  return ds.inputs.row(i);
}

void check_model_vs_dataset(const Model& model, const Dataset& ds) {
  const int classes = ds.class_count;
  if (const auto* q = std::get_if<QnnModel>(&model)) {
    if (q->readout.kind == ReadoutKind::LogProbTop10 && classes != 10)
      throw std::invalid_argument("LogProbTop10 readout needs a 10-class task");
    if (q->readout.kind == ReadoutKind::ZQubitSigmoid && classes != 2)
      throw std::invalid_argument("ZQubitSigmoid readout needs a binary task");
    if (q->readout.kind == ReadoutKind::ClassicalLogits)
      throw std::invalid_argument("ClassicalLogits is not a quantum readout");
  } else {
    const auto& m = std::get<MlpModel>(model);
    const int out = m.spec.output;
    if (classes == 2 && out != 1)
      throw std::invalid_argument("binary tasks use a single-logit MLP head");
    if (classes != 2 && out != classes)
      throw std::invalid_argument("MLP output width must equal the class count");
  }
}

}  // namespace

Eigen::VectorXd readout_logits(const QState& state, const ReadoutSpec& readout) {
  switch (readout.kind) {
    case ReadoutKind::LogProbTop10: {
      if (state.dim() < 10)
        throw std::invalid_argument("LogProbTop10 needs at least 10 basis states");
      const Eigen::VectorXd p = probabilities(state).head(10);
      Eigen::VectorXd l(10);
      for (int c = 0; c < 10; ++c) l[c] = std::log(std::max(p[c], kProbClamp));
      return l;
    }
    case ReadoutKind::ZQubitSigmoid: {
      Eigen::VectorXd l(1);
      l[0] = readout.scale * expect_z(state, readout.qubit);
      return l;
    }
    case ReadoutKind::ClassicalLogits:
      throw std::invalid_argument("readout_logits: ClassicalLogits passes through, "
                                  "no state to read");
  }
  throw std::logic_error("readout_logits: bad kind");
}

LossKind model_loss_kind(const Model& model, const Dataset& ds) {
  check_model_vs_dataset(model, ds);
  return ds.class_count == 2 ? LossKind::BinaryCrossEntropy
                             : LossKind::CategoricalCrossEntropy;
}

Eigen::Index model_param_count(const Model& model) {
  if (const auto* q = std::get_if<QnnModel>(&model)) return q->circuit.param_count;
  const auto& m = std::get<MlpModel>(model);
  return mlp_param_count(m.spec);
}

Eigen::VectorXd model_flat_params(const Model& model) {
  if (const auto* q = std::get_if<QnnModel>(&model)) return q->params;
  return pack_params(std::get<MlpModel>(model).params);
}

void set_model_flat_params(Model& model, const Eigen::Ref<const Eigen::VectorXd>& flat) {
  if (auto* q = std::get_if<QnnModel>(&model)) {
    if (flat.size() != q->circuit.param_count)
      throw std::invalid_argument("set_model_flat_params: length mismatch");
    q->params = flat;
    return;
  }
  auto& m = std::get<MlpModel>(model);
  m.params = unpack_params(m.spec, flat);
}

Eigen::VectorXd model_logits(const Model& model, const Dataset& ds, Eigen::Index i) {
  if (const auto* q = std::get_if<QnnModel>(&model)) {
    QState s = qnn_input(*q, ds, i);
    run_circuit(q->circuit, q->params, s);
    return readout_logits(s, q->readout);
  }
  const auto& m = std::get<MlpModel>(model);
  return mlp_forward(m.spec, m.params, mlp_features(ds, i));
}

CotangentSpec qnn_cotangent(const QnnModel& q, LossKind loss, int label) {
  CotangentSpec cot;
  cot.label = label;
  if (loss == LossKind::BinaryCrossEntropy) {
    if (q.readout.kind != ReadoutKind::ZQubitSigmoid)
      throw std::invalid_argument("BCE on a QNN needs the ZQubitSigmoid readout");
    cot.kind = CotangentSpec::Kind::BceZLogit;
    cot.qubit = q.readout.qubit;
    cot.scale = q.readout.scale;
  } else {
    if (q.readout.kind != ReadoutKind::LogProbTop10)
      throw std::invalid_argument("CCE on a QNN needs the LogProbTop10 readout");
    cot.kind = CotangentSpec::Kind::CceLogProbTop10;
  }
  return cot;
}

namespace {

// Per-sample loss and flat-gradient for the MLP path.
double mlp_sample_loss_grad(const MlpModel& m, LossKind loss, const Dataset& ds,
                            Eigen::Index i, Eigen::VectorXd& grad) {
  const Eigen::VectorXd x = mlp_features(ds, i);
  const Eigen::VectorXd logits = mlp_forward(m.spec, m.params, x);
  const int y = ds.labels[i];
  double value;
  Eigen::VectorXd dlogits(logits.size());
  if (loss == LossKind::BinaryCrossEntropy) {
    value = stable_bce_from_logit(logits[0], y);
    dlogits[0] = sigmoid(logits[0]) - y;
  } else {
    value = stable_cce_from_logits(logits, y);
    dlogits = softmax(logits);
    dlogits[y] -= 1.0;
  }
  grad = pack_params(mlp_backward(m.spec, m.params, x, dlogits));
  return value;
}

double qnn_sample_loss_grad(const QnnModel& q, const PreparedCircuit& pc, LossKind loss,
                            const Dataset& ds, Eigen::Index i, Eigen::VectorXd& grad) {
  const CotangentSpec cot = qnn_cotangent(q, loss, ds.labels[i]);
  return adjoint_gradient(pc, qnn_input(q, ds, i), cot, grad);
}

}  // namespace

double loss_and_grad(const Model& model, const Dataset& ds,
                     const std::vector<Eigen::Index>& idx, Eigen::VectorXd& grad) {
  if (idx.empty()) throw std::invalid_argument("loss_and_grad: empty batch");
  const LossKind loss = model_loss_kind(model, ds);
  const Eigen::Index n = Eigen::Index(idx.size());

  if (const auto* q = std::get_if<QnnModel>(&model)) {
    const PreparedCircuit pc = prepare_circuit(q->circuit, q->params);
    std::vector<Eigen::VectorXd> grads(idx.size());
    std::vector<double> losses(idx.size());
    parallel_for(n, [&](Eigen::Index k) {
      losses[k] = qnn_sample_loss_grad(*q, pc, loss, ds, idx[k], grads[k]);
    });
    grad = Eigen::VectorXd::Zero(q->circuit.param_count);
    double total = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      grad += grads[k];
      total += losses[k];
    }
    grad /= double(n);
    return total / double(n);
  }

  // Batched matrix path for the MLP.
  const auto& m = std::get<MlpModel>(model);
  Eigen::MatrixXd x(n, ds.complex_inputs() ? 2 * ds.states[0].size()
                                           : ds.inputs.cols());
  for (Eigen::Index k = 0; k < n; ++k) x.row(k) = mlp_features(ds, idx[k]);
  const Eigen::MatrixXd logits = mlp_forward_batch(m.spec, m.params, x);
  Eigen::MatrixXd dlogits(logits.rows(), logits.cols());
  double total = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const int y = ds.labels[idx[k]];
    if (loss == LossKind::BinaryCrossEntropy) {
      total += stable_bce_from_logit(logits(k, 0), y);
      dlogits(k, 0) = (sigmoid(logits(k, 0)) - y) / double(n);
    } else {
      total += stable_cce_from_logits(logits.row(k), y);
      Eigen::VectorXd sm = softmax(logits.row(k));
      sm[y] -= 1.0;
      dlogits.row(k) = sm.transpose() / double(n);
    }
  }
  grad = pack_params(mlp_backward_batch(m.spec, m.params, x, dlogits));
  return total / double(n);
}

double sample_loss_grad(const Model& model, const Dataset& ds, Eigen::Index i,
                        Eigen::VectorXd& grad) {
  const LossKind loss = model_loss_kind(model, ds);
  if (const auto* q = std::get_if<QnnModel>(&model)) {
    const PreparedCircuit pc = prepare_circuit(q->circuit, q->params);
    return qnn_sample_loss_grad(*q, pc, loss, ds, i, grad);
  }
  return mlp_sample_loss_grad(std::get<MlpModel>(model), loss, ds, i, grad);
}

double sample_logit_grad(const Model& model, const Dataset& ds, Eigen::Index i,
                         Eigen::VectorXd& grad) {
  if (const auto* q = std::get_if<QnnModel>(&model)) {
    if (q->readout.kind != ReadoutKind::ZQubitSigmoid)
      throw std::invalid_argument("sample_logit_grad: needs a single-logit readout");
    CotangentSpec cot;
    cot.kind = CotangentSpec::Kind::RawZLogit;
    cot.qubit = q->readout.qubit;
    cot.scale = q->readout.scale;
    return adjoint_gradient(q->circuit, q->params, qnn_input(*q, ds, i), cot, grad);
  }
  const auto& m = std::get<MlpModel>(model);
  if (m.spec.output != 1)
    throw std::invalid_argument("sample_logit_grad: needs a single-logit head");
  const Eigen::VectorXd x = mlp_features(ds, i);
  const double f = mlp_forward(m.spec, m.params, x)[0];
  Eigen::VectorXd one(1);
  one[0] = 1.0;
  grad = pack_params(mlp_backward(m.spec, m.params, x, one));
  return f;
}

AdamState AdamState::zeros(Eigen::Index n) {
  AdamState s;
  s.m = Eigen::VectorXd::Zero(n);
  s.v = Eigen::VectorXd::Zero(n);
  return s;
}

void adam_step(Eigen::VectorXd& params, const Eigen::Ref<const Eigen::VectorXd>& grad,
               AdamState& state, double learning_rate) {
  if (params.size() != grad.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: size mismatch");
  state.t += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseAbs2();
  const double mc = 1.0 - std::pow(state.beta1, double(state.t));
  const double vc = 1.0 - std::pow(state.beta2, double(state.t));
  params.array() -=
      learning_rate * (state.m.array() / mc) /
      ((state.v.array() / vc).sqrt() + state.eps);
}

TaskMetrics train_task(Model& model, AdamState& opt, const TaskData& task,
                       const TrainConfig& cfg, int task_index) {
  if (cfg.epochs < 1) throw std::invalid_argument("train_task: epochs must be >= 1");
  if (cfg.batch_size < 1)
    throw std::invalid_argument("train_task: batch_size must be >= 1");
  if (cfg.reset == OptimizerReset::PerTask)
    opt = AdamState::zeros(model_param_count(model));

  Rng shuffle = Rng(cfg.seed).fork(streams::kShuffle)
                              .fork(static_cast<std::uint64_t>(task_index));
  const Eigen::Index n = task.train.size();
  if (n == 0) throw std::invalid_argument("train_task: empty training set");

  Eigen::VectorXd params = model_flat_params(model);
  Eigen::VectorXd grad;
  double norm_sum = 0.0;
  long steps = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<int> perm = shuffle.permutation(static_cast<int>(n));
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index stop = std::min<Eigen::Index>(start + cfg.batch_size, n);
      std::vector<Eigen::Index> idx(perm.begin() + start, perm.begin() + stop);
      const double unused_loss = loss_and_grad(model, task.train, idx, grad);
      (void)unused_loss;
      norm_sum += grad.norm();
      steps += 1;
      adam_step(params, grad, opt, cfg.learning_rate);
      set_model_flat_params(model, params);
    }
  }

  TaskMetrics out;
  out.mean_grad_norm = norm_sum / double(steps);
  out.train_accuracy = evaluate(model, task.train);
  out.test_accuracy = evaluate(model, task.test);
  return out;
}

double evaluate(const Model& model, const Dataset& ds) {
  check_model_vs_dataset(model, ds);
  const Eigen::Index n = ds.size();
  if (n == 0) throw std::invalid_argument("evaluate: empty dataset");
  std::vector<int> correct(n, 0);
  parallel_for(n, [&](Eigen::Index i) {
    const Eigen::VectorXd logits = model_logits(model, ds, i);
    int pred;
    if (logits.size() == 1) {
      pred = logits[0] >= 0.0 ? 1 : 0;
    } else {
      pred = 0;
      for (int c = 1; c < logits.size(); ++c)
        if (logits[c] > logits[pred]) pred = c;
    }
    correct[i] = pred == ds.labels[i] ? 1 : 0;
  });
  long hits = 0;
  for (Eigen::Index i = 0; i < n; ++i) hits += correct[i];
  return double(hits) / double(n);
}

}  // namespace qcl
