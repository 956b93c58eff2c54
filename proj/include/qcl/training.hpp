// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "qcl/ansatz.hpp"
#include "qcl/gradients.hpp"
#include "qcl/mlp.hpp"
#include "qcl/task_streams.hpp"

namespace qcl {

enum class ReadoutKind { LogProbTop10, ZQubitSigmoid, ClassicalLogits };

struct ReadoutSpec {
  ReadoutKind kind = ReadoutKind::ClassicalLogits;
  int qubit = 0;       // ZQubitSigmoid only
  double scale = 1.0;  // ZQubitSigmoid only
};

enum class LossKind { CategoricalCrossEntropy, BinaryCrossEntropy };

/// Logits from a post-circuit state. LogProbTop10 needs dim >= 10 and emits
/// log(max(p_c, 1e-12)) for c = 0..9; ZQubitSigmoid emits the single logit
/// scale * <Z_qubit>.
Eigen::VectorXd readout_logits(const QState& state, const ReadoutSpec& readout);

struct QnnModel {
  CircuitSpec circuit;
  ParamVector params;
  ReadoutSpec readout;
};

struct MlpModel {
  MLPSpec spec;
  MLPParams params;
};

using Model = std::variant<QnnModel, MlpModel>;

/// Binary tasks use a single logit with BCE; everything else softmax CCE.
LossKind model_loss_kind(const Model& model, const Dataset& ds);

Eigen::Index model_param_count(const Model& model);
Eigen::VectorXd model_flat_params(const Model& model);
void set_model_flat_params(Model& model, const Eigen::Ref<const Eigen::VectorXd>& flat);

/// Logits for one sample. Real inputs reach the QNN through
/// amplitude_encode, complex ones through encode_complex; the MLP sees real
/// rows as-is and complex inputs as stacked (real, imag) features.
Eigen::VectorXd model_logits(const Model& model, const Dataset& ds, Eigen::Index i);

/// Mean loss over the index set; grad gets the mean loss gradient in flat
/// layout. Per-sample contributions are accumulated in ascending index order.
double loss_and_grad(const Model& model, const Dataset& ds,
                     const std::vector<Eigen::Index>& idx, Eigen::VectorXd& grad);

/// Per-sample loss gradient (flat layout) for score/FIM uses.
double sample_loss_grad(const Model& model, const Dataset& ds, Eigen::Index i,
                        Eigen::VectorXd& grad);

/// Gradient of the raw logit f for binary-readout models (BCE score form and
/// the FIM curvature factor need it).
double sample_logit_grad(const Model& model, const Dataset& ds, Eigen::Index i,
                         Eigen::VectorXd& grad);

struct AdamState {
  Eigen::VectorXd m, v;
  long t = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  static AdamState zeros(Eigen::Index n);
};

void adam_step(Eigen::VectorXd& params, const Eigen::Ref<const Eigen::VectorXd>& grad,
               AdamState& state, double learning_rate);

enum class OptimizerReset { Never, PerTask };

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 128;
  int epochs = 1;
  OptimizerReset reset = OptimizerReset::Never;
  std::uint64_t seed = 0;
};

struct TaskMetrics {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double mean_grad_norm = 0.0;
};

/// Trains in place: per epoch, a fresh shuffle from substream
/// (seed, task_index), contiguous minibatches (last one smaller), one Adam
/// step each. mean_grad_norm averages the minibatch-gradient L2 norms.
TaskMetrics train_task(Model& model, AdamState& opt, const TaskData& task,
                       const TrainConfig& cfg, int task_index);

/// Accuracy; multiclass by argmax (ties to the lowest index), binary by
/// logit sign (sigmoid >= 0.5 predicts class 1).
double evaluate(const Model& model, const Dataset& ds);

/// CotangentSpec for a quantum model under the given loss and label.
CotangentSpec qnn_cotangent(const QnnModel& q, LossKind loss, int label);

}  // namespace qcl
