// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

#include <Eigen/Dense>

#include "qcl/ansatz.hpp"
#include "qcl/statevector.hpp"

namespace qcl {

/// What scalar the gradient is taken of, as a function of the output state.
///
///  - BceZLogit:       L = BCE(sigmoid(scale * <Z_qubit>), label)
///  - CceLogProbTop10: L = cross-entropy of softmax over logits
///                     log(max(p_c, 1e-12)), c = 0..9, against label
///  - RawZLogit:       L = scale * <Z_qubit> itself (for logit gradients)
struct CotangentSpec {
  enum class Kind { BceZLogit, CceLogProbTop10, RawZLogit };
  Kind kind = Kind::RawZLogit;
  int qubit = 0;
  double scale = 1.0;
  int label = 0;
};

inline constexpr double kProbClamp = 1e-12;

/// The intermediate quantities the loss sees: [<Z_q>] for the Z kinds, the
/// first 10 basis probabilities for CceLogProbTop10.
Eigen::VectorXd readout_quantities(const QState& state, const CotangentSpec& cot);

double loss_from_quantities(const Eigen::Ref<const Eigen::VectorXd>& q,
                            const CotangentSpec& cot);

Eigen::VectorXd dloss_dquantities(const Eigen::Ref<const Eigen::VectorXd>& q,
                                  const CotangentSpec& cot);

/// Forward evaluation of the cotangent's scalar.
double circuit_loss(const CircuitSpec& spec, const Eigen::Ref<const ParamVector>& params,
                    const QState& input, const CotangentSpec& cot);

/// dV/dtheta_k of the SU(4) gate by divided differences on the generator
/// eigensystem; exact at degeneracies (confluent limit built in).
Eigen::Matrix4cd su4_gate_derivative(const Eigen::Ref<const Eigen::VectorXd>& theta15,
                                     int k);
Eigen::Matrix4cd su4_gate_derivative(const Su4Eigensystem& es, int k);

/// Reverse-sweep gradient: one forward pass plus one backward pass with
/// per-gate un-application; two live statevectors. Returns the loss, fills
/// grad (resized to spec.param_count).
double adjoint_gradient(const CircuitSpec& spec,
                        const Eigen::Ref<const ParamVector>& params,
                        const QState& input, const CotangentSpec& cot,
                        Eigen::VectorXd& grad);
double adjoint_gradient(const PreparedCircuit& pc, const QState& input,
                        const CotangentSpec& cot, Eigen::VectorXd& grad);

/// Exact two-point rule at half-angle convention: d<Q>/dtheta_k =
/// (<Q>(theta_k + pi/2) - <Q>(theta_k - pi/2)) / 2, chained through the loss.
/// Only RY/RZ placements are admitted; SU4 and CRX are rejected.
double parameter_shift_gradient(const CircuitSpec& spec,
                                const Eigen::Ref<const ParamVector>& params,
                                const QState& input, const CotangentSpec& cot,
                                Eigen::VectorXd& grad);

/// Central differences, f evaluated 2*dim times.
Eigen::VectorXd finite_diff_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                     const Eigen::VectorXd& params, double h = 1e-5);

}  // namespace qcl
