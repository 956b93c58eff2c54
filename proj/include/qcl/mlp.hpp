// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace qcl {

enum class Activation { Relu, Sin };

/// Dense MLP: input -> hidden[0] -> ... -> hidden.back() -> output, the named
/// activation after every hidden layer, linear head. With with_bias false the
/// biases stay identically zero (init and gradients).
struct MLPSpec {
  int input = 0;
  std::vector<int> hidden;
  int output = 0;
  Activation act = Activation::Relu;
  bool with_bias = true;
};

/// w[l] has shape (fan_out x fan_in); b[l] length fan_out.
struct MLPParams {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;
};

int mlp_param_count(const MLPSpec& spec);

/// Glorot-uniform weights, U[+-sqrt(6/(fan_in+fan_out))]; zero biases.
MLPParams mlp_init(const MLPSpec& spec, std::uint64_t seed);

Eigen::VectorXd mlp_forward(const MLPSpec& spec, const MLPParams& params,
                            const Eigen::Ref<const Eigen::VectorXd>& x);

/// Rows of x are samples; returns one row of logits per sample.
Eigen::MatrixXd mlp_forward_batch(const MLPSpec& spec, const MLPParams& params,
                                  const Eigen::Ref<const Eigen::MatrixXd>& x);

/// Gradient of sum_i L_i given dlogits (row per sample, already scaled by any
/// mean factor). ReLU derivative at exactly 0 is 0.
MLPParams mlp_backward_batch(const MLPSpec& spec, const MLPParams& params,
                             const Eigen::Ref<const Eigen::MatrixXd>& x,
                             const Eigen::Ref<const Eigen::MatrixXd>& dlogits);

/// Single-sample convenience wrapper over the batch form.
MLPParams mlp_backward(const MLPSpec& spec, const MLPParams& params,
                       const Eigen::Ref<const Eigen::VectorXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& dlogits);

/// Multiplies all weight matrices and biases by lambda.
MLPParams scale_weights(const MLPParams& params, double lambda);

Eigen::VectorXd pack_params(const MLPParams& params);
MLPParams unpack_params(const MLPSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& flat);

}  // namespace qcl
