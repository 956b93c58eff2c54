// SPDX-License-Identifier: Apache-2.0
#include "qcl/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "qcl/rng.hpp"

namespace qcl {

namespace {

std::vector<int> layer_widths(const MLPSpec& spec) {
  if (spec.input < 1 || spec.output < 1)
    throw std::invalid_argument("MLPSpec: input and output must be positive");
  std::vector<int> w;
  w.push_back(spec.input);
  for (int h : spec.hidden) {
    if (h < 1) throw std::invalid_argument("MLPSpec: hidden widths must be positive");
    w.push_back(h);
  }
  w.push_back(spec.output);
  return w;
}

Eigen::MatrixXd activate(const MLPSpec& spec, const Eigen::MatrixXd& z) {
  if (spec.act == Activation::Relu) return z.cwiseMax(0.0);
  return z.array().sin();
}

// Derivative of the activation, evaluated at pre-activations z.
Eigen::MatrixXd activate_prime(const MLPSpec& spec, const Eigen::MatrixXd& z) {
  if (spec.act == Activation::Relu)
    return (z.array() > 0.0).cast<double>();
  return z.array().cos();
}

}  // namespace

int mlp_param_count(const MLPSpec& spec) {
  const auto widths = layer_widths(spec);
  int count = 0;
  for (size_t l = 0; l + 1 < widths.size(); ++l)
    count += widths[l + 1] * widths[l] + widths[l + 1];
  return count;
}

MLPParams mlp_init(const MLPSpec& spec, std::uint64_t seed) {
  const auto widths = layer_widths(spec);
  Rng rng(seed);
  MLPParams p;
  for (size_t l = 0; l + 1 < widths.size(); ++l) {
    const int fan_in = widths[l], fan_out = widths[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int i = 0; i < fan_out; ++i)
      for (int j = 0; j < fan_in; ++j) w(i, j) = rng.uniform(-bound, bound);
    p.w.push_back(std::move(w));
    p.b.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return p;
}

Eigen::MatrixXd mlp_forward_batch(const MLPSpec& spec, const MLPParams& params,
                                  const Eigen::Ref<const Eigen::MatrixXd>& x) {
  if (x.cols() != spec.input)
    throw std::invalid_argument("mlp_forward: input width mismatch");
  Eigen::MatrixXd h = x;
  for (size_t l = 0; l < params.w.size(); ++l) {
    Eigen::MatrixXd z = h * params.w[l].transpose();
    if (spec.with_bias) z.rowwise() += params.b[l].transpose();
    h = (l + 1 < params.w.size()) ? activate(spec, z) : z;
  }
  return h;
}

Eigen::VectorXd mlp_forward(const MLPSpec& spec, const MLPParams& params,
                            const Eigen::Ref<const Eigen::VectorXd>& x) {
  return mlp_forward_batch(spec, params, x.transpose()).row(0);
}

MLPParams mlp_backward_batch(const MLPSpec& spec, const MLPParams& params,
                             const Eigen::Ref<const Eigen::MatrixXd>& x,
                             const Eigen::Ref<const Eigen::MatrixXd>& dlogits) {
  const size_t layers = params.w.size();
  if (x.cols() != spec.input)
    throw std::invalid_argument("mlp_backward: input width mismatch");
  if (dlogits.rows() != x.rows() || dlogits.cols() != spec.output)
    throw std::invalid_argument("mlp_backward: dlogits shape mismatch");

  std::vector<Eigen::MatrixXd> acts;   // activations entering each layer
  std::vector<Eigen::MatrixXd> pre;    // pre-activations of hidden layers
  acts.reserve(layers);
  acts.push_back(x);
  for (size_t l = 0; l + 1 < layers; ++l) {
    Eigen::MatrixXd z = acts.back() * params.w[l].transpose();
    if (spec.with_bias) z.rowwise() += params.b[l].transpose();
    pre.push_back(z);
    acts.push_back(activate(spec, z));
  }

  MLPParams grad;
  grad.w.resize(layers);
  grad.b.resize(layers);
  Eigen::MatrixXd delta = dlogits;
  for (size_t l = layers; l-- > 0;) {
    grad.w[l] = delta.transpose() * acts[l];
    grad.b[l] = spec.with_bias ? Eigen::VectorXd(delta.colwise().sum())
                               : Eigen::VectorXd::Zero(params.b[l].size());
    if (l > 0)
      delta = (delta * params.w[l]).cwiseProduct(activate_prime(spec, pre[l - 1]));
  }
  return grad;
}

MLPParams mlp_backward(const MLPSpec& spec, const MLPParams& params,
                       const Eigen::Ref<const Eigen::VectorXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& dlogits) {
  return mlp_backward_batch(spec, params, x.transpose(), dlogits.transpose());
}

MLPParams scale_weights(const MLPParams& params, double lambda) {
  MLPParams out;
  for (const auto& w : params.w) out.w.push_back(lambda * w);
  for (const auto& b : params.b) out.b.push_back(lambda * b);
  return out;
}

Eigen::VectorXd pack_params(const MLPParams& params) {
  Eigen::Index total = 0;
  for (size_t l = 0; l < params.w.size(); ++l)
    total += params.w[l].size() + params.b[l].size();
  Eigen::VectorXd flat(total);
  Eigen::Index at = 0;
  for (size_t l = 0; l < params.w.size(); ++l) {
    flat.segment(at, params.w[l].size()) =
        Eigen::Map<const Eigen::VectorXd>(params.w[l].data(), params.w[l].size());
    at += params.w[l].size();
    flat.segment(at, params.b[l].size()) = params.b[l];
    at += params.b[l].size();
  }
  return flat;
}

MLPParams unpack_params(const MLPSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& flat) {
  if (flat.size() != mlp_param_count(spec))
    throw std::invalid_argument("unpack_params: length mismatch");
  const auto widths = layer_widths(spec);
  MLPParams p;
  Eigen::Index at = 0;
  for (size_t l = 0; l + 1 < widths.size(); ++l) {
    const int fan_in = widths[l], fan_out = widths[l + 1];
    p.w.push_back(Eigen::Map<const Eigen::MatrixXd>(flat.data() + at, fan_out, fan_in));
    at += Eigen::Index(fan_out) * fan_in;
    p.b.push_back(flat.segment(at, fan_out));
    at += fan_out;
  }
  return p;
}

}  // namespace qcl
