// SPDX-License-Identifier: Apache-2.0
#include "qcl/gradients.hpp"

#include <cmath>
#include <stdexcept>

namespace qcl {

using namespace std::complex_literals;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_cce_width(const QState& state) {
  if (state.dim() < 10)
    throw std::invalid_argument("CceLogProbTop10 needs at least 10 basis states (4 qubits)");
}

// Clamped log-probability logits over the first 10 basis states.
Eigen::VectorXd top10_logits(const Eigen::Ref<const Eigen::VectorXd>& probs) {
  Eigen::VectorXd l(10);
  for (int c = 0; c < 10; ++c) l[c] = std::log(std::max(probs[c], kProbClamp));
  return l;
}

Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

}  // namespace

Eigen::VectorXd readout_quantities(const QState& state, const CotangentSpec& cot) {
  switch (cot.kind) {
    case CotangentSpec::Kind::BceZLogit:
    case CotangentSpec::Kind::RawZLogit: {
      Eigen::VectorXd q(1);
      q[0] = expect_z(state, cot.qubit);
      return q;
    }
    case CotangentSpec::Kind::CceLogProbTop10: {
      check_cce_width(state);
      return probabilities(state).head(10);
    }
  }
  throw std::logic_error("readout_quantities: bad kind");
}

double loss_from_quantities(const Eigen::Ref<const Eigen::VectorXd>& q,
                            const CotangentSpec& cot) {
  switch (cot.kind) {
    case CotangentSpec::Kind::RawZLogit:
      return cot.scale * q[0];
    case CotangentSpec::Kind::BceZLogit: {
      if (cot.label != 0 && cot.label != 1)
        throw std::invalid_argument("BCE label must be 0 or 1");
      const double f = cot.scale * q[0];
      return std::log1p(std::exp(-std::abs(f))) + std::max(f, 0.0) - cot.label * f;
    }
    case CotangentSpec::Kind::CceLogProbTop10: {
      if (cot.label < 0 || cot.label >= 10)
        throw std::invalid_argument("CCE label must be in [0, 10)");
      const Eigen::VectorXd l = top10_logits(q);
      const double m = l.maxCoeff();
      return -l[cot.label] + m + std::log((l.array() - m).exp().sum());
    }
  }
  throw std::logic_error("loss_from_quantities: bad kind");
}

Eigen::VectorXd dloss_dquantities(const Eigen::Ref<const Eigen::VectorXd>& q,
                                  const CotangentSpec& cot) {
  switch (cot.kind) {
    case CotangentSpec::Kind::RawZLogit: {
      Eigen::VectorXd d(1);
      d[0] = cot.scale;
      return d;
    }
    case CotangentSpec::Kind::BceZLogit: {
      Eigen::VectorXd d(1);
      const double p = sigmoid(cot.scale * q[0]);
      d[0] = (p - cot.label) * cot.scale;
      return d;
    }
    case CotangentSpec::Kind::CceLogProbTop10: {
      const Eigen::VectorXd sm = softmax(top10_logits(q));
      Eigen::VectorXd d(10);
      for (int c = 0; c < 10; ++c) {
        const double dldl = sm[c] - (c == cot.label ? 1.0 : 0.0);
        d[c] = q[c] >= kProbClamp ? dldl / q[c] : 0.0;
      }
      return d;
    }
  }
  throw std::logic_error("dloss_dquantities: bad kind");
}

double circuit_loss(const CircuitSpec& spec, const Eigen::Ref<const ParamVector>& params,
                    const QState& input, const CotangentSpec& cot) {
  QState s = input;
  run_circuit(spec, params, s);
  return loss_from_quantities(readout_quantities(s, cot), cot);
}

namespace {

// lambda = dL/dpsi*, so that dL = 2 Re(lambda^dag dpsi).
QState cotangent_state(const QState& out, const CotangentSpec& cot) {
  QState lam;
  lam.n_qubits = out.n_qubits;
  lam.amplitudes = StateVector::Zero(out.dim());
  const Eigen::VectorXd q = readout_quantities(out, cot);
  const Eigen::VectorXd d = dloss_dquantities(q, cot);
  switch (cot.kind) {
    case CotangentSpec::Kind::BceZLogit:
    case CotangentSpec::Kind::RawZLogit: {
      const std::uint64_t mask = 1ull << (out.n_qubits - 1 - cot.qubit);
      for (std::uint64_t b = 0; b < static_cast<std::uint64_t>(out.dim()); ++b) {
        const double sign = (b & mask) ? -1.0 : 1.0;
        lam.amplitudes[b] = d[0] * sign * out.amplitudes[b];
      }
      break;
    }
    case CotangentSpec::Kind::CceLogProbTop10:
      for (int c = 0; c < 10; ++c) lam.amplitudes[c] = d[c] * out.amplitudes[c];
      break;
  }
  return lam;
}

Eigen::Matrix2cd rotation_derivative(GateKind kind, double theta) {
  const double c = std::cos(theta / 2.0), s = std::sin(theta / 2.0);
  Eigen::Matrix2cd m;
  if (kind == GateKind::Ry) {
    m << -0.5 * s, -0.5 * c, 0.5 * c, -0.5 * s;
  } else {
    m << Amplitude(-0.5 * s, -0.5 * c), 0, 0, Amplitude(-0.5 * s, 0.5 * c);
  }
  return m;
}

Eigen::Matrix4cd crx_derivative(double theta) {
  const double c = std::cos(theta / 2.0), s = std::sin(theta / 2.0);
  Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
  m(2, 2) = -0.5 * s;
  m(2, 3) = Amplitude(0.0, -0.5 * c);
  m(3, 2) = Amplitude(0.0, -0.5 * c);
  m(3, 3) = -0.5 * s;
  return m;
}

}  // namespace

Eigen::Matrix4cd su4_gate_derivative(const Su4Eigensystem& es, int k) {
  if (k < 0 || k >= 15)
    throw std::out_of_range("su4_gate_derivative: k must be in [0, 15)");
  const Eigen::Matrix4cd s =
      es.q.adjoint() * (Amplitude(0.0, -0.5) * su4_generators()[k]) * es.q;
  Eigen::Matrix4cd phi;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const double delta = es.lambda[i] - es.lambda[j];
      const double x = 0.5 * delta;
      const double sinc = std::abs(delta) < 1e-12 ? 1.0 : std::sin(x) / x;
      phi(i, j) = std::exp(Amplitude(0.0, -0.5 * (es.lambda[i] + es.lambda[j]))) * sinc;
    }
  return es.q * phi.cwiseProduct(s) * es.q.adjoint();
}

Eigen::Matrix4cd su4_gate_derivative(const Eigen::Ref<const Eigen::VectorXd>& theta15,
                                     int k) {
  return su4_gate_derivative(su4_eigensystem(theta15), k);
}

double adjoint_gradient(const PreparedCircuit& pc, const QState& input,
                        const CotangentSpec& cot, Eigen::VectorXd& grad) {
  const CircuitSpec& spec = *pc.spec;
  grad = Eigen::VectorXd::Zero(spec.param_count);

  QState psi = input;
  run_prepared(pc, psi);
  const Eigen::VectorXd q = readout_quantities(psi, cot);
  const double loss = loss_from_quantities(q, cot);
  QState lam = cotangent_state(psi, cot);

  for (size_t gi = spec.gates.size(); gi-- > 0;) {
    const auto& pl = spec.gates[gi];
    if (gate_arity(pl.kind) == 2) {
      const Eigen::Matrix4cd u_dag = pc.two_q[gi].adjoint();
      apply_two_qubit(psi, u_dag, pl.qubits[0], pl.qubits[1]);
      if (pl.kind == GateKind::Su4) {
        for (int k = 0; k < 15; ++k) {
          const Eigen::Matrix4cd d = su4_gate_derivative(pc.eigensys[gi], k);
          grad[pl.slot + k] =
              2.0 * std::real(two_qubit_form(lam, d, pl.qubits[0], pl.qubits[1], psi));
        }
      } else {
        const Eigen::Matrix4cd d = crx_derivative(pc.params[pl.slot]);
        grad[pl.slot] =
            2.0 * std::real(two_qubit_form(lam, d, pl.qubits[0], pl.qubits[1], psi));
      }
      apply_two_qubit(lam, u_dag, pl.qubits[0], pl.qubits[1]);
    } else {
      const Eigen::Matrix2cd u_dag = pc.one_q[gi].adjoint();
      apply_single_qubit(psi, u_dag, pl.qubits[0]);
      const Eigen::Matrix2cd d = rotation_derivative(pl.kind, pc.params[pl.slot]);
      grad[pl.slot] = 2.0 * std::real(single_qubit_form(lam, d, pl.qubits[0], psi));
      apply_single_qubit(lam, u_dag, pl.qubits[0]);
    }
  }
  return loss;
}

double adjoint_gradient(const CircuitSpec& spec,
                        const Eigen::Ref<const ParamVector>& params,
                        const QState& input, const CotangentSpec& cot,
                        Eigen::VectorXd& grad) {
  return adjoint_gradient(prepare_circuit(spec, params), input, cot, grad);
}

double parameter_shift_gradient(const CircuitSpec& spec,
                                const Eigen::Ref<const ParamVector>& params,
                                const QState& input, const CotangentSpec& cot,
                                Eigen::VectorXd& grad) {
  for (const auto& pl : spec.gates)
    if (pl.kind != GateKind::Ry && pl.kind != GateKind::Rz)
      throw std::invalid_argument(
          "parameter_shift_gradient: only RY/RZ gates admit the two-point rule");
  if (params.size() != spec.param_count)
    throw std::invalid_argument("parameter_shift_gradient: bad parameter count");

  QState base = input;
  run_circuit(spec, params, base);
  const Eigen::VectorXd q0 = readout_quantities(base, cot);
  const double loss = loss_from_quantities(q0, cot);
  const Eigen::VectorXd dldq = dloss_dquantities(q0, cot);

  grad.resize(spec.param_count);
  const double half_pi = 1.57079632679489661923;
  Eigen::VectorXd shifted = params;
  for (int k = 0; k < spec.param_count; ++k) {
    shifted[k] = params[k] + half_pi;
    QState plus = input;
    run_circuit(spec, shifted, plus);
    shifted[k] = params[k] - half_pi;
    QState minus = input;
    run_circuit(spec, shifted, minus);
    shifted[k] = params[k];
    const Eigen::VectorXd dq =
        0.5 * (readout_quantities(plus, cot) - readout_quantities(minus, cot));
    grad[k] = dldq.dot(dq);
  }
  return loss;
}

Eigen::VectorXd finite_diff_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                     const Eigen::VectorXd& params, double h) {
  Eigen::VectorXd g(params.size());
  Eigen::VectorXd p = params;
  for (Eigen::Index k = 0; k < params.size(); ++k) {
    p[k] = params[k] + h;
    const double fp = f(p);
    p[k] = params[k] - h;
    const double fm = f(p);
    p[k] = params[k];
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace qcl
