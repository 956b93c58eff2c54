// SPDX-License-Identifier: Apache-2.0
#include "qcl/ansatz.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

#include "qcl/rng.hpp"

namespace qcl {

using json = nlohmann::json;
using namespace std::complex_literals;

int gate_param_count(GateKind kind) {
  switch (kind) {
    case GateKind::Su4: return 15;
    case GateKind::Ry:
    case GateKind::Rz:
    case GateKind::Crx: return 1;
  }
  throw std::logic_error("gate_param_count: bad kind");
}

int gate_arity(GateKind kind) {
  switch (kind) {
    case GateKind::Su4:
    case GateKind::Crx: return 2;
    case GateKind::Ry:
    case GateKind::Rz: return 1;
  }
  throw std::logic_error("gate_arity: bad kind");
}

const std::array<Eigen::Matrix2cd, 4>& pauli_matrices() {
  static const std::array<Eigen::Matrix2cd, 4> p = [] {
    std::array<Eigen::Matrix2cd, 4> m;
    m[0] << 1, 0, 0, 1;
    m[1] << 0, 1, 1, 0;
    m[2] << 0, -1i, 1i, 0;
    m[3] << 1, 0, 0, -1;
    return m;
  }();
  return p;
}

const std::array<Eigen::Matrix4cd, 15>& su4_generators() {
  static const std::array<Eigen::Matrix4cd, 15> g = [] {
    const auto& p = pauli_matrices();
    std::array<Eigen::Matrix4cd, 15> out;
    int k = 0;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        if (a == 0 && b == 0) continue;
        Eigen::Matrix4cd m;
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            m.block<2, 2>(2 * i, 2 * j) = p[a](i, j) * p[b];
        out[k++] = m;
      }
    return out;
  }();
  return g;
}

Su4Eigensystem su4_eigensystem(const Eigen::Ref<const Eigen::VectorXd>& theta15) {
  if (theta15.size() != 15)
    throw std::invalid_argument("su4: expected 15 parameters, got " +
                                std::to_string(theta15.size()));
  Eigen::Matrix4cd a = Eigen::Matrix4cd::Zero();
  const auto& gens = su4_generators();
  for (int k = 0; k < 15; ++k)
    if (theta15[k] != 0.0) a += (0.5 * theta15[k]) * gens[k];
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(a);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("su4_eigensystem: eigensolver failed");
  return {es.eigenvectors(), es.eigenvalues()};
}

Eigen::Matrix4cd su4_matrix(const Su4Eigensystem& es) {
  Eigen::Vector4cd phase;
  for (int i = 0; i < 4; ++i)
    phase[i] = std::exp(Amplitude(0.0, -es.lambda[i]));
  return es.q * phase.asDiagonal() * es.q.adjoint();
}

Eigen::Matrix4cd su4_matrix(const Eigen::Ref<const Eigen::VectorXd>& theta15) {
  return su4_matrix(su4_eigensystem(theta15));
}

Eigen::Matrix2cd rotation_matrix(GateKind kind, double theta) {
  const double c = std::cos(theta / 2.0), s = std::sin(theta / 2.0);
  Eigen::Matrix2cd m;
  switch (kind) {
    case GateKind::Ry:
      m << c, -s, s, c;
      return m;
    case GateKind::Rz:
      m << Amplitude(c, -s), 0, 0, Amplitude(c, s);
      return m;
    default:
      throw std::invalid_argument("rotation_matrix: kind must be Ry or Rz");
  }
}

Eigen::Matrix4cd crx_matrix(double theta) {
  const double c = std::cos(theta / 2.0), s = std::sin(theta / 2.0);
  Eigen::Matrix4cd m = Eigen::Matrix4cd::Identity();
  m(2, 2) = c;
  m(2, 3) = Amplitude(0.0, -s);
  m(3, 2) = Amplitude(0.0, -s);
  m(3, 3) = c;
  return m;
}

CircuitSpec build_circuit(LayoutKind layout, int n_qubits, int depth) {
  if (n_qubits < 2)
    throw std::invalid_argument("build_circuit: need at least 2 qubits");
  if (depth < 1)
    throw std::invalid_argument("build_circuit: depth must be >= 1");
  CircuitSpec spec;
  spec.n_qubits = n_qubits;
  spec.depth = depth;
  spec.layout = layout;
  int slot = 0;
  auto add = [&](GateKind kind, int a, int b) {
    spec.gates.push_back({kind, {a, b}, slot});
    slot += gate_param_count(kind);
  };
  for (int layer = 0; layer < depth; ++layer) {
    switch (layout) {
      case LayoutKind::Brickwall:
        for (int i = 0; i + 1 < n_qubits; i += 2) add(GateKind::Su4, i, i + 1);
        for (int i = 1; i + 1 < n_qubits; i += 2) add(GateKind::Su4, i, i + 1);
        break;
      case LayoutKind::Ladder:
        for (int i = 0; i + 1 < n_qubits; ++i) add(GateKind::Su4, i, i + 1);
        break;
      case LayoutKind::HeaRing:
        for (int i = 0; i < n_qubits; ++i)
          add(GateKind::Crx, i, (i + 1) % n_qubits);
        for (int q = 0; q < n_qubits; ++q) {
          add(GateKind::Ry, q, -1);
          add(GateKind::Rz, q, -1);
          add(GateKind::Ry, q, -1);
        }
        break;
    }
  }
  spec.param_count = slot;
  return spec;
}

ParamVector init_params(const CircuitSpec& spec, InitScheme scheme, std::uint64_t seed) {
  Rng rng(seed);
  switch (scheme) {
    case InitScheme::Uniform0To2Pi:
      return rng.uniform_vector(spec.param_count, 0.0, 2.0 * 3.14159265358979323846);
    case InitScheme::UniformPm01:
      return rng.uniform_vector(spec.param_count, -0.1, 0.1);
  }
  throw std::logic_error("init_params: bad scheme");
}

PreparedCircuit prepare_circuit(const CircuitSpec& spec,
                                const Eigen::Ref<const ParamVector>& params) {
  if (params.size() != spec.param_count)
    throw std::invalid_argument("prepare_circuit: expected " +
                                std::to_string(spec.param_count) +
                                " parameters, got " + std::to_string(params.size()));
  PreparedCircuit pc;
  pc.spec = &spec;
  pc.params = params;
  pc.two_q.resize(spec.gates.size(), Eigen::Matrix4cd::Identity());
  pc.one_q.resize(spec.gates.size(), Eigen::Matrix2cd::Identity());
  pc.eigensys.resize(spec.gates.size());
  for (size_t g = 0; g < spec.gates.size(); ++g) {
    const auto& pl = spec.gates[g];
    switch (pl.kind) {
      case GateKind::Su4:
        pc.eigensys[g] = su4_eigensystem(params.segment(pl.slot, 15));
        pc.two_q[g] = su4_matrix(pc.eigensys[g]);
        break;
      case GateKind::Crx:
        pc.two_q[g] = crx_matrix(params[pl.slot]);
        break;
      case GateKind::Ry:
      case GateKind::Rz:
        pc.one_q[g] = rotation_matrix(pl.kind, params[pl.slot]);
        break;
    }
  }
  return pc;
}

void run_prepared(const PreparedCircuit& pc, QState& state) {
  const auto& spec = *pc.spec;
  if (state.n_qubits != spec.n_qubits)
    throw std::invalid_argument("run_circuit: state has wrong qubit count");
  for (size_t g = 0; g < spec.gates.size(); ++g) {
    const auto& pl = spec.gates[g];
    if (gate_arity(pl.kind) == 2)
      apply_two_qubit(state, pc.two_q[g], pl.qubits[0], pl.qubits[1]);
    else
      apply_single_qubit(state, pc.one_q[g], pl.qubits[0]);
  }
}

void run_circuit(const CircuitSpec& spec, const Eigen::Ref<const ParamVector>& params,
                 QState& state) {
  run_prepared(prepare_circuit(spec, params), state);
}

std::string layout_name(LayoutKind layout) {
  switch (layout) {
    case LayoutKind::Brickwall: return "brickwall";
    case LayoutKind::Ladder: return "ladder";
    case LayoutKind::HeaRing: return "hea_ring";
  }
  throw std::logic_error("layout_name: bad layout");
}

LayoutKind layout_from_name(const std::string& name) {
  if (name == "brickwall") return LayoutKind::Brickwall;
  if (name == "ladder") return LayoutKind::Ladder;
  if (name == "hea_ring") return LayoutKind::HeaRing;
  throw std::invalid_argument("unknown layout: " + name);
}

std::string circuit_to_json(const CircuitSpec& spec, InitScheme scheme,
                            std::uint64_t seed) {
  json j;
  j["layout"] = layout_name(spec.layout);
  j["n_qubits"] = spec.n_qubits;
  j["depth"] = spec.depth;
  j["init"] = scheme == InitScheme::Uniform0To2Pi ? "uniform_0_2pi" : "uniform_pm0p1";
  j["seed"] = seed;
  return j.dump();
}

CircuitFromJson circuit_from_json(const std::string& text) {
  const json j = json::parse(text);
  CircuitFromJson out;
  out.spec = build_circuit(layout_from_name(j.at("layout").get<std::string>()),
                           j.at("n_qubits").get<int>(), j.at("depth").get<int>());
  const std::string init = j.at("init").get<std::string>();
  if (init == "uniform_0_2pi") out.scheme = InitScheme::Uniform0To2Pi;
  else if (init == "uniform_pm0p1") out.scheme = InitScheme::UniformPm01;
  else throw std::invalid_argument("unknown init scheme: " + init);
  out.seed = j.at("seed").get<std::uint64_t>();
  return out;
}

}  // namespace qcl
