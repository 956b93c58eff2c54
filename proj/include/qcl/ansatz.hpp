// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qcl/statevector.hpp"

namespace qcl {

enum class GateKind { Su4, Ry, Rz, Crx };

int gate_param_count(GateKind kind);  // 15, 1, 1, 1
int gate_arity(GateKind kind);        // 2, 1, 1, 2

/// One gate in a circuit. qubits[1] is -1 for single-qubit gates. For Crx,
/// qubits = {control, target}. `slot` is the gate's first index into the flat
/// parameter vector.
struct GatePlacement {
  GateKind kind = GateKind::Ry;
  std::array<int, 2> qubits = {0, -1};
  int slot = 0;
};

enum class LayoutKind { Brickwall, Ladder, HeaRing };

struct CircuitSpec {
  int n_qubits = 0;
  int depth = 0;
  LayoutKind layout = LayoutKind::Brickwall;
  std::vector<GatePlacement> gates;
  int param_count = 0;
};

using ParamVector = Eigen::VectorXd;

enum class InitScheme { Uniform0To2Pi, UniformPm01 };

/// Single-qubit Pauli matrices, index 0..3 = I, X, Y, Z.
const std::array<Eigen::Matrix2cd, 4>& pauli_matrices();

/// The 15 two-qubit generators sigma_alpha (x) sigma_beta, (alpha, beta)
/// running lexicographically over {0..3}^2 minus (0,0):
/// index 0 = I(x)X, 1 = I(x)Y, 2 = I(x)Z, 3 = X(x)I, 4 = X(x)X, ... 14 = Z(x)Z.
const std::array<Eigen::Matrix4cd, 15>& su4_generators();

struct Su4Eigensystem {
  Eigen::Matrix4cd q;       // unitary of eigenvectors of the generator A
  Eigen::Vector4d lambda;   // eigenvalues of A = (1/2) sum_k theta_k G_k
};

Su4Eigensystem su4_eigensystem(const Eigen::Ref<const Eigen::VectorXd>& theta15);

/// V(theta) = exp(-i A), A = (1/2) sum over the 15 generators.
Eigen::Matrix4cd su4_matrix(const Eigen::Ref<const Eigen::VectorXd>& theta15);
Eigen::Matrix4cd su4_matrix(const Su4Eigensystem& es);

/// Half-angle rotations exp(-i theta P / 2) for P = Y or Z.
Eigen::Matrix2cd rotation_matrix(GateKind kind, double theta);

/// Controlled-RX, control = first index: blockdiag(I, RX(theta)).
Eigen::Matrix4cd crx_matrix(double theta);

/// Brickwall: per layer, SU4 on even pairs (0,1),(2,3),... then odd pairs
/// (1,2),(3,4),...; open boundary.
/// Ladder: per layer, SU4 on (0,1),(1,2),...,(n-2,n-1).
/// HeaRing: per layer, CRX on (i, (i+1) mod n) for all i, then Ry, Rz, Ry on
/// each qubit.
CircuitSpec build_circuit(LayoutKind layout, int n_qubits, int depth);

ParamVector init_params(const CircuitSpec& spec, InitScheme scheme, std::uint64_t seed);

/// Applies every gate in order, in place.
void run_circuit(const CircuitSpec& spec, const Eigen::Ref<const ParamVector>& params,
                 QState& state);

/// Gate matrices materialized for one parameter vector, so a batch can reuse
/// them. SU4 entries carry the generator eigensystem for derivative reuse.
struct PreparedCircuit {
  const CircuitSpec* spec = nullptr;
  ParamVector params;
  std::vector<Eigen::Matrix4cd> two_q;    // per gate, unused entries identity
  std::vector<Eigen::Matrix2cd> one_q;
  std::vector<Su4Eigensystem> eigensys;   // valid where kind == Su4
};

PreparedCircuit prepare_circuit(const CircuitSpec& spec,
                                const Eigen::Ref<const ParamVector>& params);

void run_prepared(const PreparedCircuit& pc, QState& state);

std::string layout_name(LayoutKind layout);
LayoutKind layout_from_name(const std::string& name);

/// Round-trippable description: layout, n_qubits, depth, init scheme, seed.
std::string circuit_to_json(const CircuitSpec& spec, InitScheme scheme,
                            std::uint64_t seed);
struct CircuitFromJson {
  CircuitSpec spec;
  InitScheme scheme;
  std::uint64_t seed;
};
CircuitFromJson circuit_from_json(const std::string& text);

}  // namespace qcl
