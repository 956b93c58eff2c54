// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>

#include <Eigen/Dense>

namespace qcl {

using Amplitude = std::complex<double>;
using StateVector = Eigen::VectorXcd;

/// Exact statevector over n qubits, 2^n complex amplitudes in double
/// precision.
///
/// Basis convention (fixed project-wide): qubit 0 is the most significant
/// bit, so basis index b = sum_q bit(q) * 2^(n-1-q). "The first K basis
/// states" always means indices 0..K-1.
struct QState {
  int n_qubits = 0;
  StateVector amplitudes;

  static QState zero(int n);

  Eigen::Index dim() const { return amplitudes.size(); }
};

/// bit(q) of basis index b under the MSB-first convention.
inline int basis_bit(std::uint64_t b, int n_qubits, int q) {
  return static_cast<int>((b >> (n_qubits - 1 - q)) & 1ull);
}

/// L2-normalizes `data` into the first data.size() amplitudes, zero-pads the
/// rest. Requires data.size() <= 2^n and a nonzero norm.
QState amplitude_encode(const Eigen::Ref<const Eigen::VectorXd>& data, int n_qubits);

/// Loads a complex vector of length exactly 2^n, renormalizing to unit norm.
/// Zero vectors are an error.
QState encode_complex(const Eigen::Ref<const Eigen::VectorXcd>& amps, int n_qubits);

/// Applies a 2x2 matrix to qubit q, in place. When validate is set the matrix
/// is checked for unitarity first (debug aid, off in hot loops).
void apply_single_qubit(QState& state, const Eigen::Matrix2cd& u, int q,
                        bool validate = false);

/// Applies a 4x4 matrix to qubits (qa, qb), in place. Row index convention of
/// u: r = 2*bit(qa) + bit(qb).
void apply_two_qubit(QState& state, const Eigen::Matrix4cd& u, int qa, int qb,
                     bool validate = false);

/// <bra| (u acting on qubit q) |ket>, without materializing the product state.
Amplitude single_qubit_form(const QState& bra, const Eigen::Matrix2cd& u, int q,
                            const QState& ket);

/// <bra| (u acting on qubits qa, qb) |ket>.
Amplitude two_qubit_form(const QState& bra, const Eigen::Matrix4cd& u, int qa,
                         int qb, const QState& ket);

/// |amplitude|^2 per basis state.
Eigen::VectorXd probabilities(const QState& state);

/// <Z_q> = sum_b (-1)^bit(q) |amp_b|^2.
double expect_z(const QState& state, int q);

bool is_unitary(const Eigen::Ref<const Eigen::MatrixXcd>& m, double tol = 1e-10);

}  // namespace qcl
