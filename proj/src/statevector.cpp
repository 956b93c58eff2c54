// SPDX-License-Identifier: Apache-2.0
#include "qcl/statevector.hpp"

#include <stdexcept>
#include <string>

namespace qcl {

namespace {

void check_qubit(const QState& s, int q, const char* where) {
  if (q < 0 || q >= s.n_qubits)
    throw std::out_of_range(std::string(where) + ": qubit index " +
                            std::to_string(q) + " out of range for " +
                            std::to_string(s.n_qubits) + " qubits");
}

// Inserts a zero bit at position p (LSB-based) into x.
inline std::uint64_t insert_zero_bit(std::uint64_t x, int p) {
  const std::uint64_t low = x & ((1ull << p) - 1);
  return ((x >> p) << (p + 1)) | low;
}

}  // namespace

QState QState::zero(int n) {
  if (n < 1 || n > 30)
    throw std::invalid_argument("QState::zero: n_qubits must be in [1, 30]");
  QState s;
  s.n_qubits = n;
  s.amplitudes = StateVector::Zero(Eigen::Index(1) << n);
  s.amplitudes[0] = 1.0;
  return s;
}

QState amplitude_encode(const Eigen::Ref<const Eigen::VectorXd>& data, int n_qubits) {
  if (n_qubits < 1 || n_qubits > 30)
    throw std::invalid_argument("amplitude_encode: n_qubits must be in [1, 30]");
  const Eigen::Index dim = Eigen::Index(1) << n_qubits;
  if (data.size() < 1 || data.size() > dim)
    throw std::invalid_argument("amplitude_encode: data length " +
                                std::to_string(data.size()) +
                                " exceeds 2^n = " + std::to_string(dim));
  const double norm = data.norm();
  if (!(norm > 0.0))
    throw std::invalid_argument("amplitude_encode: data has zero norm");
  QState s;
  s.n_qubits = n_qubits;
  s.amplitudes = StateVector::Zero(dim);
  s.amplitudes.head(data.size()) = (data / norm).cast<Amplitude>();
  return s;
}

QState encode_complex(const Eigen::Ref<const Eigen::VectorXcd>& amps, int n_qubits) {
  if (n_qubits < 1 || n_qubits > 30)
    throw std::invalid_argument("encode_complex: n_qubits must be in [1, 30]");
  const Eigen::Index dim = Eigen::Index(1) << n_qubits;
  if (amps.size() != dim)
    throw std::invalid_argument("encode_complex: length " +
                                std::to_string(amps.size()) + " != 2^n = " +
                                std::to_string(dim));
  const double norm = amps.norm();
  if (norm == 0.0) throw std::invalid_argument("encode_complex: zero vector");
  QState s;
  s.n_qubits = n_qubits;
  s.amplitudes = amps / norm;
  return s;
}

bool is_unitary(const Eigen::Ref<const Eigen::MatrixXcd>& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const Eigen::MatrixXcd d =
      m.adjoint() * m - Eigen::MatrixXcd::Identity(m.rows(), m.cols());
  return d.cwiseAbs().maxCoeff() <= tol;
}

void apply_single_qubit(QState& state, const Eigen::Matrix2cd& u, int q, bool validate) {
  check_qubit(state, q, "apply_single_qubit");
  if (validate && !is_unitary(u))
    throw std::invalid_argument("apply_single_qubit: matrix is not unitary");
  const int n = state.n_qubits;
  const int p = n - 1 - q;
  const std::uint64_t mask = 1ull << p;
  const std::uint64_t count = 1ull << (n - 1);
  Amplitude* a = state.amplitudes.data();
  for (std::uint64_t g = 0; g < count; ++g) {
    const std::uint64_t i0 = insert_zero_bit(g, p);
    const std::uint64_t i1 = i0 | mask;
    const Amplitude v0 = a[i0], v1 = a[i1];
    a[i0] = u(0, 0) * v0 + u(0, 1) * v1;
    a[i1] = u(1, 0) * v0 + u(1, 1) * v1;
  }
}

void apply_two_qubit(QState& state, const Eigen::Matrix4cd& u, int qa, int qb,
                     bool validate) {
  check_qubit(state, qa, "apply_two_qubit");
  check_qubit(state, qb, "apply_two_qubit");
  if (qa == qb)
    throw std::invalid_argument("apply_two_qubit: qubits must be distinct");
  if (validate && !is_unitary(u))
    throw std::invalid_argument("apply_two_qubit: matrix is not unitary");
  const int n = state.n_qubits;
  const int pa = n - 1 - qa, pb = n - 1 - qb;
  const std::uint64_t ma = 1ull << pa, mb = 1ull << pb;
  const int plo = pa < pb ? pa : pb;
  const int phi = pa < pb ? pb : pa;
  const std::uint64_t count = 1ull << (n - 2);
  Amplitude* a = state.amplitudes.data();
  for (std::uint64_t g = 0; g < count; ++g) {
    const std::uint64_t i00 = insert_zero_bit(insert_zero_bit(g, plo), phi);
    const std::uint64_t i01 = i00 | mb;
    const std::uint64_t i10 = i00 | ma;
    const std::uint64_t i11 = i00 | ma | mb;
    const Amplitude v0 = a[i00], v1 = a[i01], v2 = a[i10], v3 = a[i11];
    a[i00] = u(0, 0) * v0 + u(0, 1) * v1 + u(0, 2) * v2 + u(0, 3) * v3;
    a[i01] = u(1, 0) * v0 + u(1, 1) * v1 + u(1, 2) * v2 + u(1, 3) * v3;
    a[i10] = u(2, 0) * v0 + u(2, 1) * v1 + u(2, 2) * v2 + u(2, 3) * v3;
    a[i11] = u(3, 0) * v0 + u(3, 1) * v1 + u(3, 2) * v2 + u(3, 3) * v3;
  }
}

Amplitude single_qubit_form(const QState& bra, const Eigen::Matrix2cd& u, int q,
                            const QState& ket) {
  check_qubit(ket, q, "single_qubit_form");
  if (bra.n_qubits != ket.n_qubits)
    throw std::invalid_argument("single_qubit_form: qubit count mismatch");
  const int n = ket.n_qubits;
  const int p = n - 1 - q;
  const std::uint64_t mask = 1ull << p;
  const std::uint64_t count = 1ull << (n - 1);
  const Amplitude* kv = ket.amplitudes.data();
  const Amplitude* bv = bra.amplitudes.data();
  Amplitude acc = 0.0;
  for (std::uint64_t g = 0; g < count; ++g) {
    const std::uint64_t i0 = insert_zero_bit(g, p);
    const std::uint64_t i1 = i0 | mask;
    acc += std::conj(bv[i0]) * (u(0, 0) * kv[i0] + u(0, 1) * kv[i1]);
    acc += std::conj(bv[i1]) * (u(1, 0) * kv[i0] + u(1, 1) * kv[i1]);
  }
  return acc;
}

Amplitude two_qubit_form(const QState& bra, const Eigen::Matrix4cd& u, int qa,
                         int qb, const QState& ket) {
  check_qubit(ket, qa, "two_qubit_form");
  check_qubit(ket, qb, "two_qubit_form");
  if (qa == qb)
    throw std::invalid_argument("two_qubit_form: qubits must be distinct");
  if (bra.n_qubits != ket.n_qubits)
    throw std::invalid_argument("two_qubit_form: qubit count mismatch");
  const int n = ket.n_qubits;
  const int pa = n - 1 - qa, pb = n - 1 - qb;
  const std::uint64_t ma = 1ull << pa, mb = 1ull << pb;
  const int plo = pa < pb ? pa : pb;
  const int phi = pa < pb ? pb : pa;
  const std::uint64_t count = 1ull << (n - 2);
  const Amplitude* kv = ket.amplitudes.data();
  const Amplitude* bv = bra.amplitudes.data();
  Amplitude acc = 0.0;
  for (std::uint64_t g = 0; g < count; ++g) {
    const std::uint64_t i00 = insert_zero_bit(insert_zero_bit(g, plo), phi);
    const std::uint64_t i01 = i00 | mb;
    const std::uint64_t i10 = i00 | ma;
    const std::uint64_t i11 = i00 | ma | mb;
    const Amplitude v0 = kv[i00], v1 = kv[i01], v2 = kv[i10], v3 = kv[i11];
    acc += std::conj(bv[i00]) * (u(0, 0) * v0 + u(0, 1) * v1 + u(0, 2) * v2 + u(0, 3) * v3);
    acc += std::conj(bv[i01]) * (u(1, 0) * v0 + u(1, 1) * v1 + u(1, 2) * v2 + u(1, 3) * v3);
    acc += std::conj(bv[i10]) * (u(2, 0) * v0 + u(2, 1) * v1 + u(2, 2) * v2 + u(2, 3) * v3);
    acc += std::conj(bv[i11]) * (u(3, 0) * v0 + u(3, 1) * v1 + u(3, 2) * v2 + u(3, 3) * v3);
  }
  return acc;
}

Eigen::VectorXd probabilities(const QState& state) {
  return state.amplitudes.cwiseAbs2();
}

double expect_z(const QState& state, int q) {
  check_qubit(state, q, "expect_z");
  const int n = state.n_qubits;
  const std::uint64_t mask = 1ull << (n - 1 - q);
  const Amplitude* a = state.amplitudes.data();
  const std::uint64_t dim = 1ull << n;
  double acc = 0.0;
  for (std::uint64_t b = 0; b < dim; ++b) {
    const double p = std::norm(a[b]);
    acc += (b & mask) ? -p : p;
  }
  return acc;
}

}  // namespace qcl
