#pragma once

#include <vector>

#include "nem/pauli.hpp"
#include "nem/rng.hpp"

namespace nem {

// Pure statevector or density matrix over N qubits. Qubit q is bit q of the basis index.
class QuantumState {
public:
  enum class Kind { pure, mixed };

  static QuantumState basis_state(int n, Bits s);
  static QuantumState from_vector(StateVector psi);
  static QuantumState from_density(DensityMatrix rho);
  static QuantumState maximally_mixed(int n);

  Kind kind() const { return kind_; }
  bool is_pure() const { return kind_ == Kind::pure; }
  int n_qubits() const { return n_; }
  Eigen::Index dimension() const { return Eigen::Index{1} << n_; }

  const StateVector& vector() const;
  StateVector& vector();
  const DensityMatrix& density() const;
  DensityMatrix& density();

  // Promote a pure state to |psi><psi|; no-op on mixed states.
  QuantumState to_mixed() const;

  // Computational-basis outcome probabilities.
  Eigen::VectorXd probabilities() const;

  // Throws ValidationError if the kind-specific invariants fail.
  void validate(double tol = 1e-8) const;

private:
  Kind kind_ = Kind::pure;
  int n_ = 0;
  StateVector psi_;
  DensityMatrix rho_;
};

// Rotation conventions: R_Z(t) = exp(-i t Z / 2), R_X(t) = exp(-i t X / 2),
// XXYY(t) = exp(+i t (XX + YY) / 2).
struct GateOp {
  enum class Kind { rz, rx, h, sdg, cnot, xxyy };
  Kind kind;
  double angle = 0.0;
  int q0 = 0;
  int q1 = -1;

  static GateOp rz(int q, double t) { return {Kind::rz, t, q, -1}; }
  static GateOp rx(int q, double t) { return {Kind::rx, t, q, -1}; }
  static GateOp hadamard(int q) { return {Kind::h, 0.0, q, -1}; }
  static GateOp sdg(int q) { return {Kind::sdg, 0.0, q, -1}; }
  static GateOp cnot(int control, int target) { return {Kind::cnot, 0.0, control, target}; }
  static GateOp xxyy(int a, int b, double t) { return {Kind::xxyy, t, a, b}; }

  bool two_qubit() const { return kind == Kind::cnot || kind == Kind::xxyy; }
};

using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;

// Two-qubit matrices use local index (bit of q0) + 2 * (bit of q1).
Mat2 gate_matrix_1q(const GateOp& g);
Mat4 gate_matrix_2q(const GateOp& g);

void apply_gate(QuantumState& state, const GateOp& g);

// Low-level kernels shared by the gate and channel code; `vec` is a
// 2^n-length buffer viewed as an n-qubit register.
void apply_1q(cplx* vec, int n, int q, const Mat2& u);
void apply_2q(cplx* vec, int n, int q0, int q1, const Mat4& u);

// Long-range entangling Hamiltonian H_E = J sum_{j<k} |j-k|^-alpha X_j X_k + B sum_j Z_j.
PauliHamiltonian entangler_hamiltonian(int n, double j_coupling, double field, double alpha);

// Precomputed spectral decomposition of H_E for repeated evolution. The
// sign of the exponent is exp(sign * i t H_E); sign defaults to +1.
class Entangler {
public:
  Entangler(int n, double j_coupling = 1.0, double field = 10.0, double alpha = 1.0, int sign = +1);

  int n_qubits() const { return n_; }
  Eigen::MatrixXcd unitary(double t) const;
  void evolve(QuantumState& state, double t) const;
  const PauliHamiltonian& hamiltonian() const { return h_; }

private:
  int n_;
  int sign_;
  PauliHamiltonian h_;
  // H_E conserves the Z parity, so it is diagonalized per parity sector.
  struct Sector {
    std::vector<Eigen::Index> indices;
    Eigen::MatrixXd eigenvectors;
    Eigen::VectorXd eigenvalues;
  };
  Sector sectors_[2];
};

inline constexpr int kMaxMixedQubits = 12;
inline constexpr int kMaxPureQubits = 16;

// exp(sign * i t H_E) on the state; throws CapabilityError past the density-matrix guard.
void evolve_entangler(QuantumState& state, double t, double j_coupling, double field, double alpha, int sign = +1);

// rho -> (1 - lambda) rho + lambda * (I/2 (x) Tr_q rho). Requires a mixed state.
void apply_depolarizing(QuantumState& state, int qubit, double lambda);

// Per-qubit post-rotation that maps the measurement basis onto Z:
// X -> H, Y -> H S^dagger, Z -> identity.
Mat2 basis_rotation(Pauli p);

// Outcome distribution of measuring each qubit in `basis` (no identities).
Eigen::VectorXd basis_probabilities(const QuantumState& state, const PauliString& basis);

std::vector<Bits> sample_in_basis(const QuantumState& state, const PauliString& basis, int shots, Rng& rng);

// Draws `shots` indices from a discrete distribution by inverse CDF.
std::vector<Bits> sample_distribution(const Eigen::VectorXd& probabilities, int shots, Rng& rng);

struct StateMetrics {
  double fidelity = 0.0;
  double purity = 1.0;
};

StateMetrics state_metrics(const QuantumState& state, const StateVector& reference);

}  // namespace nem
