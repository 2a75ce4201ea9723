#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "nem/bits.hpp"

namespace nem {

using cplx = std::complex<double>;
using StateVector = Eigen::VectorXcd;
using DensityMatrix = Eigen::MatrixXcd;

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

char pauli_char(Pauli p);
Pauli pauli_from_char(char c);  // throws ValidationError naming the character

struct PauliString {
  std::vector<Pauli> ops;
  cplx coefficient{1.0, 0.0};

  PauliString() = default;
  PauliString(std::vector<Pauli> ops_, cplx coeff = 1.0) : ops(std::move(ops_)), coefficient(coeff) {}

  static PauliString parse(std::string_view label, cplx coeff = 1.0);

  int size() const { return static_cast<int>(ops.size()); }
  std::string label() const;
  bool is_identity() const;

  // Qubits acted on by X or Y (flipped) and by Y or Z (sign-carrying).
  Bits x_mask() const;
  Bits z_mask() const;
  int y_count() const;
  // Number of non-identity positions.
  int weight() const;
};

// Product a*b including the phase from single-qubit Pauli multiplication.
PauliString multiply(const PauliString& a, const PauliString& b);

// P|s> = amplitude |target>.
struct PauliAction {
  Bits target = 0;
  cplx amplitude;
};

// Masks and phase of a Pauli string precomputed for inner loops.
struct CompiledTerm {
  Bits x_mask = 0;
  Bits z_mask = 0;
  cplx factor;  // coefficient * i^{#Y}

  PauliAction apply(Bits s) const {
    const double sign = parity(s & z_mask) ? -1.0 : 1.0;
    return {s ^ x_mask, factor * sign};
  }
};

CompiledTerm compile(const PauliString& p);

// Returns the unique t and c with <t|P|s> = c. Throws DimensionError on a length mismatch.
PauliAction pauli_apply(const PauliString& p, std::span<const std::uint8_t> s);

class PauliHamiltonian {
public:
  PauliHamiltonian() = default;

  // Merges like terms, folds all-identity strings into the offset, drops
  // |c| < 1e-12 and rejects coefficients whose merged imaginary part is not zero.
  PauliHamiltonian(int n_qubits, const std::vector<PauliString>& terms, double identity_offset = 0.0);

  int n_qubits() const { return n_qubits_; }
  const std::vector<PauliString>& terms() const { return terms_; }
  const std::vector<CompiledTerm>& compiled() const { return compiled_; }
  double identity_offset() const { return identity_offset_; }

  // Same operator up to term order, coefficients compared to tol.
  bool equivalent(const PauliHamiltonian& other, double tol = 1e-12) const;

  // out = H in, matrix-free.
  void apply(const StateVector& in, StateVector& out) const;
  StateVector apply(const StateVector& in) const;

  // Dense 2^N x 2^N matrix. Guarded to N <= 14.
  Eigen::MatrixXcd dense() const;

private:
  int n_qubits_ = 0;
  std::vector<PauliString> terms_;
  std::vector<CompiledTerm> compiled_;
  double identity_offset_ = 0.0;
};

struct SchwingerParams {
  int n_sites = 8;
  double mass = 0.0;
  double w = 1.0;
  double g_bar = 1.0;
  double epsilon0 = 0.0;
};

// Jordan-Wigner lattice Schwinger Hamiltonian, site j (1-based) on qubit j-1:
//   H = w/2 sum_{j<N} (X_j X_{j+1} + Y_j Y_{j+1}) + m/2 sum_j (-1)^j Z_j + g sum_{j=1}^{N} L_j^2
//   L_j = eps0 - 1/2 sum_{l<=j} (Z_l + (-1)^l)
PauliHamiltonian build_schwinger(const SchwingerParams& p);

// Text format: "qubits <N>" header, then "<coefficient> <IXYZ string>" per line, '#' comments.
PauliHamiltonian load_hamiltonian(const std::filesystem::path& path);
PauliHamiltonian parse_hamiltonian(std::string_view text);
void save_hamiltonian(const PauliHamiltonian& h, const std::filesystem::path& path);
std::string format_hamiltonian(const PauliHamiltonian& h);

// <psi|H|psi>; psi must be normalized to 1e-8.
double expectation(const PauliHamiltonian& h, const StateVector& psi);
// Tr(rho H).
double expectation(const PauliHamiltonian& h, const DensityMatrix& rho);

// Order parameter 1/(2N(N-1)) sum_{i<j} <(1+(-1)^i Z_i)(1+(-1)^j Z_j)> over
// basis-state probabilities, sites 1-based.
double order_parameter_from_probabilities(std::span<const double> probabilities, int n);
double order_parameter(const StateVector& psi, int n);
double order_parameter(const DensityMatrix& rho, int n);

// -ln Tr(rho_A^2) with A the leading k qubits (qubits 0..k-1).
double renyi2_entropy(const StateVector& psi, int k);
double renyi2_entropy(const DensityMatrix& rho, int k);

int qubit_count_for_dimension(Eigen::Index dim);

}  // namespace nem
