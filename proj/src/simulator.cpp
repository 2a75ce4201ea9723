#include "nem/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace nem {

namespace {

const cplx kI{0.0, 1.0};

void check_qubit(int q, int n) {
  if (q < 0 || q >= n) throw ValidationError("qubit index " + std::to_string(q) + " out of range for " + std::to_string(n) + " qubits");
}

}  // namespace

QuantumState QuantumState::basis_state(int n, Bits s) {
  if (n < 1 || n > kMaxPureQubits) throw CapabilityError("statevector simulation limited to 16 qubits");
  QuantumState st;
  st.kind_ = Kind::pure;
  st.n_ = n;
  st.psi_ = StateVector::Zero(Eigen::Index{1} << n);
  st.psi_[static_cast<Eigen::Index>(s)] = 1.0;
  return st;
}

QuantumState QuantumState::from_vector(StateVector psi) {
  QuantumState st;
  st.kind_ = Kind::pure;
  st.n_ = qubit_count_for_dimension(psi.size());
  st.psi_ = std::move(psi);
  return st;
}

QuantumState QuantumState::from_density(DensityMatrix rho) {
  if (rho.rows() != rho.cols()) throw DimensionError("density matrix must be square");
  QuantumState st;
  st.kind_ = Kind::mixed;
  st.n_ = qubit_count_for_dimension(rho.rows());
  if (st.n_ > kMaxMixedQubits) throw CapabilityError("density-matrix simulation limited to 12 qubits");
  st.rho_ = std::move(rho);
  return st;
}

QuantumState QuantumState::maximally_mixed(int n) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  return from_density(DensityMatrix::Identity(dim, dim) / static_cast<double>(dim));
}

const StateVector& QuantumState::vector() const {
  if (!is_pure()) throw ValidationError("state is mixed; no statevector available");
  return psi_;
}
StateVector& QuantumState::vector() {
  if (!is_pure()) throw ValidationError("state is mixed; no statevector available");
  return psi_;
}
const DensityMatrix& QuantumState::density() const {
  if (is_pure()) throw ValidationError("state is pure; promote it with to_mixed()");
  return rho_;
}
DensityMatrix& QuantumState::density() {
  if (is_pure()) throw ValidationError("state is pure; promote it with to_mixed()");
  return rho_;
}

QuantumState QuantumState::to_mixed() const {
  if (!is_pure()) return *this;
  return from_density(psi_ * psi_.adjoint());
}

Eigen::VectorXd QuantumState::probabilities() const {
  if (is_pure()) return psi_.cwiseAbs2();
  return rho_.diagonal().real().cwiseMax(0.0);
}

void QuantumState::validate(double tol) const {
  if (is_pure()) {
    if (std::abs(psi_.norm() - 1.0) > tol) throw ValidationError("statevector is not normalized");
    return;
  }
  if (std::abs(rho_.trace().real() - 1.0) > tol || std::abs(rho_.trace().imag()) > tol)
    throw ValidationError("density matrix trace is not 1");
  if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > 1e-10) throw ValidationError("density matrix is not Hermitian");
  if (n_ <= 8) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(rho_, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-9) throw ValidationError("density matrix has a negative eigenvalue");
  }
}

Mat2 gate_matrix_1q(const GateOp& g) {
  const double c = std::cos(g.angle / 2), s = std::sin(g.angle / 2);
  Mat2 m;
  switch (g.kind) {
    case GateOp::Kind::rz:
      m << std::exp(-kI * (g.angle / 2)), 0.0, 0.0, std::exp(kI * (g.angle / 2));
      return m;
    case GateOp::Kind::rx:
      m << c, -kI * s, -kI * s, c;
      return m;
    case GateOp::Kind::h:
      m << 1.0, 1.0, 1.0, -1.0;
      return m / std::numbers::sqrt2;
    case GateOp::Kind::sdg:
      m << 1.0, 0.0, 0.0, -kI;
      return m;
    default:
      throw ValidationError("not a single-qubit gate");
  }
}

Mat4 gate_matrix_2q(const GateOp& g) {
  Mat4 m = Mat4::Zero();
  switch (g.kind) {
    case GateOp::Kind::cnot:
      // Control is the low local bit.
      m(0, 0) = 1.0;
      m(2, 2) = 1.0;
      m(3, 1) = 1.0;
      m(1, 3) = 1.0;
      return m;
    case GateOp::Kind::xxyy: {
      // (XX + YY)/2 swaps |01> and |10>; it annihilates |00> and |11>.
      const double c = std::cos(g.angle), s = std::sin(g.angle);
      m(0, 0) = 1.0;
      m(3, 3) = 1.0;
      m(1, 1) = c;
      m(2, 2) = c;
      m(1, 2) = kI * s;
      m(2, 1) = kI * s;
      return m;
    }
    default:
      throw ValidationError("not a two-qubit gate");
  }
}

void apply_1q(cplx* vec, int n, int q, const Mat2& u) {
  const std::size_t dim = std::size_t{1} << n;
  const std::size_t stride = std::size_t{1} << q;
  for (std::size_t base = 0; base < dim; base += 2 * stride)
    for (std::size_t off = 0; off < stride; ++off) {
      cplx& a = vec[base + off];
      cplx& b = vec[base + off + stride];
      const cplx a0 = a, b0 = b;
      a = u(0, 0) * a0 + u(0, 1) * b0;
      b = u(1, 0) * a0 + u(1, 1) * b0;
    }
}

void apply_2q(cplx* vec, int n, int q0, int q1, const Mat4& u) {
  const std::size_t dim = std::size_t{1} << n;
  const std::size_t b0 = std::size_t{1} << q0, b1 = std::size_t{1} << q1;
  for (std::size_t i = 0; i < dim; ++i) {
    if (i & (b0 | b1)) continue;
    const std::size_t idx[4] = {i, i | b0, i | b1, i | b0 | b1};
    cplx in[4], out[4];
    for (int k = 0; k < 4; ++k) in[k] = vec[idx[k]];
    for (int r = 0; r < 4; ++r) {
      out[r] = 0.0;
      for (int c = 0; c < 4; ++c) out[r] += u(r, c) * in[c];
    }
    for (int k = 0; k < 4; ++k) vec[idx[k]] = out[k];
  }
}

void apply_gate(QuantumState& state, const GateOp& g) {
  const int n = state.n_qubits();
  check_qubit(g.q0, n);
  if (g.two_qubit()) {
    check_qubit(g.q1, n);
    if (g.q0 == g.q1) throw ValidationError("two-qubit gate needs distinct qubits");
    const Mat4 u = gate_matrix_2q(g);
    if (state.is_pure()) {
      apply_2q(state.vector().data(), n, g.q0, g.q1, u);
    } else {
      // The density matrix is a 2n-qubit register: rows are qubits 0..n-1, columns n..2n-1.
      apply_2q(state.density().data(), 2 * n, g.q0, g.q1, u);
      apply_2q(state.density().data(), 2 * n, g.q0 + n, g.q1 + n, u.conjugate());
    }
    return;
  }
  const Mat2 u = gate_matrix_1q(g);
  if (state.is_pure()) {
    apply_1q(state.vector().data(), n, g.q0, u);
  } else {
    apply_1q(state.density().data(), 2 * n, g.q0, u);
    apply_1q(state.density().data(), 2 * n, g.q0 + n, u.conjugate());
  }
}

PauliHamiltonian entangler_hamiltonian(int n, double j_coupling, double field, double alpha) {
  std::vector<PauliString> terms;
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      std::vector<Pauli> ops(static_cast<std::size_t>(n), Pauli::I);
      ops[static_cast<std::size_t>(j)] = Pauli::X;
      ops[static_cast<std::size_t>(k)] = Pauli::X;
      terms.emplace_back(std::move(ops), j_coupling / std::pow(static_cast<double>(k - j), alpha));
    }
    std::vector<Pauli> ops(static_cast<std::size_t>(n), Pauli::I);
    ops[static_cast<std::size_t>(j)] = Pauli::Z;
    terms.emplace_back(std::move(ops), field);
  }
  return PauliHamiltonian(n, terms);
}

Entangler::Entangler(int n, double j_coupling, double field, double alpha, int sign)
    : n_(n), sign_(sign >= 0 ? 1 : -1), h_(entangler_hamiltonian(n, j_coupling, field, alpha)) {
  if (n > kMaxMixedQubits)
    throw CapabilityError("entangler evolution limited to " + std::to_string(kMaxMixedQubits) +
                          " qubits; use the scaling circuit for larger systems");
  // H_E only has X and Z terms, so it is real symmetric.
  const Eigen::MatrixXd dense = h_.dense().real();
  for (Eigen::Index i = 0; i < dense.rows(); ++i) sectors_[parity(static_cast<Bits>(i))].indices.push_back(i);
  for (auto& sector : sectors_) {
    const Eigen::MatrixXd block = dense(sector.indices, sector.indices);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(block);
    sector.eigenvectors = eig.eigenvectors();
    sector.eigenvalues = eig.eigenvalues();
  }
}

namespace {

Eigen::VectorXcd sector_phases(const Eigen::VectorXd& eigenvalues, double angle) {
  Eigen::VectorXcd ph(eigenvalues.size());
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) ph[i] = std::exp(kI * (angle * eigenvalues[i]));
  return ph;
}

}  // namespace

Eigen::MatrixXcd Entangler::unitary(double t) const {
  const Eigen::Index dim = Eigen::Index{1} << n_;
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(dim, dim);
  for (const auto& sector : sectors_) {
    const Eigen::MatrixXcd v = sector.eigenvectors.cast<cplx>();
    u(sector.indices, sector.indices) = v * sector_phases(sector.eigenvalues, sign_ * t).asDiagonal() * v.transpose();
  }
  return u;
}

void Entangler::evolve(QuantumState& state, double t) const {
  if (state.n_qubits() != n_) throw DimensionError("entangler size does not match state");
  if (t == 0.0) return;
  const double angle = sign_ * t;
  if (state.is_pure()) {
    StateVector& psi = state.vector();
    for (const auto& sector : sectors_) {
      const Eigen::MatrixXd& v = sector.eigenvectors;
      Eigen::VectorXcd coeffs = v.transpose() * Eigen::VectorXcd(psi(sector.indices));
      coeffs.array() *= sector_phases(sector.eigenvalues, angle).array();
      psi(sector.indices) = v * coeffs;
    }
    return;
  }
  // Block (a, b) of rho maps to V_a P_a (V_a^T rho_ab V_b) P_b^* V_b^T; V is real, so real
  // and imaginary parts go through real GEMMs. Cross-parity blocks that are exactly
  // zero stay zero and are skipped.
  DensityMatrix& rho = state.density();
  Eigen::VectorXcd ph[2] = {sector_phases(sectors_[0].eigenvalues, angle), sector_phases(sectors_[1].eigenvalues, angle)};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const auto& sa = sectors_[a];
      const auto& sb = sectors_[b];
      const DensityMatrix block = rho(sa.indices, sb.indices);
      if (a != b && block.cwiseAbs().maxCoeff() == 0.0) continue;
      Eigen::MatrixXd re = sa.eigenvectors.transpose() * block.real() * sb.eigenvectors;
      Eigen::MatrixXd im = sa.eigenvectors.transpose() * block.imag() * sb.eigenvectors;
      for (Eigen::Index k = 0; k < re.cols(); ++k)
        for (Eigen::Index j = 0; j < re.rows(); ++j) {
          const cplx z = cplx(re(j, k), im(j, k)) * ph[a][j] * std::conj(ph[b][k]);
          re(j, k) = z.real();
          im(j, k) = z.imag();
        }
      const Eigen::MatrixXd out_re = sa.eigenvectors * re * sb.eigenvectors.transpose();
      const Eigen::MatrixXd out_im = sa.eigenvectors * im * sb.eigenvectors.transpose();
      DensityMatrix out(out_re.rows(), out_re.cols());
      out.real() = out_re;
      out.imag() = out_im;
      rho(sa.indices, sb.indices) = out;
    }
}

void evolve_entangler(QuantumState& state, double t, double j_coupling, double field, double alpha, int sign) {
  Entangler(state.n_qubits(), j_coupling, field, alpha, sign).evolve(state, t);
}

void apply_depolarizing(QuantumState& state, int qubit, double lambda) {
  if (state.is_pure()) throw ValidationError("depolarizing channel needs a mixed state; call to_mixed() first");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("depolarizing probability must lie in [0, 1]");
  const int n = state.n_qubits();
  check_qubit(qubit, n);
  if (lambda == 0.0) return;
  cplx* data = state.density().data();
  const std::size_t dim2 = std::size_t{1} << (2 * n);
  const std::size_t br = std::size_t{1} << qubit, bc = std::size_t{1} << (qubit + n);
  const double keep = 1.0 - lambda;
  for (std::size_t i = 0; i < dim2; ++i) {
    if (i & (br | bc)) continue;
    cplx& d0 = data[i];
    cplx& d1 = data[i | br | bc];
    const cplx avg = 0.5 * (d0 + d1);
    d0 = keep * d0 + lambda * avg;
    d1 = keep * d1 + lambda * avg;
    data[i | br] *= keep;
    data[i | bc] *= keep;
  }
}

Mat2 basis_rotation(Pauli p) {
  switch (p) {
    case Pauli::X: return gate_matrix_1q(GateOp::hadamard(0));
    case Pauli::Y: return gate_matrix_1q(GateOp::hadamard(0)) * gate_matrix_1q(GateOp::sdg(0));
    case Pauli::Z: return Mat2::Identity();
    case Pauli::I: break;
  }
  throw ValidationError("measurement basis may not contain the identity");
}

Eigen::VectorXd basis_probabilities(const QuantumState& state, const PauliString& basis) {
  const int n = state.n_qubits();
  if (basis.size() != n) throw DimensionError("basis length does not match qubit count");
  std::vector<Mat2> rotations;
  for (Pauli p : basis.ops) rotations.push_back(basis_rotation(p));
  if (state.is_pure()) {
    StateVector psi = state.vector();
    for (int q = 0; q < n; ++q)
      if (basis.ops[static_cast<std::size_t>(q)] != Pauli::Z) apply_1q(psi.data(), n, q, rotations[static_cast<std::size_t>(q)]);
    return psi.cwiseAbs2();
  }
  DensityMatrix rho = state.density();
  for (int q = 0; q < n; ++q) {
    if (basis.ops[static_cast<std::size_t>(q)] == Pauli::Z) continue;
    const Mat2& u = rotations[static_cast<std::size_t>(q)];
    apply_1q(rho.data(), 2 * n, q, u);
    apply_1q(rho.data(), 2 * n, q + n, u.conjugate());
  }
  return rho.diagonal().real().cwiseMax(0.0);
}

std::vector<Bits> sample_distribution(const Eigen::VectorXd& probabilities, int shots, Rng& rng) {
  if (shots < 1) throw ValidationError("shots must be at least 1");
  std::vector<double> cdf(static_cast<std::size_t>(probabilities.size()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probabilities.size(); ++i) {
    acc += probabilities[i];
    cdf[static_cast<std::size_t>(i)] = acc;
  }
  if (!(acc > 0.0)) throw NumericalError("outcome distribution has zero total weight");
  std::vector<Bits> out;
  out.reserve(static_cast<std::size_t>(shots));
  for (int k = 0; k < shots; ++k) {
    const double u = rng.uniform() * acc;
    auto idx = std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
    // Rounding can push u past the last entry; fall back to the last outcome with weight.
    if (idx == static_cast<std::ptrdiff_t>(cdf.size()))
      for (--idx; idx > 0 && probabilities[idx] == 0.0; --idx) {
      }
    out.push_back(static_cast<Bits>(idx));
  }
  return out;
}

std::vector<Bits> sample_in_basis(const QuantumState& state, const PauliString& basis, int shots, Rng& rng) {
  for (Pauli p : basis.ops)
    if (p == Pauli::I) throw ValidationError("measurement basis may not contain the identity");
  return sample_distribution(basis_probabilities(state, basis), shots, rng);
}

StateMetrics state_metrics(const QuantumState& state, const StateVector& reference) {
  if (reference.size() != state.dimension()) throw DimensionError("reference dimension does not match state");
  if (state.is_pure()) return {std::norm(reference.dot(state.vector())), 1.0};
  const DensityMatrix& rho = state.density();
  const double fidelity = reference.dot(rho * reference).real();
  return {fidelity, rho.squaredNorm()};
}

}  // namespace nem
