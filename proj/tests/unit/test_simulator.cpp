#include <gtest/gtest.h>

#include <numbers>

#include "nem/simulator.hpp"
#include "oracles.hpp"

using namespace nem;
using oracle::Mat;

namespace {

const cplx I1(0.0, 1.0);

// Full-register matrix of a one- or two-qubit gate by Kronecker products.
Mat embed(const Mat& u, int n, int q0, int q1 = -1) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  Mat out = Mat::Zero(dim, dim);
  for (Eigen::Index col = 0; col < dim; ++col)
    for (Eigen::Index row = 0; row < dim; ++row) {
      bool same_rest = true;
      for (int q = 0; q < n; ++q)
        if (q != q0 && q != q1 && ((row >> q) & 1) != ((col >> q) & 1)) same_rest = false;
      if (!same_rest) continue;
      Eigen::Index lr = (row >> q0) & 1, lc = (col >> q0) & 1;
      if (q1 >= 0) {
        lr += 2 * ((row >> q1) & 1);
        lc += 2 * ((col >> q1) & 1);
      }
      out(row, col) = u(lr, lc);
    }
  return out;
}

Mat reference_matrix(const GateOp& g) {
  const Mat x = oracle::pauli('X'), y = oracle::pauli('Y'), z = oracle::pauli('Z');
  Mat m;
  switch (g.kind) {
    case GateOp::Kind::rz: m = oracle::expi(z, -g.angle / 2); break;
    case GateOp::Kind::rx: m = oracle::expi(x, -g.angle / 2); break;
    case GateOp::Kind::h: m = (x + z) / std::sqrt(2.0); break;
    case GateOp::Kind::sdg: m = Mat::Identity(2, 2); m(1, 1) = -I1; break;
    case GateOp::Kind::cnot:
      // local index = control + 2 * target
      m = Mat::Zero(4, 4);
      m(0, 0) = m(2, 2) = 1.0;
      m(3, 1) = m(1, 3) = 1.0;
      break;
    case GateOp::Kind::xxyy: {
      // local index = bit(q0) + 2 bit(q1), so kron(second, first).
      const Mat xx = Eigen::kroneckerProduct(x, x).eval(), yy = Eigen::kroneckerProduct(y, y).eval();
      m = oracle::expi(xx + yy, g.angle / 2);
      break;
    }
  }
  return m;
}

}  // namespace

TEST(Gates, RxPiFlipsWithPhase) {
  auto st = QuantumState::basis_state(1, 0);
  apply_gate(st, GateOp::rx(0, std::numbers::pi));
  EXPECT_NEAR(std::abs(st.vector()[0]), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(st.vector()[1] - (-I1)), 0.0, 1e-15);
}

TEST(Gates, CnotOnBasisState) {
  auto st = QuantumState::basis_state(2, bits_from_string("10"));
  apply_gate(st, GateOp::cnot(0, 1));
  EXPECT_NEAR(std::abs(st.vector()[static_cast<Eigen::Index>(bits_from_string("11"))]), 1.0, 1e-15);
}

TEST(Gates, XxyyMatchesDenseExponential) {
  auto st = QuantumState::basis_state(2, bits_from_string("01"));
  const double theta = 0.83;
  apply_gate(st, GateOp::xxyy(0, 1, theta));
  const Mat u = reference_matrix(GateOp::xxyy(0, 1, theta));
  oracle::Vec in = oracle::Vec::Zero(4);
  in[static_cast<Eigen::Index>(bits_from_string("01"))] = 1.0;
  EXPECT_LT((st.vector() - u * in).norm(), 1e-12);
  // Hamming weight is conserved.
  EXPECT_NEAR(std::abs(st.vector()[0]), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(st.vector()[3]), 0.0, 1e-15);
}

TEST(Gates, AllKindsMatchEmbeddedMatricesOnPureAndMixed) {
  Rng rng(7);
  const int n = 3;
  const std::vector<GateOp> gates = {GateOp::rz(1, 0.4),   GateOp::rx(2, -1.1),      GateOp::hadamard(0),
                                     GateOp::sdg(2),       GateOp::cnot(2, 0),       GateOp::cnot(0, 1),
                                     GateOp::xxyy(1, 2, 0.7), GateOp::xxyy(2, 0, -0.3)};
  for (const auto& g : gates) {
    const Mat u = embed(reference_matrix(g), n, g.q0, g.q1);
    const auto psi = oracle::random_state(n, rng);
    auto pure = QuantumState::from_vector(psi);
    apply_gate(pure, g);
    EXPECT_LT((pure.vector() - u * psi).norm(), 1e-12);
    const Mat rho = oracle::random_density(n, rng);
    auto mixed = QuantumState::from_density(rho);
    apply_gate(mixed, g);
    EXPECT_LT((mixed.density() - u * rho * u.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Gates, OutOfRangeQubitRejected) {
  auto st = QuantumState::basis_state(2, 0);
  EXPECT_THROW(apply_gate(st, GateOp::rz(2, 0.1)), ValidationError);
  EXPECT_THROW(apply_gate(st, GateOp::cnot(1, 1)), ValidationError);
}

TEST(Entangler, ZeroTimeIsIdentity) {
  Rng rng(1);
  const auto psi = oracle::random_state(4, rng);
  auto st = QuantumState::from_vector(psi);
  evolve_entangler(st, 0.0, 1.0, 10.0, 1.0);
  EXPECT_LT((st.vector() - psi).norm(), 1e-12);
}

TEST(Entangler, MatchesDenseExponential) {
  for (int n : {2, 4, 5}) {
    Mat h = Mat::Zero(Eigen::Index{1} << n, Eigen::Index{1} << n);
    for (int j = 0; j < n; ++j) {
      h += 10.0 * oracle::dense_pauli(oracle::single(n, j, 'Z'));
      for (int k = j + 1; k < n; ++k) h += oracle::dense_pauli(oracle::pair(n, j, k, 'X')) / static_cast<double>(k - j);
    }
    for (int sign : {+1, -1}) {
      const Entangler e(n, 1.0, 10.0, 1.0, sign);
      const double t = 0.37;
      const Mat expected = oracle::expi(h, sign * t);
      EXPECT_LT((e.unitary(t) - expected).cwiseAbs().maxCoeff(), 1e-10) << "N=" << n << " sign=" << sign;

      Rng rng(static_cast<std::uint64_t>(n));
      const Mat rho = oracle::random_density(n, rng);
      auto mixed = QuantumState::from_density(rho);
      e.evolve(mixed, t);
      EXPECT_LT((mixed.density() - expected * rho * expected.adjoint()).cwiseAbs().maxCoeff(), 1e-10);
      const auto psi = oracle::random_state(n, rng);
      auto pure = QuantumState::from_vector(psi);
      e.evolve(pure, t);
      EXPECT_LT((pure.vector() - expected * psi).norm(), 1e-10);
    }
  }
}

TEST(Entangler, GuardPointsToScalingCircuit) {
  auto st = QuantumState::basis_state(13, 0);
  try {
    evolve_entangler(st, 0.1, 1.0, 10.0, 1.0);
    FAIL();
  } catch (const CapabilityError& e) {
    EXPECT_NE(std::string(e.what()).find("scaling"), std::string::npos);
  }
}

TEST(Depolarizing, BasicCases) {
  Rng rng(2);
  const Mat rho = oracle::random_density(2, rng);
  auto same = QuantumState::from_density(rho);
  apply_depolarizing(same, 1, 0.0);
  EXPECT_LT((same.density() - rho).cwiseAbs().maxCoeff(), 1e-15);

  auto zero = QuantumState::basis_state(1, 0).to_mixed();
  apply_depolarizing(zero, 0, 1.0);
  EXPECT_LT((zero.density() - Mat::Identity(2, 2) / 2.0).cwiseAbs().maxCoeff(), 1e-15);

  // |+><+| = (I + X)/2 -> (I + X/2)/2, purity (1 + 1/4)/2.
  auto plus = QuantumState::basis_state(1, 0);
  apply_gate(plus, GateOp::hadamard(0));
  auto mixed = plus.to_mixed();
  apply_depolarizing(mixed, 0, 0.5);
  EXPECT_NEAR(state_metrics(mixed, plus.vector()).purity, 0.625, 1e-14);

  auto pure = QuantumState::basis_state(1, 0);
  EXPECT_THROW(apply_depolarizing(pure, 0, 0.1), ValidationError);
}

TEST(Depolarizing, MatchesPauliTwirlAndStaysPhysical) {
  // I/2 (x) Tr_q rho = (rho + X rho X + Y rho Y + Z rho Z) / 4 on qubit q.
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(4));
    const int q = static_cast<int>(rng.below(static_cast<std::size_t>(n)));
    const double lambda = rng.uniform();
    const Mat rho = oracle::random_density(n, rng);
    Mat twirl = rho;
    for (char c : {'X', 'Y', 'Z'}) {
      const Mat p = oracle::dense_pauli(oracle::single(n, q, c));
      twirl += p * rho * p;
    }
    const Mat expected = (1.0 - lambda) * rho + lambda * twirl / 4.0;
    auto st = QuantumState::from_density(rho);
    apply_depolarizing(st, q, lambda);
    EXPECT_LT((st.density() - expected).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_NEAR(st.density().trace().real(), 1.0, 1e-12);
    Eigen::SelfAdjointEigenSolver<Mat> es(st.density());
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9);
  }
}

TEST(Channels, TracePreservedOverGateAndNoiseSequences) {
  Rng rng(4);
  auto st = QuantumState::basis_state(4, 0).to_mixed();
  for (int step = 0; step < 60; ++step) {
    const int q = static_cast<int>(rng.below(4));
    switch (rng.below(4)) {
      case 0: apply_gate(st, GateOp::rx(q, rng.uniform(-3, 3))); break;
      case 1: apply_gate(st, GateOp::cnot(q, (q + 1) % 4)); break;
      case 2: evolve_entangler(st, rng.uniform(0, 1), 1.0, 10.0, 1.0); break;
      default: apply_depolarizing(st, q, rng.uniform()); break;
    }
  }
  EXPECT_NEAR(st.density().trace().real(), 1.0, 1e-9);
  EXPECT_NO_THROW(st.validate());
}

TEST(Sampling, DeterministicOutcomes) {
  Rng rng(3);
  const auto zeros = QuantumState::basis_state(3, 0);
  for (Bits s : sample_in_basis(zeros, PauliString::parse("ZZZ"), 100, rng)) EXPECT_EQ(s, 0u);
  auto plus = QuantumState::basis_state(1, 0);
  apply_gate(plus, GateOp::hadamard(0));
  for (Bits s : sample_in_basis(plus, PauliString::parse("X"), 100, rng)) EXPECT_EQ(s, 0u);
  EXPECT_THROW(sample_in_basis(zeros, PauliString::parse("ZIZ"), 1, rng), ValidationError);
}

TEST(Sampling, SameSeedSameShots) {
  Rng a(99), b(99);
  Rng init(1);
  const auto st = QuantumState::from_vector(oracle::random_state(4, init));
  EXPECT_EQ(sample_in_basis(st, PauliString::parse("XYZX"), 500, a), sample_in_basis(st, PauliString::parse("XYZX"), 500, b));
}

TEST(Sampling, ChiSquareAgainstRotatedProbabilities) {
  Rng rng(12);
  const auto psi = oracle::random_state(3, rng);
  const auto st = QuantumState::from_vector(psi);
  const std::string basis = "XZY";
  std::vector<double> probs(8);
  for (Bits s = 0; s < 8; ++s) probs[s] = std::norm(oracle::basis_eigenvector(basis, s).dot(psi));
  std::vector<long> counts(8, 0);
  for (Bits s : sample_in_basis(st, PauliString::parse(basis), 100000, rng)) ++counts[s];
  EXPECT_GT(oracle::chi_square_p(counts, probs), 1e-3);
}

TEST(Sampling, BasisRotationMatchesEigenvectorsForAllBases) {
  Rng rng(13);
  for (int n = 1; n <= 3; ++n) {
    const auto psi = oracle::random_state(n, rng);
    const Mat rho = oracle::random_density(n, rng);
    int total = 1;
    for (int q = 0; q < n; ++q) total *= 3;
    for (int code = 0; code < total; ++code) {
      std::string basis;
      for (int q = 0, c = code; q < n; ++q, c /= 3) basis += "XYZ"[c % 3];
      const auto pure = basis_probabilities(QuantumState::from_vector(psi), PauliString::parse(basis));
      const auto mixed = basis_probabilities(QuantumState::from_density(rho), PauliString::parse(basis));
      for (Bits s = 0; s < (Bits{1} << n); ++s) {
        const oracle::Vec v = oracle::basis_eigenvector(basis, s);
        EXPECT_NEAR(pure[static_cast<Eigen::Index>(s)], std::norm(v.dot(psi)), 1e-10) << basis;
        EXPECT_NEAR(mixed[static_cast<Eigen::Index>(s)], (v.adjoint() * rho * v)(0).real(), 1e-10) << basis;
      }
    }
  }
}

TEST(StateMetrics, Cases) {
  Rng rng(8);
  const auto psi = oracle::random_state(3, rng);
  const auto same = state_metrics(QuantumState::from_vector(psi), psi);
  EXPECT_NEAR(same.fidelity, 1.0, 1e-12);
  EXPECT_NEAR(same.purity, 1.0, 1e-12);

  const auto mm = state_metrics(QuantumState::maximally_mixed(2), oracle::random_state(2, rng));
  EXPECT_NEAR(mm.fidelity, 0.25, 1e-12);
  EXPECT_NEAR(mm.purity, 0.25, 1e-12);

  const Mat rho = oracle::random_density(3, rng);
  const auto m = state_metrics(QuantumState::from_density(rho), psi);
  EXPECT_NEAR(m.fidelity, (psi.adjoint() * rho * psi)(0).real(), 1e-12);
  EXPECT_NEAR(m.purity, (rho * rho).trace().real(), 1e-12);
}

TEST(QuantumStateValidation, RejectsBadStates) {
  EXPECT_THROW(QuantumState::from_vector(StateVector::Ones(4)).validate(), ValidationError);
  Mat bad = Mat::Identity(2, 2);
  EXPECT_THROW(QuantumState::from_density(bad).validate(), ValidationError);
  Mat neg(2, 2);
  neg << 1.5, 0, 0, -0.5;
  EXPECT_THROW(QuantumState::from_density(neg).validate(), ValidationError);
  EXPECT_THROW(QuantumState::from_vector(StateVector::Ones(3)), DimensionError);
}
