#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include <unistd.h>

#include "nem/exact.hpp"
#include "nem/pauli.hpp"
#include "oracles.hpp"

using namespace nem;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("nem_test_" + std::to_string(::getpid()) + "_" + name);
}

double term_coefficient(const PauliHamiltonian& h, const std::string& label) {
  for (const auto& t : h.terms())
    if (t.label() == label) return t.coefficient.real();
  return 0.0;
}

}  // namespace

TEST(PauliApply, SingleQubitActions) {
  const std::uint8_t zero[] = {0}, one[] = {1};
  auto z = pauli_apply(PauliString::parse("Z", 2.0), zero);
  EXPECT_EQ(z.target, 0u);
  EXPECT_EQ(z.amplitude, cplx(2.0, 0.0));
  auto x = pauli_apply(PauliString::parse("X", 2.0), one);
  EXPECT_EQ(x.target, 0u);
  EXPECT_EQ(x.amplitude, cplx(2.0, 0.0));
  auto y = pauli_apply(PauliString::parse("Y", 2.0), zero);
  EXPECT_EQ(y.target, 1u);
  EXPECT_EQ(y.amplitude, cplx(0.0, 2.0));
}

TEST(PauliApply, LengthMismatchIsDimensionError) {
  const std::uint8_t s[] = {0, 1, 0};
  EXPECT_THROW(pauli_apply(PauliString::parse("XY"), s), DimensionError);
}

TEST(PauliApply, MatchesDenseMatrixElements) {
  Rng rng(3);
  const char ops[] = "IXYZ";
  for (int trial = 0; trial < 30; ++trial) {
    std::string label;
    for (int q = 0; q < 4; ++q) label += ops[rng.below(4)];
    const auto p = PauliString::parse(label, cplx(0.7, -0.2));
    const auto dense = oracle::dense_pauli(label);
    for (Bits s = 0; s < 16; ++s) {
      std::uint8_t bits[4];
      for (int q = 0; q < 4; ++q) bits[q] = static_cast<std::uint8_t>(bit(s, q));
      const auto a = pauli_apply(p, bits);
      EXPECT_NEAR(std::abs(a.amplitude - p.coefficient * dense(static_cast<Eigen::Index>(a.target), static_cast<Eigen::Index>(s))), 0.0, 1e-15)
          << label << " s=" << s;
    }
  }
}

TEST(PauliString, RejectsInvalidCharacter) {
  try {
    PauliString::parse("XQ");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find('Q'), std::string::npos);
  }
}

TEST(PauliHamiltonian, MergesAndFoldsIdentity) {
  PauliHamiltonian h(2, {PauliString::parse("ZZ", 0.5), PauliString::parse("ZZ", 0.25), PauliString::parse("II", 1.5),
                         PauliString::parse("XI", 1e-14)});
  ASSERT_EQ(h.terms().size(), 1u);
  EXPECT_DOUBLE_EQ(h.terms()[0].coefficient.real(), 0.75);
  EXPECT_DOUBLE_EQ(h.identity_offset(), 1.5);
}

TEST(PauliHamiltonian, RejectsNonHermitianCoefficient) {
  EXPECT_THROW(PauliHamiltonian(1, {PauliString::parse("X", cplx(0.0, 1.0))}), ValidationError);
  EXPECT_THROW(PauliHamiltonian(2, {PauliString::parse("X")}), DimensionError);
}

TEST(Schwinger, OddSiteCountRejected) {
  SchwingerParams p;
  p.n_sites = 3;
  EXPECT_THROW(build_schwinger(p), ValidationError);
}

TEST(Schwinger, TwoSitesHandExpanded) {
  // L1 = (1 - Z1)/2, L2 = -(Z1 + Z2)/2, so L1^2 + L2^2 = 1 - Z1/2 + Z1 Z2 / 2.
  SchwingerParams p;
  p.n_sites = 2;
  p.mass = 0.0;
  const auto h = build_schwinger(p);
  EXPECT_EQ(h.terms().size(), 4u);
  EXPECT_NEAR(term_coefficient(h, "XX"), 0.5, 1e-15);
  EXPECT_NEAR(term_coefficient(h, "YY"), 0.5, 1e-15);
  EXPECT_NEAR(term_coefficient(h, "ZI"), -0.5, 1e-15);
  EXPECT_NEAR(term_coefficient(h, "ZZ"), 0.5, 1e-15);
  EXPECT_NEAR(h.identity_offset(), 1.0, 1e-15);
}

TEST(Schwinger, EightSitesMatchesDenseDefinition) {
  SchwingerParams p;
  p.n_sites = 8;
  p.mass = -0.7;
  const auto h = build_schwinger(p);
  const auto dense = oracle::schwinger(8, -0.7);
  EXPECT_LT((h.dense() - dense).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(exact_ground_state(h).energy, oracle::ground_energy(dense), 1e-10);
}

TEST(Schwinger, TermsAreUniqueAndHermitian) {
  for (int n : {2, 4, 6}) {
    for (double m : {-2.0, 0.0, 1.3}) {
      SchwingerParams p;
      p.n_sites = n;
      p.mass = m;
      p.epsilon0 = 0.3;
      const auto h = build_schwinger(p);
      std::set<std::string> labels;
      for (const auto& t : h.terms()) EXPECT_TRUE(labels.insert(t.label()).second) << t.label();
      const auto d = h.dense();
      EXPECT_LT((d - d.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LT((d - oracle::schwinger(n, m, 1.0, 1.0, 0.3)).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(HamiltonianFile, SingleTerm) {
  const auto h = parse_hamiltonian("qubits 2\n1.0 ZZ\n");
  ASSERT_EQ(h.terms().size(), 1u);
  EXPECT_EQ(h.terms()[0].label(), "ZZ");
}

TEST(HamiltonianFile, RoundTrip) {
  SchwingerParams p;
  p.n_sites = 8;
  p.mass = -0.7;
  const auto h = build_schwinger(p);
  const auto path = temp_file("h.txt");
  save_hamiltonian(h, path);
  const auto back = load_hamiltonian(path);
  std::filesystem::remove(path);
  EXPECT_TRUE(h.equivalent(back, 0.0));
  EXPECT_EQ(h.identity_offset(), back.identity_offset());
}

TEST(HamiltonianFile, BadCharacterReportsLineAndCharacter) {
  try {
    parse_hamiltonian("# comment\nqubits 3\n0.5 XZQ\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_NE(std::string(e.what()).find("'Q'"), std::string::npos);
  }
  EXPECT_THROW(parse_hamiltonian("qubits 2\nabc ZZ\n"), ParseError);
  EXPECT_THROW(parse_hamiltonian("qubits 2\n1.0 ZZZ\n"), ParseError);
  EXPECT_THROW(parse_hamiltonian("1.0 ZZ\n"), ParseError);
  EXPECT_THROW(load_hamiltonian("/nonexistent/h.txt"), ConfigError);
}

TEST(ExactGroundState, SingleQubit) {
  PauliHamiltonian h(1, {PauliString::parse("Z", -1.0)});
  const auto gs = exact_ground_state(h);
  EXPECT_NEAR(gs.energy, -1.0, 1e-12);
  EXPECT_NEAR(std::abs(gs.state[0]), 1.0, 1e-10);
}

TEST(ExactGroundState, MatchesDenseSolve) {
  struct Case {
    int n;
    double m;
    double tol;
  };
  for (const auto& c : {Case{2, 0.0, 1e-10}, Case{4, -2.0, 1e-8}, Case{6, 2.0, 1e-8}, Case{10, -0.7, 1e-8}}) {
    SchwingerParams p;
    p.n_sites = c.n;
    p.mass = c.m;
    const auto gs = exact_ground_state(build_schwinger(p));
    EXPECT_NEAR(gs.energy, oracle::ground_energy(oracle::schwinger(c.n, c.m)), c.tol) << "N=" << c.n;
  }
}

TEST(Expectation, BasicCases) {
  PauliHamiltonian z(1, {PauliString::parse("Z")});
  StateVector zero = StateVector::Zero(2);
  zero[0] = 1.0;
  EXPECT_DOUBLE_EQ(expectation(z, zero), 1.0);
  EXPECT_THROW(expectation(z, StateVector(2 * zero)), ValidationError);

  SchwingerParams p;
  p.n_sites = 6;
  p.mass = 0.5;
  const auto h = build_schwinger(p);
  const auto gs = exact_ground_state(h);
  EXPECT_NEAR(expectation(h, gs.state), gs.energy, 1e-8);

  Rng rng(11);
  const auto dense = oracle::schwinger(6, 0.5);
  for (int i = 0; i < 5; ++i) {
    const auto psi = oracle::random_state(6, rng);
    EXPECT_NEAR(expectation(h, psi), (psi.adjoint() * dense * psi)(0).real(), 1e-10);
    const auto rho = oracle::random_density(6, rng);
    EXPECT_NEAR(expectation(h, rho), (rho * dense).trace().real(), 1e-10);
  }
}

TEST(OrderParameter, BasisStates) {
  // Site-wise factor 1 + (-1)^j z_j with z = +1 for bit 0.
  auto direct = [](const std::string& sites) {
    const int n = static_cast<int>(sites.size());
    double total = 0.0;
    for (int i = 1; i <= n; ++i)
      for (int j = i + 1; j <= n; ++j) {
        const double zi = sites[i - 1] == '0' ? 1.0 : -1.0, zj = sites[j - 1] == '0' ? 1.0 : -1.0;
        total += (1.0 + ((i % 2) ? -zi : zi)) * (1.0 + ((j % 2) ? -zj : zj));
      }
    return total / (2.0 * n * (n - 1));
  };
  for (const std::string s : {"01010101", "10101010", "11110000", "00000000"}) {
    StateVector psi = StateVector::Zero(256);
    psi[static_cast<Eigen::Index>(bits_from_string(s))] = 1.0;
    EXPECT_NEAR(order_parameter(psi, 8), direct(s), 1e-14) << s;
  }
  StateVector vacuum = StateVector::Zero(256);
  vacuum[static_cast<Eigen::Index>(bits_from_string("01010101"))] = 1.0;
  EXPECT_DOUBLE_EQ(order_parameter(vacuum, 8), 0.0);
  EXPECT_THROW(order_parameter(StateVector(StateVector::Ones(2) / std::sqrt(2.0)), 1), ValidationError);
}

TEST(OrderParameter, DenseOracle) {
  SchwingerParams p;
  p.n_sites = 8;
  p.mass = 2.0;
  const auto gs = exact_ground_state(build_schwinger(p));
  EXPECT_NEAR(order_parameter(gs.state, 8), oracle::order_parameter(oracle::projector(gs.state), 8), 1e-10);

  const StateVector uniform = StateVector::Constant(256, 1.0 / 16.0);
  EXPECT_NEAR(order_parameter(uniform, 8), oracle::order_parameter(oracle::projector(uniform), 8), 1e-12);
}

TEST(Renyi, ProductAndBell) {
  StateVector zero = StateVector::Zero(16);
  zero[0] = 1.0;
  for (int k = 1; k < 4; ++k) EXPECT_NEAR(renyi2_entropy(zero, k), 0.0, 1e-14);
  StateVector bell = StateVector::Zero(4);
  bell[0] = bell[3] = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(renyi2_entropy(bell, 1), std::log(2.0), 1e-14);
  EXPECT_THROW(renyi2_entropy(bell, 0), ValidationError);
  EXPECT_THROW(renyi2_entropy(bell, 2), ValidationError);
}

TEST(Renyi, GroundStateAgainstPartialTrace) {
  SchwingerParams p;
  p.n_sites = 8;
  p.mass = -0.7;
  const auto gs = exact_ground_state(build_schwinger(p));
  EXPECT_NEAR(renyi2_entropy(gs.state, 3), oracle::renyi2(oracle::projector(gs.state), 8, 3), 1e-10);
}

TEST(Renyi, GlobalPhaseInvariance) {
  Rng rng(5);
  const auto psi = oracle::random_state(6, rng);
  const StateVector rotated = psi * std::polar(1.0, 1.234);
  EXPECT_NEAR(renyi2_entropy(psi, 2), renyi2_entropy(rotated, 2), 1e-13);
}

TEST(Observables, RandomStatesMatchBruteForce) {
  Rng rng(21);
  for (int i = 0; i < 50; ++i) {
    const int n = 2 + 2 * static_cast<int>(rng.below(4));  // 2, 4, 6, 8
    const int k = 1 + static_cast<int>(rng.below(static_cast<std::size_t>(n - 1)));
    const auto psi = oracle::random_state(n, rng);
    const auto rho = oracle::projector(psi);
    EXPECT_NEAR(order_parameter(psi, n), oracle::order_parameter(rho, n), 1e-10);
    EXPECT_NEAR(renyi2_entropy(psi, k), oracle::renyi2(rho, n, k), 1e-10);
    if (n <= 4) {
      const auto mixed = oracle::random_density(n, rng);
      EXPECT_NEAR(order_parameter(mixed, n), oracle::order_parameter(mixed, n), 1e-10);
      EXPECT_NEAR(renyi2_entropy(mixed, k), oracle::renyi2(mixed, n, k), 1e-10);
    }
  }
}
