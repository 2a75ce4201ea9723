#include <gtest/gtest.h>

#include <cmath>
#include <bit>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include "nem/exact.hpp"
#include "nem/vqe.hpp"
#include "oracles.hpp"

using namespace nem;
using oracle::Mat;
using oracle::Vec;

namespace {

Mat rz(double t) { return oracle::expi(oracle::pauli('Z'), -t / 2); }
Mat rx(double t) { return oracle::expi(oracle::pauli('X'), -t / 2); }

PauliHamiltonian schwinger(int n, double m) {
  SchwingerParams p;
  p.n_sites = n;
  p.mass = m;
  return build_schwinger(p);
}

double sum_squares(std::span<const double> t) {
  double s = 0.0;
  for (double v : t) s += v * v;
  return s;
}

}  // namespace

TEST(ChemistryCircuit, ParameterCounts) {
  EXPECT_EQ(ChemistryCircuitSpec::parameter_count(2, 1), 10u);
  EXPECT_EQ(ChemistryCircuitSpec::parameter_count(4, 1), 20u);
  for (int n : {2, 4, 6})
    for (int d : {1, 2, 3}) {
      ChemistryCircuitSpec spec{n, d, std::vector<double>(static_cast<std::size_t>(n * (3 * d + 2)), 0.0)};
      const auto st = chemistry_circuit(spec);
      EXPECT_NEAR(std::abs(st.vector()[0]), 1.0, 1e-14) << "zero angles leave |0...0>";
      spec.theta.push_back(0.0);
      try {
        chemistry_circuit(spec);
        FAIL();
      } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find(std::to_string(n * (3 * d + 2))), std::string::npos);
      }
    }
}

TEST(ChemistryCircuit, TwoQubitsMatchDenseProduct) {
  Rng rng(17);
  std::vector<double> th(10);
  for (auto& t : th) t = rng.uniform(-3, 3);
  const ChemistryCircuitSpec spec{2, 1, th};
  // Qubit 1 is the left Kronecker factor.
  const Mat first = Eigen::kroneckerProduct((rz(th[2]) * rx(th[3])).eval(), (rz(th[0]) * rx(th[1])).eval()).eval();
  Mat cnot = Mat::Zero(4, 4);
  cnot(0, 0) = cnot(2, 2) = cnot(3, 1) = cnot(1, 3) = 1.0;
  const Mat u0 = rz(th[4]) * rx(th[5]) * rz(th[6]), u1 = rz(th[7]) * rx(th[8]) * rz(th[9]);
  const Mat second = Eigen::kroneckerProduct(u1, u0).eval();
  Vec zero = Vec::Zero(4);
  zero[0] = 1.0;
  const Vec expected = second * cnot * first * zero;
  EXPECT_LT((chemistry_circuit(spec).vector() - expected).norm(), 1e-12);

  auto noisy = spec;
  noisy.single_qubit_noise = 0.001;
  noisy.two_qubit_noise = 0.01;
  const auto mixed = chemistry_circuit(noisy);
  ASSERT_FALSE(mixed.is_pure());
  EXPECT_NO_THROW(mixed.validate());
  const double f = (expected.adjoint() * mixed.density() * expected)(0).real();
  EXPECT_LT(f, 1.0);
  EXPECT_GT(f, 0.9);
}

TEST(SchwingerCircuit, CountsAndInitialStates) {
  SchwingerCircuitSpec spec;
  spec.n_sites = 8;
  spec.layers = 3;
  EXPECT_EQ(spec.parameter_count(), 15u);
  EXPECT_EQ(schwinger_initial_state(8, -0.7), bits_from_string("01010101"));
  EXPECT_EQ(schwinger_initial_state(8, 0.0), bits_from_string("01010101"));
  EXPECT_EQ(schwinger_initial_state(8, -0.71), bits_from_string("10101010"));

  spec.n_sites = 4;
  spec.layers = 2;
  const auto st = schwinger_circuit(spec, std::vector<double>(spec.parameter_count(), 0.0), 0.0);
  EXPECT_NEAR(std::abs(st.vector()[static_cast<Eigen::Index>(bits_from_string("0101"))]), 1.0, 1e-12);
}

TEST(SchwingerCircuit, OneLayerMatchesDenseOracle) {
  SchwingerCircuitSpec spec;
  spec.n_sites = 4;
  spec.layers = 1;
  const std::vector<double> params = {0.31, 0.7, -1.2};
  Mat he = Mat::Zero(16, 16);
  for (int j = 0; j < 4; ++j) {
    he += 10.0 * oracle::dense_pauli(oracle::single(4, j, 'Z'));
    for (int k = j + 1; k < 4; ++k) he += oracle::dense_pauli(oracle::pair(4, j, k, 'X')) / static_cast<double>(k - j);
  }
  const std::vector<double> phi = {0.7, -1.2, 1.2, -0.7};
  Mat rot = Mat::Identity(1, 1);
  for (double a : phi) {
    Mat next = Eigen::kroneckerProduct(rz(a), rot).eval();
    rot = std::move(next);
  }
  Vec init = Vec::Zero(16);
  init[static_cast<Eigen::Index>(bits_from_string("0101"))] = 1.0;
  const Vec expected = rot * oracle::expi(he, params[0]) * init;
  EXPECT_LT((schwinger_circuit(spec, params, 0.0).vector() - expected).norm(), 1e-10);

  spec.noise = 0.05;
  const auto mixed = schwinger_circuit(spec, params, 0.0);
  EXPECT_NO_THROW(mixed.validate());
  EXPECT_LT((mixed.density() * mixed.density()).trace().real(), 1.0);
}

TEST(SchwingerCircuit, TyingEnforced) {
  const auto full = tie_rotation_angles(std::vector<double>{0.1, 0.2}, 4);
  EXPECT_EQ(full, (std::vector<double>{0.1, 0.2, -0.2, -0.1}));
  SchwingerCircuitSpec spec;
  spec.n_sites = 4;
  spec.layers = 1;
  const SchwingerAnsatz ansatz(spec);
  const std::vector<double> times = {0.2};
  EXPECT_NO_THROW(ansatz.prepare_full(times, {{0.1, 0.2, -0.2, -0.1}}, 0.0));
  EXPECT_THROW(ansatz.prepare_full(times, {{0.1, 0.2, 0.2, -0.1}}, 0.0), ValidationError);
  EXPECT_THROW(schwinger_circuit(spec, std::vector<double>{0.1}, 0.0), ValidationError);
}

TEST(SchwingerCircuit, AnalogGuard) {
  SchwingerCircuitSpec spec;
  spec.n_sites = 14;
  EXPECT_THROW(spec.validate(), CapabilityError);
  spec.mode = SchwingerCircuitMode::scaling;
  EXPECT_NO_THROW(spec.validate());
}

TEST(ScalingEntangler, IdentityAndWeightConservation) {
  Rng rng(6);
  const auto psi = oracle::random_state(4, rng);
  auto st = QuantumState::from_vector(psi);
  scaling_entangler(st, 0.0);
  EXPECT_LT((st.vector() - psi).norm(), 1e-15);

  auto two = QuantumState::basis_state(2, bits_from_string("01"));
  scaling_entangler(two, 0.9);
  EXPECT_NEAR(std::norm(two.vector()[1]) + std::norm(two.vector()[2]), 1.0, 1e-14);

  auto six = QuantumState::basis_state(6, bits_from_string("010110"));
  scaling_entangler(six, 0.4);
  for (Eigen::Index s = 0; s < 64; ++s)
    if (std::popcount(static_cast<Bits>(s)) != 3) {
      EXPECT_NEAR(std::abs(six.vector()[s]), 0.0, 1e-14);
    }
}

TEST(EstimateEnergy, SchwingerUsesThreeBases) {
  const auto bases = group_measurement_bases(schwinger(8, -0.7));
  ASSERT_EQ(bases.size(), 3u);
  std::set<std::string> labels;
  for (const auto& b : bases) labels.insert(b.label());
  EXPECT_EQ(labels, (std::set<std::string>{"ZZZZZZZZ", "XXXXXXXX", "YYYYYYYY"}));
}

TEST(EstimateEnergy, DeterministicOutcome) {
  PauliHamiltonian h(1, {PauliString::parse("Z")});
  Rng rng(1);
  const auto e = estimate_energy(QuantumState::basis_state(1, 0), h, group_measurement_bases(h), 37, rng);
  EXPECT_EQ(e.value, 1.0);
  EXPECT_EQ(e.standard_error, 0.0);
}

TEST(EstimateEnergy, ConflictingBasisRejected) {
  PauliHamiltonian h(2, {PauliString::parse("XZ")});
  Rng rng(1);
  EXPECT_THROW(estimate_energy(QuantumState::basis_state(2, 0), h, {PauliString::parse("ZZ")}, 10, rng), ValidationError);
}

TEST(EstimateEnergy, LargeShotCountWithinFiveSigma) {
  const auto h = schwinger(4, 0.3);
  Rng rng(31);
  const auto psi = oracle::random_state(4, rng);
  const auto e = estimate_energy(QuantumState::from_vector(psi), h, group_measurement_bases(h), 1000000, rng);
  EXPECT_LT(std::abs(e.value - expectation(h, psi)), 5.0 * e.standard_error);
  EXPECT_GT(e.standard_error, 0.0);
}

TEST(EstimateEnergy, Unbiased) {
  const auto h = schwinger(4, -0.7);
  Rng rng(41);
  const auto psi = oracle::random_state(4, rng);
  const auto st = QuantumState::from_vector(psi);
  const auto bases = group_measurement_bases(h);
  const int reps = 200;
  double sum = 0.0, sum_sq = 0.0;
  for (int r = 0; r < reps; ++r) {
    const double v = estimate_energy(st, h, bases, 1024, rng).value;
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sum_sq / reps - mean * mean) / (reps - 1));
  EXPECT_LT(std::abs(mean - expectation(h, psi)), 5.0 * se);
}

TEST(Spsa, QuadraticConverges) {
  Rng init(5);
  std::vector<double> theta0(4);
  for (auto& t : theta0) t = init.uniform(-1, 1);
  SpsaConfig cfg;
  cfg.iterations = 500;
  Rng rng(8);
  const auto result = spsa_minimize(sum_squares, theta0, cfg, rng);
  EXPECT_LE(sum_squares(result.theta), 1e-2);
  EXPECT_EQ(result.trace.size(), 2u * 500u);
}

TEST(Spsa, DeterministicTrace) {
  SpsaConfig cfg;
  cfg.iterations = 50;
  Rng a(3), b(3);
  const auto r1 = spsa_minimize(sum_squares, {0.5, -0.2, 0.9}, cfg, a);
  const auto r2 = spsa_minimize(sum_squares, {0.5, -0.2, 0.9}, cfg, b);
  EXPECT_EQ(r1.theta, r2.theta);
  ASSERT_EQ(r1.trace.size(), r2.trace.size());
  for (std::size_t i = 0; i < r1.trace.size(); ++i) {
    EXPECT_EQ(r1.trace[i].energy, r2.trace[i].energy);
    EXPECT_EQ(r1.trace[i].parameter_hash, r2.trace[i].parameter_hash);
  }
}

TEST(Spsa, NanObjectiveAbortsWithTrace) {
  SpsaConfig cfg;
  cfg.iterations = 20;
  int calls = 0;
  auto f = [&](std::span<const double> t) {
    return ++calls > 5 ? std::numeric_limits<double>::quiet_NaN() : sum_squares(t);
  };
  Rng rng(1);
  try {
    spsa_minimize(f, {0.1, 0.2}, cfg, rng);
    FAIL();
  } catch (const SpsaAborted& e) {
    EXPECT_EQ(e.trace().size(), 6u);
    EXPECT_TRUE(std::isnan(e.trace().back().energy));
  }
}

TEST(Spsa, InvalidGainsRejected) {
  SpsaConfig cfg;
  cfg.a0 = -1.0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = SpsaConfig{};
  cfg.alpha = 1.5;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(SpsaCalibrate, FirstUpdateHitsTargetStep) {
  // One coordinate with constant slope g: the gradient estimate is exactly g.
  const double g = 3.7, target = 0.05;
  auto f = [&](std::span<const double> t) { return g * t[0]; };
  SpsaConfig cfg;
  Rng rng(2);
  cfg.a0 = spsa_calibrate(f, std::vector<double>{0.0}, cfg, 25, target, rng);
  cfg.iterations = 1;
  const auto r = spsa_minimize(f, {0.0}, cfg, rng);
  EXPECT_NEAR(std::abs(r.theta[0]), target, 0.1 * target);
}

TEST(SpsaCalibrate, FlatObjectiveFallsBack) {
  SpsaConfig cfg;
  Rng rng(2);
  EXPECT_EQ(spsa_calibrate([](std::span<const double>) { return 1.0; }, std::vector<double>{0.0, 0.0}, cfg, 25, 0.1, rng),
            0.1);
}

TEST(Spsa, ScalingCircuitFourSitesReachesGroundEnergy) {
  const double mass = -0.7;
  const auto h = schwinger(4, mass);
  const double e0 = exact_ground_state(h).energy;
  SchwingerCircuitSpec spec;
  spec.n_sites = 4;
  spec.mode = SchwingerCircuitMode::scaling;
  const SchwingerAnsatz ansatz(spec);
  auto energy = [&](std::span<const double> t) { return expectation(h, ansatz.prepare(t, mass).vector()); };
  int successes = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    std::vector<double> theta(spec.parameter_count());
    for (auto& t : theta) t = rng.uniform(-0.1, 0.1);
    SpsaConfig cfg;
    cfg.iterations = 200;
    cfg.a0 = 0.5;  // the 8-site default of 0.1 stalls in a local minimum on this ansatz
    const auto r = spsa_minimize(energy, theta, cfg, rng);
    if (energy(r.theta) - e0 <= 0.1) ++successes;
  }
  EXPECT_GE(successes, 8);
}

TEST(SpsaTrace, CsvHeader) {
  const auto path = std::filesystem::temp_directory_path() / "nem_spsa_trace.csv";
  write_spsa_trace_csv({{0, 0, 1.5, "abc"}}, path.string());
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "iteration,evaluation,energy,parameter_hash");
  EXPECT_EQ(row, "0,0,1.5,abc");
  std::filesystem::remove(path);
}
