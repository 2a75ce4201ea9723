#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>

#include "nem/exact.hpp"
#include "nem/nqst.hpp"
#include "nem/simulator.hpp"
#include "nem/vmc.hpp"
#include "oracles.hpp"

using namespace nem;

namespace {

PauliHamiltonian schwinger(int n, double m) {
  SchwingerParams p;
  p.n_sites = n;
  p.mass = m;
  return build_schwinger(p);
}

TransformerConfig tiny(int n) {
  TransformerConfig cfg;
  cfg.n_qubits = n;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.model_dim = 4;
  return cfg;
}

NqsParameters random_nqs(const TransformerConfig& cfg, std::uint64_t seed, double spread) {
  Rng rng(seed);
  auto p = NqsParameters::initialize(cfg, rng);
  for (auto& v : p.values) v += rng.uniform(-spread, spread);
  return p;
}

double rayleigh(const NqsParameters& params, const Eigen::MatrixXcd& h) {
  const StateVector psi = TransformerNqs(params).statevector();
  return (psi.adjoint() * h * psi)(0).real() / psi.squaredNorm();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST(LocalEnergy, DiagonalHamiltonianIgnoresWavefunction) {
  PauliHamiltonian h(2, {PauliString::parse("ZI", 0.5), PauliString::parse("ZZ", 0.3)}, 0.2);
  const LocalHamiltonian local(h);
  for (std::uint64_t seed : {1u, 2u}) {
    NqsWavefunction psi(random_nqs(tiny(2), seed, 0.5));
    for (Bits s = 0; s < 4; ++s) {
      const double z0 = bit(s, 0) ? -1.0 : 1.0, z1 = bit(s, 1) ? -1.0 : 1.0;
      const auto e = local_energy(psi, local, s);
      EXPECT_FALSE(e.clamped);
      EXPECT_NEAR(std::abs(e.value - cplx(0.2 + 0.5 * z0 + 0.3 * z0 * z1)), 0.0, 1e-14);
    }
  }
}

TEST(LocalEnergy, EigenstateGivesEigenvalueEverywhere) {
  const auto h = schwinger(4, -0.7);
  const auto gs = exact_ground_state(h);
  LookupWavefunction psi(gs.state);
  const LocalHamiltonian local(h);
  for (Bits s = 0; s < 16; ++s) {
    const auto e = local_energy(psi, local, s);
    if (std::abs(gs.state[static_cast<Eigen::Index>(s)]) < 1e-6) continue;
    EXPECT_NEAR(std::abs(e.value - gs.energy), 0.0, 1e-8) << s;
  }
  Rng rng(1);
  const auto samples = psi.sample(512, rng);
  const auto stats = local_energy_statistics(psi, local, samples);
  EXPECT_LE(stats.variance, 1e-20);
  // The centered local energies vanish, so the energy-gradient seeds are zero.
  for (Bits s : samples) EXPECT_LE(std::abs(local_energy(psi, local, s).value - stats.mean), 1e-10);
}

TEST(LocalEnergy, VanishingAmplitudeIsClamped) {
  StateVector v = StateVector::Zero(4);
  v[0] = v[3] = 1.0;
  LookupWavefunction psi(v);
  PauliHamiltonian h(2, {PauliString::parse("XI"), PauliString::parse("ZZ")});
  const LocalHamiltonian local(h);
  EXPECT_TRUE(local_energy(psi, local, 1).clamped);
  const std::vector<Bits> samples = {0, 1, 3};
  const auto stats = local_energy_statistics(psi, local, samples);
  EXPECT_EQ(stats.clamp_count, 1);
}

TEST(LocalEnergy, EnumerationMatchesRayleighQuotient) {
  const auto h = schwinger(4, 0.3);
  const auto dense = oracle::schwinger(4, 0.3);
  const auto params = random_nqs(tiny(4), 3, 0.7);
  NqsWavefunction psi(params);
  const LocalHamiltonian local(h);
  TransformerNqs nqs(params);
  cplx mean = 0.0;
  for (Bits s = 0; s < 16; ++s) mean += std::exp(nqs.forward(s).log_prob) * local_energy(psi, local, s).value;
  EXPECT_NEAR(mean.real(), rayleigh(params, dense), 1e-10);
  EXPECT_NEAR(mean.imag(), 0.0, 1e-10);
  EXPECT_NEAR(local_energy(params, h, 5).value.real(), local_energy(psi, local, 5).value.real(), 1e-15);
}

TEST(VmcGradient, ExhaustiveMatchesRayleighQuotientDerivative) {
  const int n = 3;
  PauliHamiltonian h(n, {PauliString::parse("XXI", 0.7), PauliString::parse("IYY", -0.4), PauliString::parse("ZIZ", 0.9),
                         PauliString::parse("XZY", 0.25), PauliString::parse("IIZ", -0.6)},
                     0.1);
  const auto dense = h.dense();
  const auto params = random_nqs(tiny(n), 5, 0.3);
  const auto step = vmc_gradient_exhaustive(params, LocalHamiltonian(h), 0.0);
  EXPECT_NEAR(step.energy, rayleigh(params, dense), 1e-10);
  // Richardson-extrapolated central differences. Steps stay small because the
  // ReLU layers put kinks within 1e-3 of some parameters.
  auto central = [&](std::size_t i, double d) {
    auto p = params;
    p.values[i] += d;
    const double up = rayleigh(p, dense);
    p.values[i] -= 2 * d;
    return (up - rayleigh(p, dense)) / (2 * d);
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double numeric = (4.0 * central(i, 5e-6) - central(i, 1e-5)) / 3.0;
    EXPECT_NEAR(step.gradient[i], numeric, 1e-8) << i;
  }
}

TEST(VmcGradient, SampledEstimatorAgreesWithExhaustive) {
  const auto h = schwinger(4, -0.7);
  const LocalHamiltonian local(h);
  const auto params = random_nqs(tiny(4), 6, 0.5);
  const auto exact = vmc_gradient_exhaustive(params, local, 0.0);
  Rng rng(3);
  const auto sampled = vmc_gradient(params, local, 200000, 0.0, rng);
  EXPECT_NEAR(sampled.energy, exact.energy, 0.02);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < exact.gradient.size(); ++i) {
    num += (sampled.gradient[i] - exact.gradient[i]) * (sampled.gradient[i] - exact.gradient[i]);
    den += exact.gradient[i] * exact.gradient[i];
  }
  EXPECT_LT(std::sqrt(num / den), 0.05);
  EXPECT_LE(sampled.unique_samples, 16);
}

TEST(VmcGradient, RegularizerIncreasesL1Norm) {
  const auto h = schwinger(2, 0.0);
  const LocalHamiltonian local(h);
  const auto params = random_nqs(tiny(2), 7, 1.0);
  const double eps = 0.1;
  const auto with = vmc_gradient_exhaustive(params, local, eps);
  const auto without = vmc_gradient_exhaustive(params, local, 0.0);
  auto l1 = [](const NqsParameters& p) {
    TransformerNqs nqs(p);
    double total = 0.0;
    for (Bits s = 0; s < 4; ++s) total += std::exp(0.5 * nqs.forward(s).log_prob);
    return total;
  };
  auto moved = params;
  for (std::size_t i = 0; i < params.size(); ++i) moved.values[i] -= 1e-3 * (with.gradient[i] - without.gradient[i]);
  EXPECT_GT(l1(moved), l1(params));
  EXPECT_EQ(with.energy, without.energy);
}

TEST(VmcGradient, TinyAmplitudesLeftOutOfRegularizer) {
  NqsParameters params(tiny(2));
  const auto layout = params.layout();
  for (const auto& l : layout.layers)
    for (int c = 0; c < 4; ++c) params.values[l.ln1_scale + static_cast<std::size_t>(c)] = params.values[l.ln2_scale + static_cast<std::size_t>(c)] = 1.0;
  params.values[layout.logit_bias] = 20.0;  // |psi(00)| = e^-20
  const auto step = vmc_gradient_exhaustive(params, LocalHamiltonian(schwinger(2, 0.0)), 0.1);
  EXPECT_GE(step.regularizer_excluded, 1);
  for (double g : step.gradient) EXPECT_TRUE(std::isfinite(g));
  EXPECT_THROW(vmc_gradient_exhaustive(params, LocalHamiltonian(schwinger(2, 0.0)), -1.0), ValidationError);
}

TEST(Schedules, LearningRateAndRegularizer) {
  LearningRateSchedule lr{3e-3, {1600, 2400}, 0.1};
  EXPECT_DOUBLE_EQ(lr.at(0), 3e-3);
  EXPECT_DOUBLE_EQ(lr.at(1599), 3e-3);
  EXPECT_NEAR(lr.at(1600), 3e-4, 1e-18);
  EXPECT_NEAR(lr.at(2400), 3e-5, 1e-18);
  RegularizerSchedule step{RegularizerSchedule::Kind::step, 0.1, 200};
  EXPECT_EQ(step.at(0), 0.1);
  EXPECT_EQ(step.at(199), 0.1);
  EXPECT_EQ(step.at(200), 0.0);
  RegularizerSchedule linear{RegularizerSchedule::Kind::linear, 0.1, 100};
  EXPECT_NEAR(linear.at(50), 0.05, 1e-15);
  EXPECT_EQ(linear.at(100), 0.0);
}

TEST(VmcConfig, Validation) {
  VmcConfig cfg;
  cfg.batch_size = 1;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = VmcConfig{};
  cfg.regularizer.initial = -0.1;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(TrainVmc, ZeroIterationsKeepParameters) {
  const auto params = random_nqs(tiny(2), 9, 0.3);
  VmcConfig cfg;
  cfg.iterations = 0;
  const auto r = train_vmc(params, schwinger(2, 0.0), cfg);
  EXPECT_EQ(r.params.values, params.values);
  EXPECT_TRUE(r.trace.empty());
}

TEST(TrainVmc, RegularizerOffIsBitwiseEnergyPath) {
  const auto params = random_nqs(tiny(4), 10, 0.3);
  const auto h = schwinger(4, 0.0);
  VmcConfig off;
  off.iterations = 15;
  off.batch_size = 64;
  off.seed = 4;
  VmcConfig zero = off;
  zero.regularizer = {RegularizerSchedule::Kind::step, 0.0, 100};
  const auto a = train_vmc(params, h, off), b = train_vmc(params, h, zero);
  EXPECT_EQ(a.params.values, b.params.values);
  for (std::size_t i = 0; i < a.trace.size(); ++i) EXPECT_EQ(a.trace[i].energy, b.trace[i].energy);
}

TEST(TrainVmc, NonFiniteModelAbortsWithTrace) {
  auto params = random_nqs(tiny(2), 11, 0.3);
  params.values[params.layout().embedding] = std::numeric_limits<double>::quiet_NaN();
  VmcConfig cfg;
  cfg.iterations = 5;
  try {
    train_vmc(params, schwinger(2, 0.0), cfg);
    FAIL();
  } catch (const VmcAborted& e) {
    EXPECT_TRUE(e.trace().empty());
  }
}

TEST(TrainVmc, FourSitesFromTomographyReachesGroundState) {
  const double mass = 0.0;
  const auto h = schwinger(4, mass);
  const auto gs = exact_ground_state(h);
  Rng data_rng(101);
  // Ample data: with 512 shots per basis the phase of the rare |1100> state is
  // often learned wrongly and VMC then drives its amplitude to zero.
  const auto data = make_dataset(QuantumState::from_vector(gs.state), BasisFamily::schwinger, 16384, data_rng);
  TransformerConfig cfg;
  cfg.n_qubits = 4;
  Rng init_rng(102);
  const auto init = NqsParameters::initialize(cfg, init_rng);
  NqstConfig nqst;
  nqst.seed = 103;
  nqst.epochs = 100;
  const auto tomography = train_nqst(init, data, nqst);

  VmcConfig vmc;
  vmc.iterations = 400;
  vmc.batch_size = 512;
  vmc.regularizer = {RegularizerSchedule::Kind::step, 0.1, 200};
  vmc.seed = 104;
  const auto r = train_vmc(tomography.params, h, vmc);
  const StateVector psi = TransformerNqs(r.params).statevector();
  const double energy = expectation(h, StateVector(psi.normalized()));
  EXPECT_LE(std::abs(energy - gs.energy), 1e-3);

  std::vector<double> head, tail;
  for (std::size_t i = 0; i < 50; ++i) {
    head.push_back(r.trace[i].energy);
    tail.push_back(r.trace[r.trace.size() - 50 + i].energy);
  }
  EXPECT_LE(median(tail), median(head));
}

TEST(VmcTrace, CsvHeader) {
  const auto path = std::filesystem::temp_directory_path() / "nem_test_vmc.csv";
  write_vmc_trace_csv({{0, -1.5, 0.25, 0.1, 0.01, 0}}, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "iteration,energy,variance,eps_reg,learning_rate,clamp_count");
  std::filesystem::remove(path);
}
