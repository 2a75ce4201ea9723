#pragma once

#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

#include "nem/error.hpp"
#include "nem/nqs.hpp"
#include "nem/pauli.hpp"
#include "nem/rng.hpp"

namespace nem {

// ln <s|psi>; a vanishing amplitude has real part -inf.
class Wavefunction {
public:
  virtual ~Wavefunction() = default;
  virtual int n_qubits() const = 0;
  virtual cplx log_amplitude(Bits s) = 0;
  virtual std::vector<Bits> sample(int count, Rng& rng) = 0;
};

// Tabulated amplitudes, e.g. an exact eigenstate.
class LookupWavefunction : public Wavefunction {
public:
  explicit LookupWavefunction(StateVector psi);
  int n_qubits() const override { return n_; }
  cplx log_amplitude(Bits s) override;
  std::vector<Bits> sample(int count, Rng& rng) override;

private:
  StateVector psi_;
  Eigen::VectorXd probabilities_;
  int n_;
};

// Transformer NQS with a memo of evaluated amplitudes.
class NqsWavefunction : public Wavefunction {
public:
  explicit NqsWavefunction(const NqsParameters& params) : nqs_(params) {}
  int n_qubits() const override { return nqs_.config().n_qubits; }
  cplx log_amplitude(Bits s) override;
  std::vector<Bits> sample(int count, Rng& rng) override { return nqs_.sample(count, rng); }
  TransformerNqs& model() { return nqs_; }

private:
  TransformerNqs nqs_;
  std::unordered_map<Bits, cplx> cache_;
};

// Hamiltonian regrouped by flip mask for local-energy evaluation.
class LocalHamiltonian {
public:
  explicit LocalHamiltonian(const PauliHamiltonian& h);
  int n_qubits() const { return n_; }

  struct Term {
    Bits z_mask;
    cplx factor;
  };
  struct Group {
    Bits x_mask;
    std::vector<Term> terms;
  };
  const std::vector<Group>& groups() const { return groups_; }
  double offset() const { return offset_; }

private:
  int n_;
  double offset_;
  std::vector<Group> groups_;
};

struct LocalEnergy {
  cplx value = 0.0;
  bool clamped = false;  // |<s|psi>| below 1e-300; value is meaningless
};

// H_loc(s) = sum_t <s|H|t> <t|psi> / <s|psi>.
LocalEnergy local_energy(Wavefunction& psi, const LocalHamiltonian& h, Bits s);
LocalEnergy local_energy(const NqsParameters& params, const PauliHamiltonian& h, Bits s);

struct LocalEnergyStatistics {
  double mean = 0.0;
  double variance = 0.0;
  int clamp_count = 0;
};

// Mean and variance of H_loc over the given samples; clamped samples are skipped.
LocalEnergyStatistics local_energy_statistics(Wavefunction& psi, const LocalHamiltonian& h, std::span<const Bits> samples);

struct VmcStep {
  double energy = 0.0;
  double variance = 0.0;
  std::vector<double> gradient;
  int clamp_count = 0;         // samples dropped for a vanishing amplitude
  int regularizer_excluded = 0;  // samples with |psi| < 1e-8 left out of the regularizer
  int unique_samples = 0;
};

// Energy gradient 2 Re E[(H_loc - E)* grad ln psi] plus the L1 regularizer
// -eps E[|psi|^-1 grad Re ln psi], from b samples of the NQS.
VmcStep vmc_gradient(const NqsParameters& params, const LocalHamiltonian& h, int batch_size, double eps_reg, Rng& rng);

// Same estimator with the Born weights of every basis state in place of
// sampling (N <= 16).
VmcStep vmc_gradient_exhaustive(const NqsParameters& params, const LocalHamiltonian& h, double eps_reg);

struct LearningRateSchedule {
  double initial = 1e-2;
  std::vector<int> milestones;  // multiply by `factor` once each milestone is reached
  double factor = 0.1;

  double at(int iteration) const;
};

struct RegularizerSchedule {
  enum class Kind { step, linear };
  Kind kind = Kind::step;
  double initial = 0.0;
  int duration = 0;  // step: constant for this many iterations; linear: decays to 0 over them

  double at(int iteration) const;
};

struct VmcConfig {
  int iterations = 400;
  int batch_size = 512;
  LearningRateSchedule learning_rate;
  RegularizerSchedule regularizer;
  std::uint64_t seed = 0;

  void validate() const;
};

struct VmcIteration {
  int iteration = 0;
  double energy = 0.0;
  double variance = 0.0;
  double eps_reg = 0.0;
  double learning_rate = 0.0;
  int clamp_count = 0;
};

struct VmcResult {
  NqsParameters params;
  std::vector<VmcIteration> trace;
};

class VmcAborted : public NumericalError {
public:
  VmcAborted(const std::string& what, std::vector<VmcIteration> trace)
      : NumericalError(what), trace_(std::move(trace)) {}
  const std::vector<VmcIteration>& trace() const { return trace_; }

private:
  std::vector<VmcIteration> trace_;
};

VmcResult train_vmc(const NqsParameters& init, const PauliHamiltonian& h, const VmcConfig& cfg);

void write_vmc_trace_csv(const std::vector<VmcIteration>& trace, const std::filesystem::path& path);

}  // namespace nem
