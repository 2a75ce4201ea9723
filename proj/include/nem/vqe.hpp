#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nem/pauli.hpp"
#include "nem/rng.hpp"
#include "nem/simulator.hpp"

namespace nem {

// Hardware-efficient circuit: an R_Z R_X layer (the leading R_Z is dropped on
// |0>), then `depth` times [CNOT chain on (q, q+1), R_Z R_X R_Z per qubit].
// Parameters per qubit are listed in operator order (Z, X) for the first
// layer and (Z, X, Z) afterwards, so the rightmost angle is applied first.
struct ChemistryCircuitSpec {
  int n_qubits = 2;
  int depth = 1;
  std::vector<double> theta;
  double single_qubit_noise = 0.0;  // depolarizing after each single-qubit gate
  double two_qubit_noise = 0.0;     // depolarizing on both qubits after each CNOT

  static std::size_t parameter_count(int n_qubits, int depth) {
    return static_cast<std::size_t>(n_qubits) * static_cast<std::size_t>(3 * depth + 2);
  }
};

QuantumState chemistry_circuit(const ChemistryCircuitSpec& spec);

enum class SchwingerCircuitMode { analog, scaling };

struct SchwingerCircuitSpec {
  int n_sites = 8;
  int layers = 3;
  SchwingerCircuitMode mode = SchwingerCircuitMode::analog;
  double noise = 0.0;  // depolarizing probability after every layer, analog mode only
  double coupling = 1.0;
  double field = 10.0;
  double alpha = 1.0;
  int entangler_sign = +1;  // exp(sign * i t H_E)

  // Per layer: one entangler time (or O_N angle) plus N/2 independent Z angles.
  std::size_t parameter_count() const {
    return static_cast<std::size_t>(layers) * static_cast<std::size_t>(n_sites / 2 + 1);
  }
  void validate() const;
};

// |01...01> for m >= -0.7, |10...10> otherwise (site 1 is the leftmost bit).
Bits schwinger_initial_state(int n_sites, double mass);

// Expands N/2 independent angles into the tied layer phi_{N+1-j} = -phi_j.
std::vector<double> tie_rotation_angles(std::span<const double> independent, int n_sites);

// Reusable circuit; holds the entangler spectral decomposition.
class SchwingerAnsatz {
public:
  explicit SchwingerAnsatz(SchwingerCircuitSpec spec);

  const SchwingerCircuitSpec& spec() const { return spec_; }

  // `params` holds parameter_count() independent values.
  QuantumState prepare(std::span<const double> params, double mass) const;

  // Explicit per-layer times and full rotation layers; rejects layers that
  // violate phi_{N+1-j} = -phi_j.
  QuantumState prepare_full(std::span<const double> times, const std::vector<std::vector<double>>& rotations,
                            double mass) const;

private:
  SchwingerCircuitSpec spec_;
  std::optional<Entangler> entangler_;
};

QuantumState schwinger_circuit(const SchwingerCircuitSpec& spec, std::span<const double> params, double mass);

// O_N: exp(i theta (XX+YY)/2) on pairs (1,2),(3,4),..., then on (2,3),(4,5),...
void scaling_entangler(QuantumState& state, double theta);

// Qubit-wise commuting measurement bases, first-fit over the Hamiltonian's
// terms. Identity positions that stay free are measured in Z.
std::vector<PauliString> group_measurement_bases(const PauliHamiltonian& h);

struct EnergyEstimate {
  double value = 0.0;
  double standard_error = 0.0;
};

// Shot-based <H>: every term is assigned to the first basis it is diagonal
// in. Throws ValidationError when a term fits no basis.
EnergyEstimate estimate_energy(const QuantumState& state, const PauliHamiltonian& h, const std::vector<PauliString>& bases,
                               int shots_per_basis, Rng& rng);

struct SpsaConfig {
  double a0 = 0.1;
  double c0 = 0.1;
  double alpha = 0.602;
  double gamma = 0.101;
  double stability = 10.0;  // A
  int iterations = 200;
  bool calibrate = false;
  int calibration_probes = 25;
  double target_step = 0.1;

  void validate() const;
};

struct SpsaEvaluation {
  int iteration = 0;
  int evaluation = 0;
  double energy = 0.0;
  std::string parameter_hash;
};

struct SpsaResult {
  std::vector<double> theta;
  std::vector<SpsaEvaluation> trace;
  double a0 = 0.0;
};

using Objective = std::function<double(std::span<const double>)>;

// Thrown when the objective returns NaN; carries the evaluations so far.
class SpsaAborted : public NumericalError {
public:
  SpsaAborted(const std::string& what, std::vector<SpsaEvaluation> trace)
      : NumericalError(what), trace_(std::move(trace)) {}
  const std::vector<SpsaEvaluation>& trace() const { return trace_; }

private:
  std::vector<SpsaEvaluation> trace_;
};

// a_k = a0 / (k + 1 + A)^alpha, c_k = c0 / (k + 1)^gamma, Rademacher perturbations.
SpsaResult spsa_minimize(const Objective& objective, std::vector<double> theta0, const SpsaConfig& cfg, Rng& rng);

// Picks a0 so the first update has magnitude target_step, from the mean
// |g_hat| over n_probe two-sided probes. Falls back to 0.1 on a flat objective.
double spsa_calibrate(const Objective& objective, std::span<const double> theta0, const SpsaConfig& cfg, int n_probe,
                      double target_step, Rng& rng);

void write_spsa_trace_csv(const std::vector<SpsaEvaluation>& trace, const std::string& path);

}  // namespace nem
