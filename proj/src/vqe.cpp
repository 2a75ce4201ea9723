#include "nem/vqe.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include "nem/hash.hpp"

namespace nem {

namespace {

void depolarize(QuantumState& state, int q, double lambda) {
  if (lambda > 0.0) apply_depolarizing(state, q, lambda);
}

void depolarize_all(QuantumState& state, double lambda) {
  if (lambda <= 0.0) return;
  for (int q = 0; q < state.n_qubits(); ++q) apply_depolarizing(state, q, lambda);
}

// prod_q R_Z(angles[q]) as one diagonal pass.
void apply_z_layer(QuantumState& state, std::span<const double> angles) {
  const int n = state.n_qubits();
  const Eigen::Index dim = state.dimension();
  Eigen::VectorXcd d(dim);
  for (Eigen::Index s = 0; s < dim; ++s) {
    double phase = 0.0;
    for (int q = 0; q < n; ++q) phase += bit(static_cast<Bits>(s), q) ? 0.5 * angles[static_cast<std::size_t>(q)]
                                                                       : -0.5 * angles[static_cast<std::size_t>(q)];
    d[s] = std::polar(1.0, phase);
  }
  if (state.is_pure()) {
    state.vector().array() *= d.array();
    return;
  }
  DensityMatrix& rho = state.density();
  for (Eigen::Index c = 0; c < dim; ++c) {
    const cplx dc = std::conj(d[c]);
    for (Eigen::Index r = 0; r < dim; ++r) rho(r, c) *= d[r] * dc;
  }
}

bool diagonal_in(const PauliString& term, const PauliString& basis) {
  for (int q = 0; q < term.size(); ++q) {
    const Pauli t = term.ops[static_cast<std::size_t>(q)];
    if (t != Pauli::I && t != basis.ops[static_cast<std::size_t>(q)]) return false;
  }
  return true;
}

}  // namespace

QuantumState chemistry_circuit(const ChemistryCircuitSpec& spec) {
  const int n = spec.n_qubits;
  if (n < 1) throw ValidationError("chemistry circuit needs at least one qubit");
  if (spec.depth < 0) throw ValidationError("circuit depth must be non-negative");
  const std::size_t expected = ChemistryCircuitSpec::parameter_count(n, spec.depth);
  if (spec.theta.size() != expected)
    throw ValidationError("chemistry circuit expects N(3d+2) = " + std::to_string(expected) + " parameters, got " +
                          std::to_string(spec.theta.size()));
  const bool noisy = spec.single_qubit_noise > 0.0 || spec.two_qubit_noise > 0.0;
  QuantumState state = QuantumState::basis_state(n, 0);
  if (noisy) state = state.to_mixed();

  auto rotate = [&](int q, GateOp g) {
    apply_gate(state, g);
    if (noisy) depolarize(state, q, spec.single_qubit_noise);
  };

  std::size_t k = 0;
  for (int q = 0; q < n; ++q) {
    const double z = spec.theta[k++], x = spec.theta[k++];
    rotate(q, GateOp::rx(q, x));
    rotate(q, GateOp::rz(q, z));
  }
  for (int layer = 0; layer < spec.depth; ++layer) {
    for (int q = 0; q + 1 < n; ++q) {
      apply_gate(state, GateOp::cnot(q, q + 1));
      if (noisy) {
        depolarize(state, q, spec.two_qubit_noise);
        depolarize(state, q + 1, spec.two_qubit_noise);
      }
    }
    for (int q = 0; q < n; ++q) {
      const double z1 = spec.theta[k++], x = spec.theta[k++], z3 = spec.theta[k++];
      rotate(q, GateOp::rz(q, z3));
      rotate(q, GateOp::rx(q, x));
      rotate(q, GateOp::rz(q, z1));
    }
  }
  return state;
}

void SchwingerCircuitSpec::validate() const {
  if (n_sites < 2 || n_sites % 2 != 0) throw ValidationError("Schwinger circuit needs an even number of sites");
  if (layers < 1) throw ValidationError("Schwinger circuit needs at least one layer");
  if (!(noise >= 0.0 && noise <= 1.0)) throw ValidationError("noise must lie in [0, 1]");
  if (mode == SchwingerCircuitMode::analog && n_sites > kMaxMixedQubits)
    throw CapabilityError("analog entangler limited to " + std::to_string(kMaxMixedQubits) +
                          " sites; use the scaling circuit");
  if (mode == SchwingerCircuitMode::scaling && noise > 0.0)
    throw ValidationError("the scaling circuit is simulated without noise");
  if (mode == SchwingerCircuitMode::scaling && n_sites > kMaxPureQubits)
    throw CapabilityError("statevector simulation limited to 16 sites");
}

Bits schwinger_initial_state(int n_sites, double mass) {
  // Even sites (odd qubit indices) set for |01...01>.
  Bits s = 0;
  const int first = mass >= -0.7 ? 1 : 0;
  for (int q = first; q < n_sites; q += 2) s |= Bits{1} << q;
  return s;
}

std::vector<double> tie_rotation_angles(std::span<const double> independent, int n_sites) {
  if (static_cast<int>(independent.size()) != n_sites / 2) throw DimensionError("expected N/2 independent angles");
  std::vector<double> full(static_cast<std::size_t>(n_sites));
  for (int j = 1; j <= n_sites / 2; ++j) {
    full[static_cast<std::size_t>(j - 1)] = independent[static_cast<std::size_t>(j - 1)];
    full[static_cast<std::size_t>(n_sites - j)] = -independent[static_cast<std::size_t>(j - 1)];
  }
  return full;
}

SchwingerAnsatz::SchwingerAnsatz(SchwingerCircuitSpec spec) : spec_(spec) {
  spec_.validate();
  if (spec_.mode == SchwingerCircuitMode::analog)
    entangler_.emplace(spec_.n_sites, spec_.coupling, spec_.field, spec_.alpha, spec_.entangler_sign);
}

QuantumState SchwingerAnsatz::prepare(std::span<const double> params, double mass) const {
  if (params.size() != spec_.parameter_count())
    throw ValidationError("Schwinger circuit expects " + std::to_string(spec_.parameter_count()) + " parameters, got " +
                          std::to_string(params.size()));
  const std::size_t per_layer = static_cast<std::size_t>(spec_.n_sites / 2 + 1);
  std::vector<double> times;
  std::vector<std::vector<double>> rotations;
  for (int l = 0; l < spec_.layers; ++l) {
    const auto layer = params.subspan(static_cast<std::size_t>(l) * per_layer, per_layer);
    times.push_back(layer[0]);
    rotations.push_back(tie_rotation_angles(layer.subspan(1), spec_.n_sites));
  }
  return prepare_full(times, rotations, mass);
}

QuantumState SchwingerAnsatz::prepare_full(std::span<const double> times, const std::vector<std::vector<double>>& rotations,
                                           double mass) const {
  const int n = spec_.n_sites;
  if (static_cast<int>(times.size()) != spec_.layers || static_cast<int>(rotations.size()) != spec_.layers)
    throw DimensionError("expected one time and one rotation layer per circuit layer");
  for (const auto& layer : rotations) {
    if (static_cast<int>(layer.size()) != n) throw DimensionError("rotation layer must have one angle per site");
    for (int j = 1; j <= n / 2; ++j)
      if (std::abs(layer[static_cast<std::size_t>(j - 1)] + layer[static_cast<std::size_t>(n - j)]) > 1e-12)
        throw ValidationError("rotation angles must satisfy phi_{N+1-j} = -phi_j");
  }
  const bool noisy = spec_.noise > 0.0;
  QuantumState state = QuantumState::basis_state(n, schwinger_initial_state(n, mass));
  if (noisy) state = state.to_mixed();
  for (int l = 0; l < spec_.layers; ++l) {
    if (spec_.mode == SchwingerCircuitMode::analog)
      entangler_->evolve(state, times[static_cast<std::size_t>(l)]);
    else
      scaling_entangler(state, times[static_cast<std::size_t>(l)]);
    depolarize_all(state, spec_.noise);
    apply_z_layer(state, rotations[static_cast<std::size_t>(l)]);
    depolarize_all(state, spec_.noise);
  }
  return state;
}

QuantumState schwinger_circuit(const SchwingerCircuitSpec& spec, std::span<const double> params, double mass) {
  return SchwingerAnsatz(spec).prepare(params, mass);
}

void scaling_entangler(QuantumState& state, double theta) {
  if (!state.is_pure()) throw ValidationError("the scaling entangler acts on statevectors");
  if (theta == 0.0) return;
  const int n = state.n_qubits();
  for (int q = 0; q + 1 < n; q += 2) apply_gate(state, GateOp::xxyy(q, q + 1, theta));
  for (int q = 1; q + 1 < n; q += 2) apply_gate(state, GateOp::xxyy(q, q + 1, theta));
}

std::vector<PauliString> group_measurement_bases(const PauliHamiltonian& h) {
  std::vector<PauliString> groups;
  for (const auto& term : h.terms()) {
    bool placed = false;
    for (auto& g : groups) {
      bool compatible = true;
      for (int q = 0; q < term.size() && compatible; ++q) {
        const Pauli a = g.ops[static_cast<std::size_t>(q)], b = term.ops[static_cast<std::size_t>(q)];
        compatible = a == Pauli::I || b == Pauli::I || a == b;
      }
      if (!compatible) continue;
      for (int q = 0; q < term.size(); ++q)
        if (term.ops[static_cast<std::size_t>(q)] != Pauli::I) g.ops[static_cast<std::size_t>(q)] = term.ops[static_cast<std::size_t>(q)];
      placed = true;
      break;
    }
    if (!placed) groups.emplace_back(term.ops, 1.0);
  }
  for (auto& g : groups)
    for (auto& op : g.ops)
      if (op == Pauli::I) op = Pauli::Z;
  return groups;
}

EnergyEstimate estimate_energy(const QuantumState& state, const PauliHamiltonian& h, const std::vector<PauliString>& bases,
                               int shots_per_basis, Rng& rng) {
  if (shots_per_basis < 1) throw ValidationError("shots per basis must be at least 1");
  // Each basis gets the terms that are diagonal in it and not yet claimed.
  std::vector<std::vector<std::pair<Bits, double>>> assigned(bases.size());
  for (const auto& term : h.terms()) {
    bool found = false;
    for (std::size_t b = 0; b < bases.size() && !found; ++b) {
      if (bases[b].size() != h.n_qubits()) throw DimensionError("measurement basis has the wrong length");
      if (diagonal_in(term, bases[b])) {
        Bits support = 0;
        for (int q = 0; q < term.size(); ++q)
          if (term.ops[static_cast<std::size_t>(q)] != Pauli::I) support |= Bits{1} << q;
        assigned[b].emplace_back(support, term.coefficient.real());
        found = true;
      }
    }
    if (!found) throw ValidationError("grouping failure: term " + term.label() + " is not diagonal in any measurement basis");
  }

  EnergyEstimate out{h.identity_offset(), 0.0};
  double variance = 0.0;
  const std::size_t dim = std::size_t{1} << h.n_qubits();
  std::vector<int> counts(dim);
  for (std::size_t b = 0; b < bases.size(); ++b) {
    if (assigned[b].empty()) continue;
    std::fill(counts.begin(), counts.end(), 0);
    for (Bits s : sample_in_basis(state, bases[b], shots_per_basis, rng)) ++counts[s];
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t s = 0; s < dim; ++s) {
      if (counts[s] == 0) continue;
      double x = 0.0;
      for (const auto& [support, c] : assigned[b]) x += parity(static_cast<Bits>(s) & support) ? -c : c;
      sum += counts[s] * x;
      sum_sq += counts[s] * x * x;
    }
    const double mean = sum / shots_per_basis;
    out.value += mean;
    if (shots_per_basis > 1) {
      const double var = std::max(0.0, (sum_sq - shots_per_basis * mean * mean) / (shots_per_basis - 1));
      variance += var / shots_per_basis;
    }
  }
  out.standard_error = std::sqrt(variance);
  return out;
}

void SpsaConfig::validate() const {
  if (!(a0 > 0.0) || !(c0 > 0.0) || stability < 0.0) throw ValidationError("SPSA gains must be positive");
  if (!(alpha > 0.0 && alpha <= 1.0) || !(gamma > 0.0 && gamma <= 1.0))
    throw ValidationError("SPSA exponents must lie in (0, 1]");
  if (iterations < 0) throw ValidationError("SPSA iterations must be non-negative");
}

SpsaResult spsa_minimize(const Objective& objective, std::vector<double> theta, const SpsaConfig& cfg, Rng& rng) {
  cfg.validate();
  SpsaResult result;
  result.a0 = cfg.a0;
  std::vector<double> delta(theta.size()), plus(theta.size()), minus(theta.size());
  int evaluation = 0;
  auto evaluate = [&](int iteration, std::span<const double> point) {
    const double value = objective(point);
    result.trace.push_back({iteration, evaluation++, value, short_hash(point)});
    if (std::isnan(value))
      throw SpsaAborted("objective returned NaN at iteration " + std::to_string(iteration), result.trace);
    return value;
  };
  for (int k = 0; k < cfg.iterations; ++k) {
    const double ak = cfg.a0 / std::pow(k + 1 + cfg.stability, cfg.alpha);
    const double ck = cfg.c0 / std::pow(k + 1, cfg.gamma);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      delta[i] = rng.rademacher();
      plus[i] = theta[i] + ck * delta[i];
      minus[i] = theta[i] - ck * delta[i];
    }
    const double diff = evaluate(k, plus) - evaluate(k, minus);
    // 1/Delta_i = Delta_i for Rademacher perturbations.
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= ak * diff / (2.0 * ck) * delta[i];
  }
  result.theta = std::move(theta);
  return result;
}

double spsa_calibrate(const Objective& objective, std::span<const double> theta0, const SpsaConfig& cfg, int n_probe,
                      double target_step, Rng& rng) {
  if (n_probe < 2) throw ValidationError("calibration needs at least two probes");
  std::vector<double> plus(theta0.size()), minus(theta0.size());
  double magnitude = 0.0;
  for (int probe = 0; probe < n_probe; ++probe) {
    for (std::size_t i = 0; i < theta0.size(); ++i) {
      const int d = rng.rademacher();
      plus[i] = theta0[i] + cfg.c0 * d;
      minus[i] = theta0[i] - cfg.c0 * d;
    }
    magnitude += std::abs(objective(plus) - objective(minus)) / (2.0 * cfg.c0);
  }
  magnitude /= n_probe;
  if (!(magnitude > 0.0) || !std::isfinite(magnitude)) {
    std::cerr << "warning: SPSA calibration saw a zero gradient estimate; using a0 = 0.1\n";
    return 0.1;
  }
  return target_step * std::pow(1.0 + cfg.stability, cfg.alpha) / magnitude;
}

void write_spsa_trace_csv(const std::vector<SpsaEvaluation>& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "iteration,evaluation,energy,parameter_hash\n";
  out.precision(17);
  for (const auto& e : trace) out << e.iteration << ',' << e.evaluation << ',' << e.energy << ',' << e.parameter_hash << '\n';
}

}  // namespace nem
