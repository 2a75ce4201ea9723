#include "nem/vmc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>

#include "nem/simulator.hpp"

namespace nem {

namespace {

const double kLogDenominatorFloor = std::log(1e-300);
const double kLogRegularizerFloor = std::log(1e-8);

}  // namespace

LookupWavefunction::LookupWavefunction(StateVector psi)
    : psi_(std::move(psi)), n_(qubit_count_for_dimension(psi_.size())) {
  const double norm = psi_.norm();
  if (!(norm > 0.0)) throw ValidationError("lookup wavefunction must be nonzero");
  psi_ /= norm;
  probabilities_ = psi_.cwiseAbs2();
}

cplx LookupWavefunction::log_amplitude(Bits s) {
  const cplx a = psi_[static_cast<Eigen::Index>(s)];
  if (a == cplx(0.0)) return {-std::numeric_limits<double>::infinity(), 0.0};
  return std::log(a);
}

std::vector<Bits> LookupWavefunction::sample(int count, Rng& rng) {
  return sample_distribution(probabilities_, count, rng);
}

cplx NqsWavefunction::log_amplitude(Bits s) {
  auto it = cache_.find(s);
  if (it != cache_.end()) return it->second;
  const cplx v = nqs_.forward(s).log_amplitude();
  cache_.emplace(s, v);
  return v;
}

LocalHamiltonian::LocalHamiltonian(const PauliHamiltonian& h) : n_(h.n_qubits()), offset_(h.identity_offset()) {
  std::map<Bits, std::size_t> index;
  for (const auto& term : h.compiled()) {
    auto [it, inserted] = index.emplace(term.x_mask, groups_.size());
    if (inserted) groups_.push_back({term.x_mask, {}});
    groups_[it->second].terms.push_back({term.z_mask, term.factor});
  }
}

LocalEnergy local_energy(Wavefunction& psi, const LocalHamiltonian& h, Bits s) {
  if (psi.n_qubits() != h.n_qubits()) throw DimensionError("wavefunction and Hamiltonian qubit counts differ");
  const cplx log_s = psi.log_amplitude(s);
  if (!(log_s.real() >= kLogDenominatorFloor)) return {0.0, true};
  cplx total = h.offset();
  for (const auto& g : h.groups()) {
    const Bits t = s ^ g.x_mask;
    // <s|P|t> = factor (-1)^{|t & z|} since P|t> = factor (-1)^{|t & z|} |t ^ x>.
    cplx element = 0.0;
    for (const auto& term : g.terms) element += parity(t & term.z_mask) ? -term.factor : term.factor;
    if (element == cplx(0.0)) continue;
    if (g.x_mask == 0) {
      total += element;
      continue;
    }
    const cplx log_t = psi.log_amplitude(t);
    if (std::isinf(log_t.real()) && log_t.real() < 0) continue;
    total += element * std::exp(log_t - log_s);
  }
  return {total, false};
}

LocalEnergy local_energy(const NqsParameters& params, const PauliHamiltonian& h, Bits s) {
  NqsWavefunction psi(params);
  return local_energy(psi, LocalHamiltonian(h), s);
}

LocalEnergyStatistics local_energy_statistics(Wavefunction& psi, const LocalHamiltonian& h, std::span<const Bits> samples) {
  LocalEnergyStatistics out;
  std::vector<double> values;
  values.reserve(samples.size());
  for (Bits s : samples) {
    const auto e = local_energy(psi, h, s);
    if (e.clamped) {
      ++out.clamp_count;
      continue;
    }
    values.push_back(e.value.real());
  }
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  for (double v : values) out.variance += (v - out.mean) * (v - out.mean);
  out.variance /= static_cast<double>(values.size());
  return out;
}

namespace {

struct WeightedSample {
  Bits s;
  double weight;
};

// Shared estimator over unique samples with weights summing to one.
VmcStep weighted_gradient(const NqsParameters& params, const LocalHamiltonian& h,
                          const std::vector<WeightedSample>& samples, double eps_reg) {
  if (eps_reg < 0.0) throw ValidationError("regularization strength must be non-negative");
  NqsWavefunction psi(params);
  VmcStep step;
  step.unique_samples = static_cast<int>(samples.size());

  std::vector<LocalEnergy> loc(samples.size());
  double kept_weight = 0.0;
  cplx energy = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    loc[i] = local_energy(psi, h, samples[i].s);
    if (loc[i].clamped) {
      ++step.clamp_count;
      continue;
    }
    kept_weight += samples[i].weight;
    energy += samples[i].weight * loc[i].value;
  }
  if (!(kept_weight > 0.0)) throw NumericalError("every VMC sample has a vanishing amplitude");
  energy /= kept_weight;
  step.energy = energy.real();
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (!loc[i].clamped) step.variance += samples[i].weight * std::norm(loc[i].value - energy) / kept_weight;

  std::vector<OutputSeed> seeds;
  seeds.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (loc[i].clamped) continue;
    const double w = samples[i].weight / kept_weight;
    const cplx centered = loc[i].value - energy;
    OutputSeed seed{samples[i].s, w * centered.real(), w * 2.0 * centered.imag()};
    if (eps_reg > 0.0) {
      const double log_abs = psi.log_amplitude(samples[i].s).real();
      if (log_abs < kLogRegularizerFloor) {
        ++step.regularizer_excluded;
      } else {
        // |psi|^-1 d Re ln psi = exp(-log_abs) * d log_prob / 2
        seed.d_log_prob -= eps_reg * w * 0.5 * std::exp(-log_abs);
      }
    }
    seeds.push_back(seed);
  }
  step.gradient.assign(params.size(), 0.0);
  psi.model().backward(seeds, step.gradient);
  return step;
}

}  // namespace

VmcStep vmc_gradient(const NqsParameters& params, const LocalHamiltonian& h, int batch_size, double eps_reg, Rng& rng) {
  if (batch_size < 1) throw ValidationError("VMC batch size must be positive");
  if (params.config.n_qubits != h.n_qubits()) throw DimensionError("NQS and Hamiltonian qubit counts differ");
  std::map<Bits, int> counts;
  {
    TransformerNqs sampler(params);
    for (Bits s : sampler.sample(batch_size, rng)) ++counts[s];
  }
  std::vector<WeightedSample> samples;
  samples.reserve(counts.size());
  for (const auto& [s, c] : counts) samples.push_back({s, static_cast<double>(c) / batch_size});
  return weighted_gradient(params, h, samples, eps_reg);
}

VmcStep vmc_gradient_exhaustive(const NqsParameters& params, const LocalHamiltonian& h, double eps_reg) {
  const int n = params.config.n_qubits;
  if (n > 16) throw CapabilityError("exhaustive VMC is limited to 16 qubits");
  if (n != h.n_qubits()) throw DimensionError("NQS and Hamiltonian qubit counts differ");
  TransformerNqs nqs(params);
  std::vector<WeightedSample> samples;
  for (Bits s = 0; s < (Bits{1} << n); ++s) {
    const double p = std::exp(nqs.forward(s).log_prob);
    if (p > 0.0) samples.push_back({s, p});
  }
  return weighted_gradient(params, h, samples, eps_reg);
}

double LearningRateSchedule::at(int iteration) const {
  double lr = initial;
  for (int m : milestones)
    if (iteration >= m) lr *= factor;
  return lr;
}

double RegularizerSchedule::at(int iteration) const {
  if (iteration >= duration || duration <= 0) return 0.0;
  if (kind == Kind::step) return initial;
  return initial * (1.0 - static_cast<double>(iteration) / duration);
}

void VmcConfig::validate() const {
  if (iterations < 0) throw ValidationError("VMC iterations must be non-negative");
  if (batch_size < 2) throw ValidationError("VMC batch size must be at least 2");
  if (!(learning_rate.initial > 0.0) || !(learning_rate.factor > 0.0))
    throw ValidationError("VMC learning rate must be positive");
  if (!(regularizer.initial >= 0.0)) throw ValidationError("regularization strength must be non-negative");
  if (regularizer.duration < 0) throw ValidationError("regularizer duration must be non-negative");
}

VmcResult train_vmc(const NqsParameters& init, const PauliHamiltonian& h, const VmcConfig& cfg) {
  cfg.validate();
  if (init.config.n_qubits != h.n_qubits()) throw DimensionError("NQS and Hamiltonian qubit counts differ");
  const LocalHamiltonian local(h);
  Rng rng(cfg.seed);
  VmcResult result{init, {}};
  AdamState adam;
  for (int it = 0; it < cfg.iterations; ++it) {
    const double eps = cfg.regularizer.at(it);
    const double lr = cfg.learning_rate.at(it);
    VmcStep step;
    try {
      step = vmc_gradient(result.params, local, cfg.batch_size, eps, rng);
    } catch (const NumericalError& e) {
      throw VmcAborted(std::string("VMC aborted at iteration ") + std::to_string(it) + ": " + e.what(), result.trace);
    }
    result.trace.push_back({it, step.energy, step.variance, eps, lr, step.clamp_count});
    const bool finite = std::isfinite(step.energy) &&
                        std::all_of(step.gradient.begin(), step.gradient.end(), [](double g) { return std::isfinite(g); });
    if (!finite) throw VmcAborted("VMC produced a non-finite energy or gradient at iteration " + std::to_string(it), result.trace);
    adam_step(adam, result.params.values, step.gradient, lr);
  }
  return result;
}

void write_vmc_trace_csv(const std::vector<VmcIteration>& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "iteration,energy,variance,eps_reg,learning_rate,clamp_count\n" << std::setprecision(17);
  for (const auto& r : trace)
    out << r.iteration << ',' << r.energy << ',' << r.variance << ',' << r.eps_reg << ',' << r.learning_rate << ','
        << r.clamp_count << '\n';
}

}  // namespace nem
