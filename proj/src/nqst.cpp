#include "nem/nqst.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace nem {

namespace {

constexpr double kClampProbability = 1e-300;
const double kLogClamp = std::log(kClampProbability);

int basis_weight(const std::string& basis) {
  int k = 0;
  for (char c : basis) k += c != 'Z';
  return k;
}

}  // namespace

void MeasurementDataset::validate() const {
  if (n_qubits < 1) throw ValidationError("dataset qubit count must be positive");
  for (const auto& r : records) {
    if (static_cast<int>(r.basis.size()) != n_qubits) throw ValidationError("basis " + r.basis + " has the wrong length");
    for (char c : r.basis)
      if (c != 'X' && c != 'Y' && c != 'Z') throw ValidationError("basis " + r.basis + " may only contain X, Y, Z");
    if (basis_weight(r.basis) > max_basis_weight)
      throw ValidationError("basis " + r.basis + " has more than " + std::to_string(max_basis_weight) + " non-Z positions");
    if (r.count < 1) throw ValidationError("record multiplicities must be positive");
    if (n_qubits < 64 && (r.outcome >> n_qubits) != 0) throw ValidationError("outcome has bits beyond the qubit count");
  }
}

long MeasurementDataset::total_shots() const {
  long total = 0;
  for (const auto& r : records) total += r.count;
  return total;
}

std::size_t MeasurementDataset::basis_count() const {
  std::vector<std::string> seen;
  for (const auto& r : records)
    if (std::find(seen.begin(), seen.end(), r.basis) == seen.end()) seen.push_back(r.basis);
  return seen.size();
}

std::vector<std::string> tomography_bases(BasisFamily family, int n) {
  if (n < 1) throw ValidationError("qubit count must be positive");
  const std::string all_z(static_cast<std::size_t>(n), 'Z');
  std::vector<std::string> out{all_z};
  if (family == BasisFamily::schwinger) {
    for (char p : {'X', 'Y'})
      for (int q = 0; q + 1 < n; ++q) {
        std::string b = all_z;
        b[static_cast<std::size_t>(q)] = b[static_cast<std::size_t>(q + 1)] = p;
        out.push_back(b);
      }
  } else {
    for (int q = 0; q < n; ++q) {
      std::string b = all_z;
      b[static_cast<std::size_t>(q)] = 'X';
      out.push_back(b);
    }
    for (int q = 0; q < n; ++q)
      for (int r = q + 1; r < n; ++r) {
        std::string b = all_z;
        b[static_cast<std::size_t>(q)] = b[static_cast<std::size_t>(r)] = 'X';
        out.push_back(b);
      }
  }
  return out;
}

MeasurementDataset make_dataset(const QuantumState& state, BasisFamily family, int shots_per_basis, Rng& rng) {
  MeasurementDataset data;
  data.n_qubits = state.n_qubits();
  data.seed = rng.seed();
  data.source = family == BasisFamily::schwinger ? "schwinger" : "chemistry";
  for (const auto& basis : tomography_bases(family, data.n_qubits)) {
    std::map<Bits, int> counts;
    for (Bits s : sample_in_basis(state, PauliString::parse(basis), shots_per_basis, rng)) ++counts[s];
    for (const auto& [s, c] : counts) data.records.push_back({basis, s, c});
  }
  return data;
}

void save_dataset(const MeasurementDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write dataset " + path.string());
  out << "qubits " << data.n_qubits << '\n';
  if (!data.source.empty()) out << "# source " << data.source << " seed " << data.seed << '\n';
  for (const auto& r : data.records) out << r.basis << ' ' << bits_to_string(r.outcome, data.n_qubits) << ' ' << r.count << '\n';
}

MeasurementDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset " + path.string());
  MeasurementDataset data;
  data.n_qubits = -1;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = raw.substr(0, raw.find('#'));
    std::istringstream fields(line);
    std::string first;
    if (!(fields >> first)) continue;
    if (data.n_qubits < 0) {
      if (first != "qubits" || !(fields >> data.n_qubits) || data.n_qubits < 1)
        throw ParseError("expected header 'qubits <N>'", line_no);
      continue;
    }
    MeasurementRecord r;
    std::string bits;
    r.basis = first;
    if (!(fields >> bits >> r.count)) throw ParseError("expected '<basis> <bitstring> <count>'", line_no);
    if (static_cast<int>(bits.size()) != data.n_qubits) throw ParseError("bitstring has the wrong length", line_no);
    try {
      r.outcome = bits_from_string(bits);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line_no);
    }
    data.records.push_back(r);
  }
  if (data.n_qubits < 0) throw ParseError("missing 'qubits <N>' header", line_no);
  try {
    data.validate();
  } catch (const ValidationError& e) {
    throw ParseError(e.what(), line_no);
  }
  return data;
}

BasisExpansion expand_basis_state(const std::string& basis, Bits s, int max_weight) {
  std::vector<int> free_qubits;
  std::vector<char> kinds;
  for (std::size_t q = 0; q < basis.size(); ++q) {
    const char c = basis[q];
    if (c == 'Z') continue;
    if (c != 'X' && c != 'Y') throw ValidationError("basis " + basis + " may only contain X, Y, Z");
    free_qubits.push_back(static_cast<int>(q));
    kinds.push_back(c);
  }
  const int k = static_cast<int>(free_qubits.size());
  if (k > max_weight)
    throw CapabilityError("basis " + basis + " has " + std::to_string(k) + " non-Z positions; the limit is " +
                          std::to_string(max_weight));
  BasisExpansion out;
  const double norm = std::pow(std::numbers::sqrt2, -k);
  Bits fixed = s;
  for (int q : free_qubits) fixed &= ~(Bits{1} << q);
  for (int combo = 0; combo < (1 << k); ++combo) {
    Bits t = fixed;
    cplx overlap = norm;
    for (int i = 0; i < k; ++i) {
      const int q = free_qubits[static_cast<std::size_t>(i)];
      const int ti = (combo >> i) & 1;
      const int si = bit(s, q);
      if (ti) t |= Bits{1} << q;
      // X: (-1)^{s t};  Y: (-i)^t (-1)^{s t}
      if (si && ti) overlap = -overlap;
      if (kinds[static_cast<std::size_t>(i)] == 'Y' && ti) overlap *= cplx(0.0, -1.0);
    }
    out.states.push_back(t);
    out.overlaps.push_back(overlap);
  }
  return out;
}

cplx basis_amplitude(const NqsParameters& params, Bits s, const std::string& basis, int max_weight) {
  if (static_cast<int>(basis.size()) != params.config.n_qubits) throw DimensionError("basis length does not match NQS");
  const auto expansion = expand_basis_state(basis, s, max_weight);
  TransformerNqs nqs(params);
  cplx total = 0.0;
  for (std::size_t i = 0; i < expansion.states.size(); ++i)
    total += expansion.overlaps[i] * std::exp(nqs.forward(expansion.states[i]).log_amplitude());
  return total;
}

NqstLoss nqst_loss(const NqsParameters& params, std::span<const MeasurementRecord> batch, bool with_gradient,
                   int max_weight) {
  if (batch.empty()) throw ValidationError("NQST loss needs a nonempty batch");
  const int n = params.config.n_qubits;
  std::vector<BasisExpansion> expansions;
  expansions.reserve(batch.size());
  std::map<Bits, std::size_t> index;
  for (const auto& r : batch) {
    if (static_cast<int>(r.basis.size()) != n) throw DimensionError("basis length does not match NQS");
    expansions.push_back(expand_basis_state(r.basis, r.outcome, max_weight));
    for (Bits t : expansions.back().states) index.emplace(t, 0);
  }
  TransformerNqs nqs(params);
  std::vector<Bits> unique;
  std::vector<AmplitudeOutput> outputs;
  unique.reserve(index.size());
  outputs.reserve(index.size());
  for (auto& [t, i] : index) {
    i = unique.size();
    unique.push_back(t);
    outputs.push_back(nqs.forward(t));
  }

  double weight_total = 0.0;
  for (const auto& r : batch) weight_total += r.count;

  NqstLoss result;
  std::vector<OutputSeed> seeds;
  if (with_gradient) {
    seeds.resize(unique.size());
    for (std::size_t i = 0; i < unique.size(); ++i) seeds[i].s = unique[i];
  }
  std::vector<cplx> terms;
  double loss = 0.0;
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const auto& ex = expansions[r];
    double max_log = -std::numeric_limits<double>::infinity();
    for (Bits t : ex.states) max_log = std::max(max_log, 0.5 * outputs[index[t]].log_prob);
    terms.assign(ex.states.size(), 0.0);
    cplx sum = 0.0;
    for (std::size_t j = 0; j < ex.states.size(); ++j) {
      const auto& o = outputs[index[ex.states[j]]];
      terms[j] = ex.overlaps[j] * std::exp(cplx(0.5 * o.log_prob - max_log, o.phase));
      sum += terms[j];
    }
    const double log_p = 2.0 * max_log + std::log(std::norm(sum));
    const double w = batch[r].count / weight_total;
    if (!(log_p >= kLogClamp)) {
      ++result.clamp_hits;
      loss -= w * kLogClamp;
      continue;
    }
    loss -= w * log_p;
    if (!with_gradient) continue;
    // d ln|A|^2 = sum_t Re(w_t) d log_prob_t - 2 Im(w_t) d phase_t with w_t = c_t psi_t / A.
    for (std::size_t j = 0; j < ex.states.size(); ++j) {
      const cplx wt = terms[j] / sum;
      auto& seed = seeds[index[ex.states[j]]];
      seed.d_log_prob -= w * wt.real();
      seed.d_phase += w * 2.0 * wt.imag();
    }
  }
  if (result.clamp_hits == static_cast<int>(batch.size()))
    throw NumericalError("degenerate model: every record in the batch has vanishing likelihood");
  result.loss = loss;
  if (with_gradient) {
    result.gradient.assign(params.size(), 0.0);
    nqs.backward(seeds, result.gradient);
  }
  return result;
}

namespace {

std::vector<MeasurementRecord> aggregate(const MeasurementDataset& data, std::span<const std::size_t> shot_records) {
  std::map<std::size_t, int> counts;
  for (std::size_t r : shot_records) ++counts[r];
  std::vector<MeasurementRecord> out;
  out.reserve(counts.size());
  for (const auto& [r, c] : counts) out.push_back({data.records[r].basis, data.records[r].outcome, c});
  return out;
}

}  // namespace

NqstResult train_nqst(const NqsParameters& init, const MeasurementDataset& data, const NqstConfig& cfg) {
  data.validate();
  if (init.config.n_qubits != data.n_qubits) throw DimensionError("dataset and NQS have different qubit counts");
  if (cfg.epochs < 0 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0))
    throw ValidationError("invalid NQST training configuration");
  if (!(cfg.validation_fraction >= 0.0 && cfg.validation_fraction < 1.0))
    throw ValidationError("validation fraction must lie in [0, 1)");

  Rng rng(cfg.seed);
  std::vector<std::size_t> shots;
  for (std::size_t r = 0; r < data.records.size(); ++r)
    for (int c = 0; c < data.records[r].count; ++c) shots.push_back(r);
  if (shots.empty()) throw ValidationError("dataset has no shots");
  std::shuffle(shots.begin(), shots.end(), rng.engine());
  const auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(shots.size())));
  std::vector<std::size_t> validation(shots.begin(), shots.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> training(shots.begin() + static_cast<std::ptrdiff_t>(n_val), shots.end());
  const auto validation_records = aggregate(data, validation);
  const auto training_records = aggregate(data, training);
  // Model selection falls back to the training loss when there is no validation split.
  const auto& selection_records = validation_records.empty() ? training_records : validation_records;

  NqstResult result;
  result.params = init;
  NqsParameters params = init;
  AdamState adam;

  const double initial_train = nqst_loss(params, training_records).loss;
  result.best_validation_loss = nqst_loss(params, selection_records).loss;
  result.trace.push_back({0, initial_train, result.best_validation_loss});

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(training.begin(), training.end(), rng.engine());
    double train_loss = 0.0;
    for (std::size_t start = 0; start < training.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(training.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const auto batch = aggregate(data, std::span(training).subspan(start, stop - start));
      const auto step = nqst_loss(params, batch, true);
      if (!std::isfinite(step.loss)) throw NumericalError("NQST loss diverged at epoch " + std::to_string(epoch));
      train_loss += step.loss * static_cast<double>(stop - start);
      adam_step(adam, params.values, step.gradient, cfg.learning_rate);
    }
    train_loss /= static_cast<double>(training.size());
    const double val_loss = nqst_loss(params, selection_records).loss;
    if (!std::isfinite(val_loss)) throw NumericalError("NQST validation loss diverged at epoch " + std::to_string(epoch));
    result.trace.push_back({epoch, train_loss, val_loss});
    if (val_loss < result.best_validation_loss) {
      result.best_validation_loss = val_loss;
      result.best_epoch = epoch;
      result.params = params;
    }
  }
  return result;
}

}  // namespace nem
