#include "nem/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "nem/exact.hpp"
#include "nem/hash.hpp"

namespace nem {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kEnumerationLimit = 12;
constexpr int kMonteCarloSamples = 4096;

bool is_file_problem(const Json& problem) {
  return problem.is_object() && problem.value("type", std::string("schwinger")) == "hamiltonian-file";
}

Json schwinger_problem_defaults() {
  return {{"type", "schwinger"}, {"n_sites", 8},   {"mass", -0.7},         {"noise", 0.001},
          {"mode", "analog"},    {"layers", 3},    {"entangler_sign", 1}};
}

Json file_problem_defaults() {
  return {{"type", "hamiltonian-file"},
          {"path", ""},
          {"depth", 1},
          {"single_qubit_noise", 0.001},
          {"two_qubit_noise", 0.01}};
}

// Rejects keys of `user` that have no counterpart in `reference`.
void check_known_keys(const Json& user, const Json& reference, const std::string& prefix) {
  if (!user.is_object()) return;
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!reference.is_object() || !reference.contains(it.key())) throw ConfigError("unknown configuration key '" + key + "'");
    const Json& ref = reference.at(it.key());
    if (ref.is_object()) {
      if (!it->is_object()) throw ConfigError("configuration key '" + key + "' must be an object");
      check_known_keys(*it, ref, key);
    }
  }
}

template <class T>
T get(const Json& doc, const char* block, const char* key) {
  const Json& node = block ? doc.at(block).at(key) : doc.at(key);
  try {
    return node.get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(std::string("configuration key '") + (block ? std::string(block) + "." : "") + key +
                      "' has the wrong type");
  }
}

std::filesystem::path resolve_problem_path(const std::string& path) {
  if (path.empty()) throw ConfigError("problem.path is required for a hamiltonian-file problem");
  if (!std::filesystem::exists(path)) throw ConfigError("Hamiltonian file not found: " + path);
  return path;
}

int file_qubits(const std::string& path) {
  try {
    return load_hamiltonian(resolve_problem_path(path)).n_qubits();
  } catch (const ParseError& e) {
    throw ConfigError(std::string("cannot parse Hamiltonian file ") + path + ": " + e.what());
  }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// 4 C(k, 2) / (2 N (N - 1)) for a basis state with k occupied sites.
double order_parameter_of(Bits s, int n) {
  Bits odd = 0;
  for (int q = 0; q < n; q += 2) odd |= Bits{1} << q;
  const int k = std::popcount(~(s ^ odd) & ((Bits{1} << n) - 1));
  return 4.0 * (k * (k - 1) / 2) / (2.0 * n * (n - 1));
}

}  // namespace

int PipelineConfig::n_qubits() const { return nqs.n_qubits; }

Json default_config(const Json& problem, int n) {
  Json doc;
  const bool file = is_file_problem(problem);
  if (file) {
    doc["problem"] = file_problem_defaults();
    const bool small = n <= 2;
    doc["vqe"] = {{"iterations", 250}, {"shots", 1024}, {"a0", 0.1}, {"c0", 0.1}, {"alpha", 0.602},
                  {"gamma", 0.101},    {"stability", 0.0}, {"calibrate", true}, {"calibration_probes", 25},
                  {"target_step", 0.1}};
    doc["nqs"] = {{"layers", 2}, {"heads", 4}, {"model_dim", 8}, {"scale_attention", false}};
    doc["nqst"] = {{"shots_per_basis", small ? 300 : 500}, {"batch_size", 128}, {"learning_rate", 1e-2},
                   {"epochs", 100},                        {"validation_fraction", 0.1}};
    doc["vmc"] = {{"iterations", small ? 1000 : 1200},
                  {"batch_size", 256},
                  {"learning_rate", 1e-2},
                  {"lr_milestones", Json::array()},
                  {"lr_factor", 0.1},
                  {"regularizer", {{"kind", "step"}, {"initial", 0.05}, {"duration", 600}}}};
  } else {
    doc["problem"] = schwinger_problem_defaults();
    const bool large = n > 8;
    doc["vqe"] = {{"iterations", 200}, {"shots", large ? 1024 : 512}, {"a0", 0.1}, {"c0", 0.1}, {"alpha", 0.602},
                  {"gamma", 0.101},    {"stability", large ? 20.0 : 10.0}, {"calibrate", false},
                  {"calibration_probes", 25}, {"target_step", 0.1}};
    doc["nqs"] = {{"layers", 2}, {"heads", 4}, {"model_dim", large ? 12 : 8}, {"scale_attention", false}};
    doc["nqst"] = {{"shots_per_basis", 512}, {"batch_size", 512}, {"learning_rate", large ? 1e-3 : 1e-2},
                   {"epochs", large ? 30 : 50}, {"validation_fraction", 0.1}};
    if (large) {
      doc["vmc"] = {{"iterations", 3200},
                    {"batch_size", 1024},
                    {"learning_rate", 3e-3},
                    {"lr_milestones", {1600, 2400}},
                    {"lr_factor", 0.1},
                    {"regularizer", {{"kind", "linear"}, {"initial", 25.6 / std::ldexp(1.0, n)}, {"duration", 1000}}}};
    } else {
      doc["vmc"] = {{"iterations", 400},
                    {"batch_size", 512},
                    {"learning_rate", 1e-2},
                    {"lr_milestones", Json::array()},
                    {"lr_factor", 0.1},
                    {"regularizer", {{"kind", "step"}, {"initial", 0.1}, {"duration", 200}}}};
    }
  }
  // First three sites versus the rest.
  doc["metrics"] = {{"renyi_partition", std::max(1, std::min(3, n - 1))}};
  doc["seed"] = 0;
  return doc;
}

void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: " + assignment);
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("malformed override key: " + key);
    if (!node->is_object()) {
      if (!node->is_null()) throw ConfigError("override key " + key + " descends into a non-object");
      *node = Json::object();
    }
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

PipelineConfig make_config(const Json& user_in, const std::vector<std::string>& overrides) {
  Json user = user_in.is_null() ? Json::object() : user_in;
  if (!user.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& o : overrides) apply_override(user, o);

  std::string out;
  if (user.contains("out")) {
    if (!user["out"].is_string()) throw ConfigError("configuration key 'out' must be a string");
    out = user["out"].get<std::string>();
    user.erase("out");
  }

  const Json problem = user.value("problem", Json::object());
  if (!problem.is_object()) throw ConfigError("configuration key 'problem' must be an object");
  const std::string type = problem.value("type", std::string("schwinger"));
  if (type != "schwinger" && type != "hamiltonian-file") throw ConfigError("unknown problem type '" + type + "'");
  int n = 0;
  if (type == "schwinger") {
    const Json& sites = problem.contains("n_sites") ? problem["n_sites"] : Json(8);
    if (!sites.is_number_integer()) throw ConfigError("problem.n_sites must be an integer");
    n = sites.get<int>();
    if (n < 2 || n % 2 != 0 || n > kMaxQubits) throw ConfigError("problem.n_sites must be an even number from 2 to 30");
  } else {
    if (!problem.contains("path") || !problem["path"].is_string()) throw ConfigError("problem.path must be a string");
    n = file_qubits(problem["path"].get<std::string>());
  }

  Json doc = default_config(problem, n);
  check_known_keys(user, doc, "");
  doc.merge_patch(user);

  PipelineConfig cfg;
  cfg.out = out;
  auto& p = cfg.problem;
  const Json& pb = doc["problem"];
  if (type == "schwinger") {
    p.kind = ProblemConfig::Kind::schwinger;
    p.n_sites = n;
    p.mass = get<double>(doc, "problem", "mass");
    p.noise = get<double>(doc, "problem", "noise");
    p.layers = get<int>(doc, "problem", "layers");
    p.entangler_sign = get<int>(doc, "problem", "entangler_sign");
    const auto mode = get<std::string>(doc, "problem", "mode");
    if (mode == "analog")
      p.mode = SchwingerCircuitMode::analog;
    else if (mode == "scaling")
      p.mode = SchwingerCircuitMode::scaling;
    else
      throw ConfigError("problem.mode must be 'analog' or 'scaling'");
  } else {
    p.kind = ProblemConfig::Kind::hamiltonian_file;
    p.path = pb["path"].get<std::string>();
    p.depth = get<int>(doc, "problem", "depth");
    p.single_qubit_noise = get<double>(doc, "problem", "single_qubit_noise");
    p.two_qubit_noise = get<double>(doc, "problem", "two_qubit_noise");
  }

  auto& s = cfg.spsa;
  s.iterations = get<int>(doc, "vqe", "iterations");
  s.a0 = get<double>(doc, "vqe", "a0");
  s.c0 = get<double>(doc, "vqe", "c0");
  s.alpha = get<double>(doc, "vqe", "alpha");
  s.gamma = get<double>(doc, "vqe", "gamma");
  s.stability = get<double>(doc, "vqe", "stability");
  s.calibrate = get<bool>(doc, "vqe", "calibrate");
  s.calibration_probes = get<int>(doc, "vqe", "calibration_probes");
  s.target_step = get<double>(doc, "vqe", "target_step");
  cfg.vqe_shots = get<int>(doc, "vqe", "shots");

  cfg.nqs.n_qubits = n;
  cfg.nqs.layers = get<int>(doc, "nqs", "layers");
  cfg.nqs.heads = get<int>(doc, "nqs", "heads");
  cfg.nqs.model_dim = get<int>(doc, "nqs", "model_dim");
  cfg.nqs.scale_attention = get<bool>(doc, "nqs", "scale_attention");

  cfg.nqst_shots = get<int>(doc, "nqst", "shots_per_basis");
  cfg.nqst.batch_size = get<int>(doc, "nqst", "batch_size");
  cfg.nqst.learning_rate = get<double>(doc, "nqst", "learning_rate");
  cfg.nqst.epochs = get<int>(doc, "nqst", "epochs");
  cfg.nqst.validation_fraction = get<double>(doc, "nqst", "validation_fraction");

  cfg.vmc.iterations = get<int>(doc, "vmc", "iterations");
  cfg.vmc.batch_size = get<int>(doc, "vmc", "batch_size");
  cfg.vmc.learning_rate.initial = get<double>(doc, "vmc", "learning_rate");
  cfg.vmc.learning_rate.milestones = get<std::vector<int>>(doc, "vmc", "lr_milestones");
  cfg.vmc.learning_rate.factor = get<double>(doc, "vmc", "lr_factor");
  const Json& reg = doc["vmc"]["regularizer"];
  try {
    const auto kind = reg.at("kind").get<std::string>();
    if (kind == "step")
      cfg.vmc.regularizer.kind = RegularizerSchedule::Kind::step;
    else if (kind == "linear")
      cfg.vmc.regularizer.kind = RegularizerSchedule::Kind::linear;
    else
      throw ConfigError("vmc.regularizer.kind must be 'step' or 'linear'");
    cfg.vmc.regularizer.initial = reg.at("initial").get<double>();
    cfg.vmc.regularizer.duration = reg.at("duration").get<int>();
  } catch (const Json::exception&) {
    throw ConfigError("vmc.regularizer has the wrong shape");
  }

  cfg.renyi_partition = get<int>(doc, "metrics", "renyi_partition");
  try {
    cfg.seed = doc.at("seed").get<std::uint64_t>();
  } catch (const Json::exception&) {
    throw ConfigError("seed must be a non-negative integer");
  }
  const Rng root(cfg.seed);
  cfg.nqs.seed = root.split(streams::kNqsInit).seed();
  cfg.nqst.seed = root.split(streams::kNqst).seed();
  cfg.vmc.seed = root.split(streams::kVmc).seed();

  try {
    if (p.kind == ProblemConfig::Kind::schwinger) {
      SchwingerCircuitSpec spec{n, p.layers, p.mode, p.noise, 1.0, 10.0, 1.0, p.entangler_sign};
      spec.validate();
      if (p.mode == SchwingerCircuitMode::analog && p.noise > 0.0 && n > kMaxMixedQubits)
        throw ValidationError("noisy simulation is limited to " + std::to_string(kMaxMixedQubits) + " sites");
      if (n > kMaxPureQubits) throw ValidationError("circuit simulation is limited to " + std::to_string(kMaxPureQubits) + " sites");
    } else {
      if (p.depth < 0) throw ValidationError("problem.depth must be non-negative");
      for (double l : {p.single_qubit_noise, p.two_qubit_noise})
        if (!(l >= 0.0 && l <= 1.0)) throw ValidationError("noise probabilities must lie in [0, 1]");
      if ((p.single_qubit_noise > 0.0 || p.two_qubit_noise > 0.0) && n > kMaxMixedQubits)
        throw ValidationError("noisy simulation is limited to " + std::to_string(kMaxMixedQubits) + " qubits");
    }
    s.validate();
    if (s.calibrate && s.calibration_probes < 2) throw ValidationError("vqe.calibration_probes must be at least 2");
    if (cfg.vqe_shots < 1 || cfg.nqst_shots < 1) throw ValidationError("shot counts must be positive");
    cfg.nqs.validate();
    if (cfg.nqst.epochs < 0 || cfg.nqst.batch_size < 1 || !(cfg.nqst.learning_rate > 0.0))
      throw ValidationError("invalid nqst block");
    if (!(cfg.nqst.validation_fraction >= 0.0 && cfg.nqst.validation_fraction < 1.0))
      throw ValidationError("nqst.validation_fraction must lie in [0, 1)");
    cfg.vmc.validate();
    if (cfg.renyi_partition < 1 || cfg.renyi_partition >= n)
      throw ValidationError("metrics.renyi_partition must lie in [1, N)");
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  cfg.document = std::move(doc);
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration " + path.string());
  Json user;
  try {
    user = Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError("configuration " + path.string() + " is not valid JSON: " + e.what());
  }
  // Relative Hamiltonian paths are looked up next to the configuration file
  // when they do not exist relative to the working directory.
  if (user.is_object() && user.contains("problem") && user["problem"].is_object() &&
      user["problem"].contains("path") && user["problem"]["path"].is_string()) {
    const std::filesystem::path p = user["problem"]["path"].get<std::string>();
    const auto sibling = path.parent_path() / p;
    if (p.is_relative() && !std::filesystem::exists(p) && std::filesystem::exists(sibling))
      user["problem"]["path"] = sibling.lexically_normal().string();
  }
  return make_config(user, overrides);
}

std::string config_hash(const PipelineConfig& cfg) { return short_hash(cfg.document.dump()); }

const StageMetrics* PipelineReport::stage(const std::string& name) const {
  for (const auto& s : stages)
    if (s.stage == name) return &s;
  return nullptr;
}

PauliHamiltonian problem_hamiltonian(const PipelineConfig& cfg) {
  if (cfg.problem.kind == ProblemConfig::Kind::schwinger) {
    SchwingerParams sp;
    sp.n_sites = cfg.problem.n_sites;
    sp.mass = cfg.problem.mass;
    return build_schwinger(sp);
  }
  return load_hamiltonian(cfg.problem.path);
}

ExactReference exact_reference(const PipelineConfig& cfg, const PauliHamiltonian& h) {
  ExactReference ref;
  if (h.n_qubits() > kMaxPureQubits) return ref;
  LanczosOptions options;
  options.seed = Rng(cfg.seed).split(streams::kExact).seed();
  auto gs = exact_ground_state(h, options);
  ref.available = true;
  ref.energy = gs.energy;
  ref.state = std::move(gs.state);
  const int n = h.n_qubits();
  ref.order_parameter = n >= 2 ? order_parameter(ref.state, n) : kNaN;
  ref.renyi2 = renyi2_entropy(ref.state, cfg.renyi_partition);
  return ref;
}

namespace {

std::vector<double> initial_theta(const PipelineConfig& cfg, Rng& rng) {
  std::size_t count;
  if (cfg.problem.kind == ProblemConfig::Kind::schwinger) {
    SchwingerCircuitSpec spec;
    spec.n_sites = cfg.problem.n_sites;
    spec.layers = cfg.problem.layers;
    count = spec.parameter_count();
  } else {
    count = ChemistryCircuitSpec::parameter_count(cfg.n_qubits(), cfg.problem.depth);
  }
  std::vector<double> theta(count);
  for (auto& t : theta) t = rng.uniform(-0.1, 0.1);
  return theta;
}

SchwingerCircuitSpec schwinger_spec(const PipelineConfig& cfg) {
  SchwingerCircuitSpec spec;
  spec.n_sites = cfg.problem.n_sites;
  spec.layers = cfg.problem.layers;
  spec.mode = cfg.problem.mode;
  spec.noise = cfg.problem.noise;
  spec.entangler_sign = cfg.problem.entangler_sign;
  return spec;
}

ChemistryCircuitSpec chemistry_spec(const PipelineConfig& cfg, std::span<const double> theta) {
  ChemistryCircuitSpec spec;
  spec.n_qubits = cfg.n_qubits();
  spec.depth = cfg.problem.depth;
  spec.theta.assign(theta.begin(), theta.end());
  spec.single_qubit_noise = cfg.problem.single_qubit_noise;
  spec.two_qubit_noise = cfg.problem.two_qubit_noise;
  return spec;
}

}  // namespace

VqeOutcome run_vqe(const PipelineConfig& cfg, const PauliHamiltonian& h) {
  Rng rng = Rng(cfg.seed).split(streams::kVqe);
  const auto bases = group_measurement_bases(h);
  std::vector<double> theta0 = initial_theta(cfg, rng);
  Objective objective;
  std::optional<SchwingerAnsatz> ansatz;
  if (cfg.problem.kind == ProblemConfig::Kind::schwinger) {
    ansatz.emplace(schwinger_spec(cfg));
    objective = [&](std::span<const double> theta) {
      return estimate_energy(ansatz->prepare(theta, cfg.problem.mass), h, bases, cfg.vqe_shots, rng).value;
    };
  } else {
    objective = [&](std::span<const double> theta) {
      return estimate_energy(chemistry_circuit(chemistry_spec(cfg, theta)), h, bases, cfg.vqe_shots, rng).value;
    };
  }
  SpsaConfig spsa = cfg.spsa;
  if (spsa.calibrate) spsa.a0 = spsa_calibrate(objective, theta0, spsa, spsa.calibration_probes, spsa.target_step, rng);
  auto result = spsa_minimize(objective, std::move(theta0), spsa, rng);
  return {std::move(result.theta), std::move(result.trace), result.a0};
}

QuantumState prepare_vqe_state(const PipelineConfig& cfg, std::span<const double> theta) {
  if (cfg.problem.kind == ProblemConfig::Kind::schwinger)
    return SchwingerAnsatz(schwinger_spec(cfg)).prepare(theta, cfg.problem.mass);
  return chemistry_circuit(chemistry_spec(cfg, theta));
}

MeasurementDataset sample_dataset(const PipelineConfig& cfg, const QuantumState& state) {
  Rng rng = Rng(cfg.seed).split(streams::kDataset);
  const auto family =
      cfg.problem.kind == ProblemConfig::Kind::schwinger ? BasisFamily::schwinger : BasisFamily::chemistry;
  return make_dataset(state, family, cfg.nqst_shots, rng);
}

NqsParameters initial_nqs(const PipelineConfig& cfg) {
  Rng rng(cfg.nqs.seed);
  return NqsParameters::initialize(cfg.nqs, rng);
}

NqstResult run_nqst(const PipelineConfig& cfg, const NqsParameters& init, const MeasurementDataset& data) {
  return train_nqst(init, data, cfg.nqst);
}

VmcResult run_vmc(const PipelineConfig& cfg, const NqsParameters& init, const PauliHamiltonian& h) {
  return train_vmc(init, h, cfg.vmc);
}

StageMetrics state_stage_metrics(const std::string& stage, const QuantumState& state, const PauliHamiltonian& h,
                                 const ExactReference& exact, int renyi_partition) {
  StageMetrics m;
  m.stage = stage;
  const int n = state.n_qubits();
  if (state.is_pure()) {
    m.energy = expectation(h, state.vector());
    m.order_parameter = order_parameter(state.vector(), n);
    m.renyi2 = renyi2_entropy(state.vector(), renyi_partition);
  } else {
    m.energy = expectation(h, state.density());
    m.order_parameter = order_parameter(state.density(), n);
    m.renyi2 = renyi2_entropy(state.density(), renyi_partition);
  }
  if (exact.available) {
    const auto sm = state_metrics(state, exact.state);
    m.infidelity = std::clamp(1.0 - sm.fidelity, 0.0, 1.0);
    m.purity = sm.purity;
    m.energy_error = m.energy - exact.energy;
  } else {
    m.purity = state.is_pure() ? 1.0 : state.density().squaredNorm();
    m.infidelity = kNaN;
    m.energy_error = kNaN;
  }
  return m;
}

StageMetrics nqs_stage_metrics(const std::string& stage, const NqsParameters& params, const PauliHamiltonian& h,
                               const ExactReference& exact, int renyi_partition, std::uint64_t seed) {
  StageMetrics m;
  m.stage = stage;
  m.purity = 1.0;
  const int n = params.config.n_qubits;
  if (n <= kEnumerationLimit) {
    const StateVector psi = TransformerNqs(params).statevector();
    m.energy = expectation(h, psi);
    m.order_parameter = order_parameter(psi, n);
    m.renyi2 = renyi2_entropy(psi, renyi_partition);
    if (exact.available) m.infidelity = std::clamp(1.0 - std::norm(exact.state.dot(psi)), 0.0, 1.0);
  } else {
    Rng rng = Rng(seed).split(streams::kMetrics);
    NqsWavefunction psi(params);
    const auto samples = psi.sample(kMonteCarloSamples, rng);
    const auto stats = local_energy_statistics(psi, LocalHamiltonian(h), samples);
    m.energy = stats.mean;
    m.energy_standard_error = std::sqrt(stats.variance / static_cast<double>(samples.size()));
    double op = 0.0;
    for (Bits s : samples) op += order_parameter_of(s, n);
    m.order_parameter = op / static_cast<double>(samples.size());
    m.renyi2 = kNaN;
    m.infidelity = kNaN;
    if (exact.available && exact.state.size() == (Eigen::Index{1} << n)) {
      const StateVector full = TransformerNqs(params).statevector();
      m.infidelity = std::clamp(1.0 - std::norm(exact.state.dot(full)), 0.0, 1.0);
    }
  }
  m.energy_error = exact.available ? m.energy - exact.energy : kNaN;
  return m;
}

namespace {

PipelineReport start_report(const PipelineConfig& cfg, const std::string& mode) {
  PipelineReport report;
  report.mode = mode;
  report.seed = cfg.seed;
  report.config = cfg.document;
  report.config_hash = config_hash(cfg);
  return report;
}

template <class F>
bool run_stage(PipelineReport& report, const std::string& name, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  try {
    body();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    report.failure_stage = name;
    report.failure_message = e.what();
    if (auto* aborted = dynamic_cast<const VmcAborted*>(&e)) report.vmc_trace = aborted->trace();
    if (auto* aborted = dynamic_cast<const SpsaAborted*>(&e)) report.vqe_trace = aborted->trace();
  }
  report.timings[name] = seconds_since(start);
  return report.ok();
}

}  // namespace

PipelineReport run_pipeline(const PipelineConfig& cfg) {
  PipelineReport report = start_report(cfg, "nem");
  PauliHamiltonian h;
  if (!run_stage(report, "exact", [&] {
        h = problem_hamiltonian(cfg);
        report.exact = exact_reference(cfg, h);
      }))
    return report;

  QuantumState prepared;
  if (!run_stage(report, "vqe", [&] {
        auto vqe = run_vqe(cfg, h);
        report.vqe_theta = vqe.theta;
        report.vqe_trace = std::move(vqe.trace);
        prepared = prepare_vqe_state(cfg, report.vqe_theta);
        report.stages.push_back(state_stage_metrics("vqe", prepared, h, report.exact, cfg.renyi_partition));
      }))
    return report;

  if (!run_stage(report, "sample", [&] { report.dataset = sample_dataset(cfg, prepared); })) return report;

  if (!run_stage(report, "nqst", [&] {
        auto nqst = run_nqst(cfg, initial_nqs(cfg), *report.dataset);
        report.nqst_trace = std::move(nqst.trace);
        report.nqst_params = std::move(nqst.params);
        report.stages.push_back(
            nqs_stage_metrics("nqst", *report.nqst_params, h, report.exact, cfg.renyi_partition, cfg.seed));
      }))
    return report;

  run_stage(report, "vmc", [&] {
    auto vmc = run_vmc(cfg, *report.nqst_params, h);
    report.vmc_trace = std::move(vmc.trace);
    report.vmc_params = std::move(vmc.params);
    report.stages.push_back(nqs_stage_metrics("vmc", *report.vmc_params, h, report.exact, cfg.renyi_partition, cfg.seed));
  });
  return report;
}

PipelineReport run_standalone_vmc(const PipelineConfig& cfg) {
  PipelineReport report = start_report(cfg, "standalone");
  PauliHamiltonian h;
  if (!run_stage(report, "exact", [&] {
        h = problem_hamiltonian(cfg);
        report.exact = exact_reference(cfg, h);
      }))
    return report;
  NqsParameters init = initial_nqs(cfg);
  run_stage(report, "vmc", [&] {
    report.stages.push_back(nqs_stage_metrics("init", init, h, report.exact, cfg.renyi_partition, cfg.seed));
    auto vmc = run_vmc(cfg, init, h);
    report.vmc_trace = std::move(vmc.trace);
    report.vmc_params = std::move(vmc.params);
    report.stages.push_back(nqs_stage_metrics("vmc", *report.vmc_params, h, report.exact, cfg.renyi_partition, cfg.seed));
  });
  return report;
}

}  // namespace nem
