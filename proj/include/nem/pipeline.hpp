#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nem/nqs.hpp"
#include "nem/nqst.hpp"
#include "nem/vmc.hpp"
#include "nem/vqe.hpp"

namespace nem {

using Json = nlohmann::json;

struct ProblemConfig {
  enum class Kind { schwinger, hamiltonian_file };
  Kind kind = Kind::schwinger;
  // Schwinger model
  int n_sites = 8;
  double mass = -0.7;
  double noise = 0.001;
  SchwingerCircuitMode mode = SchwingerCircuitMode::analog;
  int layers = 3;
  int entangler_sign = +1;
  // Hamiltonian file with the hardware-efficient circuit
  std::string path;
  int depth = 1;
  double single_qubit_noise = 0.001;
  double two_qubit_noise = 0.01;
};

struct PipelineConfig {
  ProblemConfig problem;
  SpsaConfig spsa;
  int vqe_shots = 512;
  TransformerConfig nqs;
  int nqst_shots = 512;
  NqstConfig nqst;
  VmcConfig vmc;
  int renyi_partition = 3;
  std::uint64_t seed = 0;
  std::string out;

  // Resolved document, including defaults; echoed into the report.
  Json document;

  int n_qubits() const;
};

// Table S1 defaults for the problem described by `problem` (schwinger block
// or hamiltonian-file block); the qubit count of a file problem is `n_qubits`.
Json default_config(const Json& problem, int n_qubits);

// Builds a config from a user document: fills defaults for its problem
// family, applies "a.b.c=value" overrides, then validates. Unknown keys,
// bad values and missing Hamiltonian files throw ConfigError.
PipelineConfig make_config(const Json& user, const std::vector<std::string>& overrides = {});
PipelineConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

// Sets one dotted key; the value is parsed as JSON, falling back to a string.
void apply_override(Json& doc, const std::string& assignment);

std::string config_hash(const PipelineConfig& cfg);

struct StageMetrics {
  std::string stage;
  double energy = 0.0;
  double energy_standard_error = 0.0;  // nonzero only for Monte Carlo estimates
  double energy_error = 0.0;
  double infidelity = 0.0;
  double order_parameter = 0.0;
  double renyi2 = 0.0;
  double purity = 1.0;
};

struct ExactReference {
  bool available = false;
  double energy = 0.0;
  double order_parameter = 0.0;
  double renyi2 = 0.0;
  StateVector state;
};

struct PipelineReport {
  std::string mode = "nem";  // "nem" or "standalone"
  std::uint64_t seed = 0;
  std::string config_hash;
  Json config;
  ExactReference exact;
  std::vector<StageMetrics> stages;
  std::optional<std::string> failure_stage;
  std::string failure_message;

  std::vector<double> vqe_theta;
  std::vector<SpsaEvaluation> vqe_trace;
  std::vector<NqstEpoch> nqst_trace;
  std::vector<VmcIteration> vmc_trace;
  std::optional<NqsParameters> nqst_params;
  std::optional<NqsParameters> vmc_params;
  std::optional<MeasurementDataset> dataset;
  std::map<std::string, double> timings;  // seconds; written to timings.json only
  // SHA-256 prefixes of the dataset and checkpoints, filled when loading a report.
  std::map<std::string, std::string> artifact_hashes;

  const StageMetrics* stage(const std::string& name) const;
  bool ok() const { return !failure_stage.has_value(); }
};

PauliHamiltonian problem_hamiltonian(const PipelineConfig& cfg);
ExactReference exact_reference(const PipelineConfig& cfg, const PauliHamiltonian& h);

// Stage helpers, also used by the individual CLI subcommands.
struct VqeOutcome {
  std::vector<double> theta;
  std::vector<SpsaEvaluation> trace;
  double a0 = 0.0;
};
VqeOutcome run_vqe(const PipelineConfig& cfg, const PauliHamiltonian& h);
QuantumState prepare_vqe_state(const PipelineConfig& cfg, std::span<const double> theta);
MeasurementDataset sample_dataset(const PipelineConfig& cfg, const QuantumState& state);
NqsParameters initial_nqs(const PipelineConfig& cfg);
NqstResult run_nqst(const PipelineConfig& cfg, const NqsParameters& init, const MeasurementDataset& data);
VmcResult run_vmc(const PipelineConfig& cfg, const NqsParameters& init, const PauliHamiltonian& h);

StageMetrics state_stage_metrics(const std::string& stage, const QuantumState& state, const PauliHamiltonian& h,
                                 const ExactReference& exact, int renyi_partition);
// Exact metrics by enumeration for N <= 12, Monte Carlo energy and order
// parameter otherwise (entanglement and infidelity are then NaN).
StageMetrics nqs_stage_metrics(const std::string& stage, const NqsParameters& params, const PauliHamiltonian& h,
                               const ExactReference& exact, int renyi_partition, std::uint64_t seed);

// VQE, sampling, NQST and VMC with metrics after every stage. A failing
// stage ends the run and is recorded in the returned report.
PipelineReport run_pipeline(const PipelineConfig& cfg);

// VMC from a randomly initialized NQS with the same settings; no quantum data.
PipelineReport run_standalone_vmc(const PipelineConfig& cfg);

// report.json, metrics.csv, traces/*.csv, timings.json and checkpoints.
void emit_report(const PipelineReport& report, const std::filesystem::path& dir);
Json report_to_json(const PipelineReport& report);
PipelineReport report_from_json(const Json& doc);
PipelineReport load_report(const std::filesystem::path& dir);
void write_metrics_csv(const std::vector<StageMetrics>& stages, const std::filesystem::path& path);

inline constexpr const char* kMetricsCsvHeader =
    "stage,energy,energy_standard_error,energy_error,infidelity,order_parameter,renyi2,purity";

struct Summary {
  std::size_t count = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

// Median with interquartile range. For ten values the range spans the middle
// six (ranks 3 and 8); otherwise linear-interpolated quartiles.
Summary summarize(std::vector<double> values);

}  // namespace nem
