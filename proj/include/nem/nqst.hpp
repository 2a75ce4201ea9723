#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nem/nqs.hpp"
#include "nem/pauli.hpp"
#include "nem/rng.hpp"
#include "nem/simulator.hpp"

namespace nem {

inline constexpr int kMaxBasisWeight = 2;

// One measured outcome in basis `basis` (ops over X, Y, Z), seen `count` times.
struct MeasurementRecord {
  std::string basis;
  Bits outcome = 0;
  int count = 1;
};

struct MeasurementDataset {
  int n_qubits = 0;
  std::vector<MeasurementRecord> records;
  std::string source;
  std::uint64_t seed = 0;
  int max_basis_weight = kMaxBasisWeight;

  // Throws when a basis has the wrong length, contains I, has more than
  // max_basis_weight non-Z positions, or a count is not positive.
  void validate() const;
  long total_shots() const;
  std::size_t basis_count() const;
};

enum class BasisFamily { schwinger, chemistry };

// Schwinger: all-Z, XX and YY on each neighbouring pair (2N-1 bases).
// Chemistry: all-Z, one X, two Xs (1 + N + N(N-1)/2 bases).
std::vector<std::string> tomography_bases(BasisFamily family, int n_qubits);

MeasurementDataset make_dataset(const QuantumState& state, BasisFamily family, int shots_per_basis, Rng& rng);

// Text format: "qubits <N>" header, then "<basis> <bitstring> <count>" lines.
void save_dataset(const MeasurementDataset& data, const std::filesystem::path& path);
MeasurementDataset load_dataset(const std::filesystem::path& path);

// <s,B|t> for the 2^K computational states t that overlap |s,B>.
struct BasisExpansion {
  std::vector<Bits> states;
  std::vector<cplx> overlaps;
};
BasisExpansion expand_basis_state(const std::string& basis, Bits s, int max_weight = kMaxBasisWeight);

// sum_t <s,B|t><t|psi_lambda>.
cplx basis_amplitude(const NqsParameters& params, Bits s, const std::string& basis, int max_weight = kMaxBasisWeight);

struct NqstLoss {
  double loss = 0.0;
  int clamp_hits = 0;
  std::vector<double> gradient;  // empty unless requested
};

// -(1/W) sum_r count_r ln |<s_r,B_r|psi>|^2 with W = sum_r count_r; the
// squared amplitude is clamped below at 1e-300 and clamp hits are counted.
// Throws NumericalError if every record is clamped.
NqstLoss nqst_loss(const NqsParameters& params, std::span<const MeasurementRecord> batch, bool with_gradient = false,
                   int max_weight = kMaxBasisWeight);

struct NqstConfig {
  int epochs = 50;
  int batch_size = 512;
  double learning_rate = 1e-2;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct NqstEpoch {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

struct NqstResult {
  NqsParameters params;
  std::vector<NqstEpoch> trace;  // epoch 0 is the initial model
  int best_epoch = 0;
  double best_validation_loss = 0.0;
};

// Minibatch Adam over single shots. Shots are split 90/10 into training and
// validation sets with a seeded shuffle; the parameters with the lowest
// validation loss (including the initial ones) are returned.
NqstResult train_nqst(const NqsParameters& init, const MeasurementDataset& data, const NqstConfig& cfg);

}  // namespace nem
