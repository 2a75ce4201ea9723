#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nem/bits.hpp"
#include "nem/pauli.hpp"
#include "nem/rng.hpp"

namespace nem {

struct TransformerConfig {
  int n_qubits = 8;
  int layers = 2;
  int heads = 4;
  int model_dim = 8;
  std::uint64_t seed = 0;
  // Multiply attention scores by 1/sqrt(D/H). Off by default.
  bool scale_attention = false;

  void validate() const;
  int head_dim() const { return model_dim / heads; }
  int positions() const { return n_qubits + 1; }
};

// Named contiguous slice of the flat parameter vector.
struct ParameterBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

// Offsets of every weight inside the flat vector. Matrices are row-major
// with the output index first.
struct ParameterLayout {
  struct Layer {
    std::size_t ln1_scale, ln1_shift, query, key, value, out, ln2_scale, ln2_shift, weight, bias;
  };
  std::size_t embedding = 0;   // 2 x D
  std::size_t positional = 0;  // (N+1) x D
  std::vector<Layer> layers;
  std::size_t logit_weight = 0, logit_bias = 0;  // D, 1
  std::size_t phase_weight = 0, phase_bias = 0;  // (N+1) D, 1
  std::size_t total = 0;
  std::vector<ParameterBlock> blocks;

  explicit ParameterLayout(const TransformerConfig& cfg);
};

struct NqsParameters {
  TransformerConfig config;
  std::vector<double> values;

  NqsParameters() = default;
  explicit NqsParameters(const TransformerConfig& cfg);  // zero-filled

  // Uniform(-0.1, 0.1) for matrices and embeddings, zero biases and shifts, unit scales.
  static NqsParameters initialize(const TransformerConfig& cfg, Rng& rng);

  ParameterLayout layout() const { return ParameterLayout(config); }
  std::size_t size() const { return values.size(); }
};

// ln <s|psi> = log_prob / 2 + i phase.
struct AmplitudeOutput {
  double log_prob = 0.0;
  double phase = 0.0;

  cplx log_amplitude() const { return {0.5 * log_prob, phase}; }
};

// Upstream derivatives dL/d(log_prob) and dL/d(phase) for one input.
struct OutputSeed {
  Bits s = 0;
  double d_log_prob = 0.0;
  double d_phase = 0.0;
};

// Autoregressive Transformer wavefunction. Holds scratch buffers, so one
// instance must not be shared between threads; the parameters are not owned.
class TransformerNqs {
public:
  explicit TransformerNqs(const NqsParameters& params);

  const TransformerConfig& config() const { return cfg_; }

  AmplitudeOutput forward(Bits s);

  // p(s_{k+1} = 1 | s_1..s_k) for a prefix of k bits (k < N).
  double conditional_one(Bits prefix, int k);

  // Accumulates d_log_prob * grad(log_prob) + d_phase * grad(phase) into `grad`.
  void backward(const OutputSeed& seed, std::span<double> grad);
  void backward(std::span<const OutputSeed> seeds, std::span<double> grad);

  // Exact ancestral sampling, one bit at a time.
  std::vector<Bits> sample(int count, Rng& rng);

  // Full statevector by enumeration (N <= 16).
  StateVector statevector();

  // p(s_n = 1 | s_<n) for every n, used by masking tests.
  std::vector<double> conditionals(Bits s);

private:
  struct LayerCache {
    std::vector<double> input, xhat1, rstd1, u1, q, k, v, weights, att, o, a, xhat2, rstd2, u2, l;
  };

  void run(Bits s, int length);
  void layer_forward(int layer, int length, LayerCache& c);
  double logit(int position) const;

  const double* p(std::size_t offset) const { return params_->values.data() + offset; }

  const NqsParameters* params_;
  TransformerConfig cfg_;
  ParameterLayout layout_;
  int d_, h_, dh_, t_;
  double score_scale_;
  std::vector<int> tokens_;
  std::vector<double> state_;  // current representation e, length T x D
  std::vector<LayerCache> cache_;
};

inline AmplitudeOutput nqs_forward(const NqsParameters& params, Bits s) { return TransformerNqs(params).forward(s); }

// Gradient of sum over seeds; output has params.size() entries.
std::vector<double> nqs_gradient(const NqsParameters& params, std::span<const OutputSeed> seeds);

struct AdamState {
  std::vector<double> m, v;
  long step = 0;
  double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
};

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad, double lr);

// Checkpoint: text header line with the config, then the flat vector as little-endian doubles.
void save_checkpoint(const NqsParameters& params, const std::filesystem::path& path);
NqsParameters load_checkpoint(const std::filesystem::path& path);

}  // namespace nem
