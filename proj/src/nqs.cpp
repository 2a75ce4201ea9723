#include "nem/nqs.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace nem {

namespace {

constexpr double kLayerNormEps = 1e-5;

// y[n] = M x[n] (+ bias) for n < rows; M is D x D row-major.
void matvec_rows(const double* m, const double* bias, const double* x, double* y, int rows, int d) {
  for (int n = 0; n < rows; ++n) {
    const double* xn = x + n * d;
    double* yn = y + n * d;
    for (int r = 0; r < d; ++r) {
      const double* mr = m + r * d;
      double acc = bias ? bias[r] : 0.0;
      for (int c = 0; c < d; ++c) acc += mr[c] * xn[c];
      yn[r] = acc;
    }
  }
}

// dM += sum_n dy[n] x[n]^T ; dx[n] (+)= M^T dy[n].
void matvec_rows_backward(const double* m, const double* x, const double* dy, double* dm, double* dx, int rows, int d,
                          bool accumulate_dx) {
  for (int n = 0; n < rows; ++n) {
    const double* xn = x + n * d;
    const double* dyn = dy + n * d;
    double* dxn = dx + n * d;
    if (!accumulate_dx) std::fill(dxn, dxn + d, 0.0);
    for (int r = 0; r < d; ++r) {
      const double g = dyn[r];
      if (g == 0.0) continue;
      double* dmr = dm + r * d;
      const double* mr = m + r * d;
      for (int c = 0; c < d; ++c) {
        dmr[c] += g * xn[c];
        dxn[c] += g * mr[c];
      }
    }
  }
}

void layer_norm(const double* x, const double* scale, const double* shift, double* xhat, double* rstd, double* y,
                int rows, int d) {
  for (int n = 0; n < rows; ++n) {
    const double* xn = x + n * d;
    double mean = 0.0;
    for (int c = 0; c < d; ++c) mean += xn[c];
    mean /= d;
    double var = 0.0;
    for (int c = 0; c < d; ++c) var += (xn[c] - mean) * (xn[c] - mean);
    var /= d;
    const double r = 1.0 / std::sqrt(var + kLayerNormEps);
    rstd[n] = r;
    for (int c = 0; c < d; ++c) {
      const double h = (xn[c] - mean) * r;
      xhat[n * d + c] = h;
      y[n * d + c] = h * scale[c] + shift[c];
    }
  }
}

// Accumulates dx[n] += LayerNorm'(dy[n]) and the scale/shift gradients.
void layer_norm_backward(const double* xhat, const double* rstd, const double* scale, const double* dy, double* dscale,
                         double* dshift, double* dx, int rows, int d) {
  for (int n = 0; n < rows; ++n) {
    const double* hn = xhat + n * d;
    const double* gn = dy + n * d;
    double mean_g = 0.0, mean_gh = 0.0;
    for (int c = 0; c < d; ++c) {
      dscale[c] += gn[c] * hn[c];
      dshift[c] += gn[c];
      const double g = gn[c] * scale[c];
      mean_g += g;
      mean_gh += g * hn[c];
    }
    mean_g /= d;
    mean_gh /= d;
    for (int c = 0; c < d; ++c) dx[n * d + c] += rstd[n] * (gn[c] * scale[c] - mean_g - hn[c] * mean_gh);
  }
}

double log_sigmoid(double z) { return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }
double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

void check_finite(const std::vector<double>& v, std::size_t count, const std::string& where) {
  for (std::size_t i = 0; i < count; ++i)
    if (!std::isfinite(v[i])) throw NumericalError("non-finite value in " + where);
}

}  // namespace

void TransformerConfig::validate() const {
  if (n_qubits < 1 || n_qubits > 62) throw ValidationError("NQS qubit count must be in [1, 62]");
  if (layers < 1) throw ValidationError("NQS needs at least one layer");
  if (heads < 1 || model_dim < 1) throw ValidationError("heads and model dimension must be positive");
  if (model_dim % heads != 0) throw ValidationError("model dimension must be divisible by the number of heads");
}

ParameterLayout::ParameterLayout(const TransformerConfig& cfg) {
  cfg.validate();
  const std::size_t d = static_cast<std::size_t>(cfg.model_dim);
  std::size_t off = 0;
  auto take = [&](const std::string& name, std::size_t n) {
    blocks.push_back({name, off, n});
    const std::size_t at = off;
    off += n;
    return at;
  };
  embedding = take("embedding", 2 * d);
  positional = take("positional", static_cast<std::size_t>(cfg.positions()) * d);
  for (int k = 0; k < cfg.layers; ++k) {
    const std::string pre = "layer" + std::to_string(k) + ".";
    Layer l{};
    l.ln1_scale = take(pre + "attention_norm.scale", d);
    l.ln1_shift = take(pre + "attention_norm.shift", d);
    l.query = take(pre + "query", d * d);
    l.key = take(pre + "key", d * d);
    l.value = take(pre + "value", d * d);
    l.out = take(pre + "attention_out", d * d);
    l.ln2_scale = take(pre + "linear_norm.scale", d);
    l.ln2_shift = take(pre + "linear_norm.shift", d);
    l.weight = take(pre + "linear.weight", d * d);
    l.bias = take(pre + "linear.bias", d);
    layers.push_back(l);
  }
  logit_weight = take("logit.weight", d);
  logit_bias = take("logit.bias", 1);
  phase_weight = take("phase.weight", static_cast<std::size_t>(cfg.positions()) * d);
  phase_bias = take("phase.bias", 1);
  total = off;
}

NqsParameters::NqsParameters(const TransformerConfig& cfg) : config(cfg), values(ParameterLayout(cfg).total, 0.0) {}

NqsParameters NqsParameters::initialize(const TransformerConfig& cfg, Rng& rng) {
  NqsParameters params(cfg);
  const ParameterLayout layout(cfg);
  for (const auto& block : layout.blocks) {
    const auto& name = block.name;
    double* v = params.values.data() + block.offset;
    const bool is_scale = name.ends_with(".scale");
    const bool is_zero = name.ends_with(".shift") || name.ends_with("bias");
    for (std::size_t i = 0; i < block.size; ++i) v[i] = is_scale ? 1.0 : is_zero ? 0.0 : rng.uniform(-0.1, 0.1);
  }
  return params;
}

TransformerNqs::TransformerNqs(const NqsParameters& params)
    : params_(&params), cfg_(params.config), layout_(params.config) {
  if (params.values.size() != layout_.total) throw DimensionError("parameter vector does not match the config");
  d_ = cfg_.model_dim;
  h_ = cfg_.heads;
  dh_ = cfg_.head_dim();
  t_ = cfg_.positions();
  score_scale_ = cfg_.scale_attention ? 1.0 / std::sqrt(static_cast<double>(dh_)) : 1.0;
  tokens_.resize(static_cast<std::size_t>(t_));
  state_.resize(static_cast<std::size_t>(t_ * d_));
  const std::size_t td = static_cast<std::size_t>(t_ * d_);
  const std::size_t htt = static_cast<std::size_t>(h_ * t_ * t_);
  cache_.resize(static_cast<std::size_t>(cfg_.layers));
  for (auto& c : cache_) {
    for (auto* v : {&c.input, &c.xhat1, &c.u1, &c.q, &c.k, &c.v, &c.att, &c.o, &c.a, &c.xhat2, &c.u2, &c.l}) v->resize(td);
    c.rstd1.resize(static_cast<std::size_t>(t_));
    c.rstd2.resize(static_cast<std::size_t>(t_));
    c.weights.assign(htt, 0.0);
  }
}

void TransformerNqs::layer_forward(int layer, int length, LayerCache& c) {
  const auto& L = layout_.layers[static_cast<std::size_t>(layer)];
  const int d = d_;
  const double* pos = p(layout_.positional);
  for (int i = 0; i < length * d; ++i) c.input[static_cast<std::size_t>(i)] = state_[static_cast<std::size_t>(i)] + pos[i];

  layer_norm(c.input.data(), p(L.ln1_scale), p(L.ln1_shift), c.xhat1.data(), c.rstd1.data(), c.u1.data(), length, d);
  matvec_rows(p(L.query), nullptr, c.u1.data(), c.q.data(), length, d);
  matvec_rows(p(L.key), nullptr, c.u1.data(), c.k.data(), length, d);
  matvec_rows(p(L.value), nullptr, c.u1.data(), c.v.data(), length, d);

  // Causal attention: position n attends to m <= n.
  std::fill(c.att.begin(), c.att.begin() + length * d, 0.0);
  for (int h = 0; h < h_; ++h) {
    const int off = h * dh_;
    for (int n = 0; n < length; ++n) {
      double* w = c.weights.data() + (static_cast<std::size_t>(h) * t_ + n) * t_;
      double max_score = -std::numeric_limits<double>::infinity();
      for (int m = 0; m <= n; ++m) {
        double s = 0.0;
        for (int i = 0; i < dh_; ++i) s += c.q[static_cast<std::size_t>(n * d + off + i)] * c.k[static_cast<std::size_t>(m * d + off + i)];
        w[m] = s * score_scale_;
        max_score = std::max(max_score, w[m]);
      }
      double z = 0.0;
      for (int m = 0; m <= n; ++m) {
        w[m] = std::exp(w[m] - max_score);
        z += w[m];
      }
      for (int m = 0; m <= n; ++m) w[m] /= z;
      for (int m = n + 1; m < t_; ++m) w[m] = 0.0;
      double* an = c.att.data() + n * d + off;
      for (int m = 0; m <= n; ++m) {
        const double* vm = c.v.data() + m * d + off;
        for (int i = 0; i < dh_; ++i) an[i] += w[m] * vm[i];
      }
    }
  }
  matvec_rows(p(L.out), nullptr, c.att.data(), c.o.data(), length, d);
  for (int i = 0; i < length * d; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    c.a[ui] = c.input[ui] + std::max(c.o[ui], 0.0);
  }

  layer_norm(c.a.data(), p(L.ln2_scale), p(L.ln2_shift), c.xhat2.data(), c.rstd2.data(), c.u2.data(), length, d);
  matvec_rows(p(L.weight), p(L.bias), c.u2.data(), c.l.data(), length, d);
  for (int i = 0; i < length * d; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    state_[ui] = c.a[ui] + std::max(c.l[ui], 0.0);
  }
}

void TransformerNqs::run(Bits s, int length) {
  if (cfg_.n_qubits < 64 && (s >> cfg_.n_qubits) != 0)
    throw ValidationError("bitstring has set bits beyond qubit " + std::to_string(cfg_.n_qubits - 1));
  const double* emb = p(layout_.embedding);
  tokens_[0] = 0;
  for (int n = 1; n < length; ++n) tokens_[static_cast<std::size_t>(n)] = bit(s, n - 1);
  for (int n = 0; n < length; ++n)
    std::memcpy(state_.data() + n * d_, emb + tokens_[static_cast<std::size_t>(n)] * d_, sizeof(double) * static_cast<std::size_t>(d_));
  for (int k = 0; k < cfg_.layers; ++k) {
    layer_forward(k, length, cache_[static_cast<std::size_t>(k)]);
    check_finite(state_, static_cast<std::size_t>(length * d_), "transformer layer " + std::to_string(k));
  }
}

double TransformerNqs::logit(int position) const {
  const double* w = p(layout_.logit_weight);
  double acc = *p(layout_.logit_bias);
  for (int c = 0; c < d_; ++c) acc += w[c] * state_[static_cast<std::size_t>(position * d_ + c)];
  return acc;
}

AmplitudeOutput TransformerNqs::forward(Bits s) {
  const int n_qubits = cfg_.n_qubits;
  run(s, t_);
  AmplitudeOutput out;
  for (int n = 1; n <= n_qubits; ++n) {
    const double l = logit(n - 1);
    out.log_prob += log_sigmoid(bit(s, n - 1) ? l : -l);
  }
  const double* wp = p(layout_.phase_weight);
  double phase = *p(layout_.phase_bias);
  for (int i = 0; i < t_ * d_; ++i) phase += wp[i] * state_[static_cast<std::size_t>(i)];
  out.phase = phase;
  if (!std::isfinite(out.log_prob) || !std::isfinite(out.phase)) throw NumericalError("non-finite NQS output head");
  return out;
}

double TransformerNqs::conditional_one(Bits prefix, int k) {
  if (k < 0 || k >= cfg_.n_qubits) throw ValidationError("prefix length out of range");
  run(prefix, k + 1);
  return sigmoid(logit(k));
}

std::vector<double> TransformerNqs::conditionals(Bits s) {
  run(s, t_);
  std::vector<double> out(static_cast<std::size_t>(cfg_.n_qubits));
  for (int n = 0; n < cfg_.n_qubits; ++n) out[static_cast<std::size_t>(n)] = sigmoid(logit(n));
  return out;
}

void TransformerNqs::backward(const OutputSeed& seed, std::span<double> grad) {
  if (grad.size() != layout_.total) throw DimensionError("gradient buffer has wrong size");
  const int d = d_, T = t_, N = cfg_.n_qubits;
  const Bits s = seed.s;
  run(s, T);

  std::vector<double> de(static_cast<std::size_t>(T * d), 0.0);
  double* g = grad.data();

  // Output heads.
  const double* wl = p(layout_.logit_weight);
  for (int n = 0; n < N; ++n) {
    const double l = logit(n);
    const double y = bit(s, n) ? 1.0 : -1.0;
    const double dl = seed.d_log_prob * y * sigmoid(-y * l);
    if (dl == 0.0) continue;
    g[layout_.logit_bias] += dl;
    for (int c = 0; c < d; ++c) {
      g[layout_.logit_weight + static_cast<std::size_t>(c)] += dl * state_[static_cast<std::size_t>(n * d + c)];
      de[static_cast<std::size_t>(n * d + c)] += dl * wl[c];
    }
  }
  if (seed.d_phase != 0.0) {
    const double* wp = p(layout_.phase_weight);
    g[layout_.phase_bias] += seed.d_phase;
    for (int i = 0; i < T * d; ++i) {
      g[layout_.phase_weight + static_cast<std::size_t>(i)] += seed.d_phase * state_[static_cast<std::size_t>(i)];
      de[static_cast<std::size_t>(i)] += seed.d_phase * wp[i];
    }
  }

  std::vector<double> da(static_cast<std::size_t>(T * d)), dl(static_cast<std::size_t>(T * d)), du(static_cast<std::size_t>(T * d)),
      datt(static_cast<std::size_t>(T * d)), dq(static_cast<std::size_t>(T * d)), dk(static_cast<std::size_t>(T * d)),
      dv(static_cast<std::size_t>(T * d)), dw(static_cast<std::size_t>(T));

  for (int layer = cfg_.layers - 1; layer >= 0; --layer) {
    const auto& L = layout_.layers[static_cast<std::size_t>(layer)];
    const LayerCache& c = cache_[static_cast<std::size_t>(layer)];

    // e = a + relu(l), l = W u2 + b, u2 = LN2(a)
    for (int i = 0; i < T * d; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      da[ui] = de[ui];
      dl[ui] = c.l[ui] > 0.0 ? de[ui] : 0.0;
    }
    for (int n = 0; n < T; ++n)
      for (int r = 0; r < d; ++r) g[L.bias + static_cast<std::size_t>(r)] += dl[static_cast<std::size_t>(n * d + r)];
    matvec_rows_backward(p(L.weight), c.u2.data(), dl.data(), g + L.weight, du.data(), T, d, false);
    layer_norm_backward(c.xhat2.data(), c.rstd2.data(), p(L.ln2_scale), du.data(), g + L.ln2_scale, g + L.ln2_shift,
                        da.data(), T, d);

    // a = input + relu(o), o = O att
    std::vector<double>& din = de;  // reuse: becomes d(input)
    std::vector<double>& d_o = dl;
    for (int i = 0; i < T * d; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      din[ui] = da[ui];
      d_o[ui] = c.o[ui] > 0.0 ? da[ui] : 0.0;
    }
    matvec_rows_backward(p(L.out), c.att.data(), d_o.data(), g + L.out, datt.data(), T, d, false);

    // Attention heads.
    std::fill(dq.begin(), dq.end(), 0.0);
    std::fill(dk.begin(), dk.end(), 0.0);
    std::fill(dv.begin(), dv.end(), 0.0);
    for (int h = 0; h < h_; ++h) {
      const int off = h * dh_;
      for (int n = 0; n < T; ++n) {
        const double* w = c.weights.data() + (static_cast<std::size_t>(h) * T + n) * T;
        const double* dan = datt.data() + n * d + off;
        double dot = 0.0;
        for (int m = 0; m <= n; ++m) {
          const double* vm = c.v.data() + m * d + off;
          double acc = 0.0;
          for (int i = 0; i < dh_; ++i) {
            acc += dan[i] * vm[i];
            dv[static_cast<std::size_t>(m * d + off + i)] += w[m] * dan[i];
          }
          dw[static_cast<std::size_t>(m)] = acc;
          dot += w[m] * acc;
        }
        for (int m = 0; m <= n; ++m) {
          const double ds = w[m] * (dw[static_cast<std::size_t>(m)] - dot) * score_scale_;
          if (ds == 0.0) continue;
          for (int i = 0; i < dh_; ++i) {
            dq[static_cast<std::size_t>(n * d + off + i)] += ds * c.k[static_cast<std::size_t>(m * d + off + i)];
            dk[static_cast<std::size_t>(m * d + off + i)] += ds * c.q[static_cast<std::size_t>(n * d + off + i)];
          }
        }
      }
    }
    matvec_rows_backward(p(L.query), c.u1.data(), dq.data(), g + L.query, du.data(), T, d, false);
    matvec_rows_backward(p(L.key), c.u1.data(), dk.data(), g + L.key, du.data(), T, d, true);
    matvec_rows_backward(p(L.value), c.u1.data(), dv.data(), g + L.value, du.data(), T, d, true);
    layer_norm_backward(c.xhat1.data(), c.rstd1.data(), p(L.ln1_scale), du.data(), g + L.ln1_scale, g + L.ln1_shift,
                        din.data(), T, d);

    // input = e_prev + positional
    for (int i = 0; i < T * d; ++i) g[layout_.positional + static_cast<std::size_t>(i)] += din[static_cast<std::size_t>(i)];
    check_finite(din, static_cast<std::size_t>(T * d), "gradient of transformer layer " + std::to_string(layer));
  }
  for (int n = 0; n < T; ++n) {
    const std::size_t row = layout_.embedding + static_cast<std::size_t>(tokens_[static_cast<std::size_t>(n)] * d);
    for (int c = 0; c < d; ++c) g[row + static_cast<std::size_t>(c)] += de[static_cast<std::size_t>(n * d + c)];
  }
}

void TransformerNqs::backward(std::span<const OutputSeed> seeds, std::span<double> grad) {
  for (const auto& seed : seeds) backward(seed, grad);
}

std::vector<Bits> TransformerNqs::sample(int count, Rng& rng) {
  if (count < 1) throw ValidationError("sample count must be at least 1");
  std::vector<Bits> samples(static_cast<std::size_t>(count), 0);
  std::map<Bits, double> prob_one;
  for (int k = 0; k < cfg_.n_qubits; ++k) {
    prob_one.clear();
    for (Bits s : samples) prob_one.emplace(s, 0.0);
    for (auto& [prefix, p1] : prob_one) p1 = conditional_one(prefix, k);
    for (Bits& s : samples)
      if (rng.uniform() < prob_one[s]) s |= Bits{1} << k;
  }
  return samples;
}

StateVector TransformerNqs::statevector() {
  if (cfg_.n_qubits > 16) throw CapabilityError("NQS enumeration limited to 16 qubits");
  const Eigen::Index dim = Eigen::Index{1} << cfg_.n_qubits;
  StateVector psi(dim);
  for (Eigen::Index s = 0; s < dim; ++s) psi[s] = std::exp(forward(static_cast<Bits>(s)).log_amplitude());
  return psi;
}

std::vector<double> nqs_gradient(const NqsParameters& params, std::span<const OutputSeed> seeds) {
  std::vector<double> grad(params.size(), 0.0);
  TransformerNqs(params).backward(seeds, grad);
  return grad;
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad, double lr) {
  if (params.size() != grad.size()) throw DimensionError("gradient and parameters differ in size");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size()) throw DimensionError("optimizer state does not match parameters");
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

void save_checkpoint(const NqsParameters& params, const std::filesystem::path& path) {
  static_assert(std::endian::native == std::endian::little, "checkpoint writer assumes a little-endian host");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());
  const auto& c = params.config;
  out << "nqs-checkpoint n_qubits=" << c.n_qubits << " layers=" << c.layers << " heads=" << c.heads
      << " model_dim=" << c.model_dim << " seed=" << c.seed << " scale_attention=" << (c.scale_attention ? 1 : 0)
      << " count=" << params.values.size() << '\n';
  out.write(reinterpret_cast<const char*>(params.values.data()),
            static_cast<std::streamsize>(params.values.size() * sizeof(double)));
  if (!out) throw ConfigError("failed writing checkpoint " + path.string());
}

NqsParameters load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  std::string header;
  std::getline(in, header);
  std::istringstream fields(header);
  std::string magic;
  fields >> magic;
  if (magic != "nqs-checkpoint") throw ParseError("not an NQS checkpoint", 1);
  TransformerConfig cfg;
  std::size_t count = 0;
  std::string kv;
  while (fields >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ParseError("malformed header field '" + kv + "'", 1);
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    if (key == "n_qubits") cfg.n_qubits = std::stoi(value);
    else if (key == "layers") cfg.layers = std::stoi(value);
    else if (key == "heads") cfg.heads = std::stoi(value);
    else if (key == "model_dim") cfg.model_dim = std::stoi(value);
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "scale_attention") cfg.scale_attention = value == "1";
    else if (key == "count") count = std::stoull(value);
    else throw ParseError("unknown header field '" + key + "'", 1);
  }
  NqsParameters params(cfg);
  if (count != params.values.size()) throw ParseError("parameter count does not match the config", 1);
  in.read(reinterpret_cast<char*>(params.values.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(count * sizeof(double))) throw ParseError("truncated checkpoint", 1);
  return params;
}

}  // namespace nem
