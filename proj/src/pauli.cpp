#include "nem/pauli.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace nem {

namespace {

constexpr double kDropTolerance = 1e-12;
constexpr double kHermitianTolerance = 1e-12;
constexpr double kNormTolerance = 1e-8;

const cplx kI{0.0, 1.0};

// Single-qubit product table: a*b = phase * result.
std::pair<cplx, Pauli> multiply_single(Pauli a, Pauli b) {
  if (a == Pauli::I) return {1.0, b};
  if (b == Pauli::I) return {1.0, a};
  if (a == b) return {1.0, Pauli::I};
  // XY = iZ, YZ = iX, ZX = iY; reversed order picks up -i.
  const int ia = static_cast<int>(a), ib = static_cast<int>(b);
  const int ic = 6 - ia - ib;
  const bool cyclic = (ia == 1 && ib == 2) || (ia == 2 && ib == 3) || (ia == 3 && ib == 1);
  return {cyclic ? kI : -kI, static_cast<Pauli>(ic)};
}

void check_normalized(double norm_sq) {
  if (std::abs(std::sqrt(norm_sq) - 1.0) > kNormTolerance)
    throw ValidationError("state is not normalized: |psi| = " + std::to_string(std::sqrt(norm_sq)));
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

char pauli_char(Pauli p) {
  static constexpr char table[] = {'I', 'X', 'Y', 'Z'};
  return table[static_cast<int>(p)];
}

Pauli pauli_from_char(char c) {
  switch (c) {
    case 'I': return Pauli::I;
    case 'X': return Pauli::X;
    case 'Y': return Pauli::Y;
    case 'Z': return Pauli::Z;
    default: throw ValidationError(std::string("invalid Pauli character '") + c + "'");
  }
}

PauliString PauliString::parse(std::string_view label, cplx coeff) {
  std::vector<Pauli> ops;
  ops.reserve(label.size());
  for (char c : label) ops.push_back(pauli_from_char(c));
  return {std::move(ops), coeff};
}

std::string PauliString::label() const {
  std::string out;
  out.reserve(ops.size());
  for (Pauli p : ops) out.push_back(pauli_char(p));
  return out;
}

bool PauliString::is_identity() const {
  for (Pauli p : ops)
    if (p != Pauli::I) return false;
  return true;
}

Bits PauliString::x_mask() const {
  Bits m = 0;
  for (int q = 0; q < size(); ++q)
    if (ops[q] == Pauli::X || ops[q] == Pauli::Y) m |= Bits{1} << q;
  return m;
}

Bits PauliString::z_mask() const {
  Bits m = 0;
  for (int q = 0; q < size(); ++q)
    if (ops[q] == Pauli::Z || ops[q] == Pauli::Y) m |= Bits{1} << q;
  return m;
}

int PauliString::y_count() const {
  int c = 0;
  for (Pauli p : ops) c += p == Pauli::Y;
  return c;
}

int PauliString::weight() const {
  int c = 0;
  for (Pauli p : ops) c += p != Pauli::I;
  return c;
}

PauliString multiply(const PauliString& a, const PauliString& b) {
  if (a.size() != b.size()) throw DimensionError("Pauli strings of different length");
  PauliString out;
  out.ops.resize(a.ops.size());
  cplx phase = a.coefficient * b.coefficient;
  for (std::size_t q = 0; q < a.ops.size(); ++q) {
    auto [ph, p] = multiply_single(a.ops[q], b.ops[q]);
    phase *= ph;
    out.ops[q] = p;
  }
  out.coefficient = phase;
  return out;
}

CompiledTerm compile(const PauliString& p) {
  if (p.size() > kMaxQubits) throw CapabilityError("Pauli string longer than supported qubit count");
  cplx factor = p.coefficient;
  for (int k = 0; k < p.y_count() % 4; ++k) factor *= kI;
  return {p.x_mask(), p.z_mask(), factor};
}

PauliAction pauli_apply(const PauliString& p, std::span<const std::uint8_t> s) {
  if (static_cast<int>(s.size()) != p.size())
    throw DimensionError("bitstring length " + std::to_string(s.size()) + " does not match Pauli string length " +
                         std::to_string(p.size()));
  Bits packed = 0;
  for (std::size_t q = 0; q < s.size(); ++q) {
    if (s[q] > 1) throw ValidationError("bit values must be 0 or 1");
    if (s[q]) packed |= Bits{1} << q;
  }
  return compile(p).apply(packed);
}

PauliHamiltonian::PauliHamiltonian(int n_qubits, const std::vector<PauliString>& terms, double identity_offset)
    : n_qubits_(n_qubits), identity_offset_(identity_offset) {
  if (n_qubits < 1 || n_qubits > kMaxQubits)
    throw ValidationError("qubit count must be in [1, " + std::to_string(kMaxQubits) + "]");
  std::map<std::string, cplx> merged;
  cplx offset = identity_offset;
  for (const auto& t : terms) {
    if (t.size() != n_qubits) throw DimensionError("term " + t.label() + " does not have " + std::to_string(n_qubits) + " qubits");
    if (!std::isfinite(t.coefficient.real()) || !std::isfinite(t.coefficient.imag()))
      throw ValidationError("non-finite coefficient on term " + t.label());
    if (t.is_identity())
      offset += t.coefficient;
    else
      merged[t.label()] += t.coefficient;
  }
  if (std::abs(offset.imag()) > kHermitianTolerance) throw ValidationError("identity coefficient is not real");
  identity_offset_ = offset.real();
  for (const auto& [label, c] : merged) {
    if (std::abs(c.imag()) > kHermitianTolerance)
      throw ValidationError("non-Hermitian coefficient on term " + label);
    if (std::abs(c.real()) < kDropTolerance) continue;
    terms_.push_back(PauliString::parse(label, c.real()));
  }
  compiled_.reserve(terms_.size());
  for (const auto& t : terms_) compiled_.push_back(compile(t));
}

bool PauliHamiltonian::equivalent(const PauliHamiltonian& other, double tol) const {
  if (n_qubits_ != other.n_qubits_ || terms_.size() != other.terms_.size()) return false;
  if (std::abs(identity_offset_ - other.identity_offset_) > tol) return false;
  std::map<std::string, cplx> mine;
  for (const auto& t : terms_) mine[t.label()] = t.coefficient;
  for (const auto& t : other.terms_) {
    auto it = mine.find(t.label());
    if (it == mine.end() || std::abs(it->second - t.coefficient) > tol) return false;
  }
  return true;
}

void PauliHamiltonian::apply(const StateVector& in, StateVector& out) const {
  const Eigen::Index dim = Eigen::Index{1} << n_qubits_;
  if (in.size() != dim) throw DimensionError("state dimension does not match Hamiltonian");
  out = in * identity_offset_;
  for (const auto& term : compiled_) {
    for (Eigen::Index s = 0; s < dim; ++s) {
      const auto act = term.apply(static_cast<Bits>(s));
      out[static_cast<Eigen::Index>(act.target)] += act.amplitude * in[s];
    }
  }
}

StateVector PauliHamiltonian::apply(const StateVector& in) const {
  StateVector out;
  apply(in, out);
  return out;
}

Eigen::MatrixXcd PauliHamiltonian::dense() const {
  if (n_qubits_ > 14) throw CapabilityError("dense assembly limited to 14 qubits");
  const Eigen::Index dim = Eigen::Index{1} << n_qubits_;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(dim, dim) * identity_offset_;
  for (const auto& term : compiled_)
    for (Eigen::Index s = 0; s < dim; ++s) {
      const auto act = term.apply(static_cast<Bits>(s));
      m(static_cast<Eigen::Index>(act.target), s) += act.amplitude;
    }
  return m;
}

namespace {

// Operator-valued polynomial used while assembling the Schwinger model.
class PauliSum {
public:
  explicit PauliSum(int n) : n_(n) {}

  void add(const PauliString& p) { terms_[p.label()] += p.coefficient; }
  void add(const PauliSum& other, cplx scale = 1.0) {
    for (const auto& [l, c] : other.terms_) terms_[l] += scale * c;
  }
  void add_identity(cplx c) { terms_[std::string(static_cast<std::size_t>(n_), 'I')] += c; }

  PauliSum operator*(const PauliSum& other) const {
    PauliSum out(n_);
    for (const auto& [la, ca] : terms_)
      for (const auto& [lb, cb] : other.terms_) out.add(multiply(PauliString::parse(la, ca), PauliString::parse(lb, cb)));
    return out;
  }

  std::vector<PauliString> strings() const {
    std::vector<PauliString> out;
    for (const auto& [l, c] : terms_) out.push_back(PauliString::parse(l, c));
    return out;
  }

private:
  int n_;
  std::map<std::string, cplx> terms_;
};

PauliString single(int n, int q, Pauli p, cplx coeff = 1.0) {
  std::vector<Pauli> ops(static_cast<std::size_t>(n), Pauli::I);
  ops[static_cast<std::size_t>(q)] = p;
  return {std::move(ops), coeff};
}

PauliString pair(int n, int q1, int q2, Pauli p, cplx coeff = 1.0) {
  std::vector<Pauli> ops(static_cast<std::size_t>(n), Pauli::I);
  ops[static_cast<std::size_t>(q1)] = p;
  ops[static_cast<std::size_t>(q2)] = p;
  return {std::move(ops), coeff};
}

double alternating(int site) { return (site % 2 == 0) ? 1.0 : -1.0; }

}  // namespace

PauliHamiltonian build_schwinger(const SchwingerParams& p) {
  const int n = p.n_sites;
  if (n < 2 || n % 2 != 0) throw ValidationError("Schwinger model needs an even, positive number of sites");
  if (n > kMaxQubits) throw CapabilityError("too many sites");
  PauliSum h(n);
  for (int j = 1; j < n; ++j) {
    h.add(pair(n, j - 1, j, Pauli::X, p.w / 2));
    h.add(pair(n, j - 1, j, Pauli::Y, p.w / 2));
  }
  for (int j = 1; j <= n; ++j) h.add(single(n, j - 1, Pauli::Z, p.mass / 2 * alternating(j)));

  PauliSum field(n);
  field.add_identity(p.epsilon0);
  for (int j = 1; j <= n; ++j) {
    field.add(single(n, j - 1, Pauli::Z, -0.5));
    field.add_identity(-0.5 * alternating(j));
    h.add(field * field, p.g_bar);
  }
  return PauliHamiltonian(n, h.strings());
}

PauliHamiltonian parse_hamiltonian(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  int n = -1;
  std::vector<PauliString> terms;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('#'));
    line = trim(line);
    if (line.empty()) continue;
    std::istringstream fields(line);
    if (n < 0) {
      std::string key;
      if (!(fields >> key >> n) || key != "qubits" || n < 1 || n > kMaxQubits)
        throw ParseError("expected header 'qubits <N>'", line_no);
      std::string extra;
      if (fields >> extra) throw ParseError("unexpected token '" + extra + "' after header", line_no);
      continue;
    }
    std::string coeff_text, label, extra;
    if (!(fields >> coeff_text >> label)) throw ParseError("expected '<coefficient> <pauli string>'", line_no);
    if (fields >> extra) throw ParseError("unexpected token '" + extra + "'", line_no);
    double coeff = 0.0;
    std::size_t used = 0;
    try {
      coeff = std::stod(coeff_text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != coeff_text.size() || !std::isfinite(coeff))
      throw ParseError("invalid coefficient '" + coeff_text + "'", line_no);
    if (static_cast<int>(label.size()) != n)
      throw ParseError("Pauli string '" + label + "' has length " + std::to_string(label.size()) + ", expected " +
                           std::to_string(n),
                       line_no);
    for (char c : label)
      if (c != 'I' && c != 'X' && c != 'Y' && c != 'Z')
        throw ParseError(std::string("invalid Pauli character '") + c + "' in '" + label + "'", line_no);
    terms.push_back(PauliString::parse(label, coeff));
  }
  if (n < 0) throw ParseError("missing 'qubits <N>' header", line_no);
  return PauliHamiltonian(n, terms);
}

PauliHamiltonian load_hamiltonian(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open Hamiltonian file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_hamiltonian(buf.str());
}

std::string format_hamiltonian(const PauliHamiltonian& h) {
  std::ostringstream out;
  out << "qubits " << h.n_qubits() << '\n';
  out << std::setprecision(17);
  if (h.identity_offset() != 0.0) out << h.identity_offset() << ' ' << std::string(static_cast<std::size_t>(h.n_qubits()), 'I') << '\n';
  for (const auto& t : h.terms()) out << t.coefficient.real() << ' ' << t.label() << '\n';
  return out.str();
}

void save_hamiltonian(const PauliHamiltonian& h, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write Hamiltonian file " + path.string());
  out << format_hamiltonian(h);
}

int qubit_count_for_dimension(Eigen::Index dim) {
  int n = 0;
  while ((Eigen::Index{1} << n) < dim) ++n;
  if ((Eigen::Index{1} << n) != dim || n == 0) throw DimensionError("dimension is not a power of two");
  return n;
}

double expectation(const PauliHamiltonian& h, const StateVector& psi) {
  check_normalized(psi.squaredNorm());
  const cplx value = psi.dot(h.apply(psi));
  if (std::abs(value.imag()) > 1e-10) throw NumericalError("expectation has imaginary part " + std::to_string(value.imag()));
  return value.real();
}

double expectation(const PauliHamiltonian& h, const DensityMatrix& rho) {
  const Eigen::Index dim = Eigen::Index{1} << h.n_qubits();
  if (rho.rows() != dim || rho.cols() != dim) throw DimensionError("density matrix dimension does not match Hamiltonian");
  cplx value = rho.trace() * h.identity_offset();
  for (const auto& term : h.compiled())
    for (Eigen::Index s = 0; s < dim; ++s) {
      const auto act = term.apply(static_cast<Bits>(s));
      value += act.amplitude * rho(s, static_cast<Eigen::Index>(act.target));
    }
  if (std::abs(value.imag()) > 1e-10) throw NumericalError("expectation has imaginary part " + std::to_string(value.imag()));
  return value.real();
}

double order_parameter_from_probabilities(std::span<const double> probabilities, int n) {
  if (n < 2) throw ValidationError("order parameter needs at least two sites");
  if (probabilities.size() != (std::size_t{1} << n)) throw DimensionError("probability vector has wrong length");
  // (1 + (-1)^j Z_j) is 2 on "occupied" sites and 0 otherwise, so each pair contributes 4 when both are occupied.
  Bits occupied_pattern = 0;
  for (int j = 1; j <= n; ++j)
    if (j % 2 == 1) occupied_pattern |= Bits{1} << (j - 1);  // odd site: Z = -1, i.e. bit 1
  const double norm = 1.0 / (2.0 * n * (n - 1));
  double total = 0.0;
  for (std::size_t s = 0; s < probabilities.size(); ++s) {
    if (probabilities[s] == 0.0) continue;
    // Odd sites are occupied when the bit is set, even sites when it is clear.
    const Bits occ = ~(static_cast<Bits>(s) ^ occupied_pattern) & ((Bits{1} << n) - 1);
    const int k = std::popcount(occ);
    total += probabilities[s] * 4.0 * (k * (k - 1) / 2);
  }
  return total * norm;
}

double order_parameter(const StateVector& psi, int n) {
  check_normalized(psi.squaredNorm());
  const Eigen::VectorXd p = psi.cwiseAbs2();
  return order_parameter_from_probabilities({p.data(), static_cast<std::size_t>(p.size())}, n);
}

double order_parameter(const DensityMatrix& rho, int n) {
  const Eigen::VectorXd p = rho.diagonal().real();
  return order_parameter_from_probabilities({p.data(), static_cast<std::size_t>(p.size())}, n);
}

double renyi2_entropy(const StateVector& psi, int k) {
  const int n = qubit_count_for_dimension(psi.size());
  if (k < 1 || k >= n) throw ValidationError("partition size must satisfy 1 <= k < N");
  const Eigen::Index da = Eigen::Index{1} << k;
  // Index i = a + da * b, so column-major reshape gives M(a, b).
  Eigen::Map<const Eigen::MatrixXcd> m(psi.data(), da, psi.size() / da);
  const Eigen::MatrixXcd rho_a = m * m.adjoint() / psi.squaredNorm();
  return -std::log(rho_a.squaredNorm());
}

double renyi2_entropy(const DensityMatrix& rho, int k) {
  const int n = qubit_count_for_dimension(rho.rows());
  if (k < 1 || k >= n) throw ValidationError("partition size must satisfy 1 <= k < N");
  const Eigen::Index da = Eigen::Index{1} << k;
  const Eigen::Index db = rho.rows() / da;
  Eigen::MatrixXcd rho_a = Eigen::MatrixXcd::Zero(da, da);
  for (Eigen::Index b = 0; b < db; ++b) rho_a += rho.block(b * da, b * da, da, da);
  return -std::log(rho_a.squaredNorm());
}

}  // namespace nem
