#include "nem/exact.hpp"

#include <cmath>
#include <sstream>

#include "nem/rng.hpp"

namespace nem {

GroundState exact_ground_state(const PauliHamiltonian& h, const LanczosOptions& options) {
  if (h.n_qubits() > 16) throw CapabilityError("exact ground state limited to 16 qubits");
  const Eigen::Index dim = Eigen::Index{1} << h.n_qubits();
  const int krylov = static_cast<int>(std::min<Eigen::Index>(options.max_krylov, dim));

  Rng rng(options.seed);
  StateVector start(dim);
  for (Eigen::Index i = 0; i < dim; ++i) start[i] = cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
  start.normalize();

  Eigen::MatrixXcd basis(dim, krylov);
  StateVector w(dim);
  GroundState best;
  int total_iterations = 0;

  for (int restart = 0; restart <= options.max_restarts; ++restart) {
    std::vector<double> alpha, beta;
    basis.col(0) = start;
    int m = 0;
    for (int j = 0; j < krylov; ++j) {
      h.apply(basis.col(j), w);
      ++total_iterations;
      const double a = basis.col(j).dot(w).real();
      alpha.push_back(a);
      m = j + 1;
      // Full reorthogonalization, applied twice for stability.
      for (int pass = 0; pass < 2; ++pass) w -= basis.leftCols(m) * (basis.leftCols(m).adjoint() * w);
      const double b = w.norm();
      if (j + 1 == krylov || b < 1e-12) break;
      beta.push_back(b);
      basis.col(j + 1) = w / b;
    }

    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int j = 0; j < m; ++j) {
      t(j, j) = alpha[static_cast<std::size_t>(j)];
      if (j + 1 < m) t(j, j + 1) = t(j + 1, j) = beta[static_cast<std::size_t>(j)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t);
    const Eigen::VectorXd y = eig.eigenvectors().col(0);
    StateVector ritz = basis.leftCols(m) * y.cast<cplx>();
    ritz.normalize();
    const double energy = eig.eigenvalues()[0];
    const double residual = (h.apply(ritz) - energy * ritz).norm();
    best = {energy, ritz, residual, total_iterations};
    if (residual <= options.residual_tolerance) return best;
    start = ritz;
  }
  std::ostringstream msg;
  msg << "Lanczos did not converge: residual " << best.residual << " after " << total_iterations << " iterations";
  throw NumericalError(msg.str());
}

}  // namespace nem
