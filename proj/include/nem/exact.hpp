#pragma once

#include <cstdint>

#include "nem/pauli.hpp"

namespace nem {

struct LanczosOptions {
  int max_krylov = 200;
  int max_restarts = 20;
  double residual_tolerance = 1e-8;
  std::uint64_t seed = 12345;
};

struct GroundState {
  double energy = 0.0;
  StateVector state;
  double residual = 0.0;
  int iterations = 0;
};

// Lowest eigenpair by restarted Lanczos with full reorthogonalization,
// applying H matrix-free. Throws NumericalError carrying the residual when
// the restarts are exhausted.
GroundState exact_ground_state(const PauliHamiltonian& h, const LanczosOptions& options = {});

}  // namespace nem
