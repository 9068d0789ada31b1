#pragma once

#include "adgnn/common.hpp"

namespace adgnn {

// Weights of the active diffusion recursion plus its iteration controls.
// alpha scales the ego term, beta the boundary (LoG) term, gamma the
// anomaly (Laplacian) term, and delta the propagated previous state.
struct DiffusionParams {
  double alpha = 0.12;
  double beta = 0.02;
  double gamma = 0.01;
  double delta = 0.85;
  Index K = 2;        // local-embedding iterations
  double tau = 0.5;   // passive-baseline step size
  Index T = 32;       // Neumann truncation

  void validate() const;
};

// A-priori Frobenius error bound of the truncated Neumann series,
// delta^(T+1) / (1 - delta), per unit source norm.
double neumann_error_bound(double delta, Index T);

}  // namespace adgnn
