#pragma once

#include "adgnn/diffusion.hpp"
#include "adgnn/operators.hpp"

namespace adgnn {

struct EnergyParams {
  double lambda = 0.0;
  double epsilon = 0.0;
  double eta = 0.0;

  void validate() const;
};

// Representation-quality energy, trace form:
//   lambda |H - X*|_F^2 + epsilon |H - L A X*|_F^2 + eta |H - L X*|_F^2
//   + tr(H^T L H),
// with L taken from the bundle.
double energy(const Matrix& h, const Matrix& x_star, const OperatorBundle& bundle,
              const EnergyParams& ep);

// Same fitting terms with the smoothing term written as the pairwise sum
// (1/2) sum_ij A_hat_ij |h_i - h_j|^2, which equals the trace form built
// on the paper-degree Laplacian. The two routes cross-validate each other.
double energy_pairwise(const Matrix& h, const Matrix& x_star,
                       const OperatorBundle& bundle, const EnergyParams& ep);

// Gradient in the paper's convention (half the true gradient of the
// squared-norm energy; same stationary points):
//   lambda (H - X*) + epsilon (H - L A X*) + eta (H - L X*) + L H.
Matrix energy_gradient(const Matrix& h, const Matrix& x_star,
                       const OperatorBundle& bundle, const EnergyParams& ep);

// Closed-form minimizer
//   ((lambda + epsilon + eta + 1) I - A_hat)^{-1}
//     (lambda X* + epsilon L A X* + eta L X*).
// Valid only for the identity-degree Laplacian, where L = I - A_hat turns
// the stationarity condition into the form above.
Matrix energy_minimizer(const Matrix& x_star, const OperatorBundle& bundle,
                        const EnergyParams& ep);

// General minimizer for either Laplacian mode: solves
// ((lambda + epsilon + eta) I + L) H = RHS directly.
Matrix energy_minimizer_general(const Matrix& x_star, const OperatorBundle& bundle,
                                const EnergyParams& ep);

// The diffusion-to-energy parameter map lambda = alpha/delta,
// epsilon = beta/delta, eta = gamma/delta.
EnergyParams params_from_diffusion(const DiffusionParams& dp);

}  // namespace adgnn
