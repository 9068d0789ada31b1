#include "adgnn/energy.hpp"

#include <cmath>

namespace adgnn {

void EnergyParams::validate() const {
  if (lambda < 0.0 || epsilon < 0.0 || eta < 0.0)
    throw ConfigError("EnergyParams: lambda, epsilon, eta must be nonnegative");
  if (lambda == 0.0 && epsilon == 0.0 && eta == 0.0)
    throw ConfigError("EnergyParams: at least one of lambda, epsilon, eta must be positive");
}

namespace {

struct EnergyTargets {
  Matrix boundary;  // L A X*
  Matrix anomaly;   // L X*
};

EnergyTargets targets(const Matrix& x_star, const OperatorBundle& bundle) {
  return {spmm(bundle.log_op, x_star), spmm(bundle.lap, x_star)};
}

double squared_diff(const Matrix& a, const Matrix& b) {
  const double d = frobenius_diff(a, b);
  return d * d;
}

double trace_quadratic(const Matrix& h, const SparseOperator& lap) {
  const Matrix lh = spmm(lap, h);
  double acc = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) acc += h.data()[i] * lh.data()[i];
  return acc;
}

void check_shapes(const Matrix& h, const Matrix& x_star, const OperatorBundle& bundle) {
  if (!h.same_shape(x_star) || bundle.adj.cols() != h.rows())
    throw std::invalid_argument("energy: shape mismatch");
}

}  // namespace

double energy(const Matrix& h, const Matrix& x_star, const OperatorBundle& bundle,
              const EnergyParams& ep) {
  check_shapes(h, x_star, bundle);
  const auto [boundary, anomaly] = targets(x_star, bundle);
  return ep.lambda * squared_diff(h, x_star) + ep.epsilon * squared_diff(h, boundary) +
         ep.eta * squared_diff(h, anomaly) + trace_quadratic(h, bundle.lap);
}

double energy_pairwise(const Matrix& h, const Matrix& x_star,
                       const OperatorBundle& bundle, const EnergyParams& ep) {
  check_shapes(h, x_star, bundle);
  const auto [boundary, anomaly] = targets(x_star, bundle);
  const SparseOperator& adj = bundle.adj;
  double smooth = 0.0;
  for (Index i = 0; i < adj.rows(); ++i) {
    for (Index e = adj.row_offsets()[static_cast<std::size_t>(i)];
         e < adj.row_offsets()[static_cast<std::size_t>(i) + 1]; ++e) {
      const Index j = adj.col_indices()[static_cast<std::size_t>(e)];
      const double w = adj.values()[static_cast<std::size_t>(e)];
      double dist = 0.0;
      for (Index c = 0; c < h.cols(); ++c) {
        const double d = h(i, c) - h(j, c);
        dist += d * d;
      }
      smooth += w * dist;
    }
  }
  smooth *= 0.5;
  return ep.lambda * squared_diff(h, x_star) + ep.epsilon * squared_diff(h, boundary) +
         ep.eta * squared_diff(h, anomaly) + smooth;
}

Matrix energy_gradient(const Matrix& h, const Matrix& x_star,
                       const OperatorBundle& bundle, const EnergyParams& ep) {
  check_shapes(h, x_star, bundle);
  const auto [boundary, anomaly] = targets(x_star, bundle);
  Matrix grad = spmm(bundle.lap, h);
  const double s = ep.lambda + ep.epsilon + ep.eta;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad.data()[i] += s * h.data()[i] - ep.lambda * x_star.data()[i] -
                      ep.epsilon * boundary.data()[i] - ep.eta * anomaly.data()[i];
  }
  return grad;
}

namespace {

Matrix minimizer_rhs(const Matrix& x_star, const OperatorBundle& bundle,
                     const EnergyParams& ep) {
  const auto [boundary, anomaly] = targets(x_star, bundle);
  Matrix rhs = x_star;
  scale_in_place(rhs, ep.lambda);
  axpy(rhs, ep.epsilon, boundary);
  axpy(rhs, ep.eta, anomaly);
  return rhs;
}

}  // namespace

Matrix energy_minimizer(const Matrix& x_star, const OperatorBundle& bundle,
                        const EnergyParams& ep) {
  ep.validate();
  if (bundle.mode != LaplacianMode::identity_degree)
    throw NumericError("minimizer requires identity-degree Laplacian");
  if (bundle.adj.cols() != x_star.rows())
    throw std::invalid_argument("energy_minimizer: shape mismatch");
  const double s = ep.lambda + ep.epsilon + ep.eta + 1.0;
  Matrix system = to_dense(bundle.adj);
  scale_in_place(system, -1.0);
  for (Index i = 0; i < system.rows(); ++i) system(i, i) += s;
  const LuFactorization lu(std::move(system));
  return lu.solve(minimizer_rhs(x_star, bundle, ep));
}

Matrix energy_minimizer_general(const Matrix& x_star, const OperatorBundle& bundle,
                                const EnergyParams& ep) {
  ep.validate();
  if (bundle.adj.cols() != x_star.rows())
    throw std::invalid_argument("energy_minimizer_general: shape mismatch");
  const double s = ep.lambda + ep.epsilon + ep.eta;
  Matrix system = to_dense(bundle.lap);
  for (Index i = 0; i < system.rows(); ++i) system(i, i) += s;
  const LuFactorization lu(std::move(system));
  return lu.solve(minimizer_rhs(x_star, bundle, ep));
}

EnergyParams params_from_diffusion(const DiffusionParams& dp) {
  dp.validate();
  return {dp.alpha / dp.delta, dp.beta / dp.delta, dp.gamma / dp.delta};
}

}  // namespace adgnn
