#pragma once

// Test-side reference implementations, deliberately independent of the
// library's CSR / LU code paths: plain dense triple loops and
// Gauss-Jordan elimination. Expected values asserted in the suites are
// computed through these.

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "adgnn/graph.hpp"
#include "adgnn/matrix.hpp"
#include "adgnn/params.hpp"
#include "adgnn/sparse.hpp"

namespace oracle {

using adgnn::Graph;
using adgnn::Index;
using adgnn::Matrix;
using adgnn::Rng;

inline Matrix dense_matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("oracle: shape");
  Matrix c(a.rows(), b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (Index k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  return c;
}

// Gauss-Jordan inverse (no pivot-free shortcuts; partial pivoting).
inline Matrix dense_inverse(Matrix a) {
  const Index n = a.rows();
  if (n != a.cols()) throw std::invalid_argument("oracle: inverse needs square");
  Matrix inv(n, n);
  for (Index i = 0; i < n; ++i) inv(i, i) = 1.0;
  for (Index k = 0; k < n; ++k) {
    Index piv = k;
    for (Index i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (a(piv, k) == 0.0) throw std::runtime_error("oracle: singular");
    if (piv != k)
      for (Index j = 0; j < n; ++j) {
        std::swap(a(k, j), a(piv, j));
        std::swap(inv(k, j), inv(piv, j));
      }
    const double scale = 1.0 / a(k, k);
    for (Index j = 0; j < n; ++j) {
      a(k, j) *= scale;
      inv(k, j) *= scale;
    }
    for (Index i = 0; i < n; ++i) {
      if (i == k) continue;
      const double f = a(i, k);
      if (f == 0.0) continue;
      for (Index j = 0; j < n; ++j) {
        a(i, j) -= f * a(k, j);
        inv(i, j) -= f * inv(k, j);
      }
    }
  }
  return inv;
}

inline Matrix dense_identity(Index n) {
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

inline Matrix dense_power(const Matrix& a, Index p) {
  Matrix acc = dense_identity(a.rows());
  for (Index t = 0; t < p; ++t) acc = dense_matmul(acc, a);
  return acc;
}

inline double rel_fro_diff(const Matrix& a, const Matrix& b) {
  const double denom = std::max(adgnn::frobenius_norm(a), adgnn::frobenius_norm(b));
  if (denom == 0.0) return 0.0;
  return adgnn::frobenius_diff(a, b) / denom;
}

// Erdos-Renyi-style random graph at a target mean degree, retried until
// it has at least one edge.
inline Graph random_graph(Rng& rng, Index n, double mean_degree) {
  const double p = std::min(1.0, mean_degree / std::max<double>(1.0, n - 1));
  for (int attempt = 0; attempt < 50; ++attempt) {
    std::vector<std::pair<Index, Index>> edges;
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j)
        if (rng.uniform() < p) edges.emplace_back(i, j);
    if (!edges.empty() || n == 1) return adgnn::make_graph(n, edges);
  }
  throw std::runtime_error("oracle: failed to sample a graph with edges");
}

inline Matrix random_matrix(Rng& rng, Index rows, Index cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

// Random diffusion weights on the constraint simplex with
// delta in [0.2, 0.9].
inline adgnn::DiffusionParams random_simplex_params(Rng& rng) {
  adgnn::DiffusionParams dp;
  dp.delta = rng.uniform(0.2, 0.9);
  const double rest = 1.0 - dp.delta;
  double a = rng.uniform(), b = rng.uniform(), c = rng.uniform();
  const double sum = a + b + c;
  dp.alpha = rest * a / sum;
  dp.beta = rest * b / sum;
  dp.gamma = rest - dp.alpha - dp.beta;  // exact residual keeps the sum at 1
  return dp;
}

}  // namespace oracle
