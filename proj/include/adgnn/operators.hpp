#pragma once

#include <memory>

#include "adgnn/graph.hpp"
#include "adgnn/matrix.hpp"
#include "adgnn/params.hpp"
#include "adgnn/sparse.hpp"

namespace adgnn {

// Which degree matrix the Laplacian subtracts the adjacency from.
// paper_degree uses D = diag(row sums of A_hat); identity_degree uses I,
// which is what the closed-form energy minimizer requires.
enum class LaplacianMode { paper_degree, identity_degree };

inline constexpr Index kDefaultDenseThreshold = 5000;

// Symmetric normalized adjacency with self-loops,
// D^{-1/2} (A + I) D^{-1/2} with D the self-loop degree matrix.
SparseOperator normalize_sym(const Graph& graph);

// Diagonal operator of row sums.
SparseOperator degree_matrix(const SparseOperator& op);

// D - A_hat (paper_degree) or I - A_hat (identity_degree).
SparseOperator laplacian(const SparseOperator& adj, LaplacianMode mode);

// The LoG operator L_hat * A_hat.
SparseOperator log_operator(const SparseOperator& adj, const SparseOperator& lap);

// Row-stochastic rescaling of a nonnegative operator; used by the passive
// diffusion baseline.
SparseOperator row_normalize(const SparseOperator& op);

// Everything the diffusion, energy, and model layers consume. Immutable
// after construction and safe for concurrent reads. The solver applies
// (I - delta * A_hat)^{-1} through an LU factorization; it is built only
// when num_nodes <= dense_threshold, otherwise callers take the Neumann
// path.
struct OperatorBundle {
  SparseOperator adj;      // A_hat
  SparseOperator lap;      // L_hat, per mode
  SparseOperator log_op;   // L_hat * A_hat
  LaplacianMode mode = LaplacianMode::paper_degree;
  double delta = 0.0;
  Index num_nodes = 0;
  std::shared_ptr<const LuFactorization> solver;

  bool has_dense_solver() const { return solver != nullptr; }

  // Solves (I - delta * A_hat) X = rhs. Throws NumericError when no dense
  // factorization was built (large graphs must use the Neumann path).
  Matrix solve_dense(const Matrix& rhs) const;
};

OperatorBundle precompute_operators(const Graph& graph, const DiffusionParams& params,
                                    LaplacianMode mode = LaplacianMode::paper_degree,
                                    Index dense_threshold = kDefaultDenseThreshold);

// Largest-magnitude eigenvalue estimate by power iteration; used by the
// property checks on A_hat's spectral radius.
double spectral_radius_estimate(const SparseOperator& op, Index iterations = 200,
                                std::uint64_t seed = 12345);

}  // namespace adgnn
