#include "adgnn/operators.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace adgnn {

SparseOperator normalize_sym(const Graph& graph) {
  if (graph.num_nodes == 0) throw DataError("empty graph");
  const Index n = graph.num_nodes;
  std::vector<double> degree(static_cast<std::size_t>(n), 1.0);  // self-loop
  for (const auto& [u, v] : graph.edges) {
    degree[static_cast<std::size_t>(u)] += 1.0;
    degree[static_cast<std::size_t>(v)] += 1.0;
  }
  std::vector<Triplet> t;
  t.reserve(graph.edges.size() * 2 + static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    t.push_back({i, i, 1.0 / degree[static_cast<std::size_t>(i)]});
  for (const auto& [u, v] : graph.edges) {
    // Degree products stay below 2^53, so the single square root loses
    // less than the two-factor form.
    const double w = 1.0 / std::sqrt(degree[static_cast<std::size_t>(u)] *
                                     degree[static_cast<std::size_t>(v)]);
    t.push_back({u, v, w});
    t.push_back({v, u, w});
  }
  return SparseOperator::from_triplets(n, n, std::move(t));
}

SparseOperator degree_matrix(const SparseOperator& op) {
  if (!op.square()) throw std::invalid_argument("degree_matrix: operator not square");
  return SparseOperator::diagonal(op.row_sums());
}

SparseOperator laplacian(const SparseOperator& adj, LaplacianMode mode) {
  if (!adj.square()) throw std::invalid_argument("laplacian: operator not square");
  const Index n = adj.rows();
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(adj.nnz()) + static_cast<std::size_t>(n));
  if (mode == LaplacianMode::paper_degree) {
    const auto sums = adj.row_sums();
    for (Index i = 0; i < n; ++i) t.push_back({i, i, sums[static_cast<std::size_t>(i)]});
  } else {
    for (Index i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  }
  for (Index r = 0; r < n; ++r) {
    for (Index e = adj.row_offsets()[static_cast<std::size_t>(r)];
         e < adj.row_offsets()[static_cast<std::size_t>(r) + 1]; ++e)
      t.push_back({r, adj.col_indices()[static_cast<std::size_t>(e)],
                   -adj.values()[static_cast<std::size_t>(e)]});
  }
  return SparseOperator::from_triplets(n, n, std::move(t));
}

SparseOperator log_operator(const SparseOperator& adj, const SparseOperator& lap) {
  if (lap.cols() != adj.rows())
    throw std::invalid_argument("log_operator: dimension mismatch");
  return sparse_matmul(lap, adj);
}

SparseOperator row_normalize(const SparseOperator& op) {
  auto sums = op.row_sums();
  for (double& s : sums) {
    if (s <= 0.0) throw NumericError("row_normalize: nonpositive row sum");
    s = 1.0 / s;
  }
  return op.scale_rows(sums);
}

Matrix OperatorBundle::solve_dense(const Matrix& rhs) const {
  if (!solver)
    throw NumericError(
        "dense factorization unavailable above the dense threshold; "
        "use the Neumann path");
  return solver->solve(rhs);
}

OperatorBundle precompute_operators(const Graph& graph, const DiffusionParams& params,
                                    LaplacianMode mode, Index dense_threshold) {
  params.validate();
  OperatorBundle bundle;
  bundle.adj = normalize_sym(graph);
  bundle.lap = laplacian(bundle.adj, mode);
  bundle.log_op = log_operator(bundle.adj, bundle.lap);
  bundle.mode = mode;
  bundle.delta = params.delta;
  bundle.num_nodes = graph.num_nodes;
  if (graph.num_nodes <= dense_threshold) {
    Matrix system = to_dense(bundle.adj);
    scale_in_place(system, -params.delta);
    for (Index i = 0; i < graph.num_nodes; ++i) system(i, i) += 1.0;
    bundle.solver = std::make_shared<const LuFactorization>(std::move(system));
  }
  return bundle;
}

double spectral_radius_estimate(const SparseOperator& op, Index iterations,
                                std::uint64_t seed) {
  if (!op.square()) throw std::invalid_argument("spectral_radius_estimate: not square");
  const Index n = op.rows();
  if (n == 0) return 0.0;
  Rng rng(seed);
  Mat<double> x(n, 1);
  for (Index i = 0; i < n; ++i) x(i, 0) = rng.normal();
  double norm = frobenius_norm(x);
  if (norm == 0.0) {
    x(0, 0) = 1.0;
    norm = 1.0;
  }
  scale_in_place(x, 1.0 / norm);
  double estimate = 0.0;
  for (Index it = 0; it < iterations; ++it) {
    Mat<double> y = spmm(op, x);
    const double ynorm = frobenius_norm(y);
    if (ynorm == 0.0) return 0.0;
    estimate = ynorm;
    scale_in_place(y, 1.0 / ynorm);
    x = std::move(y);
  }
  return estimate;
}

}  // namespace adgnn
