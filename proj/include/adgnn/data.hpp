#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "adgnn/graph.hpp"
#include "adgnn/matrix.hpp"
#include "adgnn/model.hpp"
#include "adgnn/operators.hpp"

namespace adgnn {

struct DatasetMeta {
  std::string name;
  Index num_classes = 0;
  Index feature_dim = 0;
  double homophily = 0.0;  // NaN when the graph has no edges
};

struct Dataset {
  Graph graph;
  Matrix features;  // N x d
  Labels labels;    // values in [0, num_classes)
  Mask train_mask, valid_mask, test_mask;
  DatasetMeta meta;

  Index num_nodes() const { return graph.num_nodes; }
};

struct SplitSpec {
  double train_frac = 0.48;
  double valid_frac = 0.32;
  double test_frac = 0.20;
  bool per_class = true;
  std::uint64_t seed = 0;

  void validate() const;
};

// Canonical dataset directory: edges.csv, features.csv, labels.csv and an
// optional splits.json. Errors name the offending file and line.
Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

// Stratified random split. Per split the node count is floor(frac * n);
// when the fractions sum to 1 the rounding remainder goes to test,
// otherwise the remainder stays unassigned.
Dataset make_split(Dataset dataset, const SplitSpec& spec);

// Fraction of undirected edges whose endpoints share a label.
double homophily_ratio(const Dataset& dataset);

// Stochastic block model with intra/inter rates solved from the homophily
// target at mean degree 10, plus class-mean Gaussian features whose
// separation is controlled by feature_signal. Resamples up to 20 times if
// the realized homophily misses the target by more than 0.05.
Dataset gen_synthetic(Index n_nodes, Index n_classes, double homophily_target,
                      Index feature_dim, double feature_signal, std::uint64_t seed);

// Smoothness of Z over the graph, trace form tr(Z^T L Z) with the
// bundle's Laplacian.
double dirichlet_energy(const Matrix& z, const OperatorBundle& bundle);

// Pairwise route to the same quantity. In paper-degree mode this is
// (1/2) sum_ij A_hat_ij |z_i - z_j|^2; in identity-degree mode the rows
// are first scaled by the inverse square-root self-loop degrees (read off
// A_hat's diagonal), which makes the sum equal tr(Z^T (I - A_hat) Z).
double dirichlet_energy_pairwise(const Matrix& z, const OperatorBundle& bundle);

// Smallest Euclidean distance between two distinct rows; 0 when fewer
// than two rows.
double min_pairwise_distance(const Matrix& z);

}  // namespace adgnn
