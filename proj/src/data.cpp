#include "adgnn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace adgnn {

namespace {

using nlohmann::json;

[[noreturn]] void file_error(const std::filesystem::path& file, std::size_t line,
                             const std::string& msg) {
  throw DataError(file.string() + ":" + std::to_string(line) + ": " + msg);
}

// Reads all lines, accepting LF and CRLF, dropping a trailing empty line.
std::vector<std::string> read_lines(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("missing file: " + file.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

double parse_real(const std::string& token, const std::filesystem::path& file,
                  std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0')
    file_error(file, line, "cannot parse real value '" + token + "'");
  if (!std::isfinite(v)) file_error(file, line, "non-finite feature value");
  return v;
}

Index parse_index(const std::string& token, const std::filesystem::path& file,
                  std::size_t line) {
  Index v = 0;
  const auto* begin = token.data();
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    file_error(file, line, "cannot parse integer '" + token + "'");
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  for (auto& s : out) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
  }
  return out;
}

Mask mask_from_indices(const json& arr, Index n, const std::filesystem::path& file,
                       const char* key) {
  Mask mask(static_cast<std::size_t>(n), 0);
  for (const auto& v : arr) {
    if (!v.is_number_integer())
      throw DataError(file.string() + ": split '" + key + "' holds a non-integer");
    const Index i = v.get<Index>();
    if (i < 0 || i >= n)
      throw DataError(file.string() + ": split '" + key + "' index " +
                      std::to_string(i) + " out of range");
    mask[static_cast<std::size_t>(i)] = 1;
  }
  return mask;
}

}  // namespace

void SplitSpec::validate() const {
  auto in01 = [](double f) { return f >= 0.0 && f <= 1.0; };
  if (!in01(train_frac) || !in01(valid_frac) || !in01(test_frac))
    throw ConfigError("SplitSpec: fractions must lie in [0, 1]");
  if (train_frac + valid_frac + test_frac > 1.0 + 1e-9)
    throw ConfigError("SplitSpec: fractions must sum to at most 1");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  ds.meta.name = dir.filename().string();

  // features.csv fixes the node count and dimension.
  const auto features_path = dir / "features.csv";
  const auto feature_lines = read_lines(features_path);
  if (feature_lines.empty()) throw DataError(features_path.string() + ": empty dataset");
  const Index n = static_cast<Index>(feature_lines.size());
  const Index d = static_cast<Index>(split_csv(feature_lines[0]).size());
  ds.features = Matrix(n, d);
  for (Index i = 0; i < n; ++i) {
    const auto tokens = split_csv(feature_lines[static_cast<std::size_t>(i)]);
    if (static_cast<Index>(tokens.size()) != d)
      file_error(features_path, static_cast<std::size_t>(i) + 1,
                 "expected " + std::to_string(d) + " values, found " +
                     std::to_string(tokens.size()));
    for (Index j = 0; j < d; ++j)
      ds.features(i, j) = parse_real(tokens[static_cast<std::size_t>(j)], features_path,
                                     static_cast<std::size_t>(i) + 1);
  }
  ds.meta.feature_dim = d;

  // labels.csv, with an optional '#classes=C' header.
  const auto labels_path = dir / "labels.csv";
  auto label_lines = read_lines(labels_path);
  Index declared_classes = -1;
  std::size_t first = 0;
  if (!label_lines.empty() && label_lines[0].rfind("#classes=", 0) == 0) {
    declared_classes = parse_index(label_lines[0].substr(9), labels_path, 1);
    first = 1;
  }
  if (static_cast<Index>(label_lines.size() - first) != n)
    throw DataError(labels_path.string() + ": node count mismatch: " +
                    std::to_string(label_lines.size() - first) + " labels for " +
                    std::to_string(n) + " nodes");
  ds.labels.resize(static_cast<std::size_t>(n));
  Index max_label = -1;
  for (Index i = 0; i < n; ++i) {
    const std::size_t ln = first + static_cast<std::size_t>(i);
    const Index label = parse_index(label_lines[ln], labels_path, ln + 1);
    if (label < 0) file_error(labels_path, ln + 1, "negative label");
    if (declared_classes >= 0 && label >= declared_classes)
      file_error(labels_path, ln + 1,
                 "label " + std::to_string(label) + " out of range [0, " +
                     std::to_string(declared_classes) + ")");
    max_label = std::max(max_label, label);
    ds.labels[static_cast<std::size_t>(i)] = label;
  }
  ds.meta.num_classes = declared_classes >= 0 ? declared_classes : max_label + 1;

  // edges.csv: one 'u,v' pair per line.
  const auto edges_path = dir / "edges.csv";
  const auto edge_lines = read_lines(edges_path);
  std::vector<std::pair<Index, Index>> raw;
  raw.reserve(edge_lines.size());
  for (std::size_t i = 0; i < edge_lines.size(); ++i) {
    if (edge_lines[i].empty()) file_error(edges_path, i + 1, "empty line");
    const auto tokens = split_csv(edge_lines[i]);
    if (tokens.size() != 2) file_error(edges_path, i + 1, "expected 'u,v'");
    const Index u = parse_index(tokens[0], edges_path, i + 1);
    const Index v = parse_index(tokens[1], edges_path, i + 1);
    if (u < 0 || v < 0 || u >= n || v >= n)
      file_error(edges_path, i + 1, "edge endpoint out of range [0, " +
                                        std::to_string(n) + ")");
    raw.emplace_back(u, v);
  }
  ds.graph = make_graph(n, raw);

  // Optional splits.json.
  const auto splits_path = dir / "splits.json";
  if (std::filesystem::exists(splits_path)) {
    std::ifstream in(splits_path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw DataError(splits_path.string() + ": " + e.what());
    }
    ds.train_mask = mask_from_indices(j.value("train", json::array()), n, splits_path,
                                      "train");
    ds.valid_mask = mask_from_indices(j.value("valid", json::array()), n, splits_path,
                                      "valid");
    ds.test_mask = mask_from_indices(j.value("test", json::array()), n, splits_path,
                                     "test");
    for (Index i = 0; i < n; ++i) {
      const int count = (ds.train_mask[static_cast<std::size_t>(i)] ? 1 : 0) +
                        (ds.valid_mask[static_cast<std::size_t>(i)] ? 1 : 0) +
                        (ds.test_mask[static_cast<std::size_t>(i)] ? 1 : 0);
      if (count > 1)
        throw DataError(splits_path.string() + ": node " + std::to_string(i) +
                        " assigned to multiple splits");
    }
  } else {
    ds.train_mask.assign(static_cast<std::size_t>(n), 0);
    ds.valid_mask.assign(static_cast<std::size_t>(n), 0);
    ds.test_mask.assign(static_cast<std::size_t>(n), 0);
  }

  ds.meta.homophily = ds.graph.edges.empty()
                          ? std::numeric_limits<double>::quiet_NaN()
                          : homophily_ratio(ds);
  return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "edges.csv");
    for (const auto& [u, v] : dataset.graph.edges) out << u << "," << v << "\n";
  }
  {
    std::ofstream out(dir / "features.csv");
    for (Index i = 0; i < dataset.features.rows(); ++i) {
      for (Index j = 0; j < dataset.features.cols(); ++j) {
        if (j) out << ",";
        out << format_real(dataset.features(i, j));
      }
      out << "\n";
    }
  }
  {
    std::ofstream out(dir / "labels.csv");
    out << "#classes=" << dataset.meta.num_classes << "\n";
    for (const Index label : dataset.labels) out << label << "\n";
  }
  const bool any_mask =
      std::any_of(dataset.train_mask.begin(), dataset.train_mask.end(),
                  [](std::uint8_t m) { return m != 0; }) ||
      std::any_of(dataset.valid_mask.begin(), dataset.valid_mask.end(),
                  [](std::uint8_t m) { return m != 0; }) ||
      std::any_of(dataset.test_mask.begin(), dataset.test_mask.end(),
                  [](std::uint8_t m) { return m != 0; });
  if (any_mask) {
    json j;
    auto indices = [](const Mask& mask) {
      std::vector<Index> out;
      for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) out.push_back(static_cast<Index>(i));
      return out;
    };
    j["train"] = indices(dataset.train_mask);
    j["valid"] = indices(dataset.valid_mask);
    j["test"] = indices(dataset.test_mask);
    std::ofstream out(dir / "splits.json");
    out << j.dump(2) << "\n";
  }
}

Dataset make_split(Dataset dataset, const SplitSpec& spec) {
  spec.validate();
  const Index n = dataset.num_nodes();
  dataset.train_mask.assign(static_cast<std::size_t>(n), 0);
  dataset.valid_mask.assign(static_cast<std::size_t>(n), 0);
  dataset.test_mask.assign(static_cast<std::size_t>(n), 0);

  std::vector<std::vector<Index>> groups;
  if (spec.per_class) {
    groups.resize(static_cast<std::size_t>(dataset.meta.num_classes));
    for (Index i = 0; i < n; ++i)
      groups[static_cast<std::size_t>(dataset.labels[static_cast<std::size_t>(i)])]
          .push_back(i);
    for (std::size_t c = 0; c < groups.size(); ++c) {
      if (groups[c].size() < 3)
        throw DataError("make_split: class " + std::to_string(c) + " has " +
                        std::to_string(groups[c].size()) +
                        " nodes; per-class splitting needs at least 3");
    }
  } else {
    groups.emplace_back();
    for (Index i = 0; i < n; ++i) groups[0].push_back(i);
  }

  const bool exhaustive =
      std::abs(spec.train_frac + spec.valid_frac + spec.test_frac - 1.0) <= 1e-9;
  Rng rng(spec.seed);
  for (auto& nodes : groups) {
    // Fisher-Yates with our own RNG keeps the shuffle portable.
    for (Index i = static_cast<Index>(nodes.size()) - 1; i > 0; --i) {
      const Index j = rng.uniform_index(i + 1);
      std::swap(nodes[static_cast<std::size_t>(i)], nodes[static_cast<std::size_t>(j)]);
    }
    const auto count = static_cast<double>(nodes.size());
    const Index n_train = static_cast<Index>(std::floor(spec.train_frac * count));
    const Index n_valid = static_cast<Index>(std::floor(spec.valid_frac * count));
    Index n_test = static_cast<Index>(std::floor(spec.test_frac * count));
    if (exhaustive) n_test = static_cast<Index>(nodes.size()) - n_train - n_valid;
    Index pos = 0;
    for (Index k = 0; k < n_train; ++k)
      dataset.train_mask[static_cast<std::size_t>(nodes[static_cast<std::size_t>(pos++)])] = 1;
    for (Index k = 0; k < n_valid; ++k)
      dataset.valid_mask[static_cast<std::size_t>(nodes[static_cast<std::size_t>(pos++)])] = 1;
    for (Index k = 0; k < n_test; ++k)
      dataset.test_mask[static_cast<std::size_t>(nodes[static_cast<std::size_t>(pos++)])] = 1;
  }
  return dataset;
}

double homophily_ratio(const Dataset& dataset) {
  if (dataset.graph.edges.empty()) throw DataError("homophily_ratio: graph has no edges");
  Index same = 0;
  for (const auto& [u, v] : dataset.graph.edges)
    if (dataset.labels[static_cast<std::size_t>(u)] ==
        dataset.labels[static_cast<std::size_t>(v)])
      ++same;
  return static_cast<double>(same) / static_cast<double>(dataset.graph.edges.size());
}

namespace {

// Samples every pair of a block independently with probability p using
// geometric index jumps, O(#edges) work.
void sample_block_edges(Rng& rng, double p, Index pair_count,
                        const std::function<void(Index)>& emit) {
  if (p <= 0.0 || pair_count <= 0) return;
  if (p >= 1.0) {
    for (Index i = 0; i < pair_count; ++i) emit(i);
    return;
  }
  const double log1mp = std::log1p(-p);
  double cursor = -1.0;
  while (true) {
    double u = rng.uniform();
    if (u >= 1.0) u = 0.0;
    cursor += 1.0 + std::floor(std::log1p(-u) / log1mp);
    if (cursor >= static_cast<double>(pair_count)) return;
    emit(static_cast<Index>(cursor));
  }
}

}  // namespace

Dataset gen_synthetic(Index n_nodes, Index n_classes, double homophily_target,
                      Index feature_dim, double feature_signal, std::uint64_t seed) {
  if (n_classes < 1 || feature_dim < 1)
    throw std::invalid_argument("gen_synthetic: class count and feature dim must be positive");
  if (n_nodes < 3 * n_classes)
    throw std::invalid_argument("gen_synthetic: need at least 3 nodes per class");
  if (homophily_target < 0.0 || homophily_target > 1.0)
    throw std::invalid_argument("gen_synthetic: homophily target must be in [0, 1]");

  constexpr double kMeanDegree = 10.0;
  constexpr int kMaxAttempts = 20;
  constexpr double kTolerance = 0.05;

  // Contiguous blocks per class; remainder nodes go to the first classes.
  std::vector<Index> class_of(static_cast<std::size_t>(n_nodes));
  std::vector<Index> block_start(static_cast<std::size_t>(n_classes) + 1, 0);
  {
    const Index base = n_nodes / n_classes;
    const Index extra = n_nodes % n_classes;
    Index pos = 0;
    for (Index c = 0; c < n_classes; ++c) {
      block_start[static_cast<std::size_t>(c)] = pos;
      const Index size = base + (c < extra ? 1 : 0);
      for (Index k = 0; k < size; ++k) class_of[static_cast<std::size_t>(pos++)] = c;
    }
    block_start[static_cast<std::size_t>(n_classes)] = pos;
  }

  const double mean_block = static_cast<double>(n_nodes) / static_cast<double>(n_classes);
  double p_in = homophily_target * kMeanDegree / std::max(1.0, mean_block - 1.0);
  double p_out = (1.0 - homophily_target) * kMeanDegree /
                 std::max(1.0, static_cast<double>(n_nodes) - mean_block);
  p_in = std::min(p_in, 1.0);
  p_out = std::min(p_out, 1.0);

  Rng rng(seed);
  double achieved = -1.0;
  Graph graph;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::vector<std::pair<Index, Index>> edges;
    for (Index a = 0; a < n_classes; ++a) {
      for (Index b = a; b < n_classes; ++b) {
        const Index a_lo = block_start[static_cast<std::size_t>(a)];
        const Index a_hi = block_start[static_cast<std::size_t>(a) + 1];
        const Index b_lo = block_start[static_cast<std::size_t>(b)];
        const Index b_hi = block_start[static_cast<std::size_t>(b) + 1];
        const Index sa = a_hi - a_lo;
        const Index sb = b_hi - b_lo;
        if (a == b) {
          const Index pairs = sa * (sa - 1) / 2;
          // Indices arrive in increasing order, so the row cursor of the
          // (i, j) unranking only ever advances.
          Index i = 0, row_start = 0, row_len = sa - 1;
          sample_block_edges(rng, p_in, pairs, [&](Index idx) {
            while (idx - row_start >= row_len) {
              row_start += row_len;
              --row_len;
              ++i;
            }
            const Index j = i + 1 + (idx - row_start);
            edges.emplace_back(a_lo + i, a_lo + j);
          });
        } else {
          const Index pairs = sa * sb;
          sample_block_edges(rng, p_out, pairs, [&](Index idx) {
            edges.emplace_back(a_lo + idx / sb, b_lo + idx % sb);
          });
        }
      }
    }
    graph = make_graph(n_nodes, edges);
    if (graph.edges.empty()) continue;
    Index same = 0;
    for (const auto& [u, v] : graph.edges)
      if (class_of[static_cast<std::size_t>(u)] == class_of[static_cast<std::size_t>(v)])
        ++same;
    achieved = static_cast<double>(same) / static_cast<double>(graph.edges.size());
    if (std::abs(achieved - homophily_target) <= kTolerance) break;
    graph.edges.clear();
  }
  if (graph.edges.empty()) {
    const std::string last =
        achieved < 0.0 ? std::string("no edges sampled") : "achieved " + format_real(achieved);
    throw DataError("gen_synthetic: homophily target " + format_real(homophily_target) +
                    " unreachable after 20 attempts (" + last + ")");
  }

  Dataset ds;
  ds.graph = std::move(graph);
  ds.labels.assign(class_of.begin(), class_of.end());
  ds.meta.name = "synthetic";
  ds.meta.num_classes = n_classes;
  ds.meta.feature_dim = feature_dim;

  // Class means scaled by the signal strength, unit Gaussian noise.
  Matrix means(n_classes, feature_dim);
  for (Index c = 0; c < n_classes; ++c)
    for (Index j = 0; j < feature_dim; ++j) means(c, j) = feature_signal * rng.normal();
  ds.features = Matrix(n_nodes, feature_dim);
  for (Index i = 0; i < n_nodes; ++i) {
    const Index c = ds.labels[static_cast<std::size_t>(i)];
    for (Index j = 0; j < feature_dim; ++j)
      ds.features(i, j) = means(c, j) + rng.normal();
  }

  ds.train_mask.assign(static_cast<std::size_t>(n_nodes), 0);
  ds.valid_mask.assign(static_cast<std::size_t>(n_nodes), 0);
  ds.test_mask.assign(static_cast<std::size_t>(n_nodes), 0);
  ds.meta.homophily = homophily_ratio(ds);
  return ds;
}

double dirichlet_energy(const Matrix& z, const OperatorBundle& bundle) {
  if (bundle.lap.cols() != z.rows())
    throw std::invalid_argument("dirichlet_energy: dimension mismatch");
  const Matrix lz = spmm(bundle.lap, z);
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) acc += z.data()[i] * lz.data()[i];
  return acc;
}

double dirichlet_energy_pairwise(const Matrix& z, const OperatorBundle& bundle) {
  const SparseOperator& adj = bundle.adj;
  if (adj.cols() != z.rows())
    throw std::invalid_argument("dirichlet_energy_pairwise: dimension mismatch");
  const Index n = adj.rows();
  std::vector<double> row_scale(static_cast<std::size_t>(n), 1.0);
  std::vector<double> weight_scale(static_cast<std::size_t>(n), 1.0);
  if (bundle.mode == LaplacianMode::identity_degree) {
    // Self-loop degree from A_hat's diagonal: A_hat_ii = 1 / degree_i.
    for (Index i = 0; i < n; ++i) {
      const double diag = adj.entry(i, i);
      if (diag <= 0.0)
        throw NumericError("dirichlet_energy_pairwise: missing self-loop entry");
      const double degree = 1.0 / diag;
      row_scale[static_cast<std::size_t>(i)] = std::sqrt(diag);   // 1/sqrt(degree)
      weight_scale[static_cast<std::size_t>(i)] = std::sqrt(degree);
    }
  }
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index e = adj.row_offsets()[static_cast<std::size_t>(i)];
         e < adj.row_offsets()[static_cast<std::size_t>(i) + 1]; ++e) {
      const Index j = adj.col_indices()[static_cast<std::size_t>(e)];
      if (j == i) continue;
      const double w = adj.values()[static_cast<std::size_t>(e)] *
                       weight_scale[static_cast<std::size_t>(i)] *
                       weight_scale[static_cast<std::size_t>(j)];
      double dist = 0.0;
      for (Index c = 0; c < z.cols(); ++c) {
        const double diff = row_scale[static_cast<std::size_t>(i)] * z(i, c) -
                            row_scale[static_cast<std::size_t>(j)] * z(j, c);
        dist += diff * diff;
      }
      acc += w * dist;
    }
  }
  return 0.5 * acc;
}

double min_pairwise_distance(const Matrix& z) {
  if (z.rows() < 2) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < z.rows(); ++i) {
    for (Index j = i + 1; j < z.rows(); ++j) {
      double dist = 0.0;
      for (Index c = 0; c < z.cols(); ++c) {
        const double d = z(i, c) - z(j, c);
        dist += d * d;
      }
      best = std::min(best, dist);
    }
  }
  return std::sqrt(best);
}

}  // namespace adgnn
