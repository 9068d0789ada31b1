// Acceptance suite: one line per criterion, every tolerance pinned in
// code. Exits nonzero if any criterion fails. Needs ADGNN_DATA_DIR for
// the Cora criteria.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "adgnn/data.hpp"
#include "adgnn/diffusion.hpp"
#include "adgnn/energy.hpp"
#include "adgnn/model.hpp"
#include "oracle.hpp"

using namespace adgnn;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  int id;
  std::string name;
  double time_limit_seconds;
  std::function<bool(std::string&)> body;
};

DiffusionParams simple_params(double alpha, double beta, double gamma, double delta) {
  DiffusionParams dp;
  dp.alpha = alpha;
  dp.beta = beta;
  dp.gamma = gamma;
  dp.delta = delta;
  return dp;
}

// 1. Closed-form equivalence: iterating Eq. 7 reaches the Eq. 10 solution.
bool closed_form_equivalence(std::string& detail) {
  Rng rng(1001);
  double worst = 0.0;
  for (int g_trial = 0; g_trial < 10; ++g_trial) {
    const Index n = 10 + rng.uniform_index(191);  // N in [10, 200]
    const Graph g = oracle::random_graph(rng, n, 6.0);
    for (int p_trial = 0; p_trial < 3; ++p_trial) {
      const DiffusionParams dp = oracle::random_simplex_params(rng);
      const auto bundle = precompute_operators(g, dp);
      const Matrix x = oracle::random_matrix(rng, n, 4);
      const Matrix h_star = diffuse_global_dense(x, bundle, dp);
      const Matrix source = source_term(x, bundle, dp);
      const Index k = static_cast<Index>(
          std::ceil(std::log(1e-9) / std::log(dp.delta)));
      Matrix h = x;
      for (Index step = 0; step < k; ++step)
        h = active_step(h, source, bundle.adj, dp.delta);
      const double rel = frobenius_diff(h, h_star) / frobenius_norm(h_star);
      worst = std::max(worst, rel);
    }
  }
  detail = "worst relative gap " + format_real(worst);
  return worst <= 1e-8;
}

// 2. Neumann truncation error against the a-priori bound. The truncation
// error is measured as the exact series tail (delta A)^{T+1} H*, which
// keeps the measurement meaningful even where the bound sits far below
// double roundoff; the direct difference against the dense solve is also
// checked wherever the bound is resolvable in double precision.
bool neumann_bound(std::string& detail) {
  Rng rng(1002);
  const Graph g = oracle::random_graph(rng, 100, 6.0);
  const Matrix x = oracle::random_matrix(rng, 100, 4);
  double worst_margin = 0.0;
  for (const double delta : {0.3, 0.5, 0.8}) {
    const double rest = 1.0 - delta;
    auto dp = simple_params(rest * 0.5, rest * 0.3, rest * 0.2, delta);
    const auto bundle = precompute_operators(g, dp);
    const Matrix source = source_term(x, bundle, dp);
    const Matrix h_star = diffuse_global_dense(x, bundle, dp);
    const double source_norm = frobenius_norm(source);
    for (const Index t : {0, 4, 16, 64}) {
      dp.T = t;
      const double bound = neumann_error_bound(delta, t) * source_norm;
      Matrix tail = h_star;
      for (Index step = 0; step <= t; ++step) {
        tail = spmm(bundle.adj, tail);
        scale_in_place(tail, delta);
      }
      const double measured = frobenius_norm(tail);
      if (measured > bound) {
        detail = "tail " + format_real(measured) + " exceeds bound " +
                 format_real(bound) + " at T=" + std::to_string(t) +
                 " delta=" + format_real(delta);
        return false;
      }
      worst_margin = std::max(worst_margin, measured / bound);
      if (bound > 1e-10 * source_norm) {
        const Matrix truncated = diffuse_global_neumann(x, bundle, dp);
        const double direct = frobenius_diff(truncated, h_star);
        if (direct > bound * (1.0 + 1e-9)) {
          detail = "direct error " + format_real(direct) + " exceeds bound " +
                   format_real(bound) + " at T=" + std::to_string(t) +
                   " delta=" + format_real(delta);
          return false;
        }
      }
    }
  }
  detail = "worst tail/bound ratio " + format_real(worst_margin);
  return true;
}

// 3. Energy recovery via the Eq. 17 map on five random graphs.
bool energy_recovery(std::string& detail) {
  Rng rng(1003);
  double worst_resid = 0.0, worst_grad = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const Index n = 20 + rng.uniform_index(81);  // N <= 100
    const Graph g = oracle::random_graph(rng, n, 5.0);
    const DiffusionParams dp = oracle::random_simplex_params(rng);
    const auto bundle = precompute_operators(g, dp, LaplacianMode::identity_degree);
    const Matrix x = oracle::random_matrix(rng, n, 4);
    const EnergyParams ep = params_from_diffusion(dp);
    const Matrix h_star = diffuse_global_dense(x, bundle, dp);
    const Matrix h_hat = energy_minimizer(x, bundle, ep);
    const double resid = frobenius_diff(h_hat, h_star) / frobenius_norm(h_star);
    const double grad = frobenius_norm(energy_gradient(h_hat, x, bundle, ep));
    worst_resid = std::max(worst_resid, resid);
    worst_grad = std::max(worst_grad, grad);
  }
  detail = "worst residual " + format_real(worst_resid) + ", worst gradient norm " +
           format_real(worst_grad);
  return worst_resid <= 1e-8 && worst_grad <= 1e-6;
}

// 4. Finite-difference agreement for every learnable tensor, both heads.
bool gradient_correctness(std::string& detail) {
  double worst = 0.0;
  std::string worst_tensor = "-";
  for (const auto head : {Head::hadamard, Head::mlp}) {
    for (const std::uint64_t seed : {1u, 2u, 3u}) {
      Rng rng(4000 + seed);
      const Graph g = oracle::random_graph(rng, 12, 3.0);
      const Matrix features = oracle::random_matrix(rng, 12, 5);
      Labels labels(12);
      for (auto& label : labels) label = rng.uniform_index(3);
      const Mask mask(12, 1);
      DiffusionParams dp = simple_params(0.25, 0.1, 0.15, 0.5);
      dp.T = 8;
      const auto bundle = precompute_operators(g, dp);
      TrainConfig cfg;
      cfg.hidden_dim = 3;
      cfg.dropout = 0.0;
      cfg.head = head;
      cfg.global_mode = GlobalMode::dense;
      ModelParams<double> params = ModelParams<double>::glorot(5, 3, 3, rng);

      auto cache = forward(features, bundle, params, dp, cfg, false, nullptr);
      backward(cache, features, labels, mask, bundle, dp, cfg, params);
      for (auto ref : params.learnable(head)) {
        Mat<double>& tensor = *ref.value;
        const Mat<double> grad = *ref.grad;
        Mat<double> fd(tensor.rows(), tensor.cols());
        for (std::size_t i = 0; i < tensor.size(); ++i) {
          const double save = tensor.data()[i];
          const double eps = 1e-5 * (1.0 + std::abs(save));
          tensor.data()[i] = save + eps;
          auto up = forward(features, bundle, params, dp, cfg, false, nullptr);
          const double lu = ce_loss_logits(up.logits, labels, mask);
          tensor.data()[i] = save - eps;
          auto down = forward(features, bundle, params, dp, cfg, false, nullptr);
          const double ld = ce_loss_logits(down.logits, labels, mask);
          tensor.data()[i] = save;
          fd.data()[i] = (lu - ld) / (2.0 * eps);
        }
        const double denom = std::max(frobenius_norm(grad), frobenius_norm(fd));
        const double rel = denom > 0.0 ? frobenius_diff(grad, fd) / denom : 0.0;
        if (rel > worst) {
          worst = rel;
          worst_tensor = ref.name;
        }
      }
    }
  }
  detail = "worst tensor " + worst_tensor + " relative error " + format_real(worst);
  return worst <= 1e-4;
}

// 5. Over-smoothing contrast on a 2-block synthetic graph.
bool oversmoothing_contrast(std::string& detail) {
  const Dataset ds = gen_synthetic(200, 2, 0.9, 16, 1.0, 2024);
  const double x_min_pd = min_pairwise_distance(ds.features);
  if (x_min_pd < 0.1) {
    detail = "generated features violate the min-distance premise";
    return false;
  }
  const auto dp = simple_params(0.12, 0.02, 0.01, 0.85);  // alpha >= 0.1
  const auto bundle = precompute_operators(ds.graph, dp);

  const auto s = row_normalize(bundle.adj);
  Matrix z = ds.features;
  const double initial = dirichlet_energy(z, bundle);
  for (int k = 0; k < 200; ++k) z = passive_step(z, s, dp.tau);
  const double final_energy = dirichlet_energy(z, bundle);

  const Matrix h_star = diffuse_global_dense(ds.features, bundle, dp);
  const double h_star_pd = min_pairwise_distance(h_star);

  detail = "passive energy ratio " + format_real(final_energy / initial) +
           ", H* min pairwise distance " + format_real(h_star_pd);
  return final_energy <= 1e-3 * initial && h_star_pd > 1e-3;
}

Dataset load_cora() {
  const char* data_dir = std::getenv("ADGNN_DATA_DIR");
  if (data_dir == nullptr)
    throw DataError("ADGNN_DATA_DIR must point at the repository data directory");
  return load_dataset(fs::path(data_dir) / "cora");
}

// 6. Cora mean test accuracy over five seeds with default hyperparameters.
bool cora_accuracy(std::string& detail) {
  Dataset cora = load_cora();
  SplitSpec spec;  // canonical 48/32/20 per class
  cora = make_split(std::move(cora), spec);
  const DiffusionParams dp;  // defaults
  const TrainConfig cfg;     // defaults
  const auto bundle = precompute_operators(cora.graph, dp, LaplacianMode::paper_degree,
                                           /*dense_threshold=*/-1);
  std::vector<double> accs;
  for (std::uint64_t s = 0; s < 5; ++s) {
    TrainConfig run_cfg = cfg;
    run_cfg.seed = cfg.seed + s;
    const auto result = train<double>(cora.features, cora.labels,
                                      cora.meta.num_classes, cora.train_mask,
                                      cora.valid_mask, bundle, dp, run_cfg);
    accs.push_back(evaluate<double>(cora.features, cora.labels, cora.test_mask, bundle,
                                    result.params, dp, run_cfg));
  }
  double mean = 0.0;
  for (const double a : accs) mean += a;
  mean /= static_cast<double>(accs.size());
  detail = "mean test accuracy " + format_real(mean) + " over 5 seeds";
  return mean >= 0.85;
}

// 7. Edge homophily of Cora against Table 1.
bool cora_homophily(std::string& detail) {
  const Dataset cora = load_cora();
  const double h = homophily_ratio(cora);
  detail = "edge homophily " + format_real(h);
  return std::abs(h - 0.81) <= 0.02;
}

// 8. Separable synthetic dataset trains to perfect test accuracy; the
// uninformative variant stays near chance. Two classes, where homophily
// 0.5 is exactly the level a random labeling produces, so neither the
// features nor the structure carry class signal.
bool synthetic_separability(std::string& detail) {
  SplitSpec spec;
  spec.seed = 5;

  Dataset strong = gen_synthetic(600, 2, 0.9, 8, 4.0, 31415);
  strong = make_split(std::move(strong), spec);
  DiffusionParams dp = simple_params(0.2, 0.05, 0.05, 0.7);
  const auto bundle = precompute_operators(strong.graph, dp);
  TrainConfig cfg;
  cfg.hidden_dim = 16;
  cfg.max_epochs = 200;
  cfg.patience = 200;
  const auto result =
      train<double>(strong.features, strong.labels, 2, strong.train_mask,
                    strong.valid_mask, bundle, dp, cfg);
  const double strong_acc = evaluate<double>(strong.features, strong.labels,
                                             strong.test_mask, bundle, result.params,
                                             dp, cfg);

  Dataset flat = gen_synthetic(600, 2, 0.5, 8, 0.0, 27182);
  flat = make_split(std::move(flat), spec);
  const auto flat_bundle = precompute_operators(flat.graph, dp);
  const auto flat_result =
      train<double>(flat.features, flat.labels, 2, flat.train_mask, flat.valid_mask,
                    flat_bundle, dp, cfg);
  const double flat_acc = evaluate<double>(flat.features, flat.labels, flat.test_mask,
                                           flat_bundle, flat_result.params, dp, cfg);

  detail = "separable test accuracy " + format_real(strong_acc) +
           ", uninformative test accuracy " + format_real(flat_acc);
  return strong_acc == 1.0 && std::abs(flat_acc - 0.5) <= 0.10;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "closed-form equivalence of iterated and solved diffusion", 10.0,
       closed_form_equivalence},
      {2, "Neumann truncation error within the a-priori bound", 5.0, neumann_bound},
      {3, "energy minimizer recovers the diffusion limit", 5.0, energy_recovery},
      {4, "backward matches finite differences for every tensor", 30.0,
       gradient_correctness},
      {5, "passive diffusion collapses, active diffusion does not", 10.0,
       oversmoothing_contrast},
      {6, "Cora mean test accuracy at least 0.85", 300.0, cora_accuracy},
      {7, "Cora edge homophily within 0.81 +/- 0.02", 30.0, cora_homophily},
      {8, "synthetic separability and chance-level control", 120.0,
       synthetic_separability},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    const auto start = std::chrono::steady_clock::now();
    bool ok = false;
    std::string detail;
    try {
      ok = criterion.body(detail);
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed > criterion.time_limit_seconds) {
      ok = false;
      detail += " (exceeded " + format_real(criterion.time_limit_seconds) + " s budget)";
    }
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << criterion.id << ": "
              << criterion.name << " — " << detail << " [" << std::fixed
              << std::setprecision(2) << elapsed << " s]\n";
    std::cout.unsetf(std::ios_base::fixed);
    if (!ok) ++failures;
  }
  if (failures > 0) {
    std::cout << failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all acceptance criteria passed\n";
  return 0;
}
