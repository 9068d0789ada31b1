#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "adgnn/data.hpp"
#include "adgnn/model.hpp"
#include "oracle.hpp"

using namespace adgnn;

namespace {

DiffusionParams simple_params(double alpha, double beta, double gamma, double delta) {
  DiffusionParams dp;
  dp.alpha = alpha;
  dp.beta = beta;
  dp.gamma = gamma;
  dp.delta = delta;
  return dp;
}

Mask full_mask(Index n) { return Mask(static_cast<std::size_t>(n), 1); }

template <class T>
double loss_at(const Mat<T>& features, const OperatorBundle& bundle,
               const ModelParams<T>& params, const DiffusionParams& dp,
               const TrainConfig& cfg, const Labels& labels, const Mask& mask) {
  const auto cache = forward(features, bundle, params, dp, cfg, false, nullptr);
  return ce_loss_logits(cache.logits, labels, mask);
}

struct TinyProblem {
  Graph graph;
  Matrix features;
  Labels labels;
  Mask mask;
  OperatorBundle bundle;
  DiffusionParams dp;
  TrainConfig cfg;
  ModelParams<double> params;
};

TinyProblem make_tiny(std::uint64_t seed, Head head, GlobalMode mode) {
  TinyProblem p;
  Rng rng(seed);
  p.graph = oracle::random_graph(rng, 12, 3.0);
  p.features = oracle::random_matrix(rng, 12, 5);
  p.labels.resize(12);
  for (auto& label : p.labels) label = rng.uniform_index(3);
  p.mask = Mask(12, 0);
  for (Index i = 0; i < 12; ++i) p.mask[static_cast<std::size_t>(i)] = (i % 3 != 2);
  p.dp = simple_params(0.25, 0.1, 0.15, 0.5);
  p.dp.K = 2;
  p.dp.T = 8;
  p.bundle = precompute_operators(p.graph, p.dp);
  p.cfg.hidden_dim = 3;
  p.cfg.dropout = 0.0;
  p.cfg.head = head;
  p.cfg.global_mode = mode;
  p.params = ModelParams<double>::glorot(5, 3, 3, rng);
  return p;
}

}  // namespace

TEST_CASE("ego_embed") {
  Rng rng(1);
  SUBCASE("zero weights produce zero embeddings") {
    ModelParams<double> p = ModelParams<double>::glorot(3, 2, 2, rng);
    p.ego_weight.set_zero();
    p.ego_bias.set_zero();
    const Matrix x = oracle::random_matrix(rng, 4, 3);
    CHECK(frobenius_norm(ego_embed(x, p)) == 0.0);
  }
  SUBCASE("identity transform keeps nonnegative inputs") {
    ModelParams<double> p = ModelParams<double>::glorot(2, 2, 2, rng);
    p.ego_weight.set_zero();
    p.ego_weight(0, 0) = 1.0;
    p.ego_weight(1, 1) = 1.0;
    p.ego_bias.set_zero();
    Matrix x(2, 2);
    x(0, 0) = 0.5;
    x(0, 1) = 2.0;
    x(1, 0) = 0.0;
    x(1, 1) = 1.0;
    CHECK(max_abs_diff(ego_embed(x, p), x) == 0.0);
  }
  SUBCASE("ReLU clips negatives") {
    ModelParams<double> p = ModelParams<double>::glorot(2, 2, 2, rng);
    p.ego_weight.set_zero();
    p.ego_weight(0, 0) = 1.0;
    p.ego_weight(1, 1) = 1.0;
    p.ego_bias.set_zero();
    Matrix x(1, 2);
    x(0, 0) = -1.0;
    x(0, 1) = 2.0;
    const Matrix out = ego_embed(x, p);
    CHECK(out(0, 0) == 0.0);
    CHECK(out(0, 1) == 2.0);
  }
  SUBCASE("feature width mismatch throws") {
    ModelParams<double> p = ModelParams<double>::glorot(3, 2, 2, rng);
    CHECK_THROWS_AS(ego_embed(Matrix(4, 2), p), std::invalid_argument);
  }
}

TEST_CASE("concat_embeddings") {
  Matrix a(1, 2);
  a(0, 0) = 1.0;
  a(0, 1) = 2.0;
  SUBCASE("three copies of a row") {
    const Matrix cat = concat_embeddings(a, a, a);
    REQUIRE(cat.cols() == 6);
    for (Index j = 0; j < 6; ++j) CHECK(cat(0, j) == a(0, j % 2));
  }
  SUBCASE("zero blocks stay zero") {
    const Matrix cat = concat_embeddings(Matrix(3, 2), Matrix(3, 2), Matrix(3, 2));
    CHECK(frobenius_norm(cat) == 0.0);
  }
  SUBCASE("column slices recover the blocks") {
    Rng rng(2);
    const Matrix e = oracle::random_matrix(rng, 4, 3);
    const Matrix l = oracle::random_matrix(rng, 4, 3);
    const Matrix g = oracle::random_matrix(rng, 4, 3);
    const Matrix cat = concat_embeddings(e, l, g);
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 3; ++j) {
        CHECK(cat(i, j) == e(i, j));
        CHECK(cat(i, 3 + j) == l(i, j));
        CHECK(cat(i, 6 + j) == g(i, j));
      }
  }
  SUBCASE("shape mismatch throws") {
    CHECK_THROWS_AS(concat_embeddings(Matrix(2, 2), Matrix(2, 3), Matrix(2, 2)),
                    std::invalid_argument);
  }
}

TEST_CASE("prediction heads") {
  Rng rng(3);
  SUBCASE("zero output layer gives uniform rows") {
    ModelParams<double> p = ModelParams<double>::glorot(2, 1, 2, rng);
    p.out_weight.set_zero();
    p.out_bias.set_zero();
    const Matrix cat = oracle::random_matrix(rng, 3, 3);
    const Matrix y = predict_hadamard(cat, p);
    for (Index i = 0; i < 3; ++i)
      for (Index j = 0; j < 2; ++j)
        CHECK(y(i, j) == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("zero gate ignores the embeddings") {
    ModelParams<double> p = ModelParams<double>::glorot(2, 1, 2, rng);
    p.gate_weight.set_zero();
    const Matrix cat1 = oracle::random_matrix(rng, 2, 3);
    const Matrix cat2 = oracle::random_matrix(rng, 2, 3);
    CHECK(max_abs_diff(predict_hadamard(cat1, p), predict_hadamard(cat2, p)) == 0.0);
  }
  SUBCASE("hand-computed two-node instance") {
    // d' = 1, C = 2: pre-activation relu(h * w), logits via the 3x2 output layer.
    ModelParams<double> p = ModelParams<double>::glorot(2, 1, 2, rng);
    p.gate_weight(0, 0) = 1.0;
    p.gate_weight(0, 1) = -1.0;
    p.gate_weight(0, 2) = 2.0;
    p.out_weight.set_zero();
    p.out_weight(0, 0) = 1.0;
    p.out_weight(1, 1) = 1.0;
    p.out_weight(2, 0) = 0.5;
    p.out_bias(0, 0) = 0.1;
    p.out_bias(0, 1) = -0.1;
    Matrix cat(2, 3);
    cat(0, 0) = 1.0;
    cat(0, 1) = 2.0;
    cat(0, 2) = 3.0;
    cat(1, 0) = -1.0;
    cat(1, 1) = -2.0;
    cat(1, 2) = 0.5;
    const Matrix y = predict_hadamard(cat, p);
    // Row 0: act = (1, 0, 6) -> logits (1 + 3 + 0.1, -0.1) = (4.1, -0.1).
    const double z00 = 4.1, z01 = -0.1;
    const double d0 = std::exp(z00 - z00) + std::exp(z01 - z00);
    CHECK(y(0, 0) == doctest::Approx(std::exp(0.0) / d0).epsilon(1e-14));
    // Row 1: act = (0, 2, 1) -> logits (0.5 + 0.1, 2 - 0.1) = (0.6, 1.9).
    const double z10 = 0.6, z11 = 1.9;
    const double d1 = std::exp(z10 - z11) + std::exp(0.0);
    CHECK(y(1, 0) == doctest::Approx(std::exp(z10 - z11) / d1).epsilon(1e-14));
  }
  SUBCASE("identity hidden layer matches the all-ones gate on nonnegative input") {
    ModelParams<double> p = ModelParams<double>::glorot(2, 1, 2, rng);
    p.hidden_weight.set_zero();
    for (Index i = 0; i < 3; ++i) p.hidden_weight(i, i) = 1.0;
    p.hidden_bias.set_zero();
    p.gate_weight.fill(1.0);
    Matrix cat = oracle::random_matrix(rng, 4, 3);
    for (std::size_t i = 0; i < cat.size(); ++i) cat.data()[i] = std::abs(cat.data()[i]);
    CHECK(max_abs_diff(predict_mlp(cat, p), predict_hadamard(cat, p)) == 0.0);
  }
  SUBCASE("mlp head matches a composed dense oracle") {
    ModelParams<double> p = ModelParams<double>::glorot(2, 1, 2, rng);
    const Matrix cat = oracle::random_matrix(rng, 5, 3);
    Matrix act = oracle::dense_matmul(cat, p.hidden_weight);
    for (Index i = 0; i < act.rows(); ++i)
      for (Index j = 0; j < act.cols(); ++j) {
        act(i, j) += p.hidden_bias(0, j);
        if (act(i, j) < 0.0) act(i, j) = 0.0;
      }
    const Matrix logits = oracle::dense_matmul(act, p.out_weight);
    Matrix expected(5, 2);
    for (Index i = 0; i < 5; ++i) {
      const double z0 = logits(i, 0) + p.out_bias(0, 0);
      const double z1 = logits(i, 1) + p.out_bias(0, 1);
      const double m = std::max(z0, z1);
      const double denom = std::exp(z0 - m) + std::exp(z1 - m);
      expected(i, 0) = std::exp(z0 - m) / denom;
      expected(i, 1) = std::exp(z1 - m) / denom;
    }
    CHECK(oracle::rel_fro_diff(predict_mlp(cat, p), expected) <= 1e-13);
  }
  SUBCASE("softmax rows sum to one for both heads") {
    ModelParams<double> p = ModelParams<double>::glorot(2, 2, 3, rng);
    const Matrix cat = oracle::random_matrix(rng, 10, 6, 3.0);
    for (const Matrix& y : {predict_hadamard(cat, p), predict_mlp(cat, p)}) {
      for (Index i = 0; i < y.rows(); ++i) {
        double sum = 0.0;
        for (Index j = 0; j < y.cols(); ++j) {
          sum += y(i, j);
          CHECK(y(i, j) > 0.0);
          CHECK(y(i, j) < 1.0);
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);
      }
    }
  }
}

TEST_CASE("ce_loss") {
  SUBCASE("uniform predictions cost m ln C") {
    Matrix y(4, 3);
    y.fill(1.0 / 3.0);
    const Labels labels{0, 1, 2, 0};
    const Mask mask{1, 1, 0, 1};
    CHECK(ce_loss(y, labels, mask) ==
          doctest::Approx(3.0 * std::log(3.0)).epsilon(1e-12));
  }
  SUBCASE("exactly correct one-hot rows cost zero") {
    Matrix y(2, 2);
    y(0, 0) = 1.0;
    y(1, 1) = 1.0;
    CHECK(ce_loss(y, Labels{0, 1}, full_mask(2)) == 0.0);
  }
  SUBCASE("single row (0.7, 0.3) with true class 0") {
    Matrix y(1, 2);
    y(0, 0) = 0.7;
    y(0, 1) = 0.3;
    CHECK(ce_loss(y, Labels{0}, full_mask(1)) ==
          doctest::Approx(0.35667494393873245).epsilon(1e-14));
  }
  SUBCASE("empty mask is an error") {
    Matrix y(2, 2);
    y.fill(0.5);
    CHECK_THROWS_WITH_AS(ce_loss(y, Labels{0, 1}, Mask{0, 0}), "empty training mask",
                         DataError);
  }
}

TEST_CASE("forward pipeline") {
  SUBCASE("zero parameters give uniform predictions") {
    auto p = make_tiny(10, Head::hadamard, GlobalMode::dense);
    for (auto [name, tensor] : p.params.all_tensors()) tensor->set_zero();
    const auto cache =
        forward(p.features, p.bundle, p.params, p.dp, p.cfg, false, nullptr);
    for (Index i = 0; i < cache.y.rows(); ++i)
      for (Index j = 0; j < cache.y.cols(); ++j)
        CHECK(cache.y(i, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("training forwards with the same dropout seed are bit-identical") {
    auto p = make_tiny(11, Head::hadamard, GlobalMode::neumann);
    p.cfg.dropout = 0.5;
    Rng rng_a(77), rng_b(77);
    const auto a = forward(p.features, p.bundle, p.params, p.dp, p.cfg, true, &rng_a);
    const auto b = forward(p.features, p.bundle, p.params, p.dp, p.cfg, true, &rng_b);
    CHECK(max_abs_diff(a.y, b.y) == 0.0);
  }
  SUBCASE("tiny end-to-end run matches an independent dense evaluation") {
    // Path graph on 4 nodes, hadamard head, dense global mode.
    Rng rng(12);
    const Graph g = make_graph(4, {{0, 1}, {1, 2}, {2, 3}});
    const Matrix x = oracle::random_matrix(rng, 4, 3);
    DiffusionParams dp = simple_params(0.3, 0.1, 0.1, 0.5);
    dp.K = 2;
    TrainConfig cfg;
    cfg.hidden_dim = 2;
    cfg.dropout = 0.0;
    cfg.global_mode = GlobalMode::dense;
    const auto bundle = precompute_operators(g, dp);
    ModelParams<double> params = ModelParams<double>::glorot(3, 2, 2, rng);
    const auto cache = forward(x, bundle, params, dp, cfg, false, nullptr);

    // Reference pipeline, built densely from scratch.
    Matrix adj(4, 4);
    const double deg[4] = {2, 3, 3, 2};
    for (Index i = 0; i < 4; ++i) adj(i, i) = 1.0 / deg[i];
    auto connect = [&](Index u, Index v) {
      adj(u, v) = 1.0 / std::sqrt(deg[u] * deg[v]);
      adj(v, u) = adj(u, v);
    };
    connect(0, 1);
    connect(1, 2);
    connect(2, 3);
    Matrix lap(4, 4);
    for (Index i = 0; i < 4; ++i) {
      double row_sum = 0.0;
      for (Index j = 0; j < 4; ++j) row_sum += adj(i, j);
      for (Index j = 0; j < 4; ++j) lap(i, j) = -adj(i, j);
      lap(i, i) += row_sum;
    }
    Matrix x_star = oracle::dense_matmul(x, params.ego_weight);
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 2; ++j) {
        x_star(i, j) += params.ego_bias(0, j);
        if (x_star(i, j) < 0.0) x_star(i, j) = 0.0;
      }
    Matrix source = x_star;
    scale_in_place(source, dp.alpha);
    axpy(source, dp.beta,
         oracle::dense_matmul(lap, oracle::dense_matmul(adj, x_star)));
    axpy(source, dp.gamma, oracle::dense_matmul(lap, x_star));
    Matrix h_local = x_star;
    for (Index k = 0; k < dp.K; ++k) {
      Matrix next = oracle::dense_matmul(adj, h_local);
      scale_in_place(next, dp.delta);
      add_in_place(next, source);
      h_local = std::move(next);
    }
    Matrix system(4, 4);
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 4; ++j)
        system(i, j) = (i == j ? 1.0 : 0.0) - dp.delta * adj(i, j);
    const Matrix h_global =
        oracle::dense_matmul(oracle::dense_inverse(system), source);
    Matrix cat(4, 6);
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 2; ++j) {
        cat(i, j) = x_star(i, j);
        cat(i, 2 + j) = h_local(i, j);
        cat(i, 4 + j) = h_global(i, j);
      }
    Matrix act = cat;
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 6; ++j) {
        act(i, j) *= params.gate_weight(0, j);
        if (act(i, j) < 0.0) act(i, j) = 0.0;
      }
    const Matrix logits = oracle::dense_matmul(act, params.out_weight);
    Matrix expected(4, 2);
    for (Index i = 0; i < 4; ++i) {
      const double z0 = logits(i, 0) + params.out_bias(0, 0);
      const double z1 = logits(i, 1) + params.out_bias(0, 1);
      const double m = std::max(z0, z1);
      const double denom = std::exp(z0 - m) + std::exp(z1 - m);
      expected(i, 0) = std::exp(z0 - m) / denom;
      expected(i, 1) = std::exp(z1 - m) / denom;
    }
    CHECK(oracle::rel_fro_diff(cache.y, expected) <= 1e-12);
  }
}

TEST_CASE("backward matches central finite differences for every tensor") {
  for (const auto head : {Head::hadamard, Head::mlp}) {
    for (const auto mode : {GlobalMode::dense, GlobalMode::neumann}) {
      for (const std::uint64_t seed : {21, 22, 23}) {
        auto p = make_tiny(seed, head, mode);
        auto cache =
            forward(p.features, p.bundle, p.params, p.dp, p.cfg, false, nullptr);
        backward(cache, p.features, p.labels, p.mask, p.bundle, p.dp, p.cfg, p.params);

        for (auto ref : p.params.learnable(p.cfg.head)) {
          Mat<double>& tensor = *ref.value;
          const Mat<double> grad = *ref.grad;
          Mat<double> fd(tensor.rows(), tensor.cols());
          for (std::size_t i = 0; i < tensor.size(); ++i) {
            const double save = tensor.data()[i];
            const double eps = 1e-5 * (1.0 + std::abs(save));
            tensor.data()[i] = save + eps;
            const double up =
                loss_at(p.features, p.bundle, p.params, p.dp, p.cfg, p.labels, p.mask);
            tensor.data()[i] = save - eps;
            const double down =
                loss_at(p.features, p.bundle, p.params, p.dp, p.cfg, p.labels, p.mask);
            tensor.data()[i] = save;
            fd.data()[i] = (up - down) / (2.0 * eps);
          }
          const double denom = std::max(frobenius_norm(grad), frobenius_norm(fd));
          REQUIRE(denom > 0.0);
          CHECK(frobenius_diff(grad, fd) / denom <= 1e-4);
        }
      }
    }
  }
}

TEST_CASE("backward edge behaviors") {
  SUBCASE("saturated correct predictions give near-zero gradients") {
    auto p = make_tiny(31, Head::hadamard, GlobalMode::neumann);
    for (auto& label : p.labels) label = 0;
    p.params.out_weight.set_zero();
    p.params.out_bias.set_zero();
    p.params.out_bias(0, 0) = 60.0;  // softmax saturates at class 0
    auto cache = forward(p.features, p.bundle, p.params, p.dp, p.cfg, false, nullptr);
    CHECK(ce_loss_logits(cache.logits, p.labels, p.mask) <= 1e-8);
    backward(cache, p.features, p.labels, p.mask, p.bundle, p.dp, p.cfg, p.params);
    for (auto ref : p.params.learnable(p.cfg.head))
      CHECK(frobenius_norm(*ref.grad) <= 1e-8);
  }
  SUBCASE("gradients are additive over disjoint masks") {
    auto p = make_tiny(32, Head::hadamard, GlobalMode::neumann);
    Mask mask_a(12, 0), mask_b(12, 0);
    for (Index i = 0; i < 12; ++i)
      (i % 2 == 0 ? mask_a : mask_b)[static_cast<std::size_t>(i)] = 1;
    auto cache = forward(p.features, p.bundle, p.params, p.dp, p.cfg, false, nullptr);

    backward(cache, p.features, p.labels, mask_a, p.bundle, p.dp, p.cfg, p.params);
    const Matrix ga = p.params.g_ego_weight;
    backward(cache, p.features, p.labels, mask_b, p.bundle, p.dp, p.cfg, p.params);
    const Matrix gb = p.params.g_ego_weight;
    backward(cache, p.features, p.labels, full_mask(12), p.bundle, p.dp, p.cfg,
             p.params);
    Matrix sum = ga;
    add_in_place(sum, gb);
    CHECK(oracle::rel_fro_diff(sum, p.params.g_ego_weight) <= 1e-12);
  }
  SUBCASE("stale caches are rejected") {
    auto p = make_tiny(33, Head::hadamard, GlobalMode::neumann);
    auto cache = forward(p.features, p.bundle, p.params, p.dp, p.cfg, false, nullptr);
    p.params.revision += 1;  // as if an optimizer step happened
    CHECK_THROWS_AS(
        backward(cache, p.features, p.labels, p.mask, p.bundle, p.dp, p.cfg, p.params),
        std::logic_error);
  }
}

TEST_CASE("accuracy") {
  SUBCASE("all correct") {
    Matrix y(3, 2);
    y(0, 0) = 0.9;
    y(0, 1) = 0.1;
    y(1, 0) = 0.2;
    y(1, 1) = 0.8;
    y(2, 0) = 0.7;
    y(2, 1) = 0.3;
    CHECK(accuracy(y, Labels{0, 1, 0}, full_mask(3)) == 1.0);
  }
  SUBCASE("uniform rows break ties toward class 0") {
    Matrix y(4, 3);
    y.fill(1.0 / 3.0);
    CHECK(accuracy(y, Labels{0, 0, 1, 2}, full_mask(4)) == 0.5);
  }
  SUBCASE("three of five correct") {
    Matrix y(5, 2);
    for (Index i = 0; i < 5; ++i) {
      y(i, 0) = (i < 3) ? 0.8 : 0.2;
      y(i, 1) = (i < 3) ? 0.2 : 0.8;
    }
    CHECK(accuracy(y, Labels{0, 0, 0, 0, 0}, full_mask(5)) == 0.6);
  }
  SUBCASE("empty mask is an error") {
    Matrix y(2, 2);
    y.fill(0.5);
    CHECK_THROWS_WITH_AS(accuracy(y, Labels{0, 1}, Mask{0, 0}), "empty mask",
                         DataError);
  }
}

TEST_CASE("permutation equivariance") {
  Rng rng(55);
  const Index n = 14;
  const Graph g = oracle::random_graph(rng, n, 4.0);
  const Matrix x = oracle::random_matrix(rng, n, 4);
  Labels labels(static_cast<std::size_t>(n));
  for (auto& label : labels) label = rng.uniform_index(3);
  DiffusionParams dp = simple_params(0.25, 0.1, 0.15, 0.5);
  TrainConfig cfg;
  cfg.hidden_dim = 3;
  cfg.dropout = 0.0;
  cfg.global_mode = GlobalMode::dense;
  Rng init(99);
  ModelParams<double> params = ModelParams<double>::glorot(4, 3, 3, init);

  std::vector<Index> pi(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) pi[static_cast<std::size_t>(i)] = i;
  for (Index i = n - 1; i > 0; --i)
    std::swap(pi[static_cast<std::size_t>(i)],
              pi[static_cast<std::size_t>(rng.uniform_index(i + 1))]);

  std::vector<std::pair<Index, Index>> permuted_edges;
  for (const auto& [u, v] : g.edges)
    permuted_edges.emplace_back(pi[static_cast<std::size_t>(u)],
                                pi[static_cast<std::size_t>(v)]);
  const Graph pg = make_graph(n, permuted_edges);
  Matrix px(n, 4);
  Labels plabels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < 4; ++j) px(pi[static_cast<std::size_t>(i)], j) = x(i, j);
    plabels[static_cast<std::size_t>(pi[static_cast<std::size_t>(i)])] =
        labels[static_cast<std::size_t>(i)];
  }

  const auto bundle = precompute_operators(g, dp);
  const auto pbundle = precompute_operators(pg, dp);
  const auto cache = forward(x, bundle, params, dp, cfg, false, nullptr);
  const auto pcache = forward(px, pbundle, params, dp, cfg, false, nullptr);

  auto check_permuted = [&](const Matrix& base, const Matrix& permuted) {
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < base.cols(); ++j)
        CHECK(permuted(pi[static_cast<std::size_t>(i)], j) ==
              doctest::Approx(base(i, j)).epsilon(1e-10));
  };
  check_permuted(cache.x_star, pcache.x_star);
  check_permuted(cache.h_local, pcache.h_local);
  check_permuted(cache.h_global, pcache.h_global);
  check_permuted(cache.y, pcache.y);

  const double loss = ce_loss_logits(cache.logits, labels, full_mask(n));
  const double ploss = ce_loss_logits(pcache.logits, plabels, full_mask(n));
  CHECK(loss == doctest::Approx(ploss).epsilon(1e-10));
  CHECK(accuracy(cache.y, labels, full_mask(n)) ==
        accuracy(pcache.y, plabels, full_mask(n)));
}

TEST_CASE("symmetric inputs keep identical rows across all three scales") {
  Rng rng(66);
  const Graph k3 = make_graph(3, {{0, 1}, {1, 2}, {0, 2}});
  DiffusionParams dp = simple_params(0.4, 0.0, 0.0, 0.6);
  TrainConfig cfg;
  cfg.hidden_dim = 2;
  cfg.dropout = 0.0;
  cfg.global_mode = GlobalMode::dense;
  const auto bundle = precompute_operators(k3, dp);
  ModelParams<double> params = ModelParams<double>::glorot(3, 2, 2, rng);
  Matrix x(3, 3);
  for (Index i = 0; i < 3; ++i) {
    x(i, 0) = 0.3;
    x(i, 1) = -1.2;
    x(i, 2) = 0.8;
  }
  const auto cache = forward(x, bundle, params, dp, cfg, false, nullptr);
  for (const Matrix* m : {&cache.x_star, &cache.h_local, &cache.h_global}) {
    for (Index i = 1; i < 3; ++i)
      for (Index j = 0; j < m->cols(); ++j)
        CHECK((*m)(i, j) == doctest::Approx((*m)(0, j)).epsilon(1e-12));
  }
}

TEST_CASE("training behaviors") {
  const Dataset base = gen_synthetic(60, 2, 0.9, 8, 4.0, 1234);
  SplitSpec spec;
  spec.seed = 9;
  const Dataset ds = make_split(base, spec);
  DiffusionParams dp = simple_params(0.25, 0.05, 0.05, 0.65);
  const auto bundle = precompute_operators(ds.graph, dp);

  SUBCASE("zero learning rate leaves parameters untouched and history flat") {
    TrainConfig cfg;
    cfg.hidden_dim = 4;
    cfg.learning_rate = 0.0;
    cfg.max_epochs = 5;
    cfg.patience = 5;
    cfg.dropout = 0.0;
    auto result = train<double>(ds.features, ds.labels, 2, ds.train_mask,
                                ds.valid_mask, bundle, dp, cfg);
    Rng init(cfg.seed);
    auto fresh = ModelParams<double>::glorot(8, 4, 2, init);
    auto got = result.params.all_tensors();
    auto expect = fresh.all_tensors();
    for (std::size_t i = 0; i < got.size(); ++i)
      CHECK(max_abs_diff(*got[i].second, *expect[i].second) == 0.0);
    for (const auto& epoch : result.history)
      CHECK(epoch.loss == result.history.front().loss);
  }
  SUBCASE("separable synthetic data trains to full accuracy") {
    TrainConfig cfg;
    cfg.hidden_dim = 8;
    cfg.max_epochs = 200;
    cfg.patience = 200;
    const auto result = train<double>(ds.features, ds.labels, 2, ds.train_mask,
                                      ds.valid_mask, bundle, dp, cfg);
    double best_train = 0.0;
    for (const auto& epoch : result.history)
      best_train = std::max(best_train, epoch.train_accuracy);
    CHECK(best_train == 1.0);
  }
  SUBCASE("same seed reproduces the history bit for bit") {
    TrainConfig cfg;
    cfg.hidden_dim = 4;
    cfg.max_epochs = 20;
    cfg.patience = 20;
    const auto a = train<double>(ds.features, ds.labels, 2, ds.train_mask,
                                 ds.valid_mask, bundle, dp, cfg);
    const auto b = train<double>(ds.features, ds.labels, 2, ds.train_mask,
                                 ds.valid_mask, bundle, dp, cfg);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
      CHECK(a.history[i].loss == b.history[i].loss);
      CHECK(a.history[i].valid_accuracy == b.history[i].valid_accuracy);
    }
  }
  SUBCASE("loss is non-increasing early at a small learning rate") {
    TrainConfig cfg;
    cfg.hidden_dim = 4;
    cfg.learning_rate = 1e-3;
    cfg.max_epochs = 10;
    cfg.patience = 10;
    cfg.dropout = 0.0;
    const auto result = train<double>(ds.features, ds.labels, 2, ds.train_mask,
                                      ds.valid_mask, bundle, dp, cfg);
    for (std::size_t i = 1; i < result.history.size(); ++i)
      CHECK(result.history[i].loss <= result.history[i - 1].loss + 1e-9);
  }
  SUBCASE("f32 training runs deterministically") {
    TrainConfig cfg;
    cfg.hidden_dim = 4;
    cfg.max_epochs = 15;
    cfg.patience = 15;
    cfg.precision = Precision::f32;
    const Mat<float> features = ds.features.cast<float>();
    const auto a = train<float>(features, ds.labels, 2, ds.train_mask, ds.valid_mask,
                                bundle, dp, cfg);
    const auto b = train<float>(features, ds.labels, 2, ds.train_mask, ds.valid_mask,
                                bundle, dp, cfg);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i)
      CHECK(a.history[i].loss == b.history[i].loss);
    CHECK(a.params.all_finite());
  }
  SUBCASE("exploding updates raise a divergence error naming the epoch") {
    TrainConfig cfg;
    cfg.hidden_dim = 4;
    cfg.learning_rate = 1e18;
    cfg.weight_decay = 1e18;
    cfg.max_epochs = 50;
    cfg.patience = 50;
    cfg.dropout = 0.0;
    CHECK_THROWS_WITH_AS(train<double>(ds.features, ds.labels, 2, ds.train_mask,
                                       ds.valid_mask, bundle, dp, cfg),
                         doctest::Contains("epoch"), NumericError);
  }
}
