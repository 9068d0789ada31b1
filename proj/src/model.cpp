#include "adgnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace adgnn {

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("TrainConfig: " + msg); };
  if (hidden_dim < 1) fail("hidden_dim must be positive");
  // learning_rate = 0 is degenerate but legal (no-op training).
  if (learning_rate < 0.0) fail("learning_rate must be nonnegative");
  if (weight_decay < 0.0) fail("weight_decay must be nonnegative");
  if (max_epochs < 1) fail("max_epochs must be positive");
  if (patience < 0 || patience > max_epochs) fail("patience must be in [0, max_epochs]");
  if (dropout < 0.0 || dropout >= 1.0) fail("dropout must be in [0, 1)");
}

namespace {

template <class T>
Mat<T> glorot_tensor(Index rows, Index cols, Rng& rng) {
  Mat<T> m(rows, cols);
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (std::size_t i = 0; i < m.size(); ++i)
    m.data()[i] = static_cast<T>(rng.uniform(-bound, bound));
  return m;
}

template <class T>
void add_row_broadcast(Mat<T>& m, const Mat<T>& row) {
  for (Index i = 0; i < m.rows(); ++i) {
    T* dst = m.row(i);
    const T* src = row.row(0);
    for (Index j = 0; j < m.cols(); ++j) dst[j] += src[j];
  }
}

template <class T>
void relu_in_place(Mat<T>& m) {
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m.data()[i] < T(0)) m.data()[i] = T(0);
}

template <class T>
Mat<T> colsum(const Mat<T>& m) {
  Mat<T> out(1, m.cols());
  for (Index i = 0; i < m.rows(); ++i) {
    const T* src = m.row(i);
    T* dst = out.row(0);
    for (Index j = 0; j < m.cols(); ++j) dst[j] += src[j];
  }
  return out;
}

// Numerically stable row softmax.
template <class T>
Mat<T> softmax_rows(const Mat<T>& logits) {
  Mat<T> y(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const T* z = logits.row(i);
    T* out = y.row(i);
    double mx = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j < logits.cols(); ++j)
      mx = std::max(mx, static_cast<double>(z[j]));
    double sum = 0.0;
    for (Index j = 0; j < logits.cols(); ++j)
      sum += std::exp(static_cast<double>(z[j]) - mx);
    for (Index j = 0; j < logits.cols(); ++j)
      out[j] = static_cast<T>(std::exp(static_cast<double>(z[j]) - mx) / sum);
  }
  return y;
}

Index masked_count(const Mask& mask) {
  Index n = 0;
  for (const auto m : mask) n += m ? 1 : 0;
  return n;
}

}  // namespace

template <class T>
ModelParams<T> ModelParams<T>::glorot(Index feature_dim, Index hidden_dim,
                                      Index num_classes, Rng& rng) {
  if (feature_dim < 1 || hidden_dim < 1 || num_classes < 1)
    throw std::invalid_argument("ModelParams: dimensions must be positive");
  ModelParams<T> p;
  const Index cat = 3 * hidden_dim;
  p.ego_weight = glorot_tensor<T>(feature_dim, hidden_dim, rng);
  p.ego_bias = Mat<T>(1, hidden_dim);
  p.gate_weight = glorot_tensor<T>(1, cat, rng);
  p.out_weight = glorot_tensor<T>(cat, num_classes, rng);
  p.out_bias = Mat<T>(1, num_classes);
  p.hidden_weight = glorot_tensor<T>(cat, cat, rng);
  p.hidden_bias = Mat<T>(1, cat);

  p.g_ego_weight = Mat<T>(feature_dim, hidden_dim);
  p.g_ego_bias = Mat<T>(1, hidden_dim);
  p.g_gate_weight = Mat<T>(1, cat);
  p.g_out_weight = Mat<T>(cat, num_classes);
  p.g_out_bias = Mat<T>(1, num_classes);
  p.g_hidden_weight = Mat<T>(cat, cat);
  p.g_hidden_bias = Mat<T>(1, cat);
  return p;
}

template <class T>
void ModelParams<T>::zero_grads() {
  g_ego_weight.set_zero();
  g_ego_bias.set_zero();
  g_gate_weight.set_zero();
  g_out_weight.set_zero();
  g_out_bias.set_zero();
  g_hidden_weight.set_zero();
  g_hidden_bias.set_zero();
}

template <class T>
bool ModelParams<T>::all_finite() const {
  return ego_weight.all_finite() && ego_bias.all_finite() &&
         gate_weight.all_finite() && out_weight.all_finite() &&
         out_bias.all_finite() && hidden_weight.all_finite() &&
         hidden_bias.all_finite();
}

template <class T>
std::vector<typename ModelParams<T>::TensorRef> ModelParams<T>::learnable(Head head) {
  std::vector<TensorRef> refs;
  refs.push_back({"ego_weight", &ego_weight, &g_ego_weight, false});
  refs.push_back({"ego_bias", &ego_bias, &g_ego_bias, true});
  if (head == Head::hadamard) {
    refs.push_back({"gate_weight", &gate_weight, &g_gate_weight, false});
  } else {
    refs.push_back({"hidden_weight", &hidden_weight, &g_hidden_weight, false});
    refs.push_back({"hidden_bias", &hidden_bias, &g_hidden_bias, true});
  }
  refs.push_back({"out_weight", &out_weight, &g_out_weight, false});
  refs.push_back({"out_bias", &out_bias, &g_out_bias, true});
  return refs;
}

template <class T>
std::vector<std::pair<const char*, Mat<T>*>> ModelParams<T>::all_tensors() {
  return {{"ego_weight", &ego_weight},       {"ego_bias", &ego_bias},
          {"gate_weight", &gate_weight},     {"out_weight", &out_weight},
          {"out_bias", &out_bias},           {"hidden_weight", &hidden_weight},
          {"hidden_bias", &hidden_bias}};
}

template <class T>
Mat<T> ego_embed(const Mat<T>& features, const ModelParams<T>& params) {
  if (features.cols() != params.ego_weight.rows())
    throw std::invalid_argument("ego_embed: feature dimension mismatch");
  Mat<T> x = matmul(features, params.ego_weight);
  add_row_broadcast(x, params.ego_bias);
  relu_in_place(x);
  return x;
}

template <class T>
Mat<T> concat_embeddings(const Mat<T>& ego, const Mat<T>& local,
                         const Mat<T>& global_h) {
  if (!ego.same_shape(local) || !ego.same_shape(global_h))
    throw std::invalid_argument("concat_embeddings: shape mismatch");
  const Index d = ego.cols();
  Mat<T> cat(ego.rows(), 3 * d);
  for (Index i = 0; i < ego.rows(); ++i) {
    T* dst = cat.row(i);
    std::copy_n(ego.row(i), d, dst);
    std::copy_n(local.row(i), d, dst + d);
    std::copy_n(global_h.row(i), d, dst + 2 * d);
  }
  return cat;
}

namespace {

// Shared head plumbing: pre-activation, ReLU, output layer, softmax.
template <class T>
void run_head(const Mat<T>& h_cat, const ModelParams<T>& params, Head head,
              Mat<T>& head_act, Mat<T>& logits, Mat<T>& y) {
  if (h_cat.cols() != params.out_weight.rows())
    throw std::invalid_argument("predict: concatenated width mismatch");
  if (head == Head::hadamard) {
    head_act = h_cat;
    for (Index i = 0; i < head_act.rows(); ++i) {
      T* dst = head_act.row(i);
      const T* w = params.gate_weight.row(0);
      for (Index j = 0; j < head_act.cols(); ++j) dst[j] *= w[j];
    }
  } else {
    head_act = matmul(h_cat, params.hidden_weight);
    add_row_broadcast(head_act, params.hidden_bias);
  }
  relu_in_place(head_act);
  logits = matmul(head_act, params.out_weight);
  add_row_broadcast(logits, params.out_bias);
  y = softmax_rows(logits);
}

}  // namespace

template <class T>
Mat<T> predict_hadamard(const Mat<T>& h_cat, const ModelParams<T>& params) {
  Mat<T> act, logits, y;
  run_head(h_cat, params, Head::hadamard, act, logits, y);
  return y;
}

template <class T>
Mat<T> predict_mlp(const Mat<T>& h_cat, const ModelParams<T>& params) {
  Mat<T> act, logits, y;
  run_head(h_cat, params, Head::mlp, act, logits, y);
  return y;
}

template <class T>
double ce_loss(const Mat<T>& y, const Labels& labels, const Mask& mask) {
  if (static_cast<Index>(labels.size()) != y.rows() ||
      static_cast<Index>(mask.size()) != y.rows())
    throw std::invalid_argument("ce_loss: label/mask length mismatch");
  if (masked_count(mask) == 0) throw DataError("empty training mask");
  double loss = 0.0;
  for (Index i = 0; i < y.rows(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    const Index c = labels[static_cast<std::size_t>(i)];
    if (c < 0 || c >= y.cols())
      throw std::invalid_argument("ce_loss: label out of range");
    loss -= std::log(static_cast<double>(y(i, c)));
  }
  return loss;
}

template <class T>
double ce_loss_logits(const Mat<T>& logits, const Labels& labels, const Mask& mask) {
  if (static_cast<Index>(labels.size()) != logits.rows() ||
      static_cast<Index>(mask.size()) != logits.rows())
    throw std::invalid_argument("ce_loss_logits: label/mask length mismatch");
  if (masked_count(mask) == 0) throw DataError("empty training mask");
  double loss = 0.0;
  for (Index i = 0; i < logits.rows(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    const Index c = labels[static_cast<std::size_t>(i)];
    if (c < 0 || c >= logits.cols())
      throw std::invalid_argument("ce_loss_logits: label out of range");
    const T* z = logits.row(i);
    double mx = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j < logits.cols(); ++j)
      mx = std::max(mx, static_cast<double>(z[j]));
    double sum = 0.0;
    for (Index j = 0; j < logits.cols(); ++j)
      sum += std::exp(static_cast<double>(z[j]) - mx);
    loss += mx + std::log(sum) - static_cast<double>(z[c]);
  }
  return loss;
}

template <class T>
ForwardCache<T> forward(const Mat<T>& features, const OperatorBundle& bundle,
                        const ModelParams<T>& params, const DiffusionParams& dp,
                        const TrainConfig& cfg, bool training, Rng* dropout_rng) {
  ForwardCache<T> cache;
  cache.training = training;
  cache.param_revision = params.revision;
  cache.x_star = ego_embed(features, params);

  const bool use_dropout = training && cfg.dropout > 0.0;
  if (use_dropout) {
    if (dropout_rng == nullptr)
      throw std::invalid_argument("forward: dropout requires an RNG");
    const double keep_scale = 1.0 / (1.0 - cfg.dropout);
    cache.drop_mask = Mat<T>(cache.x_star.rows(), cache.x_star.cols());
    cache.x_drop = cache.x_star;
    for (std::size_t i = 0; i < cache.drop_mask.size(); ++i) {
      const bool keep = dropout_rng->uniform() >= cfg.dropout;
      const T scale = keep ? static_cast<T>(keep_scale) : T(0);
      cache.drop_mask.data()[i] = scale;
      cache.x_drop.data()[i] *= scale;
    }
  } else {
    cache.x_drop = cache.x_star;
  }

  cache.h_local = diffuse_local(cache.x_drop, bundle, dp);
  if (cfg.global_mode == GlobalMode::dense)
    cache.h_global = diffuse_global_dense(cache.x_drop, bundle, dp);
  else
    cache.h_global = diffuse_global_neumann(cache.x_drop, bundle, dp);
  cache.h_cat = concat_embeddings(cache.x_drop, cache.h_local, cache.h_global);
  run_head(cache.h_cat, params, cfg.head, cache.head_act, cache.logits, cache.y);
  return cache;
}

template <class T>
void backward(const ForwardCache<T>& cache, const Mat<T>& features,
              const Labels& labels, const Mask& mask, const OperatorBundle& bundle,
              const DiffusionParams& dp, const TrainConfig& cfg,
              ModelParams<T>& params) {
  if (cache.param_revision != params.revision)
    throw std::logic_error("backward: stale forward cache");
  if (masked_count(mask) == 0) throw DataError("empty training mask");
  params.zero_grads();

  // d loss / d logits = Y - one_hot on masked rows.
  Mat<T> dz = cache.y;
  for (Index i = 0; i < dz.rows(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) {
      std::fill_n(dz.row(i), dz.cols(), T(0));
      continue;
    }
    dz(i, labels[static_cast<std::size_t>(i)]) -= T(1);
  }

  params.g_out_weight = matmul_tn(cache.head_act, dz);
  params.g_out_bias = colsum(dz);

  Mat<T> d_act = matmul_nt(dz, params.out_weight);
  for (std::size_t i = 0; i < d_act.size(); ++i)
    if (cache.head_act.data()[i] <= T(0)) d_act.data()[i] = T(0);

  Mat<T> d_cat;
  if (cfg.head == Head::hadamard) {
    d_cat = d_act;
    Mat<T>& g_gate = params.g_gate_weight;
    for (Index i = 0; i < d_cat.rows(); ++i) {
      T* dst = d_cat.row(i);
      const T* cat_row = cache.h_cat.row(i);
      const T* w = params.gate_weight.row(0);
      T* gg = g_gate.row(0);
      for (Index j = 0; j < d_cat.cols(); ++j) {
        gg[j] += dst[j] * cat_row[j];
        dst[j] *= w[j];
      }
    }
  } else {
    params.g_hidden_weight = matmul_tn(cache.h_cat, d_act);
    params.g_hidden_bias = colsum(d_act);
    d_cat = matmul_nt(d_act, params.hidden_weight);
  }

  // Split the concatenation gradient into the three scales.
  const Index d = cache.x_star.cols();
  Mat<T> d_ego(d_cat.rows(), d), d_local(d_cat.rows(), d), d_global(d_cat.rows(), d);
  for (Index i = 0; i < d_cat.rows(); ++i) {
    const T* src = d_cat.row(i);
    std::copy_n(src, d, d_ego.row(i));
    std::copy_n(src + d, d, d_local.row(i));
    std::copy_n(src + 2 * d, d, d_global.row(i));
  }

  // Global path: the resolvent (or its Neumann partial sum) is symmetric,
  // so the adjoint applies the same map to the incoming gradient.
  Mat<T> d_source;
  if (cfg.global_mode == GlobalMode::dense) {
    d_source = bundle.solve_dense(d_global.template cast<double>()).template cast<T>();
  } else {
    d_source = neumann_apply(d_global, bundle.adj, dp.delta, dp.T);
  }

  // Local path: K-step adjoint recursion.
  Mat<T> g = d_local;
  for (Index k = 0; k < dp.K; ++k) {
    add_in_place(d_source, g);
    Mat<T> next = spmm(bundle.adj, g);
    scale_in_place(next, static_cast<T>(dp.delta));
    g = std::move(next);
  }

  // Source adjoint: S = alpha X + beta (L A) X + gamma L X, so
  // dX += alpha dS + beta A (L dS) + gamma (L dS).
  Mat<T> dx = d_ego;
  add_in_place(dx, g);  // (delta A)^K tail of the local path
  axpy(dx, static_cast<T>(dp.alpha), d_source);
  if (dp.beta != 0.0 || dp.gamma != 0.0) {
    Mat<T> w = spmm(bundle.lap, d_source);
    if (dp.gamma != 0.0) axpy(dx, static_cast<T>(dp.gamma), w);
    if (dp.beta != 0.0) {
      Mat<T> aw = spmm(bundle.adj, w);
      axpy(dx, static_cast<T>(dp.beta), aw);
    }
  }

  if (!cache.drop_mask.empty()) {
    for (std::size_t i = 0; i < dx.size(); ++i)
      dx.data()[i] *= cache.drop_mask.data()[i];
  }
  for (std::size_t i = 0; i < dx.size(); ++i)
    if (cache.x_star.data()[i] <= T(0)) dx.data()[i] = T(0);

  params.g_ego_weight = matmul_tn(features, dx);
  params.g_ego_bias = colsum(dx);
}

template <class T>
double accuracy(const Mat<T>& y, const Labels& labels, const Mask& mask) {
  if (static_cast<Index>(labels.size()) != y.rows() ||
      static_cast<Index>(mask.size()) != y.rows())
    throw std::invalid_argument("accuracy: label/mask length mismatch");
  if (masked_count(mask) == 0) throw DataError("empty mask");
  Index correct = 0, total = 0;
  for (Index i = 0; i < y.rows(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    ++total;
    // Ties break toward the lowest class index.
    Index best = 0;
    const T* row = y.row(i);
    for (Index j = 1; j < y.cols(); ++j)
      if (row[j] > row[best]) best = j;
    if (best == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

namespace {

template <class T>
struct AdamState {
  std::vector<Mat<T>> m, v;
};

template <class T>
void adam_step(ModelParams<T>& params, AdamState<T>& state, const TrainConfig& cfg,
               Index step_index) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  auto refs = params.learnable(cfg.head);
  if (state.m.empty()) {
    for (const auto& r : refs) {
      state.m.emplace_back(r.value->rows(), r.value->cols());
      state.v.emplace_back(r.value->rows(), r.value->cols());
    }
  }
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_index));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_index));
  for (std::size_t t = 0; t < refs.size(); ++t) {
    Mat<T>& p = *refs[t].value;
    const Mat<T>& gmat = *refs[t].grad;
    Mat<T>& m = state.m[t];
    Mat<T>& v = state.v[t];
    const bool decay = !refs[t].is_bias && cfg.weight_decay > 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double grad = static_cast<double>(gmat.data()[i]);
      const double mi = beta1 * static_cast<double>(m.data()[i]) + (1.0 - beta1) * grad;
      const double vi =
          beta2 * static_cast<double>(v.data()[i]) + (1.0 - beta2) * grad * grad;
      m.data()[i] = static_cast<T>(mi);
      v.data()[i] = static_cast<T>(vi);
      double update = cfg.learning_rate * (mi / bc1) / (std::sqrt(vi / bc2) + eps);
      if (decay)
        update += cfg.learning_rate * cfg.weight_decay * static_cast<double>(p.data()[i]);
      p.data()[i] = static_cast<T>(static_cast<double>(p.data()[i]) - update);
    }
  }
  ++params.revision;
}

template <class T>
ModelParams<T> snapshot(ModelParams<T>& params) {
  return params;  // value copy; gradient buffers come along but are inert
}

}  // namespace

template <class T>
TrainResult<T> train(const Mat<T>& features, const Labels& labels, Index num_classes,
                     const Mask& train_mask, const Mask& valid_mask,
                     const OperatorBundle& bundle, const DiffusionParams& dp,
                     const TrainConfig& cfg) {
  cfg.validate();
  dp.validate();
  if (masked_count(train_mask) == 0) throw DataError("empty training mask");
  if (masked_count(valid_mask) == 0) throw DataError("empty validation mask");
  for (const Index c : labels) {
    if (c < 0 || c >= num_classes)
      throw DataError("train: label out of range of declared class count");
  }

  Rng init_rng(cfg.seed);
  ModelParams<T> params =
      ModelParams<T>::glorot(features.cols(), cfg.hidden_dim, num_classes, init_rng);
  Rng dropout_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

  AdamState<T> adam;
  TrainResult<T> result;
  double best_valid = -1.0;
  Index epochs_since_best = 0;
  result.params = snapshot(params);

  for (Index epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    auto cache = forward(features, bundle, params, dp, cfg, true, &dropout_rng);
    const double loss = ce_loss_logits(cache.logits, labels, train_mask);
    if (!std::isfinite(loss))
      throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                         ": non-finite loss");
    backward(cache, features, labels, train_mask, bundle, dp, cfg, params);
    if (cfg.learning_rate > 0.0) adam_step(params, adam, cfg, epoch + 1);
    if (!params.all_finite())
      throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                         ": non-finite parameter");

    auto eval_cache = forward(features, bundle, params, dp, cfg, false, nullptr);
    const double train_acc = accuracy(eval_cache.y, labels, train_mask);
    const double valid_acc = accuracy(eval_cache.y, labels, valid_mask);
    result.history.push_back({epoch, loss, train_acc, valid_acc});

    if (valid_acc > best_valid) {
      best_valid = valid_acc;
      result.best_epoch = epoch;
      result.params = snapshot(params);
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
      if (cfg.patience > 0 && epochs_since_best >= cfg.patience) break;
    }
  }
  return result;
}

template <class T>
double evaluate(const Mat<T>& features, const Labels& labels, const Mask& mask,
                const OperatorBundle& bundle, const ModelParams<T>& params,
                const DiffusionParams& dp, const TrainConfig& cfg) {
  auto cache = forward(features, bundle, params, dp, cfg, false, nullptr);
  return accuracy(cache.y, labels, mask);
}

// Explicit instantiations for the two supported precisions.
#define ADGNN_INSTANTIATE_MODEL(T)                                                   \
  template struct ModelParams<T>;                                                    \
  template Mat<T> ego_embed(const Mat<T>&, const ModelParams<T>&);                   \
  template Mat<T> concat_embeddings(const Mat<T>&, const Mat<T>&, const Mat<T>&);    \
  template Mat<T> predict_hadamard(const Mat<T>&, const ModelParams<T>&);            \
  template Mat<T> predict_mlp(const Mat<T>&, const ModelParams<T>&);                 \
  template double ce_loss(const Mat<T>&, const Labels&, const Mask&);                \
  template double ce_loss_logits(const Mat<T>&, const Labels&, const Mask&);         \
  template ForwardCache<T> forward(const Mat<T>&, const OperatorBundle&,             \
                                   const ModelParams<T>&, const DiffusionParams&,    \
                                   const TrainConfig&, bool, Rng*);                   \
  template void backward(const ForwardCache<T>&, const Mat<T>&, const Labels&,       \
                         const Mask&, const OperatorBundle&, const DiffusionParams&, \
                         const TrainConfig&, ModelParams<T>&);                        \
  template double accuracy(const Mat<T>&, const Labels&, const Mask&);               \
  template TrainResult<T> train(const Mat<T>&, const Labels&, Index, const Mask&,    \
                                const Mask&, const OperatorBundle&,                  \
                                const DiffusionParams&, const TrainConfig&);         \
  template double evaluate(const Mat<T>&, const Labels&, const Mask&,                \
                           const OperatorBundle&, const ModelParams<T>&,             \
                           const DiffusionParams&, const TrainConfig&);

ADGNN_INSTANTIATE_MODEL(double)
ADGNN_INSTANTIATE_MODEL(float)

#undef ADGNN_INSTANTIATE_MODEL

}  // namespace adgnn
