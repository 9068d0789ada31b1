#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "adgnn/diffusion.hpp"
#include "adgnn/operators.hpp"

namespace adgnn {

enum class Head { hadamard, mlp };
enum class Precision { f32, f64 };
// How the model computes the infinite-diffusion embeddings during
// training. The Neumann default keeps the per-epoch cost at
// O(T |E| d') with an a-priori error bound of delta^(T+1)/(1-delta).
enum class GlobalMode { dense, neumann };

struct TrainConfig {
  Index hidden_dim = 64;
  double learning_rate = 0.01;
  double weight_decay = 5e-4;
  Index max_epochs = 500;
  Index patience = 100;
  double dropout = 0.5;
  Head head = Head::hadamard;
  std::uint64_t seed = 42;
  Precision precision = Precision::f64;
  GlobalMode global_mode = GlobalMode::neumann;

  void validate() const;
};

using Mask = std::vector<std::uint8_t>;
using Labels = std::vector<Index>;

// All learnable tensors with their gradient buffers.
// Shapes: ego d x d' / 1 x d', gate 1 x 3d', out 3d' x C / 1 x C,
// hidden 3d' x 3d' / 1 x 3d' (mlp head only).
template <class T>
struct ModelParams {
  Mat<T> ego_weight, ego_bias;
  Mat<T> gate_weight;
  Mat<T> out_weight, out_bias;
  Mat<T> hidden_weight, hidden_bias;

  Mat<T> g_ego_weight, g_ego_bias;
  Mat<T> g_gate_weight;
  Mat<T> g_out_weight, g_out_bias;
  Mat<T> g_hidden_weight, g_hidden_bias;

  // Incremented on every optimizer update; caches remember the revision
  // they were computed against.
  std::uint64_t revision = 0;

  static ModelParams glorot(Index feature_dim, Index hidden_dim, Index num_classes,
                            Rng& rng);

  void zero_grads();
  bool all_finite() const;

  struct TensorRef {
    const char* name;
    Mat<T>* value;
    Mat<T>* grad;
    bool is_bias;
  };
  // Tensors the given head actually trains.
  std::vector<TensorRef> learnable(Head head);
  // Every tensor, for (de)serialization.
  std::vector<std::pair<const char*, Mat<T>*>> all_tensors();
};

template <class T>
struct ForwardCache {
  Mat<T> x_star;     // ReLU ego embeddings, pre-dropout
  Mat<T> drop_mask;  // 0 or 1/(1-p); empty when dropout off
  Mat<T> x_drop;     // diffusion input (== x_star when dropout off)
  Mat<T> h_local, h_global, h_cat;
  Mat<T> head_act;   // post-ReLU head activations
  Mat<T> logits;
  Mat<T> y;          // softmax probabilities
  bool training = false;
  std::uint64_t param_revision = 0;
};

template <class T>
Mat<T> ego_embed(const Mat<T>& features, const ModelParams<T>& params);

template <class T>
Mat<T> concat_embeddings(const Mat<T>& ego, const Mat<T>& local, const Mat<T>& global_h);

template <class T>
Mat<T> predict_hadamard(const Mat<T>& h_cat, const ModelParams<T>& params);

template <class T>
Mat<T> predict_mlp(const Mat<T>& h_cat, const ModelParams<T>& params);

// Cross-entropy over the masked nodes, summed (not averaged).
template <class T>
double ce_loss(const Mat<T>& y, const Labels& labels, const Mask& mask);

// Same loss evaluated from logits through log-sum-exp; this is what the
// training loop minimizes.
template <class T>
double ce_loss_logits(const Mat<T>& logits, const Labels& labels, const Mask& mask);

// Full pipeline: ego embed, optional dropout, local + global diffusion,
// concat, head. dropout_rng is consumed only when training with
// dropout > 0.
template <class T>
ForwardCache<T> forward(const Mat<T>& features, const OperatorBundle& bundle,
                        const ModelParams<T>& params, const DiffusionParams& dp,
                        const TrainConfig& cfg, bool training, Rng* dropout_rng);

// Reverse-mode pass; fills the gradient buffers of every tensor the
// configured head trains. The diffusion operators are constants: their
// transposes route the signal back to the ego layer.
template <class T>
void backward(const ForwardCache<T>& cache, const Mat<T>& features,
              const Labels& labels, const Mask& mask, const OperatorBundle& bundle,
              const DiffusionParams& dp, const TrainConfig& cfg,
              ModelParams<T>& params);

template <class T>
double accuracy(const Mat<T>& y, const Labels& labels, const Mask& mask);

struct EpochStats {
  Index epoch;
  double loss;
  double train_accuracy;
  double valid_accuracy;
};

template <class T>
struct TrainResult {
  ModelParams<T> params;
  std::vector<EpochStats> history;
  Index best_epoch = 0;
};

// Full-batch training with adaptive moments, decoupled weight decay, and
// validation-based early stopping. Throws NumericError (with the epoch in
// the message) if the loss becomes non-finite.
template <class T>
TrainResult<T> train(const Mat<T>& features, const Labels& labels, Index num_classes,
                     const Mask& train_mask, const Mask& valid_mask,
                     const OperatorBundle& bundle, const DiffusionParams& dp,
                     const TrainConfig& cfg);

template <class T>
double evaluate(const Mat<T>& features, const Labels& labels, const Mask& mask,
                const OperatorBundle& bundle, const ModelParams<T>& params,
                const DiffusionParams& dp, const TrainConfig& cfg);

}  // namespace adgnn
