#pragma once

#include <cstdint>
#include <vector>

#include "plgnn/graph.hpp"
#include "plgnn/matrix.hpp"
#include "plgnn/plap.hpp"
#include "plgnn/rng.hpp"
#include "plgnn/tape.hpp"

namespace plgnn {

enum class ModelKind { pgnn, mlp };

struct PgnnParams {
  Matrix theta1;  // c x h
  Matrix theta2;  // h x L
};

struct TrainConfig {
  double lr = 0.01;
  double weight_decay = 0.0005;
  double dropout = 0.5;
  std::size_t max_epochs = 1000;
  std::size_t patience = 200;
  std::size_t hidden = 16;
  std::uint64_t seed = 1;
  PlapConfig plap;
  bool dropout_second = true;  // also apply dropout before the output layer

  void validate() const;
};

struct Metrics {
  double train_acc = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  std::size_t best_epoch = 0;        // 1-based epoch of the restored params
  std::vector<double> loss_curve;    // training loss per epoch
};

struct SplitMask {
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> val;
  std::vector<std::uint32_t> test;
};

// Glorot-uniform init, bound sqrt(6 / (fan_in + fan_out))
PgnnParams init_params(std::size_t c, std::size_t h, std::size_t l, Rng& rng);

// F0 = ReLU(dropout(X) Th1); K message-passing steps with F0 as the reset
// signal; log_softmax(dropout(F_K) Th2)
Var pgnn_forward(Tape& t, const SparseGraph& g, Var x, Var theta1, Var theta2,
                 const TrainConfig& cfg, Rng& rng, bool training);

// the same network with propagation removed
Var mlp_forward(Tape& t, Var x, Var theta1, Var theta2, const TrainConfig& cfg,
                Rng& rng, bool training);

// bias-corrected Adam with L2 weight decay added to the gradient
struct AdamState {
  Matrix m;
  Matrix v;
};

void adam_step(Matrix& param, const Matrix& grad, AdamState& state,
               std::size_t t, double lr, double weight_decay,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// fraction of masked nodes whose argmax row (lowest index on ties) equals
// the label
double evaluate(const Matrix& log_probs, const std::vector<std::uint32_t>& labels,
                const std::vector<std::uint32_t>& mask);

struct TrainOutcome {
  PgnnParams params;  // best-validation weights
  Metrics metrics;
};

TrainOutcome train(const SparseGraph& g, const NodeSignal& X,
                   const std::vector<std::uint32_t>& labels,
                   const SplitMask& split, ModelKind kind,
                   const TrainConfig& cfg);

// forward pass at fixed params in evaluation mode (no dropout)
Matrix predict(const SparseGraph& g, const NodeSignal& X,
               const PgnnParams& params, ModelKind kind,
               const TrainConfig& cfg);

}  // namespace plgnn
