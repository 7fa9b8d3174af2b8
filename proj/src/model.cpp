#include "plgnn/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "plgnn/errors.hpp"

namespace plgnn {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (weight_decay < 0.0) throw ConfigError("weight decay must be >= 0");
  if (dropout < 0.0 || dropout >= 1.0)
    throw ConfigError("dropout must lie in [0,1)");
  if (patience > max_epochs)
    throw ConfigError("patience must not exceed max epochs");
  if (hidden == 0) throw ConfigError("hidden width must be positive");
  plap.validate();
}

PgnnParams init_params(std::size_t c, std::size_t h, std::size_t l, Rng& rng) {
  if (c == 0 || h == 0 || l == 0)
    throw std::invalid_argument("init_params: dimensions must be positive");
  auto glorot = [&rng](std::size_t fan_in, std::size_t fan_out) {
    const double bound =
        std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix m(fan_in, fan_out);
    for (std::size_t i = 0; i < m.size(); ++i)
      m.data()[i] = rng.uniform(-bound, bound);
    return m;
  };
  return PgnnParams{glorot(c, h), glorot(h, l)};
}

Var pgnn_forward(Tape& t, const SparseGraph& g, Var x, Var theta1, Var theta2,
                 const TrainConfig& cfg, Rng& rng, bool training) {
  Var f0 = t.relu(t.matmul(t.dropout(x, cfg.dropout, rng, training), theta1));
  Var f = f0;
  for (std::size_t k = 0; k < cfg.plap.steps; ++k)
    f = mp_step_var(t, g, f, f0, cfg.plap);
  if (cfg.dropout_second) f = t.dropout(f, cfg.dropout, rng, training);
  return t.log_softmax_rows(t.matmul(f, theta2));
}

Var mlp_forward(Tape& t, Var x, Var theta1, Var theta2, const TrainConfig& cfg,
                Rng& rng, bool training) {
  Var f = t.relu(t.matmul(t.dropout(x, cfg.dropout, rng, training), theta1));
  if (cfg.dropout_second) f = t.dropout(f, cfg.dropout, rng, training);
  return t.log_softmax_rows(t.matmul(f, theta2));
}

void adam_step(Matrix& param, const Matrix& grad, AdamState& state,
               std::size_t t, double lr, double weight_decay, double beta1,
               double beta2, double eps) {
  if (t < 1) throw std::invalid_argument("adam_step: step index starts at 1");
  if (!param.same_shape(grad))
    throw std::invalid_argument("adam_step: gradient shape mismatch");
  if (state.m.empty()) {
    state.m = Matrix(param.rows(), param.cols());
    state.v = Matrix(param.rows(), param.cols());
  }
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double gi = grad.data()[i] + weight_decay * param.data()[i];
    state.m.data()[i] = beta1 * state.m.data()[i] + (1.0 - beta1) * gi;
    state.v.data()[i] = beta2 * state.v.data()[i] + (1.0 - beta2) * gi * gi;
    const double mhat = state.m.data()[i] / bc1;
    const double vhat = state.v.data()[i] / bc2;
    param.data()[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

double evaluate(const Matrix& log_probs, const std::vector<std::uint32_t>& labels,
                const std::vector<std::uint32_t>& mask) {
  if (mask.empty()) throw std::invalid_argument("evaluate: empty mask");
  if (labels.size() != log_probs.rows())
    throw std::invalid_argument("evaluate: label count mismatch");
  std::size_t hits = 0;
  for (std::uint32_t i : mask) {
    const double* row = log_probs.row(i);
    std::size_t best = 0;
    for (std::size_t c = 1; c < log_probs.cols(); ++c)
      if (row[c] > row[best]) best = c;  // ties keep the lowest index
    hits += best == labels[i];
  }
  return static_cast<double>(hits) / static_cast<double>(mask.size());
}

namespace {

Var forward(Tape& t, const SparseGraph& g, Var x, Var th1, Var th2,
            ModelKind kind, const TrainConfig& cfg, Rng& rng, bool training) {
  return kind == ModelKind::pgnn
             ? pgnn_forward(t, g, x, th1, th2, cfg, rng, training)
             : mlp_forward(t, x, th1, th2, cfg, rng, training);
}

double masked_loss_value(const Matrix& logp,
                         const std::vector<std::uint32_t>& labels,
                         const std::vector<std::uint32_t>& mask) {
  double acc = 0.0;
  for (std::uint32_t i : mask) acc -= logp(i, labels[i]);
  return acc / static_cast<double>(mask.size());
}

}  // namespace

Matrix predict(const SparseGraph& g, const NodeSignal& X,
               const PgnnParams& params, ModelKind kind,
               const TrainConfig& cfg) {
  Tape t;
  Rng rng(0);  // unused in evaluation mode
  Var x = t.leaf(X);
  Var th1 = t.leaf(params.theta1);
  Var th2 = t.leaf(params.theta2);
  Var out = forward(t, g, x, th1, th2, kind, cfg, rng, false);
  return t.value(out);
}

TrainOutcome train(const SparseGraph& g, const NodeSignal& X,
                   const std::vector<std::uint32_t>& labels,
                   const SplitMask& split, ModelKind kind,
                   const TrainConfig& cfg) {
  cfg.validate();
  if (split.train.empty()) throw std::invalid_argument("train: empty train mask");
  if (split.val.empty()) throw std::invalid_argument("train: empty val mask");
  if (labels.size() != X.rows())
    throw std::invalid_argument("train: label count mismatch");

  std::size_t num_classes = 0;
  for (std::uint32_t y : labels)
    num_classes = std::max<std::size_t>(num_classes, y + 1);

  Rng rng(cfg.seed);
  PgnnParams params = init_params(X.cols(), cfg.hidden, num_classes, rng);
  AdamState adam1, adam2;

  PgnnParams best = params;
  double best_val_acc = -1.0;
  double best_val_loss = 0.0;
  std::size_t best_epoch = 0;
  std::size_t since_improve = 0;
  std::vector<double> loss_curve;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Tape t;
    Var x = t.leaf(X);
    Var th1 = t.leaf(params.theta1, true);
    Var th2 = t.leaf(params.theta2, true);
    Var logp = forward(t, g, x, th1, th2, kind, cfg, rng, true);
    Var loss = t.masked_nll(logp, labels, split.train);
    loss_curve.push_back(t.value(loss)(0, 0));
    t.backward(loss);
    adam_step(params.theta1, t.grad(th1), adam1, epoch, cfg.lr, cfg.weight_decay);
    adam_step(params.theta2, t.grad(th2), adam2, epoch, cfg.lr, cfg.weight_decay);

    const Matrix eval_logp = predict(g, X, params, kind, cfg);
    const double val_acc = evaluate(eval_logp, labels, split.val);
    const double val_loss = masked_loss_value(eval_logp, labels, split.val);
    const bool improved =
        val_acc > best_val_acc ||
        (val_acc == best_val_acc && val_loss < best_val_loss);
    if (improved) {
      best = params;
      best_val_acc = val_acc;
      best_val_loss = val_loss;
      best_epoch = epoch;
      since_improve = 0;
    } else if (++since_improve >= cfg.patience) {
      break;
    }
  }

  const Matrix logp = predict(g, X, best, kind, cfg);
  Metrics metrics;
  metrics.train_acc = evaluate(logp, labels, split.train);
  metrics.val_acc = evaluate(logp, labels, split.val);
  metrics.test_acc = split.test.empty() ? 0.0 : evaluate(logp, labels, split.test);
  metrics.best_epoch = best_epoch;
  metrics.loss_curve = std::move(loss_curve);
  return TrainOutcome{std::move(best), std::move(metrics)};
}

}  // namespace plgnn
