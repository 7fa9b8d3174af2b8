#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include "plgnn/graph.hpp"
#include "plgnn/matrix.hpp"
#include "plgnn/rng.hpp"

namespace plgnn {

class Tape;

// Lightweight handle to a recorded value. Values are never mutated after
// recording; gradients become available after Tape::backward.
struct Var {
  Tape* tape = nullptr;
  std::int32_t node = -1;
  bool valid() const { return tape != nullptr && node >= 0; }
};

// Append-only reverse-mode tape. Each recorded node stores its forward
// value and a closure that scatters the upstream gradient to its inputs;
// backward visits nodes exactly once in reverse creation order. A tape and
// its Vars belong to one worker.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Matrix value, bool requires_grad = false);

  const Matrix& value(Var v) const;
  bool requires_grad(Var v) const;
  // gradient of the last backward() w.r.t. v (zeros if v never contributed)
  Matrix grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }

  // ---- elementwise / dense ops ----
  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);  // |denominator| >= 1e-12 entrywise
  Var scale(Var a, double s);
  Var add_scalar(Var a, double s);
  Var reciprocal(Var a);
  Var relu(Var a);
  Var row_l2_norm(Var a);                                    // m x c -> m x 1
  Var pow_clamped(Var a, double exponent, double floor = 1e-8);
  Var log_softmax_rows(Var a);
  Var masked_nll(Var logp, const std::vector<std::uint32_t>& labels,
                 const std::vector<std::uint32_t>& mask);
  Var dropout(Var a, double rate, Rng& rng, bool training);
  Var sum_all(Var a);                                        // -> 1 x 1
  Var row_scale(Var a, Var s);                               // rows of a scaled by s (m x 1)

  // ---- graph-aware ops (the graph must outlive the tape) ----
  // per-slot graph gradient of f, slots x c
  Var edge_gradient(const SparseGraph& g, Var f);
  // out_i = sum over slots of node i of m_s, slots x 1 -> n x 1
  Var edge_scatter_node_sum(const SparseGraph& g, Var m);
  // out_i = sum_j m_[i,j] / sqrt(D_ii D_jj) * f_j
  Var edge_gather(const SparseGraph& g, Var m, Var f);

  // reverse-topological accumulation from a 1x1 loss
  void backward(Var loss);

  // internal: used by backward closures
  const Matrix& node_value(std::int32_t idx) const { return nodes_[idx].value; }
  Matrix& node_grad_buf(std::int32_t idx);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool grad_live = false;
    std::function<void(Tape&, const Matrix&)> back;
  };

  Var record(Matrix value, bool requires_grad,
             std::function<void(Tape&, const Matrix&)> back);
  void check_mine(Var v, const char* op) const;

  // deque keeps node references stable while new nodes are appended
  std::deque<Node> nodes_;
};

// Central-difference check: compares the analytic gradient against
// (f(x+h e_i) - f(x-h e_i)) / 2h entrywise and returns the worst relative
// error, denominators floored at 1e-8. Throws NumericError if f returns a
// non-finite value.
double finite_diff_check(const std::function<double(const Matrix&)>& f,
                         const Matrix& x, const Matrix& analytic_grad,
                         double h);

}  // namespace plgnn
