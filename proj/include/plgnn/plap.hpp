#pragma once

#include <cstdint>
#include <vector>

#include "plgnn/graph.hpp"
#include "plgnn/matrix.hpp"
#include "plgnn/tape.hpp"

namespace plgnn {

struct PlapConfig {
  double p = 2.0;
  double mu = 0.1;
  std::size_t steps = 6;           // K
  double norm_floor = 1e-8;
  bool detach_weights = false;     // treat M/alpha/beta as constants in backward

  void validate() const;
};

// Per-step state of the message-passing iteration. M is stored per directed
// slot but computed once per undirected edge and mirrored, so the symmetry
// M_ij = M_ji holds by construction.
struct IterState {
  NodeSignal F;
  std::vector<double> M;       // per slot
  std::vector<double> alpha;   // per node
  std::vector<double> beta;    // per node
  std::size_t k = 0;
  std::vector<double> lp_trace;
  double last_residual = 0.0;  // ||F_{k+1} - F_k||_inf, diagnostic
};

// L_p(F) = S_p(F) + mu * sum_i ||F_i - X_i||^2
double objective(const SparseGraph& g, const NodeSignal& F, const NodeSignal& X,
                 double p, double mu);

// M_ij = W_ij * ||sqrt(W_ij/D_ii) F_i - sqrt(W_ij/D_jj) F_j||^{p-2};
// exact-zero norms give M = 0, near-zero norms are floored for p < 2.
std::vector<double> compute_M(const SparseGraph& g, const NodeSignal& F,
                              double p, double norm_floor = 1e-8);

// alpha_i = 1 / (sum_j M_ij / D_ii + 2mu/p), beta_i = (2mu/p) alpha_i
void compute_coeffs(const SparseGraph& g, const std::vector<double>& M,
                    double mu, double p, std::vector<double>& alpha,
                    std::vector<double>& beta);

IterState init_state(const SparseGraph& g, const NodeSignal& X,
                     const PlapConfig& cfg);

// one message-passing step: recompute M/alpha/beta at the current F, then
// F' = alpha D^{-1/2} M D^{-1/2} F + beta X; appends objective(F') to the trace
void mp_step(const SparseGraph& g, IterState& state, const NodeSignal& X,
             const PlapConfig& cfg);

struct SmoothResult {
  NodeSignal F;
  std::vector<double> trace;  // K+1 objective values, starting at objective(X)
  double last_residual = 0.0;
};

// K steps from F_0 = X; throws NumericError naming the step if a
// non-finite value appears.
SmoothResult run_smoother(const SparseGraph& g, const NodeSignal& X,
                          const PlapConfig& cfg);

// mu (Delta_2 + mu I)^{-1} X via dense symmetric solve; n <= 2048
NodeSignal closed_form_p2(const SparseGraph& g, const NodeSignal& X, double mu);

// the personalized-PageRank matrix mu (Delta_2 + mu I)^{-1}; n <= 2048
Matrix ppr_matrix(const SparseGraph& g, double mu);

// power-iteration form pi^{(k+1)} = alpha A~ pi^{(k)} + beta I with
// alpha = 1/(1+mu); returns the iterate after `iters` steps from pi = I
Matrix ppr_power(const SparseGraph& g, double mu, std::size_t iters);

// differentiable message-passing step on a tape; reset is the residual
// signal (X in the standalone smoother, F^(0) inside the model)
Var mp_step_var(Tape& t, const SparseGraph& g, Var f, Var reset,
                const PlapConfig& cfg);

}  // namespace plgnn
