#include "plgnn/plap.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "plgnn/errors.hpp"
#include "plgnn/kernels.hpp"

namespace plgnn {

void PlapConfig::validate() const {
  if (!(p >= 1.0))
    throw ConfigError("p must be >= 1, got " + std::to_string(p));
  if (!(mu > 0.0))
    throw ConfigError("mu must be > 0, got " + std::to_string(mu));
  if (steps < 1) throw ConfigError("K must be >= 1");
  if (!(norm_floor > 0.0)) throw ConfigError("norm floor must be > 0");
}

double objective(const SparseGraph& g, const NodeSignal& F, const NodeSignal& X,
                 double p, double mu) {
  if (!F.same_shape(X))
    throw std::invalid_argument("objective: F and X shapes disagree");
  double fit = 0.0;
  for (std::size_t r = 0; r < F.rows(); ++r) {
    const double* fr = F.row(r);
    const double* xr = X.row(r);
    for (std::size_t c = 0; c < F.cols(); ++c) {
      const double d = fr[c] - xr[c];
      fit += d * d;
    }
  }
  return variation_sp(g, F, p) + mu * fit;
}

std::vector<double> compute_M(const SparseGraph& g, const NodeSignal& F,
                              double p, double norm_floor) {
  if (!(p >= 1.0))
    throw std::invalid_argument("compute_M: p must be >= 1");
  const std::size_t slots = g.num_slots();
  std::vector<double> m(slots);
  if (p == 2.0) {
    for (std::size_t s = 0; s < slots; ++s) m[s] = g.slot_weight(s);
    return m;
  }
  const std::vector<double> norms = slot_gradient_norms(g, F);
  for (std::size_t s = 0; s < slots; ++s) {
    if (g.slot_source(s) > g.slot_target(s)) continue;
    const double norm = norms[s];
    double v;
    if (norm == 0.0)
      v = 0.0;  // zero-gradient edges are dropped entirely
    else
      v = g.slot_weight(s) *
          std::pow(p < 2.0 ? std::max(norm, norm_floor) : norm, p - 2.0);
    m[s] = v;
    m[g.mirror(s)] = v;
  }
  return m;
}

void compute_coeffs(const SparseGraph& g, const std::vector<double>& M,
                    double mu, double p, std::vector<double>& alpha,
                    std::vector<double>& beta) {
  if (!(mu > 0.0)) throw std::invalid_argument("compute_coeffs: mu must be > 0");
  const std::size_t n = g.num_nodes();
  alpha.assign(n, 0.0);
  beta.assign(n, 0.0);
  std::vector<double> sums(n, 0.0);
  for (std::size_t s = 0; s < g.num_slots(); ++s)
    sums[g.slot_source(s)] += M[s];
  const double reset = 2.0 * mu / p;
  for (std::size_t i = 0; i < n; ++i) {
    alpha[i] = 1.0 / (sums[i] * g.inv_degree(i) + reset);
    beta[i] = reset * alpha[i];
  }
}

IterState init_state(const SparseGraph& g, const NodeSignal& X,
                     const PlapConfig& cfg) {
  cfg.validate();
  if (X.rows() != g.num_nodes())
    throw std::invalid_argument("init_state: X rows must equal node count");
  IterState st;
  st.F = X;
  st.M = compute_M(g, st.F, cfg.p, cfg.norm_floor);
  compute_coeffs(g, st.M, cfg.mu, cfg.p, st.alpha, st.beta);
  st.lp_trace.push_back(objective(g, st.F, X, cfg.p, cfg.mu));
  return st;
}

void mp_step(const SparseGraph& g, IterState& state, const NodeSignal& X,
             const PlapConfig& cfg) {
  state.M = compute_M(g, state.F, cfg.p, cfg.norm_floor);
  compute_coeffs(g, state.M, cfg.mu, cfg.p, state.alpha, state.beta);

  const std::size_t c = X.cols();
  NodeSignal next(g.num_nodes(), c);
  for (std::size_t s = 0; s < g.num_slots(); ++s) {
    const double coeff = state.M[s] * g.inv_sqrt_dd(s);
    kernels::axpy(coeff, state.F.row(g.slot_target(s)),
                  next.row(g.slot_source(s)), c);
  }
  double residual = 0.0;
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const double a = state.alpha[i];
    const double b = state.beta[i];
    const double* xr = X.row(i);
    const double* fr = state.F.row(i);
    double* nr = next.row(i);
    for (std::size_t k = 0; k < c; ++k) {
      nr[k] = a * nr[k] + b * xr[k];
      residual = std::max(residual, std::fabs(nr[k] - fr[k]));
    }
  }
  state.F = std::move(next);
  state.last_residual = residual;
  ++state.k;
  state.lp_trace.push_back(objective(g, state.F, X, cfg.p, cfg.mu));
}

SmoothResult run_smoother(const SparseGraph& g, const NodeSignal& X,
                          const PlapConfig& cfg) {
  IterState st = init_state(g, X, cfg);
  for (std::size_t k = 0; k < cfg.steps; ++k) {
    mp_step(g, st, X, cfg);
    if (!all_finite(st.F))
      throw NumericError("run_smoother: non-finite value at step " +
                         std::to_string(st.k));
  }
  return SmoothResult{std::move(st.F), std::move(st.lp_trace), st.last_residual};
}

namespace {

Matrix dense_laplacian_p2(const SparseGraph& g) {
  Matrix lap = normalized_adjacency(g);  // enforces the dense gate
  for (std::size_t i = 0; i < lap.rows(); ++i)
    for (std::size_t j = 0; j < lap.cols(); ++j)
      lap(i, j) = (i == j ? 1.0 : 0.0) - lap(i, j);
  return lap;
}

}  // namespace

NodeSignal closed_form_p2(const SparseGraph& g, const NodeSignal& X, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("closed_form_p2: mu must be > 0");
  Matrix sys = dense_laplacian_p2(g);
  for (std::size_t i = 0; i < sys.rows(); ++i) sys(i, i) += mu;
  return scale(cholesky_solve(sys, X), mu);
}

Matrix ppr_matrix(const SparseGraph& g, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("ppr_matrix: mu must be > 0");
  Matrix sys = dense_laplacian_p2(g);
  for (std::size_t i = 0; i < sys.rows(); ++i) sys(i, i) += mu;
  return scale(cholesky_inverse(sys), mu);
}

Matrix ppr_power(const SparseGraph& g, double mu, std::size_t iters) {
  if (!(mu > 0.0)) throw std::invalid_argument("ppr_power: mu must be > 0");
  const double alpha = 1.0 / (1.0 + mu);
  const double beta = mu / (1.0 + mu);
  const Matrix adj = normalized_adjacency(g);
  const std::size_t n = g.num_nodes();
  Matrix pi = Matrix::identity(n);
  for (std::size_t k = 0; k < iters; ++k) {
    Matrix next = scale(matmul(adj, pi), alpha);
    for (std::size_t i = 0; i < n; ++i) next(i, i) += beta;
    pi = std::move(next);
  }
  return pi;
}

Var mp_step_var(Tape& t, const SparseGraph& g, Var f, Var reset,
                const PlapConfig& cfg) {
  cfg.validate();
  const double p = cfg.p;
  const double reset_coef = 2.0 * cfg.mu / p;

  Var m;
  if (cfg.detach_weights || p == 2.0) {
    // constants on the tape; at p = 2 the exponent is 0 and M = W exactly,
    // so the gradient path through M vanishes anyway
    std::vector<double> mv = compute_M(g, t.value(f), p, cfg.norm_floor);
    Matrix mm(g.num_slots(), 1);
    for (std::size_t s = 0; s < g.num_slots(); ++s) mm(s, 0) = mv[s];
    m = t.leaf(std::move(mm));
  } else {
    Var norms = t.row_l2_norm(t.edge_gradient(g, f));
    Var powed = t.pow_clamped(norms, p - 2.0, cfg.norm_floor);
    // W_s masked by the exact-zero rule; the mask is data-dependent but
    // constant w.r.t. differentiation
    const Matrix& nv = t.value(norms);
    Matrix wmask(g.num_slots(), 1);
    for (std::size_t s = 0; s < g.num_slots(); ++s)
      wmask(s, 0) = nv(s, 0) == 0.0 ? 0.0 : g.slot_weight(s);
    m = t.mul(powed, t.leaf(std::move(wmask)));
  }

  Matrix inv_deg(g.num_nodes(), 1);
  for (std::size_t i = 0; i < g.num_nodes(); ++i) inv_deg(i, 0) = g.inv_degree(i);
  Var sums = t.mul(t.edge_scatter_node_sum(g, m), t.leaf(std::move(inv_deg)));
  Var alpha = t.reciprocal(t.add_scalar(sums, reset_coef));
  Var beta = t.scale(alpha, reset_coef);

  Var agg = t.edge_gather(g, m, f);
  return t.add(t.row_scale(agg, alpha), t.row_scale(reset, beta));
}

}  // namespace plgnn
