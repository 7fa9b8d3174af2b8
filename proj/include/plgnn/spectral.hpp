#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plgnn/graph.hpp"
#include "plgnn/matrix.hpp"

namespace plgnn {

struct EigenPair {
  double lambda = 0.0;
  std::vector<double> u;
};

struct EigenDecomposition {
  std::vector<double> eigenvalues;  // ascending
  Matrix vectors;                   // column i pairs with eigenvalue i
  double offdiag_residual = 0.0;
  std::size_t sweeps = 0;
};

// cyclic Jacobi diagonalization of a dense symmetric matrix; converges when
// the off-diagonal Frobenius mass drops below tol * ||A||_F. Throws
// NumericError (reporting the residual) if the sweep budget runs out.
EigenDecomposition jacobi_eigh(const Matrix& a, double tol = 1e-10,
                               std::size_t max_sweeps = 64);

// full eigendecomposition of Delta_2 = I - D^{-1/2} W D^{-1/2}; n <= 1024
EigenDecomposition eigh_p2(const SparseGraph& g);

// max_i |(Delta_p u)_i - lambda |u_i|^{p-2} u_i|
double verify_p_eigenpair(const SparseGraph& g, const EigenPair& pair, double p);

// phi_p(x) = |x|^{p-2} x, with phi_p(0) = 0
double phi_p(double x, double p);

// sum_i phi_p(u_i) phi_p(v_i)
double p_inner(const std::vector<double>& u, const std::vector<double>& v,
               double p);

// || action(Delta_p) - Phi_p(U) Lambda Phi_p(U)^T ||_max, where the action
// matrix is assembled from apply_p_laplacian on basis directions (exact
// only at p = 2 where the operator is linear)
double decomposition_residual(const SparseGraph& g,
                              const std::vector<EigenPair>& pairs, double p);

// eigenvalue upper bound: 2^{p-1} for p >= 2,
// 2^{p-1} sqrt(N_max) for 1 < p < 2, sqrt(N_min) for p = 1,
// with N_* taken over per-node incident-edge counts.
double eigenvalue_bound(const SparseGraph& g, double p);

enum class FilterRegime { low_pass, low_high_pass };

struct FilterRow {
  std::uint32_t node = 0;
  double grad_norm = 0.0;   // ||grad f(i)||
  double g_value = 0.0;     // alpha_i sum_j M_ij / sqrt(D_ii D_jj)
  double threshold = 0.0;
  FilterRegime regime = FilterRegime::low_high_pass;
};

struct FilterReport {
  double p = 2.0;
  double mu = 0.1;
  std::size_t n_k = 0;  // incident-edge count used in the p<2 threshold
  std::vector<FilterRow> rows;
};

FilterReport filter_response(const SparseGraph& g, const NodeSignal& f,
                             double p, double mu);

const char* regime_name(FilterRegime r);

struct EntropyResult {
  std::vector<double> entropy;       // per node, natural log
  std::vector<std::size_t> histogram;
  double bin_width = 0.0;            // bins cover [0, bins * bin_width]
};

// entropy of the aggregation weights A_ij = alpha_i M_ij / sqrt(D_ii D_jj),
// row-renormalized to sum to one; zero rows get entropy 0
EntropyResult aggregation_entropy(const SparseGraph& g,
                                  const std::vector<double>& M,
                                  const std::vector<double>& alpha,
                                  std::size_t bins = 30);

inline constexpr std::size_t kEighGate = 1024;

}  // namespace plgnn
