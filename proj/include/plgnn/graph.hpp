#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "plgnn/matrix.hpp"

namespace plgnn {

struct Edge {
  std::uint32_t src;
  std::uint32_t dst;
  double weight = 1.0;
};

// Node signals are matrices with one row per node.
using NodeSignal = Matrix;

// One c-vector per directed adjacency slot, laid out like the CSR
// neighbor array of the graph it was built against.
struct EdgeField {
  Matrix values;  // num_slots x c
};

// Immutable undirected weighted graph in CSR form. Neighbor lists are
// sorted, weights strictly positive, no self-loops, no isolated nodes;
// degrees and the per-slot normalization coefficients are precomputed.
class SparseGraph {
 public:
  static SparseGraph from_edges(std::size_t n, const std::vector<Edge>& edges);

  std::size_t num_nodes() const { return degrees_.size(); }
  std::size_t num_slots() const { return neighbors_.size(); }
  std::size_t num_edges() const { return neighbors_.size() / 2; }

  std::size_t offset(std::size_t i) const { return offsets_[i]; }
  std::span<const std::uint32_t> neighbors(std::size_t i) const {
    return {neighbors_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::span<const double> weights(std::size_t i) const {
    return {weights_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }

  double degree(std::size_t i) const { return degrees_[i]; }
  double inv_degree(std::size_t i) const { return inv_degrees_[i]; }
  double sqrt_degree(std::size_t i) const { return sqrt_degrees_[i]; }
  // number of incident edges (N_i in eigenvalue bounds), as opposed to
  // the weighted degree D_ii
  std::size_t edge_count(std::size_t i) const {
    return offsets_[i + 1] - offsets_[i];
  }

  std::uint32_t slot_source(std::size_t s) const { return slot_source_[s]; }
  std::uint32_t slot_target(std::size_t s) const { return neighbors_[s]; }
  double slot_weight(std::size_t s) const { return weights_[s]; }
  double sqrt_weight(std::size_t s) const { return sqrt_weights_[s]; }
  std::size_t mirror(std::size_t s) const { return mirror_[s]; }

  // 1/sqrt(D_source * D_target)
  double inv_sqrt_dd(std::size_t s) const { return inv_sqrt_dd_[s]; }

  // undirected edge list, src < dst, canonical order
  std::vector<Edge> undirected_edges() const;

  bool is_connected() const;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> neighbors_;
  std::vector<double> weights_;
  std::vector<double> degrees_;
  std::vector<double> inv_degrees_;
  std::vector<double> sqrt_degrees_;
  std::vector<std::uint32_t> slot_source_;
  std::vector<std::size_t> mirror_;
  std::vector<double> sqrt_weights_;
  std::vector<double> inv_sqrt_dd_;
};

// f with every row divided by sqrt(D_ii); x/x = 1 is exact in IEEE
// division, so the normalization-kernel signal becomes exactly constant
NodeSignal degree_normalize(const SparseGraph& g, const NodeSignal& f);

// (grad f)([i,j]) = sqrt(W_ij/D_jj) f(j) - sqrt(W_ij/D_ii) f(i), per slot
EdgeField gradient(const SparseGraph& g, const NodeSignal& f);

// (div g)(i) = sum_j sqrt(W_ij/D_ii) (g([i,j]) - g([j,i]))
NodeSignal divergence(const SparseGraph& g, const EdgeField& field);

// nonlinear p-Laplacian applied to f; p >= 1. Slots whose gradient norm is
// exactly zero contribute nothing; near-zero norms are floored before
// negative exponents.
NodeSignal apply_p_laplacian(const SparseGraph& g, const NodeSignal& f,
                             double p, double norm_floor = 1e-8);

// S_p(f) = 1/2 sum over directed slots of ||(grad f)(slot)||^p
double variation_sp(const SparseGraph& g, const NodeSignal& f, double p);

// dense D^{-1/2} W D^{-1/2}; oracle-only, gated to n <= 2048
Matrix normalized_adjacency(const SparseGraph& g);

// mean over nodes of the same-label neighbor fraction
double homophily(const SparseGraph& g, const std::vector<std::uint32_t>& labels);

// per-slot gradient-norm vector, shared by the solver and spectral layers
std::vector<double> slot_gradient_norms(const SparseGraph& g, const NodeSignal& f);

inline constexpr std::size_t kDenseGate = 2048;

}  // namespace plgnn
