#include "plgnn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "plgnn/errors.hpp"

namespace plgnn {

SparseGraph SparseGraph::from_edges(std::size_t n, const std::vector<Edge>& edges) {
  if (n == 0) throw DataError("from_edges: empty graph");

  // canonical undirected edge set; duplicates tolerated when weights agree
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> canon;
  for (const Edge& e : edges) {
    if (e.src >= n || e.dst >= n)
      throw DataError("from_edges: node id out of range: (" +
                      std::to_string(e.src) + "," + std::to_string(e.dst) +
                      ") with n=" + std::to_string(n));
    if (e.src == e.dst)
      throw DataError("from_edges: self-loop at node " + std::to_string(e.src));
    if (!(e.weight > 0.0))
      throw DataError("from_edges: nonpositive weight on edge (" +
                      std::to_string(e.src) + "," + std::to_string(e.dst) + ")");
    const auto key = std::minmax(e.src, e.dst);
    auto [it, inserted] = canon.emplace(std::pair(key.first, key.second), e.weight);
    if (!inserted && it->second != e.weight)
      throw DataError("from_edges: conflicting duplicate edge (" +
                      std::to_string(key.first) + "," + std::to_string(key.second) + ")");
  }

  SparseGraph g;
  g.offsets_.assign(n + 1, 0);
  for (const auto& [key, w] : canon) {
    (void)w;
    ++g.offsets_[key.first + 1];
    ++g.offsets_[key.second + 1];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (g.offsets_[i + 1] == 0)
      throw DataError("from_edges: node " + std::to_string(i) + " is isolated");
    g.offsets_[i + 1] += g.offsets_[i];
  }

  const std::size_t slots = g.offsets_[n];
  g.neighbors_.resize(slots);
  g.weights_.resize(slots);
  g.slot_source_.resize(slots);
  std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  // map iteration is ordered by (min, max), so each node's list fills ascending
  for (const auto& [key, w] : canon) {
    const auto [a, b] = key;
    g.neighbors_[cursor[a]] = b;
    g.weights_[cursor[a]] = w;
    g.slot_source_[cursor[a]++] = a;
    g.neighbors_[cursor[b]] = a;
    g.weights_[cursor[b]] = w;
    g.slot_source_[cursor[b]++] = b;
  }

  g.degrees_.assign(n, 0.0);
  for (std::size_t s = 0; s < slots; ++s) g.degrees_[g.slot_source_[s]] += g.weights_[s];
  g.inv_degrees_.resize(n);
  g.sqrt_degrees_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    g.inv_degrees_[i] = 1.0 / g.degrees_[i];
    g.sqrt_degrees_[i] = std::sqrt(g.degrees_[i]);
  }

  g.mirror_.resize(slots);
  for (std::size_t s = 0; s < slots; ++s) {
    const std::uint32_t i = g.slot_source_[s];
    const std::uint32_t j = g.neighbors_[s];
    const auto nbrs = g.neighbors(j);
    const auto it = std::lower_bound(nbrs.begin(), nbrs.end(), i);
    g.mirror_[s] = g.offsets_[j] + static_cast<std::size_t>(it - nbrs.begin());
  }

  g.sqrt_weights_.resize(slots);
  g.inv_sqrt_dd_.resize(slots);
  for (std::size_t s = 0; s < slots; ++s) {
    const std::uint32_t i = g.slot_source_[s];
    const std::uint32_t j = g.neighbors_[s];
    g.sqrt_weights_[s] = std::sqrt(g.weights_[s]);
    g.inv_sqrt_dd_[s] = 1.0 / std::sqrt(g.degrees_[i] * g.degrees_[j]);
  }
  return g;
}

std::vector<Edge> SparseGraph::undirected_edges() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (std::size_t s = 0; s < num_slots(); ++s) {
    const std::uint32_t i = slot_source_[s];
    const std::uint32_t j = neighbors_[s];
    if (i < j) out.push_back({i, j, weights_[s]});
  }
  return out;
}

bool SparseGraph::is_connected() const {
  const std::size_t n = num_nodes();
  std::vector<char> seen(n, 0);
  std::vector<std::uint32_t> stack{0};
  seen[0] = 1;
  std::size_t visited = 1;
  while (!stack.empty()) {
    const std::uint32_t u = stack.back();
    stack.pop_back();
    for (std::uint32_t v : neighbors(u))
      if (!seen[v]) {
        seen[v] = 1;
        ++visited;
        stack.push_back(v);
      }
  }
  return visited == n;
}

namespace {

void require_rows(const SparseGraph& g, const Matrix& f, const char* op) {
  if (f.rows() != g.num_nodes())
    throw std::invalid_argument(std::string(op) + ": signal has " +
                                std::to_string(f.rows()) + " rows, graph has " +
                                std::to_string(g.num_nodes()) + " nodes");
}

void require_p(double p, const char* op) {
  if (!(p >= 1.0))
    throw std::invalid_argument(std::string(op) + ": p must be >= 1, got " +
                                std::to_string(p));
}

}  // namespace

NodeSignal degree_normalize(const SparseGraph& g, const NodeSignal& f) {
  require_rows(g, f, "degree_normalize");
  NodeSignal fhat(f.rows(), f.cols());
  for (std::size_t i = 0; i < f.rows(); ++i) {
    const double sd = g.sqrt_degree(i);
    const double* src = f.row(i);
    double* dst = fhat.row(i);
    for (std::size_t k = 0; k < f.cols(); ++k) dst[k] = src[k] / sd;
  }
  return fhat;
}

EdgeField gradient(const SparseGraph& g, const NodeSignal& f) {
  require_rows(g, f, "gradient");
  const std::size_t c = f.cols();
  const NodeSignal fhat = degree_normalize(g, f);
  EdgeField field{Matrix(g.num_slots(), c)};
  for (std::size_t s = 0; s < g.num_slots(); ++s) {
    const double sw = g.sqrt_weight(s);
    const double* fi = fhat.row(g.slot_source(s));
    const double* fj = fhat.row(g.slot_target(s));
    double* out = field.values.row(s);
    for (std::size_t k = 0; k < c; ++k) out[k] = sw * (fj[k] - fi[k]);
  }
  return field;
}

NodeSignal divergence(const SparseGraph& g, const EdgeField& field) {
  if (field.values.rows() != g.num_slots())
    throw std::invalid_argument("divergence: field has " +
                                std::to_string(field.values.rows()) +
                                " slots, graph has " +
                                std::to_string(g.num_slots()));
  const std::size_t c = field.values.cols();
  NodeSignal out(g.num_nodes(), c);
  for (std::size_t s = 0; s < g.num_slots(); ++s) {
    const double sw = g.sqrt_weight(s);
    const double* fwd = field.values.row(s);
    const double* bwd = field.values.row(g.mirror(s));
    double* node = out.row(g.slot_source(s));
    for (std::size_t k = 0; k < c; ++k) node[k] += sw * (fwd[k] - bwd[k]);
  }
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const double sd = g.sqrt_degree(i);
    double* node = out.row(i);
    for (std::size_t k = 0; k < c; ++k) node[k] /= sd;
  }
  return out;
}

std::vector<double> slot_gradient_norms(const SparseGraph& g, const NodeSignal& f) {
  require_rows(g, f, "slot_gradient_norms");
  const std::size_t c = f.cols();
  const NodeSignal fhat = degree_normalize(g, f);
  std::vector<double> norms(g.num_slots());
  // compute once per undirected edge and mirror; the two slot values are
  // exact negations, so the norms are equal by construction
  for (std::size_t s = 0; s < g.num_slots(); ++s) {
    if (g.slot_source(s) > g.slot_target(s)) continue;
    const double sw = g.sqrt_weight(s);
    const double* fi = fhat.row(g.slot_source(s));
    const double* fj = fhat.row(g.slot_target(s));
    double sum = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      const double d = sw * (fj[k] - fi[k]);
      sum += d * d;
    }
    norms[s] = std::sqrt(sum);
    norms[g.mirror(s)] = norms[s];
  }
  return norms;
}

NodeSignal apply_p_laplacian(const SparseGraph& g, const NodeSignal& f,
                             double p, double norm_floor) {
  require_rows(g, f, "apply_p_laplacian");
  require_p(p, "apply_p_laplacian");
  const std::size_t c = f.cols();
  const NodeSignal fhat = degree_normalize(g, f);
  const std::vector<double> norms = slot_gradient_norms(g, f);
  NodeSignal out(g.num_nodes(), c);
  for (std::size_t s = 0; s < g.num_slots(); ++s) {
    // slot s = [i,j]; the mirrored slot [j,i] has the same norm
    const double norm = norms[s];
    double weight;
    if (p == 2.0) {
      weight = 1.0;
    } else if (norm == 0.0) {
      continue;  // zero-gradient edges contribute nothing
    } else {
      // the floor only guards negative exponents (p < 2)
      weight = std::pow(p < 2.0 ? std::max(norm, norm_floor) : norm, p - 2.0);
    }
    const double coeff = g.slot_weight(s) * weight;
    const double* fi = fhat.row(g.slot_source(s));
    const double* fj = fhat.row(g.slot_target(s));
    double* node = out.row(g.slot_source(s));
    for (std::size_t k = 0; k < c; ++k) node[k] += coeff * (fi[k] - fj[k]);
  }
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const double sd = g.sqrt_degree(i);
    double* node = out.row(i);
    for (std::size_t k = 0; k < c; ++k) node[k] /= sd;
  }
  return out;
}

double variation_sp(const SparseGraph& g, const NodeSignal& f, double p) {
  require_rows(g, f, "variation_sp");
  require_p(p, "variation_sp");
  const std::vector<double> norms = slot_gradient_norms(g, f);
  double sum = 0.0;
  for (double v : norms) sum += std::pow(v, p);
  return 0.5 * sum;
}

Matrix normalized_adjacency(const SparseGraph& g) {
  const std::size_t n = g.num_nodes();
  if (n > kDenseGate)
    throw std::invalid_argument("normalized_adjacency: n=" + std::to_string(n) +
                                " exceeds the dense gate " +
                                std::to_string(kDenseGate));
  Matrix a(n, n);
  for (std::size_t s = 0; s < g.num_slots(); ++s)
    a(g.slot_source(s), g.slot_target(s)) = g.slot_weight(s) * g.inv_sqrt_dd(s);
  return a;
}

double homophily(const SparseGraph& g, const std::vector<std::uint32_t>& labels) {
  if (labels.size() != g.num_nodes())
    throw std::invalid_argument("homophily: " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(g.num_nodes()) +
                                " nodes");
  double acc = 0.0;
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const auto nbrs = g.neighbors(i);
    std::size_t same = 0;
    for (std::uint32_t j : nbrs) same += labels[j] == labels[i];
    acc += static_cast<double>(same) / static_cast<double>(nbrs.size());
  }
  return acc / static_cast<double>(g.num_nodes());
}

}  // namespace plgnn
