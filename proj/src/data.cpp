#include "plgnn/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "plgnn/errors.hpp"
#include "plgnn/rng.hpp"
#include "plgnn/textio.hpp"

namespace plgnn {

std::size_t Dataset::num_classes() const {
  std::size_t k = 0;
  for (std::uint32_t y : labels) k = std::max<std::size_t>(k, y + 1);
  return k;
}

SplitScheme split_scheme_from_string(const std::string& s) {
  if (s == "sparse") return SplitScheme::sparse;
  if (s == "dense") return SplitScheme::dense;
  throw ConfigError("unknown split scheme '" + s + "' (expected sparse|dense)");
}

const char* split_scheme_name(SplitScheme s) {
  return s == SplitScheme::sparse ? "sparse" : "dense";
}

SplitMask make_split(std::size_t n, SplitScheme scheme,
                     const std::vector<std::uint32_t>& labels,
                     std::uint64_t seed) {
  if (labels.size() != n)
    throw std::invalid_argument("make_split: label count mismatch");
  const double train_frac = scheme == SplitScheme::sparse ? 0.025 : 0.60;
  const double val_frac = scheme == SplitScheme::sparse ? 0.025 : 0.20;
  const std::size_t n_train =
      static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(n)));
  const std::size_t n_val =
      static_cast<std::size_t>(std::floor(val_frac * static_cast<double>(n)));
  if (n_train == 0 || n_val == 0)
    throw DataError("make_split: train or val mask empty at n=" +
                    std::to_string(n));

  std::vector<std::uint32_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<std::uint32_t>(i);
  Rng rng(seed);
  rng.shuffle(perm);

  SplitMask out;
  out.train.assign(perm.begin(), perm.begin() + n_train);
  out.val.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
  out.test.assign(perm.begin() + n_train + n_val, perm.end());
  return out;
}

SparseGraph perturb_edges(const SparseGraph& g, double r, std::uint64_t seed) {
  if (r < 0.0 || r > 1.0)
    throw std::invalid_argument("perturb_edges: rate must lie in [0,1]");
  std::vector<Edge> edges = g.undirected_edges();
  if (r == 0.0) return SparseGraph::from_edges(g.num_nodes(), edges);

  const std::size_t n = g.num_nodes();
  const std::size_t count =
      static_cast<std::size_t>(std::ceil(r * static_cast<double>(edges.size())));
  const std::size_t possible = n * (n - 1) / 2;
  if (edges.size() + count > possible)
    throw DataError("perturb_edges: not enough non-edges to add " +
                    std::to_string(count));

  std::set<std::pair<std::uint32_t, std::uint32_t>> present;
  for (const Edge& e : edges) present.emplace(e.src, e.dst);

  Rng rng(seed);

  // fresh unit-weight edges, rejection-sampled from the non-edges
  std::vector<Edge> added;
  added.reserve(count);
  while (added.size() < count) {
    const auto a = static_cast<std::uint32_t>(rng.uniform_int(n));
    const auto b = static_cast<std::uint32_t>(rng.uniform_int(n));
    if (a == b) continue;
    const auto key = std::minmax(a, b);
    if (!present.emplace(key.first, key.second).second) continue;
    added.push_back({key.first, key.second, 1.0});
  }

  // degrees counting both the surviving originals and the additions
  std::vector<std::size_t> deg(n, 0);
  for (const Edge& e : edges) {
    ++deg[e.src];
    ++deg[e.dst];
  }
  for (const Edge& e : added) {
    ++deg[e.src];
    ++deg[e.dst];
  }

  // remove `count` originals; an edge whose removal would isolate a node is
  // skipped and resampled on a later pass
  std::vector<std::size_t> order(edges.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<char> removed(edges.size(), 0);
  std::size_t n_removed = 0;
  while (n_removed < count) {
    rng.shuffle(order);
    const std::size_t before = n_removed;
    for (std::size_t idx : order) {
      if (n_removed == count) break;
      if (removed[idx]) continue;
      const Edge& e = edges[idx];
      if (deg[e.src] <= 1 || deg[e.dst] <= 1) continue;
      removed[idx] = 1;
      --deg[e.src];
      --deg[e.dst];
      ++n_removed;
    }
    if (n_removed == before)
      throw DataError("perturb_edges: cannot remove " + std::to_string(count) +
                      " edges without isolating a node");
  }

  std::vector<Edge> result;
  result.reserve(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i)
    if (!removed[i]) result.push_back(edges[i]);
  result.insert(result.end(), added.begin(), added.end());
  return SparseGraph::from_edges(n, result);
}

CsbmParams csbm_params_from_phi(std::size_t n, std::size_t f, double d,
                                double epsilon, double phi, std::uint64_t seed) {
  if (n == 0 || f == 0 || !(d > 0.0) || !(epsilon > 0.0))
    throw ConfigError("csbm: n, f, d, epsilon must be positive");
  if (phi < -1.0 || phi > 1.0)
    throw ConfigError("csbm: phi must lie in [-1, 1]");
  CsbmParams p;
  p.n = n;
  p.f = f;
  p.d = d;
  p.epsilon = epsilon;
  p.phi = phi;
  p.seed = seed;
  const double arg = phi * std::numbers::pi / 2.0;
  p.lambda = std::sqrt(1.0 + epsilon) * std::sin(arg);
  p.mu_feat = std::sqrt((1.0 + epsilon) * static_cast<double>(n) /
                        static_cast<double>(f)) *
              std::cos(arg);
  if (std::fabs(p.lambda) * std::sqrt(d) >= d)
    throw ConfigError("csbm: |lambda sqrt(d)| >= d, edge probabilities leave [0,1]");
  return p;
}

CsbmResult generate_csbm(const CsbmParams& params) {
  const std::size_t n = params.n;
  const std::size_t f = params.f;
  if (n < 2) throw ConfigError("csbm: need at least two nodes");
  const double p_same =
      (params.d + params.lambda * std::sqrt(params.d)) / static_cast<double>(n);
  const double p_diff =
      (params.d - params.lambda * std::sqrt(params.d)) / static_cast<double>(n);
  if (p_same < 0.0 || p_same > 1.0 || p_diff < 0.0 || p_diff > 1.0)
    throw ConfigError("csbm: edge probability outside [0,1]");

  Rng rng(params.seed);

  // balanced +-1 communities
  std::vector<double> sign(n);
  std::vector<std::uint32_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    sign[i] = i % 2 == 0 ? 1.0 : -1.0;
    labels[i] = i % 2 == 0 ? 0 : 1;
  }

  // features: x_i = sqrt(mu/n) y_i u + z_i / sqrt(f), u ~ N(0, I/f)
  std::vector<double> u(f);
  const double inv_sqrt_f = 1.0 / std::sqrt(static_cast<double>(f));
  for (std::size_t k = 0; k < f; ++k) u[k] = rng.normal() * inv_sqrt_f;
  const double feat_coef = std::sqrt(params.mu_feat / static_cast<double>(n));
  Matrix x(n, f);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = x.row(i);
    const double s = feat_coef * sign[i];
    for (std::size_t k = 0; k < f; ++k)
      row[k] = s * u[k] + rng.normal() * inv_sqrt_f;
  }

  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(params.d * static_cast<double>(n)));
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j) {
      const double prob = sign[i] == sign[j] ? p_same : p_diff;
      if (rng.uniform() < prob) edges.push_back({i, j, 1.0});
    }

  // repair isolated nodes with one random edge so n stays fixed
  std::vector<std::size_t> deg(n, 0);
  for (const Edge& e : edges) {
    ++deg[e.src];
    ++deg[e.dst];
  }
  std::size_t repaired = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (deg[i] > 0) continue;
    std::uint32_t j;
    do {
      j = static_cast<std::uint32_t>(rng.uniform_int(n));
    } while (j == i);
    edges.push_back({std::min(i, j), std::max(i, j), 1.0});
    ++deg[i];
    ++deg[j];
    ++repaired;
  }

  CsbmResult out{Dataset{SparseGraph::from_edges(n, edges), std::move(x),
                         std::move(labels), {}},
                 repaired};
  return out;
}

// ------------------------------------------------------------------ files

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

}  // namespace

std::vector<Edge> read_edge_list(const std::string& path, std::size_t& max_node) {
  std::ifstream in = open_in(path);
  std::vector<Edge> edges;
  max_node = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    long long src = -1, dst = -1;
    double w = 1.0;
    if (!(ss >> src >> dst))
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected 'src<TAB>dst[<TAB>weight]'");
    std::string rest;
    if (ss >> rest) {
      std::size_t pos = 0;
      try {
        w = std::stod(rest, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != rest.size())
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": cannot parse weight '" + rest + "'");
      std::string extra;
      if (ss >> extra)
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": unexpected trailing column '" + extra + "'");
    }
    if (src < 0 || dst < 0)
      throw DataError(path + ":" + std::to_string(lineno) + ": negative node id");
    edges.push_back({static_cast<std::uint32_t>(src),
                     static_cast<std::uint32_t>(dst), w});
    max_node = std::max({max_node, static_cast<std::size_t>(src),
                         static_cast<std::size_t>(dst)});
  }
  if (edges.empty()) throw DataError(path + ": no edges");
  return edges;
}

SparseGraph load_graph(const std::string& path) {
  std::size_t max_node = 0;
  const std::vector<Edge> edges = read_edge_list(path, max_node);
  return SparseGraph::from_edges(max_node + 1, edges);
}

Matrix read_features_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t cols = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' '))
        cell.pop_back();
      std::size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (cell.empty() || pos != cell.size())
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": cannot parse '" + cell + "' as a float");
      row.push_back(v);
    }
    if (cols == 0)
      cols = row.size();
    else if (row.size() != cols)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(cols) + " columns, got " +
                      std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path + ": no feature rows");
  Matrix x(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j) x(i, j) = rows[i][j];
  return x;
}

void write_features_csv(const Matrix& x, const std::string& path) {
  std::ofstream out = open_out(path);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (j) out << ',';
      out << format_double(x(i, j));
    }
    out << '\n';
  }
}

std::vector<std::uint32_t> read_labels(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<std::uint32_t> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (line.empty()) continue;
    std::size_t pos = 0;
    long long v = -1;
    try {
      v = std::stoll(line, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != line.size() || v < 0)
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": cannot parse '" + line + "' as a label");
    labels.push_back(static_cast<std::uint32_t>(v));
  }
  if (labels.empty()) throw DataError(path + ": no labels");
  return labels;
}

Dataset load_dataset(const std::string& edge_path, const std::string& feature_path,
                     const std::string& label_path) {
  std::vector<std::uint32_t> labels = read_labels(label_path);
  Matrix x = read_features_csv(feature_path);
  if (x.rows() != labels.size())
    throw DataError("dataset: " + std::to_string(x.rows()) +
                    " feature rows but " + std::to_string(labels.size()) +
                    " labels");
  std::size_t max_node = 0;
  const std::vector<Edge> edges = read_edge_list(edge_path, max_node);
  if (max_node >= labels.size())
    throw DataError("dataset: edge references node " + std::to_string(max_node) +
                    " but only " + std::to_string(labels.size()) +
                    " nodes are labeled");
  return Dataset{SparseGraph::from_edges(labels.size(), edges), std::move(x),
                 std::move(labels), {}};
}

void save_edge_list(const SparseGraph& g, const std::string& path) {
  std::ofstream out = open_out(path);
  for (const Edge& e : g.undirected_edges())
    out << e.src << '\t' << e.dst << '\t' << format_double(e.weight) << '\n';
}

void save_dataset(const Dataset& ds, const std::string& edge_path,
                  const std::string& feature_path, const std::string& label_path) {
  save_edge_list(ds.graph, edge_path);
  write_features_csv(ds.X, feature_path);
  std::ofstream out = open_out(label_path);
  for (std::uint32_t y : ds.labels) out << y << '\n';
}

SplitMask load_split(const std::string& path) {
  std::ifstream in = open_in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  auto get = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_array())
      throw DataError(path + ": missing integer array '" + key + "'");
    std::vector<std::uint32_t> v;
    for (const auto& e : j[key]) v.push_back(e.get<std::uint32_t>());
    return v;
  };
  return SplitMask{get("train"), get("val"), get("test")};
}

void save_split(const SplitMask& split, const std::string& path) {
  auto sorted = [](std::vector<std::uint32_t> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  nlohmann::ordered_json j;
  j["train"] = sorted(split.train);
  j["val"] = sorted(split.val);
  j["test"] = sorted(split.test);
  std::ofstream out = open_out(path);
  out << j.dump() << '\n';
}

}  // namespace plgnn
