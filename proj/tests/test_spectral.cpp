#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "plgnn/errors.hpp"
#include "plgnn/plap.hpp"
#include "plgnn/spectral.hpp"
#include "test_util.hpp"

using namespace plgnn;

namespace {

SparseGraph pair_graph() { return SparseGraph::from_edges(2, {{0, 1, 1.0}}); }

SparseGraph path3() {
  return SparseGraph::from_edges(3, {{0, 1, 1.0}, {1, 2, 1.0}});
}

Matrix dense_delta2(const SparseGraph& g) {
  Matrix lap = normalized_adjacency(g);
  for (std::size_t i = 0; i < lap.rows(); ++i)
    for (std::size_t j = 0; j < lap.cols(); ++j)
      lap(i, j) = (i == j ? 1.0 : 0.0) - lap(i, j);
  return lap;
}

}  // namespace

TEST_CASE("2-node eigendecomposition by hand") {
  const EigenDecomposition eig = eigh_p2(pair_graph());
  CHECK(eig.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(eig.eigenvalues[1] == doctest::Approx(2.0).epsilon(1e-12));
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(std::fabs(std::fabs(eig.vectors(0, 0)) - inv_sqrt2) < 1e-12);
  CHECK(std::fabs(std::fabs(eig.vectors(0, 1)) - inv_sqrt2) < 1e-12);
}

TEST_CASE("jacobi reconstruction and orthogonality up to n=128") {
  Rng rng(1);
  for (std::size_t n : {8, 32, 128}) {
    const SparseGraph g = testutil::random_graph(n, 2 * n, rng);
    const Matrix lap = dense_delta2(g);
    const EigenDecomposition eig = jacobi_eigh(lap);

    Matrix lam(n, n);
    for (std::size_t i = 0; i < n; ++i) lam(i, i) = eig.eigenvalues[i];
    const Matrix recon =
        matmul(matmul(eig.vectors, lam), transpose(eig.vectors));
    CHECK(max_abs_diff(recon, lap) <= 1e-9);

    const Matrix gram = matmul(transpose(eig.vectors), eig.vectors);
    CHECK(max_abs_diff(gram, Matrix::identity(n)) <= 1e-10);

    for (std::size_t i = 1; i < n; ++i)
      CHECK(eig.eigenvalues[i] >= eig.eigenvalues[i - 1]);
  }
}

TEST_CASE("zero eigenvalue with sqrt-degree eigenvector on connected graphs") {
  Rng rng(2);
  const SparseGraph g = testutil::random_graph(17, 25, rng);
  const EigenDecomposition eig = eigh_p2(g);
  CHECK(std::fabs(eig.eigenvalues[0]) <= 1e-10);
  // eigenvector proportional to sqrt(D_ii)
  double ratio = 0.0;
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const double expect = std::sqrt(g.degree(i));
    if (i == 0) ratio = eig.vectors(0, 0) / expect;
    CHECK(eig.vectors(i, 0) == doctest::Approx(ratio * expect).epsilon(1e-8));
  }
}

TEST_CASE("all Delta_2 eigenvalues lie in [0, 2]") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 3 + rng.uniform_int(30);
    const SparseGraph g = testutil::random_graph(n, n, rng);
    const EigenDecomposition eig = eigh_p2(g);
    for (double l : eig.eigenvalues) {
      CHECK(l >= -1e-10);
      CHECK(l <= 2.0 + 1e-10);
    }
  }
}

TEST_CASE("verify_p_eigenpair on the hand pair") {
  const SparseGraph g = pair_graph();
  for (double p : {1.5, 2.0, 3.0}) {
    const double a = std::pow(0.5, 1.0 / p);  // |u|_p = 1
    EigenPair pair;
    pair.lambda = std::pow(2.0, p - 1.0);
    pair.u = {a, -a};
    CHECK(verify_p_eigenpair(g, pair, p) <= 1e-12);
    // and it saturates the bound
    CHECK(pair.lambda == doctest::Approx(eigenvalue_bound(g, p)).epsilon(1e-12));
  }
}

TEST_CASE("kernel eigenvector verifies with lambda = 0 for any p") {
  Rng rng(4);
  const SparseGraph g = testutil::random_graph(9, 9, rng);
  EigenPair pair;
  pair.lambda = 0.0;
  pair.u.resize(g.num_nodes());
  for (std::size_t i = 0; i < g.num_nodes(); ++i)
    pair.u[i] = std::sqrt(g.degree(i));
  for (double p : {1.0, 1.5, 2.0, 3.0})
    CHECK(verify_p_eigenpair(g, pair, p) == 0.0);
}

TEST_CASE("every p=2 eigenpair verifies") {
  Rng rng(5);
  const SparseGraph g = testutil::random_graph(14, 20, rng);
  const EigenDecomposition eig = eigh_p2(g);
  for (std::size_t k = 0; k < g.num_nodes(); ++k) {
    EigenPair pair;
    pair.lambda = eig.eigenvalues[k];
    pair.u.resize(g.num_nodes());
    for (std::size_t i = 0; i < g.num_nodes(); ++i)
      pair.u[i] = eig.vectors(i, k);
    CHECK(verify_p_eigenpair(g, pair, 2.0) <= 1e-9);
  }
}

TEST_CASE("p_inner special cases") {
  CHECK(p_inner({1, 0}, {0, 1}, 2.0) == 0.0);
  for (double p : {1.5, 2.0, 3.0})
    CHECK(p_inner({1, 1}, {1, -1}, p) == doctest::Approx(0.0).epsilon(1e-15));
  const double self = p_inner({0.5, -0.25}, {0.5, -0.25}, 3.0);
  CHECK(self > 0.0);
  CHECK(self == doctest::Approx(std::pow(0.5, 4) + std::pow(0.25, 4)).epsilon(1e-12));
}

TEST_CASE("p=2 eigenpairs with distinct eigenvalues are orthogonal") {
  Rng rng(6);
  const SparseGraph g = testutil::random_graph(12, 18, rng);
  const EigenDecomposition eig = eigh_p2(g);
  for (std::size_t a = 0; a < g.num_nodes(); ++a)
    for (std::size_t b = a + 1; b < g.num_nodes(); ++b) {
      if (std::fabs(eig.eigenvalues[a] - eig.eigenvalues[b]) < 1e-8) continue;
      std::vector<double> u(g.num_nodes()), v(g.num_nodes());
      for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        u[i] = eig.vectors(i, a);
        v[i] = eig.vectors(i, b);
      }
      CHECK(std::fabs(p_inner(u, v, 2.0)) <= 1e-9);
    }
}

TEST_CASE("decomposition residual at p=2") {
  for (const SparseGraph& g : {pair_graph(), path3()}) {
    const EigenDecomposition eig = eigh_p2(g);
    std::vector<EigenPair> pairs(g.num_nodes());
    for (std::size_t k = 0; k < g.num_nodes(); ++k) {
      pairs[k].lambda = eig.eigenvalues[k];
      pairs[k].u.resize(g.num_nodes());
      for (std::size_t i = 0; i < g.num_nodes(); ++i)
        pairs[k].u[i] = eig.vectors(i, k);
    }
    CHECK(decomposition_residual(g, pairs, 2.0) <= 1e-9);
  }
  CHECK_THROWS_AS(decomposition_residual(pair_graph(), {}, 2.0),
                  std::invalid_argument);
}

TEST_CASE("eigenvalue bounds by case") {
  const SparseGraph g = pair_graph();
  CHECK(eigenvalue_bound(g, 2.0) == 2.0);
  CHECK(eigenvalue_bound(g, 3.0) == 4.0);
  // p=1 on P3: N_min = 1
  CHECK(eigenvalue_bound(path3(), 1.0) == 1.0);
  // 1 < p < 2 uses N_max: P3 has N_max = 2
  CHECK(eigenvalue_bound(path3(), 1.5) ==
        doctest::Approx(std::pow(2.0, 0.5) * std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("filter regime thresholds") {
  Rng rng(7);
  const SparseGraph g = testutil::random_graph(10, 10, rng, true);
  const Matrix f = testutil::random_matrix(10, 2, rng);

  const FilterReport r3 = filter_response(g, f, 3.0, 1.0);
  for (const FilterRow& row : r3.rows) {
    CHECK(row.threshold == doctest::Approx(4.0).epsilon(1e-15));
    const bool expect_lh = row.grad_norm <= 4.0;
    CHECK((row.regime == FilterRegime::low_high_pass) == expect_lh);
  }

  // p=1.5 with N_k = 4: threshold 2 (2 sqrt 4)^{1/(p-2)} = 0.125
  std::vector<Edge> star;
  for (std::uint32_t i = 1; i <= 4; ++i) star.push_back({0, i, 1.0});
  star.push_back({1, 2, 1.0});  // keep leaves above degree 1 variance
  const SparseGraph sg = SparseGraph::from_edges(5, star);
  CHECK(sg.edge_count(0) == 4);
  const FilterReport r15 = filter_response(sg, testutil::random_matrix(5, 2, rng), 1.5, 1.0);
  CHECK(r15.n_k == 4);
  for (const FilterRow& row : r15.rows)
    CHECK(row.threshold == doctest::Approx(0.125).epsilon(1e-15));
}

TEST_CASE("filter response hand value at p=2") {
  const SparseGraph g = pair_graph();
  Matrix f(2, 1);
  f(0, 0) = 1.0;
  const FilterReport r = filter_response(g, f, 2.0, 1.0);
  for (const FilterRow& row : r.rows) {
    CHECK(row.g_value == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(row.regime == FilterRegime::low_high_pass);
  }
}

TEST_CASE("aggregation entropy cases") {
  // uniform weights over a degree-4 node -> ln 4; a pure star keeps the
  // neighbor degrees equal so the renormalized row really is uniform
  std::vector<Edge> star;
  for (std::uint32_t i = 1; i <= 4; ++i) star.push_back({0, i, 1.0});
  const SparseGraph g = SparseGraph::from_edges(5, star);
  std::vector<double> m(g.num_slots(), 0.0);
  std::vector<double> alpha(g.num_nodes(), 1.0);
  // node 0 slots get equal positive weight
  for (std::size_t s = g.offset(0); s < g.offset(1); ++s) m[s] = 1.0;
  EntropyResult res = aggregation_entropy(g, m, alpha);
  CHECK(res.entropy[0] == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  // single dominant neighbor -> 0; untouched rows -> 0
  std::vector<double> m2(g.num_slots(), 0.0);
  m2[g.offset(0)] = 1.0;
  EntropyResult res2 = aggregation_entropy(g, m2, alpha);
  CHECK(res2.entropy[0] == 0.0);
  CHECK(res2.entropy[4] == 0.0);

  // p=2 on an unweighted regular graph: rows are uniform after
  // renormalization, so the entropy is exactly ln(deg_i)
  std::vector<Edge> cycle;
  for (std::uint32_t i = 0; i < 6; ++i)
    cycle.push_back({i, static_cast<std::uint32_t>((i + 1) % 6), 1.0});
  const SparseGraph cg = SparseGraph::from_edges(6, cycle);
  Rng rng(8);
  const Matrix cx = testutil::random_matrix(6, 2, rng);
  const std::vector<double> mc = compute_M(cg, cx, 2.0);
  std::vector<double> ca, cb;
  compute_coeffs(cg, mc, 1.0, 2.0, ca, cb);
  EntropyResult resc = aggregation_entropy(cg, mc, ca);
  for (std::size_t i = 0; i < 6; ++i)
    CHECK(resc.entropy[i] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // on irregular graphs the bound 0 <= H_i <= ln(deg_i) still holds
  const SparseGraph rg = testutil::random_graph(12, 15, rng, true);
  const Matrix x = testutil::random_matrix(12, 2, rng);
  const std::vector<double> mw = compute_M(rg, x, 2.0);
  std::vector<double> a, b;
  compute_coeffs(rg, mw, 1.0, 2.0, a, b);
  EntropyResult res3 = aggregation_entropy(rg, mw, a);
  for (std::size_t i = 0; i < rg.num_nodes(); ++i) {
    CHECK(res3.entropy[i] >= 0.0);
    CHECK(res3.entropy[i] <=
          std::log(static_cast<double>(rg.edge_count(i))) + 1e-12);
  }

  // histogram counts every node exactly once
  std::size_t total = 0;
  for (std::size_t c : res3.histogram) total += c;
  CHECK(total == rg.num_nodes());
}
