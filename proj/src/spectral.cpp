#include "plgnn/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "plgnn/errors.hpp"

namespace plgnn {

namespace {

double offdiag_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

EigenDecomposition jacobi_eigh(const Matrix& a, double tol,
                               std::size_t max_sweeps) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("jacobi_eigh: matrix not square");
  const std::size_t n = a.rows();
  Matrix work = a;
  Matrix vecs = Matrix::identity(n);
  const double target = tol * std::max(frobenius_norm(a), 1e-300);

  std::size_t sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    if (offdiag_norm(work) <= target) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = work(p, q);
        if (apq == 0.0) continue;
        const double theta = (work(q, q) - work(p, p)) / (2.0 * apq);
        const double sign = theta >= 0.0 ? 1.0 : -1.0;
        const double tval =
            sign / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(tval * tval + 1.0);
        const double s = tval * c;
        const double tau = s / (1.0 + c);

        const double app = work(p, p);
        const double aqq = work(q, q);
        work(p, p) = app - tval * apq;
        work(q, q) = aqq + tval * apq;
        work(p, q) = 0.0;
        work(q, p) = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          if (r != p && r != q) {
            const double arp = work(r, p);
            const double arq = work(r, q);
            work(r, p) = arp - s * (arq + tau * arp);
            work(p, r) = work(r, p);
            work(r, q) = arq + s * (arp - tau * arq);
            work(q, r) = work(r, q);
          }
          const double vrp = vecs(r, p);
          const double vrq = vecs(r, q);
          vecs(r, p) = vrp - s * (vrq + tau * vrp);
          vecs(r, q) = vrq + s * (vrp - tau * vrq);
        }
      }
    }
  }

  const double residual = offdiag_norm(work);
  if (residual > target)
    throw NumericError("jacobi_eigh: no convergence after " +
                       std::to_string(max_sweeps) +
                       " sweeps, off-diagonal residual " +
                       std::to_string(residual));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&work](std::size_t i, std::size_t j) {
    return work(i, i) < work(j, j);
  });

  EigenDecomposition out;
  out.eigenvalues.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.eigenvalues[k] = work(order[k], order[k]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = vecs(r, order[k]);
  }
  out.offdiag_residual = residual;
  out.sweeps = sweep;
  return out;
}

EigenDecomposition eigh_p2(const SparseGraph& g) {
  const std::size_t n = g.num_nodes();
  if (n > kEighGate)
    throw std::invalid_argument("eigh_p2: n=" + std::to_string(n) +
                                " exceeds the dense gate " +
                                std::to_string(kEighGate));
  Matrix lap = normalized_adjacency(g);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      lap(i, j) = (i == j ? 1.0 : 0.0) - lap(i, j);
  return jacobi_eigh(lap);
}

double phi_p(double x, double p) {
  if (x == 0.0) return 0.0;
  return std::pow(std::fabs(x), p - 2.0) * x;
}

double verify_p_eigenpair(const SparseGraph& g, const EigenPair& pair, double p) {
  if (!(p >= 1.0))
    throw std::invalid_argument("verify_p_eigenpair: p must be >= 1");
  if (pair.u.size() != g.num_nodes())
    throw std::invalid_argument("verify_p_eigenpair: vector length mismatch");
  NodeSignal u(g.num_nodes(), 1);
  for (std::size_t i = 0; i < pair.u.size(); ++i) u(i, 0) = pair.u[i];
  const NodeSignal lhs = apply_p_laplacian(g, u, p);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.num_nodes(); ++i)
    worst = std::max(worst,
                     std::fabs(lhs(i, 0) - pair.lambda * phi_p(pair.u[i], p)));
  return worst;
}

double p_inner(const std::vector<double>& u, const std::vector<double>& v,
               double p) {
  if (u.size() != v.size())
    throw std::invalid_argument("p_inner: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += phi_p(u[i], p) * phi_p(v[i], p);
  return s;
}

double decomposition_residual(const SparseGraph& g,
                              const std::vector<EigenPair>& pairs, double p) {
  const std::size_t n = g.num_nodes();
  if (pairs.size() != n)
    throw std::invalid_argument("decomposition_residual: need all " +
                                std::to_string(n) + " eigenpairs, got " +
                                std::to_string(pairs.size()));
  if (n > kEighGate)
    throw std::invalid_argument("decomposition_residual: dense gate exceeded");

  // action of Delta_p on the standard basis, column by column
  Matrix action(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    NodeSignal e(n, 1);
    e(j, 0) = 1.0;
    const NodeSignal col = apply_p_laplacian(g, e, p);
    for (std::size_t i = 0; i < n; ++i) action(i, j) = col(i, 0);
  }

  Matrix phiu(n, n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i) phiu(i, k) = phi_p(pairs[k].u[i], p);
  Matrix lam(n, n);
  for (std::size_t k = 0; k < n; ++k) lam(k, k) = pairs[k].lambda;
  const Matrix recon = matmul(matmul(phiu, lam), transpose(phiu));
  return max_abs_diff(action, recon);
}

double eigenvalue_bound(const SparseGraph& g, double p) {
  if (!(p >= 1.0))
    throw std::invalid_argument("eigenvalue_bound: p must be >= 1");
  std::size_t n_min = g.edge_count(0);
  std::size_t n_max = g.edge_count(0);
  for (std::size_t i = 1; i < g.num_nodes(); ++i) {
    n_min = std::min(n_min, g.edge_count(i));
    n_max = std::max(n_max, g.edge_count(i));
  }
  if (p == 1.0) return std::sqrt(static_cast<double>(n_min));
  if (p < 2.0)
    return std::pow(2.0, p - 1.0) * std::sqrt(static_cast<double>(n_max));
  return std::pow(2.0, p - 1.0);
}

const char* regime_name(FilterRegime r) {
  return r == FilterRegime::low_pass ? "low-pass" : "low-high-pass";
}

FilterReport filter_response(const SparseGraph& g, const NodeSignal& f,
                             double p, double mu) {
  if (!(p >= 1.0))
    throw std::invalid_argument("filter_response: p must be >= 1");
  if (!(mu > 0.0))
    throw std::invalid_argument("filter_response: mu must be > 0");

  const std::size_t n = g.num_nodes();
  std::size_t n_min = g.edge_count(0);
  std::size_t n_max = g.edge_count(0);
  for (std::size_t i = 1; i < n; ++i) {
    n_min = std::min(n_min, g.edge_count(i));
    n_max = std::max(n_max, g.edge_count(i));
  }
  // the exact N_k needs the argmax eigenvector component, which is
  // unavailable without solving the p-eigenproblem; use the max incident
  // count as a conservative stand-in (N_min exactly when p = 1)
  const std::size_t n_k = p == 1.0 ? n_min : n_max;

  const std::vector<double> norms = slot_gradient_norms(g, f);
  std::vector<double> m(g.num_slots());
  if (p == 2.0) {
    for (std::size_t s = 0; s < g.num_slots(); ++s) m[s] = g.slot_weight(s);
  } else {
    for (std::size_t s = 0; s < g.num_slots(); ++s)
      m[s] = norms[s] == 0.0
                 ? 0.0
                 : g.slot_weight(s) *
                       std::pow(p < 2.0 ? std::max(norms[s], 1e-8) : norms[s],
                                p - 2.0);
  }

  FilterReport report;
  report.p = p;
  report.mu = mu;
  report.n_k = n_k;
  report.rows.resize(n);
  const double reset = 2.0 * mu / p;
  for (std::size_t i = 0; i < n; ++i) {
    double msum_deg = 0.0;   // sum_j M_ij / D_ii
    double gsum = 0.0;       // sum_j M_ij / sqrt(D_ii D_jj)
    double nsq = 0.0;        // ||grad f(i)||^2
    for (std::size_t s = g.offset(i); s < g.offset(i + 1); ++s) {
      msum_deg += m[s] * g.inv_degree(i);
      gsum += m[s] * g.inv_sqrt_dd(s);
      nsq += norms[s] * norms[s];
    }
    const double alpha = 1.0 / (msum_deg + reset);
    FilterRow& row = report.rows[i];
    row.node = static_cast<std::uint32_t>(i);
    row.grad_norm = std::sqrt(nsq);
    row.g_value = alpha * gsum;
    if (p == 2.0) {
      row.threshold = 0.0;
      row.regime = FilterRegime::low_high_pass;
    } else if (p > 2.0) {
      row.threshold = std::pow(2.0, (p - 1.0) / (p - 2.0));
      row.regime = row.grad_norm <= row.threshold ? FilterRegime::low_high_pass
                                                  : FilterRegime::low_pass;
    } else {
      row.threshold =
          2.0 * std::pow(2.0 * std::sqrt(static_cast<double>(n_k)),
                         1.0 / (p - 2.0));
      row.regime = row.grad_norm <= row.threshold ? FilterRegime::low_pass
                                                  : FilterRegime::low_high_pass;
    }
  }
  return report;
}

EntropyResult aggregation_entropy(const SparseGraph& g,
                                  const std::vector<double>& M,
                                  const std::vector<double>& alpha,
                                  std::size_t bins) {
  if (M.size() != g.num_slots())
    throw std::invalid_argument("aggregation_entropy: M size mismatch");
  if (alpha.size() != g.num_nodes())
    throw std::invalid_argument("aggregation_entropy: alpha size mismatch");
  if (bins == 0) throw std::invalid_argument("aggregation_entropy: zero bins");
  for (double v : M)
    if (v < 0.0)
      throw std::invalid_argument("aggregation_entropy: negative weight");

  const std::size_t n = g.num_nodes();
  EntropyResult out;
  out.entropy.resize(n);
  double max_entropy_cap = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    max_entropy_cap =
        std::max(max_entropy_cap, std::log(static_cast<double>(g.edge_count(i))));

  for (std::size_t i = 0; i < n; ++i) {
    double rowsum = 0.0;
    for (std::size_t s = g.offset(i); s < g.offset(i + 1); ++s)
      rowsum += alpha[i] * M[s] * g.inv_sqrt_dd(s);
    if (rowsum <= 0.0) {
      out.entropy[i] = 0.0;
      continue;
    }
    double h = 0.0;
    for (std::size_t s = g.offset(i); s < g.offset(i + 1); ++s) {
      const double a = alpha[i] * M[s] * g.inv_sqrt_dd(s) / rowsum;
      if (a > 0.0) h -= a * std::log(a);
    }
    out.entropy[i] = std::max(h, 0.0);  // clip -0.0 from rounding
  }

  out.histogram.assign(bins, 0);
  out.bin_width = max_entropy_cap > 0.0
                      ? max_entropy_cap / static_cast<double>(bins)
                      : 1.0 / static_cast<double>(bins);
  for (double h : out.entropy) {
    std::size_t b = static_cast<std::size_t>(h / out.bin_width);
    if (b >= bins) b = bins - 1;  // top edge inclusive
    ++out.histogram[b];
  }
  return out;
}

}  // namespace plgnn
