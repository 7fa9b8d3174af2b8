#include "plgnn/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "plgnn/errors.hpp"
#include "plgnn/kernels.hpp"

namespace plgnn {

namespace {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void add_into(Matrix& dst, const Matrix& src) {
  kernels::add(dst.data(), src.data(), dst.data(), dst.size());
}

constexpr double kDivGuard = 1e-12;

}  // namespace

Var Tape::record(Matrix value, bool requires_grad,
                 std::function<void(Tape&, const Matrix&)> back) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

void Tape::check_mine(Var v, const char* op) const {
  if (v.tape != this || v.node < 0 ||
      static_cast<std::size_t>(v.node) >= nodes_.size())
    throw std::invalid_argument(std::string(op) + ": Var from another tape");
}

Var Tape::leaf(Matrix value, bool requires_grad) {
  return record(std::move(value), requires_grad, nullptr);
}

const Matrix& Tape::value(Var v) const {
  check_mine(v, "value");
  return nodes_[v.node].value;
}

bool Tape::requires_grad(Var v) const {
  check_mine(v, "requires_grad");
  return nodes_[v.node].requires_grad;
}

Matrix Tape::grad(Var v) const {
  check_mine(v, "grad");
  const Node& n = nodes_[v.node];
  if (!n.grad_live) return Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

Matrix& Tape::node_grad_buf(std::int32_t idx) {
  Node& n = nodes_[idx];
  if (!n.grad_live) {
    n.grad = Matrix(n.value.rows(), n.value.cols());
    n.grad_live = true;
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  check_mine(loss, "backward");
  const Matrix& lv = nodes_[loss.node].value;
  if (lv.rows() != 1 || lv.cols() != 1)
    throw std::invalid_argument("backward: loss must be 1x1, got " +
                                shape_str(lv));
  for (Node& n : nodes_) n.grad_live = false;
  node_grad_buf(loss.node)(0, 0) = 1.0;
  for (std::int32_t i = loss.node; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.grad_live && n.back) n.back(*this, n.grad);
  }
}

// ---------------------------------------------------------------- matmul

Var Tape::matmul(Var a, Var b) {
  check_mine(a, "matmul");
  check_mine(b, "matmul");
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (av.cols() != bv.rows())
    throw std::invalid_argument("matmul: inner dimensions disagree, " +
                                shape_str(av) + " * " + shape_str(bv));
  Matrix out(av.rows(), bv.cols());
  kernels::matmul(av.data(), bv.data(), out.data(), av.rows(), av.cols(),
                  bv.cols());
  const auto ai = a.node, bi = b.node;
  const bool ra = requires_grad(a), rb = requires_grad(b);
  return record(std::move(out), ra || rb, [ai, bi, ra, rb](Tape& t, const Matrix& g) {
    if (ra) add_into(t.node_grad_buf(ai), plgnn::matmul(g, transpose(t.node_value(bi))));
    if (rb) add_into(t.node_grad_buf(bi), plgnn::matmul(transpose(t.node_value(ai)), g));
  });
}

// ------------------------------------------------------------ elementwise

Var Tape::add(Var a, Var b) {
  check_mine(a, "add");
  check_mine(b, "add");
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (!av.same_shape(bv))
    throw std::invalid_argument("add: shape mismatch " + shape_str(av) +
                                " vs " + shape_str(bv));
  Matrix out(av.rows(), av.cols());
  kernels::add(av.data(), bv.data(), out.data(), out.size());
  const auto ai = a.node, bi = b.node;
  const bool ra = requires_grad(a), rb = requires_grad(b);
  return record(std::move(out), ra || rb, [ai, bi, ra, rb](Tape& t, const Matrix& g) {
    if (ra) add_into(t.node_grad_buf(ai), g);
    if (rb) add_into(t.node_grad_buf(bi), g);
  });
}

Var Tape::sub(Var a, Var b) {
  check_mine(a, "sub");
  check_mine(b, "sub");
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (!av.same_shape(bv))
    throw std::invalid_argument("sub: shape mismatch " + shape_str(av) +
                                " vs " + shape_str(bv));
  Matrix out(av.rows(), av.cols());
  kernels::sub(av.data(), bv.data(), out.data(), out.size());
  const auto ai = a.node, bi = b.node;
  const bool ra = requires_grad(a), rb = requires_grad(b);
  return record(std::move(out), ra || rb, [ai, bi, ra, rb](Tape& t, const Matrix& g) {
    if (ra) add_into(t.node_grad_buf(ai), g);
    if (rb) kernels::axpy(-1.0, g.data(), t.node_grad_buf(bi).data(), g.size());
  });
}

Var Tape::mul(Var a, Var b) {
  check_mine(a, "mul");
  check_mine(b, "mul");
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (!av.same_shape(bv))
    throw std::invalid_argument("mul: shape mismatch " + shape_str(av) +
                                " vs " + shape_str(bv));
  Matrix out(av.rows(), av.cols());
  kernels::mul(av.data(), bv.data(), out.data(), out.size());
  const auto ai = a.node, bi = b.node;
  const bool ra = requires_grad(a), rb = requires_grad(b);
  return record(std::move(out), ra || rb, [ai, bi, ra, rb](Tape& t, const Matrix& g) {
    if (ra) {
      Matrix tmp(g.rows(), g.cols());
      kernels::mul(g.data(), t.node_value(bi).data(), tmp.data(), g.size());
      add_into(t.node_grad_buf(ai), tmp);
    }
    if (rb) {
      Matrix tmp(g.rows(), g.cols());
      kernels::mul(g.data(), t.node_value(ai).data(), tmp.data(), g.size());
      add_into(t.node_grad_buf(bi), tmp);
    }
  });
}

Var Tape::div(Var a, Var b) {
  check_mine(a, "div");
  check_mine(b, "div");
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (!av.same_shape(bv))
    throw std::invalid_argument("div: shape mismatch " + shape_str(av) +
                                " vs " + shape_str(bv));
  for (std::size_t i = 0; i < bv.size(); ++i)
    if (std::fabs(bv.data()[i]) < kDivGuard)
      throw std::invalid_argument(
          "div: |denominator| < 1e-12 at entry (" +
          std::to_string(i / bv.cols()) + "," + std::to_string(i % bv.cols()) + ")");
  Matrix out(av.rows(), av.cols());
  kernels::div(av.data(), bv.data(), out.data(), out.size());
  const auto ai = a.node, bi = b.node;
  const bool ra = requires_grad(a), rb = requires_grad(b);
  const auto oi = static_cast<std::int32_t>(nodes_.size());  // this node
  return record(std::move(out), ra || rb, [ai, bi, oi, ra, rb](Tape& t, const Matrix& g) {
    const Matrix& den = t.node_value(bi);
    if (ra) {
      Matrix tmp(g.rows(), g.cols());
      kernels::div(g.data(), den.data(), tmp.data(), g.size());
      add_into(t.node_grad_buf(ai), tmp);
    }
    if (rb) {
      // d/db (a/b) = -(a/b)/b
      const Matrix& q = t.node_value(oi);
      Matrix tmp(g.rows(), g.cols());
      kernels::mul(g.data(), q.data(), tmp.data(), g.size());
      kernels::div(tmp.data(), den.data(), tmp.data(), g.size());
      kernels::axpy(-1.0, tmp.data(), t.node_grad_buf(bi).data(), g.size());
    }
  });
}

Var Tape::scale(Var a, double s) {
  check_mine(a, "scale");
  const Matrix& av = value(a);
  Matrix out(av.rows(), av.cols());
  kernels::scale(av.data(), s, out.data(), out.size());
  const auto ai = a.node;
  const bool ra = requires_grad(a);
  return record(std::move(out), ra, [ai, ra, s](Tape& t, const Matrix& g) {
    if (ra) kernels::axpy(s, g.data(), t.node_grad_buf(ai).data(), g.size());
  });
}

Var Tape::add_scalar(Var a, double s) {
  check_mine(a, "add_scalar");
  const Matrix& av = value(a);
  Matrix out(av.rows(), av.cols());
  kernels::add_scalar(av.data(), s, out.data(), out.size());
  const auto ai = a.node;
  const bool ra = requires_grad(a);
  return record(std::move(out), ra, [ai, ra](Tape& t, const Matrix& g) {
    if (ra) add_into(t.node_grad_buf(ai), g);
  });
}

Var Tape::reciprocal(Var a) {
  check_mine(a, "reciprocal");
  const Matrix& av = value(a);
  for (std::size_t i = 0; i < av.size(); ++i)
    if (std::fabs(av.data()[i]) < kDivGuard)
      throw std::invalid_argument(
          "reciprocal: |denominator| < 1e-12 at entry (" +
          std::to_string(i / av.cols()) + "," + std::to_string(i % av.cols()) + ")");
  Matrix out(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.size(); ++i) out.data()[i] = 1.0 / av.data()[i];
  const auto ai = a.node;
  const bool ra = requires_grad(a);
  const auto oi = static_cast<std::int32_t>(nodes_.size());
  return record(std::move(out), ra, [ai, oi, ra](Tape& t, const Matrix& g) {
    if (!ra) return;
    // d/da (1/a) = -(1/a)^2
    const Matrix& r = t.node_value(oi);
    Matrix tmp(g.rows(), g.cols());
    kernels::mul(r.data(), r.data(), tmp.data(), g.size());
    kernels::mul(tmp.data(), g.data(), tmp.data(), g.size());
    kernels::axpy(-1.0, tmp.data(), t.node_grad_buf(ai).data(), g.size());
  });
}

Var Tape::relu(Var a) {
  check_mine(a, "relu");
  const Matrix& av = value(a);
  Matrix out(av.rows(), av.cols());
  kernels::relu(av.data(), out.data(), out.size());
  const auto ai = a.node;
  const bool ra = requires_grad(a);
  return record(std::move(out), ra, [ai, ra](Tape& t, const Matrix& g) {
    if (!ra) return;
    Matrix tmp(g.rows(), g.cols());
    kernels::relu_mask(t.node_value(ai).data(), g.data(), tmp.data(), g.size());
    add_into(t.node_grad_buf(ai), tmp);
  });
}

Var Tape::row_l2_norm(Var a) {
  check_mine(a, "row_l2_norm");
  const Matrix& av = value(a);
  Matrix out(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    double s = 0.0;
    const double* row = av.row(r);
    for (std::size_t c = 0; c < av.cols(); ++c) s += row[c] * row[c];
    out(r, 0) = std::sqrt(s);
  }
  const auto ai = a.node;
  const bool ra = requires_grad(a);
  const auto oi = static_cast<std::int32_t>(nodes_.size());
  return record(std::move(out), ra, [ai, oi, ra](Tape& t, const Matrix& g) {
    if (!ra) return;
    const Matrix& x = t.node_value(ai);
    const Matrix& norms = t.node_value(oi);
    Matrix& buf = t.node_grad_buf(ai);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const double n = norms(r, 0);
      if (n == 0.0) continue;  // subgradient at a zero row is zero
      const double s = g(r, 0) / n;
      kernels::axpy(s, x.row(r), buf.row(r), x.cols());
    }
  });
}

Var Tape::pow_clamped(Var a, double exponent, double floor) {
  check_mine(a, "pow_clamped");
  const Matrix& av = value(a);
  for (std::size_t i = 0; i < av.size(); ++i)
    if (av.data()[i] < 0.0)
      throw std::invalid_argument(
          "pow_clamped: negative entry at (" + std::to_string(i / av.cols()) +
          "," + std::to_string(i % av.cols()) + "); norms cannot be negative");
  Matrix out(av.rows(), av.cols());
  const bool clamp = exponent < 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double base = clamp ? std::max(av.data()[i], floor) : av.data()[i];
    out.data()[i] = std::pow(base, exponent);
  }
  const auto ai = a.node;
  const bool ra = requires_grad(a);
  return record(std::move(out), ra,
                [ai, ra, exponent, floor, clamp](Tape& t, const Matrix& g) {
    if (!ra) return;
    const Matrix& x = t.node_value(ai);
    Matrix& buf = t.node_grad_buf(ai);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double base = clamp ? std::max(x.data()[i], floor) : x.data()[i];
      double d;
      if (base > 0.0)
        d = exponent * std::pow(base, exponent - 1.0);
      else
        d = exponent == 1.0 ? 1.0 : 0.0;  // keep gradients finite at 0
      buf.data()[i] += d * g.data()[i];
    }
  });
}

Var Tape::log_softmax_rows(Var a) {
  check_mine(a, "log_softmax_rows");
  const Matrix& av = value(a);
  Matrix out(av.rows(), av.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    const double* row = av.row(r);
    double m = row[0];
    for (std::size_t c = 1; c < av.cols(); ++c) m = std::max(m, row[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < av.cols(); ++c) sum += std::exp(row[c] - m);
    const double lse = m + std::log(sum);
    for (std::size_t c = 0; c < av.cols(); ++c) out(r, c) = row[c] - lse;
  }
  const auto ai = a.node;
  const bool ra = requires_grad(a);
  const auto oi = static_cast<std::int32_t>(nodes_.size());
  return record(std::move(out), ra, [ai, oi, ra](Tape& t, const Matrix& g) {
    if (!ra) return;
    const Matrix& y = t.node_value(oi);
    Matrix& buf = t.node_grad_buf(ai);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double gsum = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) gsum += g(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c)
        buf(r, c) += g(r, c) - std::exp(y(r, c)) * gsum;
    }
  });
}

Var Tape::masked_nll(Var logp, const std::vector<std::uint32_t>& labels,
                     const std::vector<std::uint32_t>& mask) {
  check_mine(logp, "masked_nll");
  const Matrix& lp = value(logp);
  if (mask.empty()) throw std::invalid_argument("masked_nll: empty mask");
  if (labels.size() != lp.rows())
    throw std::invalid_argument("masked_nll: " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(lp.rows()) +
                                " rows");
  for (std::uint32_t i : mask) {
    if (i >= lp.rows())
      throw std::invalid_argument("masked_nll: mask index " + std::to_string(i) +
                                  " out of range");
    if (labels[i] >= lp.cols())
      throw std::invalid_argument("masked_nll: label " +
                                  std::to_string(labels[i]) + " at node " +
                                  std::to_string(i) + " out of range [0," +
                                  std::to_string(lp.cols()) + ")");
  }
  double acc = 0.0;
  for (std::uint32_t i : mask) acc -= lp(i, labels[i]);
  Matrix out(1, 1);
  out(0, 0) = acc / static_cast<double>(mask.size());
  const auto ai = logp.node;
  const bool ra = requires_grad(logp);
  const double inv = 1.0 / static_cast<double>(mask.size());
  return record(std::move(out), ra,
                [ai, ra, labels, mask, inv](Tape& t, const Matrix& g) {
    if (!ra) return;
    Matrix& buf = t.node_grad_buf(ai);
    const double s = g(0, 0) * inv;
    for (std::uint32_t i : mask) buf(i, labels[i]) -= s;
  });
}

Var Tape::dropout(Var a, double rate, Rng& rng, bool training) {
  check_mine(a, "dropout");
  if (rate < 0.0 || rate >= 1.0)
    throw std::invalid_argument("dropout: rate must lie in [0,1), got " +
                                std::to_string(rate));
  if (!training || rate == 0.0) return a;  // identity, nothing recorded
  const Matrix& av = value(a);
  const double keep_scale = 1.0 / (1.0 - rate);
  Matrix mult(av.rows(), av.cols());
  for (std::size_t i = 0; i < mult.size(); ++i)
    mult.data()[i] = rng.uniform() < rate ? 0.0 : keep_scale;
  Matrix out(av.rows(), av.cols());
  kernels::mul(av.data(), mult.data(), out.data(), out.size());
  const auto ai = a.node;
  const bool ra = requires_grad(a);
  return record(std::move(out), ra,
                [ai, ra, mult = std::move(mult)](Tape& t, const Matrix& g) {
    if (!ra) return;
    Matrix tmp(g.rows(), g.cols());
    kernels::mul(g.data(), mult.data(), tmp.data(), g.size());
    add_into(t.node_grad_buf(ai), tmp);
  });
}

Var Tape::sum_all(Var a) {
  check_mine(a, "sum_all");
  const Matrix& av = value(a);
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += av.data()[i];
  Matrix out(1, 1);
  out(0, 0) = acc;
  const auto ai = a.node;
  const bool ra = requires_grad(a);
  return record(std::move(out), ra, [ai, ra](Tape& t, const Matrix& g) {
    if (!ra) return;
    Matrix& buf = t.node_grad_buf(ai);
    kernels::add_scalar(buf.data(), g(0, 0), buf.data(), buf.size());
  });
}

Var Tape::row_scale(Var a, Var s) {
  check_mine(a, "row_scale");
  check_mine(s, "row_scale");
  const Matrix& av = value(a);
  const Matrix& sv = value(s);
  if (sv.rows() != av.rows() || sv.cols() != 1)
    throw std::invalid_argument("row_scale: scales must be " +
                                std::to_string(av.rows()) + "x1, got " +
                                shape_str(sv));
  Matrix out(av.rows(), av.cols());
  for (std::size_t r = 0; r < av.rows(); ++r)
    kernels::scale(av.row(r), sv(r, 0), out.row(r), av.cols());
  const auto ai = a.node, si = s.node;
  const bool ra = requires_grad(a), rs = requires_grad(s);
  return record(std::move(out), ra || rs, [ai, si, ra, rs](Tape& t, const Matrix& g) {
    const Matrix& x = t.node_value(ai);
    const Matrix& sc = t.node_value(si);
    if (ra) {
      Matrix& buf = t.node_grad_buf(ai);
      for (std::size_t r = 0; r < x.rows(); ++r)
        kernels::axpy(sc(r, 0), g.row(r), buf.row(r), x.cols());
    }
    if (rs) {
      Matrix& buf = t.node_grad_buf(si);
      for (std::size_t r = 0; r < x.rows(); ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < x.cols(); ++c) dot += g(r, c) * x(r, c);
        buf(r, 0) += dot;
      }
    }
  });
}

// ------------------------------------------------------------- graph ops

Var Tape::edge_gradient(const SparseGraph& g, Var f) {
  check_mine(f, "edge_gradient");
  const Matrix& fv = value(f);
  if (fv.rows() != g.num_nodes())
    throw std::invalid_argument("edge_gradient: signal has " +
                                std::to_string(fv.rows()) + " rows, graph has " +
                                std::to_string(g.num_nodes()) + " nodes");
  const std::size_t c = fv.cols();
  const Matrix fhat = degree_normalize(g, fv);
  Matrix out(g.num_slots(), c);
  for (std::size_t s = 0; s < g.num_slots(); ++s) {
    const double sw = g.sqrt_weight(s);
    const double* fi = fhat.row(g.slot_source(s));
    const double* fj = fhat.row(g.slot_target(s));
    double* o = out.row(s);
    for (std::size_t k = 0; k < c; ++k) o[k] = sw * (fj[k] - fi[k]);
  }
  const auto fi_idx = f.node;
  const bool rf = requires_grad(f);
  const SparseGraph* gp = &g;
  return record(std::move(out), rf, [fi_idx, rf, gp](Tape& t, const Matrix& gr) {
    if (!rf) return;
    const std::size_t c = gr.cols();
    Matrix dfhat(gp->num_nodes(), c);
    for (std::size_t s = 0; s < gp->num_slots(); ++s) {
      const double sw = gp->sqrt_weight(s);
      kernels::axpy(sw, gr.row(s), dfhat.row(gp->slot_target(s)), c);
      kernels::axpy(-sw, gr.row(s), dfhat.row(gp->slot_source(s)), c);
    }
    Matrix& buf = t.node_grad_buf(fi_idx);
    for (std::size_t i = 0; i < gp->num_nodes(); ++i) {
      const double sd = gp->sqrt_degree(i);
      const double* src = dfhat.row(i);
      double* dst = buf.row(i);
      for (std::size_t k = 0; k < c; ++k) dst[k] += src[k] / sd;
    }
  });
}

Var Tape::edge_scatter_node_sum(const SparseGraph& g, Var m) {
  check_mine(m, "edge_scatter_node_sum");
  const Matrix& mv = value(m);
  if (mv.rows() != g.num_slots() || mv.cols() != 1)
    throw std::invalid_argument("edge_scatter_node_sum: expected " +
                                std::to_string(g.num_slots()) + "x1, got " +
                                shape_str(mv));
  Matrix out(g.num_nodes(), 1);
  for (std::size_t s = 0; s < g.num_slots(); ++s)
    out(g.slot_source(s), 0) += mv(s, 0);
  const auto mi = m.node;
  const bool rm = requires_grad(m);
  const SparseGraph* gp = &g;
  return record(std::move(out), rm, [mi, rm, gp](Tape& t, const Matrix& gr) {
    if (!rm) return;
    Matrix& buf = t.node_grad_buf(mi);
    for (std::size_t s = 0; s < gp->num_slots(); ++s)
      buf(s, 0) += gr(gp->slot_source(s), 0);
  });
}

Var Tape::edge_gather(const SparseGraph& g, Var m, Var f) {
  check_mine(m, "edge_gather");
  check_mine(f, "edge_gather");
  const Matrix& mv = value(m);
  const Matrix& fv = value(f);
  if (mv.rows() != g.num_slots() || mv.cols() != 1)
    throw std::invalid_argument("edge_gather: weights must be " +
                                std::to_string(g.num_slots()) + "x1, got " +
                                shape_str(mv));
  if (fv.rows() != g.num_nodes())
    throw std::invalid_argument("edge_gather: signal has " +
                                std::to_string(fv.rows()) + " rows, graph has " +
                                std::to_string(g.num_nodes()) + " nodes");
  const std::size_t c = fv.cols();
  Matrix out(g.num_nodes(), c);
  for (std::size_t s = 0; s < g.num_slots(); ++s) {
    const double coeff = mv(s, 0) * g.inv_sqrt_dd(s);
    kernels::axpy(coeff, fv.row(g.slot_target(s)), out.row(g.slot_source(s)), c);
  }
  const auto mi = m.node, fi = f.node;
  const bool rm = requires_grad(m), rf = requires_grad(f);
  const SparseGraph* gp = &g;
  return record(std::move(out), rm || rf, [mi, fi, rm, rf, gp](Tape& t, const Matrix& gr) {
    const Matrix& mval = t.node_value(mi);
    const Matrix& fval = t.node_value(fi);
    const std::size_t c = fval.cols();
    if (rf) {
      Matrix& buf = t.node_grad_buf(fi);
      for (std::size_t s = 0; s < gp->num_slots(); ++s) {
        const double coeff = mval(s, 0) * gp->inv_sqrt_dd(s);
        kernels::axpy(coeff, gr.row(gp->slot_source(s)),
                      buf.row(gp->slot_target(s)), c);
      }
    }
    if (rm) {
      Matrix& buf = t.node_grad_buf(mi);
      for (std::size_t s = 0; s < gp->num_slots(); ++s) {
        const double* gi = gr.row(gp->slot_source(s));
        const double* fj = fval.row(gp->slot_target(s));
        double dot = 0.0;
        for (std::size_t k = 0; k < c; ++k) dot += gi[k] * fj[k];
        buf(s, 0) += gp->inv_sqrt_dd(s) * dot;
      }
    }
  });
}

// ---------------------------------------------------------------- oracle

double finite_diff_check(const std::function<double(const Matrix&)>& f,
                         const Matrix& x, const Matrix& analytic_grad,
                         double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_check: h must be > 0");
  if (!x.same_shape(analytic_grad))
    throw std::invalid_argument("finite_diff_check: gradient shape mismatch");
  Matrix probe = x;
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x.data()[i];
    probe.data()[i] = orig + h;
    const double fp = f(probe);
    probe.data()[i] = orig - h;
    const double fm = f(probe);
    probe.data()[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericError("finite_diff_check: f returned a non-finite value");
    const double fd = (fp - fm) / (2.0 * h);
    const double an = analytic_grad.data()[i];
    const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-8});
    worst = std::max(worst, std::fabs(fd - an) / denom);
  }
  return worst;
}

}  // namespace plgnn
