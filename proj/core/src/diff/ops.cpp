#include "ntfa/diff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "ntfa/error.hpp"

namespace ntfa::diff {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMatrix> as_matrix(const Tensor& t) {
  return Eigen::Map<const RowMatrix>(t.data(), static_cast<Eigen::Index>(t.rows()),
                                     static_cast<Eigen::Index>(t.cols()));
}

Eigen::Map<RowMatrix> as_matrix(std::span<double> values, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<RowMatrix>(values.data(), rows, cols);
}

Graph& graph_of(Var a) {
  if (!a.valid()) throw ContractError("op: invalid Var");
  return *a.graph();
}

Graph& graph_of(Var a, Var b) {
  if (!a.valid() || !b.valid()) throw ContractError("op: invalid Var");
  if (a.graph() != b.graph()) throw ContractError("op: operands from different graphs");
  return *a.graph();
}

struct Broadcast {
  Shape shape;
  std::size_t n = 0;
  bool a_single = false;
  bool b_single = false;
};

Broadcast broadcast(const Tensor& a, const Tensor& b, const char* op) {
  Broadcast bc;
  if (a.shape() == b.shape()) {
    bc.shape = a.shape();
  } else if (a.size() == 1) {
    bc.shape = b.shape();
    bc.a_single = true;
  } else if (b.size() == 1) {
    bc.shape = a.shape();
    bc.b_single = true;
  } else {
    throw DimensionError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " are not broadcastable");
  }
  bc.n = shape_size(bc.shape);
  return bc;
}

// Accumulates `contrib(i)` for i in [0, n) into the gradient of `id`, summing
// when the operand was broadcast from a single value.
template <typename F>
void accumulate(Graph& g, std::size_t id, bool single, std::size_t n, F contrib) {
  if (!g.needs_grad(id)) return;
  auto buf = g.grad_buffer(id);
  if (single) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += contrib(i);
    buf[0] += s;
  } else {
    for (std::size_t i = 0; i < n; ++i) buf[i] += contrib(i);
  }
}

template <typename F>
Var unary(Var a, F forward, Graph::BackwardFn backward) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = forward(x[i]);
  return g.record(std::move(out), {a.id()}, std::move(backward));
}

}  // namespace

double clamp_log_scale(double log_scale) {
  return std::clamp(log_scale, kMinLogScale, kMaxLogScale);
}

Var add(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  const Broadcast bc = broadcast(x, y, "add");
  Tensor out(bc.shape);
  for (std::size_t i = 0; i < bc.n; ++i) {
    out[i] = x[bc.a_single ? 0 : i] + y[bc.b_single ? 0 : i];
  }
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return g.record(std::move(out), {ia, ib}, [ia, ib, bc](Graph& gr, std::size_t self) {
    const Tensor& up = gr.grad_of(self);
    accumulate(gr, ia, bc.a_single, bc.n, [&](std::size_t i) { return up[i]; });
    accumulate(gr, ib, bc.b_single, bc.n, [&](std::size_t i) { return up[i]; });
  });
}

Var sub(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  const Broadcast bc = broadcast(x, y, "sub");
  Tensor out(bc.shape);
  for (std::size_t i = 0; i < bc.n; ++i) {
    out[i] = x[bc.a_single ? 0 : i] - y[bc.b_single ? 0 : i];
  }
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return g.record(std::move(out), {ia, ib}, [ia, ib, bc](Graph& gr, std::size_t self) {
    const Tensor& up = gr.grad_of(self);
    accumulate(gr, ia, bc.a_single, bc.n, [&](std::size_t i) { return up[i]; });
    accumulate(gr, ib, bc.b_single, bc.n, [&](std::size_t i) { return -up[i]; });
  });
}

Var mul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  const Broadcast bc = broadcast(x, y, "mul");
  Tensor out(bc.shape);
  for (std::size_t i = 0; i < bc.n; ++i) {
    out[i] = x[bc.a_single ? 0 : i] * y[bc.b_single ? 0 : i];
  }
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return g.record(std::move(out), {ia, ib}, [ia, ib, bc](Graph& gr, std::size_t self) {
    const Tensor& up = gr.grad_of(self);
    const Tensor& xv = gr.value_of(ia);
    const Tensor& yv = gr.value_of(ib);
    accumulate(gr, ia, bc.a_single, bc.n,
               [&](std::size_t i) { return up[i] * yv[bc.b_single ? 0 : i]; });
    accumulate(gr, ib, bc.b_single, bc.n,
               [&](std::size_t i) { return up[i] * xv[bc.a_single ? 0 : i]; });
  });
}

Var scale(Var a, double factor) {
  const std::size_t ia = a.id();
  return unary(
      a, [factor](double v) { return v * factor; },
      [ia, factor](Graph& gr, std::size_t self) {
        const Tensor& up = gr.grad_of(self);
        accumulate(gr, ia, false, up.size(), [&](std::size_t i) { return up[i] * factor; });
      });
}

Var add_constant(Var a, double c) {
  const std::size_t ia = a.id();
  return unary(
      a, [c](double v) { return v + c; },
      [ia](Graph& gr, std::size_t self) {
        const Tensor& up = gr.grad_of(self);
        accumulate(gr, ia, false, up.size(), [&](std::size_t i) { return up[i]; });
      });
}

Var neg(Var a) { return scale(a, -1.0); }

Var exp(Var a) {
  const std::size_t ia = a.id();
  return unary(
      a, [](double v) { return std::exp(v); },
      [ia](Graph& gr, std::size_t self) {
        const Tensor& up = gr.grad_of(self);
        const Tensor& out = gr.value_of(self);
        accumulate(gr, ia, false, up.size(), [&](std::size_t i) { return up[i] * out[i]; });
      });
}

Var log(Var a) {
  for (double v : a.value().values()) {
    if (!(v > 0.0)) throw NumericalError("log: non-positive argument");
  }
  const std::size_t ia = a.id();
  return unary(
      a, [](double v) { return std::log(v); },
      [ia](Graph& gr, std::size_t self) {
        const Tensor& up = gr.grad_of(self);
        const Tensor& x = gr.value_of(ia);
        accumulate(gr, ia, false, up.size(), [&](std::size_t i) { return up[i] / x[i]; });
      });
}

Var square(Var a) {
  const std::size_t ia = a.id();
  return unary(
      a, [](double v) { return v * v; },
      [ia](Graph& gr, std::size_t self) {
        const Tensor& up = gr.grad_of(self);
        const Tensor& x = gr.value_of(ia);
        accumulate(gr, ia, false, up.size(), [&](std::size_t i) { return 2.0 * up[i] * x[i]; });
      });
}

Var clamp(Var a, double lo, double hi) {
  const std::size_t ia = a.id();
  return unary(
      a, [lo, hi](double v) { return std::clamp(v, lo, hi); },
      [ia, lo, hi](Graph& gr, std::size_t self) {
        const Tensor& up = gr.grad_of(self);
        const Tensor& x = gr.value_of(ia);
        accumulate(gr, ia, false, up.size(),
                   [&](std::size_t i) { return (x[i] < lo || x[i] > hi) ? 0.0 : up[i]; });
      });
}

Var sum(Var a) {
  Graph& g = graph_of(a);
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const std::size_t ia = a.id();
  return g.record(Tensor::scalar(s), {ia}, [ia](Graph& gr, std::size_t self) {
    const double up = gr.grad_of(self)[0];
    accumulate(gr, ia, false, gr.value_of(ia).size(), [&](std::size_t) { return up; });
  });
}

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.rank() != 2 || y.rank() != 2 || x.cols() != y.rows()) {
    throw DimensionError("matmul: cannot multiply " + shape_string(x.shape()) + " by " +
                         shape_string(y.shape()));
  }
  const std::size_t m = x.rows();
  const std::size_t k = x.cols();
  const std::size_t n = y.cols();
  Tensor out(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = out.data() + i * n;
    for (std::size_t r = 0; r < k; ++r) {
      const double xir = x[i * k + r];
      const double* yrow = y.data() + r * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += xir * yrow[j];
    }
  }
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return g.record(std::move(out), {ia, ib}, [ia, ib, m, k, n](Graph& gr, std::size_t self) {
    const Tensor& up = gr.grad_of(self);
    const Tensor& xv = gr.value_of(ia);
    const Tensor& yv = gr.value_of(ib);
    if (gr.needs_grad(ia)) {
      // dA = dC * B^T
      auto ga = gr.grad_buffer(ia);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t r = 0; r < k; ++r) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += up[i * n + j] * yv[r * n + j];
          ga[i * k + r] += s;
        }
      }
    }
    if (gr.needs_grad(ib)) {
      // dB = A^T * dC
      auto gb = gr.grad_buffer(ib);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t r = 0; r < k; ++r) {
          const double xir = xv[i * k + r];
          for (std::size_t j = 0; j < n; ++j) gb[r * n + j] += xir * up[i * n + j];
        }
      }
    }
  });
}

Var reshape(Var a, Shape shape) {
  Graph& g = graph_of(a);
  Tensor out = a.value().reshaped(std::move(shape));
  const std::size_t ia = a.id();
  return g.record(std::move(out), {ia}, [ia](Graph& gr, std::size_t self) {
    const Tensor& up = gr.grad_of(self);
    accumulate(gr, ia, false, up.size(), [&](std::size_t i) { return up[i]; });
  });
}

Var gather(Var a, std::vector<std::size_t> indices, Shape shape) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  if (shape_size(shape) != indices.size()) {
    throw DimensionError("gather: " + std::to_string(indices.size()) +
                         " indices do not fill shape " + shape_string(shape));
  }
  Tensor out(std::move(shape));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= x.size()) throw DimensionError("gather: index out of range");
    out[i] = x[indices[i]];
  }
  const std::size_t ia = a.id();
  return g.record(std::move(out), {ia},
                  [ia, idx = std::move(indices)](Graph& gr, std::size_t self) {
                    const Tensor& up = gr.grad_of(self);
                    auto ga = gr.grad_buffer(ia);
                    for (std::size_t i = 0; i < idx.size(); ++i) ga[idx[i]] += up[i];
                  });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat: no operands");
  Graph& g = graph_of(parts.front());
  std::vector<double> values;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> offsets;
  for (const Var& p : parts) {
    if (p.graph() != &g) throw ContractError("concat: operands from different graphs");
    offsets.push_back(values.size());
    ids.push_back(p.id());
    const auto v = p.value().values();
    values.insert(values.end(), v.begin(), v.end());
  }
  Tensor out = Tensor::vector(std::move(values));
  auto inputs = ids;
  return g.record(std::move(out), std::move(inputs),
                  [ids, offsets](Graph& gr, std::size_t self) {
                    const Tensor& up = gr.grad_of(self);
                    for (std::size_t p = 0; p < ids.size(); ++p) {
                      const std::size_t off = offsets[p];
                      accumulate(gr, ids[p], false, gr.value_of(ids[p]).size(),
                                 [&](std::size_t i) { return up[off + i]; });
                    }
                  });
}

Var tile_rows(Var a, std::size_t rows) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  if (x.rank() != 1) throw DimensionError("tile_rows: expected a vector");
  const std::size_t k = x.size();
  Tensor out(Shape{rows, k});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy(x.data(), x.data() + k, out.data() + r * k);
  }
  const std::size_t ia = a.id();
  return g.record(std::move(out), {ia}, [ia, rows, k](Graph& gr, std::size_t self) {
    const Tensor& up = gr.grad_of(self);
    auto ga = gr.grad_buffer(ia);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < k; ++j) ga[j] += up[r * k + j];
    }
  });
}

Var stack(std::span<const Var> scalars) {
  if (scalars.empty()) throw ContractError("stack: no operands");
  for (const Var& s : scalars) {
    if (s.size() != 1) throw DimensionError("stack: operands must hold one value");
  }
  return concat(scalars);
}

Var prelu(Var x, Var slope) {
  Graph& g = graph_of(x, slope);
  const Tensor& xv = x.value();
  const double a = slope.value().item();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] >= 0.0 ? xv[i] : a * xv[i];
  const std::size_t ix = x.id();
  const std::size_t is = slope.id();
  return g.record(std::move(out), {ix, is}, [ix, is](Graph& gr, std::size_t self) {
    const Tensor& up = gr.grad_of(self);
    const Tensor& xin = gr.value_of(ix);
    const double av = gr.value_of(is).item();
    accumulate(gr, ix, false, up.size(),
               [&](std::size_t i) { return xin[i] >= 0.0 ? up[i] : av * up[i]; });
    accumulate(gr, is, true, up.size(),
               [&](std::size_t i) { return xin[i] >= 0.0 ? 0.0 : up[i] * xin[i]; });
  });
}

Var gaussian_logpdf(Var x, Var mean, Var log_scale) {
  Graph& g = graph_of(x, mean);
  if (log_scale.graph() != &g) throw ContractError("gaussian_logpdf: mixed graphs");
  const Tensor& xv = x.value();
  const Tensor& mv = mean.value();
  const Tensor& sv = log_scale.value();
  const std::size_t n = xv.size();
  const bool m_single = mv.size() == 1 && n != 1;
  const bool s_single = sv.size() == 1 && n != 1;
  if (!m_single && mv.shape() != xv.shape() && mv.size() != n) {
    throw DimensionError("gaussian_logpdf: mean shape " + shape_string(mv.shape()) +
                         " vs value shape " + shape_string(xv.shape()));
  }
  if (!s_single && sv.size() != n) {
    throw DimensionError("gaussian_logpdf: log-scale shape " + shape_string(sv.shape()) +
                         " vs value shape " + shape_string(xv.shape()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = clamp_log_scale(sv[s_single ? 0 : i]);
    const double d = xv[i] - mv[m_single ? 0 : i];
    total += -kHalfLog2Pi - s - 0.5 * d * d * std::exp(-2.0 * s);
  }
  const std::size_t ix = x.id();
  const std::size_t im = mean.id();
  const std::size_t is = log_scale.id();
  return g.record(Tensor::scalar(total), {ix, im, is},
                  [ix, im, is, n, m_single, s_single](Graph& gr, std::size_t self) {
                    const double up = gr.grad_of(self)[0];
                    const Tensor& xin = gr.value_of(ix);
                    const Tensor& min = gr.value_of(im);
                    const Tensor& sin = gr.value_of(is);
                    auto diff = [&](std::size_t i) { return xin[i] - min[m_single ? 0 : i]; };
                    auto raw = [&](std::size_t i) { return sin[s_single ? 0 : i]; };
                    auto inv_var = [&](std::size_t i) {
                      return std::exp(-2.0 * clamp_log_scale(raw(i)));
                    };
                    accumulate(gr, ix, false, n,
                               [&](std::size_t i) { return -up * diff(i) * inv_var(i); });
                    accumulate(gr, im, m_single, n,
                               [&](std::size_t i) { return up * diff(i) * inv_var(i); });
                    accumulate(gr, is, s_single, n, [&](std::size_t i) {
                      const double r = raw(i);
                      if (r < kMinLogScale || r > kMaxLogScale) return 0.0;
                      const double d = diff(i);
                      return up * (-1.0 + d * d * inv_var(i));
                    });
                  });
}

Var reparam_sample(Var mean, Var log_scale, const Tensor& noise) {
  Graph& g = graph_of(mean, log_scale);
  const Tensor& mv = mean.value();
  const Tensor& sv = log_scale.value();
  if (mv.size() != sv.size() || mv.size() != noise.size()) {
    throw DimensionError("reparam_sample: mean " + shape_string(mv.shape()) + ", log-scale " +
                         shape_string(sv.shape()) + ", noise " + shape_string(noise.shape()));
  }
  Tensor out(mv.shape());
  for (std::size_t i = 0; i < mv.size(); ++i) {
    out[i] = mv[i] + std::exp(clamp_log_scale(sv[i])) * noise[i];
  }
  const std::size_t im = mean.id();
  const std::size_t is = log_scale.id();
  return g.record(std::move(out), {im, is}, [im, is, noise](Graph& gr, std::size_t self) {
    const Tensor& up = gr.grad_of(self);
    const Tensor& sin = gr.value_of(is);
    accumulate(gr, im, false, up.size(), [&](std::size_t i) { return up[i]; });
    accumulate(gr, is, false, up.size(), [&](std::size_t i) {
      const double r = sin[i];
      if (r < kMinLogScale || r > kMaxLogScale) return 0.0;
      return up[i] * std::exp(r) * noise[i];
    });
  });
}

Var rbf_factors(Var centers, Var log_widths, const Tensor& grid) {
  Graph& g = graph_of(centers, log_widths);
  const Tensor& c = centers.value();
  const Tensor& w = log_widths.value();
  if (c.rank() != 2 || c.cols() != 3 || w.size() != c.rows()) {
    throw DimensionError("rbf_factors: centers " + shape_string(c.shape()) + ", log-widths " +
                         shape_string(w.shape()));
  }
  if (grid.rank() != 2 || grid.cols() != 3) {
    throw DimensionError("rbf_factors: grid must be V x 3, got " + shape_string(grid.shape()));
  }
  const std::size_t k_count = c.rows();
  const std::size_t v_count = grid.rows();
  Tensor out(Shape{k_count, v_count});
  for (std::size_t k = 0; k < k_count; ++k) {
    const double inv_width = std::exp(-w[k]);
    const double cx = c[3 * k];
    const double cy = c[3 * k + 1];
    const double cz = c[3 * k + 2];
    double* row = out.data() + k * v_count;
    for (std::size_t v = 0; v < v_count; ++v) {
      const double dx = grid[3 * v] - cx;
      const double dy = grid[3 * v + 1] - cy;
      const double dz = grid[3 * v + 2] - cz;
      const double d2 = dx * dx + dy * dy + dz * dz;
      row[v] = d2 == 0.0 ? 1.0 : std::exp(-d2 * inv_width);
    }
  }
  const std::size_t ic = centers.id();
  const std::size_t iw = log_widths.id();
  const Tensor* gp = &grid;
  return g.record(std::move(out), {ic, iw},
                  [ic, iw, gp, k_count, v_count](Graph& gr, std::size_t self) {
                    const Tensor& up = gr.grad_of(self);
                    const Tensor& f = gr.value_of(self);
                    const Tensor& cv = gr.value_of(ic);
                    const Tensor& wv = gr.value_of(iw);
                    const Tensor& grid_v = *gp;
                    std::vector<double> gc(3 * k_count, 0.0);
                    std::vector<double> gw(k_count, 0.0);
                    for (std::size_t k = 0; k < k_count; ++k) {
                      const double inv_width = std::exp(-wv[k]);
                      for (std::size_t v = 0; v < v_count; ++v) {
                        const double fv = f[k * v_count + v];
                        if (fv == 0.0) continue;
                        const double dx = grid_v[3 * v] - cv[3 * k];
                        const double dy = grid_v[3 * v + 1] - cv[3 * k + 1];
                        const double dz = grid_v[3 * v + 2] - cv[3 * k + 2];
                        const double d2 = dx * dx + dy * dy + dz * dz;
                        const double common = up[k * v_count + v] * fv * inv_width;
                        gc[3 * k] += 2.0 * common * dx;
                        gc[3 * k + 1] += 2.0 * common * dy;
                        gc[3 * k + 2] += 2.0 * common * dz;
                        gw[k] += common * d2;
                      }
                    }
                    accumulate(gr, ic, false, gc.size(), [&](std::size_t i) { return gc[i]; });
                    accumulate(gr, iw, false, gw.size(), [&](std::size_t i) { return gw[i]; });
                  });
}

Var gaussian_linear_loglik(const Tensor& data, Var weights, Var factors, Var log_scale) {
  Graph& g = graph_of(weights, factors);
  if (log_scale.graph() != &g) throw ContractError("gaussian_linear_loglik: mixed graphs");
  const Tensor& w = weights.value();
  const Tensor& f = factors.value();
  if (data.rank() != 2 || w.rank() != 2 || f.rank() != 2 || w.rows() != data.rows() ||
      f.cols() != data.cols() || w.cols() != f.rows()) {
    throw DimensionError("gaussian_linear_loglik: data " + shape_string(data.shape()) +
                         ", weights " + shape_string(w.shape()) + ", factors " +
                         shape_string(f.shape()));
  }
  if (log_scale.size() != 1) throw DimensionError("gaussian_linear_loglik: log-scale must be scalar");
  const std::size_t t_count = data.rows();
  const std::size_t v_count = data.cols();
  const double s = clamp_log_scale(log_scale.item());
  const double inv_var = std::exp(-2.0 * s);

  // |Y - W F|^2 = |Y|^2 - 2 <W, Y F^T> + <W, W F F^T>, so only the T x K
  // cross term and the K x K Gram matrix are kept for the backward sweep.
  const auto y = as_matrix(data);
  const auto wm = as_matrix(w);
  const auto fm = as_matrix(f);
  RowMatrix cross = y * fm.transpose();
  RowMatrix gram = fm * fm.transpose();
  const double sq = std::max(y.squaredNorm() - 2.0 * (wm.array() * cross.array()).sum() +
                                 ((wm * gram).array() * wm.array()).sum(),
                             0.0);
  const double cells = static_cast<double>(t_count * v_count);
  const double total = -cells * (kHalfLog2Pi + s) - 0.5 * sq * inv_var;

  const std::size_t iw = weights.id();
  const std::size_t i_f = factors.id();
  const std::size_t is = log_scale.id();
  const Tensor* yp = &data;
  return g.record(
      Tensor::scalar(total), {iw, i_f, is},
      [iw, i_f, is, yp, cells, sq, cross = std::move(cross),
       gram = std::move(gram)](Graph& gr, std::size_t self) {
        const double up = gr.grad_of(self)[0];
        const double raw = gr.value_of(is).item();
        const double iv = std::exp(-2.0 * clamp_log_scale(raw));
        const double c = up * iv;
        const auto wv = as_matrix(gr.value_of(iw));
        if (gr.needs_grad(iw)) {
          auto gw = as_matrix(gr.grad_buffer(iw), wv.rows(), wv.cols());
          gw.noalias() += c * (cross - wv * gram);
        }
        if (gr.needs_grad(i_f)) {
          const auto fv = as_matrix(gr.value_of(i_f));
          auto gf = as_matrix(gr.grad_buffer(i_f), fv.rows(), fv.cols());
          const RowMatrix wt_w = wv.transpose() * wv;
          gf.noalias() += c * (wv.transpose() * as_matrix(*yp));
          gf.noalias() -= c * (wt_w * fv);
        }
        if (gr.needs_grad(is) && raw >= kMinLogScale && raw <= kMaxLogScale) {
          gr.grad_buffer(is)[0] += up * (-cells + sq * iv);
        }
      });
}

Var logsumexp(Var a) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  if (x.size() == 0) throw ContractError("logsumexp: empty operand");
  const double mx = *std::max_element(x.values().begin(), x.values().end());
  double s = 0.0;
  for (double v : x.values()) s += std::exp(v - mx);
  const double out = mx + std::log(s);
  const std::size_t ia = a.id();
  return g.record(Tensor::scalar(out), {ia}, [ia](Graph& gr, std::size_t self) {
    const double up = gr.grad_of(self)[0];
    const double lse = gr.value_of(self).item();
    const Tensor& xin = gr.value_of(ia);
    accumulate(gr, ia, false, xin.size(),
               [&](std::size_t i) { return up * std::exp(xin[i] - lse); });
  });
}

}  // namespace ntfa::diff
