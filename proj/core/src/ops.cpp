#include "nmsp/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "nmsp/errors.hpp"

namespace nmsp {
namespace {

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

void require_matrix(const char* op, const Var& a) {
  if (a.value().rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_string(a.shape()));
  }
}

Shape matrix_shape(std::size_t r, std::size_t c) { return Shape{r, c}; }

// out[m×p] += a[m×k]·b[k×p]
void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> out, std::size_t m,
             std::size_t k, std::size_t p) {
  for (std::size_t i = 0; i < m; ++i) {
    double* o = out.data() + i * p;
    for (std::size_t t = 0; t < k; ++t) {
      const double av = a[i * k + t];
      if (av == 0.0) continue;
      const double* br = b.data() + t * p;
      for (std::size_t j = 0; j < p; ++j) o[j] += av * br[j];
    }
  }
}

// out[m×k] += g[m×p]·b[k×p]ᵀ
void gemm_nt(std::span<const double> g, std::span<const double> b, std::span<double> out, std::size_t m,
             std::size_t k, std::size_t p) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* gr = g.data() + i * p;
    for (std::size_t t = 0; t < k; ++t) {
      const double* br = b.data() + t * p;
      double acc = 0.0;
      for (std::size_t j = 0; j < p; ++j) acc += gr[j] * br[j];
      out[i * k + t] += acc;
    }
  }
}

// out[k×p] += a[m×k]ᵀ·g[m×p]
void gemm_tn(std::span<const double> a, std::span<const double> g, std::span<double> out, std::size_t m,
             std::size_t k, std::size_t p) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* gr = g.data() + i * p;
    for (std::size_t t = 0; t < k; ++t) {
      const double av = a[i * k + t];
      if (av == 0.0) continue;
      double* o = out.data() + t * p;
      for (std::size_t j = 0; j < p; ++j) o[j] += av * gr[j];
    }
  }
}

template <typename Forward, typename Derivative>
Var unary_map(const char* op, Var x, Forward f, Derivative df) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  const std::size_t xi = x.id();
  return x.graph().record(op, std::move(out), {x}, [xi, df](Graph& g, std::size_t self) {
    const auto& go = g.grad(self);
    const Tensor& xv = g.value(xi);
    const Tensor& yv = g.value(self);
    auto& gx = g.grad(xi);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * df(xv[i], yv[i]);
  });
}

// Extended precision keeps the loss smooth enough for finite differences.
long double logsumexp(std::span<const double> row) {
  const long double m = *std::max_element(row.begin(), row.end());
  long double s = 0.0L;
  for (double v : row) s += std::exp(static_cast<long double>(v) - m);
  return m + std::log(s);
}

std::vector<bool> ignore_mask(std::size_t rows, std::span<const std::size_t> ignore) {
  std::vector<bool> skip(rows, false);
  for (std::size_t r : ignore) {
    if (r >= rows) throw InputError("cross_entropy: ignore position " + std::to_string(r) + " out of range");
    skip[r] = true;
  }
  return skip;
}

}  // namespace

Var matmul(Var a, Var b) {
  require_matrix("matmul", a);
  require_matrix("matmul", b);
  const std::size_t m = a.rows(), k = a.cols(), p = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul: inner dimensions differ, " + shape_string(a.shape()) + " · " +
                     shape_string(b.shape()));
  }
  Tensor out(matrix_shape(m, p));
  gemm_nn(a.value().data(), b.value().data(), out.data(), m, k, p);
  const std::size_t ai = a.id(), bi = b.id();
  return a.graph().record("matmul", std::move(out), {a, b}, [ai, bi, m, k, p](Graph& g, std::size_t self) {
    const auto& go = g.grad(self);
    if (g.needs_grad(ai)) gemm_nt(go, g.value(bi).data(), g.grad(ai), m, k, p);
    if (g.needs_grad(bi)) gemm_tn(g.value(ai).data(), go, g.grad(bi), m, k, p);
  });
}

Var transpose(Var a) {
  require_matrix("transpose", a);
  const std::size_t r = a.rows(), c = a.cols();
  Tensor out(matrix_shape(c, r));
  const Tensor& av = a.value();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(j, i) = av.at(i, j);
  const std::size_t ai = a.id();
  return a.graph().record("transpose", std::move(out), {a}, [ai, r, c](Graph& g, std::size_t self) {
    const auto& go = g.grad(self);
    auto& ga = g.grad(ai);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += go[j * r + i];
  });
}

Var add(Var a, Var b) {
  require_same_shape("add", a, b);
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return a.graph().record("add", std::move(out), {a, b}, [ai, bi](Graph& g, std::size_t self) {
    const auto& go = g.grad(self);
    for (std::size_t id : {ai, bi}) {
      if (!g.needs_grad(id)) continue;
      auto& gx = g.grad(id);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape("mul", a, b);
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return a.graph().record("mul", std::move(out), {a, b}, [ai, bi](Graph& g, std::size_t self) {
    const auto& go = g.grad(self);
    if (g.needs_grad(ai)) {
      auto& ga = g.grad(ai);
      const Tensor& bv = g.value(bi);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go[i] * bv[i];
    }
    if (g.needs_grad(bi)) {
      auto& gb = g.grad(bi);
      const Tensor& av = g.value(ai);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += go[i] * av[i];
    }
  });
}

Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (double& v : out.values()) v *= factor;
  const std::size_t ai = a.id();
  return a.graph().record("scale", std::move(out), {a}, [ai, factor](Graph& g, std::size_t self) {
    const auto& go = g.grad(self);
    auto& ga = g.grad(ai);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += factor * go[i];
  });
}

Var add_row(Var x, Var bias) {
  const std::size_t n = x.rows(), d = x.cols();
  if (bias.value().size() != d) {
    throw ShapeError("add_row: bias " + shape_string(bias.shape()) + " does not match " + shape_string(x.shape()));
  }
  Tensor out = x.value();
  const Tensor& bv = bias.value();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) out[r * d + c] += bv[c];
  const std::size_t xi = x.id(), bi = bias.id();
  return x.graph().record("add_row", std::move(out), {x, bias}, [xi, bi, n, d](Graph& g, std::size_t self) {
    const auto& go = g.grad(self);
    if (g.needs_grad(xi)) {
      auto& gx = g.grad(xi);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i];
    }
    if (g.needs_grad(bi)) {
      auto& gb = g.grad(bi);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) gb[c] += go[r * d + c];
    }
  });
}

Var affine(Var x, Var weight, Var bias) { return add_row(matmul(x, weight), bias); }

Var sigmoid(Var x) {
  return unary_map(
      "sigmoid", x,
      [](double v) {
        // Split by sign so exp never overflows; clamp to the open interval
        // so saturated inputs never yield exactly 0 or 1.
        double y;
        if (v >= 0) {
          y = 1.0 / (1.0 + std::exp(-v));
        } else {
          const double e = std::exp(v);
          y = e / (1.0 + e);
        }
        return std::clamp(y, std::numeric_limits<double>::min(), 1.0 - 0x1.0p-53);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var x) {
  return unary_map(
      "tanh", x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var gelu(Var x) {
  return unary_map(
      "gelu", x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0)); },
      [](double v, double) {
        const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
        const double pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * std::numbers::pi);
        return cdf + v * pdf;
      });
}

Tensor softmax_rows(const Tensor& x) {
  Tensor out(x.shape());
  const std::size_t n = x.rows(), m = x.cols();
  for (std::size_t r = 0; r < n; ++r) {
    const auto in = x.row(r);
    auto o = out.row(r);
    if (m == 0) continue;
    const double mx = *std::max_element(in.begin(), in.end());
    double s = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      o[c] = std::exp(in[c] - mx);
      s += o[c];
    }
    for (double& v : o) v /= s;
  }
  return out;
}

Var softmax_rows(Var x) {
  Tensor out = softmax_rows(x.value());
  const std::size_t xi = x.id();
  const std::size_t n = x.rows(), m = x.cols();
  return x.graph().record("softmax_rows", std::move(out), {x}, [xi, n, m](Graph& g, std::size_t self) {
    const auto& go = g.grad(self);
    const Tensor& y = g.value(self);
    auto& gx = g.grad(xi);
    for (std::size_t r = 0; r < n; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < m; ++c) dot += go[r * m + c] * y[r * m + c];
      for (std::size_t c = 0; c < m; ++c) gx[r * m + c] += y[r * m + c] * (go[r * m + c] - dot);
    }
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  const std::size_t n = x.rows(), d = x.cols();
  if (d == 0) throw ShapeError("layer_norm: zero-width rows");
  if (gain.value().size() != d || bias.value().size() != d) {
    throw ShapeError("layer_norm: gain/bias do not match row width " + std::to_string(d));
  }
  const Tensor& xv = x.value();
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  Tensor out(xv.shape());
  // Normalized rows and reciprocal std are kept for the backward pass.
  std::vector<double> xhat(xv.size());
  std::vector<double> rstd(n);
  for (std::size_t r = 0; r < n; ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < d; ++c) mean += xv[r * d + c];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double dv = xv[r * d + c] - mean;
      var += dv * dv;
    }
    var /= static_cast<double>(d);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < d; ++c) {
      xhat[r * d + c] = (xv[r * d + c] - mean) * rstd[r];
      out[r * d + c] = xhat[r * d + c] * gv[c] + bv[c];
    }
  }
  const std::size_t xi = x.id(), gi = gain.id(), bi = bias.id();
  return x.graph().record(
      "layer_norm", std::move(out), {x, gain, bias},
      [xi, gi, bi, n, d, xhat = std::move(xhat), rstd = std::move(rstd)](Graph& g, std::size_t self) {
        const auto& go = g.grad(self);
        if (g.needs_grad(gi)) {
          auto& gg = g.grad(gi);
          for (std::size_t i = 0; i < n * d; ++i) gg[i % d] += go[i] * xhat[i];
        }
        if (g.needs_grad(bi)) {
          auto& gb = g.grad(bi);
          for (std::size_t i = 0; i < n * d; ++i) gb[i % d] += go[i];
        }
        if (g.needs_grad(xi)) {
          const Tensor& gv = g.value(gi);
          auto& gx = g.grad(xi);
          const double inv_d = 1.0 / static_cast<double>(d);
          for (std::size_t r = 0; r < n; ++r) {
            double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
              const double dxh = go[r * d + c] * gv[c];
              sum_dxhat += dxh;
              sum_dxhat_xhat += dxh * xhat[r * d + c];
            }
            for (std::size_t c = 0; c < d; ++c) {
              const double dxh = go[r * d + c] * gv[c];
              gx[r * d + c] += rstd[r] * (dxh - inv_d * sum_dxhat - xhat[r * d + c] * inv_d * sum_dxhat_xhat);
            }
          }
        }
      });
}

Var dropout(Var x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.value().size());
  for (double& m : mask) m = rng.uniform() < rate ? 0.0 : keep_scale;
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  const std::size_t xi = x.id();
  return x.graph().record("dropout", std::move(out), {x}, [xi, mask = std::move(mask)](Graph& g, std::size_t self) {
    const auto& go = g.grad(self);
    auto& gx = g.grad(xi);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * mask[i];
  });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const std::size_t xi = x.id();
  return x.graph().record("sum", Tensor::scalar(s), {x}, [xi](Graph& g, std::size_t self) {
    const double go = g.grad(self)[0];
    for (double& v : g.grad(xi)) v += go;
  });
}

Var mean_rows(Var x, const std::vector<bool>& include) {
  const std::size_t n = x.rows(), d = x.cols();
  if (!include.empty() && include.size() != n) {
    throw ShapeError("mean_rows: row mask of size " + std::to_string(include.size()) + " for " + std::to_string(n) + " rows");
  }
  std::vector<bool> rows = include.empty() ? std::vector<bool>(n, true) : include;
  const auto count = static_cast<std::size_t>(std::count(rows.begin(), rows.end(), true));
  if (count == 0) throw ShapeError("mean_rows: no rows selected");
  const double inv = 1.0 / static_cast<double>(count);
  Tensor out(matrix_shape(1, d));
  const Tensor& xv = x.value();
  for (std::size_t r = 0; r < n; ++r) {
    if (!rows[r]) continue;
    for (std::size_t c = 0; c < d; ++c) out[c] += xv[r * d + c];
  }
  for (double& v : out.values()) v *= inv;
  const std::size_t xi = x.id();
  return x.graph().record("mean_rows", std::move(out), {x}, [xi, n, d, inv, rows = std::move(rows)](Graph& g, std::size_t self) {
    const auto& go = g.grad(self);
    auto& gx = g.grad(xi);
    for (std::size_t r = 0; r < n; ++r) {
      if (!rows[r]) continue;
      for (std::size_t c = 0; c < d; ++c) gx[r * d + c] += go[c] * inv;
    }
  });
}

Var repeat_rows(Var row, std::size_t n) {
  if (row.rows() != 1) throw ShapeError("repeat_rows: expected one row, got " + shape_string(row.shape()));
  const std::size_t d = row.cols();
  Tensor out(matrix_shape(n, d));
  const Tensor& rv = row.value();
  for (std::size_t r = 0; r < n; ++r) std::copy(rv.data().begin(), rv.data().end(), out.row(r).begin());
  const std::size_t ri = row.id();
  return row.graph().record("repeat_rows", std::move(out), {row}, [ri, n, d](Graph& g, std::size_t self) {
    const auto& go = g.grad(self);
    auto& gr = g.grad(ri);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < d; ++c) gr[c] += go[r * d + c];
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  const std::size_t n = parts.front().rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.rows() != n) {
      throw ShapeError("concat_cols: row count mismatch " + shape_string(parts.front().shape()) + " vs " +
                       shape_string(p.shape()));
    }
    widths.push_back(p.cols());
    total += p.cols();
  }
  Tensor out(matrix_shape(n, total));
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < pv.cols(); ++c) out.at(r, offset + c) = pv.at(r, c);
    offset += pv.cols();
  }
  std::vector<std::size_t> ids;
  for (const Var& p : parts) ids.push_back(p.id());
  return parts.front().graph().record(
      "concat_cols", std::move(out), parts, [ids, widths, n, total](Graph& g, std::size_t self) {
        const auto& go = g.grad(self);
        std::size_t offset = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (g.needs_grad(ids[k])) {
            auto& gp = g.grad(ids[k]);
            for (std::size_t r = 0; r < n; ++r)
              for (std::size_t c = 0; c < widths[k]; ++c) gp[r * widths[k] + c] += go[r * total + offset + c];
          }
          offset += widths[k];
        }
      });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  const std::size_t d = parts.front().cols();
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.cols() != d) {
      throw ShapeError("concat_rows: column mismatch " + shape_string(parts.front().shape()) + " vs " +
                       shape_string(p.shape()));
    }
    total += p.rows();
  }
  std::vector<double> data;
  data.reserve(total * d);
  std::vector<std::size_t> ids, sizes;
  for (const Var& p : parts) {
    data.insert(data.end(), p.value().data().begin(), p.value().data().end());
    ids.push_back(p.id());
    sizes.push_back(p.value().size());
  }
  return parts.front().graph().record(
      "concat_rows", Tensor(matrix_shape(total, d), std::move(data)), parts,
      [ids, sizes](Graph& g, std::size_t self) {
        const auto& go = g.grad(self);
        std::size_t offset = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (g.needs_grad(ids[k])) {
            auto& gp = g.grad(ids[k]);
            for (std::size_t i = 0; i < sizes[k]; ++i) gp[i] += go[offset + i];
          }
          offset += sizes[k];
        }
      });
}

Var gather_rows(Var table, std::span<const std::size_t> ids) {
  const std::size_t rows = table.rows(), d = table.cols();
  Tensor out(matrix_shape(ids.size(), d));
  const Tensor& tv = table.value();
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= rows) {
      throw InputError("gather_rows: id " + std::to_string(ids[r]) + " at position " + std::to_string(r) +
                       " exceeds table size " + std::to_string(rows));
    }
    auto src = tv.row(ids[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  const std::size_t ti = table.id();
  std::vector<std::size_t> index(ids.begin(), ids.end());
  return table.graph().record("gather_rows", std::move(out), {table}, [ti, d, index = std::move(index)](Graph& g, std::size_t self) {
    const auto& go = g.grad(self);
    auto& gt = g.grad(ti);
    for (std::size_t r = 0; r < index.size(); ++r)
      for (std::size_t c = 0; c < d; ++c) gt[index[r] * d + c] += go[r * d + c];
  });
}

Var row_dot(Var a, Var b) {
  require_same_shape("row_dot", a, b);
  const std::size_t n = a.rows(), m = a.cols();
  Tensor out(matrix_shape(n, 1));
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  for (std::size_t r = 0; r < n; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < m; ++c) acc += av[r * m + c] * bv[r * m + c];
    out[r] = acc;
  }
  const std::size_t ai = a.id(), bi = b.id();
  return a.graph().record("row_dot", std::move(out), {a, b}, [ai, bi, n, m](Graph& g, std::size_t self) {
    const auto& go = g.grad(self);
    if (g.needs_grad(ai)) {
      const Tensor& bv = g.value(bi);
      auto& ga = g.grad(ai);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) ga[r * m + c] += go[r] * bv[r * m + c];
    }
    if (g.needs_grad(bi)) {
      const Tensor& av = g.value(ai);
      auto& gb = g.grad(bi);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) gb[r * m + c] += go[r] * av[r * m + c];
    }
  });
}

Var scale_rows(Var gates, Var x) {
  const std::size_t n = x.rows(), d = x.cols();
  if (gates.rows() != n || gates.cols() != 1) {
    throw ShapeError("scale_rows: gates " + shape_string(gates.shape()) + " do not fit " + shape_string(x.shape()));
  }
  Tensor out = x.value();
  const Tensor& gv = gates.value();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) out[r * d + c] *= gv[r];
  const std::size_t gi = gates.id(), xi = x.id();
  return x.graph().record("scale_rows", std::move(out), {gates, x}, [gi, xi, n, d](Graph& g, std::size_t self) {
    const auto& go = g.grad(self);
    if (g.needs_grad(gi)) {
      const Tensor& xv = g.value(xi);
      auto& gg = g.grad(gi);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) gg[r] += go[r * d + c] * xv[r * d + c];
    }
    if (g.needs_grad(xi)) {
      const Tensor& gv = g.value(gi);
      auto& gx = g.grad(xi);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) gx[r * d + c] += go[r * d + c] * gv[r];
    }
  });
}

double cross_entropy_value(const Tensor& logits, std::span<const std::size_t> targets,
                           std::span<const std::size_t> ignore) {
  const std::size_t n = logits.rows(), v = logits.cols();
  if (targets.size() != n) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for " + std::to_string(n) + " rows");
  }
  const auto skip = ignore_mask(n, ignore);
  long double total = 0.0L;
  std::size_t count = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (skip[r]) continue;
    if (targets[r] >= v) throw InputError("cross_entropy: target " + std::to_string(targets[r]) + " out of range");
    total += logsumexp(logits.row(r)) - logits.at(r, targets[r]);
    ++count;
  }
  if (count == 0) throw InputError("cross_entropy: every position is ignored");
  return static_cast<double>(total / static_cast<long double>(count));
}

Var cross_entropy(Var logits, std::span<const std::size_t> targets, std::span<const std::size_t> ignore) {
  const Tensor& lv = logits.value();
  const double loss = cross_entropy_value(lv, targets, ignore);
  const std::size_t n = lv.rows();
  auto skip = ignore_mask(n, ignore);
  const auto count = static_cast<double>(std::count(skip.begin(), skip.end(), false));
  std::vector<std::size_t> target(targets.begin(), targets.end());
  const std::size_t li = logits.id();
  return logits.graph().record(
      "cross_entropy", Tensor::scalar(loss), {logits},
      [li, count, target = std::move(target), skip = std::move(skip)](Graph& g, std::size_t self) {
        const double go = g.grad(self)[0] / count;
        const Tensor probs = softmax_rows(g.value(li));
        const std::size_t v = probs.cols();
        auto& gl = g.grad(li);
        for (std::size_t r = 0; r < target.size(); ++r) {
          if (skip[r]) continue;
          for (std::size_t c = 0; c < v; ++c) gl[r * v + c] += go * probs.at(r, c);
          gl[r * v + target[r]] -= go;
        }
      });
}

}  // namespace nmsp
