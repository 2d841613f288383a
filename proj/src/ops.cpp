#include "dgcl/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dgcl/error.hpp"

namespace dgcl::nd {
namespace {

Tape& tape_of(const Var& a) {
  if (!a.valid()) throw ContractError("op on an unbound Var");
  return *a.tape();
}

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + " expects a matrix, got " +
                         shape_str(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + " shape mismatch: " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

// dst += src
void axpy(Tensor& dst, const Tensor& src, double alpha = 1.0) {
  double* d = dst.storage().data();
  const double* s = src.storage().data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += alpha * s[i];
}

// out += a * b^T  (a: m x k, b: n x k, out: m x n)
void gemm_nt_acc(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  for (std::size_t i = 0; i < m; ++i) {
    const double* ar = a.storage().data() + i * k;
    double* orow = out.storage().data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* br = b.storage().data() + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ar[p] * br[p];
      orow[j] += s;
    }
  }
}

// out += a^T * b  (a: m x k, b: m x n, out: k x n)
void gemm_tn_acc(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    const double* ar = a.storage().data() + i * k;
    const double* br = b.storage().data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ar[p];
      if (av == 0.0) continue;
      double* orow = out.storage().data() + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * br[j];
    }
  }
}

template <class F, class DF>
Var unary_elementwise(const Var& x, F f, DF df) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  const std::size_t xid = x.id();
  return tape.record(std::move(out), {x}, [xid, df](Tape& t, const Tensor& g) {
    Tensor* gx = t.grad_buffer(xid);
    if (!gx) return;
    const Tensor& xv = t.value(xid);
    for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] * df(xv[i]);
  });
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  Tape& tape = tape_of(a);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out = matmul_plain(av, bv);
  const std::size_t aid = a.id(), bid = b.id();
  return tape.record(std::move(out), {a, b}, [aid, bid](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(aid)) gemm_nt_acc(g, t.value(bid), *ga);
    if (Tensor* gb = t.grad_buffer(bid)) gemm_tn_acc(t.value(aid), g, *gb);
  });
}

Var transpose(const Var& a) {
  Tape& tape = tape_of(a);
  const Tensor& av = a.value();
  require_matrix(av, "transpose");
  const std::size_t m = av.rows(), n = av.cols();
  Tensor out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(j, i) = av.at(i, j);
  const std::size_t aid = a.id();
  return tape.record(std::move(out), {a}, [aid, m, n](Tape& t, const Tensor& g) {
    Tensor* ga = t.grad_buffer(aid);
    if (!ga) return;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga->at(i, j) += g.at(j, i);
  });
}

Var add(const Var& a, const Var& b) {
  Tape& tape = tape_of(a);
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  axpy(out, b.value());
  const std::size_t aid = a.id(), bid = b.id();
  return tape.record(std::move(out), {a, b}, [aid, bid](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(aid)) axpy(*ga, g);
    if (Tensor* gb = t.grad_buffer(bid)) axpy(*gb, g);
  });
}

Var sub(const Var& a, const Var& b) {
  Tape& tape = tape_of(a);
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  axpy(out, b.value(), -1.0);
  const std::size_t aid = a.id(), bid = b.id();
  return tape.record(std::move(out), {a, b}, [aid, bid](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(aid)) axpy(*ga, g);
    if (Tensor* gb = t.grad_buffer(bid)) axpy(*gb, g, -1.0);
  });
}

Var mul(const Var& a, const Var& b) {
  Tape& tape = tape_of(a);
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const std::size_t aid = a.id(), bid = b.id();
  return tape.record(std::move(out), {a, b}, [aid, bid](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(aid)) {
      const Tensor& bv = t.value(bid);
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv[i];
    }
    if (Tensor* gb = t.grad_buffer(bid)) {
      const Tensor& av = t.value(aid);
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av[i];
    }
  });
}

Var scale(const Var& a, double c) {
  Tape& tape = tape_of(a);
  Tensor out = a.value();
  for (double& v : out.storage()) v *= c;
  const std::size_t aid = a.id();
  return tape.record(std::move(out), {a}, [aid, c](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(aid)) axpy(*ga, g, c);
  });
}

Var add_row(const Var& x, const Var& bias) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  require_matrix(xv, "add_row");
  if (bv.size() != xv.cols()) {
    throw DimensionError("add_row bias " + shape_str(bv.shape()) +
                         " does not match columns of " + shape_str(xv.shape()));
  }
  Tensor out = xv;
  const std::size_t m = xv.rows(), n = xv.cols();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) += bv[j];
  const std::size_t xid = x.id(), bid = bias.id();
  return tape.record(std::move(out), {x, bias},
                     [xid, bid, m, n](Tape& t, const Tensor& g) {
                       if (Tensor* gx = t.grad_buffer(xid)) axpy(*gx, g);
                       if (Tensor* gb = t.grad_buffer(bid)) {
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t j = 0; j < n; ++j) (*gb)[j] += g.at(i, j);
                       }
                     });
}

Var scale_rows(const Var& x, const Var& s) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  const Tensor& sv = s.value();
  require_matrix(xv, "scale_rows");
  if (sv.size() != xv.rows()) {
    throw DimensionError("scale_rows factors " + shape_str(sv.shape()) +
                         " do not match rows of " + shape_str(xv.shape()));
  }
  const std::size_t m = xv.rows(), n = xv.cols();
  Tensor out = xv;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) *= sv[i];
  const std::size_t xid = x.id(), sid = s.id();
  return tape.record(std::move(out), {x, s}, [xid, sid, m, n](Tape& t, const Tensor& g) {
    if (Tensor* gx = t.grad_buffer(xid)) {
      const Tensor& sv = t.value(sid);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gx->at(i, j) += g.at(i, j) * sv[i];
    }
    if (Tensor* gs = t.grad_buffer(sid)) {
      const Tensor& xv = t.value(xid);
      for (std::size_t i = 0; i < m; ++i)
        (*gs)[i] += dot(g.row(i), xv.row(i));
    }
  });
}

Var sum(const Var& x) {
  Tape& tape = tape_of(x);
  double s = 0.0;
  for (double v : x.value().storage()) s += v;
  const std::size_t xid = x.id();
  return tape.record(Tensor::scalar(s), {x}, [xid](Tape& t, const Tensor& g) {
    Tensor* gx = t.grad_buffer(xid);
    if (!gx) return;
    for (double& v : gx->storage()) v += g[0];
  });
}

Var mean(const Var& x) {
  const std::size_t n = x.value().size();
  if (n == 0) throw ContractError("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

Var exp(const Var& x) {
  return unary_elementwise(
      x, [](double v) { return std::exp(v); }, [](double v) { return std::exp(v); });
}

Var log(const Var& x) {
  for (double v : x.value().storage()) {
    if (!(v > 0.0)) throw NumericError("log of non-positive value " + std::to_string(v));
  }
  return unary_elementwise(
      x, [](double v) { return std::log(v); }, [](double v) { return 1.0 / v; });
}

Var silu(const Var& x) {
  return unary_elementwise(
      x, [](double v) { return v * sigmoid(v); },
      [](double v) {
        const double s = sigmoid(v);
        return s * (1.0 + v * (1.0 - s));
      });
}

Var softplus(const Var& x) {
  return unary_elementwise(
      x, [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); },
      [](double v) { return sigmoid(v); });
}

Var softmax_rows(const Var& x) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  require_matrix(xv, "softmax_rows");
  const std::size_t m = xv.rows(), n = xv.cols();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < m; ++i) {
    auto in = xv.row(i);
    double mx = -INFINITY;
    for (double v : in) {
      if (std::isnan(v)) throw NumericError("softmax_rows: NaN in row " + std::to_string(i));
      mx = std::max(mx, v);
    }
    double z = 0.0;
    auto o = out.row(i);
    for (std::size_t j = 0; j < n; ++j) z += (o[j] = std::exp(in[j] - mx));
    for (double& v : o) v /= z;
  }
  const std::size_t xid = x.id();
  const std::size_t oid = tape.size();
  return tape.record(std::move(out), {x}, [xid, oid, m, n](Tape& t, const Tensor& g) {
    Tensor* gx = t.grad_buffer(xid);
    if (!gx) return;
    const Tensor& y = t.value(oid);
    for (std::size_t i = 0; i < m; ++i) {
      const double s = dot(g.row(i), y.row(i));
      for (std::size_t j = 0; j < n; ++j)
        gx->at(i, j) += y.at(i, j) * (g.at(i, j) - s);
    }
  });
}

Var logsumexp_rows(const Var& x) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  require_matrix(xv, "logsumexp_rows");
  const std::size_t m = xv.rows(), n = xv.cols();
  Tensor out({m});
  for (std::size_t i = 0; i < m; ++i) {
    double mx = -INFINITY;
    for (double v : xv.row(i)) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : xv.row(i)) z += std::exp(v - mx);
    out[i] = mx + std::log(z);
  }
  const std::size_t xid = x.id();
  const std::size_t oid = tape.size();
  return tape.record(std::move(out), {x}, [xid, oid, m, n](Tape& t, const Tensor& g) {
    Tensor* gx = t.grad_buffer(xid);
    if (!gx) return;
    const Tensor& xv = t.value(xid);
    const Tensor& lse = t.value(oid);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        gx->at(i, j) += g[i] * std::exp(xv.at(i, j) - lse[i]);
  });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  require_matrix(xv, "layer_norm");
  const std::size_t m = xv.rows(), n = xv.cols();
  if (n < 2) throw DimensionError("layer_norm needs at least 2 columns, got " + shape_str(xv.shape()));
  if (gain.value().size() != n || bias.value().size() != n) {
    throw DimensionError("layer_norm gain/bias " + shape_str(gain.value().shape()) + "/" +
                         shape_str(bias.value().shape()) + " vs input " + shape_str(xv.shape()));
  }
  // xhat and 1/std are needed again in backward.
  Tensor xhat(xv.shape());
  std::vector<double> inv_std(m);
  Tensor out(xv.shape());
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  for (std::size_t i = 0; i < m; ++i) {
    auto r = xv.row(i);
    double mu = 0.0;
    for (double v : r) mu += v;
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (double v : r) var += (v - mu) * (v - mu);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + kLayerNormEps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat.at(i, j) = (r[j] - mu) * inv_std[i];
      out.at(i, j) = xhat.at(i, j) * gv[j] + bv[j];
    }
  }
  const std::size_t xid = x.id(), gid = gain.id(), bid = bias.id();
  return tape.record(
      std::move(out), {x, gain, bias},
      [xid, gid, bid, m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](
          Tape& t, const Tensor& g) {
        if (Tensor* gg = t.grad_buffer(gid)) {
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) (*gg)[j] += g.at(i, j) * xhat.at(i, j);
        }
        if (Tensor* gb = t.grad_buffer(bid)) {
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) (*gb)[j] += g.at(i, j);
        }
        if (Tensor* gx = t.grad_buffer(xid)) {
          const Tensor& gv = t.value(gid);
          const double inv_n = 1.0 / static_cast<double>(n);
          for (std::size_t i = 0; i < m; ++i) {
            double mean_d = 0.0, mean_dx = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              const double d = g.at(i, j) * gv[j];
              mean_d += d;
              mean_dx += d * xhat.at(i, j);
            }
            mean_d *= inv_n;
            mean_dx *= inv_n;
            for (std::size_t j = 0; j < n; ++j) {
              const double d = g.at(i, j) * gv[j];
              gx->at(i, j) += inv_std[i] * (d - mean_d - xhat.at(i, j) * mean_dx);
            }
          }
        }
      });
}

Var normalize_rows(const Var& x) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  require_matrix(xv, "normalize_rows");
  const std::size_t m = xv.rows(), n = xv.cols();
  std::vector<double> norms(m);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < m; ++i) {
    norms[i] = std::sqrt(dot(xv.row(i), xv.row(i)));
    if (!(norms[i] > 0.0)) {
      throw NumericError("normalize_rows: row " + std::to_string(i) + " has zero norm");
    }
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) = xv.at(i, j) / norms[i];
  }
  const std::size_t xid = x.id();
  const std::size_t oid = tape.size();
  return tape.record(std::move(out), {x},
                     [xid, oid, m, n, norms = std::move(norms)](Tape& t, const Tensor& g) {
                       Tensor* gx = t.grad_buffer(xid);
                       if (!gx) return;
                       const Tensor& y = t.value(oid);
                       for (std::size_t i = 0; i < m; ++i) {
                         const double s = dot(g.row(i), y.row(i));
                         for (std::size_t j = 0; j < n; ++j)
                           gx->at(i, j) += (g.at(i, j) - y.at(i, j) * s) / norms[i];
                       }
                     });
}

Var row_dot(const Var& a, const Var& b) {
  Tape& tape = tape_of(a);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix(av, "row_dot");
  require_same_shape(av, bv, "row_dot");
  const std::size_t m = av.rows(), n = av.cols();
  Tensor out({m});
  for (std::size_t i = 0; i < m; ++i) out[i] = dot(av.row(i), bv.row(i));
  const std::size_t aid = a.id(), bid = b.id();
  return tape.record(std::move(out), {a, b}, [aid, bid, m, n](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(aid)) {
      const Tensor& bv = t.value(bid);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) ga->at(i, j) += g[i] * bv.at(i, j);
    }
    if (Tensor* gb = t.grad_buffer(bid)) {
      const Tensor& av = t.value(aid);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gb->at(i, j) += g[i] * av.at(i, j);
    }
  });
}

Var gather_rows(const Var& table, std::span<const std::size_t> ids) {
  Tape& tape = tape_of(table);
  const Tensor& tv = table.value();
  require_matrix(tv, "gather_rows");
  const std::size_t rows = tv.rows(), d = tv.cols();
  Tensor out({ids.size(), d});
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] >= rows) {
      throw IndexError("gather_rows: id " + std::to_string(ids[k]) +
                       " out of range for table with " + std::to_string(rows) + " rows");
    }
    std::copy_n(tv.row(ids[k]).begin(), d, out.row(k).begin());
  }
  const std::size_t tid = table.id();
  std::vector<std::size_t> idv(ids.begin(), ids.end());
  return tape.record(std::move(out), {table},
                     [tid, d, idv = std::move(idv)](Tape& t, const Tensor& g) {
                       Tensor* gt = t.grad_buffer(tid);
                       if (!gt) return;
                       for (std::size_t k = 0; k < idv.size(); ++k) {
                         auto dst = gt->row(idv[k]);
                         auto src = g.row(k);
                         for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
                       }
                     });
}

Var slice_cols(const Var& x, std::size_t start, std::size_t len) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  require_matrix(xv, "slice_cols");
  if (start + len > xv.cols()) {
    throw DimensionError("slice_cols [" + std::to_string(start) + ", " +
                         std::to_string(start + len) + ") out of " + shape_str(xv.shape()));
  }
  const std::size_t m = xv.rows();
  Tensor out({m, len});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < len; ++j) out.at(i, j) = xv.at(i, start + j);
  const std::size_t xid = x.id();
  return tape.record(std::move(out), {x}, [xid, m, start, len](Tape& t, const Tensor& g) {
    Tensor* gx = t.grad_buffer(xid);
    if (!gx) return;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < len; ++j) gx->at(i, start + j) += g.at(i, j);
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_cols of zero tensors");
  Tape& tape = tape_of(parts.front());
  const std::size_t m = parts.front().value().rows();
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const Var& p : parts) {
    require_matrix(p.value(), "concat_cols");
    if (p.value().rows() != m) {
      throw DimensionError("concat_cols row mismatch: " + shape_str(parts.front().shape()) +
                           " vs " + shape_str(p.shape()));
    }
    offsets.push_back(total);
    total += p.value().cols();
  }
  Tensor out({m, total});
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& pv = parts[k].value();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < pv.cols(); ++j) out.at(i, offsets[k] + j) = pv.at(i, j);
  }
  std::vector<std::size_t> ids;
  for (const Var& p : parts) ids.push_back(p.id());
  return tape.record(std::move(out), parts,
                     [ids, offsets, m](Tape& t, const Tensor& g) {
                       for (std::size_t k = 0; k < ids.size(); ++k) {
                         Tensor* gp = t.grad_buffer(ids[k]);
                         if (!gp) continue;
                         const std::size_t w = gp->cols();
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t j = 0; j < w; ++j)
                             gp->at(i, j) += g.at(i, offsets[k] + j);
                       }
                     });
}

Var spmm(const CsrMatrix& a, const Var& x) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  require_matrix(xv, "spmm");
  if (xv.rows() != a.cols) {
    throw DimensionError("spmm shape mismatch: sparse [" + std::to_string(a.rows) + "x" +
                         std::to_string(a.cols) + "] x " + shape_str(xv.shape()));
  }
  const std::size_t d = xv.cols();
  Tensor out({a.rows, d});
  for (std::size_t r = 0; r < a.rows; ++r) {
    auto o = out.row(r);
    for (std::size_t p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p) {
      const double w = a.values[p];
      auto src = xv.row(a.col_idx[p]);
      for (std::size_t j = 0; j < d; ++j) o[j] += w * src[j];
    }
  }
  const std::size_t xid = x.id();
  const CsrMatrix* ap = &a;
  return tape.record(std::move(out), {x}, [xid, ap, d](Tape& t, const Tensor& g) {
    Tensor* gx = t.grad_buffer(xid);
    if (!gx) return;
    // gx += A^T g, scattered along the stored entries.
    for (std::size_t r = 0; r < ap->rows; ++r) {
      auto gr = g.row(r);
      for (std::size_t p = ap->row_ptr[r]; p < ap->row_ptr[r + 1]; ++p) {
        const double w = ap->values[p];
        auto dst = gx->row(ap->col_idx[p]);
        for (std::size_t j = 0; j < d; ++j) dst[j] += w * gr[j];
      }
    }
  });
}

}  // namespace dgcl::nd
