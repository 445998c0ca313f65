#include <algorithm>
#include <cmath>
#include <limits>

#include "rb/numcore/graph.hpp"

namespace rb::num {

namespace {

template <class T>
void require_rank2(const Tensor<T>& t, const char* op) {
  if (t.rank() != 2) throw DimensionError(std::string(op) + ": expected a rank-2 tensor, got " + shape_string(t.shape()));
}

template <class T>
[[noreturn]] void mismatch(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) + " and " +
                       shape_string(b.shape()));
}

template <class T>
void add_into(Tensor<T>& dst, const Tensor<T>& src) {
  T* d = dst.data();
  const T* s = src.data();
  for (std::size_t i = 0, n = dst.size(); i < n; ++i) d[i] += s[i];
}

}  // namespace

template <class T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, T(0));
  for (std::size_t i = 0; i < m; ++i) {
    T* ci = c + i * n;
    const T* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = ai[p];
      const T* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

template <class T>
void gemm_tn_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t p = 0; p < m; ++p) {
    const T* ap = a + p * k;
    const T* bp = b + p * n;
    for (std::size_t i = 0; i < k; ++i) {
      const T av = ap[i];
      T* ci = c + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

namespace {

template <class T>
std::vector<T> transposed(const T* a, std::size_t rows, std::size_t cols) {
  std::vector<T> t(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) t[j * rows + i] = a[i * cols + j];
  return t;
}

}  // namespace

template <class T>
Var<T> add(Var<T> a, Var<T> b) {
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  if (av.shape() != bv.shape()) mismatch("add", av, bv);
  Tensor<T> out = av;
  add_into(out, bv);
  return a.graph->record(std::move(out), {a, b}, [a, b](Graph<T>& g, std::size_t self) {
    const Tensor<T>& go = g.grad(self);
    if (g.requires_grad(a.id)) add_into(g.grad(a.id), go);
    if (g.requires_grad(b.id)) add_into(g.grad(b.id), go);
  });
}

template <class T>
Var<T> add_row(Var<T> x, Var<T> b) {
  const Tensor<T>& xv = x.value();
  const Tensor<T>& bv = b.value();
  require_rank2(xv, "add_row");
  if (bv.size() != xv.cols() || bv.rows() != 1) mismatch("add_row", xv, bv);
  Tensor<T> out = xv;
  const std::size_t r = xv.rows(), c = xv.cols();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += bv[j];
  return x.graph->record(std::move(out), {x, b}, [x, b, r, c](Graph<T>& g, std::size_t self) {
    const Tensor<T>& go = g.grad(self);
    if (g.requires_grad(x.id)) add_into(g.grad(x.id), go);
    if (g.requires_grad(b.id)) {
      Tensor<T>& gb = g.grad(b.id);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gb[j] += go[i * c + j];
    }
  });
}

template <class T>
Var<T> mul(Var<T> a, Var<T> b) {
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  if (av.shape() != bv.shape()) mismatch("mul", av, bv);
  Tensor<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.graph->record(std::move(out), {a, b}, [a, b](Graph<T>& g, std::size_t self) {
    const Tensor<T>& go = g.grad(self);
    const Tensor<T>& av = g.value(a.id);
    const Tensor<T>& bv = g.value(b.id);
    if (g.requires_grad(a.id)) {
      Tensor<T>& ga = g.grad(a.id);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go[i] * bv[i];
    }
    if (g.requires_grad(b.id)) {
      Tensor<T>& gb = g.grad(b.id);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += go[i] * av[i];
    }
  });
}

template <class T>
Var<T> scale(Var<T> a, T s) {
  Tensor<T> out = a.value();
  for (auto& v : out.values()) v *= s;
  return a.graph->record(std::move(out), {a}, [a, s](Graph<T>& g, std::size_t self) {
    const Tensor<T>& go = g.grad(self);
    Tensor<T>& ga = g.grad(a.id);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += s * go[i];
  });
}

template <class T>
Var<T> affine_cols(Var<T> x, const Tensor<T>& s, const Tensor<T>& t) {
  const Tensor<T>& xv = x.value();
  require_rank2(xv, "affine_cols");
  const std::size_t r = xv.rows(), c = xv.cols();
  if (s.size() != c) mismatch("affine_cols", xv, s);
  if (t.size() != c) mismatch("affine_cols", xv, t);
  Tensor<T> out = xv;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = xv[i * c + j] * s[j] + t[j];
  return x.graph->record(std::move(out), {x}, [x, s, r, c](Graph<T>& g, std::size_t self) {
    const Tensor<T>& go = g.grad(self);
    Tensor<T>& gx = g.grad(x.id);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += go[i * c + j] * s[j];
  });
}

template <class T>
Var<T> matmul(Var<T> a, Var<T> b) {
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  require_rank2(av, "matmul");
  require_rank2(bv, "matmul");
  if (av.cols() != bv.rows()) mismatch("matmul", av, bv);
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor<T> out(m, n);
  gemm_nn(av.data(), bv.data(), out.data(), m, k, n, false);
  return a.graph->record(std::move(out), {a, b}, [a, b, m, k, n](Graph<T>& g, std::size_t self) {
    const Tensor<T>& go = g.grad(self);
    if (g.requires_grad(a.id)) {
      // dA += dC · Bᵀ
      const auto bt = transposed(g.value(b.id).data(), k, n);
      gemm_nn(go.data(), bt.data(), g.grad(a.id).data(), m, n, k, true);
    }
    if (g.requires_grad(b.id)) gemm_tn_acc(g.value(a.id).data(), go.data(), g.grad(b.id).data(), m, k, n);
  });
}

template <class T>
Var<T> matmul_nt(Var<T> a, Var<T> b) {
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  require_rank2(av, "matmul_nt");
  require_rank2(bv, "matmul_nt");
  if (av.cols() != bv.cols()) mismatch("matmul_nt", av, bv);
  const std::size_t m = av.rows(), k = av.cols(), n = bv.rows();
  Tensor<T> out(m, n);
  const auto bt = transposed(bv.data(), n, k);
  gemm_nn(av.data(), bt.data(), out.data(), m, k, n, false);
  return a.graph->record(std::move(out), {a, b}, [a, b, m, k, n](Graph<T>& g, std::size_t self) {
    const Tensor<T>& go = g.grad(self);
    // C[m,n] = A[m,k] · B[n,k]ᵀ: dA += dC · B, dB += dCᵀ · A
    if (g.requires_grad(a.id)) gemm_nn(go.data(), g.value(b.id).data(), g.grad(a.id).data(), m, n, k, true);
    if (g.requires_grad(b.id)) gemm_tn_acc(go.data(), g.value(a.id).data(), g.grad(b.id).data(), m, n, k);
  });
}

template <class T>
Var<T> transpose(Var<T> a) {
  const Tensor<T>& av = a.value();
  require_rank2(av, "transpose");
  const std::size_t r = av.rows(), c = av.cols();
  Tensor<T> out({c, r}, transposed(av.data(), r, c));
  return a.graph->record(std::move(out), {a}, [a, r, c](Graph<T>& g, std::size_t self) {
    const Tensor<T>& go = g.grad(self);
    Tensor<T>& ga = g.grad(a.id);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += go[j * r + i];
  });
}

template <class T>
Var<T> linear(Var<T> x, Var<T> w, Var<T> b) {
  const Tensor<T>& xv = x.value();
  const Tensor<T>& wv = w.value();
  const Tensor<T>& bv = b.value();
  require_rank2(xv, "linear");
  require_rank2(wv, "linear");
  if (xv.cols() != wv.rows()) mismatch("linear", xv, wv);
  if (bv.size() != wv.cols()) mismatch("linear", wv, bv);
  const std::size_t m = xv.rows(), k = xv.cols(), n = wv.cols();
  Tensor<T> out(m, n);
  for (std::size_t i = 0; i < m; ++i) std::copy(bv.data(), bv.data() + n, out.data() + i * n);
  gemm_nn(xv.data(), wv.data(), out.data(), m, k, n, true);
  return x.graph->record(std::move(out), {x, w, b}, [x, w, b, m, k, n](Graph<T>& g, std::size_t self) {
    const Tensor<T>& go = g.grad(self);
    if (g.requires_grad(x.id)) {
      const auto wt = transposed(g.value(w.id).data(), k, n);
      gemm_nn(go.data(), wt.data(), g.grad(x.id).data(), m, n, k, true);
    }
    if (g.requires_grad(w.id)) gemm_tn_acc(g.value(x.id).data(), go.data(), g.grad(w.id).data(), m, k, n);
    if (g.requires_grad(b.id)) {
      Tensor<T>& gb = g.grad(b.id);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gb[j] += go[i * n + j];
    }
  });
}

template <class T>
Var<T> relu(Var<T> a) {
  Tensor<T> out = a.value();
  for (auto& v : out.values()) v = v > T(0) ? v : T(0);
  return a.graph->record(std::move(out), {a}, [a](Graph<T>& g, std::size_t self) {
    const Tensor<T>& go = g.grad(self);
    const Tensor<T>& av = g.value(a.id);
    Tensor<T>& ga = g.grad(a.id);
    for (std::size_t i = 0; i < ga.size(); ++i)
      if (av[i] > T(0)) ga[i] += go[i];
  });
}

template <class T>
Var<T> softmax_rows(Var<T> a, std::span<const std::uint8_t> key_mask) {
  const Tensor<T>& av = a.value();
  require_rank2(av, "softmax_rows");
  const std::size_t r = av.rows(), c = av.cols();
  if (!key_mask.empty() && key_mask.size() != c) {
    throw DimensionError("softmax_rows: key mask of length " + std::to_string(key_mask.size()) + " for " +
                         std::to_string(c) + " columns");
  }
  auto valid = [&](std::size_t j) { return key_mask.empty() || key_mask[j] != 0; };
  Tensor<T> out(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    const T* row = av.data() + i * c;
    T* o = out.data() + i * c;
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < c; ++j)
      if (valid(j)) mx = std::max(mx, row[j]);
    if (mx == -std::numeric_limits<T>::infinity()) throw DomainError("softmax_rows: row has no valid column");
    T z = 0;
    for (std::size_t j = 0; j < c; ++j) {
      o[j] = valid(j) ? std::exp(row[j] - mx) : T(0);
      z += o[j];
    }
    for (std::size_t j = 0; j < c; ++j) o[j] /= z;
  }
  return a.graph->record(std::move(out), {a}, [a, r, c](Graph<T>& g, std::size_t self) {
    const Tensor<T>& go = g.grad(self);
    const Tensor<T>& p = g.value(self);
    Tensor<T>& ga = g.grad(a.id);
    for (std::size_t i = 0; i < r; ++i) {
      T dot = 0;
      for (std::size_t j = 0; j < c; ++j) dot += go[i * c + j] * p[i * c + j];
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += p[i * c + j] * (go[i * c + j] - dot);
    }
  });
}

template <class T>
Var<T> layer_norm(Var<T> x, Var<T> gain, Var<T> bias, T eps) {
  const Tensor<T>& xv = x.value();
  require_rank2(xv, "layer_norm");
  const std::size_t r = xv.rows(), c = xv.cols();
  if (gain.value().size() != c) mismatch("layer_norm", xv, gain.value());
  if (bias.value().size() != c) mismatch("layer_norm", xv, bias.value());
  const Tensor<T>& gv = gain.value();
  const Tensor<T>& bv = bias.value();
  Tensor<T> xhat(r, c);
  std::vector<T> inv_std(r);
  Tensor<T> out(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    const T* row = xv.data() + i * c;
    T mean = 0;
    for (std::size_t j = 0; j < c; ++j) mean += row[j];
    mean /= static_cast<T>(c);
    T var = 0;
    for (std::size_t j = 0; j < c; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<T>(c);
    inv_std[i] = T(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) {
      xhat[i * c + j] = (row[j] - mean) * inv_std[i];
      out[i * c + j] = xhat[i * c + j] * gv[j] + bv[j];
    }
  }
  return x.graph->record(
      std::move(out), {x, gain, bias},
      [x, gain, bias, r, c, xhat = std::move(xhat), inv_std = std::move(inv_std)](Graph<T>& g, std::size_t self) {
        const Tensor<T>& go = g.grad(self);
        const Tensor<T>& gv = g.value(gain.id);
        if (g.requires_grad(gain.id) || g.requires_grad(bias.id)) {
          const bool dg = g.requires_grad(gain.id), db = g.requires_grad(bias.id);
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) {
              if (dg) g.grad(gain.id)[j] += go[i * c + j] * xhat[i * c + j];
              if (db) g.grad(bias.id)[j] += go[i * c + j];
            }
        }
        if (g.requires_grad(x.id)) {
          Tensor<T>& gx = g.grad(x.id);
          std::vector<T> dxhat(c);
          for (std::size_t i = 0; i < r; ++i) {
            T mean_d = 0, mean_dx = 0;
            for (std::size_t j = 0; j < c; ++j) {
              dxhat[j] = go[i * c + j] * gv[j];
              mean_d += dxhat[j];
              mean_dx += dxhat[j] * xhat[i * c + j];
            }
            mean_d /= static_cast<T>(c);
            mean_dx /= static_cast<T>(c);
            for (std::size_t j = 0; j < c; ++j) {
              gx[i * c + j] += inv_std[i] * (dxhat[j] - mean_d - xhat[i * c + j] * mean_dx);
            }
          }
        }
      });
}

template <class T>
Var<T> gather_rows(Var<T> a, std::span<const int> indices) {
  const Tensor<T>& av = a.value();
  require_rank2(av, "gather_rows");
  const std::size_t r = av.rows(), c = av.cols();
  if (indices.empty()) throw DimensionError("gather_rows: no indices");
  std::vector<int> idx(indices.begin(), indices.end());
  Tensor<T> out(idx.size(), c);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= r) {
      throw DimensionError("row index " + std::to_string(idx[i]) + " outside a table of " + std::to_string(r) +
                           " rows");
    }
    std::copy_n(av.data() + static_cast<std::size_t>(idx[i]) * c, c, out.data() + i * c);
  }
  return a.graph->record(std::move(out), {a}, [a, c, idx = std::move(idx)](Graph<T>& g, std::size_t self) {
    const Tensor<T>& go = g.grad(self);
    Tensor<T>& ga = g.grad(a.id);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      T* dst = ga.data() + static_cast<std::size_t>(idx[i]) * c;
      const T* src = go.data() + i * c;
      for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
    }
  });
}

template <class T>
Var<T> embedding(Var<T> table, std::span<const int> indices) {
  return gather_rows(table, indices);
}

template <class T>
Var<T> flatten(Var<T> a) {
  const Tensor<T>& av = a.value();
  Tensor<T> out({1, av.size()}, av.values());
  return a.graph->record(std::move(out), {a}, [a](Graph<T>& g, std::size_t self) {
    add_into(g.grad(a.id), g.grad(self));
  });
}

template <class T>
Var<T> slice_cols(Var<T> a, std::size_t start, std::size_t len) {
  const Tensor<T>& av = a.value();
  require_rank2(av, "slice_cols");
  const std::size_t r = av.rows(), c = av.cols();
  if (len == 0 || start + len > c) {
    throw DimensionError("slice_cols: columns [" + std::to_string(start) + ", " + std::to_string(start + len) +
                         ") of " + shape_string(av.shape()));
  }
  Tensor<T> out(r, len);
  for (std::size_t i = 0; i < r; ++i) std::copy_n(av.data() + i * c + start, len, out.data() + i * len);
  return a.graph->record(std::move(out), {a}, [a, r, c, start, len](Graph<T>& g, std::size_t self) {
    const Tensor<T>& go = g.grad(self);
    Tensor<T>& ga = g.grad(a.id);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < len; ++j) ga[i * c + start + j] += go[i * len + j];
  });
}

template <class T>
Var<T> concat_cols(std::span<const Var<T>> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t r = parts[0].value().rows();
  std::size_t c = 0;
  std::vector<std::size_t> widths;
  for (const Var<T>& p : parts) {
    require_rank2(p.value(), "concat_cols");
    if (p.value().rows() != r) mismatch("concat_cols", parts[0].value(), p.value());
    widths.push_back(p.value().cols());
    c += widths.back();
  }
  Tensor<T> out(r, c);
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor<T>& pv = parts[k].value();
    for (std::size_t i = 0; i < r; ++i) std::copy_n(pv.data() + i * widths[k], widths[k], out.data() + i * c + off);
    off += widths[k];
  }
  std::vector<Var<T>> ps(parts.begin(), parts.end());
  return parts[0].graph->record(std::move(out), std::span<const Var<T>>(ps),
                                [ps, widths, r, c](Graph<T>& g, std::size_t self) {
                                  const Tensor<T>& go = g.grad(self);
                                  std::size_t off = 0;
                                  for (std::size_t k = 0; k < ps.size(); ++k) {
                                    if (g.requires_grad(ps[k].id)) {
                                      Tensor<T>& gp = g.grad(ps[k].id);
                                      for (std::size_t i = 0; i < r; ++i)
                                        for (std::size_t j = 0; j < widths[k]; ++j)
                                          gp[i * widths[k] + j] += go[i * c + off + j];
                                    }
                                    off += widths[k];
                                  }
                                });
}

template <class T>
Var<T> sum(Var<T> a) {
  T s = 0;
  for (T v : a.value().values()) s += v;
  return a.graph->record(Tensor<T>::scalar(s), {a}, [a](Graph<T>& g, std::size_t self) {
    const T go = g.grad(self)[0];
    for (auto& v : g.grad(a.id).values()) v += go;
  });
}

template <class T>
Var<T> cross_entropy(Var<T> logits, std::span<const int> targets, std::span<const std::uint8_t> mask) {
  const Tensor<T>& lv = logits.value();
  require_rank2(lv, "cross_entropy");
  const std::size_t n = lv.rows(), v = lv.cols();
  if (targets.size() != n || mask.size() != n) {
    throw DimensionError("cross_entropy: " + std::to_string(n) + " rows but " + std::to_string(targets.size()) +
                         " targets and " + std::to_string(mask.size()) + " mask entries");
  }
  std::size_t active = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    ++active;
    if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= v) {
      throw DimensionError("cross_entropy: target " + std::to_string(targets[i]) + " outside " + std::to_string(v) +
                           " classes");
    }
  }
  if (active == 0) throw DomainError("cross_entropy: no active position");
  // Row probabilities are kept for the backward pass.
  std::vector<T> probs(active * v);
  std::vector<std::size_t> rows;
  std::vector<int> tgt;
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    const T* row = lv.data() + i * v;
    T* p = probs.data() + rows.size() * v;
    const T mx = *std::max_element(row, row + v);
    T z = 0;
    for (std::size_t j = 0; j < v; ++j) {
      p[j] = std::exp(row[j] - mx);
      z += p[j];
    }
    for (std::size_t j = 0; j < v; ++j) p[j] /= z;
    loss += static_cast<double>(std::log(z) + mx - row[targets[i]]);
    rows.push_back(i);
    tgt.push_back(targets[i]);
  }
  const T inv = T(1) / static_cast<T>(active);
  return logits.graph->record(
      Tensor<T>::scalar(static_cast<T>(loss / static_cast<double>(active))), {logits},
      [logits, v, inv, probs = std::move(probs), rows = std::move(rows), tgt = std::move(tgt)](Graph<T>& g,
                                                                                             std::size_t self) {
        const T go = g.grad(self)[0] * inv;
        Tensor<T>& gl = g.grad(logits.id);
        for (std::size_t a = 0; a < rows.size(); ++a) {
          T* dst = gl.data() + rows[a] * v;
          const T* p = probs.data() + a * v;
          for (std::size_t j = 0; j < v; ++j) dst[j] += go * p[j];
          dst[tgt[a]] -= go;
        }
      });
}

template <class T>
Var<T> mse_mean(Var<T> pred, const Tensor<T>& target) {
  const Tensor<T>& pv = pred.value();
  if (pv.size() != target.size()) {
    throw DimensionError("mse_mean: prediction " + shape_string(pv.shape()) + " vs target " +
                         shape_string(target.shape()));
  }
  const std::size_t n = pv.size();
  std::vector<T> diff(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    diff[i] = pv[i] - target[i];
    s += static_cast<double>(diff[i]) * static_cast<double>(diff[i]);
  }
  return pred.graph->record(Tensor<T>::scalar(static_cast<T>(s / static_cast<double>(n))), {pred},
                            [pred, n, diff = std::move(diff)](Graph<T>& g, std::size_t self) {
                              const T k = g.grad(self)[0] * T(2) / static_cast<T>(n);
                              Tensor<T>& gp = g.grad(pred.id);
                              for (std::size_t i = 0; i < n; ++i) gp[i] += k * diff[i];
                            });
}

#define RB_INSTANTIATE(T)                                                                             \
  template void gemm_nn<T>(const T*, const T*, T*, std::size_t, std::size_t, std::size_t, bool);      \
  template void gemm_tn_acc<T>(const T*, const T*, T*, std::size_t, std::size_t, std::size_t);        \
  template Var<T> add<T>(Var<T>, Var<T>);                                                             \
  template Var<T> add_row<T>(Var<T>, Var<T>);                                                         \
  template Var<T> mul<T>(Var<T>, Var<T>);                                                             \
  template Var<T> scale<T>(Var<T>, T);                                                                \
  template Var<T> affine_cols<T>(Var<T>, const Tensor<T>&, const Tensor<T>&);                         \
  template Var<T> matmul<T>(Var<T>, Var<T>);                                                          \
  template Var<T> matmul_nt<T>(Var<T>, Var<T>);                                                       \
  template Var<T> transpose<T>(Var<T>);                                                               \
  template Var<T> linear<T>(Var<T>, Var<T>, Var<T>);                                                  \
  template Var<T> relu<T>(Var<T>);                                                                    \
  template Var<T> softmax_rows<T>(Var<T>, std::span<const std::uint8_t>);                             \
  template Var<T> layer_norm<T>(Var<T>, Var<T>, Var<T>, T);                                           \
  template Var<T> embedding<T>(Var<T>, std::span<const int>);                                         \
  template Var<T> gather_rows<T>(Var<T>, std::span<const int>);                                       \
  template Var<T> flatten<T>(Var<T>);                                                                 \
  template Var<T> slice_cols<T>(Var<T>, std::size_t, std::size_t);                                   \
  template Var<T> concat_cols<T>(std::span<const Var<T>>);                                            \
  template Var<T> sum<T>(Var<T>);                                                                     \
  template Var<T> cross_entropy<T>(Var<T>, std::span<const int>, std::span<const std::uint8_t>);      \
  template Var<T> mse_mean<T>(Var<T>, const Tensor<T>&);

RB_INSTANTIATE(float)
RB_INSTANTIATE(double)

#undef RB_INSTANTIATE

}  // namespace rb::num
