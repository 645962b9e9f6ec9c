#pragma once

#include <memory>

#include "gcnsa/sparse.hpp"
#include "gcnsa/tape.hpp"

namespace gcnsa {

// Y = X * W with a constant sparse feature matrix X. dW = X^T G walked in
// CSR row order so the accumulation order is fixed.
template <typename T>
Var<T> csr_matmul(std::shared_ptr<const CsrMatrix<T>> x, Var<T> w) {
  Tape<T>& tp = *w.tape;
  const Matrix<T>& wv = w.value();
  if (x->cols != wv.rows())
    throw shape_error("csr_matmul: inner dimensions disagree, " + std::to_string(x->rows) + "x" +
                      std::to_string(x->cols) + " * " + wv.shape_str());
  const int q = wv.cols();
  Matrix<T> y(x->rows, q);
  for (int i = 0; i < x->rows; ++i) {
    T* yr = y.row(i);
    for (int e = x->row_offsets[i]; e < x->row_offsets[i + 1]; ++e) {
      const T v = x->values[e];
      const T* wr = wv.row(x->col_indices[e]);
      for (int k = 0; k < q; ++k) yr[k] += v * wr[k];
    }
  }
  Var<T> out = tp.make(std::move(y), w.requires_grad());
  if (out.requires_grad()) {
    int wi = w.id, oi = out.id;
    tp.set_backward(out, [x, wi, oi](Tape<T>& t) {
      const Matrix<T>& g = t.grad(oi);
      Matrix<T>& dw = t.grad(wi);
      const int q = g.cols();
      for (int i = 0; i < x->rows; ++i) {
        const T* gr = g.row(i);
        for (int e = x->row_offsets[i]; e < x->row_offsets[i + 1]; ++e) {
          const T v = x->values[e];
          T* dr = dw.row(x->col_indices[e]);
          for (int k = 0; k < q; ++k) dr[k] += v * gr[k];
        }
      }
      t.mark_has_grad(wi);
    });
  }
  return out;
}

// Y = A * H with constant adjacency values (the normalized original graph).
template <typename T>
Var<T> spmm(std::shared_ptr<const SparseAdjacency<T>> a, Var<T> h) {
  Tape<T>& tp = *h.tape;
  const Matrix<T>& hv = h.value();
  if (a->n != hv.rows()) throw shape_error("spmm: adjacency size vs feature rows");
  Matrix<T> y;
  spmm_values(*a, hv, y);
  Var<T> out = tp.make(std::move(y), h.requires_grad());
  if (out.requires_grad()) {
    int hi = h.id, oi = out.id;
    tp.set_backward(out, [a, hi, oi](Tape<T>& t) {
      const Matrix<T>& g = t.grad(oi);
      Matrix<T>& dh = t.grad(hi);
      const int q = g.cols();
      for (int i = 0; i < a->n; ++i) {  // dH = A^T G, entry by entry
        const T* gr = g.row(i);
        for (int e = a->row_offsets[i]; e < a->row_offsets[i + 1]; ++e) {
          const T v = a->values[e];
          T* dr = dh.row(a->col_indices[e]);
          for (int k = 0; k < q; ++k) dr[k] += v * gr[k];
        }
      }
      t.mark_has_grad(hi);
    });
  }
  return out;
}

// Y = A(values) * H where the adjacency values live on the tape (the learned
// re-connected graph) over a fixed pattern. Gradients flow into both the
// values and H.
template <typename T>
Var<T> spmm_learned(std::shared_ptr<const SparsePattern> pat, Var<T> values, Var<T> h) {
  Tape<T>& tp = *h.tape;
  const Matrix<T>& vv = values.value();
  const Matrix<T>& hv = h.value();
  if (vv.rows() != 1 || vv.cols() != pat->nnz())
    throw shape_error("spmm_learned: values must be 1 x nnz");
  if (pat->n != hv.rows()) throw shape_error("spmm_learned: pattern size vs feature rows");
  const int q = hv.cols();
  Matrix<T> y(pat->n, q);
  for (int i = 0; i < pat->n; ++i) {
    T* yr = y.row(i);
    for (int e = pat->row_offsets[i]; e < pat->row_offsets[i + 1]; ++e) {
      const T v = vv.data()[e];
      const T* hr = hv.row(pat->col_indices[e]);
      for (int k = 0; k < q; ++k) yr[k] += v * hr[k];
    }
  }
  Var<T> out = tp.make(std::move(y), values.requires_grad() || h.requires_grad());
  if (out.requires_grad()) {
    int vi = values.id, hi = h.id, oi = out.id;
    tp.set_backward(out, [pat, vi, hi, oi](Tape<T>& t) {
      const Matrix<T>& g = t.grad(oi);
      const Matrix<T>& vv2 = t.val(vi);
      const Matrix<T>& hv2 = t.val(hi);
      const int q = g.cols();
      const bool need_v = t.requires_grad(vi);
      const bool need_h = t.requires_grad(hi);
      Matrix<T>* dv = need_v ? &t.grad(vi) : nullptr;
      Matrix<T>* dh = need_h ? &t.grad(hi) : nullptr;
      for (int i = 0; i < pat->n; ++i) {
        const T* gr = g.row(i);
        for (int e = pat->row_offsets[i]; e < pat->row_offsets[i + 1]; ++e) {
          const int j = pat->col_indices[e];
          if (need_v) {
            T dot = T(0);
            const T* hr = hv2.row(j);
            for (int k = 0; k < q; ++k) dot += gr[k] * hr[k];
            dv->data()[e] += dot;
          }
          if (need_h) {
            const T v = vv2.data()[e];
            T* dr = dh->row(j);
            for (int k = 0; k < q; ++k) dr[k] += v * gr[k];
          }
        }
      }
      if (need_v) t.mark_has_grad(vi);
      if (need_h) t.mark_has_grad(hi);
    });
  }
  return out;
}

// Differentiable symmetric degree normalization of tape-held values on a
// fixed pattern (Eq. A*-hat = D*^{-1/2} A* D*^{-1/2}).
template <typename T>
Var<T> normalize_sym(std::shared_ptr<const SparsePattern> pat, Var<T> values) {
  Tape<T>& tp = *values.tape;
  const Matrix<T>& vv = values.value();
  if (vv.rows() != 1 || vv.cols() != pat->nnz())
    throw shape_error("normalize_sym: values must be 1 x nnz");
  std::vector<T> out_vals;
  auto scale = std::make_shared<std::vector<T>>();
  normalize_sym_kernel(*pat, vv.vec(), out_vals, scale.get());
  Var<T> out = tp.make(Matrix<T>(1, pat->nnz(), std::move(out_vals)), values.requires_grad());
  if (out.requires_grad()) {
    int vi = values.id, oi = out.id;
    tp.set_backward(out, [pat, vi, oi, scale](Tape<T>& t) {
      const Matrix<T>& g = t.grad(oi);
      const Matrix<T>& vv2 = t.val(vi);
      Matrix<T>& dv = t.grad(vi);
      const int n = pat->n;
      const std::vector<T>& s = *scale;
      // d out(i,j) / d v(k,l) = [same entry] s_i s_j
      //   - 1/2 v(i,j) s_i^3 s_j [k==i]  - 1/2 v(i,j) s_i s_j^3 [k==j]
      // Row/column degree contributions collapse into one scalar per node.
      std::vector<T> acc(n, T(0));
      for (int i = 0; i < n; ++i) {
        for (int e = pat->row_offsets[i]; e < pat->row_offsets[i + 1]; ++e) {
          const int j = pat->col_indices[e];
          const T gv = g.data()[e] * vv2.data()[e];
          acc[i] += gv * s[j];  // entries in row i pull on d_i
          acc[j] += gv * s[i];  // and on d_j through the column scale
        }
      }
      for (int i = 0; i < n; ++i) acc[i] *= T(0.5) * s[i] * s[i] * s[i];
      for (int i = 0; i < n; ++i) {
        for (int e = pat->row_offsets[i]; e < pat->row_offsets[i + 1]; ++e) {
          const int j = pat->col_indices[e];
          dv.data()[e] += g.data()[e] * s[i] * s[j] - acc[i];
        }
      }
      t.mark_has_grad(vi);
    });
  }
  return out;
}

}  // namespace gcnsa
