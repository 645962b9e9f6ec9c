#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <vector>

#include "gcnsa/matrix.hpp"

namespace gcnsa {

template <typename T>
class Tape;

// Lightweight handle to a tape node.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Matrix<T>& value() const { return tape->val(id); }
  const Matrix<T>& grad() const { return tape->grad(id); }
  bool requires_grad() const { return tape->requires_grad(id); }
};

// Reverse-mode tape over dense matrices, rebuilt on every forward pass
// (define-by-run; the re-connected graph changes its sparsity per epoch).
// Backward visits nodes in reverse creation order, which is a reverse
// topological order by construction, exactly once.
template <typename T>
class Tape {
 public:
  using BackFn = std::function<void(Tape&)>;

  struct Node {
    Matrix<T> owned;
    const Matrix<T>* external = nullptr;  // leaves bound by reference
    Matrix<T> grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackFn backward;
  };

  // Leaf bound by reference; caller keeps `m` alive for the tape's lifetime.
  Var<T> leaf(const Matrix<T>& m, bool requires_grad) {
    Node n;
    n.external = &m;
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return {this, int(nodes_.size()) - 1};
  }

  Var<T> constant(Matrix<T> m) {
    Node n;
    n.owned = std::move(m);
    nodes_.push_back(std::move(n));
    return {this, int(nodes_.size()) - 1};
  }

  Var<T> make(Matrix<T> value, bool requires_grad) {
    if (check_finite && !value.all_finite())
      throw numeric_error("tape: operation produced a non-finite value");
    Node n;
    n.owned = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return {this, int(nodes_.size()) - 1};
  }

  void set_backward(Var<T> v, BackFn fn) { nodes_[v.id].backward = std::move(fn); }

  const Matrix<T>& val(int id) const {
    const Node& n = nodes_[id];
    return n.external ? *n.external : n.owned;
  }

  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  // Gradient buffer, zero matrix of the value's shape until touched.
  Matrix<T>& grad(int id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) {
      const Matrix<T>& v = val(id);
      n.grad = Matrix<T>::zeros(v.rows(), v.cols());
    }
    return n.grad;
  }

  void mark_has_grad(int id) { nodes_[id].has_grad = true; }

  void acc_grad(int id, const Matrix<T>& g) {
    Matrix<T>& dst = grad(id);
    if (!dst.same_shape(g)) throw shape_error("tape: gradient shape mismatch");
    for (size_t i = 0; i < dst.size(); ++i) dst.data()[i] += g.data()[i];
    nodes_[id].has_grad = true;
  }

  void backward(Var<T> root) {
    const Matrix<T>& rv = val(root.id);
    if (rv.rows() != 1 || rv.cols() != 1)
      throw shape_error("backward: root must be a 1x1 scalar, got " + rv.shape_str());
    grad(root.id)(0, 0) = T(1);
    nodes_[root.id].has_grad = true;
    for (int id = root.id; id >= 0; --id) {
      Node& n = nodes_[id];
      if (n.requires_grad && n.has_grad && n.backward) n.backward(*this);
    }
  }

  void reset() { nodes_.clear(); }
  size_t size() const { return nodes_.size(); }

  bool check_finite = false;

 private:
  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Operations. Each registers its local backward rule on the tape.
// ---------------------------------------------------------------------------

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  Tape<T>& tp = *a.tape;
  Var<T> out = tp.make(matmul_values(a.value(), b.value()), a.requires_grad() || b.requires_grad());
  if (out.requires_grad()) {
    int ai = a.id, bi = b.id, oi = out.id;
    tp.set_backward(out, [ai, bi, oi](Tape<T>& t) {
      const Matrix<T>& g = t.grad(oi);
      if (t.requires_grad(ai)) {
        Matrix<T>& da = t.grad(ai);
        da.map().noalias() += g.map() * t.val(bi).map().transpose();  // dA = G B^T
        t.mark_has_grad(ai);
      }
      if (t.requires_grad(bi)) {
        Matrix<T>& db = t.grad(bi);
        db.map().noalias() += t.val(ai).map().transpose() * g.map();  // dB = A^T G
        t.mark_has_grad(bi);
      }
    });
  }
  return out;
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  Tape<T>& tp = *a.tape;
  const Matrix<T>& av = a.value();
  const Matrix<T>& bv = b.value();
  if (!av.same_shape(bv))
    throw shape_error("add: shapes " + av.shape_str() + " vs " + bv.shape_str());
  Matrix<T> y(av.rows(), av.cols());
  for (size_t i = 0; i < y.size(); ++i) y.data()[i] = av.data()[i] + bv.data()[i];
  Var<T> out = tp.make(std::move(y), a.requires_grad() || b.requires_grad());
  if (out.requires_grad()) {
    int ai = a.id, bi = b.id, oi = out.id;
    tp.set_backward(out, [ai, bi, oi](Tape<T>& t) {
      const Matrix<T>& g = t.grad(oi);
      if (t.requires_grad(ai)) t.acc_grad(ai, g);
      if (t.requires_grad(bi)) t.acc_grad(bi, g);
    });
  }
  return out;
}

// x (n x c) + b (1 x c), broadcast over rows.
template <typename T>
Var<T> add_rowvec(Var<T> x, Var<T> b) {
  Tape<T>& tp = *x.tape;
  const Matrix<T>& xv = x.value();
  const Matrix<T>& bv = b.value();
  if (bv.rows() != 1 || bv.cols() != xv.cols())
    throw shape_error("add_rowvec: bias " + bv.shape_str() + " vs input " + xv.shape_str());
  Matrix<T> y(xv.rows(), xv.cols());
  for (int i = 0; i < xv.rows(); ++i)
    for (int j = 0; j < xv.cols(); ++j) y(i, j) = xv(i, j) + bv(0, j);
  Var<T> out = tp.make(std::move(y), x.requires_grad() || b.requires_grad());
  if (out.requires_grad()) {
    int xi = x.id, bi = b.id, oi = out.id;
    tp.set_backward(out, [xi, bi, oi](Tape<T>& t) {
      const Matrix<T>& g = t.grad(oi);
      if (t.requires_grad(xi)) t.acc_grad(xi, g);
      if (t.requires_grad(bi)) {
        Matrix<T>& db = t.grad(bi);
        for (int i = 0; i < g.rows(); ++i)
          for (int j = 0; j < g.cols(); ++j) db(0, j) += g(i, j);
        t.mark_has_grad(bi);
      }
    });
  }
  return out;
}

template <typename T>
Var<T> scale(Var<T> x, T alpha) {
  Tape<T>& tp = *x.tape;
  const Matrix<T>& xv = x.value();
  Matrix<T> y(xv.rows(), xv.cols());
  for (size_t i = 0; i < y.size(); ++i) y.data()[i] = alpha * xv.data()[i];
  Var<T> out = tp.make(std::move(y), x.requires_grad());
  if (out.requires_grad()) {
    int xi = x.id, oi = out.id;
    tp.set_backward(out, [xi, oi, alpha](Tape<T>& t) {
      const Matrix<T>& g = t.grad(oi);
      Matrix<T>& dx = t.grad(xi);
      for (size_t i = 0; i < g.size(); ++i) dx.data()[i] += alpha * g.data()[i];
      t.mark_has_grad(xi);
    });
  }
  return out;
}

template <typename T>
Var<T> transpose(Var<T> x) {
  Tape<T>& tp = *x.tape;
  Var<T> out = tp.make(transpose_values(x.value()), x.requires_grad());
  if (out.requires_grad()) {
    int xi = x.id, oi = out.id;
    tp.set_backward(out, [xi, oi](Tape<T>& t) { t.acc_grad(xi, transpose_values(t.grad(oi))); });
  }
  return out;
}

// Elementwise max(0, x); subgradient at 0 defined as 0.
template <typename T>
Var<T> relu(Var<T> x) {
  Tape<T>& tp = *x.tape;
  const Matrix<T>& xv = x.value();
  Matrix<T> y(xv.rows(), xv.cols());
  for (size_t i = 0; i < y.size(); ++i) y.data()[i] = xv.data()[i] > T(0) ? xv.data()[i] : T(0);
  Var<T> out = tp.make(std::move(y), x.requires_grad());
  if (out.requires_grad()) {
    int xi = x.id, oi = out.id;
    tp.set_backward(out, [xi, oi](Tape<T>& t) {
      const Matrix<T>& g = t.grad(oi);
      const Matrix<T>& xval = t.val(xi);
      Matrix<T>& dx = t.grad(xi);
      for (size_t i = 0; i < g.size(); ++i)
        if (xval.data()[i] > T(0)) dx.data()[i] += g.data()[i];
      t.mark_has_grad(xi);
    });
  }
  return out;
}

// Row-stochastic softmax with per-row max subtraction.
template <typename T>
Var<T> rowwise_softmax(Var<T> x) {
  Tape<T>& tp = *x.tape;
  const Matrix<T>& xv = x.value();
  Matrix<T> y(xv.rows(), xv.cols());
  {
    auto X = xv.map();
    auto Y = y.map();
    Eigen::Array<T, Eigen::Dynamic, 1> mx = X.array().rowwise().maxCoeff();
    Y.array() = (X.array().colwise() - mx).exp();
    Eigen::Array<T, Eigen::Dynamic, 1> s = Y.array().rowwise().sum();
    Y.array().colwise() /= s;
  }
  Var<T> out = tp.make(std::move(y), x.requires_grad());
  if (out.requires_grad()) {
    int xi = x.id, oi = out.id;
    tp.set_backward(out, [xi, oi](Tape<T>& t) {
      const Matrix<T>& g = t.grad(oi);
      const Matrix<T>& yv = t.val(oi);
      Matrix<T>& dx = t.grad(xi);
      for (int i = 0; i < g.rows(); ++i) {
        T dot = T(0);
        const T* gr = g.row(i);
        const T* yr = yv.row(i);
        T* dr = dx.row(i);
        for (int j = 0; j < g.cols(); ++j) dot += gr[j] * yr[j];
        for (int j = 0; j < g.cols(); ++j) dr[j] += yr[j] * (gr[j] - dot);
      }
      t.mark_has_grad(xi);
    });
  }
  return out;
}

// Inverted dropout: survivors scaled by 1/(1-rate) at training time,
// identity at inference. Consumes rows*cols draws only when active.
template <typename T>
Var<T> dropout(Var<T> x, double rate, Rng& rng, bool training) {
  if (rate < 0.0 || rate >= 1.0)
    throw config_error("dropout: rate must be in [0, 1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return x;
  Tape<T>& tp = *x.tape;
  const Matrix<T>& xv = x.value();
  auto keep = std::make_shared<std::vector<uint8_t>>(xv.size());
  const T inv = T(1.0 / (1.0 - rate));
  Matrix<T> y(xv.rows(), xv.cols());
  for (size_t i = 0; i < xv.size(); ++i) {
    bool k = rng.next_double() >= rate;
    (*keep)[i] = k;
    y.data()[i] = k ? xv.data()[i] * inv : T(0);
  }
  Var<T> out = tp.make(std::move(y), x.requires_grad());
  if (out.requires_grad()) {
    int xi = x.id, oi = out.id;
    tp.set_backward(out, [xi, oi, keep, inv](Tape<T>& t) {
      const Matrix<T>& g = t.grad(oi);
      Matrix<T>& dx = t.grad(xi);
      for (size_t i = 0; i < g.size(); ++i)
        if ((*keep)[i]) dx.data()[i] += g.data()[i] * inv;
      t.mark_has_grad(xi);
    });
  }
  return out;
}

namespace detail {

// Row-normalized copy of q; zero rows stay zero. Returns norms as well.
template <typename T>
void normalize_rows(const Matrix<T>& q, Matrix<T>& qhat, std::vector<T>& norm) {
  qhat = Matrix<T>(q.rows(), q.cols());
  norm.assign(q.rows(), T(0));
  for (int i = 0; i < q.rows(); ++i) {
    T s = T(0);
    const T* r = q.row(i);
    for (int j = 0; j < q.cols(); ++j) s += r[j] * r[j];
    T n = std::sqrt(double(s));
    norm[i] = n;
    if (n > T(0)) {
      T inv = T(1) / n;
      T* o = qhat.row(i);
      for (int j = 0; j < q.cols(); ++j) o[j] = r[j] * inv;
    }
  }
}

}  // namespace detail

// Pairwise cosine similarity of the rows of q: S(i,j) = <qi,qj>/(|qi||qj|).
// Exactly symmetric (upper triangle mirrored), entries clamped into [-1,1],
// zero-norm rows score 0 against everything including themselves.
template <typename T>
Var<T> rowwise_cosine(Var<T> q) {
  Tape<T>& tp = *q.tape;
  const Matrix<T>& qv = q.value();
  if (qv.cols() < 1) throw shape_error("rowwise_cosine: input needs at least one column");
  const int n = qv.rows();
  auto qhat = std::make_shared<Matrix<T>>();
  std::vector<T> norms;
  detail::normalize_rows(qv, *qhat, norms);
  auto norm = std::make_shared<std::vector<T>>(std::move(norms));

  Matrix<T> s(n, n);
  for (int i = 0; i < n; ++i) {
    const T* qi = qhat->row(i);
    for (int j = i; j < n; ++j) {
      const T* qj = qhat->row(j);
      T d = T(0);
      for (int k = 0; k < qv.cols(); ++k) d += qi[k] * qj[k];
      d = std::min(T(1), std::max(T(-1), d));
      s(i, j) = d;
      s(j, i) = d;
    }
  }
  Var<T> out = tp.make(std::move(s), q.requires_grad());
  if (out.requires_grad()) {
    int qi_id = q.id, oi = out.id;
    tp.set_backward(out, [qi_id, oi, qhat, norm](Tape<T>& t) {
      const Matrix<T>& g = t.grad(oi);
      const int n = g.rows();
      const int p = qhat->cols();
      // dQhat = (G + G^T) Qhat, then project through the row normalization.
      Matrix<T> gsym(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) gsym(i, j) = g(i, j) + g(j, i);
      Matrix<T> dqhat = matmul_values(gsym, *qhat);
      Matrix<T>& dq = t.grad(qi_id);
      for (int i = 0; i < n; ++i) {
        if ((*norm)[i] <= T(0)) continue;
        const T* qh = qhat->row(i);
        const T* dh = dqhat.row(i);
        T dot = T(0);
        for (int k = 0; k < p; ++k) dot += dh[k] * qh[k];
        T inv = T(1) / (*norm)[i];
        T* o = dq.row(i);
        for (int k = 0; k < p; ++k) o[k] += (dh[k] - dot * qh[k]) * inv;
      }
      t.mark_has_grad(qi_id);
    });
  }
  return out;
}

template <typename T>
Var<T> concat_cols(const std::vector<Var<T>>& blocks) {
  if (blocks.empty()) throw shape_error("concat_cols: no blocks");
  Tape<T>& tp = *blocks[0].tape;
  const int n = blocks[0].value().rows();
  int total = 0;
  bool req = false;
  for (const auto& b : blocks) {
    if (b.value().rows() != n) throw shape_error("concat_cols: row counts differ");
    total += b.value().cols();
    req = req || b.requires_grad();
  }
  Matrix<T> y(n, total);
  int off = 0;
  for (const auto& b : blocks) {
    const Matrix<T>& bv = b.value();
    for (int i = 0; i < n; ++i)
      std::memcpy(y.row(i) + off, bv.row(i), sizeof(T) * bv.cols());
    off += bv.cols();
  }
  Var<T> out = tp.make(std::move(y), req);
  if (req) {
    std::vector<int> ids;
    std::vector<int> widths;
    for (const auto& b : blocks) {
      ids.push_back(b.id);
      widths.push_back(b.value().cols());
    }
    int oi = out.id;
    tp.set_backward(out, [ids, widths, oi](Tape<T>& t) {
      const Matrix<T>& g = t.grad(oi);
      int off = 0;
      for (size_t k = 0; k < ids.size(); ++k) {
        if (t.requires_grad(ids[k])) {
          Matrix<T>& db = t.grad(ids[k]);
          for (int i = 0; i < g.rows(); ++i) {
            const T* gr = g.row(i) + off;
            T* dr = db.row(i);
            for (int j = 0; j < widths[k]; ++j) dr[j] += gr[j];
          }
          t.mark_has_grad(ids[k]);
        }
        off += widths[k];
      }
    });
  }
  return out;
}

// Hadamard product; b either matches a's shape or is a 1 x cols row vector
// broadcast over a's rows.
template <typename T>
Var<T> hadamard(Var<T> a, Var<T> b) {
  Tape<T>& tp = *a.tape;
  const Matrix<T>& av = a.value();
  const Matrix<T>& bv = b.value();
  const bool rowvec = bv.rows() == 1 && av.rows() != 1;
  if (!rowvec && !av.same_shape(bv))
    throw shape_error("hadamard: shapes " + av.shape_str() + " vs " + bv.shape_str());
  if (rowvec && bv.cols() != av.cols())
    throw shape_error("hadamard: broadcast width " + bv.shape_str() + " vs " + av.shape_str());
  Matrix<T> y(av.rows(), av.cols());
  if (rowvec) {
    for (int i = 0; i < av.rows(); ++i)
      for (int j = 0; j < av.cols(); ++j) y(i, j) = av(i, j) * bv(0, j);
  } else {
    for (size_t i = 0; i < y.size(); ++i) y.data()[i] = av.data()[i] * bv.data()[i];
  }
  Var<T> out = tp.make(std::move(y), a.requires_grad() || b.requires_grad());
  if (out.requires_grad()) {
    int ai = a.id, bi = b.id, oi = out.id;
    tp.set_backward(out, [ai, bi, oi, rowvec](Tape<T>& t) {
      const Matrix<T>& g = t.grad(oi);
      const Matrix<T>& av2 = t.val(ai);
      const Matrix<T>& bv2 = t.val(bi);
      if (t.requires_grad(ai)) {
        Matrix<T>& da = t.grad(ai);
        if (rowvec) {
          for (int i = 0; i < g.rows(); ++i)
            for (int j = 0; j < g.cols(); ++j) da(i, j) += g(i, j) * bv2(0, j);
        } else {
          for (size_t i = 0; i < g.size(); ++i) da.data()[i] += g.data()[i] * bv2.data()[i];
        }
        t.mark_has_grad(ai);
      }
      if (t.requires_grad(bi)) {
        Matrix<T>& db = t.grad(bi);
        if (rowvec) {
          for (int i = 0; i < g.rows(); ++i)
            for (int j = 0; j < g.cols(); ++j) db(0, j) += g(i, j) * av2(i, j);
        } else {
          for (size_t i = 0; i < g.size(); ++i) db.data()[i] += g.data()[i] * av2.data()[i];
        }
        t.mark_has_grad(bi);
      }
    });
  }
  return out;
}

template <typename T>
Var<T> mean_over(const std::vector<Var<T>>& xs) {
  if (xs.empty()) throw shape_error("mean_over: empty list");
  Tape<T>& tp = *xs[0].tape;
  const Matrix<T>& first = xs[0].value();
  bool req = false;
  for (const auto& x : xs) {
    if (!x.value().same_shape(first)) throw shape_error("mean_over: shapes differ");
    req = req || x.requires_grad();
  }
  const T inv = T(1) / T(xs.size());
  Matrix<T> y(first.rows(), first.cols());
  for (const auto& x : xs) {
    const Matrix<T>& xv = x.value();
    for (size_t i = 0; i < y.size(); ++i) y.data()[i] += xv.data()[i];
  }
  for (size_t i = 0; i < y.size(); ++i) y.data()[i] *= inv;
  Var<T> out = tp.make(std::move(y), req);
  if (req) {
    std::vector<int> ids;
    for (const auto& x : xs) ids.push_back(x.id);
    int oi = out.id;
    tp.set_backward(out, [ids, oi, inv](Tape<T>& t) {
      const Matrix<T>& g = t.grad(oi);
      for (int id : ids) {
        if (!t.requires_grad(id)) continue;
        Matrix<T>& dx = t.grad(id);
        for (size_t i = 0; i < g.size(); ++i) dx.data()[i] += g.data()[i] * inv;
        t.mark_has_grad(id);
      }
    });
  }
  return out;
}

// Per-row normalization to zero mean / unit population variance with
// learnable per-feature scale and shift (1 x cols each). 1e-5 floor
// inside the square root.
template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gamma, Var<T> beta) {
  Tape<T>& tp = *x.tape;
  const Matrix<T>& xv = x.value();
  const int n = xv.rows(), c = xv.cols();
  if (gamma.value().rows() != 1 || gamma.value().cols() != c || beta.value().rows() != 1 ||
      beta.value().cols() != c)
    throw shape_error("layer_norm: scale/shift must be 1x" + std::to_string(c));
  auto xhat = std::make_shared<Matrix<T>>(n, c);
  auto inv_std = std::make_shared<std::vector<T>>(n);
  Matrix<T> y(n, c);
  const Matrix<T>& gv = gamma.value();
  const Matrix<T>& bv = beta.value();
  for (int i = 0; i < n; ++i) {
    const T* r = xv.row(i);
    T mu = T(0);
    for (int j = 0; j < c; ++j) mu += r[j];
    mu /= T(c);
    T var = T(0);
    for (int j = 0; j < c; ++j) var += (r[j] - mu) * (r[j] - mu);
    var /= T(c);
    T inv = T(1) / std::sqrt(double(var) + 1e-5);
    (*inv_std)[i] = inv;
    T* xh = xhat->row(i);
    T* yr = y.row(i);
    for (int j = 0; j < c; ++j) {
      xh[j] = (r[j] - mu) * inv;
      yr[j] = xh[j] * gv(0, j) + bv(0, j);
    }
  }
  Var<T> out =
      tp.make(std::move(y), x.requires_grad() || gamma.requires_grad() || beta.requires_grad());
  if (out.requires_grad()) {
    int xi = x.id, gi = gamma.id, bi = beta.id, oi = out.id;
    tp.set_backward(out, [xi, gi, bi, oi, xhat, inv_std](Tape<T>& t) {
      const Matrix<T>& g = t.grad(oi);
      const int n = g.rows(), c = g.cols();
      const Matrix<T>& gv = t.val(gi);
      if (t.requires_grad(gi)) {
        Matrix<T>& dg = t.grad(gi);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < c; ++j) dg(0, j) += g(i, j) * (*xhat)(i, j);
        t.mark_has_grad(gi);
      }
      if (t.requires_grad(bi)) {
        Matrix<T>& db = t.grad(bi);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < c; ++j) db(0, j) += g(i, j);
        t.mark_has_grad(bi);
      }
      if (t.requires_grad(xi)) {
        Matrix<T>& dx = t.grad(xi);
        for (int i = 0; i < n; ++i) {
          T m1 = T(0), m2 = T(0);
          for (int j = 0; j < c; ++j) {
            T dxh = g(i, j) * gv(0, j);
            m1 += dxh;
            m2 += dxh * (*xhat)(i, j);
          }
          m1 /= T(c);
          m2 /= T(c);
          for (int j = 0; j < c; ++j) {
            T dxh = g(i, j) * gv(0, j);
            dx(i, j) += ((dxh - m1) - (*xhat)(i, j) * m2) * (*inv_std)[i];
          }
        }
        t.mark_has_grad(xi);
      }
    });
  }
  return out;
}

template <typename T>
Var<T> sum_all(Var<T> x) {
  Tape<T>& tp = *x.tape;
  const Matrix<T>& xv = x.value();
  T s = T(0);
  for (size_t i = 0; i < xv.size(); ++i) s += xv.data()[i];
  Matrix<T> y(1, 1);
  y(0, 0) = s;
  Var<T> out = tp.make(std::move(y), x.requires_grad());
  if (out.requires_grad()) {
    int xi = x.id, oi = out.id;
    tp.set_backward(out, [xi, oi](Tape<T>& t) {
      const T g = t.grad(oi)(0, 0);
      Matrix<T>& dx = t.grad(xi);
      for (size_t i = 0; i < dx.size(); ++i) dx.data()[i] += g;
      t.mark_has_grad(xi);
    });
  }
  return out;
}

}  // namespace gcnsa
