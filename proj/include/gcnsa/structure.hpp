#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "gcnsa/sparse_ops.hpp"

namespace gcnsa {

// Learnable projections of the structure-learning attention heads:
// Q_i = X W_i^Q, one d x p matrix per head.
template <typename T>
struct StructureHeads {
  std::vector<Matrix<T>> w_q;

  int heads() const { return int(w_q.size()); }
  int width() const { return w_q.empty() ? 0 : w_q[0].cols(); }
};

// KNN + minimum-threshold screening parameters (r neighbors per row,
// threshold epsilon).
struct SparsifierConfig {
  int r = 3;
  double epsilon = 0.8;
};

// Mean-over-heads cosine attention scores as a dense n x n tape node,
// differentiable w.r.t. every W_i^Q.
template <typename T>
Var<T> attention_scores(Var<T> x, const std::vector<Var<T>>& w_q) {
  std::vector<Var<T>> per_head;
  per_head.reserve(w_q.size());
  for (const auto& w : w_q) per_head.push_back(rowwise_cosine(matmul(x, w)));
  return mean_over(per_head);
}

namespace detail {

// Shared score kernel. Holds the row-normalized per-head projections; every
// path that needs a score (row screening, retained-value forward, retained
// -value backward) goes through the same per-head accumulation order, so the
// dense and blockwise paths agree bit for bit.
template <typename T>
struct ScoreContext {
  int n = 0, m = 0, p = 0;
  T inv_m = T(0);
  Matrix<T> qhat;            // n x (m*p), head blocks row-normalized
  std::vector<T> norms;      // n * m, per-head row norms

  T norm(int i, int h) const { return norms[size_t(i) * m + h]; }

  T score(int i, int j) const {
    const T* a = qhat.row(i);
    const T* b = qhat.row(j);
    T total = T(0);
    for (int h = 0; h < m; ++h) {
      T d = T(0);
      const T* ah = a + h * p;
      const T* bh = b + h * p;
      for (int k = 0; k < p; ++k) d += ah[k] * bh[k];
      total += d;
    }
    return total * inv_m;
  }

  void score_row(int i, T* out) const {
    for (int j = 0; j < n; ++j) out[j] = score(i, j);
  }
};

template <typename T>
std::shared_ptr<ScoreContext<T>> make_score_context(const std::vector<const Matrix<T>*>& qs) {
  auto ctx = std::make_shared<ScoreContext<T>>();
  ctx->m = int(qs.size());
  ctx->n = qs[0]->rows();
  ctx->p = qs[0]->cols();
  ctx->inv_m = T(1) / T(ctx->m);
  ctx->qhat = Matrix<T>(ctx->n, ctx->m * ctx->p);
  ctx->norms.assign(size_t(ctx->n) * ctx->m, T(0));
  for (int h = 0; h < ctx->m; ++h) {
    const Matrix<T>& q = *qs[h];
    for (int i = 0; i < ctx->n; ++i) {
      const T* r = q.row(i);
      T s = T(0);
      for (int k = 0; k < ctx->p; ++k) s += r[k] * r[k];
      T nrm = std::sqrt(double(s));
      ctx->norms[size_t(i) * ctx->m + h] = nrm;
      if (nrm > T(0)) {
        T inv = T(1) / nrm;
        T* o = ctx->qhat.row(i) + h * ctx->p;
        for (int k = 0; k < ctx->p; ++k) o[k] = r[k] * inv;
      }
    }
  }
  return ctx;
}

// Eq. 14 row screening: keep off-diagonal j with score > epsilon, plus the r
// largest off-diagonal entries (ties broken by smaller column index).
template <typename T>
void select_row(const T* scores, int i, int n, const SparsifierConfig& cfg,
                std::vector<int>& out) {
  out.clear();
  struct Cand {
    T s;
    int j;
  };
  std::vector<Cand> top;  // descending score, ascending j on ties
  top.reserve(cfg.r + 1);
  for (int j = 0; j < n; ++j) {
    if (j == i) continue;
    const T s = scores[j];
    if (s > T(cfg.epsilon)) out.push_back(j);
    if (int(top.size()) < cfg.r || s > top.back().s) {
      size_t pos = top.size();
      while (pos > 0 && top[pos - 1].s < s) --pos;
      top.insert(top.begin() + pos, {s, j});
      if (int(top.size()) > cfg.r) top.pop_back();
    }
  }
  for (const auto& c : top) out.push_back(c.j);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

}  // namespace detail

// Eq. 14 + Eq. 15 over a precomputed dense score matrix: threshold/top-r
// screening, max-symmetrization, negatives clamped to zero, diagonal
// excluded. Pattern entries clamped to zero are kept structurally.
template <typename T>
SparseAdjacency<T> sparsify(const Matrix<T>& s, const SparsifierConfig& cfg) {
  const int n = s.rows();
  if (s.cols() != n) throw shape_error("sparsify: score matrix must be square");
  if (cfg.r < 1) throw config_error("sparsify: r must be >= 1");
  if (cfg.r >= n) throw config_error("sparsify: r=" + std::to_string(cfg.r) +
                                     " must be smaller than n=" + std::to_string(n));
  std::vector<std::pair<int, int>> pairs;
  std::vector<int> sel;
  for (int i = 0; i < n; ++i) {
    detail::select_row(s.row(i), i, n, cfg, sel);
    for (int j : sel) {
      pairs.emplace_back(i, j);
      pairs.emplace_back(j, i);  // Eq. 15 closure
    }
  }
  SparsePattern pat = SparsePattern::from_pairs(n, std::move(pairs));
  SparseAdjacency<T> a;
  a.n = n;
  a.row_offsets = pat.row_offsets;
  a.col_indices = pat.col_indices;
  a.values.assign(pat.nnz(), T(0));
  for (int i = 0; i < n; ++i) {
    for (int e = pat.row_offsets[i]; e < pat.row_offsets[i + 1]; ++e) {
      int j = pat.col_indices[e];
      if (j < i) continue;
      T v = std::max(s(i, j), s(j, i));  // equal for symmetric s
      v = v > T(0) ? v : T(0);
      a.values[e] = v;
      int me = pat.find(j, i);
      if (me >= 0) a.values[me] = v;
    }
  }
  return a;
}

// Retained attention values on a fixed pattern, differentiable w.r.t. the
// per-head projections Q_i. The screening mask itself is treated as constant
// within a forward pass.
template <typename T>
Var<T> sparse_cosine_mean(const std::vector<Var<T>>& q_heads,
                          std::shared_ptr<const SparsePattern> pat,
                          std::shared_ptr<detail::ScoreContext<T>> ctx) {
  Tape<T>& tp = *q_heads[0].tape;
  Matrix<T> vals(1, pat->nnz());
  for (int i = 0; i < pat->n; ++i)
    for (int e = pat->row_offsets[i]; e < pat->row_offsets[i + 1]; ++e)
      vals.data()[e] = ctx->score(i, pat->col_indices[e]);
  bool req = false;
  for (const auto& q : q_heads) req = req || q.requires_grad();
  Var<T> out = tp.make(std::move(vals), req);
  if (req) {
    std::vector<int> q_ids;
    for (const auto& q : q_heads) q_ids.push_back(q.id);
    int oi = out.id;
    tp.set_backward(out, [q_ids, pat, ctx, oi](Tape<T>& t) {
      const Matrix<T>& g = t.grad(oi);
      const int m = ctx->m, p = ctx->p;
      const T inv_m = ctx->inv_m;
      std::vector<Matrix<T>*> dq(m, nullptr);
      for (int h = 0; h < m; ++h)
        if (t.requires_grad(q_ids[h])) dq[h] = &t.grad(q_ids[h]);
      for (int i = 0; i < pat->n; ++i) {
        for (int e = pat->row_offsets[i]; e < pat->row_offsets[i + 1]; ++e) {
          const int j = pat->col_indices[e];
          const T ge = g.data()[e];
          if (ge == T(0)) continue;
          for (int h = 0; h < m; ++h) {
            if (!dq[h]) continue;
            const T ni = ctx->norm(i, h);
            const T nj = ctx->norm(j, h);
            if (ni <= T(0) || nj <= T(0)) continue;
            const T* qi = ctx->qhat.row(i) + h * p;
            const T* qj = ctx->qhat.row(j) + h * p;
            T c = T(0);
            for (int k = 0; k < p; ++k) c += qi[k] * qj[k];
            const T gi = ge * inv_m / ni;
            const T gj = ge * inv_m / nj;
            T* di = dq[h]->row(i);
            T* dj = dq[h]->row(j);
            for (int k = 0; k < p; ++k) {
              di[k] += gi * (qj[k] - c * qi[k]);
              dj[k] += gj * (qi[k] - c * qj[k]);
            }
          }
        }
      }
      for (int h = 0; h < m; ++h)
        if (dq[h]) t.mark_has_grad(q_ids[h]);
    });
  }
  return out;
}

// Learned re-connected graph: fixed screened pattern plus tape-held values
// (raw clamped scores and their degree-normalized form).
template <typename T>
struct Reconnected {
  std::shared_ptr<SparsePattern> pattern;
  Var<T> values_raw;   // clamped A* entries, 1 x nnz
  Var<T> values_norm;  // A*-hat entries, 1 x nnz

  SparseAdjacency<T> adjacency_raw() const { return assemble(values_raw); }
  SparseAdjacency<T> adjacency_norm() const { return assemble(values_norm); }

 private:
  SparseAdjacency<T> assemble(const Var<T>& v) const {
    SparseAdjacency<T> a;
    a.n = pattern->n;
    a.row_offsets = pattern->row_offsets;
    a.col_indices = pattern->col_indices;
    a.values = v.value().vec();
    return a;
  }
};

struct ReconnectStats {
  size_t score_scratch_bytes = 0;  // high-water mark of the score buffer
};

// Attention scoring -> screening -> symmetrization -> clamp -> degree
// normalization, recomputed every forward pass. block_rows = 0 scores all
// rows at once; otherwise at most block_rows x n scores are ever held.
// A frozen pattern skips the screening (finite-difference harness).
template <typename T>
Reconnected<T> build_reconnected(Var<T> x, const std::vector<Var<T>>& w_q,
                                 const SparsifierConfig& cfg, int block_rows = 0,
                                 const SparsePattern* frozen_pattern = nullptr,
                                 ReconnectStats* stats = nullptr) {
  const int n = x.value().rows();
  if (cfg.r >= n) throw config_error("build_reconnected: r=" + std::to_string(cfg.r) +
                                     " must be smaller than n=" + std::to_string(n));
  std::vector<Var<T>> q_heads;
  q_heads.reserve(w_q.size());
  for (const auto& w : w_q) q_heads.push_back(matmul(x, w));
  std::vector<const Matrix<T>*> q_vals;
  for (const auto& q : q_heads) q_vals.push_back(&q.value());
  auto ctx = detail::make_score_context(q_vals);

  std::shared_ptr<SparsePattern> pat;
  if (frozen_pattern) {
    pat = std::make_shared<SparsePattern>(*frozen_pattern);
  } else {
    const int rows_per_block = block_rows > 0 ? block_rows : n;
    std::vector<T> scratch(size_t(rows_per_block) * n);
    if (stats) stats->score_scratch_bytes = scratch.size() * sizeof(T);
    std::vector<std::pair<int, int>> pairs;
    std::vector<int> sel;
    for (int base = 0; base < n; base += rows_per_block) {
      const int hi = std::min(base + rows_per_block, n);
      for (int i = base; i < hi; ++i) ctx->score_row(i, scratch.data() + size_t(i - base) * n);
      for (int i = base; i < hi; ++i) {
        detail::select_row(scratch.data() + size_t(i - base) * n, i, n, cfg, sel);
        for (int j : sel) {
          pairs.emplace_back(i, j);
          pairs.emplace_back(j, i);
        }
      }
    }
    pat = std::make_shared<SparsePattern>(SparsePattern::from_pairs(n, std::move(pairs)));
  }

  Reconnected<T> rec;
  rec.pattern = pat;
  Var<T> scores = sparse_cosine_mean(q_heads, pat, std::move(ctx));
  rec.values_raw = relu(scores);
  rec.values_norm = normalize_sym(std::static_pointer_cast<const SparsePattern>(pat),
                                  rec.values_raw);
  return rec;
}

// Non-tape convenience wrapper: the normalized re-connected adjacency for a
// plain feature matrix.
template <typename T>
SparseAdjacency<T> reconnect(const Matrix<T>& x, const StructureHeads<T>& heads,
                             const SparsifierConfig& cfg, int block_rows = 0,
                             ReconnectStats* stats = nullptr) {
  Tape<T> tape;
  Var<T> xv = tape.leaf(x, false);
  std::vector<Var<T>> wq;
  for (const auto& w : heads.w_q) wq.push_back(tape.leaf(w, false));
  Reconnected<T> rec = build_reconnected(xv, wq, cfg, block_rows, nullptr, stats);
  return rec.adjacency_norm();
}

}  // namespace gcnsa
