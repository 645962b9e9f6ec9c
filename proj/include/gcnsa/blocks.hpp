#pragma once

#include <vector>

#include "gcnsa/tape.hpp"

namespace gcnsa {

// H_original = ReLU(X W^0 + b^0)
template <typename T>
struct InputProjection {
  Matrix<T> w0;  // d x q
  Matrix<T> b0;  // 1 x q
};

template <typename T>
struct LayerNormParams {
  Matrix<T> gamma;  // 1 x q, ones
  Matrix<T> beta;   // 1 x q, zeros
};

// Per-head Query/Key/Value projections, q x (q/m) each. The modified block
// concatenates head outputs without an output projection.
template <typename T>
struct ModifiedBlockParams {
  int m = 1;
  double dropout_rate = 0.0;
  std::vector<Matrix<T>> w_q, w_k, w_v;
};

// The standard transformer block used only by the GCN-SA-TF ablation: it
// keeps the output projection after the head concat, a feed-forward weight,
// and layer norm after each sub-layer.
template <typename T>
struct OriginalBlockParams {
  int m = 1;
  std::vector<Matrix<T>> w_q, w_k, w_v;
  Matrix<T> w_out;  // q x q
  Matrix<T> w_ff;   // q x q
  LayerNormParams<T> ln1, ln2;
};

// Whether the outer residual of the modified block bypasses dropout (raw)
// or reuses the dropped H_original (dropped). The equations leave this open.
enum class ResidualVariant { raw, dropped };

// Glorot-uniform weight init; biases (and anything flagged as such) zero.
template <typename T>
Matrix<T> init_params(int rows, int cols, Rng& rng, bool bias = false) {
  if (rows <= 0 || cols <= 0) throw config_error("init_params: dimensions must be positive");
  if (bias) return Matrix<T>::zeros(rows, cols);
  Matrix<T> w(rows, cols);
  const double s = std::sqrt(6.0 / (rows + cols));
  fill_uniform(w, rng, -s, s);
  return w;
}

// Tape handles of one attention block's weights.
template <typename T>
struct MhsaVars {
  std::vector<Var<T>> w_q, w_k, w_v;
};

template <typename T>
struct MhsaResult {
  Var<T> out;
  std::vector<Var<T>> attn;  // post-softmax attention, one n x n per head
};

// Concat over heads of softmax(Q_i K_i^T / sqrt(d_k)) V_i, no output
// projection (Eqs. 16-20).
template <typename T>
MhsaResult<T> mhsa(Var<T> h, const MhsaVars<T>& p) {
  const int q = h.value().cols();
  const int m = int(p.w_q.size());
  if (m < 1 || q % m != 0)
    throw config_error("mhsa: head count " + std::to_string(m) + " must divide width " +
                       std::to_string(q));
  const int dk = q / m;
  const T inv_sqrt_dk = T(1.0 / std::sqrt(double(dk)));
  MhsaResult<T> res;
  std::vector<Var<T>> heads;
  for (int i = 0; i < m; ++i) {
    Var<T> qi = matmul(h, p.w_q[i]);
    Var<T> ki = matmul(h, p.w_k[i]);
    Var<T> vi = matmul(h, p.w_v[i]);
    Var<T> logits = scale(matmul(qi, transpose(ki)), inv_sqrt_dk);
    Var<T> attn = rowwise_softmax(logits);
    res.attn.push_back(attn);
    heads.push_back(matmul(attn, vi));
  }
  res.out = heads.size() == 1 ? heads[0] : concat_cols(heads);
  return res;
}

// Modified transformer block (Eq. 22):
//   H_fusion = Dropout(Dropout(H_original) + Dropout(H_MHSA)) + H_original
// with the outer residual taken raw by default. At inference every dropout
// is the identity, so the output is 2 H_original + MHSA(H_original).
template <typename T>
Var<T> modified_block(Var<T> h_original, const MhsaVars<T>& p, double dropout_rate, Rng& rng,
                      bool training, ResidualVariant variant = ResidualVariant::raw) {
  Var<T> h_drop = dropout(h_original, dropout_rate, rng, training);
  Var<T> a = mhsa(h_original, p).out;
  Var<T> a_drop = dropout(a, dropout_rate, rng, training);
  Var<T> inner = dropout(add(h_drop, a_drop), dropout_rate, rng, training);
  return add(inner, variant == ResidualVariant::raw ? h_original : h_drop);
}

template <typename T>
struct OriginalBlockVars {
  MhsaVars<T> qkv;
  Var<T> w_out, w_ff;
  Var<T> ln1_gamma, ln1_beta, ln2_gamma, ln2_beta;
};

// Original transformer block (Eqs. 4-10): output projection after the head
// concat, residual + layer norm around each sub-layer.
template <typename T>
Var<T> original_block(Var<T> x, const OriginalBlockVars<T>& p) {
  Var<T> attn = matmul(mhsa(x, p.qkv).out, p.w_out);
  Var<T> x1 = layer_norm(add(x, attn), p.ln1_gamma, p.ln1_beta);
  return layer_norm(add(x1, matmul(x1, p.w_ff)), p.ln2_gamma, p.ln2_beta);
}

}  // namespace gcnsa
