#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gcnsa/config.hpp"
#include "gcnsa/graph.hpp"
#include "gcnsa/sparse_ops.hpp"

namespace gcnsa {

template <typename T>
struct ParamRef {
  std::string name;
  Matrix<T>* tensor;
};

// Binds parameter tensors to tape leaves for one forward pass and remembers
// the association so the trainer can harvest gradients.
template <typename T>
class Binder {
 public:
  explicit Binder(Tape<T>& tape) : tape_(&tape) {}

  Var<T> operator()(Matrix<T>& m) {
    Var<T> v = tape_->leaf(m, true);
    bound_.push_back({&m, v});
    return v;
  }

  // Gradient of a tensor bound this pass; zeros if it never received one.
  Matrix<T> grad_of(const Matrix<T>* tensor) const {
    for (const auto& [ptr, var] : bound_) {
      if (ptr != tensor) continue;
      return tape_->grad(var.id);
    }
    return Matrix<T>::zeros(tensor->rows(), tensor->cols());
  }

 private:
  Tape<T>* tape_;
  std::vector<std::pair<Matrix<T>*, Var<T>>> bound_;
};

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

template <typename T>
struct GcnSaParams {
  VariantConfig variant;
  StructureHeads<T> structure;
  InputProjection<T> projection;
  ModifiedBlockParams<T> fusion1, fusion2;
  OriginalBlockParams<T> fusion1_tf, fusion2_tf;
  Matrix<T> gate;  // 1 x width(H^cb), ones at init so the gate starts as identity
  Matrix<T> w1;    // width(H^cb) x c

  int cb_width(int q) const {
    const int base = variant.use_fusion1 ? 2 * q : q;
    const int blocks = 1 + (variant.use_a ? 2 : 0) + (variant.use_a_star ? 1 : 0);
    return base * blocks;
  }

  static GcnSaParams init(int d, int c, const TrainConfig& cfg, const VariantConfig& variant_in,
                          Rng& rng) {
    GcnSaParams ps;
    ps.variant = variant_in.normalized();
    if (cfg.q % cfg.m_fusion != 0)
      throw config_error("q=" + std::to_string(cfg.q) + " not divisible by m_fusion=" +
                         std::to_string(cfg.m_fusion));
    if (ps.variant.use_a_star)
      for (int i = 0; i < cfg.m_structure; ++i)
        ps.structure.w_q.push_back(init_params<T>(d, cfg.p, rng));
    ps.projection.w0 = init_params<T>(d, cfg.q, rng);
    ps.projection.b0 = init_params<T>(1, cfg.q, rng, /*bias=*/true);
    if (ps.variant.use_fusion1) {
      if (ps.variant.block_kind == BlockKind::modified)
        ps.fusion1 = init_modified(cfg.q, cfg.m_fusion, cfg.dropout, rng);
      else
        ps.fusion1_tf = init_original(cfg.q, cfg.m_fusion, rng);
    }
    const int width = ps.cb_width(cfg.q);
    ps.gate = Matrix<T>::ones(1, width);
    ps.w1 = init_params<T>(width, c, rng);
    if (ps.variant.use_fusion2) {
      if (ps.variant.block_kind == BlockKind::modified)
        ps.fusion2 = init_modified(c, 1, cfg.dropout, rng);
      else
        ps.fusion2_tf = init_original(c, 1, rng);
    }
    return ps;
  }

  std::vector<ParamRef<T>> collect() {
    std::vector<ParamRef<T>> out;
    for (size_t i = 0; i < structure.w_q.size(); ++i)
      out.push_back({"structure.w_q" + std::to_string(i), &structure.w_q[i]});
    out.push_back({"projection.w0", &projection.w0});
    out.push_back({"projection.b0", &projection.b0});
    collect_modified(out, "fusion1", fusion1);
    collect_original(out, "fusion1_tf", fusion1_tf);
    out.push_back({"gate", &gate});
    out.push_back({"w1", &w1});
    collect_modified(out, "fusion2", fusion2);
    collect_original(out, "fusion2_tf", fusion2_tf);
    return out;
  }

 private:
  static ModifiedBlockParams<T> init_modified(int q, int m, double rate, Rng& rng) {
    ModifiedBlockParams<T> b;
    b.m = m;
    b.dropout_rate = rate;
    const int dk = q / m;
    for (int i = 0; i < m; ++i) {
      b.w_q.push_back(init_params<T>(q, dk, rng));
      b.w_k.push_back(init_params<T>(q, dk, rng));
      b.w_v.push_back(init_params<T>(q, dk, rng));
    }
    return b;
  }

  static OriginalBlockParams<T> init_original(int q, int m, Rng& rng) {
    OriginalBlockParams<T> b;
    b.m = m;
    const int dk = q / m;
    for (int i = 0; i < m; ++i) {
      b.w_q.push_back(init_params<T>(q, dk, rng));
      b.w_k.push_back(init_params<T>(q, dk, rng));
      b.w_v.push_back(init_params<T>(q, dk, rng));
    }
    b.w_out = init_params<T>(q, q, rng);
    b.w_ff = init_params<T>(q, q, rng);
    b.ln1 = {Matrix<T>::ones(1, q), Matrix<T>::zeros(1, q)};
    b.ln2 = {Matrix<T>::ones(1, q), Matrix<T>::zeros(1, q)};
    return b;
  }

  static void collect_modified(std::vector<ParamRef<T>>& out, const std::string& prefix,
                               ModifiedBlockParams<T>& b) {
    for (size_t i = 0; i < b.w_q.size(); ++i) {
      out.push_back({prefix + ".w_q" + std::to_string(i), &b.w_q[i]});
      out.push_back({prefix + ".w_k" + std::to_string(i), &b.w_k[i]});
      out.push_back({prefix + ".w_v" + std::to_string(i), &b.w_v[i]});
    }
  }

  static void collect_original(std::vector<ParamRef<T>>& out, const std::string& prefix,
                               OriginalBlockParams<T>& b) {
    for (size_t i = 0; i < b.w_q.size(); ++i) {
      out.push_back({prefix + ".w_q" + std::to_string(i), &b.w_q[i]});
      out.push_back({prefix + ".w_k" + std::to_string(i), &b.w_k[i]});
      out.push_back({prefix + ".w_v" + std::to_string(i), &b.w_v[i]});
    }
    if (!b.w_out.empty()) {
      out.push_back({prefix + ".w_out", &b.w_out});
      out.push_back({prefix + ".w_ff", &b.w_ff});
      out.push_back({prefix + ".ln1.gamma", &b.ln1.gamma});
      out.push_back({prefix + ".ln1.beta", &b.ln1.beta});
      out.push_back({prefix + ".ln2.gamma", &b.ln2.gamma});
      out.push_back({prefix + ".ln2.beta", &b.ln2.beta});
    }
  }
};

template <typename T>
struct GcnBaselineParams {
  Matrix<T> w0, w1;

  static GcnBaselineParams init(int d, int c, int hidden, Rng& rng) {
    GcnBaselineParams ps;
    ps.w0 = init_params<T>(d, hidden, rng);
    ps.w1 = init_params<T>(hidden, c, rng);
    return ps;
  }

  std::vector<ParamRef<T>> collect() { return {{"w0", &w0}, {"w1", &w1}}; }
};

template <typename T>
struct MlpParams {
  Matrix<T> w0, b0, w1, b1;

  static MlpParams init(int d, int c, int hidden, Rng& rng) {
    MlpParams ps;
    ps.w0 = init_params<T>(d, hidden, rng);
    ps.b0 = init_params<T>(1, hidden, rng, true);
    ps.w1 = init_params<T>(hidden, c, rng);
    ps.b1 = init_params<T>(1, c, rng, true);
    return ps;
  }

  std::vector<ParamRef<T>> collect() {
    return {{"w0", &w0}, {"b0", &b0}, {"w1", &w1}, {"b1", &b1}};
  }
};

// ---------------------------------------------------------------------------
// Forward passes
// ---------------------------------------------------------------------------

// Immutable per-run view of the graph in training precision.
template <typename T>
struct ModelInputs {
  const Graph* g = nullptr;
  std::shared_ptr<const CsrMatrix<T>> x_csr;  // set when the features are sparse enough
  Matrix<T> x_dense;
  std::shared_ptr<const SparseAdjacency<T>> a_hat;  // normalized original graph

  static ModelInputs from_graph(const Graph& g, bool need_a = true) {
    ModelInputs in;
    in.g = &g;
    Matrix<T> x = convert<T>(g.x);
    auto csr = CsrMatrix<T>::from_dense(x);
    if (csr.density() < 0.25)
      in.x_csr = std::make_shared<const CsrMatrix<T>>(std::move(csr));
    in.x_dense = std::move(x);
    if (need_a)
      in.a_hat = std::make_shared<const SparseAdjacency<T>>(
          normalize_with_self_loops(adjacency<T>(g)));
    return in;
  }
};

template <typename T>
struct ForwardOptions {
  bool training = false;
  const SparsePattern* frozen_pattern = nullptr;       // finite-difference harness
  const SparseAdjacency<T>* astar_override = nullptr;  // reuse A*-hat from a paired pass
};

template <typename T>
struct ForwardOutput {
  Var<T> z;     // n x c, rows sum to 1
  Var<T> h_cb;  // diagnostic embedding
  bool has_astar = false;
  Reconnected<T> astar;
};

namespace detail {

// X W0 through the sparse representation when available.
template <typename T>
Var<T> project_features(Tape<T>& tape, const ModelInputs<T>& in, Var<T> w) {
  if (in.x_csr) return csr_matmul(in.x_csr, w);
  return matmul(tape.leaf(in.x_dense, false), w);
}

template <typename T>
MhsaVars<T> bind_mhsa(Binder<T>& bind, ModifiedBlockParams<T>& p) {
  MhsaVars<T> v;
  for (size_t i = 0; i < p.w_q.size(); ++i) {
    v.w_q.push_back(bind(p.w_q[i]));
    v.w_k.push_back(bind(p.w_k[i]));
    v.w_v.push_back(bind(p.w_v[i]));
  }
  return v;
}

template <typename T>
OriginalBlockVars<T> bind_original(Binder<T>& bind, OriginalBlockParams<T>& p) {
  OriginalBlockVars<T> v;
  for (size_t i = 0; i < p.w_q.size(); ++i) {
    v.qkv.w_q.push_back(bind(p.w_q[i]));
    v.qkv.w_k.push_back(bind(p.w_k[i]));
    v.qkv.w_v.push_back(bind(p.w_v[i]));
  }
  v.w_out = bind(p.w_out);
  v.w_ff = bind(p.w_ff);
  v.ln1_gamma = bind(p.ln1.gamma);
  v.ln1_beta = bind(p.ln1.beta);
  v.ln2_gamma = bind(p.ln2.gamma);
  v.ln2_beta = bind(p.ln2.beta);
  return v;
}

template <typename T>
Var<T> apply_fusion(Binder<T>& bind, Var<T> input, GcnSaParams<T>& ps, bool first,
                    const TrainConfig& cfg, Rng& rng, bool training) {
  if (ps.variant.block_kind == BlockKind::modified) {
    ModifiedBlockParams<T>& block = first ? ps.fusion1 : ps.fusion2;
    MhsaVars<T> vars = bind_mhsa(bind, block);
    return modified_block(input, vars, block.dropout_rate, rng, training, cfg.residual);
  }
  OriginalBlockVars<T> vars = bind_original(bind, first ? ps.fusion1_tf : ps.fusion2_tf);
  return original_block(input, vars);
}

}  // namespace detail

// Algorithm 1: structure learning, projection, feature fusion, aggregation
// over A-hat and A*-hat, gated concatenation, embedding fusion, softmax.
template <typename T>
ForwardOutput<T> gcnsa_forward(Tape<T>& tape, Binder<T>& bind, const ModelInputs<T>& in,
                               GcnSaParams<T>& ps, const TrainConfig& cfg, Rng& rng,
                               const ForwardOptions<T>& opts = {}) {
  const VariantConfig& variant = ps.variant;
  ForwardOutput<T> out;

  // (1) A* <- structure learning over X
  if (variant.use_a_star && !opts.astar_override) {
    std::vector<Var<T>> wq;
    for (auto& w : ps.structure.w_q) wq.push_back(bind(w));
    Var<T> x_for_structure = tape.leaf(in.x_dense, false);
    out.astar = build_reconnected(x_for_structure, wq, cfg.sparsifier(), cfg.block_rows,
                                  opts.frozen_pattern);
    out.has_astar = true;
  }

  // (2) H_original = ReLU(X W0 + b0)
  Var<T> h_original =
      relu(add_rowvec(detail::project_features(tape, in, bind(ps.projection.w0)),
                      bind(ps.projection.b0)));

  // (3) feature fusion, (4) ego-embeddings H = [H_fusion || H_original]
  Var<T> h = h_original;
  if (variant.use_fusion1) {
    Var<T> h_fusion = detail::apply_fusion(bind, h_original, ps, true, cfg, rng, opts.training);
    h = concat_cols<T>({h_fusion, h_original});
  }

  // (5)-(7) aggregation branches and the concatenated general embedding
  std::vector<Var<T>> blocks{h};
  if (variant.use_a) {
    Var<T> hk = h;
    Var<T> hk_prev = h;
    for (int k = 1; k <= cfg.K; ++k) {
      hk_prev = hk;
      hk = spmm(in.a_hat, hk);
    }
    blocks.push_back(hk_prev);  // H^(K-1), equal to H itself when K = 1
    blocks.push_back(hk);
  }
  if (variant.use_a_star) {
    Var<T> h_astar;
    if (opts.astar_override) {
      auto holder = std::make_shared<const SparseAdjacency<T>>(*opts.astar_override);
      h_astar = spmm(holder, h);
    } else {
      h_astar = spmm_learned(
          std::shared_ptr<const SparsePattern>(out.astar.pattern), out.astar.values_norm, h);
    }
    blocks.push_back(h_astar);
  }
  Var<T> h_cb = blocks.size() == 1 ? blocks[0] : concat_cols(blocks);
  h_cb = dropout(h_cb, cfg.dropout, rng, opts.training);
  out.h_cb = h_cb;

  // (8) gate + ReLU, (9) classifier and embedding fusion
  Var<T> h1 = relu(hadamard(h_cb, bind(ps.gate)));
  Var<T> logits = matmul(h1, bind(ps.w1));
  if (variant.use_fusion2)
    logits = detail::apply_fusion(bind, logits, ps, false, cfg, rng, opts.training);
  out.z = rowwise_softmax(logits);
  return out;
}

// Eq. 2: softmax(A-hat ReLU(A-hat X W0) W1)
template <typename T>
Var<T> gcn_baseline_forward(Tape<T>& tape, Binder<T>& bind, const ModelInputs<T>& in,
                            GcnBaselineParams<T>& ps) {
  Var<T> xw = detail::project_features(tape, in, bind(ps.w0));
  Var<T> h = relu(spmm(in.a_hat, xw));
  return rowwise_softmax(spmm(in.a_hat, matmul(h, bind(ps.w1))));
}

// Structure-blind two-layer perceptron.
template <typename T>
Var<T> mlp_baseline_forward(Tape<T>& tape, Binder<T>& bind, const ModelInputs<T>& in,
                            MlpParams<T>& ps) {
  Var<T> h = relu(add_rowvec(detail::project_features(tape, in, bind(ps.w0)), bind(ps.b0)));
  return rowwise_softmax(add_rowvec(matmul(h, bind(ps.w1)), bind(ps.b1)));
}

// ---------------------------------------------------------------------------
// Loss and metrics
// ---------------------------------------------------------------------------

// Cross-entropy over the labeled nodes, -sum_i ln z[i, y_i] (Eq. 30 with
// one-hot targets). The L2 penalty is the trainer's business, not the loss's.
template <typename T>
Var<T> loss_nll(Var<T> z, const std::vector<int>& labels, const std::vector<int>& mask) {
  if (mask.empty()) throw config_error("loss: empty mask");
  Tape<T>& tp = *z.tape;
  const Matrix<T>& zv = z.value();
  double total = 0.0;
  for (int i : mask) total -= std::log(double(zv(i, labels[i])));
  Matrix<T> val(1, 1);
  val(0, 0) = T(total);
  Var<T> out = tp.make(std::move(val), z.requires_grad());
  if (out.requires_grad()) {
    int zi = z.id, oi = out.id;
    auto mask_copy = std::make_shared<std::vector<int>>(mask);
    auto labels_copy = std::make_shared<std::vector<int>>(labels);
    tp.set_backward(out, [zi, oi, mask_copy, labels_copy](Tape<T>& t) {
      const T g = t.grad(oi)(0, 0);
      const Matrix<T>& zv2 = t.val(zi);
      Matrix<T>& dz = t.grad(zi);
      for (int i : *mask_copy) {
        const int y = (*labels_copy)[i];
        dz(i, y) -= g / zv2(i, y);
      }
      t.mark_has_grad(zi);
    });
  }
  return out;
}

template <typename T>
double nll_value(const Matrix<T>& z, const std::vector<int>& labels, const std::vector<int>& mask) {
  if (mask.empty()) throw config_error("loss: empty mask");
  double total = 0.0;
  for (int i : mask) total -= std::log(double(z(i, labels[i])));
  return total;
}

}  // namespace gcnsa
