#include "gcnsa/gradcheck.hpp"

namespace gcnsa {

namespace {

Matrix<double> random_matrix(int r, int c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix<double> m(r, c);
  fill_uniform(m, rng, lo, hi);
  return m;
}

// Fixed weighting reused by every eval of one check.
struct WeightedLoss {
  Matrix<double> w;
  explicit WeightedLoss(int r, int c, Rng& rng) : w(random_matrix(r, c, rng)) {}
  Var<double> operator()(Var<double> y, Tape<double>& tape) const {
    return detail::weighted_sum(y, w, tape);
  }
};

}  // namespace

std::vector<GradCheckResult> run_gradcheck_suite(const std::string& filter, bool inject_fault) {
  std::vector<GradCheckResult> results;
  Rng rng(20240416);
  auto want = [&](const std::string& name) { return filter.empty() || filter == name; };

  if (want("matmul")) {
    std::vector<Matrix<double>> in{random_matrix(5, 7, rng), random_matrix(7, 4, rng)};
    WeightedLoss wl(5, 4, rng);
    results.push_back(detail::check_op("matmul", in, [&](Tape<double>& t, auto& v) {
      return wl(matmul(v[0], v[1]), t);
    }));
  }
  if (want("relu")) {
    // keep coordinates away from the kink
    Matrix<double> x = random_matrix(5, 7, rng);
    for (size_t i = 0; i < x.size(); ++i)
      x.data()[i] += x.data()[i] >= 0 ? 0.1 : -0.1;
    std::vector<Matrix<double>> in{x};
    WeightedLoss wl(5, 7, rng);
    results.push_back(detail::check_op("relu", in, [&](Tape<double>& t, auto& v) {
      return wl(relu(v[0]), t);
    }));
  }
  if (want("rowwise_softmax")) {
    std::vector<Matrix<double>> in{random_matrix(5, 7, rng)};
    WeightedLoss wl(5, 7, rng);
    results.push_back(detail::check_op("rowwise_softmax", in, [&](Tape<double>& t, auto& v) {
      return wl(rowwise_softmax(v[0]), t);
    }));
  }
  if (want("rowwise_cosine")) {
    std::vector<Matrix<double>> in{random_matrix(6, 4, rng)};
    WeightedLoss wl(6, 6, rng);
    results.push_back(detail::check_op("rowwise_cosine", in, [&](Tape<double>& t, auto& v) {
      return wl(rowwise_cosine(v[0]), t);
    }));
  }
  if (want("add")) {
    std::vector<Matrix<double>> in{random_matrix(4, 5, rng), random_matrix(4, 5, rng)};
    WeightedLoss wl(4, 5, rng);
    results.push_back(detail::check_op("add", in, [&](Tape<double>& t, auto& v) {
      return wl(add(v[0], v[1]), t);
    }));
  }
  if (want("add_rowvec")) {
    std::vector<Matrix<double>> in{random_matrix(4, 5, rng), random_matrix(1, 5, rng)};
    WeightedLoss wl(4, 5, rng);
    results.push_back(detail::check_op("add_rowvec", in, [&](Tape<double>& t, auto& v) {
      return wl(add_rowvec(v[0], v[1]), t);
    }));
  }
  if (want("scale")) {
    std::vector<Matrix<double>> in{random_matrix(4, 5, rng)};
    WeightedLoss wl(4, 5, rng);
    results.push_back(detail::check_op("scale", in, [&](Tape<double>& t, auto& v) {
      return wl(scale(v[0], 0.37), t);
    }));
  }
  if (want("transpose")) {
    std::vector<Matrix<double>> in{random_matrix(4, 5, rng)};
    WeightedLoss wl(5, 4, rng);
    results.push_back(detail::check_op("transpose", in, [&](Tape<double>& t, auto& v) {
      return wl(transpose(v[0]), t);
    }));
  }
  if (want("hadamard")) {
    std::vector<Matrix<double>> in{random_matrix(4, 5, rng), random_matrix(4, 5, rng)};
    WeightedLoss wl(4, 5, rng);
    results.push_back(detail::check_op("hadamard", in, [&](Tape<double>& t, auto& v) {
      return wl(hadamard(v[0], v[1]), t);
    }));
  }
  if (want("hadamard_rowvec")) {
    std::vector<Matrix<double>> in{random_matrix(4, 5, rng), random_matrix(1, 5, rng)};
    WeightedLoss wl(4, 5, rng);
    results.push_back(detail::check_op("hadamard_rowvec", in, [&](Tape<double>& t, auto& v) {
      return wl(hadamard(v[0], v[1]), t);
    }));
  }
  if (want("concat_cols")) {
    std::vector<Matrix<double>> in{random_matrix(4, 2, rng), random_matrix(4, 3, rng),
                                   random_matrix(4, 1, rng)};
    WeightedLoss wl(4, 6, rng);
    results.push_back(detail::check_op("concat_cols", in, [&](Tape<double>& t, auto& v) {
      return wl(concat_cols<double>({v[0], v[1], v[2]}), t);
    }));
  }
  if (want("mean_over")) {
    std::vector<Matrix<double>> in{random_matrix(4, 3, rng), random_matrix(4, 3, rng),
                                   random_matrix(4, 3, rng)};
    WeightedLoss wl(4, 3, rng);
    results.push_back(detail::check_op("mean_over", in, [&](Tape<double>& t, auto& v) {
      return wl(mean_over<double>({v[0], v[1], v[2]}), t);
    }));
  }
  if (want("layer_norm")) {
    std::vector<Matrix<double>> in{random_matrix(5, 6, rng), random_matrix(1, 6, rng, 0.5, 1.5),
                                   random_matrix(1, 6, rng)};
    WeightedLoss wl(5, 6, rng);
    results.push_back(detail::check_op("layer_norm", in, [&](Tape<double>& t, auto& v) {
      return wl(layer_norm(v[0], v[1], v[2]), t);
    }));
  }
  if (want("dropout")) {
    // fresh generator per eval -> identical mask across difference evals
    std::vector<Matrix<double>> in{random_matrix(5, 6, rng)};
    WeightedLoss wl(5, 6, rng);
    results.push_back(detail::check_op("dropout", in, [&](Tape<double>& t, auto& v) {
      Rng mask_rng(99);
      return wl(dropout(v[0], 0.4, mask_rng, true), t);
    }));
  }
  if (want("csr_matmul")) {
    Matrix<double> xd = random_matrix(6, 8, rng);
    for (size_t i = 0; i < xd.size(); ++i)
      if (std::fabs(xd.data()[i]) < 0.6) xd.data()[i] = 0.0;
    auto x = std::make_shared<const CsrMatrix<double>>(CsrMatrix<double>::from_dense(xd));
    std::vector<Matrix<double>> in{random_matrix(8, 3, rng)};
    WeightedLoss wl(6, 3, rng);
    results.push_back(detail::check_op("csr_matmul", in, [&, x](Tape<double>& t, auto& v) {
      return wl(csr_matmul(x, v[0]), t);
    }));
  }
  if (want("spmm")) {
    Graph g = make_synthetic_graph(FixtureKind::random_h, 8, 2, 4, 3);
    auto a = std::make_shared<const SparseAdjacency<double>>(
        normalize_with_self_loops(adjacency<double>(g)));
    std::vector<Matrix<double>> in{random_matrix(8, 3, rng)};
    WeightedLoss wl(8, 3, rng);
    results.push_back(detail::check_op("spmm", in, [&, a](Tape<double>& t, auto& v) {
      return wl(spmm(a, v[0]), t);
    }));
  }
  if (want("spmm_learned") || want("normalize_sym")) {
    Graph g = make_synthetic_graph(FixtureKind::random_h, 8, 2, 4, 4);
    auto pat = std::make_shared<const SparsePattern>(adjacency<double>(g).pattern());
    Matrix<double> vals(1, pat->nnz());
    fill_uniform(vals, rng, 0.2, 1.0);
    if (want("spmm_learned")) {
      std::vector<Matrix<double>> in{vals, random_matrix(8, 3, rng)};
      WeightedLoss wl(8, 3, rng);
      results.push_back(detail::check_op("spmm_learned", in, [&, pat](Tape<double>& t, auto& v) {
        return wl(spmm_learned(pat, v[0], v[1]), t);
      }));
    }
    if (want("normalize_sym")) {
      std::vector<Matrix<double>> in{vals};
      Matrix<double> w = random_matrix(1, pat->nnz(), rng);
      results.push_back(detail::check_op("normalize_sym", in, [&, pat, w](Tape<double>& t, auto& v) {
        return detail::weighted_sum(normalize_sym(pat, v[0]), w, t);
      }));
    }
  }
  if (want("sparse_cosine_mean") || want("build_reconnected")) {
    Graph g = make_synthetic_graph(FixtureKind::low_h, 9, 3, 5, 5);
    Matrix<double> x = convert<double>(g.x);
    std::vector<Matrix<double>> heads{random_matrix(5, 3, rng), random_matrix(5, 3, rng)};
    SparsifierConfig cfg{2, 0.5};
    SparsePattern frozen;
    {
      Tape<double> tape;
      Var<double> xv = tape.leaf(x, false);
      std::vector<Var<double>> wq{tape.leaf(heads[0], true), tape.leaf(heads[1], true)};
      frozen = *build_reconnected(xv, wq, cfg).pattern;
    }
    auto fpat = std::make_shared<const SparsePattern>(frozen);
    if (want("sparse_cosine_mean")) {
      Matrix<double> w = random_matrix(1, fpat->nnz(), rng);
      results.push_back(
          detail::check_op("sparse_cosine_mean", heads, [&, fpat, w](Tape<double>& t, auto& v) {
            Var<double> xv = t.leaf(x, false);
            std::vector<Var<double>> qs{matmul(xv, v[0]), matmul(xv, v[1])};
            std::vector<const Matrix<double>*> qvals{&qs[0].value(), &qs[1].value()};
            auto ctx = detail::make_score_context(qvals);
            return detail::weighted_sum(sparse_cosine_mean(qs, fpat, std::move(ctx)), w, t);
          }));
    }
    if (want("build_reconnected")) {
      Matrix<double> w = random_matrix(1, fpat->nnz(), rng);
      results.push_back(
          detail::check_op("build_reconnected", heads, [&, w](Tape<double>& t, auto& v) {
            Var<double> xv = t.leaf(x, false);
            std::vector<Var<double>> wq{v[0], v[1]};
            Reconnected<double> rec = build_reconnected(xv, wq, cfg, 0, &frozen);
            return detail::weighted_sum(rec.values_norm, w, t);
          }, 1e-4));
    }
  }
  if (want("mhsa")) {
    std::vector<Matrix<double>> in{random_matrix(5, 6, rng), random_matrix(6, 3, rng),
                                   random_matrix(6, 3, rng), random_matrix(6, 3, rng),
                                   random_matrix(6, 3, rng), random_matrix(6, 3, rng),
                                   random_matrix(6, 3, rng)};
    WeightedLoss wl(5, 6, rng);
    results.push_back(detail::check_op("mhsa", in, [&](Tape<double>& t, auto& v) {
      MhsaVars<double> p{{v[1], v[2]}, {v[3], v[4]}, {v[5], v[6]}};
      return wl(mhsa(v[0], p).out, t);
    }));
  }
  if (want("modified_block")) {
    std::vector<Matrix<double>> in{random_matrix(5, 6, rng), random_matrix(6, 6, rng),
                                   random_matrix(6, 6, rng), random_matrix(6, 6, rng)};
    WeightedLoss wl(5, 6, rng);
    results.push_back(detail::check_op("modified_block", in, [&](Tape<double>& t, auto& v) {
      MhsaVars<double> p{{v[1]}, {v[2]}, {v[3]}};
      Rng block_rng(3);
      return wl(modified_block(v[0], p, 0.3, block_rng, true), t);
    }));
  }
  if (want("original_block")) {
    std::vector<Matrix<double>> in{random_matrix(5, 4, rng),
                                   random_matrix(4, 4, rng),
                                   random_matrix(4, 4, rng),
                                   random_matrix(4, 4, rng),
                                   random_matrix(4, 4, rng),
                                   random_matrix(4, 4, rng),
                                   random_matrix(1, 4, rng, 0.5, 1.5),
                                   random_matrix(1, 4, rng),
                                   random_matrix(1, 4, rng, 0.5, 1.5),
                                   random_matrix(1, 4, rng)};
    WeightedLoss wl(5, 4, rng);
    results.push_back(detail::check_op("original_block", in, [&](Tape<double>& t, auto& v) {
      OriginalBlockVars<double> p;
      p.qkv = {{v[1]}, {v[2]}, {v[3]}};
      p.w_out = v[4];
      p.w_ff = v[5];
      p.ln1_gamma = v[6];
      p.ln1_beta = v[7];
      p.ln2_gamma = v[8];
      p.ln2_beta = v[9];
      return wl(original_block(v[0], p), t);
    }));
  }
  if (want("loss")) {
    std::vector<Matrix<double>> in{random_matrix(6, 4, rng)};
    std::vector<int> labels{0, 1, 2, 3, 1, 0};
    std::vector<int> mask{0, 2, 3, 5};
    results.push_back(detail::check_op("loss", in, [&](Tape<double>& t, auto& v) {
      return loss_nll(rowwise_softmax(v[0]), labels, mask);
    }));
  }
  if (want("gcnsa-forward")) results.push_back(gradcheck_model());

  if (inject_fault) {
    // Negative control: a deliberately wrong backward rule must be caught.
    std::vector<Matrix<double>> in{random_matrix(4, 4, rng)};
    WeightedLoss wl(4, 4, rng);
    GradCheckResult res;
    res.name = "fault-injection";
    std::vector<Matrix<double>> analytic;
    {
      Tape<double> tape;
      Var<double> v = tape.leaf(in[0], true);
      Var<double> loss = wl(relu(v), tape);
      tape.backward(loss);
      Matrix<double> g = tape.grad(v.id);
      for (size_t i = 0; i < g.size(); ++i) g.data()[i] *= 1.5;  // corrupt
      analytic.push_back(g);
    }
    auto eval = [&]() {
      Tape<double> tape;
      Var<double> v = tape.leaf(in[0], true);
      return wl(relu(v), tape).value()(0, 0);
    };
    res.max_rel_err = fd_max_rel_err(eval, {&in[0]}, analytic);
    res.pass = res.max_rel_err < res.tolerance;
    results.push_back(res);
  }
  return results;
}

}  // namespace gcnsa
