#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gcnsa/fixtures.hpp"
#include "gcnsa/training.hpp"

namespace gcnsa {

// Central finite differences (64-bit) against the tape gradients.

inline double rel_err(double a, double b) {
  const double denom = std::max({std::fabs(a), std::fabs(b), 1e-4});
  return std::fabs(a - b) / denom;
}

// Max relative error between `analytic[k]` and central differences of
// `eval()` w.r.t. every coordinate of `inputs[k]`, step h.
inline double fd_max_rel_err(const std::function<double()>& eval,
                             const std::vector<Matrix<double>*>& inputs,
                             const std::vector<Matrix<double>>& analytic, double h = 1e-5) {
  double worst = 0.0;
  for (size_t k = 0; k < inputs.size(); ++k) {
    Matrix<double>& m = *inputs[k];
    for (size_t i = 0; i < m.size(); ++i) {
      const double saved = m.data()[i];
      m.data()[i] = saved + h;
      const double fp = eval();
      m.data()[i] = saved - h;
      const double fm = eval();
      m.data()[i] = saved;
      const double fd = (fp - fm) / (2.0 * h);
      worst = std::max(worst, rel_err(fd, analytic[k].data()[i]));
    }
  }
  return worst;
}

struct GradCheckResult {
  std::string name;
  double max_rel_err = 0.0;
  double tolerance = 1e-5;
  bool pass = false;
};

namespace detail {

// Scalarize an op output as sum(W (.) y) with a fixed random weighting so
// every output coordinate contributes a generic gradient.
inline Var<double> weighted_sum(Var<double> y, const Matrix<double>& w, Tape<double>& tape) {
  return sum_all(hadamard(y, tape.leaf(w, false)));
}

using BuildFn = std::function<Var<double>(Tape<double>&, std::vector<Var<double>>&)>;

// One named check: leaves are bound from `inputs`, `build` produces the
// scalar, analytic gradients come from a single backward pass.
inline GradCheckResult check_op(const std::string& name, std::vector<Matrix<double>>& inputs,
                                const BuildFn& build, double tolerance = 1e-5) {
  GradCheckResult res;
  res.name = name;
  res.tolerance = tolerance;
  std::vector<Matrix<double>> analytic;
  {
    Tape<double> tape;
    tape.check_finite = true;
    std::vector<Var<double>> vars;
    for (auto& m : inputs) vars.push_back(tape.leaf(m, true));
    Var<double> loss = build(tape, vars);
    tape.backward(loss);
    for (auto& v : vars) analytic.push_back(tape.grad(v.id));
  }
  auto eval = [&]() {
    Tape<double> tape;
    std::vector<Var<double>> vars;
    for (auto& m : inputs) vars.push_back(tape.leaf(m, true));
    return build(tape, vars).value()(0, 0);
  };
  std::vector<Matrix<double>*> ptrs;
  for (auto& m : inputs) ptrs.push_back(&m);
  res.max_rel_err = fd_max_rel_err(eval, ptrs, analytic);
  res.pass = res.max_rel_err < res.tolerance;
  return res;
}

}  // namespace detail

// End-to-end check: gradient of the GCN-SA training loss w.r.t. every
// parameter tensor on a small synthetic graph, with the screening mask
// frozen to keep the objective differentiable.
inline GradCheckResult gradcheck_model(uint64_t seed = 7, double tolerance = 1e-4) {
  GradCheckResult res;
  res.name = "gcnsa-forward";
  res.tolerance = tolerance;

  Graph g = make_synthetic_graph(FixtureKind::low_h, 10, 3, 6, seed);
  TrainConfig cfg;
  cfg.q = 8;
  cfg.p = 4;
  cfg.m_structure = 2;
  cfg.m_fusion = 1;
  cfg.r = 2;
  cfg.epsilon = 0.5;
  cfg.K = 2;
  cfg.dropout = 0.0;
  VariantConfig variant;
  ModelInputs<double> in = ModelInputs<double>::from_graph(g);
  Rng init_rng(seed);
  GcnSaParams<double> params = GcnSaParams<double>::init(g.d(), g.c, cfg, variant, init_rng);
  std::vector<int> mask;
  for (int i = 0; i < g.n; i += 2) mask.push_back(i);

  // reference pass fixes the screened pattern
  SparsePattern frozen;
  {
    Tape<double> tape;
    Binder<double> bind(tape);
    Rng rng(1);
    ForwardOutput<double> fwd = gcnsa_forward(tape, bind, in, params, cfg, rng, {});
    frozen = *fwd.astar.pattern;
  }
  auto run = [&](bool want_grads, std::vector<Matrix<double>>* grads) {
    Tape<double> tape;
    Binder<double> bind(tape);
    Rng rng(1);
    ForwardOptions<double> opts;
    opts.frozen_pattern = &frozen;
    ForwardOutput<double> fwd = gcnsa_forward(tape, bind, in, params, cfg, rng, opts);
    Var<double> loss = loss_nll(fwd.z, g.labels, mask);
    if (want_grads) {
      tape.backward(loss);
      for (auto ref : params.collect()) grads->push_back(bind.grad_of(ref.tensor));
    }
    return loss.value()(0, 0);
  };

  std::vector<Matrix<double>> analytic;
  run(true, &analytic);
  std::vector<Matrix<double>*> ptrs;
  for (auto ref : params.collect()) ptrs.push_back(ref.tensor);
  auto eval = [&]() { return run(false, nullptr); };
  res.max_rel_err = fd_max_rel_err(eval, ptrs, analytic);
  res.pass = res.max_rel_err < tolerance;
  return res;
}

// The per-operation finite-difference suite. `filter` selects a single op;
// `inject_fault` adds a deliberately broken backward rule as a negative
// control.
std::vector<GradCheckResult> run_gradcheck_suite(const std::string& filter = "",
                                                 bool inject_fault = false);

}  // namespace gcnsa
