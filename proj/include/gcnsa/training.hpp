#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>

#include "gcnsa/model.hpp"

namespace gcnsa {

// ---------------------------------------------------------------------------
// Adam with coupled L2 (the gradient is augmented with 2*wd*theta before the
// moment updates). beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
// ---------------------------------------------------------------------------

template <typename T>
struct AdamState {
  std::vector<Matrix<T>> m, v;
  long t = 0;

  template <typename RefT>
  static AdamState init(const std::vector<RefT>& refs) {
    AdamState st;
    for (const auto& ref : refs) {
      st.m.push_back(Matrix<T>::zeros(ref.tensor->rows(), ref.tensor->cols()));
      st.v.push_back(Matrix<T>::zeros(ref.tensor->rows(), ref.tensor->cols()));
    }
    return st;
  }
};

template <typename T>
void adam_step(std::vector<ParamRef<T>>& refs, const std::vector<Matrix<T>>& grads,
               AdamState<T>& st, double lr, double wd) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  st.t += 1;
  const double bc1 = 1.0 - std::pow(beta1, double(st.t));
  const double bc2 = 1.0 - std::pow(beta2, double(st.t));
  for (size_t k = 0; k < refs.size(); ++k) {
    Matrix<T>& theta = *refs[k].tensor;
    const Matrix<T>& grad = grads[k];
    if (!theta.same_shape(grad))
      throw shape_error("adam_step: gradient shape mismatch for " + refs[k].name);
    Matrix<T>& m = st.m[k];
    Matrix<T>& v = st.v[k];
    for (size_t i = 0; i < theta.size(); ++i) {
      const double g = double(grad.data()[i]) + 2.0 * wd * double(theta.data()[i]);
      const double mi = beta1 * double(m.data()[i]) + (1.0 - beta1) * g;
      const double vi = beta2 * double(v.data()[i]) + (1.0 - beta2) * g * g;
      m.data()[i] = T(mi);
      v.data()[i] = T(vi);
      theta.data()[i] -= T(lr * (mi / bc1) / (std::sqrt(vi / bc2) + eps));
    }
  }
}

// Fraction of mask nodes whose argmax prediction matches the label; argmax
// ties resolve to the smallest class index.
template <typename T>
double evaluate(const Matrix<T>& z, const std::vector<int>& labels, const std::vector<int>& mask) {
  if (mask.empty()) throw config_error("evaluate: empty mask");
  long correct = 0;
  for (int i : mask) {
    int arg = 0;
    for (int j = 1; j < z.cols(); ++j)
      if (z(i, j) > z(i, arg)) arg = j;
    if (arg == labels[i]) ++correct;
  }
  return double(correct) / double(mask.size());
}

// ---------------------------------------------------------------------------
// Model dispatch
// ---------------------------------------------------------------------------

template <typename T>
struct AnyParams {
  ModelKind kind = ModelKind::gcn_sa;
  GcnSaParams<T> gcnsa;
  GcnBaselineParams<T> gcn;
  MlpParams<T> mlp;

  static AnyParams init(ModelKind kind, int d, int c, const TrainConfig& cfg,
                        const VariantConfig& variant, Rng& rng) {
    AnyParams ps;
    ps.kind = kind;
    switch (kind) {
      case ModelKind::gcn_sa: ps.gcnsa = GcnSaParams<T>::init(d, c, cfg, variant, rng); break;
      case ModelKind::gcn_baseline: ps.gcn = GcnBaselineParams<T>::init(d, c, cfg.q, rng); break;
      case ModelKind::mlp_baseline: ps.mlp = MlpParams<T>::init(d, c, cfg.q, rng); break;
    }
    return ps;
  }

  std::vector<ParamRef<T>> collect() {
    switch (kind) {
      case ModelKind::gcn_sa: return gcnsa.collect();
      case ModelKind::gcn_baseline: return gcn.collect();
      default: return mlp.collect();
    }
  }
};

template <typename T>
ForwardOutput<T> forward_any(Tape<T>& tape, Binder<T>& bind, const ModelInputs<T>& in,
                             AnyParams<T>& ps, const TrainConfig& cfg, Rng& rng,
                             const ForwardOptions<T>& opts) {
  switch (ps.kind) {
    case ModelKind::gcn_sa: return gcnsa_forward(tape, bind, in, ps.gcnsa, cfg, rng, opts);
    case ModelKind::gcn_baseline: {
      ForwardOutput<T> out;
      out.z = gcn_baseline_forward(tape, bind, in, ps.gcn);
      return out;
    }
    default: {
      ForwardOutput<T> out;
      out.z = mlp_baseline_forward(tape, bind, in, ps.mlp);
      return out;
    }
  }
}

// ---------------------------------------------------------------------------
// One run and the multi-run protocol
// ---------------------------------------------------------------------------

struct RunResult {
  int run = 0;
  uint64_t seed = 0;
  int best_epoch = -1;
  double test_acc = 0.0;
  double h_astar = 0.0;  // 0 when the variant has no A*
  double best_val_loss = std::numeric_limits<double>::infinity();
  double seconds = 0.0;
  int epochs_ran = 0;
  bool failed = false;
  std::string fail_reason;
};

template <typename T>
struct RunOutcome {
  RunResult result;
  AnyParams<T> best_params;            // snapshot from the best-validation epoch
  SparseAdjacency<T> best_astar_raw;   // learned A* of that snapshot (clamped values)
};

// Trains one seeded run with early stopping on validation loss and restores
// the best-validation snapshot. Per-epoch metrics are taken at the
// parameters the optimizer step consumed, so the A*-hat built by the
// training pass is reused verbatim by the evaluation pass.
template <typename T>
RunOutcome<T> train_one_run(const Graph& g, const ModelInputs<T>& in, const TrainConfig& cfg,
                            const VariantConfig& variant, ModelKind kind, int run_index) {
  const auto t0 = std::chrono::steady_clock::now();
  RunOutcome<T> out;
  RunResult& rr = out.result;
  rr.run = run_index;
  rr.seed = cfg.seed + uint64_t(run_index);

  Rng rng(rr.seed);
  SplitMasks masks = make_splits(g, cfg.ratios, rng);
  AnyParams<T> params = AnyParams<T>::init(kind, g.d(), g.c, cfg, variant, rng);
  auto refs = params.collect();
  AdamState<T> adam = AdamState<T>::init(refs);

  const bool check_finite = std::getenv("GCNSA_CHECK_FINITE") != nullptr;
  int bad_epochs = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Tape<T> tape;
    tape.check_finite = check_finite;
    Binder<T> bind(tape);
    ForwardOptions<T> train_opts;
    train_opts.training = true;
    ForwardOutput<T> fwd = forward_any(tape, bind, in, params, cfg, rng, train_opts);
    Var<T> loss = loss_nll(fwd.z, g.labels, masks.train);
    const double train_loss = double(loss.value()(0, 0));
    if (!std::isfinite(train_loss)) {
      rr.failed = true;
      rr.fail_reason = "non-finite training loss at epoch " + std::to_string(epoch);
      break;
    }

    // validation at the same parameters, reusing this pass's A*-hat
    {
      Tape<T> eval_tape;
      Binder<T> eval_bind(eval_tape);
      ForwardOptions<T> eval_opts;
      std::optional<SparseAdjacency<T>> astar_norm;
      if (fwd.has_astar) {
        astar_norm = fwd.astar.adjacency_norm();
        eval_opts.astar_override = &*astar_norm;
      }
      ForwardOutput<T> efwd = forward_any(eval_tape, eval_bind, in, params, cfg, rng, eval_opts);
      const double val_loss = nll_value(efwd.z.value(), g.labels, masks.val);
      if (!std::isfinite(val_loss)) {
        rr.failed = true;
        rr.fail_reason = "non-finite validation loss at epoch " + std::to_string(epoch);
        break;
      }
      if (val_loss < rr.best_val_loss) {
        rr.best_val_loss = val_loss;
        rr.best_epoch = epoch;
        out.best_params = params;
        bad_epochs = 0;
      } else {
        ++bad_epochs;
      }
    }
    rr.epochs_ran = epoch + 1;
    if (bad_epochs >= cfg.patience) break;

    tape.backward(loss);
    std::vector<Matrix<T>> grads;
    grads.reserve(refs.size());
    for (const auto& ref : refs) grads.push_back(bind.grad_of(ref.tensor));
    for (size_t k = 0; k < grads.size(); ++k) {
      if (!grads[k].all_finite()) {
        rr.failed = true;
        rr.fail_reason =
            "non-finite gradient for " + refs[k].name + " at epoch " + std::to_string(epoch);
        break;
      }
    }
    if (rr.failed) break;
    adam_step(refs, grads, adam, cfg.lr, cfg.wd);
  }

  if (!rr.failed && rr.best_epoch >= 0) {
    params = out.best_params;
    Tape<T> tape;
    Binder<T> bind(tape);
    ForwardOutput<T> fwd = forward_any(tape, bind, in, params, cfg, rng, {});
    rr.test_acc = evaluate(fwd.z.value(), g.labels, masks.test);
    if (fwd.has_astar) {
      out.best_astar_raw = fwd.astar.adjacency_raw();
      rr.h_astar = homophily_ratio(g.labels, out.best_astar_raw);
    }
  } else if (!rr.failed) {
    rr.failed = true;
    rr.fail_reason = "no epoch completed";
  }
  rr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

struct Aggregate {
  int runs_total = 0;
  int runs_failed = 0;
  double mean_acc = 0.0, std_acc = 0.0;
  double mean_h_astar = 0.0, std_h_astar = 0.0;
  int mean_best_epoch = 0;
};

inline Aggregate aggregate_runs(const std::vector<RunResult>& runs) {
  Aggregate agg;
  agg.runs_total = int(runs.size());
  std::vector<const RunResult*> ok;
  for (const auto& r : runs)
    if (!r.failed) ok.push_back(&r);
  agg.runs_failed = agg.runs_total - int(ok.size());
  if (ok.empty()) return agg;
  double sa = 0, sh = 0, se = 0;
  for (const auto* r : ok) {
    sa += r->test_acc;
    sh += r->h_astar;
    se += r->best_epoch;
  }
  const double n = double(ok.size());
  agg.mean_acc = sa / n;
  agg.mean_h_astar = sh / n;
  agg.mean_best_epoch = int(se / n);
  if (ok.size() > 1) {  // sample standard deviation
    double va = 0, vh = 0;
    for (const auto* r : ok) {
      va += (r->test_acc - agg.mean_acc) * (r->test_acc - agg.mean_acc);
      vh += (r->h_astar - agg.mean_h_astar) * (r->h_astar - agg.mean_h_astar);
    }
    agg.std_acc = std::sqrt(va / (n - 1));
    agg.std_h_astar = std::sqrt(vh / (n - 1));
  }
  return agg;
}

template <typename T>
struct Campaign {
  std::vector<RunResult> runs;
  Aggregate agg;
  int best_run = -1;  // lowest best-validation loss among successful runs
  AnyParams<T> best_params;
  SparseAdjacency<T> best_astar_raw;
  std::vector<std::string> warnings;
};

template <typename T>
Campaign<T> run_campaign(const Graph& g, const TrainConfig& cfg, const VariantConfig& variant,
                         ModelKind kind,
                         const std::function<void(const RunResult&)>& on_run = nullptr) {
  Campaign<T> camp;
  ModelInputs<T> in = ModelInputs<T>::from_graph(g, /*need_a=*/true);
  double best_val = std::numeric_limits<double>::infinity();
  for (int r = 0; r < cfg.runs; ++r) {
    RunOutcome<T> outcome = train_one_run(g, in, cfg, variant, kind, r);
    if (outcome.result.failed)
      camp.warnings.push_back("run " + std::to_string(r) + " failed (" +
                              outcome.result.fail_reason + "); excluded from aggregates");
    else if (outcome.result.best_val_loss < best_val) {
      best_val = outcome.result.best_val_loss;
      camp.best_run = r;
      camp.best_params = outcome.best_params;
      camp.best_astar_raw = outcome.best_astar_raw;
    }
    if (on_run) on_run(outcome.result);
    camp.runs.push_back(std::move(outcome.result));
  }
  camp.agg = aggregate_runs(camp.runs);
  return camp;
}

}  // namespace gcnsa
