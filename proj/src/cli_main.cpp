#include "gcnsa/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "gcnsa/gradcheck.hpp"
#include "gcnsa/report.hpp"

namespace gcnsa {

namespace {

namespace fs = std::filesystem;

std::string data_dir_default() {
  if (const char* env = std::getenv("GCNSA_DATA_DIR")) return env;
  return "data";
}

std::string resolve_dataset(const std::string& name, const std::string& data_dir) {
  if (fs::exists(name)) return name;
  for (const char* suffix : {".json", ".json.gz", ".content", ".content.gz"}) {
    const std::string cand = data_dir + "/" + name + suffix;
    if (fs::exists(cand)) return cand;
  }
  throw data_error("dataset '" + name + "' not found (looked in " + data_dir +
                   " for .json/.json.gz/.content/.content.gz; set GCNSA_DATA_DIR or pass a path)");
}

GraphFormat parse_format(const std::string& fmt) {
  if (fmt.empty() || fmt == "auto") return GraphFormat::autodetect;
  if (fmt == "json") return GraphFormat::json;
  if (fmt == "content-cites") return GraphFormat::content_cites;
  throw config_error("unknown --format '" + fmt + "' (json or content-cites)");
}

struct CommonArgs {
  std::string dataset;
  std::string format = "auto";
  std::string data_dir = data_dir_default();
  std::string config_path;
  std::string out_dir = "out";
  std::string variant = "full";
  std::string model = "gcn-sa";
  bool float64 = false;
  bool paper_grid = false;
  bool quiet = false;
  int runs = -1;
  int epochs = -1;
  int patience = -1;
  long long seed = -1;
  int block_rows = -1;
  std::string residual;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool needs_dataset = true) {
  auto* opt = cmd->add_option("--dataset", a.dataset, "dataset name or file path");
  if (needs_dataset) opt->required();
  cmd->add_option("--format", a.format, "json | content-cites (default: by extension)");
  cmd->add_option("--data-dir", a.data_dir, "dataset root (default $GCNSA_DATA_DIR or ./data)");
  cmd->add_option("--config", a.config_path, "config file (key=value lines or JSON)");
  cmd->add_option("--out", a.out_dir, "output directory");
  cmd->add_option("--runs", a.runs, "number of runs");
  cmd->add_option("--epochs", a.epochs, "epoch budget per run");
  cmd->add_option("--patience", a.patience, "early-stopping patience (epochs)");
  cmd->add_option("--seed", a.seed, "base RNG seed");
  cmd->add_option("--block-rows", a.block_rows,
                  "score the re-connected graph in row blocks of this size (0 = all at once)");
  cmd->add_option("--variant", a.variant, "model variant (full, no-a, no-astar, ...)");
  cmd->add_option("--model", a.model, "gcn-sa | gcn | mlp");
  cmd->add_option("--residual-dropout-variant", a.residual,
                  "raw | dropped residual inside the modified block");
  cmd->add_flag("--float64", a.float64, "train in 64-bit instead of 32-bit");
  cmd->add_flag("--paper-grid", a.paper_grid, "reject hyper-parameters outside the search grid");
  cmd->add_flag("--quiet", a.quiet, "suppress per-run progress on stderr");
}

TrainConfig build_config(const CommonArgs& a) {
  TrainConfig cfg;
  if (!a.config_path.empty()) config_apply_file(cfg, a.config_path);
  if (a.runs > 0) cfg.runs = a.runs;
  if (a.epochs > 0) cfg.epochs = a.epochs;
  if (a.patience > 0) cfg.patience = a.patience;
  if (a.seed >= 0) cfg.seed = uint64_t(a.seed);
  if (a.block_rows >= 0) cfg.block_rows = a.block_rows;
  if (!a.residual.empty()) {
    if (a.residual == "raw")
      cfg.residual = ResidualVariant::raw;
    else if (a.residual == "dropped")
      cfg.residual = ResidualVariant::dropped;
    else
      throw config_error("--residual-dropout-variant must be raw or dropped");
  }
  cfg.validate();
  if (a.paper_grid) cfg.validate_paper_grid();
  return cfg;
}

Graph load_for(const CommonArgs& a) {
  Graph g = load_graph(resolve_dataset(a.dataset, a.data_dir), parse_format(a.format));
  if (!a.quiet)
    for (const auto& w : g.warnings) std::cerr << "[load] " << a.dataset << ": " << w << "\n";
  return g;
}

template <typename T>
int run_train_typed(const CommonArgs& a, const Graph& g, const TrainConfig& cfg,
                    const VariantConfig& variant, ModelKind kind) {
  ReportMeta meta;
  meta.dataset = a.dataset;
  meta.variant = variant_name(variant);
  meta.model = model_name(kind);
  meta.scalar = a.float64 ? "float64" : "float32";

  auto progress = [&](const RunResult& r) {
    if (a.quiet) return;
    std::fprintf(stderr, "[run %d] best_epoch=%d test_acc=%.4f h_astar=%.4f (%.1fs%s)\n", r.run,
                 r.best_epoch, r.test_acc, r.h_astar, r.seconds,
                 r.failed ? (", FAILED: " + r.fail_reason).c_str() : "");
  };
  Campaign<T> camp = run_campaign<T>(g, cfg, variant, kind, progress);

  ordered_json report = report_json(meta, cfg, camp.runs, camp.agg, camp.warnings);
  write_report_files(a.out_dir, report, camp.runs);
  write_timing_json(a.out_dir, camp.runs);
  if (kind == ModelKind::gcn_sa && camp.best_run >= 0 && variant.use_a_star) {
    write_adjacency_csv(a.out_dir + "/astar_edges.csv", [&] {
      SparseAdjacency<double> a64;
      a64.n = camp.best_astar_raw.n;
      a64.row_offsets = camp.best_astar_raw.row_offsets;
      a64.col_indices = camp.best_astar_raw.col_indices;
      a64.values.assign(camp.best_astar_raw.values.begin(), camp.best_astar_raw.values.end());
      return a64;
    }());
  }
  if (kind == ModelKind::gcn_sa && camp.best_run >= 0)
    write_text_file(a.out_dir + "/checkpoint.json",
                    checkpoint_json(meta, cfg, g.d(), g.c, camp.best_params).dump() + "\n");

  std::printf("dataset=%s model=%s variant=%s runs=%d failed=%d\n", meta.dataset.c_str(),
              meta.model.c_str(), meta.variant.c_str(), camp.agg.runs_total,
              camp.agg.runs_failed);
  std::printf("mean_test_acc=%.4f std=%.4f mean_h_astar=%.4f\n", camp.agg.mean_acc,
              camp.agg.std_acc, camp.agg.mean_h_astar);
  for (const auto& w : camp.warnings) std::fprintf(stderr, "[warn] %s\n", w.c_str());
  if (camp.agg.runs_failed == camp.agg.runs_total)
    throw numeric_error("all runs failed; see report warnings");
  return 0;
}

int cmd_train(const CommonArgs& a) {
  Graph g = load_for(a);
  TrainConfig cfg = build_config(a);
  VariantConfig variant = variant_by_name(a.variant);
  ModelKind kind = model_by_name(a.model);
  return a.float64 ? run_train_typed<double>(a, g, cfg, variant, kind)
                   : run_train_typed<float>(a, g, cfg, variant, kind);
}

int cmd_ablate(const CommonArgs& a, const std::string& variants_csv) {
  Graph g = load_for(a);
  TrainConfig cfg = build_config(a);
  std::vector<std::string> names;
  {
    std::istringstream in(variants_csv.empty()
                              ? "full,no-a,no-astar,features-only,no-fusion1,no-fusion2,no-"
                                "fusion,tf-original"
                              : variants_csv);
    std::string tok;
    while (std::getline(in, tok, ',')) names.push_back(tok);
  }
  std::string table = "variant,mean_acc,std_acc,mean_h_astar,runs_failed\n";
  for (const auto& name : names) {
    VariantConfig variant = variant_by_name(name);  // rejects unknown names
    CommonArgs sub = a;
    sub.out_dir = a.out_dir + "/" + name;
    sub.variant = name;
    if (sub.float64)
      run_train_typed<double>(sub, g, cfg, variant, ModelKind::gcn_sa);
    else
      run_train_typed<float>(sub, g, cfg, variant, ModelKind::gcn_sa);
    std::ifstream rf(sub.out_dir + "/report.json");
    nlohmann::json rep = nlohmann::json::parse(rf);
    char buf[200];
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%d\n", name.c_str(),
                  rep["aggregate"]["mean_acc"].get<double>(),
                  rep["aggregate"]["std_acc"].get<double>(),
                  rep["aggregate"]["mean_h_astar"].get<double>(),
                  rep["aggregate"]["runs_failed"].get<int>());
    table += buf;
  }
  std::filesystem::create_directories(a.out_dir);
  write_text_file(a.out_dir + "/ablation.csv", table);
  std::fputs(table.c_str(), stdout);
  return 0;
}

template <typename T>
int run_structure_typed(const CommonArgs& a, const Graph& g, const std::string& checkpoint,
                        bool untrained) {
  TrainConfig cfg = build_config(a);
  std::printf("h_original=%.3f\n", dataset_homophily(g));

  Matrix<T> x = convert<T>(g.x);
  {
    Rng rng(cfg.seed);
    VariantConfig variant = variant_by_name(a.variant);
    GcnSaParams<T> init = GcnSaParams<T>::init(g.d(), g.c, cfg, variant, rng);
    StructureHeads<T> heads;
    heads.w_q = init.structure.w_q;
    SparseAdjacency<T> astar0 = reconnect(x, heads, cfg.sparsifier(), cfg.block_rows);
    std::printf("h_initialized=%.3f\n", homophily_ratio(g.labels, astar0));
  }
  if (untrained) {
    std::printf("h_learned=omitted (untrained)\n");
    return 0;
  }
  std::ifstream cf(checkpoint);
  if (!cf) throw data_error("cannot open checkpoint " + checkpoint);
  nlohmann::json cj = nlohmann::json::parse(cf);
  TrainConfig ck_cfg;
  VariantConfig ck_variant;
  int d = 0, c = 0;
  AnyParams<T> params = checkpoint_load<T>(cj, ck_cfg, ck_variant, d, c);
  if (d != g.d() || c != g.c) throw data_error("checkpoint dims do not match the dataset");
  if (params.kind != ModelKind::gcn_sa || params.gcnsa.structure.w_q.empty())
    throw data_error("checkpoint has no structure-learning heads");
  StructureHeads<T> heads;
  heads.w_q = params.gcnsa.structure.w_q;
  Tape<T> tape;
  Var<T> xv = tape.leaf(x, false);
  std::vector<Var<T>> wq;
  for (auto& w : heads.w_q) wq.push_back(tape.leaf(w, false));
  Reconnected<T> rec = build_reconnected(xv, wq, ck_cfg.sparsifier(), cfg.block_rows);
  SparseAdjacency<T> raw = rec.adjacency_raw();
  std::printf("h_learned=%.3f\n", homophily_ratio(g.labels, raw));
  std::filesystem::create_directories(a.out_dir);
  SparseAdjacency<double> a64;
  a64.n = raw.n;
  a64.row_offsets = raw.row_offsets;
  a64.col_indices = raw.col_indices;
  a64.values.assign(raw.values.begin(), raw.values.end());
  write_adjacency_csv(a.out_dir + "/astar_edges.csv", a64);
  return 0;
}

int cmd_structure(const CommonArgs& a, const std::string& checkpoint, bool untrained) {
  if (!untrained && checkpoint.empty())
    throw config_error("structure: pass --checkpoint <file> or --untrained");
  Graph g = load_for(a);
  return a.float64 ? run_structure_typed<double>(a, g, checkpoint, untrained)
                   : run_structure_typed<float>(a, g, checkpoint, untrained);
}

int cmd_gradcheck(const std::string& op, bool inject_fault) {
  std::vector<GradCheckResult> results = run_gradcheck_suite(op, inject_fault);
  if (results.empty()) throw config_error("gradcheck: no operation named '" + op + "'");
  bool all_pass = true;
  for (const auto& r : results) {
    std::printf("%-20s %s  max_rel_err=%.3g (tol %.0e)\n", r.name.c_str(),
                r.pass ? "PASS" : "FAIL", r.max_rel_err, r.tolerance);
    all_pass = all_pass && r.pass;
  }
  if (!all_pass) throw numeric_error("gradcheck: at least one operation exceeded tolerance");
  return 0;
}

int cmd_homophily(const CommonArgs& a) {
  Graph g = load_for(a);
  std::printf("%.3f\n", dataset_homophily(g));
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"GCN-SA: graph convolutional network with self-attention structure learning"};
  app.require_subcommand(1);

  CommonArgs train_args, ablate_args, structure_args, homophily_args;
  std::string ablate_variants;
  std::string checkpoint;
  bool untrained = false;
  std::string gradcheck_op;
  bool inject_fault = false;

  auto* train = app.add_subcommand("train", "train a model and write report files");
  add_common(train, train_args);
  auto* ablate = app.add_subcommand("ablate", "train a set of variants and tabulate them");
  add_common(ablate, ablate_args);
  ablate->add_option("--variants", ablate_variants, "comma-separated variant names");
  auto* structure = app.add_subcommand("structure", "export the learned re-connected graph");
  add_common(structure, structure_args);
  structure->add_option("--checkpoint", checkpoint, "checkpoint.json from train");
  structure->add_flag("--untrained", untrained, "report the freshly initialized graph only");
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference checks (64-bit)");
  gradcheck->add_option("--op", gradcheck_op, "check a single operation");
  gradcheck->add_flag("--inject-fault", inject_fault, "add a deliberately broken rule");
  auto* homophily = app.add_subcommand("homophily", "print the dataset homophily ratio");
  add_common(homophily, homophily_args);

  try {
    app.parse(argc, argv);
    if (train->parsed()) return cmd_train(train_args);
    if (ablate->parsed()) return cmd_ablate(ablate_args, ablate_variants);
    if (structure->parsed()) return cmd_structure(structure_args, checkpoint, untrained);
    if (gradcheck->parsed()) return cmd_gradcheck(gradcheck_op, inject_fault);
    if (homophily->parsed()) return cmd_homophily(homophily_args);
    return 1;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const config_error& e) {
    std::fprintf(stderr, "error (usage): %s\n", e.what());
    return 1;
  } catch (const data_error& e) {
    std::fprintf(stderr, "error (data): %s\n", e.what());
    return 2;
  } catch (const numeric_error& e) {
    std::fprintf(stderr, "error (numeric): %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}

}  // namespace gcnsa
