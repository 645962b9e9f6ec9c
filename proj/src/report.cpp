#include "gcnsa/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace gcnsa {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

ordered_json config_to_json(const TrainConfig& cfg) {
  ordered_json j;
  j["lr"] = cfg.lr;
  j["wd"] = cfg.wd;
  j["dropout"] = cfg.dropout;
  j["r"] = cfg.r;
  j["epsilon"] = cfg.epsilon;
  j["K"] = cfg.K;
  j["p"] = cfg.p;
  j["q"] = cfg.q;
  j["m_structure"] = cfg.m_structure;
  j["m_fusion"] = cfg.m_fusion;
  j["seed"] = cfg.seed;
  j["epochs"] = cfg.epochs;
  j["patience"] = cfg.patience;
  j["runs"] = cfg.runs;
  j["ratios"] = cfg.ratios;
  j["block_rows"] = cfg.block_rows;
  j["residual"] = cfg.residual == ResidualVariant::raw ? "raw" : "dropped";
  return j;
}

void config_apply_json(TrainConfig& cfg, const nlohmann::json& j) {
  for (const auto& [key, value] : j.items()) {
    if (key == "lr")
      cfg.lr = value.get<double>();
    else if (key == "wd")
      cfg.wd = value.get<double>();
    else if (key == "dropout")
      cfg.dropout = value.get<double>();
    else if (key == "r")
      cfg.r = value.get<int>();
    else if (key == "epsilon")
      cfg.epsilon = value.get<double>();
    else if (key == "K")
      cfg.K = value.get<int>();
    else if (key == "p")
      cfg.p = value.get<int>();
    else if (key == "q")
      cfg.q = value.get<int>();
    else if (key == "m_structure")
      cfg.m_structure = value.get<int>();
    else if (key == "m_fusion")
      cfg.m_fusion = value.get<int>();
    else if (key == "seed")
      cfg.seed = value.get<uint64_t>();
    else if (key == "epochs")
      cfg.epochs = value.get<int>();
    else if (key == "patience")
      cfg.patience = value.get<int>();
    else if (key == "runs")
      cfg.runs = value.get<int>();
    else if (key == "ratios") {
      auto v = value.get<std::vector<double>>();
      if (v.size() != 3) throw config_error("config: ratios needs 3 entries");
      cfg.ratios = {v[0], v[1], v[2]};
    } else if (key == "block_rows")
      cfg.block_rows = value.get<int>();
    else if (key == "residual") {
      const std::string s = value.get<std::string>();
      if (s == "raw")
        cfg.residual = ResidualVariant::raw;
      else if (s == "dropped")
        cfg.residual = ResidualVariant::dropped;
      else
        throw config_error("config: residual must be raw or dropped");
    } else {
      throw config_error("config: unknown key '" + key + "'");
    }
  }
}

void config_apply_file(TrainConfig& cfg, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw data_error("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string text = ss.str();
  const size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw config_error(path + ": " + e.what());
    }
    config_apply_json(cfg, j);
    return;
  }
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  nlohmann::json kv = nlohmann::json::object();
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw config_error(path + ":" + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    if (key == "residual") {
      kv[key] = val;
    } else if (key == "ratios") {
      std::vector<double> v;
      std::istringstream vs(val);
      std::string tok;
      while (std::getline(vs, tok, ',')) v.push_back(std::stod(tok));
      kv[key] = v;
    } else if (key == "r" || key == "K" || key == "p" || key == "q" || key == "m_structure" ||
               key == "m_fusion" || key == "epochs" || key == "patience" || key == "runs" ||
               key == "block_rows") {
      try {
        kv[key] = std::stol(val);
      } catch (...) {
        throw config_error(path + ":" + std::to_string(line_no) + ": bad integer '" + val + "'");
      }
    } else if (key == "seed") {
      kv[key] = std::stoull(val);
    } else {
      try {
        kv[key] = std::stod(val);
      } catch (...) {
        throw config_error(path + ":" + std::to_string(line_no) + ": bad value '" + val + "'");
      }
    }
  }
  config_apply_json(cfg, kv);
}

const char* variant_name(const VariantConfig& vc) {
  const VariantConfig v = vc.normalized();
  if (v.block_kind == BlockKind::original) return "tf-original";
  if (!v.use_fusion1 && !v.use_fusion2) return "no-fusion";
  if (!v.use_fusion1) return "no-fusion1";
  if (!v.use_fusion2) return "no-fusion2";
  if (!v.use_a && !v.use_a_star) return "features-only";
  if (!v.use_a) return "no-a";
  if (!v.use_a_star) return "no-astar";
  return "full";
}

const char* model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::gcn_sa: return "gcn-sa";
    case ModelKind::gcn_baseline: return "gcn";
    default: return "mlp";
  }
}

ModelKind model_by_name(const std::string& name) {
  if (name == "gcn-sa" || name.empty()) return ModelKind::gcn_sa;
  if (name == "gcn") return ModelKind::gcn_baseline;
  if (name == "mlp") return ModelKind::mlp_baseline;
  throw config_error("unknown model '" + name + "' (expected gcn-sa, gcn, mlp)");
}

ordered_json report_json(const ReportMeta& meta, const TrainConfig& cfg,
                         const std::vector<RunResult>& runs, const Aggregate& agg,
                         const std::vector<std::string>& warnings) {
  ordered_json j;
  j["dataset"] = meta.dataset;
  j["model"] = meta.model;
  j["variant"] = meta.variant;
  j["config"] = config_to_json(cfg);
  ordered_json per_run = ordered_json::array();
  for (const auto& r : runs) {
    ordered_json rr;
    rr["run"] = r.run;
    rr["seed"] = r.seed;
    rr["best_epoch"] = r.best_epoch;
    rr["test_acc"] = r.test_acc;
    rr["h_astar"] = r.h_astar;
    rr["best_val_loss"] = r.best_val_loss;
    rr["epochs_ran"] = r.epochs_ran;
    rr["failed"] = r.failed;
    if (r.failed) rr["fail_reason"] = r.fail_reason;
    per_run.push_back(std::move(rr));
  }
  j["per_run"] = std::move(per_run);
  ordered_json a;
  a["runs_total"] = agg.runs_total;
  a["runs_failed"] = agg.runs_failed;
  a["mean_acc"] = agg.mean_acc;
  a["std_acc"] = agg.std_acc;
  a["mean_h_astar"] = agg.mean_h_astar;
  a["std_h_astar"] = agg.std_h_astar;
  a["mean_best_epoch"] = agg.mean_best_epoch;
  j["aggregate"] = std::move(a);
  j["warnings"] = warnings;
  ordered_json env;
  env["scalar"] = meta.scalar;
  env["threads"] = 1;
  j["environment"] = std::move(env);
  return j;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path);
  out << content;
}

void write_report_files(const std::string& out_dir, const ordered_json& report,
                        const std::vector<RunResult>& runs) {
  std::filesystem::create_directories(out_dir);
  write_text_file(out_dir + "/report.json", report.dump(2) + "\n");
  std::string csv = "run,seed,best_epoch,test_acc,h_astar\n";
  char buf[160];
  for (const auto& r : runs) {
    std::snprintf(buf, sizeof(buf), "%d,%llu,%d,%.6f,%.6f\n", r.run,
                  static_cast<unsigned long long>(r.seed), r.best_epoch, r.test_acc, r.h_astar);
    csv += buf;
  }
  write_text_file(out_dir + "/runs.csv", csv);
}

void write_timing_json(const std::string& out_dir, const std::vector<RunResult>& runs) {
  std::filesystem::create_directories(out_dir);
  ordered_json j;
  double total = 0;
  ordered_json per = ordered_json::array();
  for (const auto& r : runs) {
    per.push_back(r.seconds);
    total += r.seconds;
  }
  j["total_seconds"] = total;
  j["per_run_seconds"] = std::move(per);
  write_text_file(out_dir + "/timing.json", j.dump(2) + "\n");
}

}  // namespace gcnsa
