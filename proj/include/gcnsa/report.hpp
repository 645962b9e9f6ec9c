#pragma once

#include <string>
#include <vector>

#include "nlohmann/json.hpp"

#include "gcnsa/training.hpp"

namespace gcnsa {

using ordered_json = nlohmann::ordered_json;

// TrainConfig <-> JSON with strict (unknown keys rejected) parsing; also the
// schema of key=value config files.
ordered_json config_to_json(const TrainConfig& cfg);
void config_apply_json(TrainConfig& cfg, const nlohmann::json& j);
// key=value lines or a JSON object, by sniffing.
void config_apply_file(TrainConfig& cfg, const std::string& path);

const char* variant_name(const VariantConfig& v);
const char* model_name(ModelKind kind);
ModelKind model_by_name(const std::string& name);

struct ReportMeta {
  std::string dataset;
  std::string variant = "full";
  std::string model = "gcn-sa";
  std::string scalar = "float32";
};

ordered_json report_json(const ReportMeta& meta, const TrainConfig& cfg,
                         const std::vector<RunResult>& runs, const Aggregate& agg,
                         const std::vector<std::string>& warnings);

// Deterministic outputs (report.json, runs.csv) plus the wall-clock metadata
// in a separate timing.json so reruns stay byte-identical.
void write_report_files(const std::string& out_dir, const ordered_json& report,
                        const std::vector<RunResult>& runs);
void write_timing_json(const std::string& out_dir, const std::vector<RunResult>& runs);

// ---------------------------------------------------------------------------
// Checkpoints: the best run's parameter tensors with enough context to
// rebuild the model.
// ---------------------------------------------------------------------------

template <typename T>
ordered_json checkpoint_json(const ReportMeta& meta, const TrainConfig& cfg, int d, int c,
                             AnyParams<T>& params) {
  ordered_json j;
  j["format"] = "gcnsa-checkpoint-v1";
  j["model"] = meta.model;
  j["variant"] = meta.variant;
  j["dataset"] = meta.dataset;
  j["d"] = d;
  j["c"] = c;
  j["config"] = config_to_json(cfg);
  ordered_json tensors;
  for (const auto& ref : params.collect()) {
    ordered_json t;
    t["rows"] = ref.tensor->rows();
    t["cols"] = ref.tensor->cols();
    std::vector<double> data(ref.tensor->size());
    for (size_t i = 0; i < data.size(); ++i) data[i] = double(ref.tensor->data()[i]);
    t["data"] = data;
    tensors[ref.name] = std::move(t);
  }
  j["tensors"] = std::move(tensors);
  return j;
}

template <typename T>
AnyParams<T> checkpoint_load(const nlohmann::json& j, TrainConfig& cfg_out,
                             VariantConfig& variant_out, int& d_out, int& c_out) {
  if (!j.contains("format") || j["format"] != "gcnsa-checkpoint-v1")
    throw data_error("checkpoint: unrecognized format");
  cfg_out = TrainConfig{};
  config_apply_json(cfg_out, j.at("config"));
  variant_out = variant_by_name(j.at("variant").get<std::string>());
  d_out = j.at("d").get<int>();
  c_out = j.at("c").get<int>();
  ModelKind kind = model_by_name(j.at("model").get<std::string>());
  Rng rng(cfg_out.seed);
  AnyParams<T> params = AnyParams<T>::init(kind, d_out, c_out, cfg_out, variant_out, rng);
  const auto& tensors = j.at("tensors");
  for (auto ref : params.collect()) {
    if (!tensors.contains(ref.name)) throw data_error("checkpoint: missing tensor " + ref.name);
    const auto& t = tensors.at(ref.name);
    if (t.at("rows").template get<int>() != ref.tensor->rows() ||
        t.at("cols").template get<int>() != ref.tensor->cols())
      throw data_error("checkpoint: shape mismatch for " + ref.name);
    const auto& data = t.at("data");
    if (data.size() != ref.tensor->size())
      throw data_error("checkpoint: data length mismatch for " + ref.name);
    for (size_t i = 0; i < ref.tensor->size(); ++i)
      ref.tensor->data()[i] = T(data[i].template get<double>());
  }
  return params;
}

void write_text_file(const std::string& path, const std::string& content);

}  // namespace gcnsa
