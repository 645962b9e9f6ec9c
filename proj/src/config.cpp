#include "gcnsa/config.hpp"

#include <cmath>

#include "gcnsa/errors.hpp"

namespace gcnsa {

VariantConfig variant_by_name(const std::string& name) {
  VariantConfig v;
  if (name == "full" || name.empty()) return v;
  if (name == "no-a") {
    v.use_a = false;
  } else if (name == "no-astar") {
    v.use_a_star = false;
  } else if (name == "features-only") {
    v.use_a = false;
    v.use_a_star = false;
  } else if (name == "no-fusion1") {
    v.use_fusion1 = false;
  } else if (name == "no-fusion2") {
    v.use_fusion2 = false;
  } else if (name == "no-fusion") {
    v.use_fusion1 = false;
    v.use_fusion2 = false;
    v.block_kind = BlockKind::none;
  } else if (name == "tf-original") {
    v.block_kind = BlockKind::original;
  } else {
    throw config_error("unknown variant '" + name +
                       "' (expected full, no-a, no-astar, features-only, no-fusion1, "
                       "no-fusion2, no-fusion, tf-original)");
  }
  return v.normalized();
}

void TrainConfig::validate() const {
  if (lr <= 0) throw config_error("lr must be positive");
  if (wd < 0) throw config_error("wd must be non-negative");
  if (dropout < 0 || dropout >= 1) throw config_error("dropout must be in [0, 1)");
  if (r < 1) throw config_error("r must be >= 1");
  if (epsilon < 0 || epsilon >= 1) throw config_error("epsilon must be in [0, 1)");
  if (K < 1) throw config_error("K must be >= 1");
  if (p < 1 || q < 1) throw config_error("p and q must be positive");
  if (m_structure < 1 || m_fusion < 1) throw config_error("head counts must be >= 1");
  if (q % m_fusion != 0) throw config_error("q must be divisible by m_fusion");
  if (epochs < 1 || patience < 1 || runs < 1)
    throw config_error("epochs, patience and runs must be >= 1");
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::fabs(sum - 1.0) > 1e-9) throw config_error("split ratios must sum to 1");
  for (double x : ratios)
    if (x <= 0) throw config_error("split ratios must be positive");
  if (block_rows < 0) throw config_error("block_rows must be >= 0");
}

namespace {

bool in_grid(double v, double lo, double hi, double step) {
  if (v < lo - 1e-9 || v > hi + 1e-9) return false;
  const double k = (v - lo) / step;
  return std::fabs(k - std::round(k)) < 1e-6;
}

}  // namespace

void TrainConfig::validate_paper_grid() const {
  if (!in_grid(lr, 0.01, 0.05, 0.01))
    throw config_error("--paper-grid: lr must lie in {0.01, 0.02, ..., 0.05}");
  if (!in_grid(dropout, 0.1, 0.9, 0.05))
    throw config_error("--paper-grid: dropout must lie in {0.1, 0.15, ..., 0.9}");
  bool wd_ok = false;
  for (double cand : {5e-3, 5e-4, 5e-5, 5e-6})
    if (std::fabs(wd - cand) < 1e-12) wd_ok = true;
  if (!wd_ok) throw config_error("--paper-grid: wd must lie in {5e-3, 5e-4, 5e-5, 5e-6}");
  if (r < 2 || r > 7) throw config_error("--paper-grid: r must lie in {2, ..., 7}");
  if (!in_grid(epsilon, 0.75, 0.95, 0.05))
    throw config_error("--paper-grid: epsilon must lie in {0.75, 0.8, ..., 0.95}");
  if (K < 1 || K > 6) throw config_error("--paper-grid: K must lie in {1, ..., 6}");
}

}  // namespace gcnsa
