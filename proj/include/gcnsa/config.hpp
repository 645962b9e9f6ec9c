#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "gcnsa/blocks.hpp"
#include "gcnsa/structure.hpp"

namespace gcnsa {

enum class BlockKind { modified, original, none };

enum class ModelKind { gcn_sa, gcn_baseline, mlp_baseline };

// Ablation switches (Tables 3-5). Dropped embedding blocks shrink the gate
// and classifier to the reduced concatenation width.
struct VariantConfig {
  bool use_a = true;
  bool use_a_star = true;
  bool use_fusion1 = true;
  bool use_fusion2 = true;
  BlockKind block_kind = BlockKind::modified;

  VariantConfig normalized() const {
    VariantConfig v = *this;
    if (v.block_kind == BlockKind::none) v.use_fusion1 = v.use_fusion2 = false;
    if (!v.use_fusion1 && !v.use_fusion2) v.block_kind = BlockKind::none;
    return v;
  }
};

// Named ablation variants accepted by the CLI.
VariantConfig variant_by_name(const std::string& name);

inline const char* const kVariantNames[] = {"full",       "no-a",       "no-astar",
                                            "features-only", "no-fusion1", "no-fusion2",
                                            "no-fusion",  "tf-original"};

// Hyper-parameters (Table 7 names) plus the run protocol knobs.
struct TrainConfig {
  double lr = 0.01;
  double wd = 5e-4;
  double dropout = 0.5;
  int r = 3;
  double epsilon = 0.8;
  int K = 1;
  int p = 16;
  int q = 48;
  int m_structure = 4;
  int m_fusion = 1;
  uint64_t seed = 42;
  int epochs = 500;
  int patience = 100;
  int runs = 10;
  std::array<double, 3> ratios{0.6, 0.2, 0.2};
  int block_rows = 0;  // 0 = score all rows at once
  ResidualVariant residual = ResidualVariant::raw;

  SparsifierConfig sparsifier() const { return {r, epsilon}; }

  void validate() const;
  // Rejects values outside the published search ranges (--paper-grid).
  void validate_paper_grid() const;
};

}  // namespace gcnsa
