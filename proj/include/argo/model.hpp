#pragma once

#include <utility>
#include <vector>

#include "argo/rng.hpp"
#include "argo/types.hpp"

namespace argo {

// out = v / max(||v||, kNormEps); returns the raw L2 norm.
double normalize_into(const double* v, int d, double* out);
std::vector<double> normalize(const std::vector<double>& v);

// Inverted-dropout mask over the element-wise product layer: entries are
// 0 or 1/(1-rho). One mask is shared across the M identities of a single
// (user, item) forward so the max comparison stays fair.
struct DropoutMask {
  std::vector<double> scale;  // length d; all-ones in eval mode
  bool active = false;
};

DropoutMask make_dropout_mask(int d, double rho, Rng& rng);

// ReLU(h^T (p_hat ⊙ q_hat ⊙ mask)). head picks the prediction vector
// (always 0 for chained variants).
double identity_score(const ModelParams& params, int user, int item, int identity,
                      const DropoutMask* mask = nullptr, int head = 0);

// (max over identities, argmax index); ties go to the smallest index.
std::pair<double, int> first_level_score(const ModelParams& params, int user, int item,
                                         const DropoutMask* mask = nullptr, int head = 0);

// Per-user dense scores at every level.
struct ScoreSheetRow {
  std::vector<std::vector<double>> levels;   // K vectors of length num_items
  std::vector<std::vector<int>> argmax;      // argmax identity per item (1 row chained, K rows heads)
};

ScoreSheetRow chain_scores(const ModelParams& params, int user);

// Target-level scores for all items, eval mode.
std::vector<double> score_all_items(const ModelParams& params, int user);

// Optional diagnostic: per-user max-normalized scores (not used in training
// or evaluation; the raw chain is the operational formula).
std::vector<double> max_normalized(const std::vector<double>& scores);

}  // namespace argo
