#pragma once

#include <string>
#include <vector>

#include "argo/types.hpp"

namespace argo {

struct SynthConfig {
  int num_users = 200;
  int num_items = 100;
  int latent_dim = 8;
  int num_tastes = 2;  // planted identities per user (M*)
  int num_levels = 3;
  // Level-1 interaction probability: clip(link_scale * best_affinity + link_offset, 0, 1),
  // blended with the flat base rate by the noise level.
  double link_scale = 1.2;
  double link_offset = 0.05;
  double base_rate = 0.15;
  double noise = 0.0;
  // Per-item true transition probabilities drawn uniformly from [lo, hi].
  double transition_lo = 0.2;
  double transition_hi = 0.9;
  std::uint64_t seed = 7;

  void validate() const;  // throws ConfigError
};

struct SynthGroundTruth {
  std::vector<std::vector<std::vector<double>>> tastes;  // [user][taste][dim], unit vectors
  std::vector<std::vector<double>> item_vectors;         // [item][dim], unit vectors
  std::vector<std::vector<double>> transitions;          // [level k][item] true t^(k)_v
};

struct SynthResult {
  InteractionDataset dataset;
  SynthGroundTruth truth;
};

// Level-1 positives sampled from the max-taste affinity link; each higher
// level is subsampled from the one below with the item's true transition
// probability, so ordinal containment holds by construction.
SynthResult generate(const SynthConfig& cfg);

void write_interactions(const InteractionDataset& ds, const std::string& path);
void write_ground_truth(const SynthGroundTruth& truth, const std::string& path);

struct RecoverySetting {
  std::string label;
  HyperParams hp;
  Variant variant = Variant::full;
};

struct RecoveryRow {
  std::string label;
  std::vector<int> cutoffs;
  std::vector<double> hr_mean, hr_std;
  std::vector<double> ndcg_mean, ndcg_std;
  std::vector<double> hr_per_seed_at0;  // HR at cutoffs[0] per seed, for inspection
};

struct RecoveryReport {
  std::vector<RecoveryRow> rows;
  int num_seeds = 0;
  std::string to_csv() const;
};

// For each seed: generate data, split, train every setting on the same
// split, evaluate; aggregates mean and standard deviation per setting.
RecoveryReport recovery_experiment(const SynthConfig& cfg,
                                   const std::vector<RecoverySetting>& settings, int num_seeds);

}  // namespace argo
