#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "argo/rng.hpp"
#include "argo/types.hpp"

namespace argo {

struct IdMapping {
  std::unordered_map<long long, int> user_to_index;
  std::unordered_map<long long, int> item_to_index;
};

struct LoadedInteractions {
  InteractionDataset dataset;
  IdMapping mapping;
};

// One interaction per line: user<TAB>item<TAB>level (level in [1, K]).
// Upward closure is applied: a pair at level k is added to every lower
// level. IDs are remapped to dense indices in first-seen order.
// expected_levels == 0 means infer K from the maximum level in the file.
LoadedInteractions load_interactions(const std::string& path, int expected_levels = 0);
LoadedInteractions parse_interactions(const std::string& text, int expected_levels = 0,
                                      const std::string& origin = "<memory>");

void save_id_mapping(const IdMapping& mapping, const std::string& path);

struct SplitDataset {
  InteractionDataset train;
  std::vector<int> test_items;   // per user, -1 when none held out
  std::vector<int> valid_items;  // per user, -1 when none held out
};

// Leave-one-out at the target level: users with >= 3 target-level
// positives give up one test and one validation item; both are removed
// from train at the target level only.
SplitDataset leave_one_out_split(const InteractionDataset& ds, Rng& rng);

std::string split_to_json(const SplitDataset& split);
void save_split(const SplitDataset& split, const std::string& path);
SplitDataset load_split(const InteractionDataset& ds, const std::string& path);

struct EmpiricalTransition {
  // p_hat[k][v] = P(level k+1 | level k) for item v; defined[k][v] marks support > 0
  std::vector<std::vector<double>> p_hat;
  std::vector<std::vector<bool>> defined;
  std::vector<std::vector<int>> support;  // count of level-k positives per item
};

EmpiricalTransition estimate_transitions(const InteractionDataset& ds);

// Users whose target-level positive count lies in [lo, hi].
std::vector<int> sparse_user_subset(const InteractionDataset& ds, int lo, int hi);

// Drops behavior levels (keep[k] == true keeps level k); used by the
// C/V/CV data ablations. Keeps the target level always.
InteractionDataset drop_levels(const InteractionDataset& ds, const std::vector<bool>& keep);

}  // namespace argo
