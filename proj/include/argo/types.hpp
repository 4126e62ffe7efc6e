#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "argo/rng.hpp"

namespace argo {

// Error classes map to distinct CLI exit codes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr double kTransitionFloor = 1e-6;  // lower clamp for transition probs
constexpr double kNormEps = 1e-12;         // zero-vector guard in normalize

// Multi-behavior implicit feedback. Levels are 0-based internally
// (level 0 = lowest behavior, level K-1 = target behavior).
class InteractionDataset {
 public:
  int num_users = 0;
  int num_items = 0;
  int num_levels = 0;  // K >= 2
  // positives[k][u] = ascending item indices the user interacted with at level k
  std::vector<std::vector<std::vector<int>>> positives;

  bool has(int level, int user, int item) const;
  std::size_t level_count(int level) const;
  std::size_t total_pairs() const;
};

struct ValidationReport {
  std::vector<std::string> violations;
  std::vector<std::size_t> level_counts;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate_dataset(const InteractionDataset& ds);

struct HyperParams {
  int d = 64;
  int M = 4;
  double w = 0.01;                    // uniform negative weight, all levels
  std::vector<double> lambda;         // K multi-task weights, sum 1
  double lr = 0.05;
  int batch_size = 256;
  double dropout = 0.5;
  int epochs = 100;
  std::uint64_t seed = 1;
  std::vector<int> cutoffs = {10, 50, 100, 200};

  void validate() const;       // throws ConfigError
  void normalize_lambda();     // rescale to sum 1
};

// Parse from flat JSON; unknown keys rejected.
HyperParams hyperparams_from_json(const std::string& json_text);
HyperParams load_hyperparams(const std::string& path);
std::string hyperparams_to_json(const HyperParams& hp);

enum class Variant {
  full,              // max-pooled identities + chained transitions
  single_identity,   // M forced to 1 (IM ablation)
  independent_heads  // per-level prediction vectors, no transition chain (CP ablation)
};

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

// All trainable state. For full/single_identity there is one prediction
// vector and K-1 transition vectors; for independent_heads there are K
// prediction vectors and no transitions.
struct ModelParams {
  int num_users = 0;
  int num_items = 0;
  int num_levels = 0;
  int embed_dim = 0;
  int num_identities = 0;
  Variant variant = Variant::full;

  std::vector<std::vector<double>> P;  // M blocks, each num_users*d row-major
  std::vector<double> Q;               // num_items*d row-major
  std::vector<std::vector<double>> h;  // 1 vector (chained) or K (independent heads)
  std::vector<std::vector<double>> T;  // K-1 vectors of length num_items, in [floor,1]

  bool chained() const { return variant != Variant::independent_heads; }
  const double* user_embed(int m, int u) const { return P[m].data() + static_cast<std::size_t>(u) * embed_dim; }
  double* user_embed(int m, int u) { return P[m].data() + static_cast<std::size_t>(u) * embed_dim; }
  const double* item_embed(int v) const { return Q.data() + static_cast<std::size_t>(v) * embed_dim; }
  double* item_embed(int v) { return Q.data() + static_cast<std::size_t>(v) * embed_dim; }

  bool all_finite() const;
  void assert_invariants() const;  // throws NumericError on violation
};

// P, Q, h ~ N(0, 0.1); T warm-started from the empirical transition
// estimate with fallback 0.5, clamped to [kTransitionFloor, 1].
ModelParams init_params(const HyperParams& hp, const InteractionDataset& ds, Rng& rng,
                        Variant variant = Variant::full);

}  // namespace argo
