#pragma once

#include <functional>
#include <string>
#include <vector>

#include "argo/data.hpp"
#include "argo/model.hpp"
#include "argo/types.hpp"

namespace argo {

struct LossBreakdown {
  std::vector<double> regression;  // per-level L_r^(k), unweighted
  double divergence = 0.0;
  double total = 0.0;  // sum_k lambda_k * L_r^(k) + L_d
};

// Dense gradients, same shapes as ModelParams.
struct GradientSet {
  std::vector<std::vector<double>> P;
  std::vector<double> Q;
  std::vector<std::vector<double>> h;
  std::vector<std::vector<double>> T;

  static GradientSet zeros_like(const ModelParams& params);
  void scale(double c);
};

struct AdagradState {
  std::vector<std::vector<double>> P;
  std::vector<double> Q;
  std::vector<std::vector<double>> h;
  std::vector<std::vector<double>> T;
  double eps = 1e-8;

  static AdagradState zeros_like(const ModelParams& params);
};

// Whole-data squared regression loss for one level over the batch users
// (positives weighted 1, all missing items weighted w). Eval-mode scores.
double regression_loss(const std::vector<int>& batch, int level, const ModelParams& params,
                       const InteractionDataset& train, double w);

// Mean squared hinge on positive cosine similarity between identity pairs;
// 0 when M == 1.
double divergence_loss(const std::vector<int>& batch, const ModelParams& params);

LossBreakdown total_loss(const std::vector<int>& batch, const ModelParams& params,
                         const InteractionDataset& train, const HyperParams& hp);

// Forward + analytic backward over the batch. Dropout is driven by rho
// (masks drawn from rng per user-item forward); rho = 0 reproduces
// total_loss exactly. Gradients of the batch-summed objective.
LossBreakdown forward_backward(const std::vector<int>& batch, const ModelParams& params,
                               const InteractionDataset& train, const HyperParams& hp,
                               double rho, Rng& rng, GradientSet& grads);

struct FiniteDifferenceReport {
  struct Block {
    std::string name;
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;  // near a ReLU kink or identity-max tie
    std::string worst_coord;
  };
  std::vector<Block> blocks;
  double tolerance = 1e-4;
  bool pass = true;
  std::string to_string() const;
};

// Central differences, step 1e-6, dropout off. Coordinates whose pairs sit
// within kink_tol of a ReLU kink or identity-max tie are excluded.
FiniteDifferenceReport finite_difference_check(const ModelParams& params,
                                               const std::vector<int>& batch,
                                               const InteractionDataset& train,
                                               const HyperParams& hp, double tolerance = 1e-4,
                                               double step = 1e-6, double kink_tol = 1e-5);

// accumulator += g^2; theta -= lr * g / (sqrt(acc) + eps); T re-clamped.
void adagrad_step(ModelParams& params, const GradientSet& grads, AdagradState& state, double lr);

struct EpochRecord {
  int epoch = 0;
  LossBreakdown loss;   // summed over batches
  double val_hr10 = 0.0;
};

struct TrainResult {
  ModelParams params;       // best validation checkpoint
  ModelParams final_params; // after the last epoch
  AdagradState state;       // optimizer state after the last epoch
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

std::string history_to_csv(const std::vector<EpochRecord>& history, int num_levels);

TrainResult train(const SplitDataset& split, const HyperParams& hp, Rng& rng,
                  Variant variant = Variant::full,
                  const std::function<void(const EpochRecord&)>& on_epoch = nullptr);

}  // namespace argo
