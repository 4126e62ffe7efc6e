#pragma once

#include <optional>
#include <string>
#include <vector>

#include "argo/data.hpp"
#include "argo/model.hpp"
#include "argo/types.hpp"

namespace argo {

struct RankResult {
  int user = 0;
  int test_item = 0;
  int rank = 0;            // 1-based among candidates
  int num_candidates = 0;  // all items not positive at the target level in train
};

// Rank of the test item among the user's unobserved items under descending
// target-level score; score ties break by ascending item index.
RankResult rank_user(int user, const ModelParams& params, const InteractionDataset& train,
                     int test_item);

double hr_at_n(const std::vector<RankResult>& results, int n);
double ndcg_at_n(const std::vector<RankResult>& results, int n);

struct EvalReport {
  std::vector<int> cutoffs;
  std::vector<double> hr;
  std::vector<double> ndcg;
  std::size_t num_users = 0;
  std::string subset_label;  // empty for the full test population
};

std::string report_to_json(const EvalReport& report);
std::string report_to_csv(const EvalReport& report);

EvalReport evaluate(const ModelParams& params, const SplitDataset& split,
                    const std::vector<int>& cutoffs,
                    const std::optional<std::vector<int>>& subset = std::nullopt,
                    int threads = 1);

std::vector<RankResult> rank_all(const ModelParams& params, const SplitDataset& split,
                                 const std::optional<std::vector<int>>& subset = std::nullopt,
                                 int threads = 1);

struct CaseStudy {
  std::vector<std::vector<double>> identity_similarity;  // M x M cosine matrix
  std::vector<std::vector<double>> likelihood;           // M x |positives|
  std::vector<int> items;
};

CaseStudy case_study(const ModelParams& params, int user, const std::vector<int>& positive_items);

// Writes similarity and likelihood matrices as CSV with header rows.
void case_study_export(const CaseStudy& cs, const std::string& similarity_path,
                       const std::string& likelihood_path);

}  // namespace argo
