#include "argo/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace argo {

RankResult rank_user(int user, const ModelParams& params, const InteractionDataset& train,
                     int test_item) {
  const std::vector<double> scores = score_all_items(params, user);
  const int target = train.num_levels - 1;
  const auto& observed = train.positives[target][user];

  RankResult rr;
  rr.user = user;
  rr.test_item = test_item;

  const double test_score = scores[test_item];
  int better = 0, candidates = 0;
  std::size_t oi = 0;
  for (int v = 0; v < train.num_items; ++v) {
    if (oi < observed.size() && observed[oi] == v) {
      ++oi;
      continue;  // level-K train positives are not candidates
    }
    ++candidates;
    if (v == test_item) continue;
    if (scores[v] > test_score || (scores[v] == test_score && v < test_item)) ++better;
  }
  rr.rank = better + 1;
  rr.num_candidates = candidates;
  return rr;
}

double hr_at_n(const std::vector<RankResult>& results, int n) {
  if (results.empty()) throw DataError("hr_at_n on empty result set");
  std::size_t hits = 0;
  for (const auto& rr : results)
    if (rr.rank <= n) ++hits;
  return static_cast<double>(hits) / results.size();
}

double ndcg_at_n(const std::vector<RankResult>& results, int n) {
  if (results.empty()) throw DataError("ndcg_at_n on empty result set");
  double sum = 0.0;
  for (const auto& rr : results)
    if (rr.rank <= n) sum += 1.0 / std::log2(rr.rank + 1.0);
  return sum / results.size();
}

std::vector<RankResult> rank_all(const ModelParams& params, const SplitDataset& split,
                                 const std::optional<std::vector<int>>& subset, int threads) {
  std::vector<int> users;
  if (subset) {
    for (int u : *subset)
      if (u >= 0 && u < split.train.num_users && split.test_items[u] >= 0) users.push_back(u);
  } else {
    for (int u = 0; u < split.train.num_users; ++u)
      if (split.test_items[u] >= 0) users.push_back(u);
  }
  std::sort(users.begin(), users.end());

  std::vector<RankResult> results(users.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      results[i] = rank_user(users[i], params, split.train, split.test_items[users[i]]);
  };
  if (threads <= 1 || users.size() < 2) {
    work(0, users.size());
  } else {
    const std::size_t n = static_cast<std::size_t>(threads);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t begin = users.size() * t / n;
      const std::size_t end = users.size() * (t + 1) / n;
      pool.emplace_back(work, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  return results;
}

EvalReport evaluate(const ModelParams& params, const SplitDataset& split,
                    const std::vector<int>& cutoffs,
                    const std::optional<std::vector<int>>& subset, int threads) {
  const std::vector<RankResult> results = rank_all(params, split, subset, threads);
  if (results.empty()) throw DataError("evaluate: no test users in selection");
  EvalReport report;
  report.cutoffs = cutoffs;
  report.num_users = results.size();
  for (int n : cutoffs) {
    report.hr.push_back(hr_at_n(results, n));
    report.ndcg.push_back(ndcg_at_n(results, n));
  }
  return report;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["num_users"] = report.num_users;
  if (!report.subset_label.empty()) j["subset"] = report.subset_label;
  nlohmann::json metrics = nlohmann::json::object();
  for (std::size_t i = 0; i < report.cutoffs.size(); ++i) {
    metrics["HR@" + std::to_string(report.cutoffs[i])] = report.hr[i];
    metrics["NDCG@" + std::to_string(report.cutoffs[i])] = report.ndcg[i];
  }
  j["metrics"] = metrics;
  return j.dump(2);
}

std::string report_to_csv(const EvalReport& report) {
  std::ostringstream os;
  os.precision(17);
  os << "metric";
  for (int n : report.cutoffs) os << ",@" << n;
  os << "\nHR";
  for (double x : report.hr) os << "," << x;
  os << "\nNDCG";
  for (double x : report.ndcg) os << "," << x;
  os << "\n";
  return os.str();
}

CaseStudy case_study(const ModelParams& params, int user, const std::vector<int>& positive_items) {
  if (user < 0 || user >= params.num_users)
    throw DataError("case study: unknown user " + std::to_string(user));
  for (int v : positive_items)
    if (v < 0 || v >= params.num_items)
      throw DataError("case study: unknown item " + std::to_string(v));

  const int M = params.num_identities;
  const int d = params.embed_dim;
  CaseStudy cs;
  cs.items = positive_items;

  std::vector<std::vector<double>> p_hat(M, std::vector<double>(d));
  for (int m = 0; m < M; ++m) normalize_into(params.user_embed(m, user), d, p_hat[m].data());

  cs.identity_similarity.assign(M, std::vector<double>(M, 0.0));
  for (int m = 0; m < M; ++m)
    for (int mp = 0; mp < M; ++mp) {
      double c = 0.0;
      for (int l = 0; l < d; ++l) c += p_hat[m][l] * p_hat[mp][l];
      cs.identity_similarity[m][mp] = m == mp ? 1.0 : c;
    }

  cs.likelihood.assign(M, std::vector<double>(positive_items.size(), 0.0));
  for (int m = 0; m < M; ++m)
    for (std::size_t i = 0; i < positive_items.size(); ++i)
      cs.likelihood[m][i] = identity_score(params, user, positive_items[i], m);
  return cs;
}

void case_study_export(const CaseStudy& cs, const std::string& similarity_path,
                       const std::string& likelihood_path) {
  const int M = static_cast<int>(cs.identity_similarity.size());
  {
    std::ofstream out(similarity_path, std::ios::binary);
    if (!out) throw DataError("cannot write " + similarity_path);
    out.precision(17);
    out << "identity";
    for (int m = 0; m < M; ++m) out << ",identity_" << m + 1;
    out << "\n";
    for (int m = 0; m < M; ++m) {
      out << "identity_" << m + 1;
      for (double x : cs.identity_similarity[m]) out << "," << x;
      out << "\n";
    }
  }
  {
    std::ofstream out(likelihood_path, std::ios::binary);
    if (!out) throw DataError("cannot write " + likelihood_path);
    out.precision(17);
    out << "identity";
    for (int v : cs.items) out << ",item_" << v;
    out << "\n";
    for (int m = 0; m < M; ++m) {
      out << "identity_" << m + 1;
      for (double x : cs.likelihood[m]) out << "," << x;
      out << "\n";
    }
  }
}

}  // namespace argo
