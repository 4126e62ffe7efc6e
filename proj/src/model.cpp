#include "argo/model.hpp"

#include <algorithm>
#include <cmath>

namespace argo {

double normalize_into(const double* v, int d, double* out) {
  double sq = 0.0;
  for (int l = 0; l < d; ++l) sq += v[l] * v[l];
  const double norm = std::sqrt(sq);
  const double denom = std::max(norm, kNormEps);
  for (int l = 0; l < d; ++l) out[l] = v[l] / denom;
  return norm;
}

std::vector<double> normalize(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  normalize_into(v.data(), static_cast<int>(v.size()), out.data());
  return out;
}

DropoutMask make_dropout_mask(int d, double rho, Rng& rng) {
  DropoutMask mask;
  mask.scale.assign(d, 1.0);
  if (rho <= 0.0) return mask;
  mask.active = true;
  const double keep_scale = 1.0 / (1.0 - rho);
  for (int l = 0; l < d; ++l) mask.scale[l] = rng.next_double() < rho ? 0.0 : keep_scale;
  return mask;
}

double identity_score(const ModelParams& params, int user, int item, int identity,
                      const DropoutMask* mask, int head) {
  const int d = params.embed_dim;
  std::vector<double> p_hat(d), q_hat(d);
  normalize_into(params.user_embed(identity, user), d, p_hat.data());
  normalize_into(params.item_embed(item), d, q_hat.data());
  const double* hv = params.h[head].data();
  double a = 0.0;
  for (int l = 0; l < d; ++l) {
    const double scale = mask ? mask->scale[l] : 1.0;
    a += hv[l] * p_hat[l] * q_hat[l] * scale;
  }
  return a > 0.0 ? a : 0.0;
}

std::pair<double, int> first_level_score(const ModelParams& params, int user, int item,
                                         const DropoutMask* mask, int head) {
  double best = identity_score(params, user, item, 0, mask, head);
  int best_m = 0;
  for (int m = 1; m < params.num_identities; ++m) {
    const double s = identity_score(params, user, item, m, mask, head);
    if (s > best) {  // ties keep the smallest m
      best = s;
      best_m = m;
    }
  }
  return {best, best_m};
}

namespace {

// Eval-mode per-head dense scores for one user, with argmax identities.
void head_scores(const ModelParams& params, int user, int head, std::vector<double>& scores,
                 std::vector<int>& argmax) {
  const int d = params.embed_dim;
  const int M = params.num_identities;
  const int V = params.num_items;
  std::vector<std::vector<double>> p_hat(M, std::vector<double>(d));
  for (int m = 0; m < M; ++m) normalize_into(params.user_embed(m, user), d, p_hat[m].data());
  const double* hv = params.h[head].data();

  scores.assign(V, 0.0);
  argmax.assign(V, 0);
  std::vector<double> q_hat(d);
  for (int v = 0; v < V; ++v) {
    normalize_into(params.item_embed(v), d, q_hat.data());
    double best = -1.0;
    int best_m = 0;
    for (int m = 0; m < M; ++m) {
      double a = 0.0;
      for (int l = 0; l < d; ++l) a += hv[l] * p_hat[m][l] * q_hat[l];
      const double s = a > 0.0 ? a : 0.0;
      if (s > best) {
        best = s;
        best_m = m;
      }
    }
    scores[v] = best;
    argmax[v] = best_m;
  }
}

}  // namespace

ScoreSheetRow chain_scores(const ModelParams& params, int user) {
  const int K = params.num_levels;
  const int V = params.num_items;
  ScoreSheetRow row;
  row.levels.resize(K);

  if (params.chained()) {
    row.argmax.resize(1);
    head_scores(params, user, 0, row.levels[0], row.argmax[0]);
    for (int k = 1; k < K; ++k) {
      row.levels[k].resize(V);
      for (int v = 0; v < V; ++v) row.levels[k][v] = row.levels[k - 1][v] * params.T[k - 1][v];
    }
  } else {
    row.argmax.resize(K);
    for (int k = 0; k < K; ++k) head_scores(params, user, k, row.levels[k], row.argmax[k]);
  }
  return row;
}

std::vector<double> score_all_items(const ModelParams& params, int user) {
  if (params.chained()) {
    std::vector<double> scores;
    std::vector<int> argmax;
    head_scores(params, user, 0, scores, argmax);
    for (int k = 0; k + 1 < params.num_levels; ++k)
      for (int v = 0; v < params.num_items; ++v) scores[v] *= params.T[k][v];
    return scores;
  }
  std::vector<double> scores;
  std::vector<int> argmax;
  head_scores(params, user, params.num_levels - 1, scores, argmax);
  return scores;
}

std::vector<double> max_normalized(const std::vector<double>& scores) {
  double mx = 0.0;
  for (double s : scores) mx = std::max(mx, s);
  std::vector<double> out(scores.size(), 0.0);
  if (mx <= 0.0) return out;
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] / mx;
  return out;
}

}  // namespace argo
