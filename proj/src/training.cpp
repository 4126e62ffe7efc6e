#include "argo/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "argo/eval.hpp"

namespace argo {

GradientSet GradientSet::zeros_like(const ModelParams& params) {
  GradientSet g;
  g.P.resize(params.P.size());
  for (std::size_t m = 0; m < params.P.size(); ++m) g.P[m].assign(params.P[m].size(), 0.0);
  g.Q.assign(params.Q.size(), 0.0);
  g.h.resize(params.h.size());
  for (std::size_t i = 0; i < params.h.size(); ++i) g.h[i].assign(params.h[i].size(), 0.0);
  g.T.resize(params.T.size());
  for (std::size_t k = 0; k < params.T.size(); ++k) g.T[k].assign(params.T[k].size(), 0.0);
  return g;
}

void GradientSet::scale(double c) {
  for (auto& b : P)
    for (double& x : b) x *= c;
  for (double& x : Q) x *= c;
  for (auto& b : h)
    for (double& x : b) x *= c;
  for (auto& b : T)
    for (double& x : b) x *= c;
}

AdagradState AdagradState::zeros_like(const ModelParams& params) {
  AdagradState s;
  s.P.resize(params.P.size());
  for (std::size_t m = 0; m < params.P.size(); ++m) s.P[m].assign(params.P[m].size(), 0.0);
  s.Q.assign(params.Q.size(), 0.0);
  s.h.resize(params.h.size());
  for (std::size_t i = 0; i < params.h.size(); ++i) s.h[i].assign(params.h[i].size(), 0.0);
  s.T.resize(params.T.size());
  for (std::size_t k = 0; k < params.T.size(); ++k) s.T[k].assign(params.T[k].size(), 0.0);
  return s;
}

double regression_loss(const std::vector<int>& batch, int level, const ModelParams& params,
                       const InteractionDataset& train, double w) {
  double loss = 0.0;
  for (int u : batch) {
    const ScoreSheetRow row = chain_scores(params, u);
    for (int v = 0; v < params.num_items; ++v) {
      const double r = row.levels[level][v];
      if (train.has(level, u, v))
        loss += (1.0 - r) * (1.0 - r);
      else
        loss += w * r * r;
    }
  }
  return loss;
}

double divergence_loss(const std::vector<int>& batch, const ModelParams& params) {
  const int M = params.num_identities;
  if (M < 2 || batch.empty()) return 0.0;
  const int d = params.embed_dim;
  const double coef = 2.0 / (static_cast<double>(batch.size()) * M * (M - 1));

  double sum = 0.0;
  std::vector<std::vector<double>> p_hat(M, std::vector<double>(d));
  for (int u : batch) {
    for (int m = 0; m < M; ++m) normalize_into(params.user_embed(m, u), d, p_hat[m].data());
    for (int m = 0; m < M; ++m)
      for (int mp = m + 1; mp < M; ++mp) {
        double c = 0.0;
        for (int l = 0; l < d; ++l) c += p_hat[m][l] * p_hat[mp][l];
        const double hinge = c > 0.0 ? c : 0.0;
        sum += hinge * hinge;  // one term per unordered pair; the 2/(M(M-1)) factor makes the mean
      }
  }
  return coef * sum;
}

LossBreakdown total_loss(const std::vector<int>& batch, const ModelParams& params,
                         const InteractionDataset& train, const HyperParams& hp) {
  LossBreakdown lb;
  const int K = params.num_levels;
  lb.regression.assign(K, 0.0);
  for (int u : batch) {
    const ScoreSheetRow row = chain_scores(params, u);
    for (int k = 0; k < K; ++k) {
      for (int v = 0; v < params.num_items; ++v) {
        const double r = row.levels[k][v];
        if (train.has(k, u, v))
          lb.regression[k] += (1.0 - r) * (1.0 - r);
        else
          lb.regression[k] += hp.w * r * r;
      }
    }
  }
  lb.divergence = divergence_loss(batch, params);
  lb.total = lb.divergence;
  for (int k = 0; k < K; ++k) lb.total += hp.lambda[k] * lb.regression[k];
  return lb;
}

namespace {

// dL/dp_raw from accumulated dL/dp_hat through the guarded normalization.
void backprop_normalize(const double* grad_hat, const double* unit, double raw_norm, int d,
                        double* grad_raw) {
  if (raw_norm > kNormEps) {
    double dot = 0.0;
    for (int l = 0; l < d; ++l) dot += unit[l] * grad_hat[l];
    for (int l = 0; l < d; ++l) grad_raw[l] += (grad_hat[l] - unit[l] * dot) / raw_norm;
  } else {
    for (int l = 0; l < d; ++l) grad_raw[l] += grad_hat[l] / kNormEps;
  }
}

}  // namespace

LossBreakdown forward_backward(const std::vector<int>& batch, const ModelParams& params,
                               const InteractionDataset& train, const HyperParams& hp,
                               double rho, Rng& rng, GradientSet& grads) {
  const int K = params.num_levels;
  const int V = params.num_items;
  const int M = params.num_identities;
  const int d = params.embed_dim;
  const bool chained = params.chained();
  const int num_heads = static_cast<int>(params.h.size());

  LossBreakdown lb;
  lb.regression.assign(K, 0.0);

  // Item embeddings are fixed within the batch: normalize once, accumulate
  // gradients in normalized coordinates, convert at the end.
  std::vector<double> q_hat(static_cast<std::size_t>(V) * d);
  std::vector<double> q_norm(V);
  for (int v = 0; v < V; ++v)
    q_norm[v] = normalize_into(params.item_embed(v), d, q_hat.data() + static_cast<std::size_t>(v) * d);
  std::vector<double> q_hat_grad(static_cast<std::size_t>(V) * d, 0.0);

  std::vector<std::vector<double>> p_hat(M, std::vector<double>(d));
  std::vector<double> p_norm(M);
  std::vector<std::vector<double>> p_hat_grad(M, std::vector<double>(d));
  std::vector<double> mask(d);
  std::vector<double> a(M);          // pre-ReLU per identity
  std::vector<double> relu(M);       // post-ReLU per identity
  std::vector<double> chain_cum(K);  // cumulative transition product per level

  const double div_coef =
      M >= 2 ? 2.0 / (static_cast<double>(batch.size()) * M * (M - 1)) : 0.0;
  double div_sum = 0.0;

  for (int u : batch) {
    for (int m = 0; m < M; ++m) {
      p_norm[m] = normalize_into(params.user_embed(m, u), d, p_hat[m].data());
      std::fill(p_hat_grad[m].begin(), p_hat_grad[m].end(), 0.0);
    }

    for (int v = 0; v < V; ++v) {
      const double* qh = q_hat.data() + static_cast<std::size_t>(v) * d;
      double* qh_grad = q_hat_grad.data() + static_cast<std::size_t>(v) * d;

      // One shared mask per (user, item) forward, covering all identities
      // (and all heads in the per-level-head variant).
      if (rho > 0.0) {
        const double keep_scale = 1.0 / (1.0 - rho);
        for (int l = 0; l < d; ++l) mask[l] = rng.next_double() < rho ? 0.0 : keep_scale;
      } else {
        std::fill(mask.begin(), mask.end(), 1.0);
      }

      for (int head = 0; head < num_heads; ++head) {
        const double* hv = params.h[head].data();
        double best = -1.0;
        int best_m = 0;
        for (int m = 0; m < M; ++m) {
          double pre = 0.0;
          if (rho > 0.0) {
            for (int l = 0; l < d; ++l) pre += hv[l] * p_hat[m][l] * qh[l] * mask[l];
          } else {
            for (int l = 0; l < d; ++l) pre += hv[l] * p_hat[m][l] * qh[l];
          }
          a[m] = pre;
          relu[m] = pre > 0.0 ? pre : 0.0;
          if (relu[m] > best) {
            best = relu[m];
            best_m = m;
          }
        }
        const double r1 = best;

        // dL/dr1 summed over the levels this head feeds, plus transition grads.
        double g_r1 = 0.0;
        if (chained) {
          chain_cum[0] = 1.0;
          for (int k = 1; k < K; ++k) chain_cum[k] = chain_cum[k - 1] * params.T[k - 1][v];
          for (int k = 0; k < K; ++k) {
            const double rk = r1 * chain_cum[k];
            double gk;  // dL/dR^(k)
            if (train.has(k, u, v)) {
              const double diff = 1.0 - rk;
              lb.regression[k] += diff * diff;
              gk = hp.lambda[k] * (-2.0 * diff);
            } else {
              lb.regression[k] += hp.w * rk * rk;
              gk = hp.lambda[k] * 2.0 * hp.w * rk;
            }
            g_r1 += gk * chain_cum[k];
            // d r^(k) / d t_j = r1 * chain_cum[k] / t_j for j < k
            for (int j = 0; j < k; ++j)
              grads.T[j][v] += gk * r1 * chain_cum[k] / params.T[j][v];
          }
        } else {
          const int k = head;
          const double rk = r1;
          if (train.has(k, u, v)) {
            const double diff = 1.0 - rk;
            lb.regression[k] += diff * diff;
            g_r1 = hp.lambda[k] * (-2.0 * diff);
          } else {
            lb.regression[k] += hp.w * rk * rk;
            g_r1 = hp.lambda[k] * 2.0 * hp.w * rk;
          }
        }

        // ReLU'(0) = 0; max routes to the argmax identity only.
        if (a[best_m] > 0.0 && g_r1 != 0.0) {
          double* h_grad = grads.h[head].data();
          const double* ph = p_hat[best_m].data();
          double* ph_grad = p_hat_grad[best_m].data();
          for (int l = 0; l < d; ++l) {
            const double ml = mask[l];
            h_grad[l] += g_r1 * ph[l] * qh[l] * ml;
            ph_grad[l] += g_r1 * hv[l] * qh[l] * ml;
            qh_grad[l] += g_r1 * hv[l] * ph[l] * ml;
          }
        }
      }
    }

    // Divergence loss and its gradient straight into the raw embeddings.
    if (M >= 2) {
      for (int m = 0; m < M; ++m) {
        for (int mp = m + 1; mp < M; ++mp) {
          double c = 0.0;
          for (int l = 0; l < d; ++l) c += p_hat[m][l] * p_hat[mp][l];
          if (c <= 0.0) continue;
          div_sum += c * c;
          const double f = div_coef * 2.0 * c;  // d max(0,c)^2 / dc = 2c for c > 0
          double* gm = grads.P[m].data() + static_cast<std::size_t>(u) * d;
          double* gmp = grads.P[mp].data() + static_cast<std::size_t>(u) * d;
          const double denom_m = std::max(p_norm[m], kNormEps);
          const double denom_mp = std::max(p_norm[mp], kNormEps);
          for (int l = 0; l < d; ++l) {
            gm[l] += f * (p_hat[mp][l] - c * p_hat[m][l]) / denom_m;
            gmp[l] += f * (p_hat[m][l] - c * p_hat[mp][l]) / denom_mp;
          }
        }
      }
    }

    for (int m = 0; m < M; ++m)
      backprop_normalize(p_hat_grad[m].data(), p_hat[m].data(), p_norm[m], d,
                         grads.P[m].data() + static_cast<std::size_t>(u) * d);
  }

  for (int v = 0; v < V; ++v)
    backprop_normalize(q_hat_grad.data() + static_cast<std::size_t>(v) * d,
                       q_hat.data() + static_cast<std::size_t>(v) * d, q_norm[v], d,
                       grads.Q.data() + static_cast<std::size_t>(v) * d);

  lb.divergence = div_coef * div_sum;
  lb.total = lb.divergence;
  for (int k = 0; k < K; ++k) lb.total += hp.lambda[k] * lb.regression[k];
  return lb;
}

std::string FiniteDifferenceReport::to_string() const {
  std::ostringstream os;
  os << (pass ? "PASS" : "FAIL") << " (tolerance " << tolerance << ")\n";
  for (const auto& b : blocks) {
    os << "  " << b.name << ": max_rel_error=" << b.max_rel_error << " checked=" << b.checked
       << " skipped=" << b.skipped;
    if (!b.worst_coord.empty()) os << " worst=" << b.worst_coord;
    os << "\n";
  }
  return os.str();
}

namespace {

struct KinkMap {
  std::vector<bool> user;      // any sensitive pair touching user u
  std::vector<bool> item;      // any sensitive pair touching item v
  std::vector<bool> head;      // any sensitive pair scored by head
  bool any = false;
};

// A (user, item, head) forward is kink-sensitive when some pre-ReLU value
// sits within tol of 0, or a losing identity sits within tol of the
// positive maximum; central differences are unreliable there.
KinkMap find_kinks(const ModelParams& params, const std::vector<int>& batch,
                   double tol) {
  KinkMap km;
  km.user.assign(params.num_users, false);
  km.item.assign(params.num_items, false);
  km.head.assign(params.h.size(), false);

  const int d = params.embed_dim;
  const int M = params.num_identities;
  std::vector<std::vector<double>> p_hat(M, std::vector<double>(d));
  std::vector<double> q_hat(d);
  std::vector<double> a(M), relu(M);

  for (int u : batch) {
    for (int m = 0; m < M; ++m) normalize_into(params.user_embed(m, u), d, p_hat[m].data());
    for (int v = 0; v < params.num_items; ++v) {
      normalize_into(params.item_embed(v), d, q_hat.data());
      for (std::size_t head = 0; head < params.h.size(); ++head) {
        const double* hv = params.h[head].data();
        double best = -1.0;
        int best_m = 0;
        for (int m = 0; m < M; ++m) {
          double pre = 0.0;
          for (int l = 0; l < d; ++l) pre += hv[l] * p_hat[m][l] * q_hat[l];
          a[m] = pre;
          relu[m] = pre > 0.0 ? pre : 0.0;
          if (relu[m] > best) {
            best = relu[m];
            best_m = m;
          }
        }
        bool sensitive = false;
        for (int m = 0; m < M && !sensitive; ++m)
          if (std::abs(a[m]) < tol) sensitive = true;
        if (!sensitive && best > 0.0)
          for (int m = 0; m < M && !sensitive; ++m)
            if (m != best_m && best - relu[m] < tol) sensitive = true;
        if (sensitive) {
          km.user[u] = true;
          km.item[v] = true;
          km.head[head] = true;
          km.any = true;
        }
      }
    }
  }
  return km;
}

}  // namespace

FiniteDifferenceReport finite_difference_check(const ModelParams& params,
                                               const std::vector<int>& batch,
                                               const InteractionDataset& train,
                                               const HyperParams& hp, double tolerance,
                                               double step, double kink_tol) {
  FiniteDifferenceReport report;
  report.tolerance = tolerance;

  GradientSet grads = GradientSet::zeros_like(params);
  Rng dummy(0);
  forward_backward(batch, params, train, hp, /*rho=*/0.0, dummy, grads);

  const KinkMap kinks = find_kinks(params, batch, kink_tol);
  ModelParams work = params;

  auto numeric = [&](double* coord) {
    const double saved = *coord;
    *coord = saved + step;
    const double up = total_loss(batch, work, train, hp).total;
    *coord = saved - step;
    const double down = total_loss(batch, work, train, hp).total;
    *coord = saved;
    return (up - down) / (2.0 * step);
  };

  auto check_coord = [&](FiniteDifferenceReport::Block& block, double* coord, double analytic,
                         bool skip, const std::string& name) {
    if (skip) {
      ++block.skipped;
      return;
    }
    const double num = numeric(coord);
    const double err = std::abs(num - analytic) / std::max({1.0, std::abs(num), std::abs(analytic)});
    ++block.checked;
    if (err > block.max_rel_error) {
      block.max_rel_error = err;
      block.worst_coord = name + " (analytic=" + std::to_string(analytic) +
                          " numeric=" + std::to_string(num) + ")";
    }
  };

  const int d = params.embed_dim;
  for (std::size_t m = 0; m < params.P.size(); ++m) {
    FiniteDifferenceReport::Block block;
    block.name = "P[" + std::to_string(m) + "]";
    for (int u = 0; u < params.num_users; ++u)
      for (int l = 0; l < d; ++l) {
        const std::size_t idx = static_cast<std::size_t>(u) * d + l;
        check_coord(block, &work.P[m][idx], grads.P[m][idx], kinks.user[u],
                    "u=" + std::to_string(u) + ",l=" + std::to_string(l));
      }
    report.blocks.push_back(block);
  }
  {
    FiniteDifferenceReport::Block block;
    block.name = "Q";
    for (int v = 0; v < params.num_items; ++v)
      for (int l = 0; l < d; ++l) {
        const std::size_t idx = static_cast<std::size_t>(v) * d + l;
        check_coord(block, &work.Q[idx], grads.Q[idx], kinks.item[v],
                    "v=" + std::to_string(v) + ",l=" + std::to_string(l));
      }
    report.blocks.push_back(block);
  }
  for (std::size_t head = 0; head < params.h.size(); ++head) {
    FiniteDifferenceReport::Block block;
    block.name = params.h.size() == 1 ? "h" : "h[" + std::to_string(head) + "]";
    for (int l = 0; l < d; ++l)
      check_coord(block, &work.h[head][l], grads.h[head][l], kinks.head[head],
                  "l=" + std::to_string(l));
    report.blocks.push_back(block);
  }
  for (std::size_t k = 0; k < params.T.size(); ++k) {
    FiniteDifferenceReport::Block block;
    block.name = "T[" + std::to_string(k) + "]";
    for (int v = 0; v < params.num_items; ++v)
      check_coord(block, &work.T[k][v], grads.T[k][v], kinks.item[v], "v=" + std::to_string(v));
    report.blocks.push_back(block);
  }

  report.pass = true;
  for (const auto& b : report.blocks)
    if (b.max_rel_error >= tolerance) report.pass = false;
  return report;
}

void adagrad_step(ModelParams& params, const GradientSet& grads, AdagradState& state, double lr) {
  auto update = [&](std::vector<double>& theta, const std::vector<double>& g,
                    std::vector<double>& acc) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
      acc[i] += g[i] * g[i];
      theta[i] -= lr * g[i] / (std::sqrt(acc[i]) + state.eps);
    }
  };
  for (std::size_t m = 0; m < params.P.size(); ++m) update(params.P[m], grads.P[m], state.P[m]);
  update(params.Q, grads.Q, state.Q);
  for (std::size_t i = 0; i < params.h.size(); ++i) update(params.h[i], grads.h[i], state.h[i]);
  for (std::size_t k = 0; k < params.T.size(); ++k) {
    update(params.T[k], grads.T[k], state.T[k]);
    for (double& t : params.T[k]) t = std::clamp(t, kTransitionFloor, 1.0);
  }
}

std::string history_to_csv(const std::vector<EpochRecord>& history, int num_levels) {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,L_total";
  for (int k = 1; k <= num_levels; ++k) os << ",L_r" << k;
  os << ",L_d,val_HR@10\n";
  for (const auto& rec : history) {
    os << rec.epoch << "," << rec.loss.total;
    for (double r : rec.loss.regression) os << "," << r;
    os << "," << rec.loss.divergence << "," << rec.val_hr10 << "\n";
  }
  return os.str();
}

namespace {

double validation_hr10(const ModelParams& params, const SplitDataset& split) {
  int hits = 0, users = 0;
  for (int u = 0; u < split.train.num_users; ++u) {
    const int item = split.valid_items[u];
    if (item < 0) continue;
    const RankResult rr = rank_user(u, params, split.train, item);
    ++users;
    if (rr.rank <= 10) ++hits;
  }
  return users == 0 ? 0.0 : static_cast<double>(hits) / users;
}

}  // namespace

TrainResult train(const SplitDataset& split, const HyperParams& hp, Rng& rng, Variant variant,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  const InteractionDataset& ds = split.train;
  ModelParams params = init_params(hp, ds, rng, variant);
  AdagradState state = AdagradState::zeros_like(params);

  TrainResult result;
  double best_hr = -1.0;
  bool has_validation = false;
  for (int item : split.valid_items) has_validation = has_validation || item >= 0;

  std::vector<int> order(ds.num_users);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
    rng.shuffle(order);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss.regression.assign(ds.num_levels, 0.0);

    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(hp.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + hp.batch_size);
      const std::vector<int> batch(order.begin() + start, order.begin() + stop);

      GradientSet grads = GradientSet::zeros_like(params);
      const LossBreakdown lb =
          forward_backward(batch, params, ds, hp, hp.dropout, rng, grads);
      if (!std::isfinite(lb.total))
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch));

      adagrad_step(params, grads, state, hp.lr);
#ifndef NDEBUG
      params.assert_invariants();
#endif
      for (int k = 0; k < ds.num_levels; ++k) rec.loss.regression[k] += lb.regression[k];
      rec.loss.divergence += lb.divergence;
      rec.loss.total += lb.total;
    }
    params.assert_invariants();

    rec.val_hr10 = validation_hr10(params, split);
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (!has_validation || rec.val_hr10 > best_hr) {
      best_hr = rec.val_hr10;
      result.params = params;
      result.best_epoch = epoch;
    }
  }

  result.final_params = params;
  result.state = std::move(state);
  if (result.params.num_users == 0) {  // epochs == 0
    result.params = result.final_params;
    result.best_epoch = 0;
  }
  return result;
}

}  // namespace argo
