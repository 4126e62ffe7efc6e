#include "argo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "argo/data.hpp"
#include "argo/eval.hpp"
#include "argo/model.hpp"
#include "argo/training.hpp"

namespace argo {

void SynthConfig::validate() const {
  if (num_users < 1 || num_items < 1) throw ConfigError("synth: users and items must be >= 1");
  if (latent_dim < 1) throw ConfigError("synth: latent_dim must be >= 1");
  if (num_tastes < 1) throw ConfigError("synth: num_tastes must be >= 1");
  if (num_levels < 2) throw ConfigError("synth: num_levels must be >= 2");
  if (base_rate < 0 || base_rate > 1) throw ConfigError("synth: base_rate must be in [0,1]");
  if (noise < 0 || noise > 1) throw ConfigError("synth: noise must be in [0,1]");
  if (transition_lo < 0 || transition_hi > 1 || transition_lo > transition_hi)
    throw ConfigError("synth: transition range must satisfy 0 <= lo <= hi <= 1");
}

namespace {

std::vector<double> random_unit(int dim, Rng& rng) {
  std::vector<double> v(dim);
  for (double& x : v) x = rng.next_gaussian();
  return normalize(v);
}

}  // namespace

SynthResult generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  SynthResult out;
  auto& truth = out.truth;
  truth.tastes.resize(cfg.num_users);
  for (auto& user_tastes : truth.tastes) {
    user_tastes.resize(cfg.num_tastes);
    for (auto& t : user_tastes) t = random_unit(cfg.latent_dim, rng);
  }
  truth.item_vectors.resize(cfg.num_items);
  for (auto& iv : truth.item_vectors) iv = random_unit(cfg.latent_dim, rng);

  truth.transitions.assign(cfg.num_levels - 1, std::vector<double>(cfg.num_items));
  for (auto& level : truth.transitions)
    for (double& t : level)
      t = cfg.transition_lo + (cfg.transition_hi - cfg.transition_lo) * rng.next_double();

  auto& ds = out.dataset;
  ds.num_users = cfg.num_users;
  ds.num_items = cfg.num_items;
  ds.num_levels = cfg.num_levels;
  ds.positives.assign(cfg.num_levels, std::vector<std::vector<int>>(cfg.num_users));

  for (int u = 0; u < cfg.num_users; ++u) {
    for (int v = 0; v < cfg.num_items; ++v) {
      double best = -1.0;
      for (const auto& taste : truth.tastes[u]) {
        double dot = 0.0;
        for (int l = 0; l < cfg.latent_dim; ++l) dot += taste[l] * truth.item_vectors[v][l];
        best = std::max(best, dot);
      }
      const double structured = std::clamp(cfg.link_scale * best + cfg.link_offset, 0.0, 1.0);
      const double p = (1.0 - cfg.noise) * structured + cfg.noise * cfg.base_rate;
      if (rng.next_double() < p) ds.positives[0][u].push_back(v);
    }
  }

  // Higher levels subsample the level below: containment by construction.
  for (int k = 0; k + 1 < cfg.num_levels; ++k) {
    for (int u = 0; u < cfg.num_users; ++u) {
      for (int v : ds.positives[k][u])
        if (rng.next_double() < truth.transitions[k][v]) ds.positives[k + 1][u].push_back(v);
    }
  }
  return out;
}

void write_interactions(const InteractionDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write interactions: " + path);
  // One line per pair at its highest observed level; closure at load
  // reconstructs the lower levels.
  for (int u = 0; u < ds.num_users; ++u) {
    for (int v : ds.positives[0][u]) {
      int top = 0;
      for (int k = 1; k < ds.num_levels; ++k)
        if (ds.has(k, u, v)) top = k;
      out << u << "\t" << v << "\t" << top + 1 << "\n";
    }
  }
}

void write_ground_truth(const SynthGroundTruth& truth, const std::string& path) {
  nlohmann::json j;
  j["schema"] = "argo-synth-truth-v1";
  j["tastes"] = truth.tastes;
  j["item_vectors"] = truth.item_vectors;
  j["transitions"] = truth.transitions;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write ground truth: " + path);
  out << j.dump() << "\n";
}

std::string RecoveryReport::to_csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "setting";
  if (!rows.empty())
    for (int n : rows.front().cutoffs) os << ",HR@" << n << "_mean,HR@" << n << "_std,NDCG@" << n
                                          << "_mean,NDCG@" << n << "_std";
  os << "\n";
  for (const auto& row : rows) {
    os << row.label;
    for (std::size_t i = 0; i < row.cutoffs.size(); ++i)
      os << "," << row.hr_mean[i] << "," << row.hr_std[i] << "," << row.ndcg_mean[i] << ","
         << row.ndcg_std[i];
    os << "\n";
  }
  return os.str();
}

RecoveryReport recovery_experiment(const SynthConfig& cfg,
                                   const std::vector<RecoverySetting>& settings, int num_seeds) {
  if (settings.empty()) throw ConfigError("recovery: no settings given");
  if (num_seeds < 1) throw ConfigError("recovery: num_seeds must be >= 1");

  const std::vector<int>& cutoffs = settings.front().hp.cutoffs;
  std::vector<std::vector<std::vector<double>>> hr(settings.size());    // [setting][seed][cutoff]
  std::vector<std::vector<std::vector<double>>> ndcg(settings.size());

  for (int s = 0; s < num_seeds; ++s) {
    SynthConfig seed_cfg = cfg;
    seed_cfg.seed = cfg.seed + static_cast<std::uint64_t>(s) * 7919;
    const SynthResult synth = generate(seed_cfg);
    Rng split_rng = Rng(seed_cfg.seed).derive(0x53504C49);  // "SPLI"
    const SplitDataset split = leave_one_out_split(synth.dataset, split_rng);

    for (std::size_t i = 0; i < settings.size(); ++i) {
      HyperParams hp = settings[i].hp;
      hp.seed = hp.seed + static_cast<std::uint64_t>(s) * 104729;
      Rng train_rng(hp.seed);
      const TrainResult tr = train(split, hp, train_rng, settings[i].variant);
      const EvalReport report = evaluate(tr.params, split, cutoffs);
      hr[i].push_back(report.hr);
      ndcg[i].push_back(report.ndcg);
    }
  }

  auto mean_std = [&](const std::vector<std::vector<double>>& per_seed, std::size_t c) {
    double mean = 0.0;
    for (const auto& row : per_seed) mean += row[c];
    mean /= per_seed.size();
    double var = 0.0;
    for (const auto& row : per_seed) var += (row[c] - mean) * (row[c] - mean);
    var = per_seed.size() > 1 ? var / (per_seed.size() - 1) : 0.0;
    return std::pair<double, double>(mean, std::sqrt(var));
  };

  RecoveryReport report;
  report.num_seeds = num_seeds;
  for (std::size_t i = 0; i < settings.size(); ++i) {
    RecoveryRow row;
    row.label = settings[i].label;
    row.cutoffs = cutoffs;
    for (std::size_t c = 0; c < cutoffs.size(); ++c) {
      const auto [hm, hs] = mean_std(hr[i], c);
      const auto [nm, ns] = mean_std(ndcg[i], c);
      row.hr_mean.push_back(hm);
      row.hr_std.push_back(hs);
      row.ndcg_mean.push_back(nm);
      row.ndcg_std.push_back(ns);
    }
    for (const auto& per_seed : hr[i]) row.hr_per_seed_at0.push_back(per_seed[0]);
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace argo
