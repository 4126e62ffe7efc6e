#include "argo/types.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "argo/data.hpp"

namespace argo {

bool InteractionDataset::has(int level, int user, int item) const {
  const auto& items = positives[level][user];
  return std::binary_search(items.begin(), items.end(), item);
}

std::size_t InteractionDataset::level_count(int level) const {
  std::size_t n = 0;
  for (const auto& items : positives[level]) n += items.size();
  return n;
}

std::size_t InteractionDataset::total_pairs() const {
  std::size_t n = 0;
  for (int k = 0; k < num_levels; ++k) n += level_count(k);
  return n;
}

ValidationReport validate_dataset(const InteractionDataset& ds) {
  ValidationReport report;
  auto complain = [&](std::string msg) { report.violations.push_back(std::move(msg)); };

  if (ds.num_levels < 2) complain("num_levels must be >= 2, got " + std::to_string(ds.num_levels));
  if (static_cast<int>(ds.positives.size()) != ds.num_levels)
    complain("positives has " + std::to_string(ds.positives.size()) + " levels, expected " +
             std::to_string(ds.num_levels));

  for (int k = 0; k < static_cast<int>(ds.positives.size()); ++k) {
    const auto& level = ds.positives[k];
    if (static_cast<int>(level.size()) != ds.num_users) {
      complain("level " + std::to_string(k + 1) + " has " + std::to_string(level.size()) +
               " user rows, expected " + std::to_string(ds.num_users));
      continue;
    }
    for (int u = 0; u < ds.num_users; ++u) {
      const auto& items = level[u];
      if (!std::is_sorted(items.begin(), items.end()))
        complain("level " + std::to_string(k + 1) + " user " + std::to_string(u) +
                 ": item list not sorted");
      if (std::adjacent_find(items.begin(), items.end()) != items.end())
        complain("level " + std::to_string(k + 1) + " user " + std::to_string(u) +
                 ": duplicate item");
      for (int v : items)
        if (v < 0 || v >= ds.num_items)
          complain("level " + std::to_string(k + 1) + " user " + std::to_string(u) +
                   ": item index " + std::to_string(v) + " out of range");
    }
    report.level_counts.push_back(ds.level_count(k));
  }

  // Ordinal containment: positives(k+1) ⊆ positives(k).
  for (int k = 0; k + 1 < static_cast<int>(ds.positives.size()); ++k) {
    if (static_cast<int>(ds.positives[k].size()) != ds.num_users ||
        static_cast<int>(ds.positives[k + 1].size()) != ds.num_users)
      continue;
    for (int u = 0; u < ds.num_users; ++u) {
      for (int v : ds.positives[k + 1][u]) {
        if (v >= 0 && v < ds.num_items && !ds.has(k, u, v))
          complain("containment violation: (" + std::to_string(u) + "," + std::to_string(v) +
                   ") at level " + std::to_string(k + 2) + " missing from level " +
                   std::to_string(k + 1));
      }
    }
  }
  return report;
}

void HyperParams::validate() const {
  if (d < 1) throw ConfigError("d must be >= 1");
  if (M < 1) throw ConfigError("M must be >= 1");
  if (!(w > 0)) throw ConfigError("w must be > 0");
  if (lambda.empty()) throw ConfigError("lambda must be non-empty");
  double sum = 0;
  for (double l : lambda) {
    if (l < 0) throw ConfigError("lambda entries must be >= 0");
    sum += l;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("lambda must sum to 1");
  if (!(lr > 0)) throw ConfigError("lr must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (dropout < 0 || dropout >= 1) throw ConfigError("dropout must be in [0, 1)");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (cutoffs.empty()) throw ConfigError("cutoffs must be non-empty");
  for (int n : cutoffs)
    if (n < 1) throw ConfigError("cutoffs must be >= 1");
}

void HyperParams::normalize_lambda() {
  double sum = 0;
  for (double l : lambda) sum += l;
  if (sum <= 0) throw ConfigError("lambda must have positive sum");
  for (double& l : lambda) l /= sum;
}

namespace {

HyperParams from_json_object(const nlohmann::json& j) {
  static const char* known[] = {"d",       "M",      "w",      "lambda", "lr",
                                "batch_size", "dropout", "epochs", "seed",   "cutoffs"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || (it.key() == k);
    if (!ok) throw ConfigError("unknown config key: " + it.key());
  }
  HyperParams hp;
  try {
    if (j.contains("d")) hp.d = j.at("d").get<int>();
    if (j.contains("M")) hp.M = j.at("M").get<int>();
    if (j.contains("w")) hp.w = j.at("w").get<double>();
    if (j.contains("lambda")) hp.lambda = j.at("lambda").get<std::vector<double>>();
    if (j.contains("lr")) hp.lr = j.at("lr").get<double>();
    if (j.contains("batch_size")) hp.batch_size = j.at("batch_size").get<int>();
    if (j.contains("dropout")) hp.dropout = j.at("dropout").get<double>();
    if (j.contains("epochs")) hp.epochs = j.at("epochs").get<int>();
    if (j.contains("seed")) hp.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("cutoffs")) hp.cutoffs = j.at("cutoffs").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config type error: ") + e.what());
  }
  if (hp.lambda.empty()) hp.lambda = {1.0 / 6, 4.0 / 6, 1.0 / 6};
  hp.normalize_lambda();
  hp.validate();
  return hp;
}

}  // namespace

HyperParams hyperparams_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  return from_json_object(j);
}

HyperParams load_hyperparams(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return hyperparams_from_json(ss.str());
}

std::string hyperparams_to_json(const HyperParams& hp) {
  nlohmann::json j;
  j["d"] = hp.d;
  j["M"] = hp.M;
  j["w"] = hp.w;
  j["lambda"] = hp.lambda;
  j["lr"] = hp.lr;
  j["batch_size"] = hp.batch_size;
  j["dropout"] = hp.dropout;
  j["epochs"] = hp.epochs;
  j["seed"] = hp.seed;
  j["cutoffs"] = hp.cutoffs;
  return j.dump(2);
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::single_identity: return "im";
    case Variant::independent_heads: return "cp";
  }
  return "full";
}

Variant variant_from_name(const std::string& name) {
  if (name == "full") return Variant::full;
  if (name == "im") return Variant::single_identity;
  if (name == "cp") return Variant::independent_heads;
  throw ConfigError("unknown variant: " + name);
}

bool ModelParams::all_finite() const {
  auto vec_ok = [](const std::vector<double>& v) {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  };
  for (const auto& p : P)
    if (!vec_ok(p)) return false;
  if (!vec_ok(Q)) return false;
  for (const auto& hv : h)
    if (!vec_ok(hv)) return false;
  for (const auto& t : T)
    if (!vec_ok(t)) return false;
  return true;
}

void ModelParams::assert_invariants() const {
  if (!all_finite()) throw NumericError("non-finite model parameter");
  for (const auto& t : T)
    for (double x : t)
      if (x < kTransitionFloor || x > 1.0) throw NumericError("transition prob out of [floor, 1]");
}

ModelParams init_params(const HyperParams& hp, const InteractionDataset& ds, Rng& rng,
                        Variant variant) {
  hp.validate();
  if (static_cast<int>(hp.lambda.size()) != ds.num_levels)
    throw ConfigError("lambda has " + std::to_string(hp.lambda.size()) + " entries, dataset has " +
                      std::to_string(ds.num_levels) + " levels");

  ModelParams params;
  params.num_users = ds.num_users;
  params.num_items = ds.num_items;
  params.num_levels = ds.num_levels;
  params.embed_dim = hp.d;
  params.num_identities = variant == Variant::single_identity ? 1 : hp.M;
  params.variant = variant;

  const double sigma = 0.1;
  params.P.resize(params.num_identities);
  for (auto& block : params.P) {
    block.resize(static_cast<std::size_t>(ds.num_users) * hp.d);
    for (double& x : block) x = sigma * rng.next_gaussian();
  }
  params.Q.resize(static_cast<std::size_t>(ds.num_items) * hp.d);
  for (double& x : params.Q) x = sigma * rng.next_gaussian();

  const int num_heads = params.chained() ? 1 : ds.num_levels;
  params.h.resize(num_heads);
  for (auto& hv : params.h) {
    hv.resize(hp.d);
    for (double& x : hv) x = sigma * rng.next_gaussian();
  }

  if (params.chained()) {
    const EmpiricalTransition emp = estimate_transitions(ds);
    params.T.resize(ds.num_levels - 1);
    for (int k = 0; k + 1 < ds.num_levels; ++k) {
      params.T[k].resize(ds.num_items);
      for (int v = 0; v < ds.num_items; ++v) {
        const double t = emp.defined[k][v] ? emp.p_hat[k][v] : 0.5;
        params.T[k][v] = std::clamp(t, kTransitionFloor, 1.0);
      }
    }
  }
  params.assert_invariants();
  return params;
}

}  // namespace argo
