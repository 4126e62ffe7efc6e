#include "argo/cli.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "argo/checkpoint.hpp"
#include "argo/data.hpp"
#include "argo/eval.hpp"
#include "argo/synth.hpp"
#include "argo/training.hpp"

namespace fs = std::filesystem;

namespace argo::cli {

namespace {

std::string utc_timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file for checksum: " + path);
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001B3ULL;
    }
  }
  return hash;
}

std::string make_run_dir(const std::string& out_dir, std::uint64_t seed) {
  fs::create_directories(out_dir);
  std::string base = out_dir + "/run_" + utc_timestamp() + "_seed" + std::to_string(seed);
  std::string dir = base;
  for (int i = 1; fs::exists(dir); ++i) dir = base + "_" + std::to_string(i);
  fs::create_directories(dir);
  return dir;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write: " + path);
  out << text;
}

struct ManifestBuilder {
  nlohmann::json j;
  std::string start = utc_timestamp();

  ManifestBuilder(const std::string& command, std::uint64_t seed) {
    j["command"] = command;
    j["version"] = kVersionTag;
    j["seed"] = seed;
  }
  void config_snapshot(const HyperParams& hp) {
    j["config"] = nlohmann::json::parse(hyperparams_to_json(hp));
  }
  void data_checksum(const std::string& path) {
    std::ostringstream os;
    os << std::hex << fnv1a_file(path);
    j["dataset_checksum"] = os.str();
    j["dataset_path"] = path;
  }
  void add_output(const std::string& path) { j["outputs"].push_back(path); }
  void finish(const std::string& path) {
    j["started_utc"] = start;
    j["finished_utc"] = utc_timestamp();
    write_text(path, j.dump(2) + "\n");
  }
};

struct PreparedRun {
  HyperParams hp;
  LoadedInteractions loaded;
  SplitDataset split;
};

PreparedRun prepare(const std::string& config_path, const std::string& data_path,
                    const CommonOptions& opts) {
  PreparedRun run;
  run.hp = load_hyperparams(config_path);
  if (opts.seed) run.hp.seed = *opts.seed;
  run.loaded = load_interactions(data_path, static_cast<int>(run.hp.lambda.size()));
  const ValidationReport vr = validate_dataset(run.loaded.dataset);
  if (!vr.ok()) throw DataError("invalid dataset: " + vr.violations.front());
  Rng split_rng = Rng(run.hp.seed).derive(0x53504C49);  // split stream
  run.split = leave_one_out_split(run.loaded.dataset, split_rng);
  return run;
}

EvalReport evaluate_with_label(const ModelParams& params, const SplitDataset& split,
                               const InteractionDataset& original, const std::vector<int>& cutoffs,
                               const std::string& subset_spec, int threads) {
  if (subset_spec.empty()) return evaluate(params, split, cutoffs, std::nullopt, threads);
  // "purchases:LO-HI" selects users by target-level positive count before splitting.
  const std::string prefix = "purchases:";
  if (subset_spec.rfind(prefix, 0) != 0)
    throw ConfigError("unknown subset spec: " + subset_spec + " (expected purchases:LO-HI)");
  const std::string range = subset_spec.substr(prefix.size());
  const std::size_t dash = range.find('-');
  if (dash == std::string::npos) throw ConfigError("subset spec needs LO-HI range");
  int lo, hi;
  try {
    lo = std::stoi(range.substr(0, dash));
    hi = std::stoi(range.substr(dash + 1));
  } catch (const std::exception&) {
    throw ConfigError("subset spec range must be integers");
  }
  const std::vector<int> users = sparse_user_subset(original, lo, hi);
  EvalReport report = evaluate(params, split, cutoffs, users, threads);
  report.subset_label = subset_spec;
  return report;
}

}  // namespace

std::string cmd_train(const std::string& config_path, const std::string& data_path,
                      const CommonOptions& opts, const std::string& variant_str) {
  const Variant variant = variant_from_name(variant_str);
  PreparedRun run = prepare(config_path, data_path, opts);
  const std::string dir = make_run_dir(opts.out_dir, run.hp.seed);

  ManifestBuilder manifest("train", run.hp.seed);
  manifest.config_snapshot(run.hp);
  manifest.data_checksum(data_path);
  manifest.j["variant"] = variant_str;

  save_id_mapping(run.loaded.mapping, dir + "/id_mapping.json");
  save_split(run.split, dir + "/split.json");

  Rng train_rng = Rng(run.hp.seed).derive(0x545241494E);  // train stream
  const TrainResult result = train(run.split, run.hp, train_rng, variant);

  Checkpoint ck;
  ck.hp = run.hp;
  ck.params = result.params;
  ck.state = result.state;
  ck.epoch = result.best_epoch;
  ck.rng_state = run.hp.seed;
  save_checkpoint(ck, dir + "/checkpoint.json");
  write_text(dir + "/history.csv", history_to_csv(result.history, run.split.train.num_levels));

  for (const char* f : {"id_mapping.json", "split.json", "checkpoint.json", "history.csv"})
    manifest.add_output(dir + "/" + f);
  manifest.finish(dir + "/manifest.json");
  return dir;
}

std::string cmd_eval(const std::string& checkpoint_path, const std::string& data_path,
                     const std::string& split_path, const std::string& subset_spec,
                     const CommonOptions& opts) {
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  const LoadedInteractions loaded =
      load_interactions(data_path, static_cast<int>(ck.hp.lambda.size()));
  const SplitDataset split = load_split(loaded.dataset, split_path);
  if (split.train.num_users != ck.params.num_users ||
      split.train.num_items != ck.params.num_items)
    throw ConfigError("checkpoint/data shape mismatch");

  const std::string dir = make_run_dir(opts.out_dir, ck.hp.seed);
  ManifestBuilder manifest("eval", ck.hp.seed);
  manifest.config_snapshot(ck.hp);
  manifest.data_checksum(data_path);
  if (!subset_spec.empty()) manifest.j["subset"] = subset_spec;

  const EvalReport report = evaluate_with_label(ck.params, split, loaded.dataset, ck.hp.cutoffs,
                                                subset_spec, opts.threads);
  write_text(dir + "/report.json", report_to_json(report) + "\n");
  write_text(dir + "/report.csv", report_to_csv(report));
  manifest.add_output(dir + "/report.json");
  manifest.add_output(dir + "/report.csv");
  manifest.finish(dir + "/manifest.json");
  return dir;
}

std::string cmd_ablate(const std::string& config_path, const std::string& data_path,
                       const CommonOptions& opts) {
  PreparedRun run = prepare(config_path, data_path, opts);
  const InteractionDataset& ds = run.loaded.dataset;
  const int K = ds.num_levels;

  const std::string dir = make_run_dir(opts.out_dir, run.hp.seed);
  ManifestBuilder manifest("ablate", run.hp.seed);
  manifest.config_snapshot(run.hp);
  manifest.data_checksum(data_path);

  struct Row {
    std::string label;
    EvalReport report;
  };
  std::vector<Row> rows;

  auto run_one = [&](const std::string& label, const InteractionDataset& data,
                     const HyperParams& hp, Variant variant) {
    SplitDataset split;
    if (data.num_levels == K) {
      split = run.split;
    } else {
      // Target-level sets are untouched by drop_levels, so the same split
      // stream holds out the same items.
      Rng split_rng = Rng(hp.seed).derive(0x53504C49);
      split = leave_one_out_split(data, split_rng);
    }
    Rng train_rng = Rng(hp.seed).derive(0x545241494E);
    const TrainResult result = train(split, hp, train_rng, variant);
    rows.push_back({label, evaluate(result.params, split, hp.cutoffs, std::nullopt, opts.threads)});
    std::cerr << "[ablate] " << label << " done\n";
  };

  run_one("argo", ds, run.hp, Variant::full);
  run_one("argo-im", ds, run.hp, Variant::single_identity);
  run_one("argo-cp", ds, run.hp, Variant::independent_heads);

  if (K >= 3) {
    // Single-auxiliary variants drop one behavior level; lambda renormalizes
    // over the kept levels.
    auto dropped_hp = [&](const std::vector<bool>& keep) {
      HyperParams hp = run.hp;
      hp.lambda.clear();
      for (int k = 0; k < K; ++k)
        if (keep[k]) hp.lambda.push_back(run.hp.lambda[k]);
      hp.normalize_lambda();
      return hp;
    };
    {
      std::vector<bool> keep(K, true);
      keep[K - 2] = false;  // drop the cart level
      run_one("argo-c", drop_levels(ds, keep), dropped_hp(keep), Variant::full);
    }
    {
      std::vector<bool> keep(K, true);
      keep[0] = false;  // drop the view level
      run_one("argo-v", drop_levels(ds, keep), dropped_hp(keep), Variant::full);
    }
    {
      // Target behavior only: lambda collapses onto the target level.
      HyperParams hp = run.hp;
      hp.lambda.assign(K, 0.0);
      hp.lambda[K - 1] = 1.0;
      run_one("argo-cv", ds, hp, Variant::full);
    }
  } else {
    std::cerr << "[ablate] data variants need 3 behavior levels, skipping (K=" << K << ")\n";
  }

  std::ostringstream csv;
  csv.precision(10);
  csv << "model";
  for (int n : run.hp.cutoffs) csv << ",HR@" << n;
  for (int n : run.hp.cutoffs) csv << ",NDCG@" << n;
  csv << "\n";
  for (const auto& row : rows) {
    csv << row.label;
    for (double x : row.report.hr) csv << "," << x;
    for (double x : row.report.ndcg) csv << "," << x;
    csv << "\n";
  }
  write_text(dir + "/ablation.csv", csv.str());
  manifest.add_output(dir + "/ablation.csv");
  manifest.finish(dir + "/manifest.json");
  return dir;
}

std::string cmd_sweep_identities(const std::string& config_path, const std::string& data_path,
                                 const std::vector<int>& m_list, const CommonOptions& opts) {
  if (m_list.empty()) throw ConfigError("sweep: M list must be non-empty");
  PreparedRun run = prepare(config_path, data_path, opts);

  const std::string dir = make_run_dir(opts.out_dir, run.hp.seed);
  ManifestBuilder manifest("sweep-identities", run.hp.seed);
  manifest.config_snapshot(run.hp);
  manifest.data_checksum(data_path);

  std::ostringstream csv;
  csv.precision(10);
  csv << "M,HR@100,train_seconds\n";
  for (int m : m_list) {
    HyperParams hp = run.hp;
    hp.M = m;
    Rng train_rng = Rng(hp.seed).derive(0x545241494E);
    const auto t0 = std::chrono::steady_clock::now();
    const TrainResult result = train(run.split, hp, train_rng, Variant::full);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const EvalReport report =
        evaluate(result.params, run.split, {100}, std::nullopt, opts.threads);
    csv << m << "," << report.hr[0] << "," << secs << "\n";
    std::cerr << "[sweep] M=" << m << " HR@100=" << report.hr[0] << " (" << secs << "s)\n";
  }
  write_text(dir + "/sweep.csv", csv.str());
  manifest.add_output(dir + "/sweep.csv");
  manifest.finish(dir + "/manifest.json");
  return dir;
}

namespace {

SynthConfig synth_config_from_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open synth config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth config parse error: ") + e.what());
  }
  SynthConfig cfg;
  static const char* known[] = {"num_users",     "num_items",  "latent_dim",    "num_tastes",
                                "num_levels",    "link_scale", "link_offset",   "base_rate",
                                "noise",         "transition_lo", "transition_hi", "seed"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || (it.key() == k);
    if (!ok) throw ConfigError("unknown synth config key: " + it.key());
  }
  try {
    if (j.contains("num_users")) cfg.num_users = j["num_users"].get<int>();
    if (j.contains("num_items")) cfg.num_items = j["num_items"].get<int>();
    if (j.contains("latent_dim")) cfg.latent_dim = j["latent_dim"].get<int>();
    if (j.contains("num_tastes")) cfg.num_tastes = j["num_tastes"].get<int>();
    if (j.contains("num_levels")) cfg.num_levels = j["num_levels"].get<int>();
    if (j.contains("link_scale")) cfg.link_scale = j["link_scale"].get<double>();
    if (j.contains("link_offset")) cfg.link_offset = j["link_offset"].get<double>();
    if (j.contains("base_rate")) cfg.base_rate = j["base_rate"].get<double>();
    if (j.contains("noise")) cfg.noise = j["noise"].get<double>();
    if (j.contains("transition_lo")) cfg.transition_lo = j["transition_lo"].get<double>();
    if (j.contains("transition_hi")) cfg.transition_hi = j["transition_hi"].get<double>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth config type error: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace

std::string cmd_synth(const std::string& synth_config_path, bool recovery, int num_seeds,
                      const CommonOptions& opts) {
  SynthConfig cfg = synth_config_path.empty() ? SynthConfig{}
                                              : synth_config_from_json(synth_config_path);
  if (opts.seed) cfg.seed = *opts.seed;

  const std::string dir = make_run_dir(opts.out_dir, cfg.seed);
  ManifestBuilder manifest("synth", cfg.seed);

  const SynthResult result = generate(cfg);
  write_interactions(result.dataset, dir + "/interactions.tsv");
  write_ground_truth(result.truth, dir + "/ground_truth.json");
  manifest.add_output(dir + "/interactions.tsv");
  manifest.add_output(dir + "/ground_truth.json");

  if (recovery) {
    HyperParams hp;
    hp.d = 16;
    hp.w = 0.05;
    hp.lambda.assign(cfg.num_levels, 1.0);
    hp.normalize_lambda();
    hp.batch_size = 64;
    hp.dropout = 0.0;
    hp.epochs = 40;
    hp.seed = cfg.seed;
    hp.cutoffs = {10, 50, 100, 200};

    std::vector<RecoverySetting> settings;
    for (int m : {1, cfg.num_tastes}) {
      RecoverySetting s;
      s.label = "M=" + std::to_string(m);
      s.hp = hp;
      s.hp.M = m;
      settings.push_back(s);
    }
    RecoverySetting cp;
    cp.label = "cp";
    cp.hp = hp;
    cp.hp.M = cfg.num_tastes;
    cp.variant = Variant::independent_heads;
    settings.push_back(cp);

    const RecoveryReport report = recovery_experiment(cfg, settings, num_seeds);
    write_text(dir + "/recovery.csv", report.to_csv());
    manifest.add_output(dir + "/recovery.csv");
  }
  manifest.finish(dir + "/manifest.json");
  return dir;
}

std::string cmd_case_study(const std::string& checkpoint_path, const std::string& data_path,
                           int user, const CommonOptions& opts) {
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  const LoadedInteractions loaded =
      load_interactions(data_path, static_cast<int>(ck.hp.lambda.size()));
  if (user < 0 || user >= loaded.dataset.num_users)
    throw DataError("case study: unknown user " + std::to_string(user));
  const std::vector<int>& positives =
      loaded.dataset.positives[loaded.dataset.num_levels - 1][user];
  if (positives.empty()) throw DataError("case study: user has no target-level positives");

  const std::string dir = make_run_dir(opts.out_dir, ck.hp.seed);
  ManifestBuilder manifest("case-study", ck.hp.seed);
  manifest.data_checksum(data_path);
  manifest.j["user"] = user;

  const CaseStudy cs = case_study(ck.params, user, positives);
  case_study_export(cs, dir + "/identity_similarity.csv", dir + "/identity_likelihood.csv");
  manifest.add_output(dir + "/identity_similarity.csv");
  manifest.add_output(dir + "/identity_likelihood.csv");
  manifest.finish(dir + "/manifest.json");
  return dir;
}

bool cmd_gradcheck(const CommonOptions& opts, std::string* run_dir) {
  const std::uint64_t seed = opts.seed.value_or(11);
  const std::string dir = make_run_dir(opts.out_dir, seed);
  if (run_dir) *run_dir = dir;
  ManifestBuilder manifest("gradcheck", seed);

  std::ostringstream report;
  bool all_pass = true;
  int instance = 0;
  for (Variant variant : {Variant::full, Variant::single_identity, Variant::independent_heads}) {
    for (int K : {2, 3}) {
      for (int M : {1, 3}) {
        SynthConfig cfg;
        cfg.num_users = 8;
        cfg.num_items = 12;
        cfg.latent_dim = 4;
        cfg.num_tastes = 2;
        cfg.num_levels = K;
        cfg.seed = seed + static_cast<std::uint64_t>(++instance);
        const SynthResult synth = generate(cfg);

        HyperParams hp;
        hp.d = 5;
        hp.M = M;
        hp.w = 0.1;
        hp.lambda.assign(K, 1.0);
        hp.normalize_lambda();
        hp.dropout = 0.0;
        hp.seed = cfg.seed;

        Rng rng(hp.seed);
        const ModelParams params = init_params(hp, synth.dataset, rng, variant);
        std::vector<int> batch;
        for (int u = 0; u < synth.dataset.num_users; ++u) batch.push_back(u);
        const FiniteDifferenceReport fd =
            finite_difference_check(params, batch, synth.dataset, hp);
        all_pass = all_pass && fd.pass;
        report << "variant=" << variant_name(variant) << " K=" << K << " M=" << M << ": "
               << fd.to_string();
      }
    }
  }
  write_text(dir + "/gradcheck.txt", report.str());
  manifest.add_output(dir + "/gradcheck.txt");
  manifest.j["pass"] = all_pass;
  manifest.finish(dir + "/manifest.json");
  std::cout << (all_pass ? "PASS" : "FAIL") << "\n";
  return all_pass;
}

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitGeneric;
  }
}

}  // namespace argo::cli
