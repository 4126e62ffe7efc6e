#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "argo/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"argo: multi-behavior recommender with identity matching and chain prediction"};
  app.require_subcommand(1);

  std::string config, data, out = "runs", checkpoint, split, subset, variant = "full";
  std::string synth_config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1, user = -1, num_seeds = 5;
  bool recovery = false;
  std::vector<int> m_list;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", out, "output directory (a run directory is created inside)");
    cmd->add_option("--threads", threads, "worker threads for evaluation (default 1)");
    cmd->add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
      seed_set = true;
    });
  };

  CLI::App* train = app.add_subcommand("train", "train a model and keep the best-validation checkpoint");
  train->add_option("--config", config, "hyperparameter JSON")->required();
  train->add_option("--data", data, "interaction TSV (user\\titem\\tlevel)")->required();
  train->add_option("--variant", variant, "model variant: full | im | cp");
  add_common(train);

  CLI::App* eval_cmd = app.add_subcommand("eval", "rank held-out items and report HR/NDCG");
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint JSON")->required();
  eval_cmd->add_option("--data", data, "interaction TSV")->required();
  eval_cmd->add_option("--split", split, "split JSON written by train")->required();
  eval_cmd->add_option("--subset", subset, "user subset, e.g. purchases:5-8");
  add_common(eval_cmd);

  CLI::App* ablate = app.add_subcommand("ablate", "train and compare all model/data variants");
  ablate->add_option("--config", config)->required();
  ablate->add_option("--data", data)->required();
  add_common(ablate);

  CLI::App* sweep = app.add_subcommand("sweep-identities", "HR@100 and runtime per identity count");
  sweep->add_option("--config", config)->required();
  sweep->add_option("--data", data)->required();
  sweep->add_option("--m-list", m_list, "identity counts to sweep")->required();
  add_common(sweep);

  CLI::App* synth = app.add_subcommand("synth", "generate planted-structure synthetic data");
  synth->add_option("--config", synth_config, "synth config JSON (defaults when omitted)");
  synth->add_flag("--recovery", recovery, "also run the identity/chain recovery experiment");
  synth->add_option("--seeds", num_seeds, "seeds for the recovery experiment (default 5)");
  add_common(synth);

  CLI::App* cs = app.add_subcommand("case-study", "export identity similarity and likelihood matrices");
  cs->add_option("--checkpoint", checkpoint)->required();
  cs->add_option("--data", data)->required();
  cs->add_option("--user", user, "dense user index")->required();
  add_common(cs);

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  add_common(gradcheck);

  CLI11_PARSE(app, argc, argv);

  argo::cli::CommonOptions opts;
  opts.out_dir = out;
  opts.threads = threads;
  if (seed_set) opts.seed = seed;

  return argo::cli::run_guarded([&]() -> int {
    std::string dir;
    if (train->parsed()) dir = argo::cli::cmd_train(config, data, opts, variant);
    if (eval_cmd->parsed()) dir = argo::cli::cmd_eval(checkpoint, data, split, subset, opts);
    if (ablate->parsed()) dir = argo::cli::cmd_ablate(config, data, opts);
    if (sweep->parsed()) dir = argo::cli::cmd_sweep_identities(config, data, m_list, opts);
    if (synth->parsed()) dir = argo::cli::cmd_synth(synth_config, recovery, num_seeds, opts);
    if (cs->parsed()) dir = argo::cli::cmd_case_study(checkpoint, data, user, opts);
    if (gradcheck->parsed())
      return argo::cli::cmd_gradcheck(opts, &dir) ? argo::cli::kExitOk : argo::cli::kExitNumeric;
    std::cout << dir << "\n";
    return argo::cli::kExitOk;
  });
}
