#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "argo/types.hpp"

namespace argo::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitGeneric = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

inline constexpr const char* kVersionTag = "argo-0.1.0";

struct CommonOptions {
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;  // overrides config seed
  int threads = 1;
};

// Each command returns the run directory it created.
std::string cmd_train(const std::string& config_path, const std::string& data_path,
                      const CommonOptions& opts, const std::string& variant = "full");

std::string cmd_eval(const std::string& checkpoint_path, const std::string& data_path,
                     const std::string& split_path, const std::string& subset_spec,
                     const CommonOptions& opts);

std::string cmd_ablate(const std::string& config_path, const std::string& data_path,
                       const CommonOptions& opts);

std::string cmd_sweep_identities(const std::string& config_path, const std::string& data_path,
                                 const std::vector<int>& m_list, const CommonOptions& opts);

std::string cmd_synth(const std::string& synth_config_path, bool recovery, int num_seeds,
                      const CommonOptions& opts);

std::string cmd_case_study(const std::string& checkpoint_path, const std::string& data_path,
                           int user, const CommonOptions& opts);

// Returns true on PASS; run dir (with the report) via out parameter.
bool cmd_gradcheck(const CommonOptions& opts, std::string* run_dir = nullptr);

// Maps the exception taxonomy onto exit codes and prints the message.
int run_guarded(const std::function<int()>& body);

}  // namespace argo::cli
