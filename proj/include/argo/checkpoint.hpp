#pragma once

#include <string>

#include "argo/training.hpp"
#include "argo/types.hpp"

namespace argo {

inline constexpr const char* kCheckpointSchema = "argo-checkpoint-v1";

struct Checkpoint {
  HyperParams hp;
  ModelParams params;
  AdagradState state;
  int epoch = 0;
  std::uint64_t rng_state = 0;
};

std::string checkpoint_to_json(const Checkpoint& ck);
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);  // throws ConfigError on schema mismatch

}  // namespace argo
