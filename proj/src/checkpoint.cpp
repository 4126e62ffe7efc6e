#include "argo/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace argo {

std::string checkpoint_to_json(const Checkpoint& ck) {
  nlohmann::json j;
  j["schema"] = kCheckpointSchema;
  j["hyperparams"] = nlohmann::json::parse(hyperparams_to_json(ck.hp));
  j["epoch"] = ck.epoch;
  j["rng_state"] = ck.rng_state;

  const ModelParams& p = ck.params;
  nlohmann::json jp;
  jp["num_users"] = p.num_users;
  jp["num_items"] = p.num_items;
  jp["num_levels"] = p.num_levels;
  jp["embed_dim"] = p.embed_dim;
  jp["num_identities"] = p.num_identities;
  jp["variant"] = variant_name(p.variant);
  jp["P"] = p.P;  // row-major per identity block
  jp["Q"] = p.Q;
  jp["h"] = p.h;
  jp["T"] = p.T;
  j["params"] = jp;

  nlohmann::json js;
  js["P"] = ck.state.P;
  js["Q"] = ck.state.Q;
  js["h"] = ck.state.h;
  js["T"] = ck.state.T;
  js["eps"] = ck.state.eps;
  j["adagrad"] = js;
  return j.dump();
}

Checkpoint checkpoint_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint parse error: ") + e.what());
  }
  if (j.value("schema", "") != std::string(kCheckpointSchema))
    throw ConfigError("checkpoint schema mismatch: expected " + std::string(kCheckpointSchema) +
                      ", got '" + j.value("schema", "<missing>") + "'");

  Checkpoint ck;
  try {
    ck.hp = hyperparams_from_json(j.at("hyperparams").dump());
    ck.epoch = j.at("epoch").get<int>();
    ck.rng_state = j.at("rng_state").get<std::uint64_t>();

    const auto& jp = j.at("params");
    ck.params.num_users = jp.at("num_users").get<int>();
    ck.params.num_items = jp.at("num_items").get<int>();
    ck.params.num_levels = jp.at("num_levels").get<int>();
    ck.params.embed_dim = jp.at("embed_dim").get<int>();
    ck.params.num_identities = jp.at("num_identities").get<int>();
    ck.params.variant = variant_from_name(jp.at("variant").get<std::string>());
    ck.params.P = jp.at("P").get<std::vector<std::vector<double>>>();
    ck.params.Q = jp.at("Q").get<std::vector<double>>();
    ck.params.h = jp.at("h").get<std::vector<std::vector<double>>>();
    ck.params.T = jp.at("T").get<std::vector<std::vector<double>>>();

    const auto& js = j.at("adagrad");
    ck.state.P = js.at("P").get<std::vector<std::vector<double>>>();
    ck.state.Q = js.at("Q").get<std::vector<double>>();
    ck.state.h = js.at("h").get<std::vector<std::vector<double>>>();
    ck.state.T = js.at("T").get<std::vector<std::vector<double>>>();
    ck.state.eps = js.at("eps").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint field error: ") + e.what());
  }
  ck.params.assert_invariants();
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out << checkpoint_to_json(ck) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace argo
