#include "argo/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace argo {

namespace {

long long parse_ll(std::string_view field, std::size_t line_no, const std::string& origin) {
  long long value = 0;
  const auto* begin = field.data();
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw DataError(origin + ":" + std::to_string(line_no) + ": non-integer field '" +
                    std::string(field) + "'");
  return value;
}

}  // namespace

LoadedInteractions parse_interactions(const std::string& text, int expected_levels,
                                      const std::string& origin) {
  LoadedInteractions out;
  auto& mapping = out.mapping;
  std::vector<std::array<int, 3>> records;  // (user, item, level-1)
  int max_level = 0;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line(text.data() + pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
    if (t1 == std::string_view::npos || t2 == std::string_view::npos ||
        line.find('\t', t2 + 1) != std::string_view::npos)
      throw DataError(origin + ":" + std::to_string(line_no) +
                      ": expected 3 tab-separated fields");

    const long long user_id = parse_ll(line.substr(0, t1), line_no, origin);
    const long long item_id = parse_ll(line.substr(t1 + 1, t2 - t1 - 1), line_no, origin);
    const long long level = parse_ll(line.substr(t2 + 1), line_no, origin);
    if (level < 1 || (expected_levels > 0 && level > expected_levels))
      throw DataError(origin + ":" + std::to_string(line_no) + ": level " +
                      std::to_string(level) + " out of range");

    auto user_it = mapping.user_to_index.emplace(user_id, static_cast<int>(mapping.user_to_index.size()));
    auto item_it = mapping.item_to_index.emplace(item_id, static_cast<int>(mapping.item_to_index.size()));
    records.push_back({user_it.first->second, item_it.first->second, static_cast<int>(level - 1)});
    max_level = std::max(max_level, static_cast<int>(level));
  }

  auto& ds = out.dataset;
  ds.num_users = static_cast<int>(mapping.user_to_index.size());
  ds.num_items = static_cast<int>(mapping.item_to_index.size());
  ds.num_levels = expected_levels > 0 ? expected_levels : std::max(max_level, 2);
  ds.positives.assign(ds.num_levels, std::vector<std::vector<int>>(ds.num_users));

  // Upward closure: a record at level k lands at every level <= k.
  for (const auto& [u, v, k] : records)
    for (int j = 0; j <= k; ++j) ds.positives[j][u].push_back(v);

  for (auto& level : ds.positives)
    for (auto& items : level) {
      std::sort(items.begin(), items.end());
      items.erase(std::unique(items.begin(), items.end()), items.end());
    }
  return out;
}

LoadedInteractions load_interactions(const std::string& path, int expected_levels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open interaction file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_interactions(ss.str(), expected_levels, path);
}

void save_id_mapping(const IdMapping& mapping, const std::string& path) {
  nlohmann::json j;
  auto dump = [](const std::unordered_map<long long, int>& m) {
    nlohmann::json obj = nlohmann::json::object();
    std::vector<std::pair<long long, int>> sorted(m.begin(), m.end());
    std::sort(sorted.begin(), sorted.end());
    for (const auto& [id, idx] : sorted) obj[std::to_string(id)] = idx;
    return obj;
  };
  j["users"] = dump(mapping.user_to_index);
  j["items"] = dump(mapping.item_to_index);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write id mapping: " + path);
  out << j.dump(2) << "\n";
}

SplitDataset leave_one_out_split(const InteractionDataset& ds, Rng& rng) {
  SplitDataset split;
  split.train = ds;
  split.test_items.assign(ds.num_users, -1);
  split.valid_items.assign(ds.num_users, -1);

  const int target = ds.num_levels - 1;
  for (int u = 0; u < ds.num_users; ++u) {
    auto& items = split.train.positives[target][u];
    if (items.size() < 3) continue;
    const std::size_t ti = static_cast<std::size_t>(rng.next_below(items.size()));
    const int test_item = items[ti];
    items.erase(items.begin() + ti);
    const std::size_t vi = static_cast<std::size_t>(rng.next_below(items.size()));
    const int valid_item = items[vi];
    items.erase(items.begin() + vi);
    split.test_items[u] = test_item;
    split.valid_items[u] = valid_item;
  }
  return split;
}

std::string split_to_json(const SplitDataset& split) {
  nlohmann::json j;
  j["schema"] = "argo-split-v1";
  j["test_items"] = split.test_items;
  j["valid_items"] = split.valid_items;
  return j.dump();
}

void save_split(const SplitDataset& split, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write split file: " + path);
  out << split_to_json(split) << "\n";
}

SplitDataset load_split(const InteractionDataset& ds, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open split file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("split parse error: ") + e.what());
  }
  if (j.value("schema", "") != std::string("argo-split-v1"))
    throw DataError("split file schema mismatch: " + path);

  SplitDataset split;
  split.train = ds;
  split.test_items = j.at("test_items").get<std::vector<int>>();
  split.valid_items = j.at("valid_items").get<std::vector<int>>();
  if (static_cast<int>(split.test_items.size()) != ds.num_users ||
      static_cast<int>(split.valid_items.size()) != ds.num_users)
    throw DataError("split file user count mismatch");

  const int target = ds.num_levels - 1;
  for (int u = 0; u < ds.num_users; ++u) {
    for (int held : {split.test_items[u], split.valid_items[u]}) {
      if (held < 0) continue;
      auto& items = split.train.positives[target][u];
      auto it = std::lower_bound(items.begin(), items.end(), held);
      if (it == items.end() || *it != held)
        throw DataError("split names item " + std::to_string(held) + " not held by user " +
                        std::to_string(u));
      items.erase(it);
    }
  }
  return split;
}

EmpiricalTransition estimate_transitions(const InteractionDataset& ds) {
  EmpiricalTransition out;
  const int K = ds.num_levels;
  out.p_hat.assign(K - 1, std::vector<double>(ds.num_items, 0.0));
  out.defined.assign(K - 1, std::vector<bool>(ds.num_items, false));
  out.support.assign(K - 1, std::vector<int>(ds.num_items, 0));

  for (int k = 0; k + 1 < K; ++k) {
    std::vector<int> both(ds.num_items, 0);
    for (int u = 0; u < ds.num_users; ++u) {
      for (int v : ds.positives[k][u]) {
        ++out.support[k][v];
        if (ds.has(k + 1, u, v)) ++both[v];
      }
    }
    for (int v = 0; v < ds.num_items; ++v) {
      if (out.support[k][v] > 0) {
        out.p_hat[k][v] = static_cast<double>(both[v]) / out.support[k][v];
        out.defined[k][v] = true;
      }
    }
  }
  return out;
}

std::vector<int> sparse_user_subset(const InteractionDataset& ds, int lo, int hi) {
  if (lo > hi) throw ConfigError("sparse subset range: lo > hi");
  std::vector<int> users;
  const int target = ds.num_levels - 1;
  for (int u = 0; u < ds.num_users; ++u) {
    const int n = static_cast<int>(ds.positives[target][u].size());
    if (n >= lo && n <= hi) users.push_back(u);
  }
  return users;
}

InteractionDataset drop_levels(const InteractionDataset& ds, const std::vector<bool>& keep) {
  if (static_cast<int>(keep.size()) != ds.num_levels)
    throw ConfigError("drop_levels mask size mismatch");
  if (!keep[ds.num_levels - 1]) throw ConfigError("target level cannot be dropped");
  InteractionDataset out;
  out.num_users = ds.num_users;
  out.num_items = ds.num_items;
  for (int k = 0; k < ds.num_levels; ++k)
    if (keep[k]) out.positives.push_back(ds.positives[k]);
  out.num_levels = static_cast<int>(out.positives.size());
  return out;
}

}  // namespace argo
