#include "socd/env/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace socd::env {

using nlohmann::json;

int EnvConfig::max_deadline() const {
  return deadlines.empty() ? 0 : *std::max_element(deadlines.begin(), deadlines.end());
}

namespace {

void check_matrix(const Matrix2& m, std::size_t n, const std::string& what) {
  if (m.size() != n) throw ConfigError(what + ": expected " + std::to_string(n) + " rows");
  for (std::size_t r = 0; r < n; ++r) {
    if (m[r].size() != n) throw ConfigError(what + ": row " + std::to_string(r) + " has wrong length");
    double sum = 0.0;
    for (double p : m[r]) {
      if (!(p >= 0.0)) throw ConfigError(what + ": negative or NaN probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw ConfigError(what + ": row " + std::to_string(r) + " sums to " + std::to_string(sum));
    }
  }
}

}  // namespace

void EnvConfig::validate() const {
  if (num_users <= 0) throw ConfigError("num_users must be positive");
  const auto n = static_cast<std::size_t>(num_users);
  if (deadlines.size() != n || weights.size() != n || arrival_rates.size() != n ||
      distances.size() != n || channel_transition.size() != n) {
    throw ConfigError("per-user arrays must all have length num_users");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (deadlines[i] < 1) throw ConfigError("deadlines must be >= 1");
    if (!(weights[i] > 0.0)) throw ConfigError("weights must be > 0");
    if (!(arrival_rates[i] >= 0.0)) throw ConfigError("arrival_rates must be >= 0");
    if (!(distances[i] > 0.0)) throw ConfigError("distances must be > 0");
  }
  if (channel_states.empty()) throw ConfigError("channel_states must be non-empty");
  for (double c : channel_states) {
    if (!(c > 0.0)) throw ConfigError("channel_states must be > 0");
  }
  for (std::size_t i = 0; i < n; ++i) {
    check_matrix(channel_transition[i], channel_states.size(),
                 "channel_transition[" + std::to_string(i) + "]");
  }
  if (!(v_max > 0.0)) throw ConfigError("v_max must be > 0");
  if (!(budget_E0 >= 0.0)) throw ConfigError("budget_E0 must be >= 0");
  if (episode_len <= 0) throw ConfigError("episode_len must be positive");
}

int MultiHopConfig::max_path_len() const {
  int j = 0;
  for (const auto& r : routes) j = std::max(j, static_cast<int>(r.size()));
  return j;
}

std::vector<std::vector<int>> MultiHopConfig::incidence(int flow) const {
  const int big_j = max_path_len();
  std::vector<std::vector<int>> h(big_j, std::vector<int>(num_nodes, 0));
  const auto& route = routes.at(flow);
  for (std::size_t j = 0; j < route.size(); ++j) h[j][route[j]] = 1;
  return h;
}

void MultiHopConfig::validate() const {
  base.validate();
  if (num_nodes <= 0) throw ConfigError("num_nodes must be positive");
  if (routes.size() != static_cast<std::size_t>(base.num_users)) {
    throw ConfigError("one route per flow required");
  }
  for (std::size_t i = 0; i < routes.size(); ++i) {
    if (routes[i].empty()) throw ConfigError("route " + std::to_string(i) + " is empty");
    for (int k : routes[i]) {
      if (k < 0 || k >= num_nodes) throw ConfigError("route node index out of range");
    }
    // Hop j keeps lifetimes 0..tau_i-j+1, so a path longer than tau_i+1 has empty hops.
    if (static_cast<int>(routes[i].size()) > base.deadlines[i] + 1) {
      throw ConfigError("route " + std::to_string(i) + " is longer than its deadline allows");
    }
  }
  if (node_budgets.size() != static_cast<std::size_t>(num_nodes)) {
    throw ConfigError("node_budgets must have num_nodes entries");
  }
  for (double b : node_budgets) {
    if (!(b >= 0.0)) throw ConfigError("node budgets must be >= 0");
  }
  if (node_channel_transition.size() != static_cast<std::size_t>(num_nodes)) {
    throw ConfigError("node_channel_transition must have num_nodes entries");
  }
  for (std::size_t k = 0; k < node_channel_transition.size(); ++k) {
    check_matrix(node_channel_transition[k], base.channel_states.size(),
                 "node_channel_transition[" + std::to_string(k) + "]");
  }
}

Matrix2 sticky_transition(std::size_t num_states, double stay) {
  Matrix2 m(num_states, Vec(num_states, 0.0));
  if (num_states == 1) {
    m[0][0] = 1.0;
    return m;
  }
  const double move = (1.0 - stay) / static_cast<double>(num_states - 1);
  for (std::size_t r = 0; r < num_states; ++r) {
    for (std::size_t c = 0; c < num_states; ++c) m[r][c] = r == c ? stay : move;
  }
  return m;
}

namespace {

EnvConfig four_user(std::vector<int> deadlines) {
  EnvConfig c;
  c.num_users = 4;
  c.deadlines = std::move(deadlines);
  c.weights = {4, 2, 1, 4};
  c.arrival_rates = {3, 2, 4, 2};
  c.distances = Vec(4, 1.0);
  c.channel_transition.assign(4, sticky_transition(c.channel_states.size()));
  return c;
}

}  // namespace

EnvConfig preset_single(const std::string& name) {
  if (name == "poisson-1hop") {
    EnvConfig c = four_user({4, 4, 4, 6});
    c.budget_E0 = 10.0;
    return c;
  }
  if (name == "poisson-100user") {
    // Per-user parameters drawn once from the published mean/std summaries.
    EnvConfig c;
    c.num_users = 100;
    Rng rng(2024);
    std::normal_distribution<double> tau(3.39, 1.75), w(3.09, 1.46), rate(3.64, 1.18);
    for (int i = 0; i < c.num_users; ++i) {
      c.deadlines.push_back(std::max(1, static_cast<int>(std::lround(tau(rng)))));
      c.weights.push_back(std::max(0.1, w(rng)));
      c.arrival_rates.push_back(std::max(0.0, rate(rng)));
    }
    c.distances = Vec(100, 1.0);
    c.channel_transition.assign(100, sticky_transition(c.channel_states.size()));
    c.budget_E0 = 300.0;
    return c;
  }
  if (is_multihop_preset(name)) return preset_multihop(name).base;
  throw ConfigError("unknown preset: " + name);
}

bool is_multihop_preset(const std::string& name) {
  return name == "poisson-2hop" || name == "poisson-3hop";
}

MultiHopConfig preset_multihop(const std::string& name) {
  MultiHopConfig m;
  if (name == "poisson-2hop") {
    m.base = four_user({5, 5, 5, 7});
    m.num_nodes = 5;
    m.routes = {{0, 1}, {2, 1}, {4, 3}, {3, 4}};
  } else if (name == "poisson-3hop") {
    m.base = four_user({6, 6, 6, 8});
    m.num_nodes = 6;
    m.routes = {{0, 1, 4}, {2, 1, 4}, {4, 3, 0}, {3, 4, 5}};
  } else {
    throw ConfigError("unknown multi-hop preset: " + name);
  }
  m.node_budgets = Vec(m.num_nodes, 5.0);
  m.base.budget_E0 = 5.0 * m.num_nodes;
  m.node_channel_transition.assign(m.num_nodes, sticky_transition(m.base.channel_states.size()));
  return m;
}

void AnyEnvConfig::validate() const {
  if (multihop) multihop->validate();
  else single.validate();
}

double AnyEnvConfig::total_budget() const {
  if (!multihop) return single.budget_E0;
  double s = 0.0;
  for (double b : multihop->node_budgets) s += b;
  return s;
}

Vec AnyEnvConfig::node_budgets() const {
  if (!multihop) return {single.budget_E0};
  return multihop->node_budgets;
}

void AnyEnvConfig::set_total_budget(double total) {
  if (!multihop) {
    single.budget_E0 = total;
    return;
  }
  const double old = total_budget();
  for (double& b : multihop->node_budgets) {
    b = old > 0.0 ? b * total / old : total / static_cast<double>(multihop->num_nodes);
  }
  multihop->base.budget_E0 = total;
}

json to_json(const EnvConfig& c) {
  return json{{"num_users", c.num_users},
              {"deadlines", c.deadlines},
              {"weights", c.weights},
              {"arrival_rates", c.arrival_rates},
              {"channel_states", c.channel_states},
              {"channel_transition", c.channel_transition},
              {"distances", c.distances},
              {"v_max", c.v_max},
              {"budget_E0", c.budget_E0},
              {"partial_obs", c.partial_obs},
              {"episode_len", c.episode_len},
              {"seed", c.seed}};
}

json to_json(const AnyEnvConfig& c) {
  json root{{"env", to_json(c.base())}};
  if (c.multihop) {
    json routes = json::array();
    for (const auto& r : c.multihop->routes) {
      json one = json::array();
      for (int k : r) one.push_back(k + 1);  // files use 1-based node ids
      routes.push_back(one);
    }
    root["multihop"] = json{{"num_nodes", c.multihop->num_nodes},
                            {"routes", routes},
                            {"node_budgets", c.multihop->node_budgets},
                            {"node_channel_transition", c.multihop->node_channel_transition}};
  }
  return root;
}

namespace {

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

// Accepts either one matrix (broadcast) or a list of matrices.
std::vector<Matrix2> read_transitions(const json& j, std::size_t count) {
  if (!j.is_array() || j.empty()) throw ConfigError("transition matrix must be a non-empty array");
  if (j[0].is_array() && !j[0].empty() && j[0][0].is_array()) {
    return j.get<std::vector<Matrix2>>();
  }
  return std::vector<Matrix2>(count, j.get<Matrix2>());
}

}  // namespace

EnvConfig env_from_json(const json& j) {
  try {
    EnvConfig c;
    if (j.contains("preset")) c = preset_single(j.at("preset").get<std::string>());
    maybe(j, "num_users", c.num_users);
    maybe(j, "deadlines", c.deadlines);
    maybe(j, "weights", c.weights);
    maybe(j, "arrival_rates", c.arrival_rates);
    if (j.contains("channel_states")) {
      c.channel_states = j.at("channel_states").get<Vec>();
      c.channel_transition.assign(c.num_users, sticky_transition(c.channel_states.size()));
    }
    if (j.contains("channel_transition")) {
      c.channel_transition = read_transitions(j.at("channel_transition"), c.num_users);
    }
    if (c.channel_transition.empty()) {
      c.channel_transition.assign(c.num_users, sticky_transition(c.channel_states.size()));
    }
    maybe(j, "distances", c.distances);
    if (c.distances.empty()) c.distances = Vec(c.num_users, 1.0);
    maybe(j, "v_max", c.v_max);
    maybe(j, "budget_E0", c.budget_E0);
    maybe(j, "partial_obs", c.partial_obs);
    maybe(j, "episode_len", c.episode_len);
    maybe(j, "seed", c.seed);
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("env config: ") + e.what());
  }
}

AnyEnvConfig any_env_from_json(const json& root) {
  if (!root.is_object() || !root.contains("env")) throw ConfigError("config needs an \"env\" object");
  AnyEnvConfig out;
  const json& env = root.at("env");
  const std::string preset = env.value("preset", std::string{});
  std::optional<MultiHopConfig> mh;
  if (!preset.empty() && is_multihop_preset(preset)) mh = preset_multihop(preset);

  out.single = env_from_json(env);
  if (root.contains("multihop") || mh) {
    try {
      MultiHopConfig m = mh.value_or(MultiHopConfig{});
      m.base = out.single;
      if (root.contains("multihop")) {
        const json& j = root.at("multihop");
        maybe(j, "num_nodes", m.num_nodes);
        if (j.contains("routes")) {
          m.routes.clear();
          for (const auto& r : j.at("routes")) {
            std::vector<int> route;
            for (int k : r.get<std::vector<int>>()) route.push_back(k - 1);
            m.routes.push_back(route);
          }
        }
        maybe(j, "node_budgets", m.node_budgets);
        if (j.contains("node_channel_transition")) {
          m.node_channel_transition = read_transitions(j.at("node_channel_transition"), m.num_nodes);
        }
      }
      if (m.node_budgets.empty()) m.node_budgets = Vec(m.num_nodes, m.base.budget_E0 / m.num_nodes);
      if (m.node_channel_transition.size() != static_cast<std::size_t>(m.num_nodes)) {
        m.node_channel_transition.assign(m.num_nodes, sticky_transition(m.base.channel_states.size()));
      }
      double total = 0.0;
      for (double b : m.node_budgets) total += b;
      m.base.budget_E0 = total;
      out.multihop = std::move(m);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("multihop config: ") + e.what());
    }
  }
  out.validate();
  return out;
}

AnyEnvConfig load_env_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
  return any_env_from_json(root);
}

std::string config_hash(const AnyEnvConfig& c) {
  return hex64(fnv1a64(to_json(c).dump()));
}

}  // namespace socd::env
