#pragma once

// Experiment configuration: flat `key = value` text, `#` starts a comment.
// Keys not listed in the table below are rejected.

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bibc/agents/hyper.hpp"
#include "bibc/ao.hpp"
#include "bibc/env.hpp"
#include "bibc/errors.hpp"
#include "bibc/scenario.hpp"

namespace bibc {

enum class Algorithm { ddpg, sac, dqn, ddqn, dueldqn, ao };

inline const std::vector<std::pair<std::string, Algorithm>>& algorithm_names() {
  static const std::vector<std::pair<std::string, Algorithm>> names = {
      {"ddpg", Algorithm::ddpg}, {"sac", Algorithm::sac},         {"dqn", Algorithm::dqn},
      {"ddqn", Algorithm::ddqn}, {"dueldqn", Algorithm::dueldqn}, {"ao", Algorithm::ao}};
  return names;
}

inline std::string to_string(Algorithm a) {
  for (const auto& [name, v] : algorithm_names())
    if (v == a) return name;
  return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
  for (const auto& [name, v] : algorithm_names())
    if (name == s) return v;
  throw ConfigError("algorithm", "unknown algorithm '" + s + "'");
}

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::sac;
  std::size_t episodes = 5000;
  std::vector<std::uint64_t> seeds{0};
  std::string out_dir = "results";
  std::size_t ma_window = 100;
  // Store the step that hits the episode length as terminal. Off by default:
  // the state has no clock, so the cut is a truncation and targets bootstrap.
  bool time_limit_terminal = false;
  double bandwidth_hz = 1e6;
  double noise_figure_db = 10.0;
  SystemConfig system{};
  EnvOptions env{};
  AgentHyper agent{};
  AoOptions ao{};

  void validate() const {
    if (episodes < 1) throw ConfigError("episodes", "must be >= 1");
    if (env.steps < 1) throw ConfigError("steps", "must be >= 1");
    if (seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
    if (ma_window < 1) throw ConfigError("ma_window", "must be >= 1");
    if (agent.batch < 1) throw ConfigError("batch", "must be >= 1");
    if (agent.replay_capacity < agent.batch)
      throw ConfigError("replay_capacity", "must be at least the batch size");
    if (!(agent.gamma >= 0.0 && agent.gamma <= 1.0)) throw ConfigError("gamma", "must lie in [0, 1]");
    if (!(agent.tau_actor > 0.0 && agent.tau_actor <= 1.0))
      throw ConfigError("tau_actor", "must lie in (0, 1]");
    if (!(agent.tau_critic > 0.0 && agent.tau_critic <= 1.0))
      throw ConfigError("tau_critic", "must lie in (0, 1]");
    if (!(agent.eps_start >= 0.0 && agent.eps_start <= 1.0))
      throw ConfigError("eps_start", "must lie in [0, 1]");
    if (agent.power_levels < 2) throw ConfigError("power_levels", "must be >= 2");
    if (agent.eh_levels < 2) throw ConfigError("eh_levels", "must be >= 2");
    if (agent.codebook_size < 1) throw ConfigError("codebook_size", "must be >= 1");
    if (agent.target_sync < 1) throw ConfigError("target_sync", "must be >= 1");
    if (!(env.alpha_margin > 0.0 && env.alpha_margin < 0.5))
      throw ConfigError("alpha_margin", "must lie in (0, 0.5)");
    try {
      system.validate();
    } catch (const ParameterError& e) {
      throw ConfigError("system", e.what());
    }
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(key, "expected a number, got '" + v + "'");
  return out;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
  return out;
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> parts;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(trim(item));
  return parts;
}

inline Vec3 parse_vec3(const std::string& key, const std::string& v) {
  const auto parts = split_list(v);
  if (parts.size() != 3) throw ConfigError(key, "expected x,y,z");
  return {parse_double(key, parts[0]), parse_double(key, parts[1]), parse_double(key, parts[2])};
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

template <class T>
Setter real(T ExperimentConfig::*group, double T::*field) {
  return [=](ExperimentConfig& c, const std::string& k, const std::string& v) {
    (c.*group).*field = parse_double(k, v);
  };
}

template <class T>
Setter count(T ExperimentConfig::*group, std::size_t T::*field) {
  return [=](ExperimentConfig& c, const std::string& k, const std::string& v) {
    (c.*group).*field = static_cast<std::size_t>(parse_uint(k, v));
  };
}

inline const std::map<std::string, Setter>& config_keys() {
  using C = ExperimentConfig;
  static const std::map<std::string, Setter> keys = {
      {"algorithm", [](C& c, const std::string&, const std::string& v) { c.algorithm = parse_algorithm(v); }},
      {"episodes", [](C& c, const std::string& k, const std::string& v) { c.episodes = parse_uint(k, v); }},
      {"steps", [](C& c, const std::string& k, const std::string& v) { c.env.steps = parse_uint(k, v); }},
      {"seeds", [](C& c, const std::string& k, const std::string& v) {
         c.seeds.clear();
         for (const auto& s : split_list(v)) c.seeds.push_back(parse_uint(k, s));
       }},
      {"out_dir", [](C& c, const std::string&, const std::string& v) { c.out_dir = v; }},
      {"ma_window", [](C& c, const std::string& k, const std::string& v) { c.ma_window = parse_uint(k, v); }},
      // system
      {"M", count(&C::system, &SystemConfig::M)},
      {"N", count(&C::system, &SystemConfig::N)},
      {"K", count(&C::system, &SystemConfig::K)},
      {"ps_dbm", [](C& c, const std::string& k, const std::string& v) { c.system.ps_watts = dbm_to_watts(parse_double(k, v)); }},
      {"delta_d", real(&C::system, &SystemConfig::delta_d)},
      {"bandwidth_hz", [](C& c, const std::string& k, const std::string& v) { c.bandwidth_hz = parse_double(k, v); }},
      {"noise_figure_db", [](C& c, const std::string& k, const std::string& v) { c.noise_figure_db = parse_double(k, v); }},
      {"pathloss_c0_db", [](C& c, const std::string& k, const std::string& v) { c.system.pathloss.c0_db = parse_double(k, v); }},
      {"pathloss_d0_m", [](C& c, const std::string& k, const std::string& v) { c.system.pathloss.d0_m = parse_double(k, v); }},
      {"pathloss_exponent", [](C& c, const std::string& k, const std::string& v) { c.system.pathloss.zeta = parse_double(k, v); }},
      {"eh_a", [](C& c, const std::string& k, const std::string& v) { c.system.eh.a_nl = parse_double(k, v); }},
      {"eh_b", [](C& c, const std::string& k, const std::string& v) { c.system.eh.b_nl = parse_double(k, v); }},
      {"eh_m", [](C& c, const std::string& k, const std::string& v) { c.system.eh.m_nl = parse_double(k, v); }},
      {"eh_pb_dbm", [](C& c, const std::string& k, const std::string& v) { c.system.eh.p_b_watts = dbm_to_watts(parse_double(k, v)); }},
      {"eh_threshold_mode", [](C& c, const std::string& k, const std::string& v) {
         if (v == "incident") c.system.threshold_mode = EhThresholdMode::incident;
         else if (v == "harvested") c.system.threshold_mode = EhThresholdMode::harvested;
         else throw ConfigError(k, "expected 'incident' or 'harvested'");
       }},
      {"ce_position", [](C& c, const std::string& k, const std::string& v) { c.system.geometry.ce = parse_vec3(k, v); }},
      {"reader_position", [](C& c, const std::string& k, const std::string& v) { c.system.geometry.reader = parse_vec3(k, v); }},
      {"tag_center", [](C& c, const std::string& k, const std::string& v) { c.system.geometry.tag_center = parse_vec3(k, v); }},
      {"tag_radius", [](C& c, const std::string& k, const std::string& v) { c.system.geometry.tag_radius = parse_double(k, v); }},
      // environment
      {"time_limit_terminal", [](C& c, const std::string& k, const std::string& v) {
         if (v == "true" || v == "1") c.time_limit_terminal = true;
         else if (v == "false" || v == "0") c.time_limit_terminal = false;
         else throw ConfigError(k, "expected true or false");
       }},
      {"alpha_margin", real(&C::env, &EnvOptions::alpha_margin)},
      {"w_bound_scale", real(&C::env, &EnvOptions::w_bound_scale)},
      // learners
      {"replay_capacity", count(&C::agent, &AgentHyper::replay_capacity)},
      {"batch", count(&C::agent, &AgentHyper::batch)},
      {"gamma", real(&C::agent, &AgentHyper::gamma)},
      {"actor_lr", real(&C::agent, &AgentHyper::actor_lr)},
      {"critic_lr", real(&C::agent, &AgentHyper::critic_lr)},
      {"actor_decay", real(&C::agent, &AgentHyper::actor_decay)},
      {"critic_decay", real(&C::agent, &AgentHyper::critic_decay)},
      {"lr_decay_mode", [](C& c, const std::string& k, const std::string& v) {
         if (v == "multiplicative") c.agent.decay_mode = LrDecay::multiplicative;
         else if (v == "literal") c.agent.decay_mode = LrDecay::literal;
         else throw ConfigError(k, "expected 'multiplicative' or 'literal'");
       }},
      {"tau_actor", real(&C::agent, &AgentHyper::tau_actor)},
      {"tau_critic", real(&C::agent, &AgentHyper::tau_critic)},
      {"actor_final_scale", real(&C::agent, &AgentHyper::actor_final_scale)},
      {"noise_sigma", real(&C::agent, &AgentHyper::noise_sigma)},
      {"noise_decay", real(&C::agent, &AgentHyper::noise_decay)},
      {"init_temperature", real(&C::agent, &AgentHyper::init_temperature)},
      {"temperature_lr", real(&C::agent, &AgentHyper::temperature_lr)},
      {"log_std_min", real(&C::agent, &AgentHyper::log_std_min)},
      {"log_std_max", real(&C::agent, &AgentHyper::log_std_max)},
      {"eps_start", real(&C::agent, &AgentHyper::eps_start)},
      {"eps_min", real(&C::agent, &AgentHyper::eps_min)},
      {"eps_decay", real(&C::agent, &AgentHyper::eps_decay)},
      {"target_sync", count(&C::agent, &AgentHyper::target_sync)},
      {"codebook_size", count(&C::agent, &AgentHyper::codebook_size)},
      {"power_levels", count(&C::agent, &AgentHyper::power_levels)},
      {"power_min_fraction", real(&C::agent, &AgentHyper::power_min_fraction)},
      {"eh_levels", count(&C::agent, &AgentHyper::eh_levels)},
      // benchmark
      {"ao_eps_alpha", real(&C::ao, &AoOptions::eps_alpha)},
      {"ao_randomizations", count(&C::ao, &AoOptions::randomizations)},
      {"ao_outer_tol", real(&C::ao, &AoOptions::outer_tol)},
      {"ao_max_outer", count(&C::ao, &AoOptions::max_outer)},
  };
  return keys;
}

}  // namespace detail

/// Applies one override; throws ConfigError naming the key.
inline void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto& keys = detail::config_keys();
  const auto it = keys.find(key);
  if (it == keys.end()) throw ConfigError(key, "unknown key");
  it->second(cfg, key, value);
  cfg.system.noise_watts = noise_power_watts(cfg.bandwidth_hz, cfg.noise_figure_db);
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(line, "line " + std::to_string(lineno) + " is not key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (value.empty()) throw ConfigError(key, "missing value");
    set_config_value(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace bibc
