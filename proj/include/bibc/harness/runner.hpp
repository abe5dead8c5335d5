#pragma once

// Experiment orchestration. One run = one algorithm, one seed, E episodes of
// T steps (or E channel draws for the AO benchmark). Outputs, for a run
// named <algo>_seed<n>:
//   <name>.csv            one row per step
//   <name>_episodes.csv   one row per episode
//   <name>_timing.csv     wall-clock per episode (kept apart: not reproducible)
//   <name>.meta           effective configuration
// Sweeps over several seeds add <algo>_aggregate.csv (mean and sample std
// of the episode sum rate across seeds).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "bibc/agents/ddpg.hpp"
#include "bibc/agents/dqn.hpp"
#include "bibc/agents/sac.hpp"
#include "bibc/ao.hpp"
#include "bibc/env.hpp"
#include "bibc/harness/config.hpp"

namespace bibc {

inline const char* kStepHeader =
    "episode,step,reward,sum_rate,episode_sum_rate,avg_sum_rate,omega_pow,omega_eh,status";
inline const char* kEpisodeHeader =
    "episode,episode_sum_rate,avg_sum_rate,episode_reward,omega_pow,omega_eh,status";

/// Shortest round-trip decimal form; independent of the global locale.
inline std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

struct StepRecord {
  double reward = 0.0;
  double sum_rate = 0.0;
  double omega_pow = 0.0;
  double omega_eh = 0.0;
};

struct EpisodeRecord {
  std::size_t episode = 0;
  std::vector<StepRecord> steps;
  bool feasible = true;
  double sum_rate = 0.0;  // mean over the steps
  double moving_avg = 0.0;
  double wall_ms = 0.0;
};

/// Trailing mean of the episode sum rate over the last `window` episodes
/// (fewer at the start). Infeasible episodes are skipped.
class MovingAverage {
 public:
  explicit MovingAverage(std::size_t window) : window_(window) {}
  double push(double v) {
    values_.push_back(v);
    sum_ += v;
    if (values_.size() > window_) {
      sum_ -= values_.front();
      values_.pop_front();
    }
    return current();
  }
  double current() const { return values_.empty() ? 0.0 : sum_ / static_cast<double>(values_.size()); }

 private:
  std::size_t window_;
  std::deque<double> values_;
  double sum_ = 0.0;
};

class MetricsWriter {
 public:
  MetricsWriter(const std::filesystem::path& dir, const std::string& name, std::size_t window)
      : ma_(window) {
    std::filesystem::create_directories(dir);
    steps_path_ = dir / (name + ".csv");
    episodes_path_ = dir / (name + "_episodes.csv");
    timing_path_ = dir / (name + "_timing.csv");
    steps_.open(steps_path_, std::ios::binary);
    episodes_.open(episodes_path_, std::ios::binary);
    timing_.open(timing_path_, std::ios::binary);
    if (!steps_ || !episodes_ || !timing_)
      throw ParameterError("MetricsWriter: cannot create outputs in " + dir.string());
    steps_ << kStepHeader << '\n';
    episodes_ << kEpisodeHeader << '\n';
    timing_ << "episode,wall_ms\n";
  }

  const std::filesystem::path& steps_path() const { return steps_path_; }
  const std::filesystem::path& episodes_path() const { return episodes_path_; }
  const std::filesystem::path& timing_path() const { return timing_path_; }

  void write(EpisodeRecord& ep) {
    double total_rate = 0.0, total_reward = 0.0, pow = 0.0, eh = 0.0;
    for (const auto& s : ep.steps) {
      total_rate += s.sum_rate;
      total_reward += s.reward;
      pow += s.omega_pow;
      eh += s.omega_eh;
    }
    const double n = static_cast<double>(std::max<std::size_t>(ep.steps.size(), 1));
    ep.sum_rate = ep.feasible ? total_rate / n : 0.0;
    ep.moving_avg = ep.feasible ? ma_.push(ep.sum_rate) : ma_.current();
    const char* status = ep.feasible ? "ok" : "infeasible";
    for (std::size_t t = 0; t < ep.steps.size(); ++t) {
      const auto& s = ep.steps[t];
      steps_ << ep.episode << ',' << t << ',' << fmt(s.reward) << ',' << fmt(s.sum_rate) << ','
             << fmt(ep.sum_rate) << ',' << fmt(ep.moving_avg) << ',' << fmt(s.omega_pow) << ','
             << fmt(s.omega_eh) << ',' << status << '\n';
    }
    episodes_ << ep.episode << ',' << fmt(ep.sum_rate) << ',' << fmt(ep.moving_avg) << ','
              << fmt(total_reward) << ',' << fmt(pow / n) << ',' << fmt(eh / n) << ',' << status
              << '\n';
    char ms[32];
    std::snprintf(ms, sizeof ms, "%.3f", ep.wall_ms);
    timing_ << ep.episode << ',' << ms << '\n';
  }

  void close() {
    steps_.close();
    episodes_.close();
    timing_.close();
  }

 private:
  MovingAverage ma_;
  std::filesystem::path steps_path_, episodes_path_, timing_path_;
  std::ofstream steps_, episodes_, timing_;
};

struct RunResult {
  std::string name;
  std::uint64_t seed = 0;
  std::filesystem::path steps_csv;
  std::filesystem::path episodes_csv;
  std::vector<double> episode_sum_rate;
  std::vector<double> step_reward;
};

inline std::string run_name(Algorithm a, std::uint64_t seed) {
  return to_string(a) + "_seed" + std::to_string(seed);
}

inline void write_meta(const std::filesystem::path& path, const ExperimentConfig& c,
                       std::uint64_t seed) {
  std::ofstream os(path, std::ios::binary);
  const auto& s = c.system;
  const auto& h = c.agent;
  os << "algorithm=" << to_string(c.algorithm) << "\nseed=" << seed << "\nepisodes=" << c.episodes
     << "\nsteps=" << c.env.steps << "\nM=" << s.M << "\nN=" << s.N << "\nK=" << s.K
     << "\nps_watts=" << fmt(s.ps_watts) << "\ndelta_d=" << fmt(s.delta_d)
     << "\nnoise_watts=" << fmt(s.noise_watts) << "\neh_threshold_mode="
     << (s.threshold_mode == EhThresholdMode::incident ? "incident" : "harvested")
     << "\nw_bound_scale=" << fmt(c.env.w_bound_scale) << "\ngamma=" << fmt(h.gamma)
     << "\nbatch=" << h.batch << "\nreplay_capacity=" << h.replay_capacity
     << "\nactor_lr=" << fmt(h.actor_lr) << "\ncritic_lr=" << fmt(h.critic_lr)
     << "\nma_window=" << c.ma_window
     << "\ntime_limit_terminal=" << (c.time_limit_terminal ? "true" : "false") << '\n';
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

inline StepRecord record_of(const StepOutcome& o) {
  return {o.reward, o.diagnostics.sum_rate, o.diagnostics.omega_pow, o.diagnostics.omega_eh};
}

template <class Agent>
void train_continuous(Agent& agent, Environment& env, const ExperimentConfig& c,
                      MetricsWriter& out, RunResult& res) {
  for (std::size_t e = 0; e < c.episodes; ++e) {
    const auto t0 = Clock::now();
    EpisodeRecord ep{e, {}, true};
    RealVector s = env.reset(e).features;
    for (std::size_t t = 0; t < c.env.steps; ++t) {
      RealVector a = agent.act(s, true);
      const StepOutcome o = env.step(ActionVector{a});
      agent.observe({s, std::move(a), o.reward, o.next_state.features, o.episode_done && c.time_limit_terminal});
      ep.steps.push_back(record_of(o));
      res.step_reward.push_back(o.reward);
      s = o.next_state.features;
    }
    agent.end_episode();
    ep.wall_ms = elapsed_ms(t0);
    out.write(ep);
    res.episode_sum_rate.push_back(ep.sum_rate);
  }
}

inline void train_discrete(DqnAgent& agent, Environment& env, const ExperimentConfig& c,
                           MetricsWriter& out, RunResult& res) {
  for (std::size_t e = 0; e < c.episodes; ++e) {
    const auto t0 = Clock::now();
    EpisodeRecord ep{e, {}, true};
    RealVector s = env.reset(e).features;
    for (std::size_t t = 0; t < c.env.steps; ++t) {
      const std::size_t a = agent.act(s, true);
      const auto [w, alpha] = agent.table().decode(a);
      const StepOutcome o = env.step_beams(w, alpha);
      agent.observe({s, a, o.reward, o.next_state.features, o.episode_done && c.time_limit_terminal});
      ep.steps.push_back(record_of(o));
      res.step_reward.push_back(o.reward);
      s = o.next_state.features;
    }
    agent.end_episode();
    ep.wall_ms = elapsed_ms(t0);
    out.write(ep);
    res.episode_sum_rate.push_back(ep.sum_rate);
  }
}

/// One AO solve per episode on that episode's channel draw (the channels an
/// agent would see in the same episode). Infeasible draws are flagged.
inline void run_ao(const ExperimentConfig& c, std::uint64_t seed, const Environment& env,
                   MetricsWriter& out, RunResult& res) {
  for (std::size_t e = 0; e < c.episodes; ++e) {
    const auto t0 = Clock::now();
    EpisodeRecord ep{e, {}, true};
    const ChannelRealization ch = episode_channels(c.system, env.topology(), seed, e);
    SeededRng rng(seed, stream_id(Purpose::randomization, e));
    try {
      const AoState st = ao_loop(ch, c.system, rng, c.ao);
      const RewardTerms r = reward(st.beams(), ch, c.system);
      ep.steps.push_back({r.reward, r.sum_rate, r.omega_pow, r.omega_eh});
    } catch (const InfeasibleError&) {
      ep.feasible = false;
      ep.steps.push_back({0.0, 0.0, 0.0, 0.0});
    }
    res.step_reward.push_back(ep.steps.back().reward);
    ep.wall_ms = elapsed_ms(t0);
    out.write(ep);
    res.episode_sum_rate.push_back(ep.sum_rate);
  }
}

}  // namespace detail

/// Runs one seed and writes its files under c.out_dir.
inline RunResult run_experiment(const ExperimentConfig& c, std::uint64_t seed) {
  c.validate();
  RunResult res;
  res.name = run_name(c.algorithm, seed);
  res.seed = seed;
  const std::filesystem::path dir(c.out_dir);
  MetricsWriter out(dir, res.name, c.ma_window);
  write_meta(dir / (res.name + ".meta"), c, seed);
  Environment env(c.system, seed, c.env);
  const std::size_t ds = env.state_dim(), da = env.action_dim();
  switch (c.algorithm) {
    case Algorithm::ddpg: {
      DdpgAgent agent(ds, da, c.agent, seed);
      detail::train_continuous(agent, env, c, out, res);
      break;
    }
    case Algorithm::sac: {
      SacAgent agent(ds, da, c.agent, seed);
      detail::train_continuous(agent, env, c, out, res);
      break;
    }
    case Algorithm::dqn:
    case Algorithm::ddqn:
    case Algorithm::dueldqn: {
      const DqnVariant v = c.algorithm == Algorithm::dqn    ? DqnVariant::dqn
                           : c.algorithm == Algorithm::ddqn ? DqnVariant::ddqn
                                                            : DqnVariant::duel;
      DqnAgent agent(ds, discretize(c.system.M, c.system.K, c.system.ps_watts, c.agent), v,
                     c.agent, seed);
      detail::train_discrete(agent, env, c, out, res);
      break;
    }
    case Algorithm::ao:
      detail::run_ao(c, seed, env, out, res);
      break;
  }
  out.close();
  res.steps_csv = out.steps_path();
  res.episodes_csv = out.episodes_path();
  return res;
}

/// Worker count: BIBC_THREADS if set, else the hardware concurrency.
inline std::size_t worker_limit() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("BIBC_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = static_cast<std::size_t>(v);
  }
  return n;
}

struct AggregateRow {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single seed
};

inline std::vector<AggregateRow> aggregate(const std::vector<std::vector<double>>& per_seed) {
  if (per_seed.empty()) return {};
  const std::size_t E = per_seed.front().size();
  for (const auto& v : per_seed)
    if (v.size() != E) throw ComparisonError("aggregate: runs have different episode counts");
  std::vector<AggregateRow> rows(E);
  const double n = static_cast<double>(per_seed.size());
  for (std::size_t e = 0; e < E; ++e) {
    double mean = 0.0;
    for (const auto& v : per_seed) mean += v[e];
    mean /= n;
    double ss = 0.0;
    for (const auto& v : per_seed) ss += (v[e] - mean) * (v[e] - mean);
    rows[e] = {mean, per_seed.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0};
  }
  return rows;
}

/// Runs every seed of the config (in parallel, capped by worker_limit()),
/// and writes the cross-seed aggregate when there is more than one seed.
inline std::vector<RunResult> run_sweep(const ExperimentConfig& c) {
  c.validate();
  std::vector<RunResult> results(c.seeds.size());
  std::vector<std::exception_ptr> errors(c.seeds.size());
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= c.seeds.size()) return;
        i = next++;
      }
      try {
        results[i] = run_experiment(c, c.seeds[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min(worker_limit(), c.seeds.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  if (results.size() > 1) {
    std::vector<std::vector<double>> curves;
    for (const auto& r : results) curves.push_back(r.episode_sum_rate);
    const auto rows = aggregate(curves);
    std::ofstream os(std::filesystem::path(c.out_dir) / (to_string(c.algorithm) + "_aggregate.csv"),
                     std::ios::binary);
    os << "episode,mean,std,seeds\n";
    for (std::size_t e = 0; e < rows.size(); ++e)
      os << e << ',' << fmt(rows[e].mean) << ',' << fmt(rows[e].std) << ',' << results.size() << '\n';
  }
  return results;
}

}  // namespace bibc
