#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "bibc/bibc.hpp"

namespace {

int cmd_run(const std::string& algo, const std::string& config_path,
            const std::vector<std::uint64_t>& seeds, std::size_t episodes, const std::string& out,
            const std::vector<std::string>& overrides) {
  bibc::ExperimentConfig cfg =
      config_path.empty() ? bibc::parse_config_text("") : bibc::parse_config(config_path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw bibc::ConfigError(kv, "override must be key=value");
    bibc::set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!algo.empty()) cfg.algorithm = bibc::parse_algorithm(algo);
  if (!seeds.empty()) cfg.seeds = seeds;
  if (episodes > 0) cfg.episodes = episodes;
  if (!out.empty()) cfg.out_dir = out;
  cfg.validate();

  const auto results = bibc::run_sweep(cfg);
  for (const auto& r : results) {
    const double last = r.episode_sum_rate.empty() ? 0.0 : r.episode_sum_rate.back();
    std::printf("%s: %zu episodes, last episode sum rate %.4f -> %s\n", r.name.c_str(),
                r.episode_sum_rate.size(), last, r.steps_csv.string().c_str());
  }
  return 0;
}

int cmd_summarize(const std::string& baseline, const std::vector<std::string>& files,
                  std::size_t window) {
  const auto rows = bibc::summarize_files(files, baseline, window);
  std::cout << bibc::format_summary(rows, baseline);
  return 0;
}

int cmd_selftest() {
  bool all = true;
  for (const auto& r : bibc::run_property_suite()) {
    std::printf("[%s] %s: %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    all = all && r.passed;
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bistatic backscatter resource allocation: simulator, learners, benchmark"};
  app.require_subcommand(1);

  std::string algo, config_path, out;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;
  std::size_t episodes = 0;
  std::vector<std::string> overrides;
  auto* run = app.add_subcommand("run", "Train one algorithm (or run the AO benchmark)");
  run->add_option("--algo", algo, "ddpg | sac | dqn | ddqn | dueldqn | ao");
  run->add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
  auto* seed_opt = run->add_option("--seed", seed, "Seed of a single run");
  run->add_option("--seeds", seeds, "Several seeds (parallel, capped by BIBC_THREADS)")
      ->delimiter(',')
      ->excludes(seed_opt);
  run->add_option("--episodes", episodes, "Override the number of episodes");
  run->add_option("--out", out, "Output directory");
  run->add_option("--set", overrides, "Extra key=value overrides");

  std::string baseline = "dqn";
  std::vector<std::string> files;
  std::size_t window = 500;
  auto* sum = app.add_subcommand("summarize", "Final-window comparison of episode CSVs");
  sum->add_option("--baseline", baseline, "Baseline algorithm label");
  sum->add_option("--window", window, "Episodes in the final window");
  sum->add_option("files", files, "*_episodes.csv or *_aggregate.csv files")->required();

  auto* self = app.add_subcommand("selftest", "Run the numerical property suite");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) {
      if (seed_opt->count() > 0) seeds = {seed};
      return cmd_run(algo, config_path, seeds, episodes, out, overrides);
    }
    if (*sum) return cmd_summarize(baseline, files, window);
    if (*self) return cmd_selftest();
  } catch (const bibc::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
