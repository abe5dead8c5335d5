#pragma once

#include <cstddef>

#include "bibc/neural.hpp"

namespace bibc {

/// Learner hyperparameters. Defaults are the full-scale setting;
/// the exploration schedules and discretization grid are local choices.
struct AgentHyper {
  std::size_t replay_capacity = 100000;
  std::size_t batch = 32;
  double gamma = 0.99;

  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  double actor_decay = 1e-5;
  double critic_decay = 1e-5;
  LrDecay decay_mode = LrDecay::multiplicative;
  double tau_actor = 1e-3;
  double tau_critic = 1e-3;
  double actor_final_scale = 1e-3;

  // DDPG exploration
  double noise_sigma = 0.1;
  double noise_decay = 0.999;  // per episode

  // SAC
  double init_temperature = 0.2;
  double temperature_lr = 1e-3;
  double log_std_min = -20.0;
  double log_std_max = 2.0;

  // DQN family
  double eps_start = 1.0;
  double eps_min = 0.01;
  double eps_decay = 0.995;  // per episode
  std::size_t target_sync = 1000;
  std::size_t codebook_size = 16;
  std::size_t power_levels = 5;
  double power_min_fraction = 0.1;
  std::size_t eh_levels = 5;

  AdamOptions actor_adam() const { return {actor_lr, actor_decay, decay_mode}; }
  AdamOptions critic_adam() const { return {critic_lr, critic_decay, decay_mode}; }
};

}  // namespace bibc
