#pragma once

// Deterministic actor-critic with target networks. The critic sees the
// action at its first hidden layer; the actor follows the critic's action
// gradient.

#include <optional>

#include "bibc/agents/hyper.hpp"
#include "bibc/agents/replay.hpp"
#include "bibc/neural.hpp"

namespace bibc {

class DdpgAgent {
 public:
  DdpgAgent(std::size_t state_dim, std::size_t action_dim, AgentHyper hyper, std::uint64_t seed)
      : hyper_(hyper),
        state_dim_(state_dim),
        action_dim_(action_dim),
        buffer_(hyper.replay_capacity),
        replay_rng_(seed, stream_id(Purpose::replay)),
        noise_rng_(seed, stream_id(Purpose::exploration)),
        sigma_(hyper.noise_sigma) {
    if (state_dim == 0 || action_dim == 0) throw ParameterError("DdpgAgent: empty state or action");
    SeededRng init(seed, stream_id(Purpose::network_init));
    const std::size_t h = hidden_width(state_dim);
    Mlp actor({{state_dim, h, h, action_dim}, Activation::tanh, Activation::tanh}, init,
              hyper.actor_final_scale);
    const std::size_t hc = hidden_width(state_dim + action_dim);
    Mlp critic({{state_dim, hc, hc, 1}, Activation::tanh, Activation::identity, action_dim, 1},
               init);
    actor_ = NetPair(std::move(actor), hyper.actor_adam());
    critic_ = NetPair(std::move(critic), hyper.critic_adam());
  }

  const AgentHyper& hyper() const { return hyper_; }
  NetPair& actor() { return actor_; }
  NetPair& critic() { return critic_; }
  const NetPair& actor() const { return actor_; }
  const NetPair& critic() const { return critic_; }
  ReplayBuffer<RealVector>& buffer() { return buffer_; }
  double noise_sigma() const { return sigma_; }

  /// Actor output, plus clipped Gaussian noise when exploring.
  RealVector act(const RealVector& s, bool explore) {
    RealVector a = actor_.train.predict(s).col(0);
    if (explore) {
      for (Eigen::Index i = 0; i < a.size(); ++i) a[i] += sigma_ * noise_rng_.normal();
      a = a.cwiseMax(-1.0).cwiseMin(1.0);
    }
    return a;
  }

  /// Stores the transition and runs one update once a minibatch is available.
  void observe(Experience<RealVector> e) {
    buffer_.push(std::move(e));
    train_step();
  }

  std::optional<double> train_step() {
    auto items = buffer_.sample(hyper_.batch, replay_rng_);
    if (!items) return std::nullopt;
    const ContinuousBatch b = stack_batch(*items);
    const double loss = critic_update(b);
    actor_update(b);
    critic_.soft_update(hyper_.tau_critic);
    actor_.soft_update(hyper_.tau_actor);
    return loss;
  }

  void end_episode() { sigma_ *= hyper_.noise_decay; }

  /// y = r + gamma q'(s', pi'(s')); one Adam step on the mean squared error.
  double critic_update(const ContinuousBatch& b) {
    const RealVector y = critic_targets(b);
    const RealMatrix& q = critic_.train.forward(b.s, &b.a);
    const RealVector diff = q.row(0).transpose() - y;
    const double L = static_cast<double>(b.size());
    critic_.train.backward((2.0 / L) * diff.transpose());
    critic_.apply_gradients();
    return diff.squaredNorm() / L;
  }

  RealVector critic_targets(const ContinuousBatch& b) const {
    const RealMatrix a_next = actor_.target.predict(b.s_next);
    const RealMatrix q_next = critic_.target.predict(b.s_next, &a_next);
    return b.r + hyper_.gamma * b.not_done.cwiseProduct(q_next.row(0).transpose());
  }

  /// One step on -mean q_target(s, pi(s)). Returns that loss.
  double actor_update(const ContinuousBatch& b) {
    const double loss = actor_loss_gradient(b.s);
    actor_.apply_gradients();
    return loss;
  }

  /// Accumulates d(-mean q_target(s, pi(s)))/d theta into the actor's
  /// gradient buffer without stepping. Returns the loss.
  double actor_loss_gradient(const RealMatrix& s) {
    Mlp& critic = critic_.target;
    return actor_gradient(s, [&critic](const RealMatrix& states, const RealMatrix& a) {
      const RealMatrix q = critic.forward(states, &a);
      const double L = static_cast<double>(states.cols());
      RealMatrix grad = critic.backward(RealMatrix::Constant(1, states.cols(), 1.0 / L)).side;
      critic.zero_grad();
      return std::make_pair(q.mean(), std::move(grad));
    });
  }

  /// Ascent step on a user objective J(s, a): `objective(S, A)` returns
  /// (J, dJ/dA) for the batch. Returns -J before the step.
  template <class Objective>
  double actor_step(const RealMatrix& s, Objective&& objective) {
    const double loss = actor_gradient(s, std::forward<Objective>(objective));
    actor_.apply_gradients();
    return loss;
  }

  template <class Objective>
  double actor_gradient(const RealMatrix& s, Objective&& objective) {
    const RealMatrix a = actor_.train.forward(s);
    auto [value, grad] = objective(s, a);
    actor_.train.backward(-grad);
    return -value;
  }

  void save(const std::string& prefix) const {
    save_checkpoint(actor_.train, prefix + "_actor.bin");
    save_checkpoint(critic_.train, prefix + "_critic.bin");
  }

  void load(const std::string& prefix) {
    load_checkpoint(actor_.train, prefix + "_actor.bin");
    load_checkpoint(critic_.train, prefix + "_critic.bin");
    actor_.hard_sync();
    critic_.hard_sync();
  }

 private:
  AgentHyper hyper_;
  std::size_t state_dim_;
  std::size_t action_dim_;
  NetPair actor_;
  NetPair critic_;
  ReplayBuffer<RealVector> buffer_;
  SeededRng replay_rng_;
  SeededRng noise_rng_;
  double sigma_;
};

}  // namespace bibc
