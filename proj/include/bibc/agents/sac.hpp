#pragma once

// Maximum-entropy actor-critic: tanh-squashed Gaussian policy, twin critics
// with soft targets, and a learned temperature.

#include <cmath>
#include <numbers>
#include <optional>
#include <utility>

#include "bibc/agents/hyper.hpp"
#include "bibc/agents/replay.hpp"
#include "bibc/neural.hpp"

namespace bibc {

inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

/// log(1 - tanh(u)^2) without cancellation.
inline double log_tanh_jacobian(double u) {
  return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u));
}

/// Log-density of a = tanh(u), u ~ N(mean, exp(log_std)^2), given the
/// pre-squash sample u.
inline double squashed_log_prob_pre(double u, double mean, double log_std) {
  const double z = (u - mean) / std::exp(log_std);
  return -0.5 * z * z - log_std - 0.5 * std::log(2.0 * std::numbers::pi) - log_tanh_jacobian(u);
}

/// Same density evaluated at an action a in (-1, 1).
inline double squashed_log_prob(double a, double mean, double log_std) {
  if (!(a > -1.0 && a < 1.0)) throw DomainError("squashed_log_prob: action must lie in (-1, 1)");
  return squashed_log_prob_pre(std::atanh(a), mean, log_std);
}

/// Policy head outputs for a batch, with the sampled noise kept for backprop.
struct PolicySample {
  RealMatrix mean;      // D_a x L
  RealMatrix log_std;   // clamped
  RealMatrix eps;       // standard normal draws
  RealMatrix pre;       // u = mean + std * eps
  RealMatrix action;    // tanh(u)
  RealVector log_prob;  // per column
};

class SacAgent {
 public:
  struct PolicyStats {
    double loss = 0.0;
    double mean_log_prob = 0.0;
  };

  SacAgent(std::size_t state_dim, std::size_t action_dim, AgentHyper hyper, std::uint64_t seed)
      : hyper_(hyper),
        action_dim_(action_dim),
        buffer_(hyper.replay_capacity),
        replay_rng_(seed, stream_id(Purpose::replay)),
        noise_rng_(seed, stream_id(Purpose::exploration)),
        log_xi_(std::log(hyper.init_temperature)),
        target_entropy_(-static_cast<double>(action_dim)),
        xi_adam_(1, AdamOptions{hyper.temperature_lr, 0.0, LrDecay::multiplicative}) {
    if (state_dim == 0 || action_dim == 0) throw ParameterError("SacAgent: empty state or action");
    if (!(hyper.init_temperature > 0.0))
      throw ParameterError("SacAgent: initial temperature must be positive");
    SeededRng init(seed, stream_id(Purpose::network_init));
    const std::size_t h = hidden_width(state_dim);
    Mlp policy({{state_dim, h, h, 2 * action_dim}, Activation::relu, Activation::identity}, init,
               hyper.actor_final_scale);
    const std::size_t hc = hidden_width(state_dim + action_dim);
    const MlpSpec qspec{{state_dim, hc, hc, 1}, Activation::relu, Activation::identity, action_dim, 0};
    Mlp q1(qspec, init);
    Mlp q2(qspec, init);
    policy_ = Mlp(std::move(policy));
    policy_adam_ = Adam(policy_.parameter_count(), hyper.actor_adam());
    q1_ = NetPair(std::move(q1), hyper.critic_adam());
    q2_ = NetPair(std::move(q2), hyper.critic_adam());
  }

  const AgentHyper& hyper() const { return hyper_; }
  Mlp& policy() { return policy_; }
  NetPair& q1() { return q1_; }
  NetPair& q2() { return q2_; }
  ReplayBuffer<RealVector>& buffer() { return buffer_; }
  double temperature() const { return std::exp(log_xi_); }
  double log_temperature() const { return log_xi_; }
  void set_log_temperature(double v) { log_xi_ = v; }
  double target_entropy() const { return target_entropy_; }

  /// Squashed sample when exploring, tanh(mean) otherwise.
  RealVector act(const RealVector& s, bool explore) {
    const RealMatrix out = policy_.predict(s);
    if (!explore) return out.topRows(static_cast<Eigen::Index>(action_dim_)).array().tanh().matrix();
    return sample_from(out, noise_rng_).action.col(0);
  }

  void observe(Experience<RealVector> e) {
    buffer_.push(std::move(e));
    train_step();
  }

  std::optional<double> train_step() {
    auto items = buffer_.sample(hyper_.batch, replay_rng_);
    if (!items) return std::nullopt;
    const ContinuousBatch b = stack_batch(*items);
    const auto losses = critic_update(b);
    const PolicyStats ps = policy_update(b);
    temperature_update(ps.mean_log_prob);
    q1_.soft_update(hyper_.tau_critic);
    q2_.soft_update(hyper_.tau_critic);
    return 0.5 * (losses.first + losses.second);
  }

  void end_episode() {}

  /// Reparameterized squashed-Gaussian draw from a raw policy output.
  PolicySample sample_from(const RealMatrix& out, SeededRng& rng) const {
    const Eigen::Index da = static_cast<Eigen::Index>(action_dim_);
    PolicySample p;
    p.mean = out.topRows(da);
    p.log_std = out.bottomRows(da).cwiseMax(hyper_.log_std_min).cwiseMin(hyper_.log_std_max);
    p.eps.resize(da, out.cols());
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      for (Eigen::Index i = 0; i < da; ++i) p.eps(i, j) = rng.normal();
    p.pre = p.mean + (p.log_std.array().exp() * p.eps.array()).matrix();
    p.action = p.pre.array().tanh().matrix();
    p.log_prob.resize(out.cols());
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      double lp = 0.0;
      for (Eigen::Index i = 0; i < da; ++i)
        lp += squashed_log_prob_pre(p.pre(i, j), p.mean(i, j), p.log_std(i, j));
      p.log_prob[j] = lp;
    }
    return p;
  }

  /// z = r + gamma (min_i Q'_i(s', a') - xi log pi(a'|s')), a' ~ pi(.|s').
  RealVector sac_target(const ContinuousBatch& b) { return sac_target(b, noise_rng_); }

  RealVector sac_target(const ContinuousBatch& b, SeededRng& rng) const {
    const PolicySample next = sample_from(policy_.predict(b.s_next), rng);
    const RealMatrix t1 = q1_.target.predict(b.s_next, &next.action);
    const RealMatrix t2 = q2_.target.predict(b.s_next, &next.action);
    const RealVector soft =
        t1.row(0).cwiseMin(t2.row(0)).transpose() - temperature() * next.log_prob;
    return b.r + hyper_.gamma * b.not_done.cwiseProduct(soft);
  }

  std::pair<double, double> critic_update(const ContinuousBatch& b) {
    return fit_critics(b, sac_target(b));
  }

  /// One Adam step per critic on mean (z - Q_i(s, a))^2, z held fixed.
  std::pair<double, double> fit_critics(const ContinuousBatch& b, const RealVector& z) {
    return {fit_critic(q1_, b, z), fit_critic(q2_, b, z)};
  }

  /// One step on mean(xi log pi(a|s) - min_j Q_j(s, a)), a reparameterized.
  PolicyStats policy_update(const ContinuousBatch& b) { return policy_update(b.s, noise_rng_); }

  PolicyStats policy_update(const RealMatrix& s, SeededRng& rng) {
    const PolicyStats stats = policy_loss_gradient(s, rng);
    policy_adam_.step(policy_.params(), policy_.grads());
    policy_.zero_grad();
    return stats;
  }

  /// Accumulates the policy-loss gradient into the policy's gradient buffer
  /// without stepping; the critics' buffers are left clean.
  PolicyStats policy_loss_gradient(const RealMatrix& s, SeededRng& rng) {
    const Eigen::Index da = static_cast<Eigen::Index>(action_dim_);
    const Eigen::Index L = s.cols();
    const RealMatrix out = policy_.forward(s);
    const PolicySample p = sample_from(out, rng);

    const RealMatrix v1 = q1_.train.forward(s, &p.action);
    const RealMatrix v2 = q2_.train.forward(s, &p.action);
    RealMatrix d1 = RealMatrix::Zero(1, L), d2 = RealMatrix::Zero(1, L);
    double loss = 0.0;
    const double xi = temperature();
    for (Eigen::Index j = 0; j < L; ++j) {
      const bool first = v1(0, j) <= v2(0, j);
      (first ? d1 : d2)(0, j) = 1.0;
      loss += xi * p.log_prob[j] - std::min(v1(0, j), v2(0, j));
    }
    const RealMatrix dq_da = q1_.train.backward(d1).side + q2_.train.backward(d2).side;
    q1_.train.zero_grad();
    q2_.train.zero_grad();

    const RealMatrix sd = p.log_std.array().exp().matrix();
    RealMatrix d_out(2 * da, L);
    const double inv_l = 1.0 / static_cast<double>(L);
    for (Eigen::Index j = 0; j < L; ++j) {
      for (Eigen::Index i = 0; i < da; ++i) {
        const double a = p.action(i, j);
        const double du = 2.0 * xi * a - dq_da(i, j) * (1.0 - a * a);  // d loss / d u
        const double raw = out(da + i, j);
        const bool clamped = raw < hyper_.log_std_min || raw > hyper_.log_std_max;
        d_out(i, j) = inv_l * du;
        d_out(da + i, j) = clamped ? 0.0 : inv_l * (-xi + du * sd(i, j) * p.eps(i, j));
      }
    }
    policy_.backward(d_out);
    return {loss * inv_l, p.log_prob.mean()};
  }

  /// Gradient step on J(log xi) = -xi (mean log pi + target entropy).
  double temperature_update(double mean_log_prob) {
    RealVector param(1), grad(1);
    param[0] = log_xi_;
    grad[0] = -temperature() * (mean_log_prob + target_entropy_);
    xi_adam_.step(param, grad);
    log_xi_ = param[0];
    return temperature();
  }

  double temperature_update(const ContinuousBatch& b) {
    const PolicySample p = sample_from(policy_.predict(b.s), noise_rng_);
    return temperature_update(p.log_prob.mean());
  }

  void save(const std::string& prefix) const {
    save_checkpoint(policy_, prefix + "_policy.bin");
    save_checkpoint(q1_.train, prefix + "_q1.bin");
    save_checkpoint(q2_.train, prefix + "_q2.bin");
  }

  void load(const std::string& prefix) {
    load_checkpoint(policy_, prefix + "_policy.bin");
    load_checkpoint(q1_.train, prefix + "_q1.bin");
    load_checkpoint(q2_.train, prefix + "_q2.bin");
    q1_.hard_sync();
    q2_.hard_sync();
  }

 private:
  double fit_critic(NetPair& q, const ContinuousBatch& b, const RealVector& z) {
    const RealMatrix& v = q.train.forward(b.s, &b.a);
    const RealVector diff = v.row(0).transpose() - z;
    const double L = static_cast<double>(b.size());
    q.train.backward((2.0 / L) * diff.transpose());
    q.apply_gradients();
    return diff.squaredNorm() / L;
  }

  AgentHyper hyper_;
  std::size_t action_dim_;
  Mlp policy_;
  Adam policy_adam_;
  NetPair q1_;
  NetPair q2_;
  ReplayBuffer<RealVector> buffer_;
  SeededRng replay_rng_;
  SeededRng noise_rng_;
  double log_xi_;
  double target_entropy_;
  Adam xi_adam_;
};

}  // namespace bibc
