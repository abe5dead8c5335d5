#pragma once

// Value-based learners over a discretized joint action: a beamsteering
// codeword, a transmit power level, and one reflection level per tag.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "bibc/agents/hyper.hpp"
#include "bibc/agents/replay.hpp"
#include "bibc/neural.hpp"

namespace bibc {

/// Half-wavelength ULA steering vectors, w_l[m] = exp(j pi m c_l) / sqrt(M)
/// with c_l = -1 + 2l / L_CE. The grid covers [-1, 1) so that the two
/// endpoints, which give the same codeword, are not both included.
inline std::vector<CxVector> build_codebook(std::size_t m, std::size_t l_ce) {
  if (m == 0 || l_ce == 0) throw ParameterError("build_codebook: M and L_CE must be >= 1");
  std::vector<CxVector> book;
  const double amp = 1.0 / std::sqrt(static_cast<double>(m));
  for (std::size_t l = 0; l < l_ce; ++l) {
    const double c = -1.0 + 2.0 * static_cast<double>(l) / static_cast<double>(l_ce);
    CxVector w(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i)
      w[static_cast<Eigen::Index>(i)] = std::polar(amp, std::numbers::pi * static_cast<double>(i) * c);
    book.push_back(std::move(w));
  }
  return book;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n < 2) throw ParameterError("linspace: need at least two points");
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

struct DiscreteChoice {
  std::size_t codeword = 0;
  std::size_t power = 0;
  std::vector<std::size_t> alpha;
};

/// Joint index = ((codeword * L_P + power) * L_EH + alpha_1) * L_EH + ... ,
/// last tag varying fastest.
class DiscreteActionTable {
 public:
  DiscreteActionTable() = default;
  DiscreteActionTable(std::vector<CxVector> codebook, std::vector<double> powers,
                      std::vector<double> alphas, std::size_t tags)
      : codebook_(std::move(codebook)), powers_(std::move(powers)), alphas_(std::move(alphas)),
        tags_(tags) {
    if (codebook_.empty() || powers_.empty() || alphas_.empty() || tags_ == 0)
      throw ParameterError("DiscreteActionTable: empty grid");
    size_ = codebook_.size() * powers_.size();
    for (std::size_t k = 0; k < tags_; ++k) size_ *= alphas_.size();
  }

  std::size_t size() const { return size_; }
  std::size_t tags() const { return tags_; }
  const std::vector<CxVector>& codebook() const { return codebook_; }
  const std::vector<double>& powers() const { return powers_; }
  const std::vector<double>& alphas() const { return alphas_; }

  DiscreteChoice split(std::size_t index) const {
    if (index >= size_) throw ActionError("DiscreteActionTable: index out of range");
    DiscreteChoice c;
    c.alpha.assign(tags_, 0);
    for (std::size_t k = tags_; k-- > 0;) {
      c.alpha[k] = index % alphas_.size();
      index /= alphas_.size();
    }
    c.power = index % powers_.size();
    c.codeword = index / powers_.size();
    return c;
  }

  std::size_t join(const DiscreteChoice& c) const {
    if (c.codeword >= codebook_.size() || c.power >= powers_.size() || c.alpha.size() != tags_)
      throw ActionError("DiscreteActionTable: choice out of range");
    std::size_t index = c.codeword * powers_.size() + c.power;
    for (std::size_t a : c.alpha) {
      if (a >= alphas_.size()) throw ActionError("DiscreteActionTable: alpha level out of range");
      index = index * alphas_.size() + a;
    }
    return index;
  }

  /// w = sqrt(P) w_l and the per-tag reflection levels.
  std::pair<CxVector, std::vector<double>> decode(std::size_t index) const {
    const DiscreteChoice c = split(index);
    std::vector<double> alpha;
    for (std::size_t a : c.alpha) alpha.push_back(alphas_[a]);
    return {std::sqrt(powers_[c.power]) * codebook_[c.codeword], std::move(alpha)};
  }

 private:
  std::vector<CxVector> codebook_;
  std::vector<double> powers_;
  std::vector<double> alphas_;
  std::size_t tags_ = 0;
  std::size_t size_ = 0;
};

/// Powers on [f P_max, P_max] in L_P steps; reflection levels on
/// [1/(L_EH-1), 1 - 1/(L_EH-1)] in L_EH steps.
inline DiscreteActionTable discretize(std::size_t m, std::size_t k, double p_max,
                                      const AgentHyper& h) {
  if (h.power_levels < 2 || h.eh_levels < 2)
    throw ParameterError("discretize: L_P and L_EH must be >= 2");
  if (!(h.power_min_fraction > 0.0 && h.power_min_fraction <= 1.0))
    throw ParameterError("discretize: power_min_fraction must lie in (0, 1]");
  const double edge = 1.0 / static_cast<double>(h.eh_levels - 1);
  return DiscreteActionTable(build_codebook(m, h.codebook_size),
                             linspace(h.power_min_fraction * p_max, p_max, h.power_levels),
                             linspace(edge, 1.0 - edge, h.eh_levels), k);
}

enum class DqnVariant { dqn, ddqn, duel };

inline const char* variant_name(DqnVariant v) {
  switch (v) {
    case DqnVariant::ddqn: return "ddqn";
    case DqnVariant::duel: return "dueldqn";
    case DqnVariant::dqn: break;
  }
  return "dqn";
}

/// Q = V + A - mean(A) from a dueling head laid out as [V; A].
inline RealMatrix dueling_combine(const RealMatrix& head) {
  const Eigen::Index n = head.rows() - 1;
  RealMatrix q = head.bottomRows(n);
  const RealVector shift = head.row(0).transpose() - q.colwise().mean().transpose();
  q.rowwise() += shift.transpose();
  return q;
}

/// Backprop of dueling_combine: dV = sum dQ, dA_j = dQ_j - mean dQ.
inline RealMatrix dueling_backward(const RealMatrix& dq) {
  RealMatrix d(dq.rows() + 1, dq.cols());
  d.row(0) = dq.colwise().sum();
  d.bottomRows(dq.rows()) = dq.rowwise() - dq.colwise().mean();
  return d;
}

class DqnAgent {
 public:
  DqnAgent(std::size_t state_dim, DiscreteActionTable table, DqnVariant variant, AgentHyper hyper,
           std::uint64_t seed)
      : hyper_(hyper),
        variant_(variant),
        table_(std::move(table)),
        buffer_(hyper.replay_capacity),
        replay_rng_(seed, stream_id(Purpose::replay)),
        explore_rng_(seed, stream_id(Purpose::exploration)),
        eps_(hyper.eps_start) {
    if (state_dim == 0) throw ParameterError("DqnAgent: empty state");
    if (hyper.target_sync == 0) throw ParameterError("DqnAgent: target_sync must be >= 1");
    SeededRng init(seed, stream_id(Purpose::network_init));
    const std::size_t h = hidden_width(state_dim);
    const std::size_t out = table_.size() + (variant == DqnVariant::duel ? 1 : 0);
    q_ = NetPair(Mlp({{state_dim, h, h, out}, Activation::relu, Activation::identity}, init),
                 hyper.critic_adam());
  }

  const AgentHyper& hyper() const { return hyper_; }
  DqnVariant variant() const { return variant_; }
  const DiscreteActionTable& table() const { return table_; }
  NetPair& q() { return q_; }
  ReplayBuffer<std::size_t>& buffer() { return buffer_; }
  double epsilon() const { return eps_; }
  void set_epsilon(double e) {
    if (!(e >= 0.0 && e <= 1.0)) throw ParameterError("DqnAgent: epsilon must lie in [0, 1]");
    eps_ = e;
  }
  std::size_t env_steps() const { return steps_; }

  /// Action values for a batch of states (actions x batch).
  RealMatrix q_values(const Mlp& net, const RealMatrix& s) const {
    RealMatrix out = net.predict(s);
    return variant_ == DqnVariant::duel ? dueling_combine(out) : out;
  }

  std::size_t greedy(const RealVector& s) const {
    Eigen::Index best = 0;
    q_values(q_.train, s).col(0).maxCoeff(&best);
    return static_cast<std::size_t>(best);
  }

  std::size_t act(const RealVector& s, bool explore) {
    if (explore && explore_rng_.uniform() < eps_) return explore_rng_.index(table_.size());
    return greedy(s);
  }

  void observe(Experience<std::size_t> e) {
    buffer_.push(std::move(e));
    train_step();
    if (++steps_ % hyper_.target_sync == 0) q_.hard_sync();
  }

  std::optional<double> train_step() {
    auto items = buffer_.sample(hyper_.batch, replay_rng_);
    if (!items) return std::nullopt;
    return update(*items);
  }

  void end_episode() { eps_ = std::max(hyper_.eps_min, eps_ * hyper_.eps_decay); }

  /// y = r + gamma * Q'(s', a*) with a* = argmax Q' (dqn, duel) or
  /// argmax Q_train (ddqn).
  RealVector targets(const std::vector<const Experience<std::size_t>*>& items) const {
    const Eigen::Index L = static_cast<Eigen::Index>(items.size());
    RealMatrix s_next(items.front()->s_next.size(), L);
    for (Eigen::Index j = 0; j < L; ++j) s_next.col(j) = items[static_cast<std::size_t>(j)]->s_next;
    const RealMatrix q_tgt = q_values(q_.target, s_next);
    RealMatrix q_sel;
    if (variant_ == DqnVariant::ddqn) q_sel = q_values(q_.train, s_next);
    RealVector y(L);
    for (Eigen::Index j = 0; j < L; ++j) {
      const auto& e = *items[static_cast<std::size_t>(j)];
      double next = 0.0;
      if (variant_ == DqnVariant::ddqn) {
        Eigen::Index a = 0;
        q_sel.col(j).maxCoeff(&a);
        next = q_tgt(a, j);
      } else {
        next = q_tgt.col(j).maxCoeff();
      }
      y[j] = e.r + (e.terminal ? 0.0 : hyper_.gamma * next);
    }
    return y;
  }

  /// One Adam step on mean (y - Q(s, a))^2. Returns the loss.
  double update(const std::vector<const Experience<std::size_t>*>& items) {
    const RealVector y = targets(items);
    const Eigen::Index L = static_cast<Eigen::Index>(items.size());
    RealMatrix s(items.front()->s.size(), L);
    for (Eigen::Index j = 0; j < L; ++j) s.col(j) = items[static_cast<std::size_t>(j)]->s;
    const RealMatrix& head = q_.train.forward(s);
    const RealMatrix q = variant_ == DqnVariant::duel ? dueling_combine(head) : head;
    RealMatrix dq = RealMatrix::Zero(q.rows(), L);
    double loss = 0.0;
    for (Eigen::Index j = 0; j < L; ++j) {
      const Eigen::Index a = static_cast<Eigen::Index>(items[static_cast<std::size_t>(j)]->a);
      const double diff = q(a, j) - y[j];
      loss += diff * diff;
      dq(a, j) = 2.0 * diff / static_cast<double>(L);
    }
    q_.train.backward(variant_ == DqnVariant::duel ? dueling_backward(dq) : dq);
    q_.apply_gradients();
    return loss / static_cast<double>(L);
  }

  void save(const std::string& prefix) const { save_checkpoint(q_.train, prefix + "_q.bin"); }
  void load(const std::string& prefix) {
    load_checkpoint(q_.train, prefix + "_q.bin");
    q_.hard_sync();
  }

 private:
  AgentHyper hyper_;
  DqnVariant variant_;
  DiscreteActionTable table_;
  NetPair q_;
  ReplayBuffer<std::size_t> buffer_;
  SeededRng replay_rng_;
  SeededRng explore_rng_;
  double eps_;
  std::size_t steps_ = 0;
};

}  // namespace bibc
