#pragma once

// Episodic decision environment. One episode holds one channel realization
// for T steps; each step maps a raw action in [-1, 1]^(2M+K) to a transmit
// beam and reflection coefficients, closes the loop with MMSE combiners,
// scores the result, and assembles the next observation.

#include <cmath>
#include <optional>
#include <vector>

#include "bibc/errors.hpp"
#include "bibc/link.hpp"
#include "bibc/numerics.hpp"
#include "bibc/scenario.hpp"

namespace bibc {

/// Raw action [Re w | Im w | alpha], each component in [-1, 1].
struct ActionVector {
  RealVector raw;
};

struct StateVector {
  RealVector features;
};

struct RewardTerms {
  double reward = 0.0;
  double sum_rate = 0.0;
  double omega_pow = 0.0;
  double omega_eh = 0.0;
};

struct StepDiagnostics {
  double sum_rate = 0.0;
  double omega_pow = 0.0;
  double omega_eh = 0.0;
  double transmit_power = 0.0;
  std::vector<double> sinr;
  std::vector<double> incident_power;
  std::vector<double> harvest_power;  // (1 - alpha_k) p_k^in
};

struct StepOutcome {
  StateVector next_state;
  double reward = 0.0;
  StepDiagnostics diagnostics;
  bool episode_done = false;
};

/// Relative slack on the transmit budget so that a beam built to sit exactly
/// on ||w||^2 = P_s is not penalized for round-off.
inline constexpr double kPowerSlack = 1e-12;

/// r = R_sum - Omega_pow - Omega_eh, with Omega_eh the per-tag EH shortfall
/// max(P_th - (1 - alpha_k) p_k^in, 0) normalized by P_th.
inline RewardTerms reward(const BeamState& beams, const ChannelRealization& ch,
                          const SystemConfig& cfg, double p_th) {
  RewardTerms t;
  t.sum_rate = sum_rate(ch, beams, cfg);
  t.omega_pow = beams.w.squaredNorm() <= cfg.ps_watts * (1.0 + kPowerSlack) ? 0.0 : 1.0;
  for (std::size_t k = 0; k < ch.K(); ++k) {
    const double harvest = (1.0 - beams.alpha[k]) * incident_power(ch.g_f[k], beams.w);
    t.omega_eh += std::max(p_th - harvest, 0.0) / p_th;
  }
  t.reward = t.sum_rate - t.omega_pow - t.omega_eh;
  return t;
}

inline RewardTerms reward(const BeamState& beams, const ChannelRealization& ch,
                          const SystemConfig& cfg) {
  return reward(beams, ch, cfg, eh_threshold(cfg));
}

struct EnvOptions {
  std::size_t steps = 10;        // T
  double alpha_margin = 1e-3;    // alpha mapped into [margin, 1 - margin]
  double w_bound_scale = 1.0;    // multiplies the per-component beam bound
};

/// Powers enter the state in dBm / 30, floored at -120 dBm.
inline double power_feature(double watts) {
  return watts_to_dbm(std::max(watts, 1e-15)) / 30.0;
}

/// Observation layout, tags ascending, matrices flattened row-major:
/// [a | r | P_t | P_in(K) | Re F0 | Re F_k | Re g_f,k | Re g_b,k | Im (same blocks)].
/// Channel blocks are divided by the square root of their link's large-scale gain.
inline StateVector assemble_state(const SystemConfig& cfg, const ChannelRealization& ch,
                                  const RealVector& action, double last_reward,
                                  double transmit_power, const std::vector<double>& p_in) {
  StateVector s{RealVector(static_cast<Eigen::Index>(cfg.state_dim()))};
  Eigen::Index pos = 0;
  auto put = [&](double v) { s.features[pos++] = v; };
  for (Eigen::Index i = 0; i < action.size(); ++i) put(action[i]);
  put(last_reward);
  put(power_feature(transmit_power));
  for (double p : p_in) put(power_feature(p));

  const double n_direct = 1.0 / std::sqrt(ch.gains.direct);
  for (int part = 0; part < 2; ++part) {
    auto take = [&](Complex c) { put(part == 0 ? c.real() : c.imag()); };
    for (Eigen::Index r = 0; r < ch.F0.rows(); ++r)
      for (Eigen::Index c = 0; c < ch.F0.cols(); ++c) take(ch.F0(r, c) * n_direct);
    for (std::size_t k = 0; k < ch.K(); ++k) {
      const double n = 1.0 / std::sqrt(ch.gains.forward[k] * ch.gains.backward[k]);
      for (Eigen::Index r = 0; r < ch.F[k].rows(); ++r)
        for (Eigen::Index c = 0; c < ch.F[k].cols(); ++c) take(ch.F[k](r, c) * n);
    }
    for (std::size_t k = 0; k < ch.K(); ++k) {
      const double n = 1.0 / std::sqrt(ch.gains.forward[k]);
      for (Eigen::Index i = 0; i < ch.g_f[k].size(); ++i) take(ch.g_f[k][i] * n);
    }
    for (std::size_t k = 0; k < ch.K(); ++k) {
      const double n = 1.0 / std::sqrt(ch.gains.backward[k]);
      for (Eigen::Index i = 0; i < ch.g_b[k].size(); ++i) take(ch.g_b[k][i] * n);
    }
  }
  if (pos != s.features.size()) throw StateError("assemble_state: layout size mismatch");
  return s;
}

class Environment {
 public:
  Environment(SystemConfig cfg, std::uint64_t seed, EnvOptions opts = {})
      : cfg_(std::move(cfg)), seed_(seed), opts_(opts) {
    cfg_.validate();
    if (opts_.steps < 1) throw ParameterError("Environment: steps must be >= 1");
    topology_ = make_topology(cfg_, seed_);
    p_th_ = eh_threshold(cfg_);
  }

  const SystemConfig& config() const { return cfg_; }
  const Topology& topology() const { return topology_; }
  const EnvOptions& options() const { return opts_; }
  std::size_t state_dim() const { return cfg_.state_dim(); }
  std::size_t action_dim() const { return cfg_.action_dim(); }
  std::size_t steps_per_episode() const { return opts_.steps; }
  std::size_t step_index() const { return t_; }
  double threshold() const { return p_th_; }

  /// Largest magnitude of each real/imaginary beam component. The box of
  /// half-width sqrt(P_s / 2M) is inscribed in the ball ||w||^2 <= P_s.
  double beam_bound() const {
    return opts_.w_bound_scale * std::sqrt(cfg_.ps_watts / (2.0 * static_cast<double>(cfg_.M)));
  }

  const ChannelRealization& channels() const {
    if (!channels_) throw StateError("Environment: reset() has not been called");
    return *channels_;
  }

  /// Draws the episode's channels and returns the initial observation built
  /// from the uniform beam at half power with every alpha_k = 0.5.
  StateVector reset(std::uint64_t episode) {
    channels_ = episode_channels(cfg_, topology_, seed_, episode);
    t_ = 0;
    const double amp = std::sqrt(cfg_.ps_watts / 2.0 / static_cast<double>(cfg_.M));
    const CxVector w = CxVector::Constant(static_cast<Eigen::Index>(cfg_.M), Complex(amp, 0.0));
    const std::vector<double> alpha(cfg_.K, 0.5);
    std::vector<double> p_in;
    for (const auto& g : channels_->g_f) p_in.push_back(incident_power(g, w));
    state_ = assemble_state(cfg_, *channels_, encode(w, alpha).raw, 0.0, w.squaredNorm(), p_in);
    return *state_;
  }

  const StateVector& state() const {
    if (!state_) throw StateError("Environment: reset() has not been called");
    return *state_;
  }

  /// Raw action -> (w, alpha) by per-component affine maps, then MMSE u_k.
  BeamState apply_action(const ActionVector& a) const {
    if (static_cast<std::size_t>(a.raw.size()) != action_dim())
      throw ActionError("apply_action: action length must be 2M + K");
    if (!a.raw.allFinite()) throw ActionError("apply_action: non-finite action component");
    const Eigen::Index m = static_cast<Eigen::Index>(cfg_.M);
    const RealVector x = a.raw.cwiseMax(-1.0).cwiseMin(1.0);
    const double bound = beam_bound();
    CxVector w(m);
    for (Eigen::Index i = 0; i < m; ++i) w[i] = Complex(bound * x[i], bound * x[m + i]);
    std::vector<double> alpha(cfg_.K);
    const double lo = opts_.alpha_margin;
    for (std::size_t k = 0; k < cfg_.K; ++k)
      alpha[k] = lo + 0.5 * (x[2 * m + static_cast<Eigen::Index>(k)] + 1.0) * (1.0 - 2.0 * lo);
    return beams_for(std::move(w), std::move(alpha));
  }

  BeamState beams_for(CxVector w, std::vector<double> alpha) const {
    BeamState b;
    b.u = mmse_combiners(channels(), w, alpha, cfg_);
    b.w = std::move(w);
    b.alpha = std::move(alpha);
    return b;
  }

  /// Inverse of the action map; used to embed discrete choices in the state.
  ActionVector encode(const CxVector& w, const std::vector<double>& alpha) const {
    const Eigen::Index m = static_cast<Eigen::Index>(cfg_.M);
    ActionVector a{RealVector(static_cast<Eigen::Index>(action_dim()))};
    const double bound = beam_bound();
    for (Eigen::Index i = 0; i < m; ++i) {
      a.raw[i] = w[i].real() / bound;
      a.raw[m + i] = w[i].imag() / bound;
    }
    const double lo = opts_.alpha_margin;
    for (std::size_t k = 0; k < cfg_.K; ++k)
      a.raw[2 * m + static_cast<Eigen::Index>(k)] = 2.0 * (alpha[k] - lo) / (1.0 - 2.0 * lo) - 1.0;
    return a;
  }

  StepOutcome step(const ActionVector& a) {
    require_active();
    const BeamState beams = apply_action(a);
    const RealVector embedded = a.raw.cwiseMax(-1.0).cwiseMin(1.0);
    return finish_step(beams, embedded);
  }

  /// Step with an explicit (w, alpha), as chosen by the discrete agents.
  StepOutcome step_beams(const CxVector& w, const std::vector<double>& alpha) {
    require_active();
    if (static_cast<std::size_t>(w.size()) != cfg_.M || alpha.size() != cfg_.K)
      throw ActionError("step_beams: beam or alpha has the wrong length");
    std::vector<double> clamped(alpha);
    for (double& x : clamped) x = std::clamp(x, opts_.alpha_margin, 1.0 - opts_.alpha_margin);
    const BeamState beams = beams_for(w, clamped);
    return finish_step(beams, encode(w, clamped).raw);
  }

 private:
  void require_active() const {
    if (!channels_) throw StateError("Environment: reset() has not been called");
    if (t_ >= opts_.steps) throw StateError("Environment: episode finished, call reset()");
  }

  StepOutcome finish_step(const BeamState& beams, const RealVector& embedded) {
    const ChannelRealization& ch = *channels_;
    const RewardTerms r = reward(beams, ch, cfg_, p_th_);
    StepOutcome out;
    out.reward = r.reward;
    auto& d = out.diagnostics;
    d.sum_rate = r.sum_rate;
    d.omega_pow = r.omega_pow;
    d.omega_eh = r.omega_eh;
    d.transmit_power = beams.w.squaredNorm();
    d.sinr = all_sinr(ch, beams, cfg_);
    for (std::size_t k = 0; k < ch.K(); ++k) {
      d.incident_power.push_back(incident_power(ch.g_f[k], beams.w));
      d.harvest_power.push_back((1.0 - beams.alpha[k]) * d.incident_power.back());
    }
    out.next_state =
        assemble_state(cfg_, ch, embedded, r.reward, d.transmit_power, d.incident_power);
    state_ = out.next_state;
    ++t_;
    out.episode_done = t_ >= opts_.steps;
    return out;
  }

  SystemConfig cfg_;
  std::uint64_t seed_;
  EnvOptions opts_;
  Topology topology_;
  double p_th_ = 0.0;
  std::optional<ChannelRealization> channels_;
  std::optional<StateVector> state_;
  std::size_t t_ = 0;
};

}  // namespace bibc
